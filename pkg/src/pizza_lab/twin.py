"""Essential arcs, twin pre-pizzas and their tangency tables.

The twin pre-pizza of a minimal pizza drops non-essential arcs (interior
transverse minimum zones between two transverse slices, merged into gap
pairs) and duplicates the arcs of split zones (transverse non-maximum zones
shared by two coherent slices, and transverse minimum boundary arcs next to
a coherent slice) into twin pairs, so that the slice correspondence of a
normal pair becomes a bijection on arcs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import INF, Ext, ext_min
from .pizza import (
    AbstractPizza,
    PizzaError,
    Width,
    coherent_slice_indices,
    is_minimal,
    maximum_zone_indices,
    slice_class,
    zone_class,
)

PAIR_PRIMARY = "primary"
PAIR_TWIN = "twin"
PAIR_TRANSVERSE = "transverse"
PAIR_GAP = "gap"


@dataclass(frozen=True)
class TwinArc:
    """One arc of a twin pre-pizza.

    zone is the index of the pizza zone the arc lives in; twin_side is
    "-"/"+" for members of a twin pair, None otherwise; max_index is the
    1-based maximum-zone number for arcs in maximum zones.
    """

    q: Ext
    nu: Ext
    zone: int
    is_boundary: bool
    twin_side: Optional[str]
    max_index: Optional[int]


@dataclass(frozen=True)
class TwinPrePizza:
    pizza: AbstractPizza
    arcs: tuple[TwinArc, ...]
    pair_class: tuple[str, ...]  # length n_arcs - 1, pair (k-1, k) at index k-1
    betahat: tuple[Fraction, ...]  # same indexing
    primary_slice: tuple[Optional[int], ...]  # pizza slice index per primary pair
    coherent_number: tuple[Optional[int], ...]  # 1-based coherent order per primary pair

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def tord(self, i: int, j: int) -> Ext:
        if i == j:
            return INF
        lo, hi = sorted((i, j))
        return ext_min([Ext(b) for b in self.betahat[lo:hi]])

    def is_twin_pair(self, k: int) -> bool:
        """Whether the pair (k-1, k) is a twin pair (k is 1-based pair index)."""
        return self.pair_class[k - 1] == PAIR_TWIN

    def twin_pairs(self) -> list[int]:
        return [k for k in range(1, self.n_arcs) if self.is_twin_pair(k)]

    def maximum_arcs(self) -> list[int]:
        return [i for i, a in enumerate(self.arcs) if a.max_index is not None]

    def primary_pairs(self) -> list[int]:
        return [
            k for k in range(1, self.n_arcs) if self.pair_class[k - 1] == PAIR_PRIMARY
        ]

    def width_of_primary(self, k: int) -> Width:
        l = self.primary_slice[k - 1]
        assert l is not None
        return self.pizza.mu[l - 1]


def build_twin_pre_pizza(P: AbstractPizza) -> TwinPrePizza:
    """Construct the twin pre-pizza of a minimal pizza."""
    if not is_minimal(P):
        raise PizzaError("twin pre-pizza requires a minimal pizza")
    p = P.p
    zc = [zone_class(P, l) for l in range(p + 1)]
    sc = [None] + [slice_class(P, l) for l in range(1, p + 1)]
    max_zones = maximum_zone_indices(P)
    max_number = {z: i + 1 for i, z in enumerate(max_zones)}
    coherent = set(coherent_slice_indices(P))

    essential = []
    for l in range(p + 1):
        is_primary = (l >= 1 and l in coherent) or (l + 1 <= p and (l + 1) in coherent)
        if l in (0, p) or zc[l].maximum or is_primary:
            essential.append(l)

    # Sanity of the drop rule: a non-essential zone is a transverse minimum
    # zone between two transverse slices, and its two slice exponents agree.
    for l in range(1, p):
        if l not in essential:
            if zc[l].maximum or not zc[l].transverse:
                raise PizzaError(f"zone {l} cannot be dropped")
            if P.beta[l - 1] != P.beta[l]:
                raise PizzaError(f"gap exponents differ at zone {l}")

    nu = P.nu
    arcs: list[TwinArc] = []
    pair_class: list[str] = []
    betahat: list[Fraction] = []
    primary_slice: list[Optional[int]] = []

    def add_pair(cls: str, bh: Fraction, slice_idx: Optional[int]) -> None:
        pair_class.append(cls)
        betahat.append(Fraction(bh))
        primary_slice.append(slice_idx)

    def arc_of_zone(l: int, side: Optional[str] = None) -> TwinArc:
        return TwinArc(
            q=P.q[l],
            nu=nu[l],
            zone=l,
            is_boundary=l in (0, p),
            twin_side=side,
            max_index=max_number.get(l),
        )

    for idx, l in enumerate(essential):
        if idx == 0:
            arcs.append(arc_of_zone(l))
            # left-boundary twin: transverse minimum boundary arc followed by
            # a coherent slice
            if (
                zc[0].transverse
                and not zc[0].maximum
                and 1 in coherent
            ):
                arcs.append(
                    TwinArc(P.q[0], P.q[0], 0, False, "+", None)
                )
                add_pair(PAIR_TWIN, P.q[0].frac, None)
            continue
        prev = essential[idx - 1]
        covered = list(range(prev + 1, l + 1))  # pizza slices between the zones
        if len(covered) == 1:
            s = covered[0]
            if s in coherent:
                add_pair(PAIR_PRIMARY, P.beta[s - 1], s)
            else:
                add_pair(PAIR_TRANSVERSE, P.beta[s - 1], None)
        else:
            assert len(covered) == 2, "gaps merge exactly two transverse slices"
            add_pair(PAIR_GAP, min(P.beta[covered[0] - 1], P.beta[covered[1] - 1]), None)
        # interior twin split: transverse non-maximum zone shared by two
        # coherent slices
        if (
            0 < l < p
            and l in coherent
            and (l + 1) in coherent
            and zc[l].transverse
            and not zc[l].maximum
        ):
            arcs.append(arc_of_zone(l, side="-"))
            arcs.append(arc_of_zone(l, side="+"))
            add_pair(PAIR_TWIN, P.q[l].frac, None)
        else:
            arcs.append(arc_of_zone(l))
        if l == p and (
            zc[p].transverse and not zc[p].maximum and p in coherent
        ):
            # right-boundary twin inserted before the boundary arc
            arcs.insert(
                len(arcs) - 1, TwinArc(P.q[p], P.q[p], p, False, "-", None)
            )
            add_pair(PAIR_TWIN, P.q[p].frac, None)

    # fix pair order for the right-boundary twin: the twin pair is the last
    # pair, between the inserted arc and the boundary arc
    if len(arcs) - 1 != len(pair_class):
        raise PizzaError("internal pairing error")

    coherent_order = {l: i + 1 for i, l in enumerate(sorted(coherent))}
    coherent_number = tuple(
        coherent_order[s] if s is not None else None for s in primary_slice
    )
    return TwinPrePizza(
        pizza=P,
        arcs=tuple(arcs),
        pair_class=tuple(pair_class),
        betahat=tuple(betahat),
        primary_slice=tuple(primary_slice),
        coherent_number=coherent_number,
    )


def twin_count_formula(P: AbstractPizza) -> int:
    """2L - n2 - m2 + m0 + delta computed directly from the pizza:
    L coherent slices, n2 coherent interior zones, m2 transverse maximum
    zones adjacent to two coherent slices, m0 transverse maximum zones
    adjacent to no coherent slice, delta transverse minimum boundary arcs.
    """
    if not is_minimal(P):
        raise PizzaError("count formula requires a minimal pizza")
    p = P.p
    coherent = set(coherent_slice_indices(P))
    L = len(coherent)
    zc = [zone_class(P, l) for l in range(p + 1)]
    n2 = sum(
        1 for l in range(1, p) if not zc[l].transverse
    )
    m2 = m0 = 0
    for l in range(p + 1):
        if not (zc[l].maximum and zc[l].transverse):
            continue
        adj = set()
        if l >= 1:
            adj.add(l)
        if l + 1 <= p:
            adj.add(l + 1)
        k = len(adj & coherent)
        if k == 2:
            m2 += 1
        elif k == 0:
            m0 += 1
    delta = sum(
        1 for l in (0, p) if zc[l].transverse and not zc[l].maximum
    )
    return 2 * L - n2 - m2 + m0 + delta


def tord_table(T: TwinPrePizza) -> tuple[tuple[Ext, ...], ...]:
    """Full symmetric tangency table of the twin pre-pizza arcs: min of the
    consecutive exponents between two arcs, inf on the diagonal."""
    n = T.n_arcs
    return tuple(
        tuple(T.tord(i, j) for j in range(n)) for i in range(n)
    )
