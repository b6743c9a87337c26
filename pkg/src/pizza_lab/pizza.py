"""Abstract pizzas: validation, reducibility, minimization, combinatorial
equivalence, zone and slice classification, and construction from totally
transverse profiles.

An abstract pizza is the combinatorial record of a non-negative Lipschitz
function on a Hoelder triangle: boundary orders q_0..q_p, slice exponents
beta_1..beta_p and width maps mu_1..mu_p (affine on a non-point order
interval, a single exponent on a point).  The depth exponents nu are always
recomputed, never stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .core import INF, AffineMap, Ext, ExtArithmeticError, RatLike, ext_max, ext_min


@dataclass(frozen=True)
class PointWidth:
    """Width datum of a point slice: the single exponent beta."""

    beta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "beta", Fraction(self.beta))


Width = Union[PointWidth, AffineMap]


class PizzaError(ValueError):
    pass


class AbstractPizza:
    """Immutable abstract pizza with p slices.

    q has length p+1, beta and mu have length p.  Slice l (1-based) spans
    the order interval with endpoints q[l-1], q[l] (either orientation).
    """

    __slots__ = ("q", "beta", "mu")

    def __init__(
        self,
        q: Sequence[RatLike],
        beta: Sequence[RatLike],
        mu: Sequence[Width],
    ):
        object.__setattr__(self, "q", tuple(Ext.of(x) for x in q))
        object.__setattr__(self, "beta", tuple(Fraction(b) for b in beta))
        object.__setattr__(self, "mu", tuple(mu))
        if len(self.q) != len(self.beta) + 1 or len(self.beta) != len(self.mu):
            raise PizzaError("inconsistent sequence lengths")
        if not self.beta:
            raise PizzaError("a pizza needs at least one slice")

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("AbstractPizza is immutable")

    @property
    def p(self) -> int:
        return len(self.beta)

    def is_point(self, l: int) -> bool:
        """Whether slice l has a point order interval."""
        return self.q[l - 1] == self.q[l]

    def mu_at(self, l: int, q: RatLike) -> Ext:
        m = self.mu[l - 1]
        if isinstance(m, PointWidth):
            return Ext(m.beta)
        return m(q)

    @property
    def nu(self) -> tuple[Ext, ...]:
        """Depth exponents: nu_0 = nu_p = inf, else max of the two adjacent
        widths evaluated at q_l."""
        return _nu_of(self)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AbstractPizza)
            and self.q == other.q
            and self.beta == other.beta
            and self.mu == other.mu
        )

    def __hash__(self):
        return hash((self.q, self.beta, self.mu))

    def __repr__(self) -> str:
        bits = []
        for l in range(1, self.p + 1):
            bits.append(f"[{self.q[l-1]},{self.q[l]}]:{self.mu[l-1]}")
        return "Pizza(" + " ".join(bits) + ")"


def _nu_of(P: AbstractPizza) -> tuple[Ext, ...]:
    out = [INF]
    for l in range(1, P.p):
        out.append(ext_max([P.mu_at(l, P.q[l]), P.mu_at(l + 1, P.q[l])]))
    out.append(INF)
    return tuple(out)


def validate(P: AbstractPizza) -> list[str]:
    """All violations of the abstract-pizza invariants; empty iff valid."""
    bad: list[str] = []
    one = Ext(1)
    for i, qv in enumerate(P.q):
        if qv < one:
            bad.append(f"q[{i}] = {qv} < 1")
    for l in range(1, P.p + 1):
        b = P.beta[l - 1]
        if b < 1:
            bad.append(f"beta[{l}] = {b} < 1")
        a, z = P.q[l - 1], P.q[l]
        m = P.mu[l - 1]
        if P.is_point(l):
            if not isinstance(m, PointWidth):
                bad.append(f"slice {l}: point interval needs a point width")
                continue
            if Ext(m.beta) != Ext(b):
                bad.append(f"slice {l}: point width {m.beta} != beta {b}")
            if Ext(b) > z:
                bad.append(f"width exceeds order at {l}")
        else:
            if not isinstance(m, AffineMap):
                bad.append(f"slice {l}: interval needs an affine width")
                continue
            if m.is_constant:
                bad.append(f"slice {l}: width map constant on a non-point interval")
                continue
            try:
                va, vz = m(a), m(z)
            except ExtArithmeticError:
                bad.append(f"slice {l}: width map undefined at an endpoint")
                continue
            # mu(q) <= q on the whole interval: affine difference attains its
            # max at an endpoint (or at the infinite end via the slope)
            for qq, vv in ((a, va), (z, vz)):
                if qq.is_inf:
                    if m.a > 1 or (m.a == 1 and m.b > 0):
                        bad.append(f"width exceeds order at {l}")
                elif vv.is_inf or vv.frac > qq.frac:
                    bad.append(f"width exceeds order at {l}")
            if ext_min([va, vz]) != Ext(b):
                bad.append(f"slice {l}: min width {ext_min([va, vz])} != beta {b}")
    return bad


def assert_valid(P: AbstractPizza) -> None:
    bad = validate(P)
    if bad:
        raise PizzaError("; ".join(bad))


def reducible_at(P: AbstractPizza, l: int) -> str | None:
    """First matching reduction clause among a-d at position l (between
    slices l and l+1), or None."""
    if not (1 <= l < P.p):
        raise IndexError(f"position {l} out of range 1..{P.p - 1}")
    left_pt, right_pt = P.is_point(l), P.is_point(l + 1)
    if left_pt and right_pt:
        return "a"
    if left_pt and not right_pt:
        if Ext(P.beta[l - 1]) >= P.mu_at(l + 1, P.q[l]):
            return "b"
        return None
    if not left_pt and right_pt:
        if Ext(P.beta[l]) >= P.mu_at(l, P.q[l]):
            return "c"
        return None
    # both non-point: intervals must meet only in q_l (monotone through)
    lo1, hi1 = sorted([P.q[l - 1], P.q[l]])
    lo2, hi2 = sorted([P.q[l], P.q[l + 1]])
    meets_in_point = (hi1 == P.q[l] == lo2) or (hi2 == P.q[l] == lo1)
    if not meets_in_point:
        return None
    m1, m2 = P.mu[l - 1], P.mu[l]
    assert isinstance(m1, AffineMap) and isinstance(m2, AffineMap)
    if m1.a == m2.a and m1.b == m2.b:
        return "d"
    return None


def merge_at(P: AbstractPizza, l: int, kind: str) -> AbstractPizza:
    """Merge slices l and l+1 according to the given clause."""
    b1, b2 = P.beta[l - 1], P.beta[l]
    if kind == "a":
        new_mu: Width = PointWidth(min(b1, b2))
        new_beta = min(b1, b2)
    elif kind == "b":
        new_mu = P.mu[l]
        new_beta = b2
    elif kind == "c":
        new_mu = P.mu[l - 1]
        new_beta = b1
    elif kind == "d":
        new_mu = P.mu[l - 1]
        new_beta = min(b1, b2)
    else:  # pragma: no cover
        raise ValueError(kind)
    q = P.q[:l] + P.q[l + 1 :]
    beta = P.beta[: l - 1] + (new_beta,) + P.beta[l + 1 :]
    mu = P.mu[: l - 1] + (new_mu,) + P.mu[l + 1 :]
    return AbstractPizza(q, beta, mu)


def minimize(P: AbstractPizza) -> tuple[AbstractPizza, tuple[tuple[int, str], ...]]:
    """Repeatedly merge at the leftmost reducible position until minimal.

    Returns the minimal pizza and the log of (position, clause) applications.
    """
    log: list[tuple[int, str]] = []
    cur = P
    while cur.p > 1:
        hit = None
        for l in range(1, cur.p):
            kind = reducible_at(cur, l)
            if kind is not None:
                hit = (l, kind)
                break
        if hit is None:
            break
        log.append(hit)
        cur = merge_at(cur, hit[0], hit[1])
    return cur, tuple(log)


def is_minimal(P: AbstractPizza) -> bool:
    return all(reducible_at(P, l) is None for l in range(1, P.p))


def equivalent(P1: AbstractPizza, P2: AbstractPizza) -> bool:
    """Combinatorial equivalence: all toppings coincide exactly."""
    return P1 == P2


@dataclass(frozen=True)
class ZoneClass:
    maximum: bool
    transverse: bool
    boundary: bool

    @property
    def minimum(self) -> bool:
        return not self.maximum


def zone_class(P: AbstractPizza, l: int) -> ZoneClass:
    """Classification of pizza zone l of a minimal pizza.

    Maximum iff the local-maximum inequalities hold at l; transversality is
    nu_l == q_l for interior zones and width-equals-order for boundary arcs.
    """
    if not (0 <= l <= P.p):
        raise IndexError(f"zone {l} out of range 0..{P.p}")
    q = P.q
    if l == 0:
        maximum = Ext(P.beta[0]) < q[0] and q[0] >= q[1]
        transverse = P.mu_at(1, q[0]) == q[0]
        return ZoneClass(maximum, transverse, True)
    if l == P.p:
        maximum = Ext(P.beta[-1]) < q[-1] and q[-1] >= q[-2]
        transverse = P.mu_at(P.p, q[-1]) == q[-1]
        return ZoneClass(maximum, transverse, True)
    maximum = ext_max([Ext(P.beta[l - 1]), Ext(P.beta[l])]) < q[l] and q[l] >= ext_max(
        [q[l - 1], q[l + 1]]
    )
    transverse = _nu_of(P)[l] == q[l]
    return ZoneClass(maximum, transverse, False)


def maximum_zone_indices(P: AbstractPizza) -> list[int]:
    return [l for l in range(P.p + 1) if zone_class(P, l).maximum]


def slice_class(P: AbstractPizza, l: int) -> str:
    """"transverse" or "coherent" for slice l (1-based)."""
    if not (1 <= l <= P.p):
        raise IndexError(f"slice {l} out of range 1..{P.p}")
    if P.p == 1 and P.is_point(1):
        if P.q[0] <= Ext(P.beta[0]):
            return "transverse"
        return "coherent"
    if P.is_point(l):
        return "coherent"
    m = P.mu[l - 1]
    return "transverse" if isinstance(m, AffineMap) and m.is_identity else "coherent"


def coherent_slice_indices(P: AbstractPizza) -> list[int]:
    return [l for l in range(1, P.p + 1) if slice_class(P, l) == "coherent"]


def zone_tord(P: AbstractPizza, i: int, j: int) -> Ext:
    """Pizza-internal tangency order of zones i and j: min of the slice
    exponents strictly between them; inf on the diagonal."""
    if i == j:
        return INF
    lo, hi = sorted((i, j))
    return ext_min([Ext(b) for b in P.beta[lo:hi]])


def supporting_end(P: AbstractPizza, l: int) -> int | None:
    """Zone index (l-1 or l) of the supporting arc of slice l: the end with
    the larger width; None for point slices."""
    if P.is_point(l):
        return None
    va = P.mu_at(l, P.q[l - 1])
    vz = P.mu_at(l, P.q[l])
    return l - 1 if va > vz else l


def subdivide(P: AbstractPizza, l: int, q_mid: RatLike | None = None) -> AbstractPizza:
    """Split slice l at an interior order value (or duplicate a point slice);
    the result reduces back to P.  Test helper for minimize round-trips."""
    if P.is_point(l):
        q = P.q[:l] + (P.q[l],) + P.q[l:]
        beta = P.beta[: l - 1] + (P.beta[l - 1], P.beta[l - 1]) + P.beta[l:]
        mu = P.mu[: l - 1] + (P.mu[l - 1], P.mu[l - 1]) + P.mu[l:]
        return AbstractPizza(q, beta, mu)
    qm = Ext.of(q_mid)
    lo, hi = sorted([P.q[l - 1], P.q[l]])
    if not (lo < qm < hi):
        raise PizzaError(f"{qm} not interior to slice {l}")
    m = P.mu[l - 1]
    assert isinstance(m, AffineMap)
    v_left = m(P.q[l - 1])
    v_mid = m(qm)
    v_right = m(P.q[l])
    beta_left = ext_min([v_left, v_mid]).frac
    beta_right = ext_min([v_mid, v_right]).frac
    q = P.q[:l] + (qm,) + P.q[l:]
    beta = P.beta[: l - 1] + (beta_left, beta_right) + P.beta[l:]
    mu = P.mu[: l - 1] + (m, m) + P.mu[l:]
    return AbstractPizza(q, beta, mu)


def from_transverse_profile(
    qbar: Sequence[RatLike], betabar: Sequence[RatLike]
) -> AbstractPizza:
    """The minimal totally transverse pizza determined by a supporting
    profile: orders qbar_0..qbar_n and exponents betabar_1..betabar_n.

    Requires qbar_j > max(betabar_j, betabar_j+1) at interior positions and
    qbar >= betabar at the two boundary positions (equality meaning the
    boundary arc is a minimum zone).
    """
    qb = [Ext.of(x) for x in qbar]
    bb = [Fraction(x) for x in betabar]
    n = len(bb)
    if len(qb) != n + 1 or n < 1:
        raise PizzaError("profile needs n+1 orders and n exponents")
    for j in range(1, n):
        if not (qb[j] > ext_max([Ext(bb[j - 1]), Ext(bb[j])])):
            raise PizzaError(
                f"interior order qbar[{j}] = {qb[j]} must exceed adjacent exponents"
            )
    for j, b in ((0, bb[0]), (n, bb[-1])):
        if qb[j] < Ext(b):
            raise PizzaError(f"boundary order qbar[{j}] = {qb[j]} below exponent {b}")
    q: list[Ext] = [qb[0]]
    beta: list[Fraction] = []
    mu: list[Width] = []
    ident = AffineMap(Fraction(1), Fraction(0))
    for j in range(1, n + 1):
        lo, hi = qb[j - 1], qb[j]
        b = bb[j - 1]
        if lo == hi == Ext(b):
            # flat piece: a single point slice (only legal alone)
            q.append(hi)
            beta.append(b)
            mu.append(PointWidth(b))
            continue
        if lo > Ext(b):
            q.append(Ext(b))
            beta.append(b)
            mu.append(ident)
        if hi > Ext(b):
            q.append(hi)
            beta.append(b)
            mu.append(ident)
    P = AbstractPizza(q, beta, mu)
    P, _ = minimize(P)
    assert_valid(P)
    for l in range(1, P.p + 1):
        if slice_class(P, l) != "transverse":
            raise PizzaError("profile did not yield a totally transverse pizza")
    return P
