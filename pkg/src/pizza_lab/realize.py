"""Constructive side: realize an abstract pizza as an explicit piecewise
monomial function on the standard triangle, and realize a pizza together
with an admissible triple (sigma, upsilon, s) as an explicit pair of
monomial-arc families whose tangency structure carries the requested
invariant.

All arcs are exact monomial series; every construction ends with a
self-check of the produced tangency tables, so an inconsistency raises
instead of silently producing a wrong pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .blocks import Permutation, check_block_inequalities
from .core import (
    AffineMap,
    Ext,
    MonoArc,
    MonomialSeries,
    U_SERIES,
    arc_tord,
    dyadic,
    ext_max,
    ext_min,
)
from .invariant import (
    AllowabilityReport,
    DeterminationError,
    ImageStructure,
    build_image_structure,
    check_allowable,
    compute_omega,
    compute_varpi,
)
from .pizza import (
    AbstractPizza,
    PizzaError,
    PointWidth,
    assert_valid,
    coherent_slice_indices,
    is_minimal,
    maximum_zone_indices,
    slice_class,
    supporting_end,
)
from .twin import (
    PAIR_GAP,
    PAIR_PRIMARY,
    PAIR_TWIN,
    TwinPrePizza,
    build_twin_pre_pizza,
    tord_table,
)


class RealizationError(ValueError):
    pass


class AdmissibilityError(ValueError):
    def __init__(self, clause: str, detail: str):
        super().__init__(f"{clause}: {detail}")
        self.clause = clause
        self.detail = detail


# ---------------------------------------------------------------------------
# piecewise function realization


@dataclass(frozen=True)
class SlicePiece:
    """Closed form of the function on one slice: either the monomial u**q on
    a point slice, or the standard slice composed with the straightening of
    the band between the delimiting arcs."""

    kind: str  # "point" | "band"
    q_lo: Ext  # order at the thin (minimal width) end
    q_hi: Ext  # order at the supporting (maximal width) end
    beta: Fraction
    kappa: Ext  # maximal width
    a: Optional[Fraction]  # width slope
    alpha: Optional[Fraction]  # width root: mu(q) = a (q - alpha)
    support_left: bool  # supporting arc is the lower delimiter


@dataclass(frozen=True)
class FunctionRealization:
    pizza: AbstractPizza
    v: tuple[MonomialSeries, ...]  # delimiting arcs v_0..v_p
    pieces: tuple[SlicePiece, ...]

    def boundary_order(self, l: int) -> Ext:
        return self.order_along(self.v[l])

    def order_along(self, arc: MonomialSeries) -> Ext:
        """Exact order of the function along a monomial arc inside the
        triangle."""
        P = self.pizza
        for l, vl in enumerate(self.v):
            if arc == vl:
                return P.q[l]
        for l in range(1, P.p + 1):
            if self.v[l - 1].compare(arc) <= 0 and self.v[l].compare(arc) >= 0:
                return self._order_in_slice(l, arc)
        raise RealizationError("arc lies outside the triangle")

    def _order_in_slice(self, l: int, arc: MonomialSeries) -> Ext:
        P = self.pizza
        piece = self.pieces[l - 1]
        if piece.kind == "point":
            return P.q[l]
        support = self.v[l - 1] if piece.support_left else self.v[l]
        w = (arc - support).order()
        if w >= piece.kappa:
            return piece.q_hi
        assert piece.a is not None and piece.alpha is not None
        return Ext(piece.alpha + w.frac / piece.a)

    def eval_float(self, u: float, v: float) -> float:
        P = self.pizza
        vals = [s.eval_float(u) for s in self.v]
        l = None
        for i in range(1, P.p + 1):
            if vals[i - 1] - 1e-15 <= v <= vals[i] + 1e-15:
                l = i
                break
        if l is None:
            raise RealizationError(f"point v={v} outside the triangle at u={u}")
        piece = self.pieces[l - 1]
        if piece.kind == "point":
            return u ** float(P.q[l].frac)
        lo, hi = vals[l - 1], vals[l]
        if hi == lo:
            return u ** float(piece.q_lo.frac)
        # the straightening sends the supporting arc to the zero section
        if piece.support_left:
            y = (u ** float(piece.beta)) * (v - lo) / (hi - lo)
        else:
            y = (u ** float(piece.beta)) * (hi - v) / (hi - lo)
        # y is the straightened height above the supporting arc's opposite
        # edge; compose with the standard slice
        if piece.kappa.is_inf:
            z = y
        else:
            k = float(piece.kappa.frac)
            z = u ** k + y * (1.0 - u ** (k - float(piece.beta)))
        assert piece.a is not None and piece.alpha is not None
        if z <= 0.0:
            z = 0.0
        af = float(piece.a)
        if z == 0.0:
            return 0.0 if af > 0 else float("inf")
        return (u ** float(piece.alpha)) * z ** (1.0 / af)


def realize_function(P: AbstractPizza) -> FunctionRealization:
    """Delimiting arcs v_l as cumulative positive dyadic monomial sums (so
    consecutive tangencies are exactly the slice exponents) plus per-slice
    closed forms with the stated boundary orders."""
    assert_valid(P)
    if any(q.is_inf for q in P.q):
        raise RealizationError("realization needs finite boundary orders")
    v: list[MonomialSeries] = [MonomialSeries.zero()]
    for l in range(1, P.p + 1):
        v.append(v[-1] + MonomialSeries.monomial(dyadic(l), P.beta[l - 1]))
    pieces: list[SlicePiece] = []
    for l in range(1, P.p + 1):
        m = P.mu[l - 1]
        if isinstance(m, PointWidth):
            pieces.append(
                SlicePiece(
                    kind="point",
                    q_lo=P.q[l],
                    q_hi=P.q[l],
                    beta=P.beta[l - 1],
                    kappa=Ext(m.beta),
                    a=None,
                    alpha=None,
                    support_left=False,
                )
            )
            continue
        assert isinstance(m, AffineMap)
        va, vz = m(P.q[l - 1]), m(P.q[l])
        support_is_left = va > vz
        q_hi = P.q[l - 1] if support_is_left else P.q[l]
        q_lo = P.q[l] if support_is_left else P.q[l - 1]
        kappa = va if support_is_left else vz
        alpha = -m.b / m.a
        pieces.append(
            SlicePiece(
                kind="band",
                q_lo=q_lo,
                q_hi=q_hi,
                beta=P.beta[l - 1],
                kappa=kappa,
                a=m.a,
                alpha=alpha,
                support_left=support_is_left,
            )
        )
    return FunctionRealization(pizza=P, v=tuple(v), pieces=tuple(pieces))


# ---------------------------------------------------------------------------
# model pairs


@dataclass(frozen=True)
class EmbeddedArc:
    name: str
    side: str  # "T" | "Tprime"
    role: str  # "main" | "gap_generic" | "probe" | "theta"
    index: Optional[int]  # family position for main arcs
    order: Ext  # exact distance order to the opposite triangle
    pair: Optional[int]  # owning image pair / slice for probes and thetas
    arc: MonoArc


@dataclass(frozen=True)
class InvariantBundle:
    lam: AbstractPizza
    lam_prime: AbstractPizza
    sigma: Permutation
    upsilon: Permutation
    sign: tuple[str, ...]
    omega: Permutation
    varpi: Permutation


def bundle_difference(b1: InvariantBundle, b2: InvariantBundle) -> Optional[str]:
    """Name of the first differing invariant component, or None."""
    if b1.lam != b2.lam:
        return "lambda"
    if b1.lam_prime != b2.lam_prime:
        return "lambda_prime"
    if b1.sigma != b2.sigma:
        return "sigma"
    if b1.upsilon != b2.upsilon:
        return "upsilon"
    for i, (x, y) in enumerate(zip(b1.sign, b2.sign)):
        if x != y:
            return f"sign[{i}]"
    if len(b1.sign) != len(b2.sign):
        return "sign"
    return None


def equivalent_bundles(b1: InvariantBundle, b2: InvariantBundle) -> bool:
    return bundle_difference(b1, b2) is None


@dataclass(frozen=True)
class PairEmbedding:
    dim: int
    arcs: tuple[EmbeddedArc, ...]
    image_pair_classes: tuple[str, ...]
    requested: Optional[InvariantBundle]

    def family(self, side: str, role: str = "main") -> list[EmbeddedArc]:
        out = [a for a in self.arcs if a.side == side and a.role == role]
        if role == "main":
            out.sort(key=lambda a: a.index)
        return out


def model_pair(qplus: Ext, qminus: Ext, beta: Fraction) -> PairEmbedding:
    """The explicit four-dimensional building block with prescribed boundary
    tangency orders over a beta-triangle: arcs lambda+-, lambda'+- (graphs of
    u**q+- over them) and theta+- one beta-level up in the last coordinate."""
    qp, qm = Ext.of(qplus), Ext.of(qminus)
    beta = Fraction(beta)
    if qp.is_inf or qm.is_inf:
        raise RealizationError("model pair needs finite orders")
    if Ext(beta) > ext_min([qp, qm]) or beta < 1:
        raise RealizationError("model pair needs 1 <= beta <= min(q+, q-)")
    zero = MonomialSeries.zero()
    vb = MonomialSeries.monomial(1, beta)
    lam_p = MonoArc((U_SERIES, zero, zero, zero))
    lam_m = MonoArc((U_SERIES, vb, zero, zero))
    lamp_p = MonoArc((U_SERIES, zero, MonomialSeries.monomial(1, qp.frac), zero))
    lamp_m = MonoArc((U_SERIES, vb, MonomialSeries.monomial(1, qm.frac), zero))
    wb = MonomialSeries.monomial(Fraction(1, 2), beta)
    theta_p = MonoArc((U_SERIES, zero, MonomialSeries.monomial(1, qp.frac), wb))
    theta_m = MonoArc((U_SERIES, vb, MonomialSeries.monomial(1, qm.frac), wb))
    arcs = (
        EmbeddedArc("lambda+", "T", "main", 0, qp, None, lam_p),
        EmbeddedArc("lambda-", "T", "main", 1, qm, None, lam_m),
        EmbeddedArc("lambda'+", "Tprime", "main", 0, qp, None, lamp_p),
        EmbeddedArc("theta+", "Tprime", "theta", None, Ext(beta), 1, theta_p),
        EmbeddedArc("theta-", "Tprime", "theta", None, Ext(beta), 1, theta_m),
        EmbeddedArc("lambda'-", "Tprime", "main", 1, qm, None, lamp_m),
    )
    return PairEmbedding(dim=4, arcs=arcs, image_pair_classes=("model",), requested=None)


# ---------------------------------------------------------------------------
# general realization


def _probe_points(P: AbstractPizza, l: int) -> list[tuple[Fraction, Fraction]]:
    """(width, order) samples at three interior orders of a non-point
    coherent slice, used by the width-recovery oracle."""
    m = P.mu[l - 1]
    if not isinstance(m, AffineMap):
        return []
    a, b = P.q[l - 1], P.q[l]
    if a.is_inf or b.is_inf:
        return []
    out = []
    for i in (1, 2, 3):
        q = a.frac + (b.frac - a.frac) * Fraction(i, 4)
        out.append((m(q).frac, q))
    return out


class _Fresh:
    """Dispenser of distinct positive dyadic coefficients."""

    def __init__(self, start: int = 1):
        self._c = itertools.count(start)

    def coeff(self) -> Fraction:
        return dyadic(next(self._c))


def realize_general(
    P: AbstractPizza,
    sigma: Permutation,
    upsilon: Permutation,
    s: Sequence[str],
) -> tuple[PairEmbedding, InvariantBundle]:
    """Build an explicit normal pair carrying (P, sigma, upsilon, s).

    Raises AdmissibilityError when the triple is not allowable or no arc
    permutation is determined, and RealizationError when the arc-level
    self-checks fail (which would indicate a construction bug).
    """
    assert_valid(P)
    if not is_minimal(P):
        raise PizzaError("realization requires a minimal pizza")
    if any(q.is_inf for q in P.q):
        raise RealizationError("realization needs finite boundary orders")
    s = tuple(s)
    rep = check_allowable(P, sigma, upsilon, s)
    if not rep.ok:
        raise AdmissibilityError("allowability", "; ".join(rep.violations))
    twin = build_twin_pre_pizza(P)
    try:
        varpi = compute_varpi(P, sigma, upsilon, s, twin)
        structure = build_image_structure(P, sigma, upsilon, s, twin, varpi)
    except DeterminationError as e:
        raise AdmissibilityError(e.condition, str(e)) from e
    violations = check_block_inequalities(
        varpi,
        tord_table(twin),
        skip_pairs=frozenset((k - 1, k) for k in twin.twin_pairs()),
    )
    if violations:
        raise AdmissibilityError("blocks", str(violations[0]))
    emb = _build_embedding(P, twin, structure)
    omega = compute_omega(P, sigma, upsilon, s)
    bundle = InvariantBundle(
        lam=P,
        lam_prime=structure.lam_prime,
        sigma=sigma,
        upsilon=upsilon,
        sign=s,
        omega=omega,
        varpi=varpi,
    )
    emb = PairEmbedding(
        dim=emb.dim,
        arcs=emb.arcs,
        image_pair_classes=emb.image_pair_classes,
        requested=bundle,
    )
    return emb, bundle


def realize_transverse(
    P: AbstractPizza, pi: Permutation
) -> tuple[PairEmbedding, InvariantBundle]:
    """Totally transverse realization: the arc permutation is given directly
    and must fix the boundary positions and pass the block inequalities
    against the supporting-family tangency table."""
    assert_valid(P)
    if not is_minimal(P):
        raise PizzaError("realization requires a minimal pizza")
    if any(slice_class(P, l) != "transverse" for l in range(1, P.p + 1)):
        raise RealizationError("pizza is not totally transverse")
    twin = build_twin_pre_pizza(P)
    n = twin.n_arcs
    if pi.n != n:
        raise AdmissibilityError("pi", f"permutation acts on {pi.n}, need {n}")
    if pi(0) != 0 or pi(n - 1) != n - 1:
        raise AdmissibilityError("pi", "boundary positions must be fixed")
    violations = check_block_inequalities(pi, tord_table(twin))
    if violations:
        raise AdmissibilityError("blocks", str(violations[0]))
    # extract sigma from pi on the maximum arcs
    max_arcs = twin.maximum_arcs()
    by_image = sorted(max_arcs, key=pi)
    sigma_images = [0] * len(max_arcs)
    for rank, a in enumerate(by_image):
        sigma_images[twin.arcs[a].max_index - 1] = rank
    sigma = Permutation(sigma_images)
    upsilon = Permutation(())
    s: tuple[str, ...] = ()
    check = compute_varpi(P, sigma, upsilon, s, twin)
    if check != pi:
        raise AdmissibilityError(
            "pi", f"permutation is not compatible with the maximum slots: {check}"
        )
    return realize_general(P, sigma, upsilon, s)


def _build_embedding(
    P: AbstractPizza, twin: TwinPrePizza, st: ImageStructure
) -> PairEmbedding:
    n = twin.n_arcs
    dim = n + 2  # u, v, z, w_1..w_{n-1}
    fresh = _Fresh(start=n + 4)
    zero = MonomialSeries.zero()

    # domain bases for the twin pre-pizza arcs
    base: list[MonomialSeries] = [MonomialSeries.zero()]
    for k in range(1, n):
        step = MonomialSeries.monomial(dyadic(k), twin.betahat[k - 1])
        base.append(base[-1] + step)

    def lift(v: MonomialSeries, z: MonomialSeries, w_slot: int | None = None,
             w: MonomialSeries | None = None) -> MonoArc:
        coords = [U_SERIES, v, z] + [zero] * (n - 1)
        if w_slot is not None:
            coords[2 + w_slot] = w
        return MonoArc(coords)

    arcs: list[EmbeddedArc] = []
    for k in range(n):
        arcs.append(
            EmbeddedArc(
                name=f"lam_{k}",
                side="T",
                role="main",
                index=k,
                order=twin.arcs[k].q,
                pair=None,
                arc=lift(base[k], zero),
            )
        )
    # gap generics: midpoint arcs inside merged transverse pairs
    for k in range(1, n):
        if twin.pair_class[k - 1] == PAIR_GAP:
            mid = base[k - 1] + (base[k] - base[k - 1]).scale(Fraction(1, 2))
            arcs.append(
                EmbeddedArc(
                    name=f"gen_{k}",
                    side="T",
                    role="gap_generic",
                    index=None,
                    order=Ext(twin.betahat[k - 1]),
                    pair=k,
                    arc=lift(mid, zero),
                )
            )
    # width probes inside coherent slices
    probes_of_pair: dict[int, list[tuple[MonomialSeries, Fraction]]] = {}
    for k in twin.primary_pairs():
        l = twin.primary_slice[k - 1]
        pts = _probe_points(P, l)
        if not pts:
            continue
        sup = supporting_end(P, l)
        sup_is_left = sup == l - 1
        anchor = base[k - 1] if sup_is_left else base[k]
        sign = 1 if sup_is_left else -1
        plist = []
        for w, q in pts:
            v = anchor + MonomialSeries.monomial(sign * fresh.coeff(), w)
            plist.append((v, q))
            arcs.append(
                EmbeddedArc(
                    name=f"probe_{k}_{q}",
                    side="T",
                    role="probe",
                    index=None,
                    order=Ext(q),
                    pair=k,
                    arc=lift(v, zero),
                )
            )
        probes_of_pair[k] = plist

    # image bases: preimage bases, with degraded twin images rebased onto
    # their carrier
    inv = st.varpi.inverse()
    img_base: dict[int, MonomialSeries] = {}
    rebased = {kp: (carrier, level) for kp, carrier, level in st.rebased}

    def resolve(kp: int, seen: frozenset[int] = frozenset()) -> MonomialSeries:
        if kp in img_base:
            return img_base[kp]
        if kp in seen:
            raise RealizationError("cyclic twin rebasing")
        if kp in rebased:
            carrier, level = rebased[kp]
            b = resolve(carrier, seen | {kp}) + MonomialSeries.monomial(
                fresh.coeff(), level
            )
        else:
            b = base[inv(kp)]
        img_base[kp] = b
        return b

    img_z: list[MonomialSeries] = []
    for kp in range(n):
        q = st.q_img[kp]
        eta = 1 + dyadic(kp + 2)
        img_z.append(MonomialSeries.monomial(eta, q.frac))
    for kp in range(n):
        arcs.append(
            EmbeddedArc(
                name=f"lam'_{kp}",
                side="Tprime",
                role="main",
                index=kp,
                order=st.q_img[kp],
                pair=None,
                arc=lift(resolve(kp), img_z[kp]),
            )
        )
    # thetas marking the secondary image pairs (and the gap minima of the
    # image pizza), one w-slot per image pair
    for kp in range(1, n):
        pair = st.pairs[kp - 1]
        if pair.kind == PAIR_PRIMARY:
            continue
        w = MonomialSeries.monomial(Fraction(1, 2), pair.level)
        for tag, at in (("+", kp - 1), ("-", kp)):
            arcs.append(
                EmbeddedArc(
                    name=f"theta{tag}_{kp}",
                    side="Tprime",
                    role="theta",
                    index=None,
                    order=Ext(pair.level),
                    pair=kp,
                    arc=lift(resolve(at), img_z[at], w_slot=kp - 1, w=w),
                )
            )
    # image width probes over the same probe bases, at the exact orders
    for kp in range(1, n):
        pair = st.pairs[kp - 1]
        if pair.kind != PAIR_PRIMARY:
            continue
        k = None
        for cand in twin.primary_pairs():
            a, b = st.varpi(cand - 1), st.varpi(cand)
            if max(a, b) == kp:
                k = cand
                break
        assert k is not None
        for v, q in probes_of_pair.get(k, []):
            zc = MonomialSeries.monomial(1 + fresh.coeff(), q)
            arcs.append(
                EmbeddedArc(
                    name=f"probe'_{kp}_{q}",
                    side="Tprime",
                    role="probe",
                    index=None,
                    order=Ext(q),
                    pair=kp,
                    arc=lift(v, zc),
                )
            )

    emb = PairEmbedding(
        dim=dim,
        arcs=tuple(arcs),
        image_pair_classes=tuple(p.kind for p in st.pairs),
        requested=None,
    )
    _self_check(twin, st, emb)
    return emb


def _self_check(twin: TwinPrePizza, st: ImageStructure, emb: PairEmbedding) -> None:
    """The built arc families must reproduce the combinatorially predicted
    tangency tables exactly."""
    n = twin.n_arcs
    t_arcs = [a.arc for a in emb.family("T")]
    p_arcs = [a.arc for a in emb.family("Tprime")]
    for i in range(n):
        for j in range(i + 1, n):
            got = arc_tord(t_arcs[i], t_arcs[j])
            if got != twin.tord(i, j):
                raise RealizationError(
                    f"domain tangency ({i},{j}): built {got}, need {twin.tord(i, j)}"
                )
    # image chain-min table
    steps = [p.level for p in st.pairs]
    for i in range(n):
        for j in range(i + 1, n):
            want = Ext(min(steps[i:j]))
            got = arc_tord(p_arcs[i], p_arcs[j])
            if got != want:
                raise RealizationError(
                    f"image tangency ({i},{j}): built {got}, need {want}"
                )
    # cross structure: every arc attains its order against the other family
    for i in range(n):
        row = ext_max([arc_tord(t_arcs[i], b) for b in p_arcs])
        if row != twin.arcs[i].q:
            raise RealizationError(
                f"arc {i} attains order {row}, need {twin.arcs[i].q}"
            )
    for kp in range(n):
        col = ext_max([arc_tord(a, p_arcs[kp]) for a in t_arcs])
        if col != st.q_img[kp]:
            raise RealizationError(
                f"image arc {kp} attains order {col}, need {st.q_img[kp]}"
            )
    if arc_tord(t_arcs[0], p_arcs[0]) != twin.arcs[0].q:
        raise RealizationError("boundary pair condition fails at the start")
    if arc_tord(t_arcs[-1], p_arcs[-1]) != twin.arcs[-1].q:
        raise RealizationError("boundary pair condition fails at the end")
