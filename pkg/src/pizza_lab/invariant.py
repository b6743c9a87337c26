"""The invariant engine: characteristic permutations of normal-pair models
(sigma on maximum zones, the signed slice correspondence tau as upsilon + s),
caravans, allowability, the combined permutation omega, the arc permutation
varpi, admissibility, and equivalence of invariant bundles.

Everything that can be computed from one pizza plus a candidate triple
(sigma, upsilon, s) is computed that way, so the engine drives both the
model-decision direction and the realization direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .blocks import BlockViolation, Permutation, check_block_inequalities
from .core import INF, Ext, ext_max, ext_min
from .pizza import (
    AbstractPizza,
    AffineMap,
    PizzaError,
    PointWidth,
    Width,
    coherent_slice_indices,
    is_minimal,
    maximum_zone_indices,
    slice_class,
    supporting_end,
    zone_class,
    zone_tord,
)
from .twin import (
    PAIR_GAP,
    PAIR_PRIMARY,
    PAIR_TRANSVERSE,
    PAIR_TWIN,
    TwinPrePizza,
    build_twin_pre_pizza,
)


class ModelError(ValueError):
    """A normal-pair model is structurally inconsistent."""


class DeterminationError(ValueError):
    """No permutation satisfies the determination conditions."""

    def __init__(self, condition: str, message: str):
        super().__init__(f"{condition}: {message}")
        self.condition = condition


# ---------------------------------------------------------------------------
# normal-pair models


@dataclass(frozen=True)
class NormalPairModel:
    """Two minimal pizzas plus the zone-level cross tangency table
    cross[l][l'] = tord of representative arcs of zone l of Lambda and zone
    l' of Lambda-prime."""

    lam: AbstractPizza
    lam_prime: AbstractPizza
    cross: tuple[tuple[Ext, ...], ...]

    def cross_at(self, l: int, lp: int) -> Ext:
        return self.cross[l][lp]


def validate_model(M: NormalPairModel) -> list[str]:
    bad: list[str] = []
    P, Q = M.lam, M.lam_prime
    if not is_minimal(P) or not is_minimal(Q):
        bad.append("pizzas must be minimal")
    if len(M.cross) != P.p + 1 or any(len(r) != Q.p + 1 for r in M.cross):
        bad.append("cross table shape mismatch")
        return bad
    if not (M.cross_at(0, 0) == P.q[0] == Q.q[0]):
        bad.append("boundary condition fails at the first arcs")
    if not (M.cross_at(P.p, Q.p) == P.q[P.p] == Q.q[Q.p]):
        bad.append("boundary condition fails at the last arcs")
    for l in range(P.p + 1):
        if ext_max(M.cross[l]) != P.q[l]:
            bad.append(f"order consistency fails on row {l}")
    for lp in range(Q.p + 1):
        if ext_max([M.cross[l][lp] for l in range(P.p + 1)]) != Q.q[lp]:
            bad.append(f"order consistency fails on column {lp}")
    bad.extend(_joint_ultrametric_violations(M))
    return bad


def _joint_ultrametric_violations(M: NormalPairModel) -> list[str]:
    """Strong triangle inequality over the combined zone table, within-pizza
    values coming from the slice exponents."""
    P, Q = M.lam, M.lam_prime
    n, m = P.p + 1, Q.p + 1

    def dist(i: int, j: int) -> Ext:
        a_prime, b_prime = i >= n, j >= n
        if not a_prime and not b_prime:
            return zone_tord(P, i, j)
        if a_prime and b_prime:
            return zone_tord(Q, i - n, j - n)
        if a_prime:
            i, j = j, i
        return M.cross_at(i, j - n)

    total = n + m
    bad = []
    for a in range(total):
        for b in range(a + 1, total):
            dab = dist(a, b)
            for c in range(total):
                if c in (a, b):
                    continue
                lo = ext_min([dist(a, c), dist(c, b)])
                if dab < lo:
                    bad.append(
                        f"ultrametric violation at ({a},{c},{b}): {dab} < {lo}"
                    )
    return bad


def compute_sigma(M: NormalPairModel) -> Permutation:
    """Match the maximum zones of the two pizzas: sigma(i) = j iff the cross
    tangency equals both zone orders and the zone depths agree.  0-based."""
    P, Q = M.lam, M.lam_prime
    mz = maximum_zone_indices(P)
    mz_p = maximum_zone_indices(Q)
    if len(mz) != len(mz_p):
        raise ModelError(
            f"maximum zone counts differ: {len(mz)} vs {len(mz_p)}"
        )
    images: list[int] = []
    for i, l in enumerate(mz):
        hits = []
        for j, lp in enumerate(mz_p):
            if (
                M.cross_at(l, lp) == P.q[l] == Q.q[lp]
                and P.nu[l] == Q.nu[lp]
            ):
                hits.append(j)
        if len(hits) != 1:
            raise ModelError(
                f"maximum zone {i} has {len(hits)} partners (need exactly 1)"
            )
        images.append(hits[0])
    if sorted(images) != list(range(len(mz))):
        raise ModelError("maximum-zone matching is not a bijection")
    return Permutation(images)


def _twin_split_zones(P: AbstractPizza) -> set[int]:
    """Zones of P that the twin pre-pizza splits (interior transverse
    non-maximum zones between two coherent slices) or doubles (transverse
    minimum boundary arcs next to a coherent slice)."""
    out: set[int] = set()
    coh = set(coherent_slice_indices(P))
    for l in range(P.p + 1):
        zc = zone_class(P, l)
        if not zc.transverse or zc.maximum:
            continue
        if 0 < l < P.p and l in coh and (l + 1) in coh:
            out.add(l)
        if l == 0 and 1 in coh:
            out.add(l)
        if l == P.p and P.p in coh:
            out.add(l)
    return out


def compute_tau(M: NormalPairModel) -> tuple[Permutation, tuple[str, ...]]:
    """The signed coherent-slice correspondence as (upsilon, s).

    A coherent slice matches the unique opposite slice with the same order
    interval (as a set) and the same width map whose end-zone cross
    tangencies attain the zone orders; an end equality may only be excused
    when its zone is split by the twin construction, and ends lying in
    maximum zones must pair according to sigma.
    """
    P, Q = M.lam, M.lam_prime
    sigma = compute_sigma(M)
    mzP = maximum_zone_indices(P)
    mzQ = maximum_zone_indices(Q)
    max_no_P = {l: i for i, l in enumerate(mzP)}
    max_no_Q = {l: i for i, l in enumerate(mzQ)}
    splitP = _twin_split_zones(P)
    splitQ = _twin_split_zones(Q)
    cohP = coherent_slice_indices(P)
    cohQ = coherent_slice_indices(Q)
    if len(cohP) != len(cohQ):
        raise ModelError(
            f"coherent slice counts differ: {len(cohP)} vs {len(cohQ)}"
        )

    def width_equal(l: int, lp: int) -> bool:
        a, b = P.mu[l - 1], Q.mu[lp - 1]
        if isinstance(a, PointWidth) and isinstance(b, PointWidth):
            return a.beta == b.beta
        if isinstance(a, AffineMap) and isinstance(b, AffineMap):
            return a == b
        return False

    def interval_equal(l: int, lp: int) -> bool:
        return sorted([P.q[l - 1], P.q[l]]) == sorted([Q.q[lp - 1], Q.q[lp]])

    def end_evidence(l_zone: int, lp_zone: int) -> Optional[bool]:
        """True = full equality, False = excused at a split zone,
        None = mismatch."""
        want = P.q[l_zone]
        if Q.q[lp_zone] != want:
            return None
        if M.cross_at(l_zone, lp_zone) == want:
            return True
        if l_zone in splitP or lp_zone in splitQ:
            return False
        return None

    def sigma_consistent(l_zone: int, lp_zone: int) -> bool:
        a_max = l_zone in max_no_P
        b_max = lp_zone in max_no_Q
        if a_max != b_max:
            return False
        if a_max and sigma(max_no_P[l_zone]) != max_no_Q[lp_zone]:
            return False
        return True

    images: list[int] = []
    signs: list[str] = []
    for l in cohP:
        candidates: list[tuple[int, str, int]] = []  # (coh index, sign, #full)
        for jp, lp in enumerate(cohQ):
            if not (interval_equal(l, lp) and width_equal(l, lp)):
                continue
            for sign, pairs in (
                ("+", ((l, lp), (l - 1, lp - 1))),
                ("-", ((l, lp - 1), (l - 1, lp))),
            ):
                ok = True
                fulls = 0
                for lz, lpz in pairs:
                    if not sigma_consistent(lz, lpz):
                        ok = False
                        break
                    ev = end_evidence(lz, lpz)
                    if ev is None:
                        ok = False
                        break
                    fulls += 1 if ev else 0
                if ok and fulls >= 1:
                    candidates.append((jp, sign, fulls))
        if not candidates:
            raise ModelError(f"coherent slice {l} has no tau partner")
        best = max(c[2] for c in candidates)
        candidates = [c for c in candidates if c[2] == best]
        if len(candidates) != 1:
            raise ModelError(
                f"coherent slice {l} has ambiguous tau partners {candidates}"
            )
        jp, sign, _ = candidates[0]
        images.append(jp)
        signs.append(sign)
    if sorted(images) != list(range(len(cohP))):
        raise ModelError("tau is not a bijection on coherent slices")
    return Permutation(images), tuple(signs)


# ---------------------------------------------------------------------------
# caravans and allowability


@dataclass(frozen=True)
class Caravan:
    direction: str  # "right" | "left"
    members: tuple[int, ...]  # 0-based coherent-order indices, chain order
    slices: tuple[int, ...]  # pizza slice indices of the members
    adjacent: tuple[int, ...]  # 0-based maximum indices of the adjacent set


def _adjacency_sets(P: AbstractPizza):
    """Per coherent slice: literal adjacent maxima and best-contact maxima
    for both directions, plus eligibility flags."""
    mz = maximum_zone_indices(P)
    coh = coherent_slice_indices(P)
    out = {}
    for l in coh:
        for direction, zone, level in (
            ("right", l, P.q[l]),
            ("left", l - 1, P.q[l - 1]),
        ):
            eligible = (
                P.q[l] >= P.q[l - 1] if direction == "right" else P.q[l - 1] >= P.q[l]
            )
            tords = [zone_tord(P, zone, m) for m in mz]
            literal = [i for i, t in enumerate(tords) if t >= level]
            if tords:
                best = ext_max(tords)
                argmax = [i for i, t in enumerate(tords) if t == best]
            else:
                argmax = []
            out[(l, direction)] = (eligible, literal, argmax)
    return out


def _twin_split_between(P: AbstractPizza, l: int) -> bool:
    """Zone l sits between coherent slices l and l+1 and is split by twins."""
    return (
        0 < l < P.p
        and slice_class(P, l) == "coherent"
        and slice_class(P, l + 1) == "coherent"
        and zone_class(P, l).transverse
        and not zone_class(P, l).maximum
    )


def compute_caravans(P: AbstractPizza) -> list[Caravan]:
    """All maximal rightward and leftward caravans of the coherent slices.

    A coherent slice is tied in a direction when no maximum zone attains its
    end order from the end arc and the neighbouring structure continues (a
    shared split zone breaks the tie: the twin arcs let the two slices move
    independently).  The adjacent set of an untied end falls back to the
    best-contact maxima when no maximum attains the order.
    """
    if not is_minimal(P):
        raise PizzaError("caravans require a minimal pizza")
    coh = coherent_slice_indices(P)
    pos = {l: i for i, l in enumerate(coh)}
    adj = _adjacency_sets(P)
    caravans: list[Caravan] = []

    def tied(l: int, direction: str) -> bool:
        eligible, literal, _ = adj[(l, direction)]
        if not eligible or literal:
            return False
        zone = l if direction == "right" else l - 1
        if _twin_split_between(P, zone):
            return False
        return True

    def successor(l: int, direction: str) -> int:
        i = pos[l]
        nxt = coh[i + 1] if direction == "right" else (coh[i - 1] if i else None)
        if direction == "left":
            nxt = coh[i - 1] if i > 0 else None
        if nxt is None or abs(nxt - l) > 2:
            raise PizzaError(
                f"tied slice {l} has no reachable coherent successor ({direction})"
            )
        return nxt

    for direction in ("right", "left"):
        starts = []
        for l in coh:
            eligible, _, _ = adj[(l, direction)]
            if not eligible:
                continue
            # maximal chains only: skip slices that are the successor of a
            # tied predecessor in this direction
            is_successor = False
            for l0 in coh:
                if l0 != l and adj[(l0, direction)][0] and tied(l0, direction):
                    if successor(l0, direction) == l:
                        is_successor = True
                        break
            if not is_successor:
                starts.append(l)
        for l in starts:
            chain = [l]
            while tied(chain[-1], direction):
                chain.append(successor(chain[-1], direction))
            last = chain[-1]
            eligible, literal, argmax = adj[(last, direction)]
            adjacent = literal if literal else argmax
            caravans.append(
                Caravan(
                    direction=direction,
                    members=tuple(pos[s] for s in chain),
                    slices=tuple(chain),
                    adjacent=tuple(adjacent),
                )
            )
    return caravans


def caravan_sign(C: Caravan, s: Sequence[str]) -> str:
    signs = {s[m] for m in C.members}
    if len(signs) != 1:
        raise DeterminationError("A1", f"caravan {C.slices} mixes signs {signs}")
    return signs.pop()


def j_minus(C: Caravan, sigma: Permutation, sign: str) -> int:
    """Number of opposite-side maximum zones preceding the caravan image.

    Rightward-positive / leftward-negative: min of sigma over the adjacent
    set, minus one; the other two cases: max of sigma over the adjacent set.
    All values 0-based counts.
    """
    if not C.adjacent:
        return 0
    vals = [sigma(i) for i in C.adjacent]
    if (C.direction == "right") == (sign == "+"):
        return min(vals)  # 0-based sigma value = (1-based minimum) - 1
    return max(vals) + 1


@dataclass
class AllowabilityReport:
    violations: list[str] = field(default_factory=list)
    j_minus_by_slice: dict[int, int] = field(default_factory=dict)  # coherent idx -> j-
    caravans: list[Caravan] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_allowable(
    P: AbstractPizza, sigma: Permutation, upsilon: Permutation, s: Sequence[str]
) -> AllowabilityReport:
    """Clauses A1-A3 plus the structural requirements that make the combined
    permutation well defined (boundary maxima fixed by sigma, consistent
    j-minus across the caravans through each slice)."""
    rep = AllowabilityReport()
    coh = coherent_slice_indices(P)
    mz = maximum_zone_indices(P)
    L, m = len(coh), len(mz)
    if sigma.n != m:
        rep.violations.append(f"sigma acts on {sigma.n} items, need {m}")
        return rep
    if upsilon.n != L or len(s) != L:
        rep.violations.append(f"upsilon/s act on {upsilon.n}/{len(s)} items, need {L}")
        return rep
    if any(x not in "+-" for x in s):
        rep.violations.append("signs must be '+'/'-'")
        return rep
    if m and mz[0] == 0 and sigma(0) != 0:
        rep.violations.append("sigma must fix the first maximum (boundary arc)")
    if m and mz[-1] == P.p and sigma(m - 1) != m - 1:
        rep.violations.append("sigma must fix the last maximum (boundary arc)")

    caravans = compute_caravans(P)
    rep.caravans = caravans

    # A1: same caravan -> equal signs, arithmetic upsilon progression
    for C in caravans:
        try:
            sign = caravan_sign(C, s)
        except DeterminationError as e:
            rep.violations.append(str(e))
            continue
        ms = list(C.members)
        for a in range(len(ms)):
            for b in range(a + 1, len(ms)):
                k, l = ms[a], ms[b]
                want = (l - k) if sign == "+" else (k - l)
                if upsilon(l) - upsilon(k) != want:
                    rep.violations.append(
                        f"A1: slices {k},{l} in caravan {C.slices} need "
                        f"upsilon shift {want}"
                    )

    # A3: consecutive coherent slices sharing a coherent or maximum zone
    for idx in range(len(coh) - 1):
        l1, l2 = coh[idx], coh[idx + 1]
        if l2 != l1 + 1:
            continue
        zc = zone_class(P, l1)
        if (not zc.transverse) or zc.maximum:
            if s[idx] != s[idx + 1]:
                rep.violations.append(
                    f"A3: slices {l1},{l2} share zone {l1} but have signs "
                    f"{s[idx]},{s[idx + 1]}"
                )

    if rep.violations:
        return rep

    # j-minus per caravan and consistency per slice
    jm: dict[int, set[int]] = {}
    jvals: dict[int, int] = {}
    for C in caravans:
        sign = caravan_sign(C, s)
        v = j_minus(C, sigma, sign)
        jvals[id(C)] = v
        for midx in C.members:
            jm.setdefault(midx, set()).add(v)
    for mem, vals in jm.items():
        if len(vals) != 1:
            rep.violations.append(
                f"caravans through coherent slice #{mem + 1} disagree on the "
                f"maximum count before its image: {sorted(vals)}"
            )
        else:
            rep.j_minus_by_slice[mem] = vals.pop()

    # A2: j-minus monotone along the image order of disjoint caravans
    def interval(C: Caravan) -> tuple[int, int]:
        vals = [upsilon(mb) for mb in C.members]
        return (min(vals), max(vals))

    for C1 in caravans:
        for C2 in caravans:
            if C1 is C2:
                continue
            i1, i2 = interval(C1), interval(C2)
            if i1 != i2 and i1[0] <= i2[0] and i1[1] <= i2[1]:
                if jvals[id(C1)] > jvals[id(C2)]:
                    rep.violations.append(
                        f"A2: caravans {C1.slices} -> {C2.slices} have "
                        f"decreasing maximum counts "
                        f"{jvals[id(C1)]} > {jvals[id(C2)]}"
                    )
    return rep


def compute_omega(
    P: AbstractPizza, sigma: Permutation, upsilon: Permutation, s: Sequence[str]
) -> Permutation:
    """The combined characteristic permutation on the ordered union of the
    maximum zones and coherent slices, interleaved by the per-slice
    maximum counts (0-based images)."""
    rep = check_allowable(P, sigma, upsilon, s)
    if not rep.ok:
        raise DeterminationError("allowability", "; ".join(rep.violations))
    coh = coherent_slice_indices(P)
    mz = maximum_zone_indices(P)
    L, m = len(coh), len(mz)
    K = L + m
    # image position (0-based) of the t-th coherent image (t 0-based):
    # t + j_minus of its caravan
    img_pos_coh: dict[int, int] = {}
    jm_by_image: list[int] = [0] * L
    for mem, v in rep.j_minus_by_slice.items():
        jm_by_image[upsilon(mem)] = v
    for t in range(L):
        img_pos_coh[t] = t + jm_by_image[t]
    used = set(img_pos_coh.values())
    if len(used) != L or any(not 0 <= v < K for v in used):
        raise DeterminationError("omega", "coherent image positions collide")
    max_positions = [k for k in range(K) if k not in used]
    if len(max_positions) != m:
        raise DeterminationError("omega", "maximum image positions inconsistent")
    # verify the interleave realizes the j-minus counts
    for t in range(L):
        before = sum(1 for q in max_positions if q < img_pos_coh[t])
        if before != jm_by_image[t]:
            raise DeterminationError(
                "omega",
                f"coherent image {t} is preceded by {before} maxima, "
                f"need {jm_by_image[t]}",
            )
    # domain order of K: zones and slices by position in the pizza
    items: list[tuple[Fraction, str, int]] = []
    for i, l in enumerate(mz):
        items.append((Fraction(2 * l), "max", i))
    for t, l in enumerate(coh):
        items.append((Fraction(2 * l - 1), "coh", t))
    items.sort()
    images = []
    for _, kind, idx in items:
        if kind == "max":
            images.append(max_positions[sigma(idx)])
        else:
            images.append(img_pos_coh[upsilon(idx)])
    return Permutation(images)


# ---------------------------------------------------------------------------
# varpi


def compute_varpi(
    P: AbstractPizza,
    sigma: Permutation,
    upsilon: Permutation,
    s: Sequence[str],
    twin: TwinPrePizza | None = None,
) -> Permutation:
    """The unique arc permutation of the twin pre-pizza determined by the
    triple: boundaries fixed, maximum arcs in sigma order, primary pairs
    placed by upsilon and oriented by s, maxima interleaved by the caravan
    counts."""
    rep = check_allowable(P, sigma, upsilon, s)
    if not rep.ok:
        raise DeterminationError("allowability", "; ".join(rep.violations))
    T = twin if twin is not None else build_twin_pre_pizza(P)
    n = T.n_arcs
    coh = coherent_slice_indices(P)
    L = len(coh)

    # primary pair k (1-based pair index) <-> coherent number (1-based)
    pair_of_coh: dict[int, int] = {}
    for k in range(1, n):
        cn = T.coherent_number[k - 1]
        if cn is not None:
            pair_of_coh[cn - 1] = k
    if len(pair_of_coh) != L:
        raise DeterminationError("varpi", "primary pairs do not match slices")

    max_arcs = T.maximum_arcs()  # in T order; max_index gives 1-based number
    arcs_by_sigma: list[int] = [-1] * len(max_arcs)
    for a in max_arcs:
        arcs_by_sigma[sigma(T.arcs[a].max_index - 1)] = a

    jm_by_image: list[int] = [0] * L
    for mem, v in rep.j_minus_by_slice.items():
        jm_by_image[upsilon(mem)] = v

    seq: list[int] = []
    placed: set[int] = set()
    next_max = 0  # pointer into arcs_by_sigma

    upsilon_inv = upsilon.inverse()
    for t in range(L):
        mem = upsilon_inv(t)
        k = pair_of_coh[mem]
        pair = (k - 1, k) if s[mem] == "+" else (k, k - 1)
        J = jm_by_image[t]
        # maxima with sigma value < J go strictly before the block, except
        # when one of them is the block's first arc
        while next_max < J:
            a = arcs_by_sigma[next_max]
            if a == pair[0]:
                break
            if a == pair[1]:
                raise DeterminationError(
                    "5'",
                    f"maximum arc {a} must precede coherent image {t} but is "
                    "its trailing boundary arc",
                )
            if a in placed:
                raise DeterminationError("2", f"maximum arc {a} placed twice")
            seq.append(a)
            placed.add(a)
            next_max += 1
        for pos_in_block, a in enumerate(pair):
            is_max = T.arcs[a].max_index is not None
            if seq and seq[-1] == a:
                # arc shared with the previous block; 5' still constrains it
                if is_max:
                    v = sigma(T.arcs[a].max_index - 1)
                    if pos_in_block == 0 and v >= J:
                        raise DeterminationError("5'", f"maximum arc {a} misplaced")
                    if pos_in_block == 1 and v < J:
                        raise DeterminationError("5'", f"maximum arc {a} misplaced")
                continue
            if a in placed:
                raise DeterminationError(
                    "3", f"arc {a} would appear twice in the image order"
                )
            if is_max:
                v = sigma(T.arcs[a].max_index - 1)
                if v != next_max or arcs_by_sigma[v] != a:
                    raise DeterminationError(
                        "2", f"maximum arc {a} out of sigma order"
                    )
                if pos_in_block == 0 and v >= J:
                    raise DeterminationError("5'", f"maximum arc {a} misplaced")
                if pos_in_block == 1 and v < J:
                    raise DeterminationError("5'", f"maximum arc {a} misplaced")
                next_max += 1
            seq.append(a)
            placed.add(a)
        if next_max < J:
            raise DeterminationError(
                "5'", f"cannot place required maxima before coherent image {t}"
            )

    while next_max < len(arcs_by_sigma):
        a = arcs_by_sigma[next_max]
        if a in placed:
            raise DeterminationError("2", f"maximum arc {a} placed twice")
        seq.append(a)
        placed.add(a)
        next_max += 1

    for boundary, where in ((0, "first"), (n - 1, "last")):
        if boundary in placed:
            idx = seq.index(boundary)
            want = 0 if where == "first" else len(seq) - 1
            if idx != want:
                raise DeterminationError(
                    "1", f"boundary arc {boundary} is not {where} in the image"
                )
        else:
            if where == "first":
                seq.insert(0, boundary)
            else:
                seq.append(boundary)
            placed.add(boundary)

    if len(seq) != n:
        missing = [a for a in range(n) if a not in placed]
        raise DeterminationError("varpi", f"arcs {missing} were never placed")
    images = [0] * n
    for position, a in enumerate(seq):
        images[a] = position
    return Permutation(images)


# ---------------------------------------------------------------------------
# image structure (shared by admissibility and realization)


@dataclass(frozen=True)
class ImagePair:
    kind: str  # primary | twin | transverse | gap
    level: Fraction  # consecutive tangency order of the image arcs
    preimages: tuple[int, int]
    slice_idx: Optional[int] = None  # pizza slice of Lambda for primary pairs
    coherent_number: Optional[int] = None


@dataclass(frozen=True)
class ImageStructure:
    varpi: Permutation
    q_img: tuple[Ext, ...]
    pairs: tuple[ImagePair, ...]
    lam_prime: AbstractPizza
    # image arc index -> zone index of lam_prime
    zone_of_image: tuple[int, ...]
    # image arc indices to rebase onto a neighbour (degraded twin images),
    # mapping image index -> (carrier image index, level)
    rebased: tuple[tuple[int, int, Fraction], ...]


def _valley(T: TwinPrePizza, i: int, j: int) -> Fraction:
    """Minimal order of the function along the triangle between arcs i and j:
    min of the arc orders and of the gap-pair dips between them."""
    lo, hi = sorted((i, j))
    best = min(T.arcs[k].q for k in range(lo, hi + 1))
    for k in range(lo + 1, hi + 1):
        if T.pair_class[k - 1] == PAIR_GAP:
            best = min(best, Ext(T.betahat[k - 1]))
    assert not best.is_inf
    return best.frac


def build_image_structure(
    P: AbstractPizza,
    sigma: Permutation,
    upsilon: Permutation,
    s: Sequence[str],
    twin: TwinPrePizza | None = None,
    varpi: Permutation | None = None,
) -> ImageStructure:
    """Derive the opposite twin pre-pizza implied by (P, sigma, upsilon, s):
    image arc orders, consecutive levels, pair classes, the rebuilt minimal
    pizza, and which twin images dissolve into a neighbour."""
    T = twin if twin is not None else build_twin_pre_pizza(P)
    pi = varpi if varpi is not None else compute_varpi(P, sigma, upsilon, s, T)
    n = T.n_arcs
    inv = pi.inverse()
    q_img = tuple(T.arcs[inv(k)].q for k in range(n))

    primary_img: dict[int, int] = {}  # max(image pair position) -> pair index k
    for k in T.primary_pairs():
        a, b = pi(k - 1), pi(k)
        if abs(a - b) != 1:
            raise DeterminationError(
                "4", f"primary pair {k} maps to non-adjacent positions {a},{b}"
            )
        primary_img[max(a, b)] = k

    pairs: list[ImagePair] = []
    for kp in range(1, n):
        i, j = inv(kp - 1), inv(kp)
        if kp in primary_img:
            k = primary_img[kp]
            pairs.append(
                ImagePair(
                    kind=PAIR_PRIMARY,
                    level=T.betahat[k - 1],
                    preimages=(i, j),
                    slice_idx=T.primary_slice[k - 1],
                    coherent_number=T.coherent_number[k - 1],
                )
            )
            continue
        level = _valley(T, i, j)
        qa, qb = q_img[kp - 1], q_img[kp]
        if qa == qb == Ext(level):
            kind = PAIR_TWIN
        elif ext_min([qa, qb]) == Ext(level):
            kind = PAIR_TRANSVERSE
        elif Ext(level) < ext_min([qa, qb]):
            kind = PAIR_GAP
        else:
            raise DeterminationError(
                "image", f"image pair {kp} has level {level} above an end order"
            )
        pairs.append(ImagePair(kind=kind, level=level, preimages=(i, j)))

    lam_prime, zone_of_image = _assemble_image_pizza(P, T, q_img, pairs)
    rebased = _twin_degradations(T, pi, q_img, pairs)
    return ImageStructure(
        varpi=pi,
        q_img=q_img,
        pairs=tuple(pairs),
        lam_prime=lam_prime,
        zone_of_image=zone_of_image,
        rebased=tuple(rebased),
    )


def _assemble_image_pizza(
    P: AbstractPizza,
    T: TwinPrePizza,
    q_img: tuple[Ext, ...],
    pairs: list[ImagePair],
) -> tuple[AbstractPizza, tuple[int, ...]]:
    """Minimal pizza of the image side: twin pairs merge into single zones,
    gap pairs contribute two transverse slices around a minimum zone."""
    n = len(q_img)
    q: list[Ext] = [q_img[0]]
    beta: list[Fraction] = []
    mu: list[Width] = []
    zone_of_image = [0]
    ident = AffineMap(Fraction(1), Fraction(0))
    for kp in range(1, n):
        pair = pairs[kp - 1]
        if pair.kind == PAIR_TWIN:
            if q_img[kp] != q[-1]:
                raise DeterminationError(
                    "image", f"twin image pair {kp} with unequal orders"
                )
            zone_of_image.append(len(q) - 1)
            continue
        if pair.kind == PAIR_PRIMARY:
            assert pair.slice_idx is not None
            q.append(q_img[kp])
            beta.append(P.beta[pair.slice_idx - 1])
            mu.append(P.mu[pair.slice_idx - 1])
        elif pair.kind == PAIR_TRANSVERSE:
            q.append(q_img[kp])
            beta.append(pair.level)
            mu.append(ident)
        else:  # gap
            q.append(Ext(pair.level))
            beta.append(pair.level)
            mu.append(ident)
            q.append(q_img[kp])
            beta.append(pair.level)
            mu.append(ident)
        zone_of_image.append(len(q) - 1)
    lam_prime = AbstractPizza(q, beta, mu)
    return lam_prime, tuple(zone_of_image)


def _twin_degradations(
    T: TwinPrePizza,
    pi: Permutation,
    q_img: tuple[Ext, ...],
    pairs: list[ImagePair],
) -> list[tuple[int, int, Fraction]]:
    """For each domain twin pair whose images must sit closer than the twin
    level, pick the image arc that dissolves into its outer neighbour and
    return (image index, carrier image index, level)."""
    n = T.n_arcs
    out: list[tuple[int, int, Fraction]] = []
    for k in T.twin_pairs():
        h = T.betahat[k - 1]
        a, b = sorted((pi(k - 1), pi(k)))
        required = min(
            (pairs[kp - 1].level for kp in range(a + 1, b + 1)), default=None
        )
        if required is None or Ext(required) == Ext(h):
            continue
        if Ext(required) > Ext(h):
            raise DeterminationError(
                "image", f"twin pair {k} images forced above the twin level"
            )
        # dissolve the side whose first step toward the partner sits at the
        # twin level; prefer the left image on ties
        step_a = pairs[a].level  # pair (a, a+1)
        step_b = pairs[b - 1].level  # pair (b-1, b)
        if Ext(step_a) >= Ext(step_b):
            out.append((a, a + 1, step_a))
        else:
            out.append((b, b - 1, step_b))
    return out
