"""Exact scalars for the exponent field: rationals extended with infinity,
affine width maps, monomial series in one parameter and monomial arcs.

Everything here is immutable and exact (``fractions.Fraction`` throughout);
there is no floating point except in the ``*_float`` evaluation helpers.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

RatLike = Union[int, str, Fraction, "Ext"]


class ExtArithmeticError(ArithmeticError):
    """Raised for undefined operations such as inf - inf."""


class DimensionError(ValueError):
    """Raised when arcs of different ambient dimension are combined."""


@functools.total_ordering
class Ext:
    """A rational number or the distinguished element ``inf``.

    Finite values are stored in lowest terms (Fraction invariant); the order
    is total with every finite value below ``inf``.
    """

    __slots__ = ("_v",)

    def __init__(self, value: Fraction | int | None):
        if value is None:
            object.__setattr__(self, "_v", None)
        else:
            object.__setattr__(self, "_v", Fraction(value))

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("Ext is immutable")

    @staticmethod
    def of(x: RatLike) -> "Ext":
        if isinstance(x, Ext):
            return x
        if isinstance(x, str):
            s = x.strip()
            if s in ("inf", "Inf", "INF", "oo"):
                return INF
            return Ext(Fraction(s))
        return Ext(Fraction(x))

    @property
    def is_inf(self) -> bool:
        return self._v is None

    @property
    def frac(self) -> Fraction:
        if self._v is None:
            raise ExtArithmeticError("infinite value has no finite part")
        return self._v

    def __eq__(self, other) -> bool:
        if isinstance(other, Ext):
            return self._v == other._v
        if isinstance(other, (int, Fraction)):
            return self._v == Fraction(other)
        return NotImplemented

    def __lt__(self, other) -> bool:
        other = Ext.of(other)
        if self._v is None:
            return False
        if other._v is None:
            return True
        return self._v < other._v

    def __hash__(self):
        return hash(self._v)

    def __add__(self, other: RatLike) -> "Ext":
        other = Ext.of(other)
        if self._v is None or other._v is None:
            return INF
        return Ext(self._v + other._v)

    def __sub__(self, other: RatLike) -> "Ext":
        other = Ext.of(other)
        if self._v is None and other._v is None:
            raise ExtArithmeticError("inf - inf is undefined")
        if self._v is None:
            return INF
        if other._v is None:
            raise ExtArithmeticError("finite - inf is undefined here")
        return Ext(self._v - other._v)

    def __str__(self) -> str:
        return "inf" if self._v is None else str(self._v)

    def __repr__(self) -> str:
        return f"Ext({self})"


INF = Ext(None)
ONE = Ext(1)


def ext_min(values: Iterable[RatLike]) -> Ext:
    vals = [Ext.of(v) for v in values]
    if not vals:
        return INF
    return min(vals)


def ext_max(values: Iterable[RatLike]) -> Ext:
    vals = [Ext.of(v) for v in values]
    if not vals:
        raise ValueError("ext_max of empty sequence")
    return max(vals)


def parse_rat(s: str | int | Fraction) -> Fraction:
    if isinstance(s, str):
        return Fraction(s.strip())
    return Fraction(s)


def fmt_rat(x: Fraction) -> str:
    return str(x)


def dyadic(k: int) -> Fraction:
    """Positive dyadic coefficient 2**-k; used everywhere a fresh
    non-cancelling coefficient is needed."""
    return Fraction(1, 2 ** k)


class DegenerateInterpolation(ValueError):
    pass


@dataclass(frozen=True)
class AffineMap:
    """The affine map q -> a*q + b on an exponent interval."""

    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    def __call__(self, q: RatLike) -> Ext:
        q = Ext.of(q)
        if q.is_inf:
            if self.a > 0:
                return INF
            raise ExtArithmeticError(
                "affine map with non-positive slope evaluated at inf"
            )
        return Ext(self.a * q.frac + self.b)

    @property
    def is_identity(self) -> bool:
        return self.a == 1 and self.b == 0

    @property
    def is_constant(self) -> bool:
        return self.a == 0

    def preimage(self, w: RatLike) -> Ext:
        w = Ext.of(w)
        if self.a == 0:
            raise DegenerateInterpolation("constant map has no preimage")
        if w.is_inf:
            if self.a > 0:
                return INF
            raise ExtArithmeticError("negative slope cannot reach inf")
        return Ext((w.frac - self.b) / self.a)

    @staticmethod
    def interpolate(q1: RatLike, m1: RatLike, q2: RatLike, m2: RatLike) -> "AffineMap":
        """The unique affine map through (q1, m1) and (q2, m2).

        (q2, m2) may be (inf, inf); the resulting slope must then be positive,
        which for a single finite anchor means slope 1 through (q1, m1).
        """
        q1, m1, q2, m2 = (Ext.of(x) for x in (q1, m1, q2, m2))
        if q1 == q2:
            raise DegenerateInterpolation(f"equal abscissae q1 = q2 = {q1}")
        if q1.is_inf:
            q1, m1, q2, m2 = q2, m2, q1, m1
        if q2.is_inf:
            if not m2.is_inf:
                raise DegenerateInterpolation("finite value prescribed at inf")
            return AffineMap(Fraction(1), m1.frac - q1.frac)
        if m1.is_inf or m2.is_inf:
            raise DegenerateInterpolation("infinite value at a finite point")
        a = (m2.frac - m1.frac) / (q2.frac - q1.frac)
        b = m1.frac - a * q1.frac
        return AffineMap(a, b)


class MonomialSeries:
    """A finite sum of monomials c * u**e with rational exponents and
    nonzero rational coefficients, stored sorted by exponent."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Fraction, Fraction] | Iterable[tuple]):
        if isinstance(terms, Mapping):
            items = terms.items()
        else:
            items = terms
        acc: dict[Fraction, Fraction] = {}
        for e, c in items:
            e = Fraction(e)
            c = Fraction(c)
            acc[e] = acc.get(e, Fraction(0)) + c
        cleaned = tuple(sorted((e, c) for e, c in acc.items() if c != 0))
        object.__setattr__(self, "terms", cleaned)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("MonomialSeries is immutable")

    @staticmethod
    def zero() -> "MonomialSeries":
        return MonomialSeries(())

    @staticmethod
    def monomial(coeff: RatLike, exp: RatLike) -> "MonomialSeries":
        return MonomialSeries([(Fraction(exp), Fraction(coeff))])

    @staticmethod
    def u() -> "MonomialSeries":
        return MonomialSeries([(Fraction(1), Fraction(1))])

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> Ext:
        """Least exponent with nonzero coefficient; inf for the zero series."""
        if not self.terms:
            return INF
        return Ext(self.terms[0][0])

    def leading(self) -> tuple[Fraction, Fraction] | None:
        return self.terms[0] if self.terms else None

    def __add__(self, other: "MonomialSeries") -> "MonomialSeries":
        return MonomialSeries(list(self.terms) + list(other.terms))

    def __sub__(self, other: "MonomialSeries") -> "MonomialSeries":
        return MonomialSeries(
            list(self.terms) + [(e, -c) for e, c in other.terms]
        )

    def __neg__(self) -> "MonomialSeries":
        return MonomialSeries([(e, -c) for e, c in self.terms])

    def scale(self, c: RatLike) -> "MonomialSeries":
        c = Fraction(c)
        return MonomialSeries([(e, c * k) for e, k in self.terms])

    def times_monomial(self, coeff: RatLike, exp: RatLike) -> "MonomialSeries":
        coeff = Fraction(coeff)
        exp = Fraction(exp)
        return MonomialSeries([(e + exp, c * coeff) for e, c in self.terms])

    def compare(self, other: "MonomialSeries") -> int:
        """Sign of (self - other) near u = 0+."""
        d = self - other
        lead = d.leading()
        if lead is None:
            return 0
        return 1 if lead[1] > 0 else -1

    def eval_float(self, u: float) -> float:
        return sum(float(c) * u ** float(e) for e, c in self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, MonomialSeries) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*u^{e}" for e, c in self.terms)


U_SERIES = MonomialSeries.u()


class MonoArc:
    """A tuple of monomial series in the common parameter u.

    Coordinate 0 is exactly u itself, so the arc is parameterized by its
    first coordinate and |arc(u)| = u * (1 + o(1)).
    """

    __slots__ = ("coords",)

    def __init__(self, coords: Sequence[MonomialSeries]):
        coords = tuple(coords)
        if not coords or coords[0] != U_SERIES:
            raise ValueError("coordinate 0 of a MonoArc must be the series u")
        for s in coords[1:]:
            o = s.order()
            if not o.is_inf and o < ONE:
                raise ValueError(f"coordinate order {o} < 1")
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("MonoArc is immutable")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def pad(self, dim: int) -> "MonoArc":
        if dim < self.dim:
            raise DimensionError("cannot shrink an arc")
        z = MonomialSeries.zero()
        return MonoArc(self.coords + (z,) * (dim - self.dim))

    def with_coord(self, index: int, series: MonomialSeries) -> "MonoArc":
        if index == 0:
            raise ValueError("coordinate 0 is fixed to u")
        coords = list(self.coords)
        while len(coords) <= index:
            coords.append(MonomialSeries.zero())
        coords[index] = series
        return MonoArc(coords)

    def eval_float(self, u: float) -> tuple[float, ...]:
        return tuple(s.eval_float(u) for s in self.coords)

    def __eq__(self, other) -> bool:
        return isinstance(other, MonoArc) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self) -> str:
        return f"MonoArc({list(self.coords)!r})"


def plane_arc(v: MonomialSeries) -> MonoArc:
    """The arc (u, v(u)) in the base plane."""
    return MonoArc((U_SERIES, v))


def arc_tord(a: MonoArc, b: MonoArc) -> Ext:
    """Tangency order of two arcs: min over coordinates of the order of the
    coordinate difference; inf iff the arcs coincide."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch {a.dim} != {b.dim}")
    best = INF
    for sa, sb in zip(a.coords, b.coords):
        o = (sa - sb).order()
        if o < best:
            best = o
    return best


def series_order(s: MonomialSeries) -> Ext:
    return s.order()
