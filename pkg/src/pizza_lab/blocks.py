"""Permutations, their blocks and block-inequality checks.

A segment of {0..n-1} is a set of consecutive indices; a block of a
permutation is a segment whose image is again a segment.  Minimal blocks
are computed by iterating the segment-hull closure; an exhaustive segment
scan is kept as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Ext


class Permutation:
    """A permutation of {0..n-1}, stored as its image tuple."""

    __slots__ = ("images",)

    def __init__(self, images: Sequence[int]):
        images = tuple(int(i) for i in images)
        n = len(images)
        if sorted(images) != list(range(n)):
            raise ValueError(f"not a permutation of 0..{n - 1}: {images}")
        object.__setattr__(self, "images", images)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Permutation is immutable")

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(range(n))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(inv)

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def __repr__(self) -> str:
        return f"Permutation({list(self.images)})"


Segment = tuple[int, int]  # inclusive (lo, hi)


def _hull(indices: Iterable[int]) -> Segment:
    xs = list(indices)
    return (min(xs), max(xs))


def is_block(chi: Permutation, seg: Segment) -> bool:
    """True iff the image of the segment is a set of consecutive indices."""
    lo, hi = seg
    if not (0 <= lo <= hi < chi.n):
        raise ValueError(f"segment {seg} out of range for n = {chi.n}")
    img = [chi(i) for i in range(lo, hi + 1)]
    return max(img) - min(img) == hi - lo


def minimal_block(chi: Permutation, J: Iterable[int]) -> Segment:
    """Smallest segment containing J whose image is a segment.

    Computed as the fixed point of J -> chi^-1(hull(chi(hull(J)))); each
    step grows the set or stabilizes, so at most n iterations are needed.
    """
    J = list(J)
    if not J:
        raise ValueError("minimal_block of empty index set")
    inv = chi.inverse()
    lo, hi = _hull(J)
    while True:
        img_lo, img_hi = _hull(chi(i) for i in range(lo, hi + 1))
        new_lo, new_hi = _hull(inv(j) for j in range(img_lo, img_hi + 1))
        if (new_lo, new_hi) == (lo, hi):
            return (lo, hi)
        lo, hi = new_lo, new_hi


def brute_minimal_block(chi: Permutation, J: Iterable[int]) -> Segment:
    """Exhaustive-scan oracle: the smallest segment-block containing J."""
    J = list(J)
    lo0, hi0 = _hull(J)
    best: Segment | None = None
    for lo in range(lo0, -1, -1):
        for hi in range(hi0, chi.n):
            if is_block(chi, (lo, hi)):
                if best is None or hi - lo < best[1] - best[0]:
                    best = (lo, hi)
    assert best is not None  # [0, n-1] is always a block
    return best


def all_blocks(chi: Permutation) -> list[Segment]:
    return [
        (lo, hi)
        for lo in range(chi.n)
        for hi in range(lo, chi.n)
        if is_block(chi, (lo, hi))
    ]


@dataclass(frozen=True)
class BlockViolation:
    i: int
    j: int
    k: int
    l: int
    value: Ext
    bound: Ext

    def __str__(self) -> str:
        return (
            f"tord({self.i},{self.j}) = {self.value} > "
            f"tord({self.k},{self.l}) = {self.bound} inside block B_{self.i}{self.j}"
        )


def check_block_inequalities(
    chi: Permutation,
    tords: Sequence[Sequence[Ext]],
    skip_pairs: frozenset[tuple[int, int]] = frozenset(),
) -> list[BlockViolation]:
    """All violations of the block inequalities of chi against an
    ultrametric table: for i != j and {k, l} inside the minimal block of
    {i, j}, tords[i][j] <= tords[k][l] must hold.

    Pairs listed in ``skip_pairs`` (as ordered (i, j) with i < j) are not
    used as the outer {i, j}.
    """
    n = chi.n
    if any(len(row) != n for row in tords) or len(tords) != n:
        raise ValueError("tord table must be n x n")
    out: list[BlockViolation] = []
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in skip_pairs:
                continue
            lo, hi = minimal_block(chi, (i, j))
            tij = tords[i][j]
            for k in range(lo, hi + 1):
                for l in range(k + 1, hi + 1):
                    if tords[k][l] < tij:
                        out.append(BlockViolation(i, j, k, l, tij, tords[k][l]))
    return out


def permuted_table_is_chain(
    chi: Permutation, tords: Sequence[Sequence[Ext]]
) -> bool:
    """Fast necessary-and-sufficient admissibility filter: the table pulled
    back through chi^-1 must satisfy the ordered min-chain rule.

    Equivalence with the literal block inequalities is asserted by tests on
    small n; the literal check remains the authoritative verdict.
    """
    n = chi.n
    inv = chi.inverse()
    # t_img[a][b] for image positions a < b
    row = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            row[a][b] = tords[inv(a)][inv(b)]
    for a in range(n):
        for b in range(a + 2, n):
            if row[a][b] != min(row[a][b - 1], row[b - 1][b]):
                return False
    return True
