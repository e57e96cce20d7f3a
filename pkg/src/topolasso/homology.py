"""Simplicial homology with Z2 coefficients.

Boundary matrices are stored as bit-packed rows (one Python ``int`` per
row, bit ``j`` set for column ``j``), so row and column additions are
word-wide XORs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable

import numpy as np

Simplex = tuple[int, ...]


class SimplicialComplex:
    """A finite abstract simplicial complex.

    Parameters
    ----------
    simplices : iterable of vertex tuples
        Any generating family; faces of every member are added so the result
        is closed under nonempty subsets.
    n_vertices : int, optional
        Size of the vertex universe (vertices are ``0..n_vertices-1``).
        Defaults to one more than the largest vertex used.
    """

    def __init__(self, simplices: Iterable[Iterable[int]] = (), n_vertices: int | None = None):
        faces: set[Simplex] = set()
        for s in simplices:
            top = tuple(sorted(set(s)))
            if not top:
                continue
            if top in faces:
                continue
            for d in range(1, len(top) + 1):
                faces.update(combinations(top, d))
        by_dim: dict[int, list[Simplex]] = {}
        for f in faces:
            by_dim.setdefault(len(f) - 1, []).append(f)
        self._by_dim = {d: tuple(sorted(fs)) for d, fs in sorted(by_dim.items())}
        used = max((f[-1] for f in faces), default=-1) + 1
        self.n_vertices = used if n_vertices is None else n_vertices
        if self.n_vertices < used:
            raise ValueError(f"vertex {used - 1} outside universe of {n_vertices}")

    @property
    def dim(self) -> int:
        """Largest simplex dimension; -1 for the void complex."""
        return max(self._by_dim, default=-1)

    def faces(self, d: int) -> tuple[Simplex, ...]:
        """The d-simplices in lexicographic order."""
        return self._by_dim.get(d, ())

    def simplices(self) -> list[Simplex]:
        return [f for d in self._by_dim for f in self._by_dim[d]]

    def count(self, d: int) -> int:
        return len(self.faces(d))

    def f_vector(self) -> tuple[int, ...]:
        return tuple(self.count(d) for d in range(self.dim + 1))

    def is_closed(self) -> bool:
        have = set(self.simplices())
        return all(
            sub in have
            for s in have
            for r in range(1, len(s))
            for sub in combinations(s, r)
        )

    def __contains__(self, simplex: Iterable[int]) -> bool:
        s = tuple(sorted(simplex))
        return s in set(self.faces(len(s) - 1))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SimplicialComplex) and self._by_dim == other._by_dim

    def __repr__(self) -> str:
        return f"SimplicialComplex(f_vector={self.f_vector()}, n_vertices={self.n_vertices})"


@dataclass(frozen=True)
class BoundaryMatrix:
    """Z2 matrix of the boundary map from d-chains to (d-1)-chains.

    ``rows[i]`` has bit ``j`` set iff ``row_labels[i]`` is a face of
    ``col_labels[j]``.
    """

    d: int
    rows: tuple[int, ...]
    row_labels: tuple[Simplex, ...]
    col_labels: tuple[Simplex, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.row_labels), len(self.col_labels))

    def to_dense(self) -> np.ndarray:
        m, n = self.shape
        out = np.zeros((m, n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(n):
                if (r >> j) & 1:
                    out[i, j] = 1
        return out

    @classmethod
    def from_dense(cls, a: np.ndarray, d: int = 1) -> "BoundaryMatrix":
        """Wrap an arbitrary 0/1 matrix (labels are placeholders)."""
        a = np.asarray(a) % 2
        rows = tuple(
            sum(1 << int(j) for j in np.flatnonzero(row)) for row in a
        )
        return cls(d, rows, tuple((i,) for i in range(a.shape[0])),
                   tuple((j,) for j in range(a.shape[1])))


def boundary_matrix(c: SimplicialComplex, d: int) -> BoundaryMatrix:
    """Boundary matrix of ∂_d; an m_{d-1} x 0 matrix when there are no d-simplices."""
    if d < 1:
        raise ValueError(f"boundary matrices exist for d >= 1, got {d}")
    rows_lab = c.faces(d - 1)
    cols_lab = c.faces(d)
    row_of = {s: i for i, s in enumerate(rows_lab)}
    rows = [0] * len(rows_lab)
    for j, s in enumerate(cols_lab):
        for k in range(len(s)):
            rows[row_of[s[:k] + s[k + 1:]]] |= 1 << j
    return BoundaryMatrix(d, tuple(rows), rows_lab, cols_lab)


def _swap_bits(x: int, a: int, b: int) -> int:
    if ((x >> a) ^ (x >> b)) & 1:
        x ^= (1 << a) | (1 << b)
    return x


def z2_reduce(m: BoundaryMatrix) -> int:
    """Rank over Z2 by reduction to diagonal form.

    At each step the first 1 in row-major order within the trailing
    submatrix is swapped to the corner, then its row and column are cleared
    by column and row additions.  Works on a private copy.
    """
    rows = list(m.rows)
    n_rows, n_cols = m.shape
    x = 0
    while x < min(n_rows, n_cols):
        tail = ~((1 << x) - 1)
        piv = next(((i, rows[i] & tail) for i in range(x, n_rows) if rows[i] & tail), None)
        if piv is None:
            break
        l, bits = piv
        k = (bits & -bits).bit_length() - 1
        rows[x], rows[l] = rows[l], rows[x]
        if k != x:
            rows = [_swap_bits(r, x, k) for r in rows]
        # column additions: clear row x to the right of the pivot
        extra = rows[x] & ~(1 << x) & tail
        if extra:
            for i in range(n_rows):
                if (rows[i] >> x) & 1:
                    rows[i] ^= extra
        # row additions: clear column x below the pivot
        for i in range(x + 1, n_rows):
            if (rows[i] >> x) & 1:
                rows[i] ^= rows[x]
        x += 1
    return x


@dataclass(frozen=True)
class HomologySummary:
    """Per-dimension simplex counts and ranks behind a Betti vector."""

    m: tuple[int, ...]
    z: tuple[int, ...]
    b: tuple[int, ...]
    betti: tuple[int, ...]
    ranks: tuple[int, ...] = field(default=())

    @property
    def max_dim(self) -> int:
        return len(self.betti) - 1


def betti_numbers(
    c: SimplicialComplex, max_dim: int | None = None
) -> tuple[tuple[int, ...], HomologySummary]:
    """Betti numbers beta_0..beta_max_dim of ``c`` over Z2.

    ``max_dim`` defaults to the complex's dimension; entries above it are
    zero-padded.  The void complex gives all zeros.
    """
    top = c.dim
    if max_dim is None:
        max_dim = max(top, 0)
    # rank of ∂_d for d = 1..top (index 0 holds ∂_0, the zero map)
    ranks = [0] + [z2_reduce(boundary_matrix(c, d)) for d in range(1, top + 1)]
    span = max(max_dim, top) + 1
    m = [c.count(d) for d in range(span)]
    z = [m[d] - (ranks[d] if d <= top else 0) for d in range(span)]
    b = [ranks[d + 1] if d + 1 <= top else 0 for d in range(span)]
    betti = [z[d] - b[d] for d in range(span)]
    summary = HomologySummary(tuple(m), tuple(z), tuple(b), tuple(betti), tuple(ranks))
    return tuple(betti[: max_dim + 1]), summary


def d_closed_complex(k: int, m: int) -> SimplicialComplex:
    """The complex on ``m`` vertices whose maximal faces are all k-simplices."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if m < k + 2:
        raise ValueError(f"need m >= k + 2 vertices, got k={k}, m={m}")
    return SimplicialComplex(combinations(range(m), k + 1), n_vertices=m)


def full_simplex(n_vertices: int) -> SimplicialComplex:
    """The solid (n_vertices - 1)-simplex with all of its faces."""
    return SimplicialComplex([tuple(range(n_vertices))], n_vertices=n_vertices)


def expected_independent_cycles(k: int, d: int) -> int:
    """Closed-form count C(d+1, k+1) of independent k-cycles on d+2 vertices."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if d < k:
        raise ValueError(f"need d >= k, got k={k}, d={d}")
    return comb(d + 1, k + 1)
