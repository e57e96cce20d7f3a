"""Square-free interaction terms and their hierarchical closure.

A term is a monomial ``x_{i1} * ... * x_{id}`` with distinct variables,
stored as a bit mask over ``p`` variables.  Indices are 0-based internally
and 1-based in every user-facing label or file.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator, Sequence

from .homology import SimplicialComplex

MAX_VARIABLES = 64


@dataclass(frozen=True)
class Term:
    """One square-free monomial, ``mask`` bit ``i`` set iff ``x_{i+1}`` occurs."""

    mask: int
    p: int

    def __post_init__(self) -> None:
        if not 1 <= self.p <= MAX_VARIABLES:
            raise ValueError(f"p must be in [1, {MAX_VARIABLES}], got {self.p}")
        if self.mask <= 0:
            raise ValueError("a term needs at least one variable (no intercept)")
        if self.mask >> self.p:
            raise ValueError(f"term {self.mask:#b} uses a variable index >= p={self.p}")

    @classmethod
    def from_indices(cls, indices: Iterable[int], p: int) -> "Term":
        """Build from 0-based variable indices."""
        mask = 0
        for i in indices:
            if i < 0:
                raise ValueError(f"negative variable index {i}")
            mask |= 1 << i
        return cls(mask, p)

    @property
    def indices(self) -> tuple[int, ...]:
        m, out, i = self.mask, [], 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return tuple(out)

    @property
    def degree(self) -> int:
        return bin(self.mask).count("1")

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        return (self.degree, self.indices)

    def divisors(self) -> Iterator["Term"]:
        """All nonempty sub-terms, including the term itself."""
        idx = self.indices
        for d in range(1, len(idx) + 1):
            for sub in combinations(idx, d):
                yield Term.from_indices(sub, self.p)

    def label(self) -> str:
        """Compact label: ``12`` for x1*x2, ``1:12`` once an index exceeds 9."""
        one_based = [i + 1 for i in self.indices]
        sep = "" if max(one_based) < 10 else ":"
        return sep.join(str(i) for i in one_based)

    def name(self, variables: Sequence[str] | None = None) -> str:
        if variables is None:
            return "*".join(f"x{i + 1}" for i in self.indices)
        return "*".join(variables[i] for i in self.indices)

    def __repr__(self) -> str:
        return f"Term({self.label()})"


@dataclass(frozen=True)
class ModelSupport:
    """An ordered, duplicate-free set of terms over ``p`` variables.

    The canonical order is degree-major, then lexicographic on indices; it is
    also the column order of the design matrix.
    """

    terms: tuple[Term, ...]
    p: int

    def __post_init__(self) -> None:
        for t in self.terms:
            if t.p != self.p:
                raise ValueError(f"{t!r} built for p={t.p}, support has p={self.p}")
        canon = tuple(sorted(set(self.terms), key=Term.sort_key))
        object.__setattr__(self, "terms", canon)

    @classmethod
    def from_indices(cls, index_lists: Iterable[Iterable[int]], p: int) -> "ModelSupport":
        """Build from 0-based index lists, e.g. ``[[0], [0, 1]]`` for {x1, x1x2}."""
        return cls(tuple(Term.from_indices(ix, p) for ix in index_lists), p)

    @classmethod
    def from_labels(cls, labels: Iterable[Sequence[int]], p: int) -> "ModelSupport":
        """Build from 1-based index lists, e.g. ``[(1,), (1, 2)]``."""
        return cls.from_indices(([i - 1 for i in lab] for lab in labels), p)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self._set

    @cached_property
    def _set(self) -> frozenset[Term]:
        return frozenset(self.terms)

    def issubset(self, other: "ModelSupport") -> bool:
        return self._set <= other._set

    def index_of(self, term: Term) -> int:
        return self.terms.index(term)

    @property
    def max_degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def subset(self, mask: Iterable[bool]) -> "ModelSupport":
        """Terms whose position in canonical order is flagged in ``mask``."""
        return ModelSupport(tuple(t for t, keep in zip(self.terms, mask) if keep), self.p)

    def labels(self) -> list[str]:
        return [t.label() for t in self.terms]

    def index_lists(self) -> list[list[int]]:
        """1-based index lists, the serialised form used in reports."""
        return [[i + 1 for i in t.indices] for t in self.terms]

    def is_hierarchical(self) -> bool:
        have = self._set
        return all(d in have for t in self.terms for d in t.divisors())

    def __repr__(self) -> str:
        return "{" + ",".join(self.labels()) + "}"


def enumerate_candidate_terms(p: int, k: int) -> ModelSupport:
    """Every square-free term of degree 1..k in ``p`` variables."""
    if not 1 <= k <= p:
        raise ValueError(f"need 1 <= k <= p, got k={k}, p={p}")
    terms = [
        Term.from_indices(c, p) for d in range(1, k + 1) for c in combinations(range(p), d)
    ]
    return ModelSupport(tuple(terms), p)


def hierarchical_closure(s: ModelSupport) -> ModelSupport:
    """Smallest superset of ``s`` closed under taking nonempty sub-terms."""
    closed: set[Term] = set()
    for t in s.terms:
        if t not in closed:
            closed.update(t.divisors())
    return ModelSupport(tuple(closed), s.p)


def to_simplicial_complex(s: ModelSupport) -> SimplicialComplex:
    """Map a hierarchical support to its complex: a degree-(d+1) term is a d-simplex."""
    if not s.is_hierarchical():
        missing = sorted(
            {d for t in s.terms for d in t.divisors()} - set(s.terms), key=Term.sort_key
        )
        raise ValueError(
            "support is not hierarchical (missing " + ",".join(t.label() for t in missing)
            + "); apply hierarchical_closure first"
        )
    return SimplicialComplex((t.indices for t in s.terms), n_vertices=s.p)


def complex_to_support(c: SimplicialComplex, p: int) -> ModelSupport:
    """Read a complex's faces back as terms."""
    return ModelSupport.from_indices(c.simplices(), p)


def parse_term_file(text: str, p: int | None = None) -> ModelSupport:
    """Parse the term-list text format.

    One term per line as 1-based variable indices separated by whitespace;
    blank lines and lines starting with ``#`` are ignored.  ``p`` defaults to
    the largest index seen.  Raises ``TermParseError`` carrying the line number.
    """
    rows: list[tuple[int, list[int]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            idx = [int(tok) for tok in line.split()]
        except ValueError:
            raise TermParseError(lineno, f"non-integer token in {line!r}") from None
        if any(i < 1 for i in idx):
            raise TermParseError(lineno, "variable indices are 1-based and positive")
        if len(set(idx)) != len(idx):
            raise TermParseError(lineno, "repeated variable (terms are square-free)")
        rows.append((lineno, idx))
    seen = max((max(ix) for _, ix in rows), default=1)
    if p is None:
        p = seen
    elif seen > p:
        raise TermParseError(next(n for n, ix in rows if max(ix) > p), f"index exceeds p={p}")
    if p > MAX_VARIABLES:
        raise TermParseError(rows[-1][0], f"at most {MAX_VARIABLES} variables supported")
    return ModelSupport.from_labels((ix for _, ix in rows), p)


class TermParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno
