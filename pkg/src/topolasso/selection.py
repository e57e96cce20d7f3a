"""Compound criterion, MAIC and the three-stage selection along a LASSO path.

Every breakpoint of the path is annotated with its support, the
hierarchical closure of that support, the Betti vector of the closure, and
the OLS refit on the raw support.  A criterion then trades the normalized
refit error against a normalized complexity score (a weighted Betti sum for
the compound criterion, the support size for MAIC) over a grid of weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .homology import betti_numbers
from .regression import LassoPath, ols_refit
from .terms import ModelSupport, hierarchical_closure, to_simplicial_complex

Mode = Literal["validation", "oracle"]
TIE_TOL = 1e-12

BETTI_PRESETS = {
    "all": "All cycles",
    "no0": "No 0-cycles",
    "higher": "Higher cycles",
    "lower": "Lower cycles",
}


class SelectionFailed(RuntimeError):
    pass


def betti_weights(preset: str, length: int) -> tuple[float, ...]:
    """Weight vector A for a named preset.

    ``all`` sums every Betti number, ``no0`` drops beta_0, ``higher`` drops
    beta_0 and beta_1, ``lower`` keeps only beta_0 + beta_1.
    """
    if length < 1:
        raise ValueError("length must be positive")
    if preset == "all":
        a = [1.0] * length
    elif preset == "no0":
        a = [0.0] + [1.0] * (length - 1)
    elif preset == "higher":
        a = [0.0, 0.0] + [1.0] * (length - 2)
    elif preset == "lower":
        a = [1.0, 1.0] + [0.0] * (length - 2)
    else:
        raise ValueError(f"unknown Betti preset {preset!r}; choose from {sorted(BETTI_PRESETS)}")
    return tuple(a[:length])


def default_mu_grid(steps: int = 100) -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(0.0, 1.0, steps + 1))


@dataclass(frozen=True)
class CriterionConfig:
    """Settings for the compound criterion and MAIC.

    ``mode`` picks the error term: validation RSS (real data) or the oracle
    model error (simulations, needs the true coefficients).  ``mu_choice``
    decides how the weight is chosen once each weight has its own best
    breakpoint: ``"test"`` takes the weight whose model has the smallest
    held-out test error, ``"joint"`` takes the joint minimum of the surface.
    """

    mu_grid: tuple[float, ...] = field(default_factory=default_mu_grid)
    betti_weights: tuple[float, ...] | None = None
    mode: Mode = "validation"
    mu_choice: Literal["test", "joint"] = "test"

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu_grid, dtype=float)
        if mu.size == 0 or mu.min() < 0 or mu.max() > 1 or np.any(np.diff(mu) <= 0):
            raise ValueError("mu grid must be strictly increasing values in [0, 1]")
        object.__setattr__(self, "mu_grid", tuple(float(m) for m in mu))
        if self.betti_weights is not None:
            a = np.asarray(self.betti_weights, dtype=float)
            if np.any(a < 0) or not np.any(a > 0):
                raise ValueError("Betti weights must be non-negative with a positive entry")
            object.__setattr__(self, "betti_weights", tuple(float(x) for x in a))
        if self.mode not in ("validation", "oracle"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mu_choice not in ("test", "joint"):
            raise ValueError(f"unknown mu_choice {self.mu_choice!r}")


def model_error(theta_hat, theta_true, second_moment) -> float:
    """(theta_hat - theta)' M (theta_hat - theta) for a second-moment matrix M."""
    d = np.asarray(theta_hat, dtype=float) - np.asarray(theta_true, dtype=float)
    M = np.asarray(second_moment, dtype=float)
    if d.ndim != 1 or M.shape != (d.size, d.size):
        raise ValueError(f"dimension mismatch: vector {d.shape}, matrix {M.shape}")
    return max(float(d @ M @ d), 0.0)


def second_moment(X: np.ndarray) -> np.ndarray:
    """Empirical E(x x') from the rows of ``X``."""
    X = np.asarray(X, dtype=float)
    return X.T @ X / X.shape[0]


@dataclass(frozen=True)
class Breakpoint:
    lam: float
    support: ModelSupport
    closure: ModelSupport
    betti: tuple[int, ...]
    lasso_coef: np.ndarray
    coef: np.ndarray
    val_rss: float
    lasso_val_rss: float
    test_rss: float | None = None
    me_val: float | None = None
    me_test: float | None = None
    lasso_me_val: float | None = None
    lasso_me_test: float | None = None
    lasso_test_rss: float | None = None
    rank_deficient: bool = False
    usable: bool = True

    def error(self, mode: Mode, refit: bool = True) -> float:
        if mode == "validation":
            return self.val_rss if refit else self.lasso_val_rss
        value = self.me_val if refit else self.lasso_me_val
        if value is None:
            raise ValueError("oracle mode needs the true coefficients at annotation time")
        return value

    def test_error(self, mode: Mode, refit: bool = True) -> float | None:
        if mode == "validation":
            return self.test_rss if refit else self.lasso_test_rss
        return self.me_test if refit else self.lasso_me_test


@dataclass(frozen=True)
class AnnotatedPath:
    breakpoints: tuple[Breakpoint, ...]
    terms: ModelSupport
    order: int

    def __len__(self) -> int:
        return len(self.breakpoints)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([b.lam for b in self.breakpoints])

    @property
    def usable(self) -> np.ndarray:
        return np.array([b.usable for b in self.breakpoints])

    @property
    def has_test(self) -> bool:
        return all(b.test_rss is not None for b in self.breakpoints)

    @property
    def has_oracle(self) -> bool:
        return all(b.me_val is not None for b in self.breakpoints)

    def errors(self, mode: Mode, refit: bool = True) -> np.ndarray:
        return np.array([b.error(mode, refit) if b.usable else np.nan for b in self.breakpoints])

    def test_errors(self, mode: Mode, refit: bool = True) -> np.ndarray:
        out = [b.test_error(mode, refit) for b in self.breakpoints]
        return np.array([np.nan if v is None else v for v in out])

    def betti_matrix(self) -> np.ndarray:
        return np.array([b.betti for b in self.breakpoints], dtype=float)

    def support_sizes(self) -> np.ndarray:
        return np.array([len(b.support) for b in self.breakpoints], dtype=float)


def support_betti(support: ModelSupport, order: int) -> tuple[ModelSupport, tuple[int, ...]]:
    """Closure of ``support`` and the Betti vector (length ``order``) of its complex."""
    closed = hierarchical_closure(support)
    betti, _ = betti_numbers(to_simplicial_complex(closed), max_dim=order - 1)
    return closed, betti


def annotate_path(
    path: LassoPath,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    terms: ModelSupport | None = None,
    order: int | None = None,
    X_test: np.ndarray | None = None,
    y_test: np.ndarray | None = None,
    theta_true: np.ndarray | None = None,
) -> AnnotatedPath:
    """Attach closure, Betti vector, OLS refit and errors to every breakpoint.

    The refit uses the raw LASSO support; the closure only feeds the
    topology.  With ``theta_true`` the oracle model errors are filled in
    using the validation (and test) second-moment matrices.
    """
    if len(path) == 0:
        raise ValueError("empty path")
    terms = terms if terms is not None else path.terms
    if terms is None:
        raise ValueError("term labels are required")
    order = order if order is not None else max(terms.max_degree, 1)
    n_train = X_train.shape[0]
    M_val = second_moment(X_val) if theta_true is not None else None
    M_test = second_moment(X_test) if theta_true is not None and X_test is not None else None
    cache: dict[ModelSupport, tuple[ModelSupport, tuple[int, ...]]] = {}

    def rss(X, y, coef):
        r = y - X @ coef
        return float(r @ r)

    out = []
    for lam, lcoef in zip(path.lambdas, path.coefs):
        mask = lcoef != 0
        support = terms.subset(mask)
        if support not in cache:
            cache[support] = support_betti(support, order)
        closure, betti = cache[support]
        usable = int(mask.sum()) <= n_train
        deficient = False
        coef = np.zeros_like(lcoef)
        if usable:
            try:
                fit = ols_refit(X_train, y_train, mask)
                coef, deficient = fit.coef, fit.rank_deficient
                usable = bool(np.all(np.isfinite(coef)))
            except np.linalg.LinAlgError:
                usable = False
        extra = {}
        if X_test is not None and y_test is not None:
            extra["test_rss"] = rss(X_test, y_test, coef)
            extra["lasso_test_rss"] = rss(X_test, y_test, lcoef)
        if theta_true is not None:
            extra["me_val"] = model_error(coef, theta_true, M_val)
            extra["lasso_me_val"] = model_error(lcoef, theta_true, M_val)
            if M_test is not None:
                extra["me_test"] = model_error(coef, theta_true, M_test)
                extra["lasso_me_test"] = model_error(lcoef, theta_true, M_test)
        out.append(Breakpoint(
            lam=float(lam), support=support, closure=closure, betti=betti,
            lasso_coef=lcoef.copy(), coef=coef,
            val_rss=rss(X_val, y_val, coef), lasso_val_rss=rss(X_val, y_val, lcoef),
            rank_deficient=deficient, usable=usable, **extra,
        ))
    return AnnotatedPath(tuple(out), terms, order)


@dataclass(frozen=True)
class Surface:
    """Criterion values with rows = breakpoints (increasing lambda), cols = mu grid."""

    values: np.ndarray
    mu_grid: tuple[float, ...]
    lambdas: np.ndarray
    degenerate: bool


def _surface(errors: np.ndarray, scores: np.ndarray, usable: np.ndarray, mu_grid) -> Surface:
    err = np.where(usable, errors, np.nan)
    sc = np.where(usable, scores, np.nan)
    emax = np.nanmax(err) if usable.any() else 0.0
    smax = np.nanmax(sc) if usable.any() else 0.0
    e_term = err / emax if emax > 0 else np.where(usable, 0.0, np.nan)
    degenerate = not smax > 0
    s_term = sc / smax if not degenerate else np.where(usable, 0.0, np.nan)
    mu = np.asarray(mu_grid)
    values = (1 - mu)[None, :] * e_term[:, None] + mu[None, :] * s_term[:, None]
    return Surface(values, tuple(mu_grid), np.array([]), bool(degenerate))


def resolve_weights(cfg: CriterionConfig, length: int) -> tuple[float, ...]:
    """The weight vector A at Betti length ``length``; a shorter A is padded with zeros."""
    if cfg.betti_weights is None:
        return (1.0,) * length
    if len(cfg.betti_weights) > length:
        raise ValueError(f"Betti weights have length {len(cfg.betti_weights)}, Betti vectors {length}")
    return cfg.betti_weights + (0.0,) * (length - len(cfg.betti_weights))


def compound_criterion(a: AnnotatedPath, cfg: CriterionConfig) -> Surface:
    """CC(lam, mu) = (1-mu) err/max err + mu (b.A)/max(b.A) over the path."""
    B = a.betti_matrix()
    weights = np.asarray(resolve_weights(cfg, B.shape[1]))
    s = _surface(a.errors(cfg.mode), B @ weights, a.usable, cfg.mu_grid)
    return Surface(s.values, s.mu_grid, a.lambdas, s.degenerate)


def maic_surface(a: AnnotatedPath, cfg: CriterionConfig) -> Surface:
    """MAIC(lam, mu): the compound criterion with support size as complexity."""
    s = _surface(a.errors(cfg.mode), a.support_sizes(), a.usable, cfg.mu_grid)
    return Surface(s.values, s.mu_grid, a.lambdas, s.degenerate)


@dataclass(frozen=True)
class SelectionReport:
    method: str
    index: int
    lambda_star: float
    mu_star: float | None
    support: ModelSupport
    coefficients: np.ndarray
    surface: Surface | None
    annotated: AnnotatedPath
    per_mu_index: tuple[int, ...] = ()
    betti_weights: tuple[float, ...] | None = None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        a = self.annotated
        doc = {
            "method": self.method,
            "lambda_star": self.lambda_star,
            "mu_star": self.mu_star,
            "support": self.support.index_lists(),
            "support_labels": self.support.labels(),
            "candidate_terms": a.terms.index_lists(),
            "coefficients": [float(c) for c in self.coefficients],
            "betti_per_breakpoint": [
                {"lambda": b.lam, "betti": list(b.betti), "support_size": len(b.support)}
                for b in a.breakpoints
            ],
            "criterion_surface": (
                [] if self.surface is None
                else [[None if np.isnan(v) else float(v) for v in row] for row in self.surface.values]
            ),
            "mu_grid": list(self.surface.mu_grid) if self.surface is not None else [],
            "notes": list(self.notes),
        }
        if self.betti_weights is not None:
            doc["betti_weights"] = list(self.betti_weights)
        return doc


def _argmin_larger_lambda(col: np.ndarray) -> int:
    """Index of the minimum, ties resolved toward the larger lambda (later row)."""
    best = np.nanmin(col)
    hits = np.flatnonzero(col <= best + TIE_TOL)
    return int(hits.max())


def _select(a: AnnotatedPath, surf: Surface, cfg: CriterionConfig, method: str,
            weights=None) -> SelectionReport:
    usable = a.usable
    if not usable.any():
        raise SelectionFailed("no usable breakpoints on the path")
    values = surf.values
    per_mu = tuple(_argmin_larger_lambda(values[:, j]) for j in range(values.shape[1]))
    notes = ["betti term degenerate (all scores zero)"] if surf.degenerate else []
    if cfg.mu_choice == "test" and a.has_test and not (cfg.mode == "oracle" and not a.has_oracle):
        test = a.test_errors(cfg.mode)
        cand = np.array([test[i] for i in per_mu])
        j = int(np.flatnonzero(cand <= np.nanmin(cand) + TIE_TOL * max(1.0, np.nanmin(cand)))[0])
        i = per_mu[j]
    else:
        if cfg.mu_choice == "test":
            notes.append("no test errors available; mu chosen by joint minimum")
        best = np.nanmin(values)
        hits = np.argwhere(values <= best + TIE_TOL)
        # larger lambda first, then smaller mu
        i, j = max(((int(r), -int(c)) for r, c in hits))
        j = -j
    bp = a.breakpoints[i]
    return SelectionReport(
        method=method, index=i, lambda_star=bp.lam, mu_star=surf.mu_grid[j],
        support=bp.support, coefficients=bp.coef.copy(), surface=surf, annotated=a,
        per_mu_index=per_mu, betti_weights=weights, notes=tuple(notes),
    )


def select_model(a: AnnotatedPath, cfg: CriterionConfig, method: str = "cc") -> SelectionReport:
    """Pick (lam*, mu*) by the compound criterion and return the refit model there."""
    surf = compound_criterion(a, cfg)
    return _select(a, surf, cfg, method, resolve_weights(cfg, a.order))


def maic(a: AnnotatedPath, cfg: CriterionConfig, method: str = "maic") -> SelectionReport:
    return _select(a, maic_surface(a, cfg), cfg, method)


def select_lars_ols(a: AnnotatedPath, mode: Mode = "validation") -> SelectionReport:
    """Refit model with the smallest error on the path (the compound criterion at mu = 0)."""
    return select_model(a, CriterionConfig(mu_grid=(0.0,), mode=mode), method="lars-ols")


def select_lasso(a: AnnotatedPath, mode: Mode = "validation") -> SelectionReport:
    """Unrefitted LASSO coefficients at the breakpoint with the smallest error."""
    err = a.errors(mode, refit=False)
    if np.all(np.isnan(err)):
        raise SelectionFailed("no usable breakpoints on the path")
    i = _argmin_larger_lambda(err)
    bp = a.breakpoints[i]
    return SelectionReport("lasso", i, bp.lam, None, bp.support, bp.lasso_coef.copy(), None, a)


def choose_by_error(errors: Sequence[float]) -> int:
    """Index of the smallest error, ties to the later (larger lambda) entry."""
    return _argmin_larger_lambda(np.asarray(errors, dtype=float))
