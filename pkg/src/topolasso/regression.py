"""Design matrices, the LARS-LASSO path, OLS refits, non-negative garrote and CV-LASSO.

Two penalty conventions are supported for the path:

``"standard"``
    (1/2n) ||y - X theta||^2 + lam * ||theta||_1 on the columns as given.
``"lars"``
    the scaling used by R's ``lars(normalize=TRUE)``: columns are rescaled to
    unit Euclidean norm and lam is reported as max_j |x_j' r| / ||x_j||.
    Equivalent to (1/2) ||y - X theta||^2 + lam * sum_j ||x_j|| |theta_j|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .terms import ModelSupport

TRAIN, VALIDATION, TEST = 0, 1, 2
SPLIT_NAMES = {TRAIN: "train", VALIDATION: "validation", TEST: "test"}

Convention = Literal["standard", "lars"]
LAMBDA_TOL = 1e-10
ZERO_TOL = 1e-11


class DegenerateColumnError(ValueError):
    """A main-effect column has zero variance on the training rows."""

    def __init__(self, variable: str):
        super().__init__(f"variable {variable!r} has zero variance on the training rows")
        self.variable = variable


class NotApplicableError(ValueError):
    """A method's precondition does not hold for this data."""


# ---------------------------------------------------------------------------
# data and design
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    split: np.ndarray | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 observations")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("data contain missing or non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if self.split is not None:
            split = np.asarray(self.split, dtype=int)
            if split.shape != y.shape or not np.isin(split, list(SPLIT_NAMES)).all():
                raise ValueError("split tags must be one of 0/1/2 per row")
            object.__setattr__(self, "split", split)
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(X.shape[1])))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def mask(self, which: int) -> np.ndarray:
        if self.split is None:
            return np.full(self.n, which == TRAIN)
        return self.split == which


def random_split(n: int, fractions: tuple[float, float, float], rng: np.random.Generator) -> np.ndarray:
    """Random train/validation/test tags with the given fractions (rounded down, rest to train)."""
    if len(fractions) != 3 or min(fractions) < 0 or abs(sum(fractions) - 1) > 1e-9:
        raise ValueError(f"split fractions must be three non-negatives summing to 1, got {fractions}")
    n_val = int(np.floor(fractions[1] * n))
    n_test = int(np.floor(fractions[2] * n))
    tags = np.full(n, TRAIN)
    perm = rng.permutation(n)
    tags[perm[:n_val]] = VALIDATION
    tags[perm[n_val:n_val + n_test]] = TEST
    return tags


def ordered_split(n: int, fractions: tuple[float, float, float]) -> np.ndarray:
    """Contiguous train/validation/test blocks (for exchangeable simulated rows)."""
    n_tr = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    tags = np.full(n, TEST)
    tags[:n_tr] = TRAIN
    tags[n_tr:n_tr + n_val] = VALIDATION
    return tags


@dataclass(frozen=True)
class DesignMatrix:
    """Augmented design: one column per term, rows aligned with the dataset.

    Main effects are standardized with training statistics; interaction
    columns are products (of standardized mains, or of raw variables when
    ``interactions == "raw"``) centered by their training mean.
    """

    columns: np.ndarray
    terms: ModelSupport
    means: np.ndarray
    scales: np.ndarray
    offsets: np.ndarray
    interactions: str
    split: np.ndarray | None = None

    def transform(self, X_new: np.ndarray) -> np.ndarray:
        """Apply the stored training statistics to new raw rows."""
        return _augment(np.asarray(X_new, dtype=float), self.terms, self.means, self.scales,
                        self.interactions) - self.offsets

    def part(self, which: int) -> np.ndarray:
        if self.split is None:
            if which != TRAIN:
                raise ValueError("design has no split tags")
            return self.columns
        return self.columns[self.split == which]


def _augment(X, terms, means, scales, interactions):
    Z = (X - means) / scales
    base = X if interactions == "raw" else Z
    out = np.empty((X.shape[0], len(terms)))
    for j, t in enumerate(terms):
        idx = t.indices
        out[:, j] = Z[:, idx[0]] if len(idx) == 1 else np.prod(base[:, idx], axis=1)
    return out


def build_design(
    data: Dataset,
    terms: ModelSupport,
    interactions: Literal["standardized", "raw"] = "standardized",
    ddof: int = 1,
) -> DesignMatrix:
    """Build the augmented design matrix from training-split statistics.

    ``ddof`` selects the standard-deviation divisor (n - ddof); 1 matches R's
    ``scale``.  ``interactions="raw"`` forms products of the unstandardized
    variables before centering.
    """
    if terms.p != data.p:
        raise ValueError(f"terms are for p={terms.p}, data has p={data.p}")
    if interactions not in ("standardized", "raw"):
        raise ValueError(f"unknown interactions mode {interactions!r}")
    tr = data.mask(TRAIN)
    Xtr = data.X[tr]
    means = Xtr.mean(axis=0)
    scales = Xtr.std(axis=0, ddof=ddof)
    for i, s in enumerate(scales):
        if not s > 1e-12 * max(1.0, abs(means[i])):
            raise DegenerateColumnError(data.names[i])
    raw = _augment(data.X, terms, means, scales, interactions)
    offsets = raw[tr].mean(axis=0)
    offsets[[t.degree == 1 for t in terms]] = 0.0
    return DesignMatrix(raw - offsets, terms, means, scales, offsets, interactions, data.split)


def standardize_response(y: np.ndarray, train: np.ndarray | None = None, ddof: int = 1):
    """Center and scale ``y`` by training statistics; constant responses are only centered.

    Returns ``(y_std, mean, scale)``.
    """
    y = np.asarray(y, dtype=float)
    ref = y if train is None else y[train]
    mean = ref.mean()
    scale = ref.std(ddof=ddof) if ref.size > ddof else 0.0
    if not scale > 0:
        scale = 1.0
    return (y - mean) / scale, mean, scale


# ---------------------------------------------------------------------------
# LASSO path
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LassoPath:
    """Breakpoints in increasing lambda with the coefficient vector at each.

    ``coefs[j]`` is the solution at ``lambdas[j]``; between breakpoints the
    solution is linear in lambda, and at ``lambdas[-1]`` it is zero.
    """

    lambdas: np.ndarray
    coefs: np.ndarray
    convention: str = "standard"
    terms: ModelSupport | None = None

    def __len__(self) -> int:
        return len(self.lambdas)

    @property
    def lambda_max(self) -> float:
        return float(self.lambdas[-1])

    def support_masks(self, tol: float = 0.0) -> np.ndarray:
        return np.abs(self.coefs) > tol

    def supports(self) -> list[ModelSupport]:
        if self.terms is None:
            raise ValueError("path has no term labels")
        return [self.terms.subset(m) for m in self.support_masks()]


def _lars_core(X: np.ndarray, y: np.ndarray, positive: bool = False, max_steps: int | None = None):
    """LARS with the LASSO modification for (1/2)||y - Xb||^2 + lam ||b||_1.

    Returns the visited (lam, b) pairs in decreasing lam.  With
    ``positive=True`` the coefficients are constrained to be non-negative.
    """
    n, m = X.shape
    norms = np.sqrt(np.einsum("ij,ij->j", X, X))
    usable = norms > 1e-12 * max(1.0, norms.max(initial=0.0))
    beta = np.zeros(m)
    c = X.T @ y
    score = np.where(usable, c if positive else np.abs(c), -np.inf)
    lam = float(max(score.max(initial=0.0), 0.0))
    scale = max(float(np.abs(c).max(initial=0.0)), 1.0)
    if lam <= 1e-13 * scale:
        return [(0.0, beta.copy())]

    visited = [(lam, beta.copy())]
    active: list[int] = [int(np.argmax(score))]
    signs: list[float] = [1.0 if positive else float(np.sign(c[active[0]]))]
    skip: int | None = None
    skip_sign = 0.0
    eps = 1e-12 * scale
    max_steps = max_steps if max_steps is not None else 20 * (m + 1)

    for _ in range(max_steps):
        A = np.array(active)
        s = np.array(signs)
        XA = X[:, A]
        G = XA.T @ XA
        w = np.linalg.solve(G, s)
        a = X.T @ (XA @ w)

        gamma, event, who = lam, "end", -1
        inactive = usable.copy()
        inactive[A] = False
        idx = np.flatnonzero(inactive)
        if idx.size:
            cj, aj = c[idx], a[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                g_plus = np.where(1 - aj > 1e-14, (lam - cj) / (1 - aj), np.inf)
                g_minus = np.where(1 + aj > 1e-14, (lam + cj) / (1 + aj), np.inf)
            if skip is not None:
                # a just-dropped variable sits on the boundary on the side it
                # left by; it may only come back with the opposite sign
                at = np.flatnonzero(idx == skip)
                if skip_sign > 0:
                    g_plus[at] = np.inf
                else:
                    g_minus[at] = np.inf
            g = g_plus if positive else np.minimum(g_plus, g_minus)
            g = np.where(g > eps, g, np.inf)
            k = int(np.argmin(g))
            if g[k] < gamma:
                gamma, event, who = float(g[k]), "add", int(idx[k])
        bA = beta[A]
        with np.errstate(divide="ignore", invalid="ignore"):
            gd = np.where(w != 0, -bA / w, np.inf)
        gd = np.where((gd > eps) & (bA != 0), gd, np.inf)
        kd = int(np.argmin(gd)) if gd.size else -1
        if kd >= 0 and gd[kd] <= gamma:
            gamma, event, who = float(gd[kd]), "drop", kd

        lam = 0.0 if event == "end" else lam - gamma
        beta[A] = bA + gamma * w
        # re-solve the stationarity equations on the active set for accuracy
        beta[A] = np.linalg.solve(G, XA.T @ y - lam * s)
        if event == "drop":
            beta[A[who]] = 0.0
            keep = np.delete(np.arange(len(A)), who)
            if keep.size:
                Xk = XA[:, keep]
                beta[A[keep]] = np.linalg.solve(Xk.T @ Xk, Xk.T @ y - lam * s[keep])
        visited.append((lam, beta.copy()))
        if event == "end" or lam <= 0:
            break
        c = X.T @ (y - X @ beta)
        skip = None
        if event == "drop":
            skip = active.pop(who)
            skip_sign = signs.pop(who)
        else:
            xj = X[:, who]
            proj = XA @ np.linalg.solve(G, XA.T @ xj)
            if np.sum((xj - proj) ** 2) <= 1e-10 * norms[who] ** 2:
                # active set already spans the column space; the path stops here
                break
            active.append(who)
            signs.append(1.0 if positive else float(np.sign(c[who]) or 1.0))
    return visited


def _collapse(visited):
    lams = np.array([v[0] for v in visited])[::-1]
    coefs = np.array([v[1] for v in visited])[::-1]
    keep = [0]
    for i in range(1, len(lams)):
        if lams[i] - lams[keep[-1]] > LAMBDA_TOL:
            keep.append(i)
    return lams[keep], coefs[keep]


def _check_finite(X, y):
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("design or response contains non-finite values")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 observations")


def lars_lasso_path(
    X: np.ndarray,
    y: np.ndarray,
    convention: Convention = "standard",
    terms: ModelSupport | None = None,
) -> LassoPath:
    """Every breakpoint of the LASSO path, computed by LARS with variable drops."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    _check_finite(X, y)
    n = X.shape[0]
    if convention == "standard":
        lams, coefs = _collapse(_lars_core(X, y))
        lams = lams / n
    elif convention == "lars":
        norms = np.sqrt((X ** 2).sum(axis=0))
        safe = np.where(norms > 0, norms, 1.0)
        lams, coefs = _collapse(_lars_core(X / safe, y))
        coefs = coefs / safe
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return LassoPath(lams, _snap(coefs), convention, terms)


def _snap(coefs: np.ndarray) -> np.ndarray:
    """Zero out round-off residue so supports are read off exactly."""
    big = np.abs(coefs).max(initial=0.0)
    return np.where(np.abs(coefs) <= ZERO_TOL * max(big, 1.0), 0.0, coefs)


def coefficients_at(path: LassoPath, lam: float) -> np.ndarray:
    """Coefficients at penalty ``lam`` by linear interpolation between breakpoints."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    lams = path.lambdas
    if lam >= lams[-1]:
        return np.zeros(path.coefs.shape[1])
    if lam <= lams[0]:
        return path.coefs[0].copy()
    j = int(np.searchsorted(lams, lam, side="right"))
    lo, hi = lams[j - 1], lams[j]
    t = (lam - lo) / (hi - lo)
    return (1 - t) * path.coefs[j - 1] + t * path.coefs[j]


def lambda_max(X: np.ndarray, y: np.ndarray, convention: Convention = "standard") -> float:
    """Smallest lambda at which every coefficient is zero."""
    c = np.abs(np.asarray(X).T @ np.asarray(y))
    if convention == "standard":
        return float(c.max(initial=0.0) / X.shape[0])
    norms = np.sqrt((X ** 2).sum(axis=0))
    return float(np.max(np.where(norms > 0, c / np.where(norms > 0, norms, 1), 0), initial=0.0))


def kkt_violation(
    X: np.ndarray, y: np.ndarray, theta: np.ndarray, lam: float, convention: Convention = "standard"
) -> float:
    """Largest violation of the LASSO optimality conditions at ``(theta, lam)``."""
    r = y - X @ theta
    if convention == "standard":
        g = X.T @ r / X.shape[0]
    else:
        norms = np.sqrt((X ** 2).sum(axis=0))
        g = np.where(norms > 0, X.T @ r / np.where(norms > 0, norms, 1), 0.0)
        theta = theta * norms
    nz = theta != 0
    viol = np.where(nz, np.abs(g - lam * np.sign(theta)), np.maximum(np.abs(g) - lam, 0.0))
    return float(viol.max(initial=0.0))


# ---------------------------------------------------------------------------
# refits and baselines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Refit:
    coef: np.ndarray
    rank: int
    rank_deficient: bool


def ols_refit(X: np.ndarray, y: np.ndarray, support) -> Refit:
    """Least squares restricted to ``support`` (boolean mask or index array), zeros elsewhere.

    Rank-deficient restricted designs get the minimum-norm solution and are
    flagged.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[1]
    mask = np.zeros(m, dtype=bool)
    mask[np.asarray(support)] = True
    coef = np.zeros(m)
    k = int(mask.sum())
    if k == 0:
        return Refit(coef, 0, False)
    sol, _, rank, _ = np.linalg.lstsq(X[:, mask], y, rcond=None)
    coef[mask] = sol
    return Refit(coef, int(rank), int(rank) < k)


@dataclass(frozen=True)
class GarrotePath:
    """Non-negative garrote path: shrink factors D(lam) >= 0 and implied coefficients."""

    lambdas: np.ndarray
    shrink: np.ndarray
    ols: np.ndarray

    @property
    def coefs(self) -> np.ndarray:
        return self.shrink * self.ols

    def shrink_at(self, lam: float) -> np.ndarray:
        return coefficients_at(LassoPath(self.lambdas, self.shrink), lam)

    def coef_at(self, lam: float) -> np.ndarray:
        return self.shrink_at(lam) * self.ols


def nonnegative_garrote(X: np.ndarray, y: np.ndarray) -> GarrotePath:
    """Exact path of (1/2n)||y - Z D||^2 + lam ||D||_1 over D >= 0, Z_j = x_j * ols_j."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    _check_finite(X, y)
    n, m = X.shape
    if n <= m:
        raise NotApplicableError(f"garrote needs n > number of terms (n={n}, terms={m})")
    ols, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < m:
        raise NotApplicableError(f"OLS stage is rank deficient (rank {rank} < {m})")
    Z = X * ols
    lams, shrink = _collapse(_lars_core(Z, y, positive=True))
    return GarrotePath(lams / n, np.maximum(_snap(shrink), 0.0), ols)


@dataclass(frozen=True)
class CVResult:
    lam: float
    coef: np.ndarray
    grid: np.ndarray
    cv_error: np.ndarray
    path: LassoPath


def kfold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def cv_lasso(X: np.ndarray, y: np.ndarray, folds: int = 5, seed: int = 0,
             convention: Convention = "standard") -> CVResult:
    """K-fold cross-validated LASSO over the full-data breakpoint grid.

    Each fold is centered on its own training rows; the chosen lambda
    minimizes mean held-out squared error (ties go to the larger lambda) and
    the returned coefficients are read off the full-data path.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < folds:
        raise ValueError(f"cannot split {n} rows into {folds} folds")
    full = lars_lasso_path(X, y, convention)
    grid = full.lambdas
    err = np.zeros(len(grid))
    for hold in kfold_indices(n, folds, seed):
        fit = np.ones(n, dtype=bool)
        fit[hold] = False
        xm, ym = X[fit].mean(axis=0), y[fit].mean()
        path = lars_lasso_path(X[fit] - xm, y[fit] - ym, convention)
        Xh = X[hold] - xm
        for g, lam in enumerate(grid):
            resid = y[hold] - ym - Xh @ coefficients_at(path, lam)
            err[g] += np.sum(resid ** 2)
    err /= n
    best = np.flatnonzero(err <= err.min() * (1 + 1e-12) + 1e-300)
    j = int(best.max())
    return CVResult(float(grid[j]), full.coefs[j].copy(), grid, err, full)
