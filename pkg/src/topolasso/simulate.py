"""Synthetic experiments: Gaussian designs, the four model presets, method comparison.

Each replication draws ``n`` rows from N(0, Sigma) with Sigma_ij = rho^|i-j|,
builds the augmented design from training statistics, generates the response
in those fitted coordinates (so the true coefficient vector is directly
comparable with estimates) and scores every method by the model error under
the validation second-moment matrix.
"""

from __future__ import annotations

import configparser
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from itertools import combinations
from pathlib import Path

import numpy as np

from .regression import (
    TEST, TRAIN, VALIDATION, Dataset, build_design, cv_lasso, lars_lasso_path,
    nonnegative_garrote, ordered_split,
)
from .selection import (
    CriterionConfig, SelectionFailed, annotate_path, betti_weights, choose_by_error, maic,
    model_error, second_moment, select_lars_ols, select_lasso, select_model, support_betti,
)
from .terms import ModelSupport, enumerate_candidate_terms

PRESET_SEED = 20180917
CC_PRESETS = ("all", "no0", "higher", "lower")
METHODS = tuple(f"cc-{p}" for p in CC_PRESETS) + ("lars-ols", "nng", "lasso", "lasso-cv", "maic")
METHOD_TITLES = {
    "cc-all": "All cycles", "cc-no0": "No 0-cycles", "cc-higher": "Higher cycles",
    "cc-lower": "Lower cycles", "lars-ols": "LARS-OLS", "nng": "NNG", "lasso": "LASSO",
    "lasso-cv": "LASSO-CV", "maic": "MAIC",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    model: str = "model2"
    p: int = 8
    k: int = 3
    n: int = 625
    rhos: tuple[float, ...] = (0.3,)
    sigmas: tuple[float, ...] = (3.0,)
    splits: tuple[float, float, float] = (0.6, 0.2, 0.2)
    replications: int = 50
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    mode: str = "oracle"
    cv_folds: int = 5
    mu_grid_steps: int = 100
    mu_grid: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.rhos or any(not 0 <= r < 1 for r in self.rhos):
            raise ConfigError("rho values must lie in [0, 1)")
        if not self.sigmas or any(not s > 0 for s in self.sigmas):
            raise ConfigError("sigma values must be positive")
        if len(self.splits) != 3 or min(self.splits) < 0 or abs(sum(self.splits) - 1) > 1e-9:
            raise ConfigError(f"splits must be three non-negative fractions summing to 1, got {self.splits}")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if not 1 <= self.k <= self.p:
            raise ConfigError(f"need 1 <= k <= p, got k={self.k}, p={self.p}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
        if self.mode not in ("oracle", "validation"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mu_grid_steps < 1:
            raise ConfigError("mu_grid_steps must be >= 1")


@dataclass(frozen=True)
class ModelPreset:
    name: str
    support: ModelSupport
    coefficients: tuple[int, ...]
    betti_target: tuple[int, ...] | None = None
    description: str = ""

    def theta(self, candidates: ModelSupport) -> np.ndarray:
        """True coefficients laid out over the candidate terms."""
        if not self.support.issubset(candidates):
            raise ValueError(f"{self.name} uses terms outside the candidate set")
        out = np.zeros(len(candidates))
        for t, c in zip(self.support, self.coefficients):
            out[candidates.index_of(t)] = c
        return out


def _hollow_tetrahedron(block):
    pairs = list(combinations(block, 2))
    triples = list(combinations(block, 3))
    return pairs, triples


def model_presets(p: int = 8) -> dict[str, ModelPreset]:
    """The four fixed true models on 8 variables.

    model1: every main effect and pair plus the 11 lexicographically first triples
    (47 terms, Betti (1,10,0)).
    model2: two hollow tetrahedra on {1..4} and {5..8} (28 terms, Betti (2,0,2)).
    model3: hollow tetrahedron on {1..4}, path 5-6-7, isolated 8 (20 terms, Betti (3,0,1)).
    model4: model2's mains and pairs plus the 16 lexicographically first triples,
    which is not hierarchical (36 terms).
    """
    if p != 8:
        raise ValueError("the presets are defined on 8 variables")
    mains = [(i,) for i in range(8)]
    all_pairs = list(combinations(range(8), 2))
    all_triples = list(combinations(range(8), 3))
    a_pairs, a_triples = _hollow_tetrahedron(range(4))
    b_pairs, b_triples = _hollow_tetrahedron(range(4, 8))
    layouts = {
        "model1": (mains + all_pairs + all_triples[:11], (1, 10, 0), "8 mains, 28 pairs, 11 triples"),
        "model2": (mains + a_pairs + b_pairs + a_triples + b_triples, (2, 0, 2),
                   "8 mains, 12 pairs, 8 triples"),
        "model3": (mains + a_pairs + [(4, 5), (5, 6)] + a_triples, (3, 0, 1),
                   "8 mains, 8 pairs, 4 triples"),
        "model4": (mains + a_pairs + b_pairs + all_triples[:16], None,
                   "8 mains, 12 pairs, 16 triples (non-hierarchical)"),
    }
    rng = np.random.default_rng(PRESET_SEED)
    out = {}
    for name, (terms, target, desc) in layouts.items():
        support = ModelSupport.from_indices(terms, p)
        coefs = tuple(int(c) for c in rng.integers(1, 6, size=len(support)))
        out[name] = ModelPreset(name, support, coefs, target, desc)
    return out


def covariance(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _stream(seed: int, rep: int, cell: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng([seed, cell, rep, purpose])


def gen_design(cfg: SimConfig, rep: int, rho: float | None = None, cell: int = 0) -> Dataset:
    """n x p rows from N(0, Sigma) via the Cholesky factor of Sigma, tagged with ordered splits."""
    rho = cfg.rhos[0] if rho is None else rho
    L = np.linalg.cholesky(covariance(cfg.p, rho))
    Z = _stream(cfg.seed, rep, cell, 0).standard_normal((cfg.n, cfg.p))
    return Dataset(Z @ L.T, np.zeros(cfg.n), ordered_split(cfg.n, cfg.splits))


def gen_response(design: np.ndarray, theta: np.ndarray, sigma: float,
                 rng: np.random.Generator) -> np.ndarray:
    """design @ theta plus N(0, sigma^2) noise, no intercept."""
    return design @ theta + sigma * rng.standard_normal(design.shape[0])


@dataclass(frozen=True)
class MethodOutcome:
    method: str
    me: float | None
    size: int | None
    error: str | None = None
    mu_star: float | None = None
    lam: float | None = None
    support: tuple[int, ...] = ()


def _support_size(coef: np.ndarray) -> int:
    return int(np.count_nonzero(coef))


def run_replication(cfg: SimConfig, preset: ModelPreset, sigma: float, rho: float,
                    rep: int, cell: int = 0) -> list[MethodOutcome]:
    candidates = enumerate_candidate_terms(cfg.p, cfg.k)
    data = gen_design(cfg, rep, rho, cell)
    dm = build_design(data, candidates)
    theta = preset.theta(candidates)
    y = gen_response(dm.columns, theta, sigma, _stream(cfg.seed, rep, cell, 1))
    tr, va, te = (data.split == s for s in (TRAIN, VALIDATION, TEST))
    Xtr, Xva, Xte = dm.columns[tr], dm.columns[va], dm.columns[te]
    M_val = second_moment(Xva)
    mode = cfg.mode

    def scored(method, coef, mu=None, lam=None):
        return MethodOutcome(method, model_error(coef, theta, M_val), _support_size(coef), mu_star=mu,
                             lam=lam, support=tuple(int(i) for i in np.flatnonzero(coef)))

    annotated = None

    def annotated_path():
        nonlocal annotated
        if annotated is None:
            path = lars_lasso_path(Xtr, y[tr], "standard", candidates)
            annotated = annotate_path(path, Xtr, y[tr], Xva, y[va], candidates, cfg.k,
                                      Xte, y[te], theta)
        return annotated

    mu_grid = cfg.mu_grid or tuple(float(m) for m in np.linspace(0, 1, cfg.mu_grid_steps + 1))
    out = []
    for method in cfg.methods:
        try:
            if method.startswith("cc-"):
                crit = CriterionConfig(mu_grid, betti_weights(method[3:], cfg.k), mode)
                r = select_model(annotated_path(), crit, method)
                out.append(scored(method, r.coefficients, r.mu_star, r.lambda_star))
            elif method == "maic":
                r = maic(annotated_path(), CriterionConfig(mu_grid, None, mode))
                out.append(scored(method, r.coefficients, r.mu_star, r.lambda_star))
            elif method == "lars-ols":
                r = select_lars_ols(annotated_path(), mode)
                out.append(scored(method, r.coefficients, lam=r.lambda_star))
            elif method == "lasso":
                r = select_lasso(annotated_path(), mode)
                out.append(scored(method, r.coefficients, lam=r.lambda_star))
            elif method == "lasso-cv":
                cv = cv_lasso(Xtr, y[tr], cfg.cv_folds, seed=cfg.seed + rep)
                out.append(scored(method, cv.coef, lam=cv.lam))
            elif method == "nng":
                g = nonnegative_garrote(Xtr, y[tr])
                coefs = g.coefs
                if mode == "oracle":
                    errs = [model_error(c, theta, M_val) for c in coefs]
                else:
                    errs = [float(np.sum((y[va] - Xva @ c) ** 2)) for c in coefs]
                i = choose_by_error(errs)
                out.append(scored(method, coefs[i], lam=float(g.lambdas[i])))
        except (SelectionFailed, ValueError, np.linalg.LinAlgError) as exc:
            out.append(MethodOutcome(method, None, None, f"{type(exc).__name__}: {exc}"))
    return out


@dataclass(frozen=True)
class CellSummary:
    sigma: float
    rho: float
    method: str
    me_mean: float | None
    me_sd: float | None
    size_mean: float | None
    size_sd: float | None
    completed: int
    failures: int
    me: tuple[float, ...] = field(repr=False, default=())
    size: tuple[int, ...] = field(repr=False, default=())
    failure_messages: tuple[str, ...] = field(repr=False, default=())


def _mean_sd(values):
    if not values:
        return None, None
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0


def summarize(sigma, rho, method, outcomes: list[MethodOutcome]) -> CellSummary:
    ok = [o for o in outcomes if o.error is None]
    me_m, me_s = _mean_sd([o.me for o in ok])
    sz_m, sz_s = _mean_sd([o.size for o in ok])
    return CellSummary(sigma, rho, method, me_m, me_s, sz_m, sz_s, len(ok),
                       len(outcomes) - len(ok), tuple(o.me for o in ok), tuple(o.size for o in ok),
                       tuple(sorted({o.error for o in outcomes if o.error})))


@dataclass(frozen=True)
class ExperimentReport:
    config: SimConfig
    preset: str
    cells: tuple[CellSummary, ...]

    def cell(self, method: str, sigma: float | None = None, rho: float | None = None) -> CellSummary:
        for c in self.cells:
            if c.method == method and (sigma is None or c.sigma == sigma) and (rho is None or c.rho == rho):
                return c
        raise KeyError(method)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        return {
            "preset": self.preset,
            "config": cfg,
            "replications": self.config.replications,
            "cells": [asdict(c) for c in self.cells],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        """One block per (rho, sigma): method, mean ME (sd), mean size (sd), failures."""
        lines = [f"{self.preset}: {self.config.replications} replications, n={self.config.n}"]
        for rho in self.config.rhos:
            for sigma in self.config.sigmas:
                lines.append("")
                lines.append(f"rho = {rho:g}, sigma = {sigma:g}")
                lines.append(f"{'method':<14}{'model error':>18}{'factors':>18}{'failed':>8}")
                for m in self.config.methods:
                    c = self.cell(m, sigma, rho)
                    me = "n/a" if c.me_mean is None else f"{c.me_mean:.2f} ({c.me_sd:.2f})"
                    sz = "n/a" if c.size_mean is None else f"{c.size_mean:.2f} ({c.size_sd:.2f})"
                    lines.append(f"{METHOD_TITLES[m]:<14}{me:>18}{sz:>18}{c.failures:>8}")
        return "\n".join(lines) + "\n"


def _run_one(args):
    return run_replication(*args)


def run_experiment(cfg: SimConfig, jobs: int = 1) -> ExperimentReport:
    """Run every (rho, sigma) cell; replications fan out over ``jobs`` processes."""
    presets = model_presets(cfg.p)
    if cfg.model not in presets:
        raise ConfigError(f"unknown model preset {cfg.model!r}; choose from {sorted(presets)}")
    preset = presets[cfg.model]
    if preset.support.max_degree > cfg.k:
        raise ConfigError(f"{cfg.model} needs k >= {preset.support.max_degree}")
    tasks = []
    cells = [(rho, sigma) for rho in cfg.rhos for sigma in cfg.sigmas]
    for c, (rho, sigma) in enumerate(cells):
        tasks.extend((cfg, preset, sigma, rho, rep, c) for rep in range(cfg.replications))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=1))
    else:
        results = [_run_one(t) for t in tasks]
    summaries = []
    for c, (rho, sigma) in enumerate(cells):
        block = results[c * cfg.replications:(c + 1) * cfg.replications]
        for i, method in enumerate(cfg.methods):
            summaries.append(summarize(sigma, rho, method, [r[i] for r in block]))
    return ExperimentReport(cfg, cfg.model, tuple(summaries))


_LIST_KEYS = {"rhos": float, "sigmas": float, "splits": float, "methods": str, "mu_grid": float}
_SCALAR_KEYS = {"model": str, "p": int, "k": int, "n": int, "replications": int, "seed": int,
                "mode": str, "cv_folds": int, "mu_grid_steps": int}
_ALIASES = {"rho": "rhos", "sigma": "sigmas", "method": "methods"}


def parse_config(text: str) -> SimConfig:
    """Read ``key = value`` lines (``#`` comments, comma-separated lists)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    kwargs = {}
    for raw_key, value in cp["experiment"].items():
        key = _ALIASES.get(raw_key, raw_key)
        try:
            if key in _LIST_KEYS:
                kind = _LIST_KEYS[key]
                kwargs[key] = tuple(kind(v.strip()) for v in value.split(",") if v.strip())
            elif key in _SCALAR_KEYS:
                kwargs[key] = _SCALAR_KEYS[key](value.strip())
            else:
                raise ConfigError(f"unknown config key {raw_key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {raw_key!r}: {value!r}") from None
    return SimConfig(**kwargs)


def bundled_configs() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("topolasso.configs").iterdir()
                  if p.name.endswith(".cfg"))


def load_config(name_or_path: str) -> SimConfig:
    """Load a config file, or a bundled config by name (e.g. ``example2-desk``)."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_config(path.read_text(encoding="utf-8"))
    if name_or_path in bundled_configs():
        return parse_config(resources.files("topolasso.configs").joinpath(name_or_path + ".cfg")
                            .read_text(encoding="utf-8"))
    raise ConfigError(f"no config file or bundled config named {name_or_path!r}")


def preset_betti(preset: ModelPreset, k: int = 3) -> tuple[int, ...]:
    """Betti vector of the closure of a preset's support."""
    return support_betti(preset.support, k)[1]
