"""Acceptance checks.  Each test prints one PASS/FAIL line at its stated tolerance."""

import json
import time
from itertools import combinations
from math import comb

import numpy as np
import pytest

from conftest import TABLE3, labels, random_regression
from oracles import cd_lasso, garrote_grid, z2_rank_naive
from topolasso.cli import main
from topolasso.homology import (
    SimplicialComplex, betti_numbers, boundary_matrix, d_closed_complex, z2_reduce,
)
from topolasso.regression import (
    coefficients_at, kkt_violation, lambda_max, lars_lasso_path, nonnegative_garrote,
)
from topolasso.selection import (
    CriterionConfig, annotate_path, compound_criterion, maic, maic_surface, select_lars_ols,
    select_model,
)
from topolasso.simulate import load_config, run_experiment
from topolasso.terms import ModelSupport, hierarchical_closure, to_simplicial_complex

SIGNS = {(1, 1, 1), (1, 1, 0), (0, 1, 1), (0, -1, -1), (-1, -1, 0), (-1, -1, -1), (0, 0, 0)}


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return report


def test_criterion_1_worked_example(table2_csv, tmp_path, verdict):
    t0 = time.perf_counter()
    code = main(["path", str(table2_csv), "--response", "y", "--order", "3", "--scaling", "lars",
                 "--interactions", "raw", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    doc = json.loads((tmp_path / "path.json").read_text())
    bps = doc["breakpoints"]
    problems = []
    if code != 0 or len(bps) != 8:
        problems.append(f"exit {code}, {len(bps)} breakpoints")
    lam_err = coef_err = 0.0
    for bp, (lam, coefs, support, closure, betti) in zip(bps, TABLE3):
        lam_err = max(lam_err, abs(bp["lambda"] - lam))
        coef_err = max(coef_err, max(abs(a - b) for a, b in zip(bp["coefficients"], coefs)))
        got_s = ["".join(map(str, t)) for t in bp["support"]]
        got_c = ["".join(map(str, t)) for t in bp["closure"]]
        if got_s != labels(support) or got_c != labels(closure):
            problems.append(f"support/closure at lambda {lam}")
        if tuple(bp["betti"][:2]) != betti or any(bp["betti"][2:]):
            problems.append(f"betti at lambda {lam}: {bp['betti']}")
    ok = not problems and lam_err <= 0.01 and coef_err <= 0.02 and elapsed < 1.0
    verdict(1, ok, f"max |dlambda| {lam_err:.4f} (tol 0.01), max |dcoef| {coef_err:.4f} (tol 0.02), "
                   f"{elapsed:.2f}s (< 1s) {problems or ''}")


def test_criterion_2_pascal_triangle(verdict):
    t0 = time.perf_counter()
    bad = []
    for d in range(1, 7):
        for k in range(1, d + 1):
            betti, _ = betti_numbers(d_closed_complex(k, d + 2))
            if betti[k] != comb(d + 1, k + 1):
                bad.append((k, d, betti[k]))
    elapsed = time.perf_counter() - t0
    verdict(2, not bad and elapsed < 30, f"21 (k, d) cells, mismatches {bad}, {elapsed:.2f}s (< 30s)")


def _random_complex(rng):
    n = int(rng.integers(1, 11))
    faces = []
    for _ in range(int(rng.integers(0, 12))):
        size = int(rng.integers(1, min(5, n) + 1))
        faces.append(tuple(rng.choice(n, size, replace=False)))
    return SimplicialComplex(faces, n_vertices=n)


def test_criterion_3_homology_invariants(verdict):
    rng = np.random.default_rng(2024)
    failures = 0
    checked = 0
    for _ in range(500):
        c = _random_complex(rng)
        assert c.dim <= 4
        betti, s = betti_numbers(c)
        for d in range(1, c.dim + 1):
            dense = boundary_matrix(c, d).to_dense()
            checked += 1
            if z2_reduce(boundary_matrix(c, d)) != z2_rank_naive(dense):
                failures += 1
            if d >= 2 and np.any((boundary_matrix(c, d - 1).to_dense().astype(int) @ dense) % 2):
                failures += 1
        for d in range(c.dim + 1):
            if s.m[d] != s.z[d] + (s.b[d - 1] if d else 0):
                failures += 1
        if any(b < 0 for b in betti):
            failures += 1
    verdict(3, failures == 0, f"500 complexes, {checked} boundary matrices, {failures} failures")


def test_criterion_4_small_models(verdict):
    m1 = ModelSupport.from_labels([(1,), (2,), (3,), (1, 2), (1, 3), (2, 3)], 3)
    m2 = ModelSupport.from_labels([(1,), (2,), (3,), (1, 2)], 3)
    ex = hierarchical_closure(ModelSupport.from_labels([(1,), (3,), (1, 2), (5, 6)], 6))
    b1 = betti_numbers(to_simplicial_complex(m1), 1)[0]
    b2 = betti_numbers(to_simplicial_complex(m2), 1)[0]
    b3 = betti_numbers(to_simplicial_complex(ex))[0]
    ok = b1 == (1, 1) and b2 == (2, 0) and b3[0] == 3
    verdict(4, ok, f"M1 {b1}, M2 {b2}, example beta_0 {b3[0]}")


def _sgn(v):
    return np.where(v > 1e-9, 1, np.where(v < -1e-9, -1, 0))


def test_criterion_5_path_properties(verdict):
    rng = np.random.default_rng(55)
    fails = {"kkt": 0, "sign": 0, "oracle": 0, "shrink": 0}
    worst = {"kkt": 0.0, "oracle": 0.0}
    for _ in range(100):
        X, y = random_regression(rng)
        path = lars_lasso_path(X, y)
        for lam, coef in zip(path.lambdas, path.coefs):
            v = kkt_violation(X, y, coef, lam)
            worst["kkt"] = max(worst["kkt"], v)
            fails["kkt"] += int(v > 1e-8)
        for j in range(len(path) - 1):
            mid = coefficients_at(path, 0.5 * (path.lambdas[j] + path.lambdas[j + 1]))
            trip = zip(_sgn(path.coefs[j]), _sgn(mid), _sgn(path.coefs[j + 1]))
            fails["sign"] += any(t not in SIGNS for t in trip)
        lmax = lambda_max(X, y)
        # the oracle is compared away from lambda = 0, where coordinate descent is ill-conditioned
        for lam in rng.uniform(max(path.lambdas[0], 1e-3 * lmax), lmax, 20):
            err = np.max(np.abs(coefficients_at(path, lam) - cd_lasso(X, y, lam)))
            worst["oracle"] = max(worst["oracle"], err)
            fails["oracle"] += int(err > 1e-6)
        above = lmax * (1 + 1e-9)
        fails["shrink"] += bool(np.any(coefficients_at(path, above)) or np.any(cd_lasso(X, y, above)))
    ok = not any(fails.values())
    verdict(5, ok, f"100 instances, failures {fails}, worst KKT {worst['kkt']:.1e} (tol 1e-8), "
                   f"worst oracle gap {worst['oracle']:.1e} (tol 1e-6)")


def test_criterion_6_criterion_degeneracies(verdict):
    rng = np.random.default_rng(66)
    mismatch = bounds = scale = 0
    for _ in range(50):
        n, p = int(rng.integers(30, 80)), int(rng.integers(3, 6))
        Xraw = rng.standard_normal((n, p))
        terms = ModelSupport.from_indices([c for d in (1, 2) for c in combinations(range(p), d)], p)
        X = np.column_stack([np.prod(Xraw[:, t.indices], axis=1) for t in terms])
        X -= X.mean(axis=0)
        y = X @ np.where(rng.random(len(terms)) < 0.3, rng.normal(0, 2, len(terms)), 0) + rng.standard_normal(n)
        y -= y.mean()
        tr, va = slice(0, n // 2), slice(n // 2, n)
        path = lars_lasso_path(X[tr], y[tr], terms=terms)
        a = annotate_path(path, X[tr], y[tr], X[va], y[va])
        cc0 = select_model(a, CriterionConfig(mu_grid=(0.0,)))
        errs = a.errors("validation")
        oracle = int(np.flatnonzero(errs <= np.nanmin(errs) + 1e-12).max())
        mismatch += cc0.index != oracle or cc0.index != select_lars_ols(a).index
        cfg = CriterionConfig(mu_choice="joint")
        for surf in (compound_criterion(a, cfg), maic_surface(a, cfg)):
            v = surf.values[~np.isnan(surf.values)]
            bounds += bool(np.any(v < 0) or np.any(v > 1))
        factor = float(rng.uniform(0.01, 100))
        scaled = annotate_path(path, X[tr], factor * y[tr], X[va], factor * y[va])
        for fn in (select_model, maic):
            r1, r2 = fn(a, cfg), fn(scaled, cfg)
            scale += (r1.index, r1.mu_star) != (r2.index, r2.mu_star)
    verdict(6, mismatch == bounds == scale == 0,
            f"50 instances: mu=0 vs LARS-OLS mismatches {mismatch}, out-of-range surfaces {bounds}, "
            f"rescaling changes {scale}")


def test_criterion_7_desk_scale_direction(verdict):
    cfg = load_config("example2-desk")
    t0 = time.perf_counter()
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    cc, cv = report.cell("cc-no0"), report.cell("lasso-cv")
    ok = (cc.failures == cv.failures == 0 and cc.size_mean < cv.size_mean and cc.me_mean <= cv.me_mean
          and elapsed < 600)
    verdict(7, ok, f"{cfg.replications} reps: CC(no0) size {cc.size_mean:.2f} vs LASSO-CV {cv.size_mean:.2f}, "
                   f"ME {cc.me_mean:.2f} vs {cv.me_mean:.2f}, {elapsed:.0f}s (< 600s)")


def test_criterion_8_garrote(verdict):
    rng = np.random.default_rng(88)
    endpoint_fail = 0
    grid_gap = 0.0
    for i in range(30):
        X, y = random_regression(rng, n=int(rng.integers(20, 100)), m=int(rng.integers(1, 15)))
        g = nonnegative_garrote(X, y)
        if not np.allclose(g.shrink_at(0.0), 1, atol=1e-8):
            endpoint_fail += 1
        if np.any(g.shrink_at(2 * g.lambdas[-1])):
            endpoint_fail += 1
    for i in range(10):
        X = rng.standard_normal((40, 2))
        X -= X.mean(axis=0)
        y = X @ rng.uniform(0.3, 2, 2) + rng.standard_normal(40)
        g = nonnegative_garrote(X, y)
        for lam in np.linspace(0, g.lambdas[-1], 8):
            grid_gap = max(grid_gap, np.max(np.abs(g.shrink_at(lam) - garrote_grid(X, y, lam))))
    ok = endpoint_fail == 0 and grid_gap <= 1e-3
    verdict(8, ok, f"30 endpoint instances, {endpoint_fail} failures; 2-variable grid gap {grid_gap:.1e} (tol 1e-3)")
