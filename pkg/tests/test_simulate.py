import numpy as np
import pytest

from topolasso.regression import build_design, ols_refit
from topolasso.simulate import (
    METHODS, ConfigError, SimConfig, bundled_configs, covariance, gen_design, gen_response,
    load_config, model_presets, parse_config, preset_betti, run_experiment, run_replication,
)
from topolasso.terms import enumerate_candidate_terms

PRESETS = model_presets()


@pytest.mark.parametrize("name,count,hier", [
    ("model1", 47, True), ("model2", 28, True), ("model3", 20, True), ("model4", 36, False),
])
def test_preset_sizes(name, count, hier):
    m = PRESETS[name]
    assert len(m.support) == count
    assert m.support.is_hierarchical() is hier
    assert m.support.max_degree == 3
    assert all(1 <= c <= 5 for c in m.coefficients)


def test_preset_degree_counts():
    def by_degree(name):
        return [sum(t.degree == d for t in PRESETS[name].support) for d in (1, 2, 3)]

    assert by_degree("model1") == [8, 28, 11]
    assert by_degree("model2") == [8, 12, 8]
    assert by_degree("model3") == [8, 8, 4]
    assert by_degree("model4") == [8, 12, 16]


@pytest.mark.parametrize("name,betti", [("model1", (1, 10, 0)), ("model2", (2, 0, 2)), ("model3", (3, 0, 1))])
def test_preset_betti(name, betti):
    assert preset_betti(PRESETS[name]) == betti == PRESETS[name].betti_target


def test_presets_are_fixed():
    again = model_presets()
    for name in PRESETS:
        assert again[name].coefficients == PRESETS[name].coefficients


def test_identity_covariance_at_rho_zero():
    cfg = SimConfig(n=5000, rhos=(0.0,))
    X = gen_design(cfg, 0).X
    assert np.max(np.abs(np.cov(X.T) - np.eye(8))) < 0.1


def test_population_covariance():
    assert covariance(8, 0.3)[0, 2] == pytest.approx(0.09)
    X = gen_design(SimConfig(n=20000, rhos=(0.3,)), 1).X
    assert np.cov(X.T)[0, 2] == pytest.approx(0.09, abs=0.03)


def test_design_is_deterministic_and_replication_specific():
    cfg = SimConfig()
    a, b, c = gen_design(cfg, 3), gen_design(cfg, 3), gen_design(cfg, 4)
    assert np.array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)
    assert [(a.split == s).sum() for s in range(3)] == [375, 125, 125]


def _design(cfg, rep=0):
    cand = enumerate_candidate_terms(cfg.p, cfg.k)
    data = gen_design(cfg, rep)
    return cand, data, build_design(data, cand)


def test_response_without_noise_is_fit_exactly():
    cfg = SimConfig(model="model3")
    cand, data, dm = _design(cfg)
    theta = PRESETS["model3"].theta(cand)
    y = gen_response(dm.columns, theta, 1e-9, np.random.default_rng(0))
    mask = theta != 0
    fit = ols_refit(dm.columns, y, mask)
    assert np.max(np.abs(y - dm.columns @ fit.coef)) < 1e-6


def test_noise_scales_with_sigma():
    cfg = SimConfig()
    cand, data, dm = _design(cfg)
    theta = PRESETS["model2"].theta(cand)
    ratios = []
    for rep in range(20):
        r1 = gen_response(dm.columns, theta, 1.0, np.random.default_rng(rep)) - dm.columns @ theta
        r2 = gen_response(dm.columns, theta, 2.0, np.random.default_rng(rep + 1000)) - dm.columns @ theta
        ratios.append(r2.std() / r1.std())
    assert np.mean(ratios) == pytest.approx(2.0, rel=0.15)


def test_response_is_reproducible():
    cfg = SimConfig()
    cand, data, dm = _design(cfg)
    theta = PRESETS["model2"].theta(cand)
    a = gen_response(dm.columns, theta, 3.0, np.random.default_rng(5))
    b = gen_response(dm.columns, theta, 3.0, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_near_noiseless_lars_ols_recovers_model3():
    cfg = SimConfig(model="model3", sigmas=(1e-3,), replications=1, methods=("lars-ols",))
    (out,) = run_replication(cfg, PRESETS["model3"], 1e-3, 0.3, 0)
    cand = enumerate_candidate_terms(8, 3)
    truth = {cand.index_of(t) for t in PRESETS["model3"].support}
    assert len(truth & set(out.support)) >= 0.8 * len(truth)
    assert out.me < 0.5


def test_cc_with_zero_mu_matches_lars_ols():
    cfg = SimConfig(model="model2", replications=2, methods=("cc-no0", "lars-ols"), mu_grid=(0.0,))
    r = run_experiment(cfg)
    cc, ols = r.cell("cc-no0"), r.cell("lars-ols")
    assert cc.me == ols.me and cc.size == ols.size and cc.me_mean == ols.me_mean


def test_lasso_and_cv_agree_when_lambda_agrees():
    cfg = SimConfig(model="model3", sigmas=(1.0,), methods=("lasso", "lasso-cv"))
    for rep in range(3):
        lasso, cv = run_replication(cfg, PRESETS["model3"], 1.0, 0.3, rep)
        if lasso.lam == cv.lam:
            assert lasso.me == cv.me


def test_runs_are_byte_identical_and_parallel_safe():
    cfg = SimConfig(model="model3", replications=2, methods=("lars-ols", "maic", "nng"))
    a = run_experiment(cfg).to_json()
    b = run_experiment(cfg).to_json()
    c = run_experiment(cfg, jobs=2).to_json()
    assert a == b == c


def test_report_layout():
    cfg = SimConfig(model="model3", replications=2, methods=("lars-ols", "lasso"))
    r = run_experiment(cfg)
    text = r.to_text()
    assert "LARS-OLS" in text and "LASSO" in text
    for c in r.cells:
        assert c.me_sd >= 0 and c.size_sd >= 0 and c.completed + c.failures == 2


def test_method_failures_are_counted(monkeypatch):
    import topolasso.simulate as sim

    def broken(*args, **kwargs):
        raise ValueError("forced")

    monkeypatch.setattr(sim, "nonnegative_garrote", broken)
    cfg = SimConfig(model="model3", replications=2, methods=("nng", "lars-ols"))
    r = run_experiment(cfg)
    assert r.cell("nng").failures == 2 and r.cell("nng").me_mean is None
    assert r.cell("lars-ols").failures == 0
    assert "forced" in r.cell("nng").failure_messages[0]


def test_parse_config():
    cfg = parse_config("""
        # comment
        model = model4
        rho = 0, 0.3
        sigma = 1, 3, 6
        replications = 5   # inline
        methods = lasso, maic
    """)
    assert cfg.model == "model4" and cfg.rhos == (0.0, 0.3) and cfg.sigmas == (1.0, 3.0, 6.0)
    assert cfg.replications == 5 and cfg.methods == ("lasso", "maic")


@pytest.mark.parametrize("text", [
    "colour = red", "replications = many", "rho = 1.5", "sigma = 0", "methods = ridge",
    "splits = 0.5, 0.5, 0.5",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_unknown_preset():
    with pytest.raises(ConfigError):
        run_experiment(SimConfig(model="model9", replications=1))


def test_bundled_configs():
    assert {"example2-desk", "smoke"} <= set(bundled_configs())
    desk = load_config("example2-desk")
    assert desk.model == "model2" and desk.sigmas == (3.0,) and desk.rhos == (0.3,)
    assert desk.replications == 50 and desk.methods == METHODS
    with pytest.raises(ConfigError):
        load_config("no-such-config")
