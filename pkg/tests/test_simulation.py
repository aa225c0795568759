import json

import numpy as np
import pytest

from panelkit.estimators import ModelSpec, fit_fixed_effects
from panelkit.simulation import (
    RNG_IDENTITY,
    SyntheticPanelConfig,
    generate_panel,
    replication_rng,
    run_monte_carlo,
)


def test_noiseless_plane_recovered():
    cfg = SyntheticPanelConfig(6, 5, {"x": 2.0}, entity_effect_sd=0, time_effect_sd=0, noise_sd=0,
                               intercept=3.0, seed=1)
    d = generate_panel(cfg)
    assert np.abs(d["y"] - (3.0 + 2.0 * d["x"])).max() < 1e-12
    f = fit_fixed_effects(d, ModelSpec("y", ("x",)))
    assert abs(f.coef("x") - 2.0) < 1e-12


def test_same_seed_bit_identical():
    cfg = SyntheticPanelConfig(8, 4, {"x": 1.0, "z": -0.5}, within_entity_ar1=0.4, seed=42)
    a, b = generate_panel(cfg), generate_panel(cfg)
    for v in a.variable_names:
        assert a[v].tobytes() == b[v].tobytes()
    c = generate_panel(SyntheticPanelConfig(8, 4, {"x": 1.0, "z": -0.5}, within_entity_ar1=0.4, seed=43))
    assert c["y"].tobytes() != a["y"].tobytes()


def test_shape_and_labels():
    d = generate_panel(SyntheticPanelConfig(28, 12, {"x": 1.0}, first_period=2008))
    assert d.n_obs == 336 and d.balanced
    assert d.entities[0] == "E01" and d.periods[-1] == "2019"


def test_effect_regressor_correlation():
    cfg = SyntheticPanelConfig(28, 12, {"x": 0.0}, effect_regressor_correlation=0.8,
                               time_effect_sd=0, noise_sd=0)
    corrs = []
    for i in range(200):
        d = generate_panel(cfg, replication_rng(3, i))
        e = d.entity_index
        ybar = np.bincount(e, d["y"]) / 12
        xbar = np.bincount(e, d["x"]) / 12
        corrs.append(np.corrcoef(ybar, xbar)[0, 1])
    assert abs(np.mean(corrs) - 0.8) < 0.15


def test_ar1_noise_autocorrelation():
    cfg = SyntheticPanelConfig(200, 30, {"x": 0.0}, entity_effect_sd=0, time_effect_sd=0,
                               within_entity_ar1=0.7, seed=5)
    d = generate_panel(cfg)
    u = np.asarray(d["y"]).reshape(200, 30)
    r = np.corrcoef(u[:, 1:].ravel(), u[:, :-1].ravel())[0, 1]
    assert abs(r - 0.7) < 0.03
    assert abs(u.std() - 1.0) < 0.05


@pytest.mark.parametrize("bad", [
    dict(n_entities=0), dict(slopes={}), dict(noise_sd=-1.0), dict(within_entity_ar1=1.0),
    dict(effect_regressor_correlation=1.5), dict(slopes={"y": 1.0}),
])
def test_config_validation(bad):
    base = dict(n_entities=3, n_periods=3, slopes={"x": 1.0})
    with pytest.raises(ValueError):
        SyntheticPanelConfig(**{**base, **bad})


def test_config_json_round_trip(tmp_path):
    cfg = SyntheticPanelConfig(28, 12, {"x": -0.787}, within_entity_ar1=0.7, seed=9)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg.to_dict()))
    assert SyntheticPanelConfig.from_json(p) == cfg
    with pytest.raises(ValueError, match="unknown"):
        SyntheticPanelConfig.from_dict({**cfg.to_dict(), "rho": 0.5})


def test_zero_noise_monte_carlo_degenerate():
    cfg = SyntheticPanelConfig(6, 4, {"x": 1.5}, entity_effect_sd=0, time_effect_sd=0, noise_sd=0)
    s = run_monte_carlo(cfg, ModelSpec("y", ("x",)), 20, seed=1)
    c = s.coefficients["x"]
    assert abs(c["bias"]) < 1e-12 and c["rmse"] < 1e-12
    assert c["coverage_classical"] == 1.0 and c["coverage_robust"] == 1.0
    assert s.failures == 0


def test_doubling_replications_keeps_first_half():
    cfg = SyntheticPanelConfig(10, 5, {"x": 1.0}, seed=0)
    spec = ModelSpec("y", ("x",))
    a = run_monte_carlo(cfg, spec, 30, seed=11)
    b = run_monte_carlo(cfg, spec, 60, seed=11)
    assert b.results[:30] == a.results


def test_parallel_matches_serial_bit_for_bit():
    cfg = SyntheticPanelConfig(12, 6, {"x": 1.0, "z": 0.3}, within_entity_ar1=0.5, seed=0)
    spec = ModelSpec("y", ("x", "z"))
    one = run_monte_carlo(cfg, spec, 80, seed=5, hausman=True)
    many = run_monte_carlo(cfg, spec, 80, seed=5, hausman=True, workers=4)
    assert json.dumps(one.to_dict()) == json.dumps(many.to_dict())
    assert one.to_dict()["rng"] == RNG_IDENTITY


def test_failures_are_counted_not_raised():
    # a single period leaves no within-entity variation
    cfg = SyntheticPanelConfig(5, 1, {"x": 1.0})
    s = run_monte_carlo(cfg, ModelSpec("y", ("x",), "entity"), 3, seed=0)
    assert s.failures == 3 and s.to_dict()["errors"]


def test_monte_carlo_argument_checks():
    cfg = SyntheticPanelConfig(5, 3, {"x": 1.0})
    with pytest.raises(ValueError):
        run_monte_carlo(cfg, ModelSpec("y", ("x",)), 0, seed=0)
    with pytest.raises(ValueError):
        run_monte_carlo(cfg, ModelSpec("y", ("w",)), 5, seed=0)
