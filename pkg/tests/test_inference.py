import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from panelkit.errors import EstimationError, SingularCovarianceError
from panelkit.estimators import ModelSpec, fit_fixed_effects, fit_pooled, fit_random_effects
from panelkit.inference import (
    TestResult,
    classical_covariance,
    cluster_from_arrays,
    cluster_robust_covariance,
    hausman_test,
    joint_wald_test,
    panel_diagnostics,
    t_test,
)
from panelkit.panel import PanelDataset
from panelkit.report import summary_fit
from panelkit.simulation import SyntheticPanelConfig, generate_panel, replication_rng

from helpers import full_dummy_design, random_panel


def _pooled(seed=0, E=10, T=5):
    d = random_panel(np.random.default_rng(seed), E, T, 2)
    return d, fit_pooled(d, ModelSpec("y", ("x1", "x2"), "none", "classical"))


# -- covariances -----------------------------------------------------------


def test_classical_zero_on_exact_fit():
    d = random_panel(np.random.default_rng(0), 6, 4, 1, noise=0.0, entity_sd=0.0, time_sd=0.0)
    f = fit_pooled(d, ModelSpec("y", ("x1",), "none", "classical"))
    assert np.abs(classical_covariance(f)).max() < 1e-12


def test_classical_matches_explicit_formula():
    d, f = _pooled(1)
    X = full_dummy_design(d, ("x1", "x2"), "none")
    y = np.asarray(d["y"])
    b = np.linalg.solve(X.T @ X, X.T @ y)
    r = y - X @ b
    oracle = (r @ r) / (X.shape[0] - X.shape[1]) * np.linalg.inv(X.T @ X)
    assert np.abs(classical_covariance(f) - oracle).max() < 1e-10
    assert np.abs(f.covariance - oracle).max() < 1e-10


def test_duplicated_observations_relation():
    d, f = _pooled(2, E=8, T=4)
    n, k = f.n_obs, f.n_params
    # second copy of every row under shifted period labels
    doubled = PanelDataset(
        d.entities, d.periods + tuple(f"dup{p}" for p in d.periods),
        np.concatenate([d.entity_index, d.entity_index]),
        np.concatenate([d.period_index, d.period_index + len(d.periods)]),
        {v: np.concatenate([d[v], d[v]]) for v in d.variable_names},
    )
    g = fit_pooled(doubled, ModelSpec("y", ("x1", "x2"), "none", "classical"))
    assert np.abs(g.params - f.params).max() < 1e-10
    ratio = classical_covariance(g) / classical_covariance(f)
    assert np.abs(ratio - (n - k) / (2 * n - k)).max() < 1e-8


def test_each_row_own_cluster_is_hc0():
    d, f = _pooled(3)
    X = full_dummy_design(d, ("x1", "x2"), "none")
    r = f.residuals
    bread = np.linalg.inv(X.T @ X)
    oracle = bread @ (X.T * r**2) @ X @ bread
    V = cluster_robust_covariance(f, cluster=np.arange(f.n_obs), small_sample=False)
    assert np.abs(V - oracle).max() < 1e-10


def test_cluster_small_sample_factor():
    d, f = _pooled(4)
    raw = cluster_robust_covariance(f, small_sample=False)
    adj = cluster_robust_covariance(f)
    G, n, k = 10, f.n_obs, f.n_params
    assert np.allclose(adj, raw * G / (G - 1) * (n - 1) / (n - k), rtol=1e-12, atol=0)


def test_cluster_errors():
    d, f = _pooled(5)
    with pytest.raises(EstimationError):
        cluster_robust_covariance(f, cluster=np.zeros(f.n_obs))
    with pytest.raises(EstimationError):
        cluster_robust_covariance(f, cluster=np.arange(3))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_cluster_invariant_to_permutation_and_relabel(seed):
    rng = np.random.default_rng(seed)
    n, k, G = 60, 3, 7
    X = rng.standard_normal((n, k))
    r = rng.standard_normal(n)
    c = rng.integers(0, G, n)
    c[:G] = np.arange(G)
    bread = np.linalg.inv(X.T @ X)
    V = cluster_from_arrays(X, r, c, bread)
    perm = rng.permutation(n)
    relabel = rng.permutation(G) * 10 + 3
    V2 = cluster_from_arrays(X[perm], r[perm], relabel[c[perm]], bread)
    assert np.abs(V - V2).max() < 1e-12 * max(1.0, np.abs(V).max())


def test_covariances_symmetric_nonnegative_diagonal():
    d = random_panel(np.random.default_rng(6), 9, 5, 3)
    f = fit_fixed_effects(d, ModelSpec("y", ("x1", "x2", "x3")))
    for V in (classical_covariance(f), cluster_robust_covariance(f), f.covariance):
        assert np.abs(V - V.T).max() < 1e-10
        assert np.diag(V).min() >= 0


def test_robust_and_classical_agree_under_homoskedasticity():
    cfg = SyntheticPanelConfig(28, 12, {"x": 1.0}, seed=0)
    spec = ModelSpec("y", ("x",))
    ratios = []
    for i in range(1000):
        f = fit_fixed_effects(generate_panel(cfg, replication_rng(555, i)), spec, "within")
        ratios.append(np.sqrt(f.covariance[0, 0] / classical_covariance(f)[0, 0]))
    assert abs(np.mean(ratios) - 1.0) < 0.1


# -- t tests ---------------------------------------------------------------


def _summary(b, se):
    return summary_fit(ModelSpec("PRP", ("Empl",), "twoway"), {"const": 1.0, "Empl": b},
                       {"const": 1.0, "Empl": se}, 336, 0.5, n_clusters=28)


@pytest.mark.parametrize("b, se, t", [(-0.787, 0.212, -3.71), (-1.010, 0.205, -4.93)])
def test_reference_t_statistics(b, se, t):
    res = t_test(_summary(b, se), "Empl", dof=27)
    assert res.statistic == pytest.approx(t, abs=0.005)


def test_zero_estimate_null_center():
    res = t_test(_summary(0.0, 0.3), "Empl", dof=27)
    assert res.statistic == 0.0 and res.p_value == 1.0


def test_zero_se_raises():
    with pytest.raises(EstimationError, match="zero standard error"):
        t_test(_summary(0.5, 0.0), "Empl", dof=27)


def test_default_dof_robust_vs_classical():
    d = random_panel(np.random.default_rng(7), 28, 12, 1)
    r = fit_fixed_effects(d, ModelSpec("y", ("x1",)))
    c = fit_fixed_effects(d, ModelSpec("y", ("x1",), covariance="classical"))
    assert t_test(r, "x1").dof1 == 27
    assert t_test(c, "x1").dof1 == c.dof_residual == 336 - 40


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), c=st.sampled_from([1e-3, 0.5, -2.0, 1e3]))
def test_t_p_value_scale_equivariant(seed, c):
    d = random_panel(np.random.default_rng(seed), 6, 5, 2)
    s = ModelSpec("y", ("x1", "x2"))
    a = fit_fixed_effects(d, s)
    b = fit_fixed_effects(d.with_variables({"x1": d["x1"] * c}), s)
    assert abs(t_test(a, "x1").p_value - t_test(b, "x1").p_value) < 1e-10


# -- Wald ------------------------------------------------------------------


def test_wald_single_restriction_is_t_squared():
    d = random_panel(np.random.default_rng(8), 8, 5, 2)
    f = fit_fixed_effects(d, ModelSpec("y", ("x1", "x2")))
    w = joint_wald_test(f, ["x2"])
    t = t_test(f, "x2")
    assert abs(w.statistic - t.statistic**2) < 1e-10
    assert w.dof1 == 1


def test_wald_null_point():
    f = summary_fit(ModelSpec("y", ("a", "b")), {"const": 1.0, "a": 0.0, "b": 0.0},
                    {"const": 1.0, "a": 0.5, "b": 0.2}, 100, 0.1)
    w = joint_wald_test(f, ["a", "b"])
    assert w.statistic == 0.0 and w.p_value == 1.0


def test_wald_order_invariant():
    d = random_panel(np.random.default_rng(9), 8, 6, 3)
    f = fit_fixed_effects(d, ModelSpec("y", ("x1", "x2", "x3")))
    a = joint_wald_test(f, ["x1", "x2", "x3"]).statistic
    b = joint_wald_test(f, ["x3", "x1", "x2"]).statistic
    assert abs(a - b) < 1e-12 * max(1.0, a)


def test_wald_f_form_and_singular_block():
    d = random_panel(np.random.default_rng(10), 8, 6, 2)
    f = fit_fixed_effects(d, ModelSpec("y", ("x1", "x2"), covariance="classical"))
    chi = joint_wald_test(f, ["x1", "x2"])
    F = joint_wald_test(f, ["x1", "x2"], form="f")
    assert F.statistic == pytest.approx(chi.statistic / 2, rel=1e-12)
    assert (F.dof1, F.dof2) == (2, f.dof_residual)
    V = np.array(f.covariance)
    V[np.ix_([1, 2], [1, 2])] = [[1.0, 1.0], [1.0, 1.0]]
    with pytest.raises(SingularCovarianceError) as info:
        joint_wald_test(f, ["x1", "x2"], covariance=V)
    assert info.value.rank == 1


def test_time_dummy_test_has_eleven_dof():
    d = random_panel(np.random.default_rng(11), 28, 12, 1, time_sd=5.0)
    f = fit_fixed_effects(d, ModelSpec("y", ("x1",)))
    ent, tim = panel_diagnostics(f)
    assert tim.distribution == "chi_square" and tim.dof1 == 11
    assert tim.p_value < 1e-6
    assert ent.distribution == "f" and ent.dof1 == 27


def test_diagnostics_classical_use_fit_covariance():
    d = random_panel(np.random.default_rng(12), 10, 6, 1)
    f = fit_fixed_effects(d, ModelSpec("y", ("x1",), covariance="classical"))
    ent, tim = panel_diagnostics(f)
    names = f.names[f.dummy_blocks["entity"]]
    assert ent.statistic == joint_wald_test(f, names, form="f").statistic
    assert ent.dof2 == f.dof_residual and not ent.warnings


def test_test_result_validation():
    with pytest.raises(ValueError):
        TestResult("x", 1.0, "student_t", 5, None, 1.5)
    with pytest.raises(ValueError):
        TestResult("x", 1.0, "f", 5, None, 0.5)
    with pytest.raises(ValueError):
        TestResult("x", 1.0, "normal", 5, None, 0.5)
    assert TestResult("x", 1.0, "chi_square", 2, None, 0.01).reject(0.05)


# -- Hausman ---------------------------------------------------------------


def _fe_re(seed=13, corr=0.0):
    cfg = SyntheticPanelConfig(28, 12, {"x": 1.0}, effect_regressor_correlation=corr, seed=seed)
    d = generate_panel(cfg)
    s = ModelSpec("y", ("x",), "twoway", "classical")
    return fit_fixed_effects(d, s, "within"), fit_random_effects(d, s)


def test_hausman_identical_estimates():
    fe, re = _fe_re()
    params = np.array(re.params)
    params[1] = fe.coef("x")
    re_same = dataclasses.replace(re, params=params)
    h = hausman_test(fe, re_same)
    assert h.statistic == 0.0 and h.p_value == 1.0
    assert "do not reject" in h.detail


def test_hausman_detects_correlated_effects():
    fe, re = _fe_re(14, corr=0.8)
    h = hausman_test(fe, re)
    assert h.dof1 == 1 and h.p_value < 0.05
    assert "fixed effects preferred" in h.detail


def test_hausman_generalized_inverse_warning():
    d = random_panel(np.random.default_rng(15), 12, 5, 2)
    s = ModelSpec("y", ("x1", "x2"), "entity", "classical")
    fe, re = fit_fixed_effects(d, s, "within"), fit_random_effects(d, s)
    fe = dataclasses.replace(fe, covariance=np.diag([2.0, 1.0]))
    V = np.zeros((3, 3))
    V[1:, 1:] = np.eye(2)
    re = dataclasses.replace(re, covariance=V)
    h = hausman_test(fe, re, covariance="fit")
    assert h.dof1 == 1 and len(h.warnings) == 1
    diff = fe.params[0] - re.params[1]
    assert h.statistic == pytest.approx(diff**2, rel=1e-12)


def test_hausman_errors():
    fe, re = _fe_re()
    other = dataclasses.replace(re, spec=ModelSpec("z", ("x",), "twoway"))
    with pytest.raises(EstimationError):
        hausman_test(fe, other)
    with pytest.raises(EstimationError):
        hausman_test(fe, dataclasses.replace(re, spec=ModelSpec("y", ("w",), "twoway")))
    empty = dataclasses.replace(fe, spec=ModelSpec("y", (), "twoway"))
    with pytest.raises(EstimationError, match="empty"):
        hausman_test(empty, re)
