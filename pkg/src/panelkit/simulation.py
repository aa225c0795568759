"""Synthetic panels with planted parameters and a Monte Carlo harness.

Random numbers come from numpy's PCG64 bit generator. Replication ``i``
of a run with master seed ``s`` draws from
``PCG64(SeedSequence(s, spawn_key=(i,)))``, so any subset of
replications can be reproduced on its own and results do not depend on
scheduling.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .errors import PanelKitError
from .estimators import ModelSpec, fit, fit_random_effects
from .inference import classical_covariance, cluster_robust_covariance, hausman_test
from .numerics import t_ppf, t_two_sided_p
from .panel import PanelDataset

__all__ = [
    "RNG_IDENTITY",
    "SyntheticPanelConfig",
    "generate_panel",
    "replication_rng",
    "run_monte_carlo",
    "MonteCarloSummary",
]

RNG_IDENTITY = "numpy.PCG64/SeedSequence(master, spawn_key=(replication,))/v1"

# absolute slack (relative to 1 + |beta|) when checking CI coverage, so a
# zero-noise fit whose SE is rounding noise still counts as covered
COVERAGE_SLACK = 1e-9


@dataclass(frozen=True)
class SyntheticPanelConfig:
    """Data-generating process

        y_it = intercept + sum_k slope_k x_kit + a_i + g_t + e_it

    ``a_i = entity_effect_sd * u_i`` and ``g_t ~ N(0, time_effect_sd^2)``.
    Each regressor is ``x_kit = c u_i + v_kit`` where ``v`` is a
    unit-variance AR(1) in time with coefficient ``regressor_ar1`` and
    ``c`` is chosen so that ``corr(u_i, mean_t x_kit)`` equals
    ``effect_regressor_correlation`` in the population. ``e`` is an AR(1)
    with coefficient ``within_entity_ar1`` and marginal sd ``noise_sd``,
    scaled by ``1 + heteroskedasticity * |x_1it|``.
    """

    n_entities: int
    n_periods: int
    slopes: dict
    entity_effect_sd: float = 1.0
    time_effect_sd: float = 1.0
    noise_sd: float = 1.0
    within_entity_ar1: float = 0.0
    effect_regressor_correlation: float = 0.0
    seed: int = 0
    intercept: float = 0.0
    regressor_ar1: float = 0.0
    heteroskedasticity: float = 0.0
    dependent: str = "y"
    first_period: int = 1

    def __post_init__(self):
        if self.n_entities < 1 or self.n_periods < 1:
            raise ValueError("n_entities and n_periods must be at least 1")
        if not self.slopes:
            raise ValueError("at least one regressor slope is required")
        if self.dependent in self.slopes:
            raise ValueError("dependent variable name clashes with a regressor")
        for name in ("entity_effect_sd", "time_effect_sd", "noise_sd", "heteroskedasticity"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite nonnegative number, got {v}")
        for name in ("within_entity_ar1", "regressor_ar1"):
            if not abs(getattr(self, name)) < 1:
                raise ValueError(f"{name} must lie in (-1, 1)")
        if not abs(self.effect_regressor_correlation) <= 1:
            raise ValueError("effect_regressor_correlation must lie in [-1, 1]")
        object.__setattr__(self, "slopes", {str(k): float(v) for k, v in self.slopes.items()})

    @classmethod
    def from_dict(cls, d) -> "SyntheticPanelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SyntheticPanelConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def _ar1(rng, shape, rho):
    # unit marginal variance, stationary start
    E, T = shape
    w = rng.standard_normal((E, T))
    out = np.empty((E, T))
    out[:, 0] = w[:, 0]
    s = math.sqrt(1.0 - rho * rho)
    for t in range(1, T):
        out[:, t] = rho * out[:, t - 1] + s * w[:, t]
    return out


def _ar1_mean_var(rho, T):
    lags = np.abs(np.subtract.outer(np.arange(T), np.arange(T)))
    return float(np.sum(rho ** lags.astype(float))) / (T * T)


def generate_panel(config: SyntheticPanelConfig, rng: np.random.Generator | None = None) -> PanelDataset:
    """Draw one balanced panel from ``config``.

    Uses ``np.random.default_rng(config.seed)`` unless a generator is
    passed in.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    E, T = config.n_entities, config.n_periods
    u = rng.standard_normal(E)
    g = config.time_effect_sd * rng.standard_normal(T)
    r = config.effect_regressor_correlation
    if abs(r) < 1:
        c = r * math.sqrt(_ar1_mean_var(config.regressor_ar1, T) / (1.0 - r * r))
        idio = 1.0
    else:
        c, idio = math.copysign(1.0, r), 0.0
    xs = {}
    for name in config.slopes:
        xs[name] = c * u[:, None] + idio * _ar1(rng, (E, T), config.regressor_ar1)
    eps = config.noise_sd * _ar1(rng, (E, T), config.within_entity_ar1)
    if config.heteroskedasticity:
        first = next(iter(xs.values()))
        eps = eps * (1.0 + config.heteroskedasticity * np.abs(first))
    y = config.intercept + config.entity_effect_sd * u[:, None] + g[None, :] + eps
    for name, b in config.slopes.items():
        y = y + b * xs[name]
    cols = {config.dependent: y.ravel()}
    cols.update({k: v.ravel() for k, v in xs.items()})
    width = len(str(E))
    return PanelDataset(
        entities=tuple(f"E{i + 1:0{width}d}" for i in range(E)),
        periods=tuple(str(config.first_period + t) for t in range(T)),
        entity_index=np.repeat(np.arange(E), T),
        period_index=np.tile(np.arange(T), E),
        variables=cols,
    )


def replication_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(index,))))


@lru_cache(maxsize=256)
def _crit(level, dof):
    return t_ppf(0.5 + level / 2.0, dof)


@dataclass(frozen=True)
class Replication:
    index: int
    ok: bool
    estimates: dict = field(default_factory=dict)
    se_classical: dict = field(default_factory=dict)
    se_robust: dict = field(default_factory=dict)
    covered_classical: dict = field(default_factory=dict)
    covered_robust: dict = field(default_factory=dict)
    rejected: dict = field(default_factory=dict)
    hausman_p: float | None = None
    error: str = ""


def _covers(b, beta, se, crit):
    return abs(b - beta) <= crit * se + COVERAGE_SLACK * (1.0 + abs(beta))


def _one(config, spec, method, level, hausman, master_seed, i) -> Replication:
    try:
        data = generate_panel(config, replication_rng(master_seed, i))
        res = fit(data, spec, method)
        Vc = classical_covariance(res)
        Vr = cluster_robust_covariance(res)
        dof_c, dof_r = res.dof_residual, res.n_clusters - 1
        dof_test = dof_r if spec.covariance == "cluster_entity" else dof_c
        Vt = Vr if spec.covariance == "cluster_entity" else Vc
        idx = {n: j for j, n in enumerate(res.names)}
        est, sec, ser, cc, cr, rej = {}, {}, {}, {}, {}, {}
        for name in spec.regressors:
            j = idx[name]
            b = float(res.params[j])
            beta = config.slopes[name]
            sc, sr = math.sqrt(max(Vc[j, j], 0.0)), math.sqrt(max(Vr[j, j], 0.0))
            est[name], sec[name], ser[name] = b, sc, sr
            cc[name] = _covers(b, beta, sc, _crit(level, dof_c))
            cr[name] = _covers(b, beta, sr, _crit(level, dof_r))
            st = math.sqrt(max(Vt[j, j], 0.0))
            if st > 0:
                rej[name] = t_two_sided_p(b / st, dof_test) < 1.0 - level
            else:
                rej[name] = abs(b) > COVERAGE_SLACK
        hp = None
        if hausman:
            re = fit_random_effects(data, spec)
            hp = hausman_test(res, re).p_value
        return Replication(i, True, est, sec, ser, cc, cr, rej, hp)
    except PanelKitError as exc:
        return Replication(i, False, error=f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class MonteCarloSummary:
    replications: int
    failures: int
    level: float
    master_seed: int
    coefficients: dict
    hausman_rejection_rate: float | None
    results: tuple = field(repr=False, default=())
    rng: str = RNG_IDENTITY

    def to_dict(self, include_results=False) -> dict:
        d = {
            "rng": self.rng,
            "master_seed": self.master_seed,
            "replications": self.replications,
            "failures": self.failures,
            "level": self.level,
            "coefficients": self.coefficients,
            "hausman_rejection_rate": self.hausman_rejection_rate,
            "errors": sorted({r.error for r in self.results if not r.ok}),
        }
        if include_results:
            d["results"] = [asdict(r) for r in self.results]
        return d


def run_monte_carlo(
    config: SyntheticPanelConfig,
    spec: ModelSpec,
    replications: int,
    seed: int,
    method: str = "within",
    level: float = 0.95,
    hausman: bool = False,
    workers: int = 1,
) -> MonteCarloSummary:
    """Repeat generate -> fit ``replications`` times and summarize.

    For each regressor of ``spec``: bias, RMSE and sd of the estimates,
    mean classical and cluster-robust SEs, CI coverage at ``level`` under
    both covariances (classical with residual dof, robust with ``G - 1``),
    and the rejection rate of ``H0: slope = 0`` under ``spec.covariance``.
    With ``hausman=True`` a random-effects model is fit too and the
    Hausman rejection rate at ``1 - level`` is reported.

    Failed replications are counted, not raised. Aggregation runs in
    replication order, so the summary is identical for any ``workers``.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    missing = [r for r in spec.regressors if r not in config.slopes]
    if missing:
        raise ValueError(f"spec regressors not generated by config: {missing}")
    if spec.dependent != config.dependent:
        raise ValueError(f"spec dependent {spec.dependent!r} != config dependent {config.dependent!r}")

    def job(i):
        return _one(config, spec, method, level, hausman, seed, i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = tuple(pool.map(job, range(replications)))
    else:
        results = tuple(job(i) for i in range(replications))
    good = [r for r in results if r.ok]
    coefs = {}
    for name in spec.regressors:
        beta = config.slopes[name]
        if not good:
            coefs[name] = {"true": beta}
            continue
        b = np.array([r.estimates[name] for r in good])
        coefs[name] = {
            "true": beta,
            "mean_estimate": float(np.mean(b)),
            "bias": float(np.mean(b) - beta),
            "rmse": float(np.sqrt(np.mean((b - beta) ** 2))),
            "sd_estimate": float(np.std(b, ddof=1)) if len(b) > 1 else 0.0,
            "mean_se_classical": float(np.mean([r.se_classical[name] for r in good])),
            "mean_se_robust": float(np.mean([r.se_robust[name] for r in good])),
            "coverage_classical": float(np.mean([r.covered_classical[name] for r in good])),
            "coverage_robust": float(np.mean([r.covered_robust[name] for r in good])),
            "rejection_rate": float(np.mean([r.rejected[name] for r in good])),
        }
    h_rate = None
    if hausman and good:
        h_rate = float(np.mean([r.hausman_p < 1.0 - level for r in good]))
    return MonteCarloSummary(
        replications=replications,
        failures=len(results) - len(good),
        level=level,
        master_seed=seed,
        coefficients=coefs,
        hausman_rejection_rate=h_rate,
        results=results,
    )
