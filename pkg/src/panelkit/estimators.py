"""Pooled OLS, two-way fixed effects (LSDV and within) and Swamy-Arora
random effects."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import CollinearityError, DataError, EstimationError
from .inference import classical_from_arrays, cluster_from_arrays
from .numerics import RANK_TOL, solve_least_squares
from .panel import EFFECTS, PanelDataset, build_lsdv_design, demean

__all__ = [
    "ModelSpec",
    "FitResult",
    "fit_pooled",
    "fit_fixed_effects",
    "fit_random_effects",
    "fit",
]

COVARIANCES = ("classical", "cluster_entity")


@dataclass(frozen=True)
class ModelSpec:
    """What to estimate.

    ``regressors`` may be empty at construction (a stepwise base model
    with nothing forced in); fitting requires at least one.
    """

    dependent: str
    regressors: tuple = ()
    effects: str = "twoway"
    covariance: str = "cluster_entity"
    intercept: bool = True

    def __post_init__(self):
        regs = tuple(self.regressors)
        object.__setattr__(self, "regressors", regs)
        if len(set(regs)) != len(regs):
            raise ValueError(f"duplicate regressors in {regs}")
        if self.dependent in regs:
            raise ValueError(f"dependent variable {self.dependent!r} listed as a regressor")
        if self.effects not in EFFECTS:
            raise ValueError(f"effects must be one of {EFFECTS}, got {self.effects!r}")
        cov = {"cluster": "cluster_entity", "robust": "cluster_entity"}.get(
            self.covariance, self.covariance
        )
        if cov not in COVARIANCES:
            raise ValueError(f"covariance must be one of {COVARIANCES}, got {self.covariance!r}")
        object.__setattr__(self, "covariance", cov)

    def with_regressors(self, regressors) -> "ModelSpec":
        return ModelSpec(self.dependent, tuple(regressors), self.effects, self.covariance, self.intercept)

    def to_dict(self) -> dict:
        return {
            "dependent": self.dependent,
            "regressors": list(self.regressors),
            "effects": self.effects,
            "covariance": self.covariance,
            "intercept": self.intercept,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        return cls(
            dependent=d["dependent"],
            regressors=tuple(d.get("regressors", ())),
            effects=d.get("effects", "twoway"),
            covariance=d.get("covariance", "cluster_entity"),
            intercept=bool(d.get("intercept", True)),
        )


@dataclass(frozen=True)
class FitResult:
    """Estimates plus everything inference needs to recompute covariances.

    ``design`` and ``bread`` are the regressor matrix and ``(X'X)^{-1}``
    of the regression actually solved: the full dummy design for LSDV,
    demeaned regressors for within, quasi-demeaned data for RE.
    ``residuals`` belong to that regression.
    """

    spec: ModelSpec
    names: tuple
    params: np.ndarray
    covariance: np.ndarray
    residuals: np.ndarray
    r_squared_overall: float
    r_squared_within: float
    n_obs: int
    dof_residual: int
    estimator_kind: str  # pooled | fe_lsdv | fe_within | re
    n_params: int
    design: np.ndarray = field(repr=False)
    bread: np.ndarray = field(repr=False)
    clusters: np.ndarray = field(repr=False)
    n_clusters: int = 0
    entities: tuple = ()
    periods: tuple = ()
    dummy_blocks: Mapping = field(default_factory=dict)
    absorbed: Mapping = field(default_factory=dict)
    extra: Mapping = field(default_factory=dict)
    warnings: tuple = ()
    n_dropped: int = 0

    @property
    def covariance_type(self) -> str:
        return self.spec.covariance

    @property
    def coefficients(self) -> dict:
        return dict(zip(self.names, map(float, self.params)))

    @property
    def standard_errors(self) -> dict:
        return dict(zip(self.names, np.sqrt(np.clip(np.diag(self.covariance), 0, None)).tolist()))

    def coef(self, name) -> float:
        return self.coefficients[name]

    def se(self, name) -> float:
        return self.standard_errors[name]

    def to_dict(self) -> dict:
        se = self.standard_errors
        return {
            "estimator": self.estimator_kind,
            "spec": self.spec.to_dict(),
            "n_obs": self.n_obs,
            "n_dropped": self.n_dropped,
            "n_entities": len(self.entities),
            "n_periods": len(self.periods),
            "dof_residual": self.dof_residual,
            "n_params": self.n_params,
            "r_squared_overall": self.r_squared_overall,
            "r_squared_within": self.r_squared_within,
            "coefficients": [
                {"name": n, "estimate": float(b), "se": se[n]} for n, b in zip(self.names, self.params)
            ],
            "absorbed": dict(self.absorbed),
            "extra": dict(self.extra),
            "warnings": list(self.warnings),
        }


def _r2(rss, tss):
    # constant dependent: report 0 instead of NaN
    if tss <= 0:
        return 0.0
    return float(min(1.0, max(0.0, 1.0 - rss / tss)))


def _column_rank(X):
    if X.shape[1] == 0:
        return 0
    s = np.linalg.svd(X, compute_uv=False)
    return int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0


def _redundant(X, names, candidates):
    """Names among ``candidates`` whose column lies in the span of the rest."""
    full = _column_rank(X)
    out = []
    for j, n in enumerate(names):
        if n in candidates and _column_rank(np.delete(X, j, axis=1)) == full:
            out.append(n)
    return out


def _covariance(spec, X, resid, bread, dof, clusters, n_params):
    if spec.covariance == "classical":
        return classical_from_arrays(bread, float(resid @ resid), dof)
    return cluster_from_arrays(X, resid, clusters, bread, n_params)


def _prepare(data: PanelDataset, spec: ModelSpec):
    if not spec.regressors:
        raise EstimationError("model has no regressors")
    data.require([spec.dependent, *spec.regressors])
    full_n = data.n_obs
    data = data.complete_cases([spec.dependent, *spec.regressors])
    if data.n_obs == 0:
        raise DataError("no complete observations for the model variables")
    return data, full_n - data.n_obs


def fit_pooled(data: PanelDataset, spec: ModelSpec) -> FitResult:
    """OLS of the dependent variable on ``[intercept | regressors]``."""
    if spec.effects != "none":
        raise EstimationError(f"pooled OLS needs effects='none', got {spec.effects!r}")
    data, dropped = _prepare(data, spec)
    design = build_lsdv_design(data, spec)
    return _fit_lsdv_design(design, spec, "pooled", dropped)


def _fit_lsdv_design(design, spec, kind, dropped):
    X, y = design.X, design.y
    n, k = X.shape
    if n <= k:
        raise EstimationError(f"fewer observations ({n}) than parameters ({k}) leave no residual dof")
    sol = solve_least_squares(X, y)
    if sol.rank < k:
        culprits = _redundant(X, design.column_names, set(spec.regressors))
        what = ", ".join(culprits) if culprits else "dummy structure"
        raise CollinearityError(
            f"design is rank deficient (rank {sol.rank} of {k}); collinear: {what}", culprits
        )
    data = design.data
    dof = n - k
    cov = _covariance(spec, X, sol.residuals, sol.xtx_inverse, dof, design.entity_index, k)
    tss = float(np.sum((y - y.mean()) ** 2))
    if spec.effects == "none":
        r2_within = _r2(sol.rss, tss)
    else:
        y_w = demean(y, design.entity_index, design.period_index, spec.effects, data.balanced)
        r2_within = _r2(sol.rss, float(y_w @ y_w))
    return FitResult(
        spec=spec,
        names=design.column_names,
        params=sol.coefficients,
        covariance=cov,
        residuals=sol.residuals,
        r_squared_overall=_r2(sol.rss, tss),
        r_squared_within=r2_within,
        n_obs=n,
        dof_residual=dof,
        estimator_kind=kind,
        n_params=k,
        design=X,
        bread=sol.xtx_inverse,
        clusters=design.entity_index,
        n_clusters=len(data.entities),
        entities=data.entities,
        periods=data.periods,
        dummy_blocks=design.dummy_blocks,
        n_dropped=dropped,
    )


def _absorbed_count(effects, n_e, n_t):
    return {"entity": n_e, "time": n_t, "twoway": n_e + n_t - 1}[effects]


def _recover_effects(u, data, spec):
    """Dummy coefficients (LSDV coding) explaining ``u = y - X b``."""
    e, t = data.entity_index, data.period_index
    if data.balanced and spec.intercept:
        ne, nt = len(data.entities), len(data.periods)
        ue = np.bincount(e, weights=u, minlength=ne) / np.bincount(e, minlength=ne)
        ut = np.bincount(t, weights=u, minlength=nt) / np.bincount(t, minlength=nt)
        out = {}
        if spec.effects == "twoway":
            out["const"] = ue[0] + ut[0] - u.mean()
        elif spec.effects == "entity":
            out["const"] = ue[0]
        else:
            out["const"] = ut[0]
        if spec.effects in ("entity", "twoway"):
            out.update({f"entity[{s}]": ue[i] - ue[0] for i, s in enumerate(data.entities) if i})
        if spec.effects in ("time", "twoway"):
            out.update({f"time[{s}]": ut[i] - ut[0] for i, s in enumerate(data.periods) if i})
        return {k: float(v) for k, v in out.items()}
    cols, names = [], []
    if spec.intercept:
        cols.append(np.ones_like(u))
        names.append("const")
    if spec.effects in ("entity", "twoway"):
        first = 1 if spec.intercept else 0
        for i in range(first, len(data.entities)):
            cols.append((e == i).astype(float))
            names.append(f"entity[{data.entities[i]}]")
    if spec.effects in ("time", "twoway"):
        first = 1 if (spec.intercept or spec.effects == "twoway") else 0
        for i in range(first, len(data.periods)):
            cols.append((t == i).astype(float))
            names.append(f"time[{data.periods[i]}]")
    sol = solve_least_squares(np.column_stack(cols), u)
    return dict(zip(names, map(float, sol.coefficients)))


def fit_fixed_effects(data: PanelDataset, spec: ModelSpec, method: str = "lsdv") -> FitResult:
    """Fixed-effects regression.

    Parameters
    ----------
    data : PanelDataset
    spec : ModelSpec
        ``effects`` must be ``entity``, ``time`` or ``twoway``.
    method : {"lsdv", "within"}
        ``lsdv`` estimates every dummy explicitly. ``within`` regresses
        demeaned data and counts the absorbed effects in the residual dof,
        so both methods give the same slopes, residuals and SEs; the
        within fit recovers the dummy coefficients into ``absorbed``
        (without standard errors).

    Raises
    ------
    CollinearityError
        A regressor has no variation left after removing the fixed
        effects, or regressors are collinear with each other.
    """
    if spec.effects not in ("entity", "time", "twoway"):
        raise EstimationError(f"fixed effects need entity/time/twoway effects, got {spec.effects!r}")
    data, dropped = _prepare(data, spec)
    if method == "lsdv":
        return _fit_lsdv_design(build_lsdv_design(data, spec), spec, "fe_lsdv", dropped)
    if method != "within":
        raise ValueError(f"unknown fixed-effects method {method!r}")

    for name in spec.regressors:
        if np.ptp(data[name]) == 0.0:
            raise DataError(f"regressor {name!r} is constant in the estimation sample")
    y = np.array(data[spec.dependent])
    X = data.matrix(spec.regressors)
    e, t = data.entity_index, data.period_index
    balanced = data.balanced
    Z = demean(np.column_stack([y, X]), e, t, spec.effects, balanced)
    y_w, X_w = Z[:, 0], Z[:, 1:]
    flat = [
        n for j, n in enumerate(spec.regressors)
        if np.linalg.norm(X_w[:, j]) <= 1e-9 * max(np.linalg.norm(X[:, j]), 1e-300)
    ]
    if flat:
        raise CollinearityError(
            f"regressor(s) collinear with the {spec.effects} dummy structure: {', '.join(flat)}", flat
        )
    n, k = X_w.shape
    ne, nt = len(data.entities), len(data.periods)
    n_params = k + _absorbed_count(spec.effects, ne, nt)
    dof = n - n_params
    if dof <= 0:
        raise EstimationError(f"fewer observations ({n}) than parameters ({n_params}) leave no residual dof")
    sol = solve_least_squares(X_w, y_w)
    if sol.rank < k:
        culprits = _redundant(X_w, spec.regressors, set(spec.regressors))
        raise CollinearityError(
            f"regressors collinear after removing fixed effects: {', '.join(culprits)}", culprits
        )
    resid = sol.residuals
    cov = _covariance(spec, X_w, resid, sol.xtx_inverse, dof, e, n_params)
    tss = float(np.sum((y - y.mean()) ** 2))
    absorbed = _recover_effects(y - X @ sol.coefficients, data, spec)
    return FitResult(
        spec=spec,
        names=spec.regressors,
        params=sol.coefficients,
        covariance=cov,
        residuals=resid,
        r_squared_overall=_r2(sol.rss, tss),
        r_squared_within=_r2(sol.rss, float(y_w @ y_w)),
        n_obs=n,
        dof_residual=dof,
        estimator_kind="fe_within",
        n_params=n_params,
        design=X_w,
        bread=sol.xtx_inverse,
        clusters=e,
        n_clusters=ne,
        entities=data.entities,
        periods=data.periods,
        absorbed=MappingProxyType(absorbed),
        n_dropped=dropped,
    )


def fit_random_effects(data: PanelDataset, spec: ModelSpec) -> FitResult:
    """Swamy-Arora random-effects GLS over entity effects.

    With ``effects="twoway"`` the entity effects are random and the time
    effects enter as fixed period dummies. Balanced panels only.

    The idiosyncratic variance comes from the within regression, the
    entity-effect variance from the between regression of entity means,
    ``s2_a = s2_between - s2_e / T`` (truncated at zero with a warning),
    and ``theta = 1 - sqrt(s2_e / (s2_e + T s2_a))`` drives the
    quasi-demeaning.
    """
    if spec.effects not in ("entity", "twoway"):
        raise EstimationError(f"random effects need effects='entity' or 'twoway', got {spec.effects!r}")
    data, dropped = _prepare(data, spec)
    if not data.balanced:
        raise DataError("random effects require a balanced panel (after listwise deletion)")
    e, t = data.entity_index, data.period_index
    ne, nt = len(data.entities), len(data.periods)
    n = data.n_obs
    y = np.array(data[spec.dependent])
    X = data.matrix(spec.regressors)
    k = X.shape[1]

    # within regression
    Z = demean(np.column_stack([y, X]), e, t, spec.effects, True)
    within = solve_least_squares(Z[:, 1:], Z[:, 0])
    if within.rank < k:
        culprits = _redundant(Z[:, 1:], spec.regressors, set(spec.regressors))
        raise CollinearityError(
            f"regressors collinear after removing entity effects: {', '.join(culprits)}", culprits
        )
    dof_w = n - k - _absorbed_count(spec.effects, ne, nt)
    if dof_w <= 0:
        raise EstimationError("no residual dof in the within regression")
    s2_e = within.rss / dof_w

    # between regression on entity means (time-dummy means are constant in a balanced panel)
    counts = np.bincount(e, minlength=ne).astype(float)
    means = np.column_stack(
        [np.bincount(e, weights=c, minlength=ne) / counts for c in np.column_stack([y, X]).T]
    )
    Xb = np.column_stack([np.ones(ne), means[:, 1:]]) if spec.intercept else means[:, 1:]
    dof_b = ne - Xb.shape[1]
    if dof_b <= 0:
        raise EstimationError(f"between regression needs more entities ({ne}) than parameters ({Xb.shape[1]})")
    between = solve_least_squares(Xb, means[:, 0])
    s2_b = between.rss / dof_b
    s2_a = s2_b - s2_e / nt
    warnings = []
    if s2_a < 0:
        warnings.append(f"negative entity variance component {s2_a:.6g} truncated to zero")
        s2_a = 0.0
    denom = s2_e + nt * s2_a
    theta = 0.0 if denom <= 0 else 1.0 - math.sqrt(s2_e / denom)

    cols, names = [], []
    if spec.intercept:
        cols.append(np.ones((n, 1)))
        names.append("const")
    cols.append(X)
    names.extend(spec.regressors)
    if spec.effects == "twoway":
        first = 1 if spec.intercept else 0
        D = np.zeros((n, nt))
        D[np.arange(n), t] = 1.0
        cols.append(D[:, first:])
        names.extend(f"time[{s}]" for s in data.periods[first:])
    X_raw = np.hstack(cols)
    K = X_raw.shape[1]
    if n <= K:
        raise EstimationError("fewer observations than parameters")
    raw_means = np.column_stack(
        [np.bincount(e, weights=c, minlength=ne) / counts for c in X_raw.T]
    )
    Xq = X_raw - theta * raw_means[e]
    yq = y - theta * means[e, 0]
    sol = solve_least_squares(Xq, yq)
    if sol.rank < K:
        culprits = _redundant(Xq, tuple(names), set(spec.regressors))
        raise CollinearityError(f"random-effects design rank deficient: {', '.join(culprits)}", culprits)
    dof = n - K
    cov = _covariance(spec, Xq, sol.residuals, sol.xtx_inverse, dof, e, K)

    # fitted values without the entity effect
    fitted = X_raw @ sol.coefficients
    tss = float(np.sum((y - y.mean()) ** 2))
    rss_overall = float(np.sum((y - fitted) ** 2))
    start = 1 if spec.intercept else 0
    slopes = sol.coefficients[start:start + k]
    r_w = Z[:, 0] - Z[:, 1:] @ slopes
    return FitResult(
        spec=spec,
        names=tuple(names),
        params=sol.coefficients,
        covariance=cov,
        residuals=sol.residuals,
        r_squared_overall=_r2(rss_overall, tss),
        r_squared_within=_r2(float(r_w @ r_w), float(Z[:, 0] @ Z[:, 0])),
        n_obs=n,
        dof_residual=dof,
        estimator_kind="re",
        n_params=K,
        design=Xq,
        bread=sol.xtx_inverse,
        clusters=e,
        n_clusters=ne,
        entities=data.entities,
        periods=data.periods,
        extra=MappingProxyType({"theta": theta, "sigma2_e": s2_e, "sigma2_a": s2_a}),
        warnings=tuple(warnings),
        n_dropped=dropped,
    )


def fit(data: PanelDataset, spec: ModelSpec, method: str = "lsdv") -> FitResult:
    """Dispatch on ``spec.effects``: pooled OLS for ``none``, FE otherwise."""
    if spec.effects == "none":
        return fit_pooled(data, spec)
    return fit_fixed_effects(data, spec, method)
