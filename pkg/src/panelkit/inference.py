"""Covariance estimators and hypothesis tests on fitted models.

"Robust" throughout means the entity-clustered (Arellano) sandwich

    V = c * B (sum_g X_g' e_g e_g' X_g) B,    B = (X'X)^{-1}
    c = G / (G - 1) * (n - 1) / (n - k)

which tolerates arbitrary heteroskedasticity and serial correlation inside
each entity. ``k`` counts every estimated parameter, absorbed fixed
effects included, so LSDV and within fits report identical slope SEs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EstimationError, SingularCovarianceError
from .numerics import chi2_sf, f_sf, t_two_sided_p

__all__ = [
    "TestResult",
    "classical_covariance",
    "cluster_robust_covariance",
    "default_t_dof",
    "t_test",
    "joint_wald_test",
    "hausman_test",
    "panel_diagnostics",
]

EIG_TOL = 1e-10


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    distribution: str  # "student_t" | "f" | "chi_square"
    dof1: float
    dof2: float | None
    p_value: float
    detail: str = ""
    warnings: tuple = field(default_factory=tuple)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.distribution not in ("student_t", "f", "chi_square"):
            raise ValueError(f"unknown distribution {self.distribution!r}")
        if (self.distribution == "f") != (self.dof2 is not None):
            raise ValueError("dof2 is required for the F distribution and only for it")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value outside [0, 1]: {self.p_value}")

    def reject(self, level=0.05) -> bool:
        return self.p_value < level

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "distribution": self.distribution,
            "dof1": self.dof1,
            "dof2": self.dof2,
            "p_value": self.p_value,
            "detail": self.detail,
            "warnings": list(self.warnings),
        }


def _sym(V):
    return 0.5 * (V + V.T)


# -- array level; estimators call these directly ----------------------------


def classical_from_arrays(bread, rss, dof_residual):
    if dof_residual <= 0:
        raise EstimationError("classical covariance needs positive residual degrees of freedom")
    return _sym(bread * (rss / dof_residual))


def cluster_from_arrays(X, resid, clusters, bread, n_params=None, small_sample=True):
    X = np.asarray(X, dtype=float)
    resid = np.asarray(resid, dtype=float)
    n, k = X.shape
    _, codes = np.unique(np.asarray(clusters), return_inverse=True)
    codes = codes.reshape(-1)
    if codes.shape[0] != n:
        raise EstimationError(f"cluster assignment has {codes.shape[0]} entries for {n} rows")
    G = int(codes.max()) + 1
    if G < 2:
        raise EstimationError("cluster-robust covariance needs at least 2 clusters")
    scores = X * resid[:, None]
    S = np.zeros((G, k))
    for j in range(k):
        S[:, j] = np.bincount(codes, weights=scores[:, j], minlength=G)
    meat = S.T @ S
    V = bread @ meat @ bread
    if small_sample:
        p = k if n_params is None else n_params
        if n - p <= 0:
            raise EstimationError("cluster small-sample factor undefined: n <= parameters")
        V = V * (G / (G - 1) * (n - 1) / (n - p))
    return _sym(V)


# -- fit level --------------------------------------------------------------


def classical_covariance(fit):
    """``s^2 (X'X)^{-1}`` with ``s^2 = RSS / dof_residual``."""
    rss = float(fit.residuals @ fit.residuals)
    return classical_from_arrays(fit.bread, rss, fit.dof_residual)


def cluster_robust_covariance(fit, cluster=None, small_sample=True):
    """Cluster-robust sandwich covariance.

    Parameters
    ----------
    fit : FitResult
    cluster : array_like, optional
        Cluster label per estimation row; defaults to the fit's entities.
    small_sample : bool
        Apply the ``G/(G-1) * (n-1)/(n-k)`` factor.
    """
    clusters = fit.clusters if cluster is None else np.asarray(cluster)
    if len(clusters) != fit.n_obs:
        raise EstimationError(f"cluster assignment has {len(clusters)} entries for {fit.n_obs} rows")
    return cluster_from_arrays(
        fit.design, fit.residuals, clusters, fit.bread, fit.n_params, small_sample
    )


def heteroskedastic_covariance(fit):
    """HC1: every row its own cluster, scaled by ``n / (n - k)``."""
    n = fit.n_obs
    V = cluster_from_arrays(fit.design, fit.residuals, np.arange(n), fit.bread, small_sample=False)
    return V * (n / (n - fit.n_params))


def default_t_dof(fit):
    """``G - 1`` for cluster-robust fits, residual dof otherwise."""
    if fit.covariance_type == "cluster_entity":
        return fit.n_clusters - 1
    return fit.dof_residual


def _index(fit, names):
    lookup = {n: i for i, n in enumerate(fit.names)}
    missing = [n for n in names if n not in lookup]
    if missing:
        raise EstimationError(f"coefficients not in fit: {', '.join(missing)}")
    return [lookup[n] for n in names]


def t_test(fit, coefficient, covariance=None, dof=None) -> TestResult:
    """Two-sided t test of ``coefficient = 0``."""
    V = fit.covariance if covariance is None else np.asarray(covariance)
    dof = default_t_dof(fit) if dof is None else dof
    (i,) = _index(fit, [coefficient])
    var = float(V[i, i])
    if not var > 0:
        raise EstimationError(f"zero standard error for {coefficient!r}")
    se = var**0.5
    t = float(fit.params[i]) / se
    return TestResult(
        name=f"t({coefficient})",
        statistic=t,
        distribution="student_t",
        dof1=dof,
        dof2=None,
        p_value=t_two_sided_p(t, dof),
        detail=f"estimate={fit.params[i]:.6g} se={se:.6g}",
    )


def _quadratic_form(b, V, what):
    w, Q = np.linalg.eigh(_sym(V))
    top = max(abs(w).max(initial=0.0), 0.0)
    rank = int(np.sum(w > EIG_TOL * top)) if top > 0 else 0
    if rank < len(b):
        raise SingularCovarianceError(
            f"covariance of {what} is singular (rank {rank} of {len(b)})", rank
        )
    z = Q.T @ b
    return float(np.sum(z * z / w))


def joint_wald_test(fit, coefficients, covariance=None, form="chi_square", dof2=None, name=None):
    """Wald test that every coefficient in ``coefficients`` is zero.

    ``form="chi_square"`` reports ``W`` on ``q`` dof; ``form="f"`` reports
    ``W / q`` on ``(q, dof2)`` where ``dof2`` defaults to ``G - 1`` for
    cluster-robust fits and the residual dof otherwise.
    """
    coefficients = list(coefficients)
    if not coefficients:
        raise EstimationError("joint test needs at least one coefficient")
    idx = _index(fit, coefficients)
    V = fit.covariance if covariance is None else np.asarray(covariance)
    b = np.asarray(fit.params)[idx]
    Vq = V[np.ix_(idx, idx)]
    q = len(idx)
    W = _quadratic_form(b, Vq, f"{q} tested coefficients")
    label = name or f"joint({q})"
    if form == "chi_square":
        return TestResult(label, W, "chi_square", q, None, chi2_sf(W, q),
                          detail=f"H0: {q} coefficients = 0")
    if form == "f":
        d2 = default_t_dof(fit) if dof2 is None else dof2
        F = W / q
        return TestResult(label, F, "f", q, d2, f_sf(F, q, d2),
                          detail=f"H0: {q} coefficients = 0")
    raise ValueError(f"unknown form {form!r}")


def hausman_test(fe, re, covariance="classical", level=0.05) -> TestResult:
    """Hausman contrast of fixed- and random-effects slope estimates.

    ``H = d' (V_FE - V_RE)^- d`` over the shared regressors.

    ``covariance`` selects the two matrices:

    - ``"classical"`` (default): ``s^2 (X'X)^{-1}`` for both models with
      the common scale ``s^2`` taken from the fixed-effects residuals. In a
      balanced panel this makes ``V_FE - V_RE`` positive semidefinite.
    - ``"separate"``: each model's own classical covariance.
    - ``"fit"``: whatever covariance each fit carries.

    When the difference matrix is not positive definite the generalized
    inverse on its positive eigenspace is used, the dof drops to that
    rank, and a warning is attached.
    """
    if fe.spec.dependent != re.spec.dependent:
        raise EstimationError("Hausman fits have different dependent variables")
    names = [r for r in fe.spec.regressors]
    if not names:
        raise EstimationError("Hausman comparison set is empty")
    if list(re.spec.regressors) != names:
        raise EstimationError("Hausman fits have different regressors")
    i_fe, i_re = _index(fe, names), _index(re, names)
    if covariance == "classical":
        s2 = float(fe.residuals @ fe.residuals) / fe.dof_residual
        V_fe, V_re = s2 * fe.bread, s2 * re.bread
    elif covariance == "separate":
        V_fe, V_re = classical_covariance(fe), classical_covariance(re)
    elif covariance == "fit":
        V_fe, V_re = fe.covariance, re.covariance
    else:
        raise ValueError(f"unknown covariance option {covariance!r}")
    d = np.asarray(fe.params)[i_fe] - np.asarray(re.params)[i_re]
    D = _sym(V_fe[np.ix_(i_fe, i_fe)] - V_re[np.ix_(i_re, i_re)])
    w, Q = np.linalg.eigh(D)
    top = abs(w).max(initial=0.0)
    keep = w > EIG_TOL * top if top > 0 else np.zeros_like(w, dtype=bool)
    rank = int(keep.sum())
    warnings = []
    if rank == 0:
        raise EstimationError("V_FE - V_RE has no positive eigenvalues; Hausman test undefined")
    if rank < len(names):
        warnings.append(
            f"V_FE - V_RE not positive definite; generalized inverse of rank {rank} used"
        )
    z = (Q[:, keep].T @ d)
    H = max(float(np.sum(z * z / w[keep])), 0.0)
    p = chi2_sf(H, rank)
    verdict = (
        "reject RE: fixed effects preferred" if p < level else "do not reject RE: random effects consistent"
    )
    return TestResult(
        name="hausman",
        statistic=H,
        distribution="chi_square",
        dof1=rank,
        dof2=None,
        p_value=p,
        detail=f"{verdict} at {level:g} level; compared {', '.join(names)}",
        warnings=tuple(warnings),
    )


def panel_diagnostics(fit):
    """Joint tests on the dummy blocks of an LSDV fit.

    Returns ``(entity_test, time_test)``; either is ``None`` when the fit
    has no such block. Entity dummies get an F test, time dummies a
    chi-square Wald test. Under entity clustering every entity dummy's
    score sums to zero within its own cluster, so the clustered covariance
    of that block is singular; the entity test then falls back to the
    heteroskedasticity-robust (HC1) covariance with the residual dof, and
    says so in ``detail``.
    """
    blocks = getattr(fit, "dummy_blocks", None) or {}
    entity = time = None
    robust = fit.covariance_type == "cluster_entity"
    if "entity" in blocks:
        names = fit.names[blocks["entity"]]
        try:
            entity = joint_wald_test(fit, names, form="f", name="entity_dummies")
        except SingularCovarianceError:
            if not robust:
                raise
            entity = joint_wald_test(
                fit, names, covariance=heteroskedastic_covariance(fit), form="f",
                dof2=fit.dof_residual, name="entity_dummies",
            )
            entity = TestResult(
                **{**entity.to_dict(), "warnings": (
                    "clustered covariance singular on entity dummies; HC1 used",),
                   "detail": entity.detail + " (HC1 covariance)"}
            )
    if "time" in blocks:
        names = fit.names[blocks["time"]]
        try:
            time = joint_wald_test(fit, names, form="chi_square", name="time_dummies")
        except SingularCovarianceError:
            if not robust:
                raise
            time = joint_wald_test(
                fit, names, covariance=heteroskedastic_covariance(fit),
                form="chi_square", name="time_dummies",
            )
            time = TestResult(
                **{**time.to_dict(), "warnings": (
                    "clustered covariance singular on time dummies; HC1 used",),
                   "detail": time.detail + " (HC1 covariance)"}
            )
    return entity, time
