"""Least squares and the distribution functions behind every p-value.

Matrices are plain 2-D ``numpy`` float arrays. The CDFs are built on
regularized incomplete beta and gamma functions evaluated with Lentz's
continued fraction (and a power series for the gamma function at small
arguments); they work on Python scalars and are accurate to well below
1e-8 absolute over the dof ranges that occur in panel work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import PanelKitError

__all__ = [
    "LeastSquaresSolution",
    "solve_least_squares",
    "RANK_TOL",
    "betainc",
    "gammainc",
    "t_cdf",
    "t_sf",
    "t_two_sided_p",
    "t_ppf",
    "f_cdf",
    "f_sf",
    "chi2_cdf",
    "chi2_sf",
]

# singular values below RANK_TOL * largest are treated as zero
RANK_TOL = 1e-10

_EPS = 1e-16
_FPMIN = 1e-300
_MAXIT = 20000


class NumericsError(PanelKitError):
    pass


@dataclass(frozen=True)
class LeastSquaresSolution:
    coefficients: np.ndarray
    residuals: np.ndarray
    rss: float
    xtx_inverse: np.ndarray
    rank: int

    @property
    def full_rank(self) -> bool:
        return self.rank == self.coefficients.shape[0]


def solve_least_squares(X, y) -> LeastSquaresSolution:
    """Minimum-norm least squares via the thin SVD.

    Parameters
    ----------
    X : array_like, shape (n, k)
        Design matrix, ``n >= k``.
    y : array_like, shape (n,)

    Returns
    -------
    LeastSquaresSolution
        ``xtx_inverse`` is the Moore-Penrose inverse of ``X'X`` restricted
        to the identified subspace; it equals ``(X'X)^{-1}`` when
        ``rank == k``.

    Raises
    ------
    NumericsError
        On shape mismatch, ``n < k`` or non-finite entries.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise NumericsError(f"design must be a non-empty 2-D array, got shape {X.shape}")
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise NumericsError(
            f"dimension mismatch: X has {X.shape[0]} rows, y has shape {y.shape}"
        )
    n, k = X.shape
    if n < k:
        raise NumericsError(f"fewer observations ({n}) than columns ({k})")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NumericsError("non-finite value in least-squares input")

    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    rank = int(np.sum(s > RANK_TOL * s[0])) if s[0] > 0 else 0
    Ur, sr, Vr = U[:, :rank], s[:rank], Vt[:rank].T
    beta = Vr @ ((Ur.T @ y) / sr)
    resid = y - X @ beta
    xtx_inv = (Vr / sr**2) @ Vr.T
    xtx_inv = 0.5 * (xtx_inv + xtx_inv.T)
    return LeastSquaresSolution(
        coefficients=beta,
        residuals=resid,
        rss=float(resid @ resid),
        xtx_inverse=xtx_inv,
        rank=rank,
    )


# -- incomplete beta -------------------------------------------------------


def _betacf(a, b, x):
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericsError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _betainc_pair(a, b, x, y):
    """Return ``(I_x(a, b), 1 - I_x(a, b))`` with ``y = 1 - x`` supplied
    separately so the complement keeps full relative precision."""
    if x <= 0.0:
        return 0.0, 1.0
    if y <= 0.0:
        return 1.0, 0.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log(y)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        lower = front * _betacf(a, b, x) / a
        return lower, 1.0 - lower
    upper = front * _betacf(b, a, y) / b
    return 1.0 - upper, upper


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function ``I_x(a, b)``."""
    if a <= 0 or b <= 0:
        raise NumericsError("betainc requires a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise NumericsError(f"betainc argument outside [0, 1]: {x}")
    return _betainc_pair(a, b, x, 1.0 - x)[0]


# -- incomplete gamma ------------------------------------------------------


def _gammainc_pair(a, x):
    """Return ``(P(a, x), Q(a, x))``."""
    if x <= 0.0:
        return 0.0, 1.0
    log_front = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        ap = a
        term = total = 1.0 / a
        for _ in range(_MAXIT):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                p = total * math.exp(log_front)
                return p, 1.0 - p
        raise NumericsError(f"incomplete gamma series did not converge (a={a}, x={x})")
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            q = math.exp(log_front) * h
            return 1.0 - q, q
    raise NumericsError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def gammainc(a: float, x: float) -> float:
    """Regularized lower incomplete gamma function ``P(a, x)``."""
    if a <= 0:
        raise NumericsError("gammainc requires a > 0")
    if x < 0:
        raise NumericsError(f"gammainc argument must be nonnegative: {x}")
    return _gammainc_pair(a, x)[0]


# -- distributions ---------------------------------------------------------


def _check_dof(*dofs):
    for d in dofs:
        if d is None or not d > 0 or not math.isfinite(d):
            raise NumericsError(f"degrees of freedom must be positive and finite, got {d}")


def _t_tails(x, dof):
    # (P(T <= x), P(T > x))
    _check_dof(dof)
    x = float(x)
    if math.isnan(x):
        raise NumericsError("t statistic is NaN")
    if math.isinf(x):
        return (1.0, 0.0) if x > 0 else (0.0, 1.0)
    x2 = x * x
    denom = dof + x2
    # half the two-sided tail: 0.5 * I_{dof/(dof+x^2)}(dof/2, 1/2)
    tail, _ = _betainc_pair(0.5 * dof, 0.5, dof / denom, x2 / denom)
    tail *= 0.5
    if x >= 0:
        return 1.0 - tail, tail
    return tail, 1.0 - tail


def t_cdf(x: float, dof: float) -> float:
    """``P(T <= x)`` for Student's t with ``dof`` degrees of freedom."""
    return _t_tails(x, dof)[0]


def t_sf(x: float, dof: float) -> float:
    return _t_tails(x, dof)[1]


def t_two_sided_p(t: float, dof: float) -> float:
    """``P(|T| >= |t|)``."""
    return min(1.0, 2.0 * _t_tails(-abs(float(t)), dof)[0])


def t_ppf(q: float, dof: float) -> float:
    """Quantile of Student's t, by bisection on :func:`t_cdf`."""
    _check_dof(dof)
    if not 0.0 < q < 1.0:
        raise NumericsError(f"quantile level must lie in (0, 1), got {q}")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -t_ppf(1.0 - q, dof)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, dof) < q:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, dof) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _f_tails(x, dof1, dof2):
    _check_dof(dof1, dof2)
    x = float(x)
    if math.isnan(x) or x < 0:
        raise NumericsError(f"F statistic must be nonnegative, got {x}")
    if math.isinf(x):
        return 1.0, 0.0
    denom = dof2 + dof1 * x
    return _betainc_pair(0.5 * dof1, 0.5 * dof2, dof1 * x / denom, dof2 / denom)


def f_cdf(x: float, dof1: float, dof2: float) -> float:
    """``P(F <= x)`` for the F distribution with ``(dof1, dof2)`` dof."""
    return _f_tails(x, dof1, dof2)[0]


def f_sf(x: float, dof1: float, dof2: float) -> float:
    return _f_tails(x, dof1, dof2)[1]


def _chi2_tails(x, dof):
    _check_dof(dof)
    x = float(x)
    if math.isnan(x) or x < 0:
        raise NumericsError(f"chi-square statistic must be nonnegative, got {x}")
    if math.isinf(x):
        return 1.0, 0.0
    return _gammainc_pair(0.5 * dof, 0.5 * x)


def chi2_cdf(x: float, dof: float) -> float:
    """``P(X <= x)`` for the chi-square distribution with ``dof`` dof."""
    return _chi2_tails(x, dof)[0]


def chi2_sf(x: float, dof: float) -> float:
    return _chi2_tails(x, dof)[1]
