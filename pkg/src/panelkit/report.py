"""Fixed-width regression tables for fixed-effects fits.

Number formatting rules (per row, driven by the coefficient):

=====================  ===========================================
column                 rule
=====================  ===========================================
B, SE(B)               3 decimals if |B| >= 0.01, otherwise three
                       significant digits of B (at most 6 decimals);
                       SE uses the same decimals as its B
Student's test         3 decimals
P-value (rows)         3 decimals; below 0.0005 shown as ``<0.000``
P-value (footer)       3 decimals; below 0.0005 shown as ``0.000``
R-squared              2 decimals
F, Chi-square          1 decimal
=====================  ===========================================
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import PanelKitError
from .estimators import FitResult
from .inference import TestResult, panel_diagnostics, t_test

__all__ = [
    "FitTests",
    "compute_fit_tests",
    "render_fit_table",
    "summary_fit",
    "row_decimals",
    "format_p",
]

LABEL_WIDTH = 22
NUM_WIDTH = 14


@dataclass(frozen=True)
class FitTests:
    t_tests: Mapping[str, TestResult]
    entity_dummies: TestResult | None = None
    time_dummies: TestResult | None = None
    extra: tuple = field(default_factory=tuple)


def compute_fit_tests(fit) -> FitTests:
    """Per-coefficient t tests (non-dummy rows) plus the dummy-block tests."""
    blocks = fit.dummy_blocks or {}
    dummy_idx = {i for s in blocks.values() for i in range(s.start, s.stop)}
    rows = [n for i, n in enumerate(fit.names) if i not in dummy_idx]
    ent, tim = panel_diagnostics(fit) if blocks else (None, None)
    return FitTests({n: t_test(fit, n) for n in rows}, ent, tim)


def summary_fit(spec, estimates, standard_errors, n_obs, r_squared, r_squared_within=math.nan,
                dof_residual=0, n_clusters=0) -> FitResult:
    """Wrap externally reported summary numbers as a :class:`FitResult`.

    Only what the renderer reads is meaningful: names, estimates, a
    diagonal covariance built from ``standard_errors``, ``n_obs`` and the
    R-squared values.
    """
    names = (("const",) if spec.intercept else ()) + tuple(spec.regressors)
    b = np.array([estimates[n] for n in names], dtype=float)
    se = np.array([standard_errors[n] for n in names], dtype=float)
    empty = np.empty((0, len(names)))
    return FitResult(
        spec=spec, names=names, params=b, covariance=np.diag(se**2), residuals=np.empty(0),
        r_squared_overall=r_squared, r_squared_within=r_squared_within, n_obs=n_obs,
        dof_residual=dof_residual, estimator_kind="summary", n_params=len(names),
        design=empty, bread=np.diag(np.ones(len(names))), clusters=np.empty(0, dtype=int),
        n_clusters=n_clusters,
    )


def row_decimals(b: float) -> int:
    b = abs(b)
    if b >= 0.01 or b == 0.0 or not math.isfinite(b):
        return 3
    return min(6, 2 - math.floor(math.log10(b)))


def _fixed(v: float, d: int) -> str:
    s = f"{v:.{d}f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s


def format_p(p: float, less_than=True) -> str:
    if p < 0.0005:
        return "<0.000" if less_than else "0.000"
    return f"{p:.3f}"


def render_fit_table(fit, tests: FitTests, title: str | None = None, less_than=True) -> str:
    """Render ``fit`` as a text table.

    Rows: the constant first, then the regressors in spec order. Dummy
    coefficients are summarized only through the joint tests in the
    footer, which is required for twoway/entity/time fits and omitted
    otherwise.
    """
    spec = fit.spec
    robust = spec.covariance == "cluster_entity"
    need_entity = spec.effects in ("entity", "twoway")
    need_time = spec.effects in ("time", "twoway")
    if need_entity and tests.entity_dummies is None:
        raise PanelKitError("table needs the joint test on entity dummies")
    if need_time and tests.time_dummies is None:
        raise PanelKitError("table needs the joint test on time dummies")

    rows = []
    if spec.intercept:
        rows.append(("const", "Constant  b0"))
    rows.extend((name, f"b{i}  {name}[i,t]") for i, name in enumerate(spec.regressors, 1))
    se = fit.standard_errors
    coefs = fit.coefficients

    se_head = "SE(B) robust" if robust else "SE(B)"
    lines = []
    if title:
        lines.append(title)
    lines.append(
        f"{'Variables':<{LABEL_WIDTH}}{'B':>{NUM_WIDTH}}{se_head:>{NUM_WIDTH}}"
        f"{'Student' + chr(39) + 's test':>{NUM_WIDTH + 2}}{'P-value':>{NUM_WIDTH - 4}}"
    )
    for name, label in rows:
        if name not in tests.t_tests:
            raise PanelKitError(f"no t test supplied for {name!r}")
        tt = tests.t_tests[name]
        b = coefs[name]
        d = row_decimals(b)
        lines.append(
            f"{label:<{LABEL_WIDTH}}{_fixed(b, d):>{NUM_WIDTH}}{_fixed(se[name], d):>{NUM_WIDTH}}"
            f"{_fixed(tt.statistic, 3):>{NUM_WIDTH + 2}}"
            f"{format_p(tt.p_value, less_than):>{NUM_WIDTH - 4}}"
        )
    r2 = f"R-squared={fit.r_squared_overall:.2f}"
    if fit.r_squared_within is not None and math.isfinite(fit.r_squared_within):
        r2 += f"  within R-squared={fit.r_squared_within:.2f}"
    lines.append(f"Dependent variable: {spec.dependent}[i,t]  N.T={fit.n_obs}  {r2}")
    if need_entity or need_time:
        lines.append("Diagnosis of panel components:")
        k = 0
        if need_entity:
            k += 1
            t = tests.entity_dummies
            kind = "Robust F-test" if robust else "F-test"
            lines.append(
                f"{k}) {kind} for joint significance on regional dummies: H0: delta_r = 0"
                f"  F({t.dof1:g}, {t.dof2:g}) = {t.statistic:.1f}"
                f"  p-value={format_p(t.p_value, less_than=False)}"
            )
        if need_time:
            k += 1
            t = tests.time_dummies
            lines.append(
                f"{k}) Wald joint test on time dummies: H0: gamma_s = 0"
                f"  Chi-square({t.dof1:g}) = {t.statistic:.1f}"
                f"  p-value = {format_p(t.p_value, less_than=False)}"
            )
        for t in (tests.entity_dummies, tests.time_dummies):
            for w in (t.warnings if t is not None else ()):
                lines.append(f"   note: {w}")
    for w in fit.warnings:
        lines.append(f"note: {w}")
    return "\n".join(lines) + "\n"
