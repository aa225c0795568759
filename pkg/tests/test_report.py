from pathlib import Path

import numpy as np
import pytest

from panelkit.errors import PanelKitError
from panelkit.estimators import ModelSpec, fit_fixed_effects, fit_pooled
from panelkit.report import FitTests, compute_fit_tests, format_p, render_fit_table, row_decimals

from helpers import random_panel
from reference_tables import GOLDEN_T1, GOLDEN_T2, table1, table2

GOLDEN = Path(__file__).parent / "golden"


@pytest.mark.parametrize("build, golden", [(table1, GOLDEN_T1), (table2, GOLDEN_T2)])
def test_golden_tables(build, golden):
    fit, tests = build()
    expected = (GOLDEN / golden).read_bytes()
    assert render_fit_table(fit, tests).encode("utf-8") == expected


def test_rendering_is_stable():
    fit, tests = table2()
    assert render_fit_table(fit, tests) == render_fit_table(fit, tests)


@pytest.mark.parametrize("b, d", [(196.417, 3), (-0.787, 3), (0.01, 3), (-0.000024, 6),
                                  (0.00108, 5), (0.00283, 5), (0.0, 3), (1e-9, 6)])
def test_row_decimals(b, d):
    assert row_decimals(b) == d


def test_p_formatting():
    assert format_p(0.0004) == "<0.000"
    assert format_p(0.0004, less_than=False) == "0.000"
    assert format_p(0.00095) == "0.001"
    assert format_p(0.0636) == "0.064"


def test_no_effects_table_has_no_diagnosis():
    d = random_panel(np.random.default_rng(0), 5, 4, 1)
    f = fit_pooled(d, ModelSpec("y", ("x1",), "none", "classical"))
    text = render_fit_table(f, compute_fit_tests(f))
    assert "Diagnosis" not in text
    assert "SE(B) robust" not in text
    assert text.splitlines()[-1].startswith("Dependent variable: y[i,t]  N.T=20")


def test_fitted_twoway_table():
    d = random_panel(np.random.default_rng(1), 28, 12, 2)
    f = fit_fixed_effects(d, ModelSpec("y", ("x1", "x2")))
    text = render_fit_table(f, compute_fit_tests(f), title="Two-way FE")
    lines = text.splitlines()
    assert lines[0] == "Two-way FE"
    assert lines[2].startswith("Constant  b0") and lines[4].startswith("b2  x2[i,t]")
    assert "F(27, 295)" in text and "Chi-square(11)" in text
    assert "within R-squared=" in text
    # no dummy rows in the body
    assert "entity[" not in text and "time[" not in text


def test_missing_joint_test_raises():
    fit, tests = table1()
    with pytest.raises(PanelKitError, match="entity dummies"):
        render_fit_table(fit, FitTests(tests.t_tests, None, tests.time_dummies))
    with pytest.raises(PanelKitError, match="Empl"):
        render_fit_table(fit, FitTests({"const": tests.t_tests["const"]}, tests.entity_dummies,
                                       tests.time_dummies))
