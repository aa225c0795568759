"""Command-line entry point: ``panelkit <subcommand> ...``.

Exit status: 0 success, 1 usage error, 2 data or estimation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import PanelKitError
from .estimators import ModelSpec, fit, fit_fixed_effects, fit_random_effects
from .inference import hausman_test
from .panel import load_csv
from .regional import STABLE_BAND, compare_periods
from .report import compute_fit_tests, render_fit_table
from .selection import MAX_STEPS, P_ENTER, P_REMOVE, stepwise_select
from .simulation import SyntheticPanelConfig, generate_panel, run_monte_carlo

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _names(values):
    out = []
    for v in values or ():
        out.extend(s.strip() for s in v.split(",") if s.strip())
    return out


def _cov(value):
    return {"cluster": "cluster_entity", "classical": "classical"}[value]


def _data_args(p):
    p.add_argument("--data", required=True, help="long-format CSV")
    p.add_argument("--entity-col", default="district")
    p.add_argument("--period-col", default="year")


def _model_args(p, regressors_required=True):
    p.add_argument("--dep", required=True)
    p.add_argument("--regressors", nargs="+", required=regressors_required, default=[],
                   help="names, space or comma separated")
    p.add_argument("--effects", default="twoway", choices=["none", "entity", "time", "twoway"])
    p.add_argument("--cov", default="cluster", choices=["cluster", "classical"])
    p.add_argument("--method", default="lsdv", choices=["lsdv", "within"])


def build_parser():
    parser = _Parser(prog="panelkit", description="Panel-data regression toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="estimate a pooled or fixed-effects model")
    _data_args(p)
    _model_args(p)
    p.add_argument("--out", help="write the fit as JSON")

    p = sub.add_parser("stepwise", help="stepwise selection over candidate regressors")
    _data_args(p)
    _model_args(p, regressors_required=False)
    p.add_argument("--candidates", nargs="+", required=True)
    p.add_argument("--p-enter", type=float, default=P_ENTER)
    p.add_argument("--p-remove", type=float, default=P_REMOVE)
    p.add_argument("--max-steps", type=int, default=MAX_STEPS)
    p.add_argument("--out", help="write the trace as JSON")

    p = sub.add_parser("hausman", help="fixed vs random effects Hausman test")
    _data_args(p)
    p.add_argument("--dep", required=True)
    p.add_argument("--regressors", nargs="+", required=True)
    p.add_argument("--effects", default="twoway", choices=["entity", "twoway"])
    p.add_argument("--out", help="write the test as JSON")

    p = sub.add_parser("compare", help="compare a variable between two periods")
    _data_args(p)
    p.add_argument("--variable", required=True)
    p.add_argument("--from", dest="period_a", required=True)
    p.add_argument("--to", dest="period_b", required=True)
    p.add_argument("--stable-band", type=float, default=STABLE_BAND)
    p.add_argument("--higher-is-better", action="store_true")
    p.add_argument("--out", help="write per-entity changes as CSV")

    p = sub.add_parser("simulate", help="draw a synthetic panel")
    p.add_argument("--config", required=True, help="JSON SyntheticPanelConfig")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="CSV path (default: standard output)")

    p = sub.add_parser("montecarlo", help="Monte Carlo bias/coverage experiment")
    p.add_argument("--config", required=True, help="JSON SyntheticPanelConfig")
    p.add_argument("--spec", required=True, help="JSON ModelSpec")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--method", default="within", choices=["lsdv", "within"])
    p.add_argument("--hausman", action="store_true")
    p.add_argument("--out", help="write the summary as JSON")
    return parser


def _spec(args, regressors=None):
    try:
        return ModelSpec(
            args.dep,
            tuple(_names(args.regressors) if regressors is None else regressors),
            args.effects,
            _cov(args.cov),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _dump(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _cmd_fit(args):
    data = load_csv(args.data, args.entity_col, args.period_col)
    spec = _spec(args)
    res = fit(data, spec, args.method)
    tests = compute_fit_tests(res) if res.estimator_kind != "fe_within" else None
    if tests is not None:
        sys.stdout.write(render_fit_table(res, tests))
    else:
        sys.stdout.write(_plain_table(res))
    if args.out:
        d = res.to_dict()
        if tests is not None:
            d["tests"] = {k: v.to_dict() for k, v in tests.t_tests.items()}
            for key, t in (("entity_dummies", tests.entity_dummies), ("time_dummies", tests.time_dummies)):
                if t is not None:
                    d["tests"][key] = t.to_dict()
        _dump(d, args.out)


def _plain_table(res):
    from .inference import t_test

    lines = [f"{res.estimator_kind}: {res.spec.dependent} ~ {' + '.join(res.spec.regressors)}"
             f"  N.T={res.n_obs}  dof={res.dof_residual}"]
    for name in res.spec.regressors:
        t = t_test(res, name)
        lines.append(f"  {name:<20}{res.coef(name):>14.6g}{res.se(name):>14.6g}"
                     f"{t.statistic:>10.3f}{t.p_value:>10.3f}")
    lines.append(f"R-squared={res.r_squared_overall:.2f}  within R-squared={res.r_squared_within:.2f}")
    return "\n".join(lines) + "\n"


def _cmd_stepwise(args):
    data = load_csv(args.data, args.entity_col, args.period_col)
    base = _spec(args)
    try:
        trace = stepwise_select(data, base, _names(args.candidates), args.p_enter, args.p_remove,
                                args.max_steps, method=args.method)
    except ValueError as exc:
        if isinstance(exc, PanelKitError):
            raise
        raise UsageError(str(exc)) from exc
    sys.stdout.write(trace.render() + "\n")
    if trace.final_spec.regressors:
        res = fit(data, trace.final_spec, "lsdv")
        sys.stdout.write(render_fit_table(res, compute_fit_tests(res)))
    if args.out:
        _dump(trace.to_dict(), args.out)


def _cmd_hausman(args):
    data = load_csv(args.data, args.entity_col, args.period_col)
    spec = ModelSpec(args.dep, tuple(_names(args.regressors)), args.effects, "classical")
    fe = fit_fixed_effects(data, spec, "within")
    re = fit_random_effects(data, spec)
    h = hausman_test(fe, re)
    lines = [f"{'':<20}{'FE':>14}{'RE':>14}"]
    for n in spec.regressors:
        lines.append(f"{n:<20}{fe.coef(n):>14.6g}{re.coef(n):>14.6g}")
    lines.append(f"theta={re.extra['theta']:.4f}  sigma2_e={re.extra['sigma2_e']:.6g}  "
                 f"sigma2_a={re.extra['sigma2_a']:.6g}")
    lines.append(f"Hausman chi-square({h.dof1:g}) = {h.statistic:.3f}  p-value = {h.p_value:.3f}")
    lines.append(h.detail)
    lines.extend(f"note: {w}" for w in (*h.warnings, *re.warnings))
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        _dump({"hausman": h.to_dict(), "fe": fe.to_dict(), "re": re.to_dict()}, args.out)


def _cmd_compare(args):
    data = load_csv(args.data, args.entity_col, args.period_col)
    cmp = compare_periods(data, args.variable, args.period_a, args.period_b, args.stable_band,
                          args.higher_is_better)
    sys.stdout.write(cmp.render())
    if args.out:
        cmp.to_csv(args.out)


def _load_config(path, seed=None):
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        if seed is not None:
            d["seed"] = seed
        return SyntheticPanelConfig.from_dict(d)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad config {path}: {exc}") from exc


def _cmd_simulate(args):
    cfg = _load_config(args.config, args.seed)
    data = generate_panel(cfg)
    data.to_csv(args.out or sys.stdout, "entity", "period")


def _cmd_montecarlo(args):
    cfg = _load_config(args.config)
    try:
        with open(args.spec, encoding="utf-8") as fh:
            spec = ModelSpec.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"bad spec {args.spec}: {exc}") from exc
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    try:
        summary = run_monte_carlo(cfg, spec, args.reps, args.seed, args.method,
                                  hausman=args.hausman, workers=args.workers)
    except ValueError as exc:
        if isinstance(exc, PanelKitError):
            raise
        raise UsageError(str(exc)) from exc
    d = summary.to_dict()
    sys.stdout.write(json.dumps(d, indent=2) + "\n")
    if args.out:
        _dump(d, args.out)


COMMANDS = {
    "fit": _cmd_fit,
    "stepwise": _cmd_stepwise,
    "hausman": _cmd_hausman,
    "compare": _cmd_compare,
    "simulate": _cmd_simulate,
    "montecarlo": _cmd_montecarlo,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"panelkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PanelKitError as exc:
        print(f"panelkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
