"""Bidirectional stepwise selection of regressors by p-value thresholds."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import EstimationError, PanelKitError
from .estimators import ModelSpec, fit
from .inference import t_test

__all__ = ["Step", "StepwiseTrace", "stepwise_select"]

log = logging.getLogger(__name__)

P_ENTER = 0.10
P_REMOVE = 0.15
MAX_STEPS = 100


@dataclass(frozen=True)
class Step:
    action: str  # "add" | "remove" | "skip"
    variable: str
    p_value: float | None
    model_size: int
    reason: str = ""

    def to_dict(self):
        return {
            "action": self.action,
            "variable": self.variable,
            "p_value": self.p_value,
            "model_size": self.model_size,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class StepwiseTrace:
    """Audit trail of one stepwise run.

    ``steps`` holds the add/remove actions in order; candidates skipped
    because their fit failed are recorded with ``action="skip"`` and do not
    count toward ``max_steps``.
    """

    steps: tuple
    final_spec: ModelSpec
    candidate_pool: tuple
    p_enter: float
    p_remove: float
    max_steps: int
    criterion: str
    stopped_by: str = "converged"
    final_p_values: dict = field(default_factory=dict)

    @property
    def actions(self):
        return tuple(s for s in self.steps if s.action in ("add", "remove"))

    @property
    def selected(self):
        return tuple(v for v in self.final_spec.regressors if v in self.candidate_pool)

    def to_dict(self):
        return {
            "p_enter": self.p_enter,
            "p_remove": self.p_remove,
            "max_steps": self.max_steps,
            "criterion": self.criterion,
            "candidate_pool": list(self.candidate_pool),
            "steps": [s.to_dict() for s in self.steps],
            "final_spec": self.final_spec.to_dict(),
            "selected": list(self.selected),
            "final_p_values": dict(self.final_p_values),
            "stopped_by": self.stopped_by,
        }

    def render(self) -> str:
        lines = [
            f"stepwise selection: p_enter={self.p_enter:g} p_remove={self.p_remove:g} "
            f"criterion={self.criterion} max_steps={self.max_steps}",
            f"candidates ({len(self.candidate_pool)}): {', '.join(self.candidate_pool)}",
        ]
        for i, s in enumerate(self.steps, 1):
            p = "" if s.p_value is None else f" p={s.p_value:.4f}"
            why = f" ({s.reason})" if s.reason else ""
            lines.append(f"{i:3d}. {s.action:<6} {s.variable}{p} size={s.model_size}{why}")
        lines.append(f"selected: {', '.join(self.selected) or '(none)'} [{self.stopped_by}]")
        return "\n".join(lines)


def _p_values(data, spec, method, names):
    res = fit(data, spec, method)
    return {n: t_test(res, n).p_value for n in names}


def stepwise_select(
    data,
    base_spec: ModelSpec,
    candidates,
    p_enter: float = P_ENTER,
    p_remove: float = P_REMOVE,
    max_steps: int = MAX_STEPS,
    method: str = "within",
) -> StepwiseTrace:
    """Forward entry / backward removal over ``candidates``.

    Each round tries every outside candidate on top of the current model
    and adds the one with the smallest p-value if it is below ``p_enter``;
    then the included candidate with the largest p-value is dropped while
    it exceeds ``p_remove``. Regressors of ``base_spec`` are forced in and
    never removed. P-values come from :func:`~panelkit.inference.t_test`
    under ``base_spec.covariance`` with its default dof. Ties go to the
    earlier candidate in ``candidates``.

    A candidate whose fit fails (collinearity, no dof) is skipped for that
    round with the reason logged in the trace.
    """
    candidates = tuple(candidates)
    if len(set(candidates)) != len(candidates):
        raise ValueError("duplicate names in candidate pool")
    overlap = set(candidates) & set(base_spec.regressors)
    if overlap:
        raise ValueError(f"candidates overlap forced regressors: {sorted(overlap)}")
    if not 0 < p_enter < p_remove <= 1:
        raise ValueError(f"need 0 < p_enter < p_remove <= 1, got {p_enter}, {p_remove}")
    data.require([base_spec.dependent, *base_spec.regressors, *candidates])

    forced = list(base_spec.regressors)
    included: list[str] = []
    steps: list[Step] = []
    n_actions = 0
    stopped_by = "converged"

    def spec_for(extra):
        return base_spec.with_regressors(forced + extra)

    while True:
        if n_actions >= max_steps:
            stopped_by = "max_steps"
            break
        best = None
        for c in candidates:
            if c in included:
                continue
            trial = included + [c]
            try:
                p = _p_values(data, spec_for(trial), method, [c])[c]
            except PanelKitError as exc:
                log.info("stepwise: skipping %s: %s", c, exc)
                steps.append(Step("skip", c, None, len(forced) + len(included), str(exc)))
                continue
            if best is None or p < best[1]:
                best = (c, p)
        if best is None or not best[1] < p_enter:
            break
        included.append(best[0])
        n_actions += 1
        steps.append(Step("add", best[0], best[1], len(forced) + len(included)))

        while included and n_actions < max_steps:
            try:
                ps = _p_values(data, spec_for(included), method, included)
            except PanelKitError as exc:
                raise EstimationError(f"stepwise: current model failed to fit: {exc}") from exc
            worst = max(included, key=lambda v: (ps[v], -candidates.index(v)))
            if not ps[worst] > p_remove:
                break
            included.remove(worst)
            n_actions += 1
            steps.append(Step("remove", worst, ps[worst], len(forced) + len(included)))

    final = spec_for(included)
    final_p = {}
    if final.regressors:
        final_p = _p_values(data, final, method, list(final.regressors))
    return StepwiseTrace(
        steps=tuple(steps),
        final_spec=final,
        candidate_pool=candidates,
        p_enter=p_enter,
        p_remove=p_remove,
        max_steps=max_steps,
        criterion="robust" if base_spec.covariance == "cluster_entity" else "classical",
        stopped_by=stopped_by,
        final_p_values=final_p,
    )
