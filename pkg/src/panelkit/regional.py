"""Two-period comparison of an indicator across entities."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import Context, Decimal

from .errors import DataError

__all__ = ["EntityChange", "RegionalComparison", "compare_periods"]

STABLE_BAND = 2.0

# wide enough that differences of any two doubles are exact
EXACT = Context(prec=800)


def _dec(v: float) -> Decimal:
    # shortest repr recovers the decimal literal read from CSV
    return Decimal(repr(float(v)))


@dataclass(frozen=True)
class EntityChange:
    entity: str
    value_a: Decimal
    value_b: Decimal
    change: Decimal
    classification: str  # improved | worsened | stable


@dataclass(frozen=True)
class RegionalComparison:
    """Per-entity movement of ``variable`` from ``period_a`` to ``period_b``.

    Values are ``Decimal`` so that ``value_a + change == value_b`` holds
    exactly. ``rankings`` maps each period to entity labels ordered from
    the highest value to the lowest (ties by entity label).
    """

    variable: str
    period_a: str
    period_b: str
    stable_band: float
    higher_is_better: bool
    per_entity: tuple
    rankings: dict

    def top(self, period) -> str:
        return self.rankings[str(period)][0]

    def bottom(self, period) -> str:
        return self.rankings[str(period)][-1]

    def by_class(self, classification) -> list:
        return [r.entity for r in self.per_entity if r.classification == classification]

    def record(self, entity) -> EntityChange:
        for r in self.per_entity:
            if r.entity == entity:
                return r
        raise KeyError(entity)

    def to_dict(self) -> dict:
        return {
            "variable": self.variable,
            "period_a": self.period_a,
            "period_b": self.period_b,
            "stable_band": self.stable_band,
            "higher_is_better": self.higher_is_better,
            "per_entity": [
                {
                    "entity": r.entity,
                    "value_a": str(r.value_a),
                    "value_b": str(r.value_b),
                    "change": str(r.change),
                    "classification": r.classification,
                }
                for r in self.per_entity
            ],
            "rankings": {k: list(v) for k, v in self.rankings.items()},
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["entity", f"{self.variable}_{self.period_a}", f"{self.variable}_{self.period_b}",
                        "change", "classification", f"rank_{self.period_a}", f"rank_{self.period_b}"])
            ra = {e: i for i, e in enumerate(self.rankings[self.period_a], 1)}
            rb = {e: i for i, e in enumerate(self.rankings[self.period_b], 1)}
            for r in self.per_entity:
                w.writerow([r.entity, r.value_a, r.value_b, r.change, r.classification,
                            ra.get(r.entity, ""), rb.get(r.entity, "")])

    def render(self) -> str:
        out = [f"{self.variable}: {self.period_a} -> {self.period_b} "
               f"(stable band +/-{self.stable_band:g})"]
        for p in (self.period_a, self.period_b):
            r = self.rankings[p]
            out.append(f"{p}: highest {', '.join(r[:3])}; lowest {', '.join(reversed(r[-3:]))}")
        width = max((len(r.entity) for r in self.per_entity), default=6)
        for r in sorted(self.per_entity, key=lambda r: (r.change, r.entity)):
            out.append(f"  {r.entity:<{width}}  {str(r.value_a):>7} -> {str(r.value_b):>7}  "
                       f"{str(r.change):>7}  {r.classification}")
        return "\n".join(out) + "\n"


def compare_periods(data, variable, period_a, period_b, stable_band=STABLE_BAND,
                    higher_is_better=False) -> RegionalComparison:
    """Compare ``variable`` between two periods entity by entity.

    An entity is ``stable`` when ``|change| <= stable_band``; otherwise the
    direction decides, with lower values counting as improvement unless
    ``higher_is_better``. Entities missing a value in either period are
    left out of ``per_entity`` but still ranked in the period they have.
    """
    if variable not in data.variables:
        raise DataError(f"variable {variable!r} not in dataset")
    period_a, period_b = str(period_a), str(period_b)
    for p in (period_a, period_b):
        if p not in data.periods:
            raise DataError(f"period {p!r} not in dataset")
    if not stable_band >= 0:
        raise ValueError("stable_band must be nonnegative")
    pa, pb = data.periods.index(period_a), data.periods.index(period_b)
    values = data[variable]
    by_period = {pa: {}, pb: {}}
    for r in range(data.n_obs):
        t = int(data.period_index[r])
        if t in by_period and not math.isnan(values[r]):
            by_period[t][data.entities[data.entity_index[r]]] = _dec(values[r])
    band = _dec(stable_band)
    records = []
    for ent in data.entities:
        if ent in by_period[pa] and ent in by_period[pb]:
            a, b = by_period[pa][ent], by_period[pb][ent]
            ch = EXACT.subtract(b, a)
            if abs(ch) <= band:
                cls = "stable"
            elif (ch > 0) == higher_is_better:
                cls = "improved"
            else:
                cls = "worsened"
            records.append(EntityChange(ent, a, b, ch, cls))
    rankings = {
        data.periods[t]: [e for e, _ in sorted(vals.items(), key=lambda kv: (-kv[1], kv[0]))]
        for t, vals in by_period.items()
    }
    return RegionalComparison(variable, period_a, period_b, float(stable_band), higher_is_better,
                              tuple(records), rankings)
