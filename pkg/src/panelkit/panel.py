"""Long-format panel data: storage, CSV ingestion, LSDV designs and
within (demeaning) transformations."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "PanelDataset",
    "DesignBundle",
    "load_csv",
    "build_lsdv_design",
    "within_transform",
    "demean",
    "sort_labels",
]

EFFECTS = ("none", "entity", "time", "twoway")

DEMEAN_TOL = 1e-10
DEMEAN_MAX_ITER = 1000


def sort_labels(labels: Iterable[str]) -> list[str]:
    """Numeric order when every label parses as an integer, else lexicographic."""
    labels = list(dict.fromkeys(labels))
    try:
        return sorted(labels, key=lambda s: (int(s), s))
    except ValueError:
        return sorted(labels)


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PanelDataset:
    """Immutable long-format panel.

    Rows are stored sorted by (entity, period) ordinal. Missing values are
    ``NaN`` in the variable arrays.

    Attributes
    ----------
    entities, periods : tuple of str
        Ordered labels; ``entity_index`` / ``period_index`` are ordinals into
        them.
    variables : mapping of str to ndarray
        Read-only float columns, one value per row.
    """

    entities: tuple
    periods: tuple
    entity_index: np.ndarray
    period_index: np.ndarray
    variables: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        e = _frozen(self.entity_index, np.int64)
        t = _frozen(self.period_index, np.int64)
        n = e.shape[0]
        if t.shape != (n,):
            raise DataError("entity and period index lengths differ")
        if n and (e.min() < 0 or e.max() >= len(self.entities)):
            raise DataError("entity index out of range")
        if n and (t.min() < 0 or t.max() >= len(self.periods)):
            raise DataError("period index out of range")
        key = e * max(len(self.periods), 1) + t
        order = np.argsort(key, kind="stable")
        skey = key[order]
        dup = np.flatnonzero(skey[1:] == skey[:-1])
        if dup.size:
            r = order[dup[0]]
            raise DataError(
                f"duplicate observation for ({self.entities[e[r]]}, {self.periods[t[r]]})"
            )
        cols = {}
        for name, values in self.variables.items():
            v = np.asarray(values, dtype=float)
            if v.shape != (n,):
                raise DataError(f"variable {name!r} has {v.shape} values, expected {n}")
            if np.isinf(v).any():
                raise DataError(f"variable {name!r} contains infinite values")
            cols[name] = _frozen(v[order], float)
        object.__setattr__(self, "entities", tuple(str(s) for s in self.entities))
        object.__setattr__(self, "periods", tuple(str(s) for s in self.periods))
        object.__setattr__(self, "entity_index", _frozen(e[order], np.int64))
        object.__setattr__(self, "period_index", _frozen(t[order], np.int64))
        object.__setattr__(self, "variables", MappingProxyType(cols))

    @classmethod
    def from_records(cls, records: Iterable[tuple], variable_names: Sequence[str]):
        """Build from ``(entity, period, v1, v2, ...)`` tuples; ``None`` is missing."""
        records = list(records)
        entities = sort_labels(str(r[0]) for r in records)
        periods = sort_labels(str(r[1]) for r in records)
        emap = {s: i for i, s in enumerate(entities)}
        pmap = {s: i for i, s in enumerate(periods)}
        cols = {
            name: [math.nan if r[2 + j] is None else float(r[2 + j]) for r in records]
            for j, name in enumerate(variable_names)
        }
        return cls(
            entities=tuple(entities),
            periods=tuple(periods),
            entity_index=[emap[str(r[0])] for r in records],
            period_index=[pmap[str(r[1])] for r in records],
            variables=cols,
        )

    @property
    def n_obs(self) -> int:
        return int(self.entity_index.shape[0])

    @property
    def balanced(self) -> bool:
        present_e = np.unique(self.entity_index).size
        present_t = np.unique(self.period_index).size
        return (
            self.n_obs == present_e * present_t
            and present_e == len(self.entities)
            and present_t == len(self.periods)
        )

    @property
    def variable_names(self) -> tuple:
        return tuple(self.variables)

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.variables[name]
        except KeyError:
            raise DataError(f"variable {name!r} not in dataset") from None

    def require(self, names: Iterable[str]) -> None:
        missing = [n for n in names if n not in self.variables]
        if missing:
            raise DataError(f"variables not in dataset: {', '.join(missing)}")

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        self.require(names)
        if not names:
            return np.empty((self.n_obs, 0))
        return np.column_stack([self.variables[n] for n in names])

    def subset(self, mask) -> "PanelDataset":
        """Rows where ``mask`` is true; unused entity/period labels are dropped."""
        mask = np.asarray(mask, dtype=bool)
        e_used, e_new = np.unique(self.entity_index[mask], return_inverse=True)
        t_used, t_new = np.unique(self.period_index[mask], return_inverse=True)
        return PanelDataset(
            entities=tuple(self.entities[i] for i in e_used),
            periods=tuple(self.periods[i] for i in t_used),
            entity_index=e_new,
            period_index=t_new,
            variables={k: v[mask] for k, v in self.variables.items()},
        )

    def complete_cases(self, names: Sequence[str]) -> "PanelDataset":
        """Listwise deletion on ``names``; other variables are kept as-is."""
        self.require(names)
        if not names:
            return self
        mask = np.ones(self.n_obs, dtype=bool)
        for n in names:
            mask &= ~np.isnan(self.variables[n])
        if mask.all():
            return self
        return self.subset(mask)

    def select(self, names: Sequence[str]) -> "PanelDataset":
        self.require(names)
        return self.with_variables({n: self.variables[n] for n in names}, replace=True)

    def with_variables(self, columns: Mapping[str, np.ndarray], replace=False) -> "PanelDataset":
        base = {} if replace else dict(self.variables)
        base.update(columns)
        return PanelDataset(
            entities=self.entities,
            periods=self.periods,
            entity_index=self.entity_index,
            period_index=self.period_index,
            variables=base,
        )

    def to_csv(self, path, entity_column="entity", period_column="period") -> None:
        """Write long-format CSV to a path or text stream; floats use the
        shortest round-tripping repr."""
        if hasattr(path, "write"):
            self._write_csv(path, entity_column, period_column)
            return
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self._write_csv(fh, entity_column, period_column)

    def _write_csv(self, fh, entity_column, period_column):
        w = csv.writer(fh, lineterminator="\n")
        names = list(self.variables)
        w.writerow([entity_column, period_column, *names])
        for r in range(self.n_obs):
            row = [self.entities[self.entity_index[r]], self.periods[self.period_index[r]]]
            for n in names:
                v = self.variables[n][r]
                row.append("" if math.isnan(v) else repr(float(v)))
            w.writerow(row)

def load_csv(path, entity_column: str, period_column: str, columns: Sequence[str] | None = None):
    """Read a long-format panel from a UTF-8 CSV file.

    Every column other than the two key columns is parsed as a float (or
    only those in ``columns`` when given). Empty fields are missing.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row expected") from None
        for col in (entity_column, period_column, *(columns or ())):
            if col not in header:
                raise DataError(f"{path}: required column {col!r} absent from header")
        ei, pi = header.index(entity_column), header.index(period_column)
        names = list(columns) if columns is not None else [
            h for h in header if h not in (entity_column, period_column)
        ]
        idx = [header.index(n) for n in names]
        records = []
        seen = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            ent, per = row[ei].strip(), row[pi].strip()
            if not ent or not per:
                raise DataError(f"{path}:{lineno}: empty entity or period label")
            if (ent, per) in seen:
                raise DataError(
                    f"{path}:{lineno}: duplicate observation for ({ent}, {per}), "
                    f"first seen on line {seen[ent, per]}"
                )
            seen[ent, per] = lineno
            vals = []
            for name, j in zip(names, idx):
                cell = row[j].strip()
                if cell == "":
                    vals.append(None)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: column {name!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: column {name!r}: non-finite value {cell!r}")
                vals.append(v)
            records.append((ent, per, *vals))
    if not records:
        raise DataError(f"{path}: no data rows")
    return PanelDataset.from_records(records, names)


@dataclass(frozen=True)
class DesignBundle:
    y: np.ndarray
    X: np.ndarray
    column_names: tuple
    entity_index: np.ndarray
    period_index: np.ndarray
    dummy_blocks: Mapping[str, slice]
    data: PanelDataset
    n_dropped: int = 0

    @property
    def n_regressor_columns(self) -> int:
        return len(self.column_names) - sum(s.stop - s.start for s in self.dummy_blocks.values())


def _dummies(index, n_levels, skip_first):
    D = np.zeros((index.shape[0], n_levels))
    D[np.arange(index.shape[0]), index] = 1.0
    return D[:, 1:] if skip_first else D


def build_lsdv_design(data: PanelDataset, spec) -> DesignBundle:
    """Explicit dummy-variable design for ``spec``.

    Column order is ``[intercept | regressors | entity dummies | time
    dummies]``. The first entity and first period (sorted label order) are
    the omitted baselines when an intercept is present; without an
    intercept the entity block keeps every level.

    Rows with a missing value in the dependent variable or any regressor
    are dropped first.
    """
    used = [spec.dependent, *spec.regressors]
    full = data
    data = data.complete_cases(used)
    n_dropped = full.n_obs - data.n_obs
    if data.n_obs == 0:
        raise DataError("no complete observations for the model variables")
    for name in spec.regressors:
        v = data[name]
        # a single row carries no information about variation
        if data.n_obs > 1 and np.ptp(v) == 0.0:
            raise DataError(f"regressor {name!r} is constant in the estimation sample")

    n = data.n_obs
    blocks = [np.ones((n, 1))] if spec.intercept else []
    names = ["const"] if spec.intercept else []
    blocks.append(data.matrix(spec.regressors))
    names.extend(spec.regressors)
    dummy_blocks = {}
    col = len(names)
    if spec.effects in ("entity", "twoway"):
        D = _dummies(data.entity_index, len(data.entities), skip_first=spec.intercept)
        first = 1 if spec.intercept else 0
        blocks.append(D)
        names.extend(f"entity[{s}]" for s in data.entities[first:])
        dummy_blocks["entity"] = slice(col, col + D.shape[1])
        col += D.shape[1]
    if spec.effects in ("time", "twoway"):
        skip = spec.intercept or spec.effects == "twoway"
        D = _dummies(data.period_index, len(data.periods), skip_first=skip)
        first = 1 if skip else 0
        blocks.append(D)
        names.extend(f"time[{s}]" for s in data.periods[first:])
        dummy_blocks["time"] = slice(col, col + D.shape[1])
        col += D.shape[1]
    return DesignBundle(
        y=np.array(data[spec.dependent]),
        X=np.hstack(blocks),
        column_names=tuple(names),
        entity_index=data.entity_index,
        period_index=data.period_index,
        dummy_blocks=MappingProxyType(dummy_blocks),
        data=data,
        n_dropped=n_dropped,
    )


def _group_mean(values, index, n_groups):
    counts = np.bincount(index, minlength=n_groups).astype(float)
    counts[counts == 0] = 1.0
    sums = np.column_stack(
        [np.bincount(index, weights=values[:, j], minlength=n_groups) for j in range(values.shape[1])]
    ) if values.shape[1] else np.zeros((n_groups, 0))
    return sums / counts[:, None]


def demean(values, entity_index, period_index, effects="twoway", balanced=None):
    """Remove entity and/or period means from the columns of ``values``.

    Balanced two-way panels use the closed form
    ``x_it - xbar_i - xbar_t + xbar``; unbalanced two-way panels alternate
    entity and period demeaning until the largest update falls below
    1e-10 (at most 1000 sweeps).
    """
    values = np.asarray(values, dtype=float)
    squeeze = values.ndim == 1
    X = values.reshape(values.shape[0], -1).copy()
    e = np.asarray(entity_index)
    t = np.asarray(period_index)
    ne = int(e.max()) + 1 if e.size else 0
    nt = int(t.max()) + 1 if t.size else 0
    if effects == "none":
        pass
    elif effects == "entity":
        X -= _group_mean(X, e, ne)[e]
    elif effects == "time":
        X -= _group_mean(X, t, nt)[t]
    elif effects == "twoway":
        if balanced is None:
            balanced = X.shape[0] == np.unique(e).size * np.unique(t).size
        if balanced:
            X = X - _group_mean(X, e, ne)[e] - _group_mean(X, t, nt)[t] + X.mean(axis=0)
        else:
            for _ in range(DEMEAN_MAX_ITER):
                step = _group_mean(X, e, ne)[e]
                X -= step
                step2 = _group_mean(X, t, nt)[t]
                X -= step2
                change = max(np.abs(step).max(initial=0.0), np.abs(step2).max(initial=0.0))
                if change < DEMEAN_TOL:
                    break
    else:
        raise ValueError(f"unknown effects {effects!r}; expected one of {EFFECTS}")
    return X[:, 0] if squeeze else X


def within_transform(data: PanelDataset, variables: Sequence[str], effects="twoway") -> PanelDataset:
    """Return a dataset whose ``variables`` are replaced by their demeaned
    versions. The listed variables must have no missing values."""
    if not variables:
        raise DataError("within_transform needs at least one variable")
    X = data.matrix(list(variables))
    if np.isnan(X).any():
        raise DataError("within_transform input has missing values; drop incomplete rows first")
    Z = demean(X, data.entity_index, data.period_index, effects, balanced=data.balanced)
    return data.with_variables({v: Z[:, j] for j, v in enumerate(variables)})
