import numpy as np

from panelkit.panel import PanelDataset


def random_panel(rng, E, T, k, entity_sd=1.0, time_sd=1.0, noise=1.0, slopes=None, drop=0):
    """Balanced (or, with ``drop`` > 0, randomly thinned) panel with
    regressors x1..xk and dependent y."""
    e = np.repeat(np.arange(E), T)
    t = np.tile(np.arange(T), E)
    X = rng.standard_normal((E * T, k)) + rng.standard_normal((E, k))[e]
    slopes = np.arange(1, k + 1, dtype=float) if slopes is None else np.asarray(slopes, float)
    y = (
        1.0
        + X @ slopes
        + entity_sd * rng.standard_normal(E)[e]
        + time_sd * rng.standard_normal(T)[t]
        + noise * rng.standard_normal(E * T)
    )
    cols = {"y": y, **{f"x{j + 1}": X[:, j] for j in range(k)}}
    d = PanelDataset(
        entities=tuple(f"e{i}" for i in range(E)),
        periods=tuple(str(2000 + s) for s in range(T)),
        entity_index=e,
        period_index=t,
        variables=cols,
    )
    if drop:
        keep = np.ones(E * T, dtype=bool)
        # never drop a whole entity or period
        idx = rng.choice(np.flatnonzero((e > 0) & (t > 0)), size=drop, replace=False)
        keep[idx] = False
        d = d.subset(keep)
    return d


def full_dummy_design(data, regressors, effects="twoway"):
    """Independent construction of [1 | X | entity dummies 2..E | period dummies 2..T]."""
    n = data.n_obs
    cols = [np.ones(n)] + [np.asarray(data[r]) for r in regressors]
    if effects in ("entity", "twoway"):
        cols += [(data.entity_index == i).astype(float) for i in range(1, len(data.entities))]
    if effects in ("time", "twoway"):
        cols += [(data.period_index == s).astype(float) for s in range(1, len(data.periods))]
    return np.column_stack(cols)


def normal_equations(X, y):
    XtX = X.T @ X
    return np.linalg.solve(XtX, X.T @ y), np.linalg.inv(XtX)


DISTRICTS = (
    "Blagoevgrad", "Burgas", "Dobrich", "Gabrovo", "Haskovo", "Kardzhali", "Kyustendil",
    "Lovech", "Montana", "Pazardzhik", "Pernik", "Pleven", "Plovdiv", "Razgrad", "Ruse",
    "Shumen", "Silistra", "Sliven", "Smolyan", "Sofia (capital)", "Sofia district",
    "Stara Zagora", "Targovishte", "Varna", "Veliko Tarnovo", "Vidin", "Vratsa", "Yambol",
)
YEARS = tuple(range(2008, 2020))


def write_district_csv(path, rng, skip=(), extra=()):
    """28 x 12 district CSV with random PRP/Empl values; ``skip`` drops
    (district, year) keys, ``extra`` appends raw rows."""
    lines = ["district,year,PRP,Empl"]
    for d in DISTRICTS:
        for y in YEARS:
            if (d, y) in skip:
                continue
            lines.append(f"{d},{y},{rng.uniform(15, 60):.1f},{rng.uniform(30, 70):.2f}")
    lines.extend(extra)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
