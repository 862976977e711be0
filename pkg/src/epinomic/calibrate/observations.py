"""Observed time series: ``observations.csv`` loading and simulated counterparts."""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .likelihood import DEFAULT_DISPERSION, ECON_SD_POINTS, FAMILIES, align, window

VARIABLES = ("hosp_incidence", "output", "labour")
CADENCES = ("daily", "weekly", "biweekly", "monthly")
COLUMNS = ("date", "country", "variable", "stratum", "value", "family")


@dataclass(frozen=True)
class ObservationSeries:
    country: str
    variable: str
    stratum: str
    cadence: str
    dates: tuple
    values: np.ndarray
    family: str
    dispersion: float = DEFAULT_DISPERSION
    sd: float = ECON_SD_POINTS

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"unknown observed variable {self.variable!r}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown likelihood family {self.family!r}")
        if self.cadence not in CADENCES:
            raise ValueError(f"unknown cadence {self.cadence!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite observation in {self.key}")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError(f"dates of {self.key} are not strictly increasing")
        if not _cadence_consistent(self.dates, self.cadence):
            raise ValueError(f"dates of {self.key} do not match cadence {self.cadence}")

    @property
    def key(self):
        return (self.country, self.variable, self.stratum)

    def within(self, start=None, end=None):
        """Observations whose reporting window lies inside ``[start, end]``; ``None`` if none remain."""
        keep = []
        for n, d in enumerate(self.dates):
            lo, hi = window(d, self.cadence)
            if (start is None or lo >= start) and (end is None or hi <= end):
                keep.append(n)
        if not keep:
            return None
        return ObservationSeries(self.country, self.variable, self.stratum, self.cadence,
                                 tuple(self.dates[n] for n in keep), self.values[keep], self.family,
                                 self.dispersion, self.sd)


def _cadence_consistent(dates, cadence):
    gaps = [(b - a).days for a, b in zip(dates, dates[1:])]
    if cadence == "daily":
        return all(g == 1 for g in gaps)
    if cadence == "weekly":
        return all(g % 7 == 0 for g in gaps)
    if cadence == "biweekly":
        return all(g % 14 == 0 for g in gaps)
    return all(d.day == dates[0].day for d in dates) or all(g >= 28 for g in gaps)


def infer_cadence(dates):
    gaps = {(b - a).days for a, b in zip(dates, dates[1:])}
    if not gaps or gaps == {1}:
        return "daily"
    if all(g % 14 == 0 for g in gaps) and min(gaps) == 14:
        return "biweekly"
    if all(g % 7 == 0 for g in gaps):
        return "weekly"
    if min(gaps) >= 28:
        return "monthly"
    raise ValueError(f"cannot infer the cadence from gaps {sorted(gaps)}")


def load_observations(path):
    """Read ``observations.csv``.

    Columns ``date, country, variable, stratum, value, family`` are required; optional
    ``cadence``, ``dispersion`` and ``sd`` columns override the defaults per row.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"observations file not found: {path}")
    groups = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
        for n, r in enumerate(reader, start=2):
            try:
                value = float(r["value"])
                date = dt.date.fromisoformat(r["date"])
            except ValueError as exc:
                raise ValueError(f"{path}, row {n}: {exc}") from None
            if not math.isfinite(value):
                raise ValueError(f"{path}, row {n}: non-finite value")
            key = (r["country"].upper(), r["variable"], r["stratum"] or "national")
            g = groups.setdefault(key, {"rows": [], "family": r["family"], "extra": r})
            if r["family"] != g["family"]:
                raise ValueError(f"{path}, row {n}: family differs within series {key}")
            g["rows"].append((date, value))
    out = []
    for (country, var, stratum), g in groups.items():
        rows = sorted(g["rows"])
        dates = tuple(d for d, _ in rows)
        extra = g["extra"]
        cadence = extra.get("cadence") or infer_cadence(dates)
        kw = {}
        if extra.get("dispersion"):
            kw["dispersion"] = float(extra["dispersion"])
        if extra.get("sd"):
            kw["sd"] = float(extra["sd"])
        out.append(ObservationSeries(country, var, stratum, cadence, dates,
                                     np.array([v for _, v in rows]), g["family"], **kw))
    return out


def write_observations(series, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS + ("cadence", "dispersion", "sd"))
        for s in series:
            for d, v in zip(s.dates, s.values):
                w.writerow((d.isoformat(), s.country, s.variable, s.stratum, repr(float(v)), s.family,
                            s.cadence, repr(float(s.dispersion)), repr(float(s.sd))))


def simulated_daily(rec, variable, stratum):
    """Daily simulated series matching an observed variable and stratum."""
    if variable == "hosp_incidence":
        if stratum == "national":
            return rec.incidence.sum(1)
        if stratum not in rec.patch_ids:
            raise KeyError(f"stratum {stratum!r} is not a patch of the simulation")
        return rec.incidence[:, rec.patch_ids.index(stratum)]
    if stratum != "national":
        raise KeyError(f"economic observations are national, got stratum {stratum!r}")
    if variable == "output":
        return 100.0 * rec.output_retained
    if variable == "labour":
        return 100.0 * rec.labour_retained
    raise KeyError(variable)


def simulated_for(rec, series):
    """Simulated values aligned to the observation dates (sums for counts, means otherwise)."""
    how = "sum" if series.variable == "hosp_incidence" else "mean"
    return align(rec.dates, simulated_daily(rec, series.variable, series.stratum), series.dates,
                 series.cadence, how)
