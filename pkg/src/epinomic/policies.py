"""Government policy schedules: change-points with linear ramps, holiday calendars."""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .epi import PolicyInputs

LEVERS = ("closure", "telework", "private_ban", "school")
POLICY_DIR = Path(__file__).parent / "data" / "policies"
UTILITIES = ("D35", "E36", "E37-39")
CUSTOMER_FACING = ("G47", "H49", "H50", "H51", "I55-56", "L68", "N77", "N79", "R90-92", "R93",
                   "S94", "S95", "S96", "T97-98")
HOSPITALITY_RECREATION = ("I55-56", "R90-92", "R93", "S94")

HOLIDAYS = {
    "BE": [("2020-02-24", "2020-03-01"), ("2020-04-06", "2020-04-19"), ("2020-07-01", "2020-08-31"),
           ("2020-11-02", "2020-11-15"), ("2020-12-21", "2021-01-03")],
    "SWE": [("2020-02-24", "2020-02-28"), ("2020-04-10", "2020-04-13"), ("2020-06-13", "2020-08-16"),
            ("2020-10-26", "2020-10-30"), ("2020-12-21", "2021-01-06")],
}


def as_date(x):
    return x if isinstance(x, dt.date) else dt.date.fromisoformat(str(x))


@dataclass
class ChangePoint:
    """Target lever values from ``date`` on, reached after ``ramp`` days."""

    date: dt.date
    levers: PolicyInputs
    ramp: float | None = None


@dataclass
class PolicySchedule:
    """Piecewise-constant policy with linear transitions.

    Parameters
    ----------
    points : list of ChangePoint
        Strictly increasing dates.  Before the first point every lever is 0.
    shape : tuple
        ``(G, K)``.
    ramp : float
        Default transition length in days (0 switches instantly).
    holidays : list of (date, date)
        Inclusive ranges during which schools are closed.
    """

    points: list
    shape: tuple
    ramp: float = 5.0
    holidays: list = field(default_factory=list)

    def __post_init__(self):
        dates = [p.date for p in self.points]
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("policy change-point dates must be strictly increasing")
        for p in self.points:
            for name in LEVERS:
                v = getattr(p.levers, name)
                if np.any(v < 0) or np.any(v > 1):
                    raise ValueError(f"{name} outside [0, 1] at {p.date}")
        self.holidays = [(as_date(a), as_date(b)) for a, b in self.holidays]

    def at(self, date):
        """Lever values in force on ``date``."""
        date = as_date(date)
        G, K = self.shape
        cur = [np.zeros((G, K)), np.zeros((G, K)), np.zeros(G), np.zeros(G)]
        pts = self.points
        for n, p in enumerate(pts):
            if p.date > date:
                break
            upto = date if n + 1 == len(pts) or pts[n + 1].date > date else pts[n + 1].date
            ramp = self.ramp if p.ramp is None else p.ramp
            frac = 1.0 if ramp <= 0 else min(1.0, (upto - p.date).days / ramp)
            cur = [c + (getattr(p.levers, name) - c) * frac for c, name in zip(cur, LEVERS)]
        if any(a <= date <= b for a, b in self.holidays):
            cur[3] = np.ones(G)
        return PolicyInputs(*cur)


def empty_schedule(G, K, holidays=()):
    return PolicySchedule([], (G, K), holidays=list(holidays))


def load_policy_csv(path, ds, skip_unknown=False):
    """Read a long-format policy file (date, lever, patch, sector, value).

    Rows with patch ``*`` apply to every patch and sector ``*`` to every sector;
    explicit patches override wildcards.  Levers not listed at a date are 0.
    Rows naming a patch absent from ``ds`` raise unless ``skip_unknown``.
    """
    ids, codes = ds.geo.patch_ids, ds.sectors.codes
    G, K = len(ids), len(codes)
    by_date = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for n, r in enumerate(csv.DictReader(fh), start=2):
            if r["lever"] not in LEVERS:
                raise ValueError(f"{path}, row {n}: unknown lever {r['lever']}")
            by_date.setdefault(as_date(r["date"]), []).append((n, r))
    points = []
    for date in sorted(by_date):
        lv = PolicyInputs.none(G, K)
        rows = sorted(by_date[date], key=lambda nr: nr[1]["patch"] != "*")
        for n, r in rows:
            if r["patch"] != "*" and r["patch"] not in ids:
                if skip_unknown:
                    continue
                raise ValueError(f"{path}, row {n}: unknown patch {r['patch']}")
            g = slice(None) if r["patch"] == "*" else ids.index(r["patch"])
            v = float(r["value"])
            if r["lever"] in ("closure", "telework"):
                k = slice(None) if r["sector"] in ("*", "") else codes.index(r["sector"])
                getattr(lv, r["lever"])[g, k] = v
            else:
                getattr(lv, r["lever"])[g] = v
        points.append(ChangePoint(date, lv))
    return points


def levers(ds, closed=(), all_except=None, telework=0.0, private_ban=0.0, school=0.0):
    """Uniform lever set closing the listed sectors (or all but ``all_except``)."""
    G, K = ds.n_patches, ds.n_sectors
    lv = PolicyInputs.none(G, K)
    codes = ds.sectors.codes
    for k, c in enumerate(codes):
        if (all_except is not None and c not in all_except) or c in closed:
            lv.closure[:, k] = 1.0
    lv.telework[:] = telework
    lv.private_ban[:] = private_ban
    lv.school[:] = school
    return lv


def scenario_policy(ds, name):
    """Policy levers P1 (strictest) to P4b (none)."""
    if name == "P1":
        return levers(ds, all_except=UTILITIES, telework=1, private_ban=1, school=1)
    if name == "P2":
        return levers(ds, closed=CUSTOMER_FACING, telework=1, private_ban=1, school=1)
    if name == "P3":
        return levers(ds, closed=HOSPITALITY_RECREATION, telework=1, private_ban=1, school=1)
    if name == "P4a":
        return levers(ds, telework=1)
    if name == "P4b":
        return levers(ds)
    raise ValueError(f"unknown policy {name!r}")


def historical_schedule(ds, country, ramp=5.0, holidays=True):
    """The 2020 policy time course of a packaged country."""
    pts = load_policy_csv(POLICY_DIR / f"{country.upper()}_2020.csv", ds, skip_unknown=True)
    return PolicySchedule(pts, (ds.n_patches, ds.n_sectors), ramp=ramp,
                          holidays=HOLIDAYS.get(country.upper(), []) if holidays else [])
