"""Scenario library (four counterfactual set-ups plus the 2020 replication) and summaries."""
from __future__ import annotations

import datetime as dt

import numpy as np

from .coupler import Intervention, ScenarioSpec, read_tidy_csv, resolve_patch, run
from .epi import PolicyInputs
from .policies import ChangePoint, as_date, scenario_policy

SCENARIOS = ("scenario1", "scenario2", "scenario3", "scenario4")
POLICIES = ("P1", "P2", "P3", "P4a", "P4b")
POLICY_DATES = tuple(dt.date(2020, 3, d) for d in (3, 6, 9, 12, 15, 18))
RELEASE_MONTHS = (2, 3, 4, 5)
NU_GRID = (7.0, 28.0, 62.0)

# fraction of hospitalised patients occupying an IC bed (reporting scale only)
IC_FRACTION = 0.22
ORIGIN = {"BE": "BE10", "SWE": "SE110"}
ORIGIN_SEEDS = 5.0
# exposed persons on 2020-02-01
FEB1_SEEDS = {
    "BE": {"BE22": 180.0, "BE32": 135.0, "BE21": 60.0, "BE10": 45.0, "BE33": 45.0, "BE23": 30.0,
           "BE24": 30.0, "BE25": 30.0, "BE35": 15.0, "BE31": 15.0, "BE34": 15.0},
    "SWE": {"SE110": 40.0, "SE211": 5.0, "SE232": 2.0, "SE224": 2.0, "SE121": 1.0},
}
# national hospital incidence (per 100 000 per day) that starts the scenario-2 lockdown,
# chosen so the first IC peak is close to the nominal number of IC beds
SCENARIO2_TRIGGER = {"BE": 1.99, "SWE": 1.32}
RELEASE_2020 = dt.date(2020, 5, 4)
RELEASE_2020_DAYS = 61.0
SCHOOL_CLOSED_DAYS = 14


def _overrides(extra):
    ov = {"ic_fraction": IC_FRACTION}
    ov.update(extra or {})
    return ov


def _with_school(lv, value):
    return PolicyInputs(lv.closure, lv.telework, lv.private_ban, np.full_like(lv.school, value))


def scenario1(ds, policy="P1", date="2020-03-15", overrides=None):
    """Belgian 2020 counterfactual: policy ``P1``..``P4b`` imposed on ``date``.

    Measures are released gradually over two months from 2020-05-04.  Schools close
    for the first 14 days under P1 to P3.
    """
    if policy not in POLICIES:
        raise ValueError(f"scenario1 policy must be one of {POLICIES}")
    date = as_date(date)
    if date not in POLICY_DATES:
        raise ValueError(f"scenario1 date must be one of {[d.isoformat() for d in POLICY_DATES]}")
    lv = scenario_policy(ds, policy)
    points = [ChangePoint(date, lv)]
    if policy in ("P1", "P2", "P3"):
        points.append(ChangePoint(date + dt.timedelta(days=SCHOOL_CLOSED_DAYS), _with_school(lv, 0.0)))
    points.append(ChangePoint(RELEASE_2020, PolicyInputs.none(ds.n_patches, ds.n_sectors),
                              ramp=RELEASE_2020_DAYS))
    return ScenarioSpec(f"scenario1_{policy}_{date.isoformat()}", "BE", "2020-02-01", "2020-07-01",
                        seasonality=True, holidays=True, exogenous=True, awareness="threshold",
                        seeds=dict(FEB1_SEEDS["BE"]), policy_points=points, overrides=_overrides(overrides))


def scenario2(ds, country="BE", release_months=2, trigger=None, overrides=None):
    """Lockdown P1 started at a hospital-incidence trigger and released after some months."""
    country = country.upper()
    if release_months not in RELEASE_MONTHS:
        raise ValueError(f"scenario2 release_months must be one of {RELEASE_MONTHS}")
    iv = Intervention(scenario_policy(ds, "P1"), SCENARIO2_TRIGGER[country] if trigger is None else trigger,
                      duration=int(round(30.44 * release_months)), release_ramp=5.0,
                      school_days=SCHOOL_CLOSED_DAYS)
    return ScenarioSpec(f"scenario2_{country}_{release_months}m", country, "2020-01-01", "2021-12-31",
                        awareness="pretriggered", seeds={ORIGIN[country]: ORIGIN_SEEDS}, intervention=iv,
                        r0_target=3.0, overrides=_overrides(overrides))


def scenario3(ds, country="BE", nu=7.0, overrides=None):
    """Two years without government measures; awareness active from the start."""
    country = country.upper()
    ov = {"nu": float(nu)}
    ov.update(overrides or {})
    return ScenarioSpec(f"scenario3_{country}_nu{nu:g}", country, "2020-01-01", "2021-12-31",
                        awareness="pretriggered", seeds={ORIGIN[country]: ORIGIN_SEEDS}, r0_target=3.0,
                        overrides=_overrides(ov))


def scenario4(ds, country="SWE", second_seed="SE224", overrides=None):
    """Two single seeds, one in the capital region and one in ``second_seed``; 150 days."""
    country = country.upper()
    first = ORIGIN[country]
    g1, g2 = resolve_patch(ds, first), resolve_patch(ds, second_seed)
    if g1 == g2:
        raise ValueError("scenario4 second seed must lie outside the capital region")
    pid = ds.geo.patch_ids[g2]
    return ScenarioSpec(f"scenario4_{country}_{pid}", country, "2020-01-01", "2020-05-30",
                        awareness="threshold", seeds={first: 1.0, pid: 1.0}, r0_target=3.0,
                        overrides=_overrides(overrides))


def replication2020(ds, country="BE", overrides=None):
    """Calendar 2020 with the historical policy schedule and the February seeds."""
    country = country.upper()
    return ScenarioSpec(f"replication2020_{country}", country, "2020-02-01", "2021-01-01",
                        seasonality=True, holidays=True, exogenous=True, awareness="threshold",
                        seeds=dict(FEB1_SEEDS[country]), historical_policy=True,
                        overrides=_overrides(overrides))


def scenario_library(name, ds, **variant):
    """Build a named scenario (``scenario1`` .. ``scenario4``) for ``ds``."""
    builders = {"scenario1": scenario1, "scenario2": scenario2, "scenario3": scenario3,
                "scenario4": scenario4, "replication2020": replication2020}
    if name not in builders:
        raise ValueError(f"unknown scenario {name!r}; expected one of {sorted(builders)}")
    return builders[name](ds, **variant)


def scenario_grid(name, ds, country=None):
    """All variants of a scenario as ``(labels, spec)`` pairs, in table order."""
    if name == "scenario1":
        return [({"policy": p, "date": d.isoformat()}, scenario1(ds, p, d))
                for d in POLICY_DATES for p in POLICIES]
    if name == "scenario2":
        return [({"country": ds.name, "release_months": m}, scenario2(ds, ds.name, m))
                for m in RELEASE_MONTHS]
    if name == "scenario3":
        return [({"country": ds.name, "nu": nu}, scenario3(ds, ds.name, nu)) for nu in NU_GRID]
    if name == "scenario4":
        origin = resolve_patch(ds, ORIGIN[ds.name])
        return [({"country": ds.name, "second_seed": pid}, scenario4(ds, ds.name, pid))
                for g, pid in enumerate(ds.geo.patch_ids) if g != origin]
    raise ValueError(f"unknown scenario {name!r}")


# --------------------------------------------------------------------------- summaries


def summarize_series(dates, output_retained, labour_retained, ic_admissions, start=None, end=None):
    """Mean output and labour reduction (%) and cumulative IC admissions over ``[start, end]``.

    Parameters
    ----------
    dates : sequence of date
    output_retained, labour_retained : array_like
        National fractions of pre-shock output and labour compensation.
    ic_admissions : array_like
        Daily IC admissions.
    start, end : date, optional
        Inclusive window; defaults to the whole record.
    """
    dates = [as_date(d) for d in dates]
    lo = as_date(start) if start is not None else dates[0]
    hi = as_date(end) if end is not None else dates[-1]
    m = np.array([lo <= d <= hi for d in dates])
    if not m.any():
        raise ValueError("summary window contains no simulated day")
    return {
        "output_reduction_pct": 100.0 * (np.mean(np.asarray(output_retained)[m]) - 1.0),
        "labour_reduction_pct": 100.0 * (np.mean(np.asarray(labour_retained)[m]) - 1.0),
        "cumulative_ic": float(np.sum(np.asarray(ic_admissions)[m])),
        "peak_ic_load": None,
    }


def summarize_record(rec, start=None, end=None):
    out = summarize_series(rec.dates, rec.output_retained, rec.labour_retained,
                           rec.ic_fraction * rec.incidence.sum(1), start, end)
    dates = np.array(rec.dates)
    lo = as_date(start) if start is not None else dates[0]
    hi = as_date(end) if end is not None else dates[-1]
    m = (dates >= lo) & (dates <= hi)
    out["peak_ic_load"] = float(rec.national_ic_load()[m].max())
    return out


def summarize_csv(path, start=None, end=None):
    """Same as :func:`summarize_record` but from a tidy record CSV."""
    t = read_tidy_csv(path)
    dates, out_r = t[("output_retained", "national")]
    out = summarize_series(dates, out_r, t[("labour_retained", "national")][1],
                           t[("ic_admissions", "national")][1], start, end)
    lo = as_date(start) if start is not None else dates[0]
    hi = as_date(end) if end is not None else dates[-1]
    m = np.array([lo <= d <= hi for d in dates])
    out["peak_ic_load"] = float(t[("ic_load", "national")][1][m].max())
    return out


Q2_2020 = (dt.date(2020, 4, 1), dt.date(2020, 6, 30))


def scenario_window(spec):
    """Summary window of a scenario: Q2 2020 for scenario 1, the whole run otherwise."""
    return Q2_2020 if spec.name.startswith("scenario1") else (spec.start, spec.end - dt.timedelta(days=1))


def annual_reduction(rec, year=2020):
    """Calendar-year mean output and labour reduction (%), days before the run at baseline."""
    first, last = dt.date(year, 1, 1), dt.date(year, 12, 31)
    n_year = (last - first).days + 1
    m = np.array([first <= d <= last for d in rec.dates])
    pad = n_year - m.sum()
    out = (rec.output_retained[m].sum() + pad) / n_year
    lab = (rec.labour_retained[m].sum() + pad) / n_year
    return 100.0 * (out - 1.0), 100.0 * (lab - 1.0)


def first_wave_peak(rec):
    """Largest national IC load before an intervention is released (whole run if none)."""
    L = rec.national_ic_load()
    if rec.intervention_date is None:
        return float(L.max())
    iv_day = (rec.intervention_date - rec.dates[0]).days
    return float(L[: iv_day + 60].max())


def tune_scenario2_trigger(ds, country, target_beds=None, lo=0.02, hi=20.0, iters=14, params=None):
    """Bisect the trigger (log scale) so the first IC peak matches the nominal IC capacity."""
    from .params import CALIBRATED

    params = params or CALIBRATED
    target = params.ic_capacity(country) if target_beds is None else target_beds
    for _ in range(iters):
        mid = float(np.sqrt(lo * hi))
        peak = first_wave_peak(run(scenario2(ds, country, 5, trigger=mid), ds, params))
        lo, hi = (lo, mid) if peak > target else (mid, hi)
    return float(np.sqrt(lo * hi))
