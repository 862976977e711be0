"""Daily co-simulation of the epidemic, the behavioural memory and the economy."""
from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import econ, epi
from . import epi_kernels as K
from .memory import HospitalMemory, connectivity_weights, ema_load, gompertz_response, perceived_load, \
    record_load, update_awareness
from .params import CALIBRATED
from .policies import ChangePoint, PolicySchedule, as_date, historical_schedule

AWARENESS_MODES = ("threshold", "pretriggered", "off", "date")


@dataclass
class Intervention:
    """Lockdown imposed when national hospital incidence first reaches a threshold.

    Parameters
    ----------
    levers : PolicyInputs
        Lever values while the intervention is in force.
    trigger : float
        National daily hospital incidence per 100 000 that starts it.
    duration : int
        Days until release starts.
    release_ramp : float
        Days over which the levers return to 0.
    school_days : int or None
        Days after which schools reopen (``None`` keeps the ``levers`` value).
    """

    levers: epi.PolicyInputs
    trigger: float
    duration: int
    release_ramp: float = 0.0
    school_days: int | None = None


@dataclass
class ScenarioSpec:
    name: str
    country: str
    start: dt.date
    end: dt.date
    seasonality: bool = False
    holidays: bool = False
    exogenous: bool = False
    awareness: str = "threshold"
    awareness_date: dt.date | None = None
    seeds: dict = field(default_factory=dict)
    policy_points: list = field(default_factory=list)
    historical_policy: bool = False
    intervention: Intervention | None = None
    r0_target: float | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.start, self.end = as_date(self.start), as_date(self.end)
        if self.end <= self.start:
            raise ValueError("scenario end must be after its start")
        if self.awareness not in AWARENESS_MODES:
            raise ValueError(f"awareness must be one of {AWARENESS_MODES}")
        if self.awareness == "date" and self.awareness_date is None:
            raise ValueError("awareness mode 'date' needs awareness_date")
        if any(v < 0 for v in self.seeds.values()):
            raise ValueError("seeds must be non-negative")

    @property
    def n_days(self):
        return (self.end - self.start).days


@dataclass
class SimulationRecord:
    """Daily outputs; row ``n`` is the state at the end of day ``dates[n]``."""

    dates: list
    patch_ids: tuple
    codes: tuple
    Q_hosp: np.ndarray  # (D, G)
    incidence: np.ndarray  # (D, G) hospital admissions during the day
    ic_load: np.ndarray  # (D, G)
    x: np.ndarray  # (D, K)
    l: np.ndarray
    d: np.ndarray
    kD: np.ndarray
    kS: np.ndarray
    kF: np.ndarray
    M_eff: np.ndarray  # (D, G)
    M_leisure: np.ndarray
    M_work: np.ndarray  # (D, G) employment-weighted over sectors
    awareness: np.ndarray  # (D,)
    x0: np.ndarray
    l0: np.ndarray
    population: np.ndarray  # (G,)
    admissions_start: np.ndarray  # (G,) accumulator before day 0
    admissions_end: np.ndarray
    final_state: np.ndarray = field(repr=False, default=None)
    ic_fraction: float = 1.0
    intervention_date: dt.date | None = None

    @property
    def output_retained(self):
        return self.x.sum(1) / self.x0.sum()

    @property
    def labour_retained(self):
        return self.l.sum(1) / self.l0.sum()

    def national_ic_load(self):
        return self.ic_load.sum(1)

    def tidy_rows(self, compact=False):
        """Rows ``(date, variable, stratum, value)``."""
        rows = []
        for n, date in enumerate(self.dates):
            ds = date.isoformat()
            rows.append((ds, "output_retained", "national", self.output_retained[n]))
            rows.append((ds, "labour_retained", "national", self.labour_retained[n]))
            rows.append((ds, "hosp_incidence", "national", self.incidence[n].sum()))
            rows.append((ds, "ic_admissions", "national", self.ic_fraction * self.incidence[n].sum()))
            rows.append((ds, "Q_hosp", "national", self.Q_hosp[n].sum()))
            rows.append((ds, "ic_load", "national", self.ic_load[n].sum()))
            rows.append((ds, "awareness", "national", float(self.awareness[n])))
            if compact:
                continue
            for g, pid in enumerate(self.patch_ids):
                rows.append((ds, "Q_hosp", pid, self.Q_hosp[n, g]))
                rows.append((ds, "hosp_incidence", pid, self.incidence[n, g]))
                rows.append((ds, "ic_load", pid, self.ic_load[n, g]))
                rows.append((ds, "M_eff", pid, self.M_eff[n, g]))
                rows.append((ds, "M_leisure", pid, self.M_leisure[n, g]))
                rows.append((ds, "M_work", pid, self.M_work[n, g]))
            for k, code in enumerate(self.codes):
                rows.append((ds, "x", code, self.x[n, k]))
                rows.append((ds, "l", code, self.l[n, k]))
                rows.append((ds, "d", code, self.d[n, k]))
                rows.append((ds, "kappa_D", code, self.kD[n, k]))
                rows.append((ds, "kappa_S", code, self.kS[n, k]))
                rows.append((ds, "kappa_F", code, self.kF[n, k]))
        return rows

    def to_csv(self, path, compact=False):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("date", "variable", "stratum", "value"))
        for r in self.tidy_rows(compact):
            w.writerow(r[:3] + (repr(float(r[3])),))
        Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_tidy_csv(path):
    """Load a record CSV into ``{(variable, stratum): (dates, values)}``."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            key = (r["variable"], r["stratum"])
            dates, vals = out.setdefault(key, ([], []))
            dates.append(dt.date.fromisoformat(r["date"]))
            vals.append(float(r["value"]))
    return {k: (d, np.array(v)) for k, (d, v) in out.items()}


# --------------------------------------------------------------------------- seeding


def contact_age_weights(ds):
    """Share of all social contacts made by each age group (national)."""
    ct = epi.prepandemic_contacts(ds)
    T = ds.geo.population
    w = np.einsum("gij,ig->i", ct.total, T)
    return w / w.sum()


def resolve_patch(ds, key):
    """Patch index from an index, a patch id or a patch name."""
    if not isinstance(key, str):
        return int(key)
    for names in (ds.geo.patch_ids, ds.geo.names):
        if key in names:
            return names.index(key)
    raise KeyError(f"unknown patch {key!r} in dataset {ds.name}")


def seed_epidemic(y, seeds, weights):
    """Move ``seeds[g]`` persons from S to E in patch ``g``, split over ages by ``weights``.

    Parameters
    ----------
    y : ndarray, shape (9, 17, G)
    seeds : mapping of int to float
        Patch index to number of exposed persons.
    weights : ndarray, shape (17,)
        Age allocation weights (normalised internally).
    """
    y = np.array(y, dtype=float, copy=True)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    for g, n in seeds.items():
        if n < 0:
            raise ValueError("seed must be non-negative")
        if n == 0:
            continue
        alloc = n * w
        if n > y[K.S, :, g].sum() or np.any(alloc > y[K.S, :, g]):
            raise ValueError(f"seed of {n} exceeds the susceptible population of patch {g}")
        y[K.S, :, g] -= alloc
        y[K.E, :, g] += alloc
    return y


# --------------------------------------------------------------------------- simulation


@dataclass(frozen=True)
class Snapshot:
    """Complete simulation state at the start of ``date``."""

    date: dt.date
    y: np.ndarray
    econ: econ.EconState
    memory: HospitalMemory
    aware: bool
    aware_since: dt.date | None
    triggered: dt.date | None
    policy_points: tuple


class Simulation:
    """State triple plus everything needed to step one day.

    ``snapshot`` restarts from a saved state instead of the seeded equilibrium; the
    scenario's seeds are then ignored.
    """

    def __init__(self, spec, ds, params=CALIBRATED, snapshot=None):
        self.spec, self.ds = spec, ds
        self.params = params.with_(**spec.overrides) if spec.overrides else params
        p = self.params
        country = spec.country
        self.epi_params = p.epi(country, spec.seasonality)
        self.T = np.asarray(ds.geo.population, dtype=float)
        self.Tg = self.T.sum(0)
        self.Pbar = np.asarray(ds.mobility.normalized)
        if spec.r0_target is not None:
            beta = epi.calibrate_beta(spec.r0_target, self.epi_params, epi.prepandemic_contacts(ds),
                                      self.Pbar, self.T)
            self.epi_params = self.epi_params.with_(beta=beta)
        self.behavior = p.behavior()
        self.C = connectivity_weights(self.Pbar)
        self.r = p.ic_ratio(country, self.Tg.sum())
        self.econ_params = econ.make_params(ds, p.iota_H, p.iota_F, p.tau, p.delta_s)
        self.schedule = self._schedule()
        self.exo = econ.SCHEDULES.get(country.upper()) if spec.exogenous else None
        if spec.exogenous and (self.exo is None or ds.exogenous_split is None):
            raise ValueError("exogenous shocks need a packaged schedule and exogenous_split.csv")

        seeds = {}
        for k, v in spec.seeds.items():
            g = resolve_patch(ds, k)
            seeds[g] = seeds.get(g, 0.0) + float(v)
        self.y = seed_epidemic(epi.new_state(self.T), seeds, contact_age_weights(ds))
        self.econ = econ.equilibrium_state(self.econ_params)
        self.memory = HospitalMemory(ds.n_patches)
        self.aware = spec.awareness == "pretriggered"
        self.aware_since = spec.start if self.aware else None
        self.triggered = None
        self.date = spec.start
        self.year0 = dt.date(spec.start.year, 1, 1)
        _G, _Kn = ds.n_patches, ds.n_sectors
        self.emp_w = ds.sectors.lmc * ds.geo.active_population[:, None]
        if snapshot is not None:
            self.restore(snapshot)

    def snapshot(self):
        return Snapshot(self.date, self.y.copy(), self.econ, self.memory.copy(), self.aware,
                        self.aware_since, self.triggered, tuple(self.schedule.points))

    def restore(self, snap):
        if not self.spec.start <= snap.date < self.spec.end:
            raise ValueError(f"snapshot date {snap.date} outside the scenario horizon")
        if snap.y.shape != self.y.shape:
            raise ValueError("snapshot state does not match the dataset dimensions")
        self.date, self.y, self.econ = snap.date, snap.y.copy(), snap.econ
        self.memory = snap.memory.copy()
        self.aware, self.aware_since, self.triggered = snap.aware, snap.aware_since, snap.triggered
        self.schedule.points = list(snap.policy_points)

    def _schedule(self):
        s, ds = self.spec, self.ds
        G, Kn = ds.n_patches, ds.n_sectors
        if s.historical_policy:
            sched = historical_schedule(ds, s.country, ramp=self.params.ramp, holidays=s.holidays)
            sched.points.extend(s.policy_points)
            sched.points.sort(key=lambda p: p.date)
            sched.__post_init__()
            return sched
        from .policies import HOLIDAYS

        hol = HOLIDAYS.get(s.country.upper(), []) if s.holidays else []
        return PolicySchedule(list(s.policy_points), (G, Kn), ramp=self.params.ramp, holidays=hol)

    def national_incidence_rate(self):
        """Instantaneous national hospital admissions per day per 100 000."""
        ep = self.epi_params
        adm = (ep.h[:, None] / ep.delta * self.y[K.IM]).sum()
        return 1e5 * adm / self.Tg.sum()

    def _maybe_trigger(self, incidence):
        iv = self.spec.intervention
        if iv is None or self.triggered is not None or incidence < iv.trigger:
            return
        self.triggered = self.date
        pts = [ChangePoint(self.date, iv.levers, ramp=0.0)]
        if iv.school_days is not None and iv.school_days < iv.duration:
            lv = epi.PolicyInputs(iv.levers.closure, iv.levers.telework, iv.levers.private_ban,
                                  np.zeros_like(iv.levers.school))
            pts.append(ChangePoint(self.date + dt.timedelta(days=iv.school_days), lv, ramp=0.0))
        G, Kn = self.ds.n_patches, self.ds.n_sectors
        pts.append(ChangePoint(self.date + dt.timedelta(days=iv.duration), epi.PolicyInputs.none(G, Kn),
                               ramp=iv.release_ramp))
        self.schedule.points = [p for p in self.schedule.points if p.date < self.date] + pts
        self.aware = True
        self.aware_since = self.aware_since or self.date

    def step_day(self):
        """Advance one day; returns the record row as a dict."""
        ds, sp, p = self.ds, self.spec, self.params
        # (1) memory and awareness
        Q = self.y[K.Q].sum(0)
        record_load(self.memory, Q, self.Tg)
        inc = self.national_incidence_rate()
        if sp.awareness == "threshold":
            was = self.aware
            self.aware = update_awareness(self.aware, inc, self.behavior.awareness_threshold)
            if self.aware and not was:
                self.aware_since = self.date
        elif sp.awareness == "date" and not self.aware and self.date >= as_date(sp.awareness_date):
            self.aware, self.aware_since = True, self.date
        self._maybe_trigger(inc)
        # (2) behaviour
        ema = ema_load(self.memory, self.behavior.nu)
        Qp = perceived_load(ema, self.behavior.mu, self.C, self.r)
        sig = gompertz_response(Qp, self.behavior, ds.sectors.willingness, self.aware)
        if self.aware and p.awareness_ramp > 0:
            frac = min(1.0, ((self.date - self.aware_since).days + 1) / p.awareness_ramp)
            sig = type(sig)(1 - frac * sig.a_eff, 1 - frac * sig.a_leisure, 1 - frac * sig.a_work)
        # (3) shocks
        pol = self.schedule.at(self.date)
        summ = epi.symptomatic_summaries(self.y, self.T, self.Pbar)
        I_nat = self.y[K.IM].sum() / self.T.sum()
        a_leis = float((sig.a_leisure * self.Tg).sum() / self.Tg.sum())
        kD = econ.household_shock(I_nat, a_leis, ds.sectors.lav_d)
        kS = econ.labor_shock(summ["I_tilde"], pol.closure, sig.a_work, ds.sectors.f_workplace,
                              ds.sectors.f_telework, ds.sectors.lmc, ds.geo.active_population)
        kF = (econ.exogenous_shock(self.date, self.exo, ds.exogenous_split) if self.exo is not None
              else np.zeros(ds.n_sectors))
        # (4) economy
        self.econ = econ.step_econ_day(self.econ, self.econ_params, econ.ShockSet(kD, kS, kF))
        # (5) contacts
        contacts = epi.compose_contacts(ds, pol, sig, summ, self.econ.l / self.econ_params.l0)
        # (6) epidemic
        adm_before = self.y[K.ADM].sum(0)
        t = float((self.date - self.year0).days)
        self.y = epi.integrate_day(self.y, self.epi_params, contacts, self.Pbar, self.T, t)
        # (7) record
        Qn = self.y[K.Q].sum(0)
        row = dict(date=self.date, Q=Qn, inc=self.y[K.ADM].sum(0) - adm_before, ic=p.ic_fraction * Qn,
                   x=self.econ.x, l=self.econ.l, d=self.econ.d, kD=kD, kS=kS, kF=kF,
                   M_eff=sig.M_eff, M_leisure=sig.M_leisure,
                   M_work=(sig.M_work * self.emp_w).sum(1) / self.emp_w.sum(1), aware=self.aware)
        self.date += dt.timedelta(days=1)
        return row


def run(spec, ds, params=CALIBRATED, snapshot=None, snapshot_at=None):
    """Simulate a scenario; deterministic in (spec, dataset, parameters).

    Parameters
    ----------
    snapshot : Snapshot, optional
        Start from this state (the record then begins on ``snapshot.date``).
    snapshot_at : date, optional
        Also return the state at the start of this day, as ``(record, snapshot)``.
    """
    sim = Simulation(spec, ds, params, snapshot)
    adm0 = sim.y[K.ADM].sum(0).copy()
    snap_day = as_date(snapshot_at) if snapshot_at is not None else None
    saved = None
    rows = []
    while sim.date < spec.end:
        if sim.date == snap_day:
            saved = sim.snapshot()
        rows.append(sim.step_day())
    st = lambda key: np.array([r[key] for r in rows])  # noqa: E731
    rec = SimulationRecord(
        dates=[r["date"] for r in rows], patch_ids=ds.geo.patch_ids, codes=ds.sectors.codes,
        Q_hosp=st("Q"), incidence=st("inc"), ic_load=st("ic"), x=st("x"), l=st("l"), d=st("d"),
        kD=st("kD"), kS=st("kS"), kF=st("kF"), M_eff=st("M_eff"), M_leisure=st("M_leisure"),
        M_work=st("M_work"), awareness=st("aware"), x0=sim.econ_params.x0, l0=sim.econ_params.l0,
        population=sim.Tg, admissions_start=adm0, admissions_end=sim.y[K.ADM].sum(0),
        final_state=sim.y, ic_fraction=sim.params.ic_fraction, intervention_date=sim.triggered)
    if snapshot_at is not None:
        if saved is None:
            raise ValueError(f"snapshot date {snap_day} outside the simulated days")
        return rec, saved
    return rec
