import datetime as dt

import numpy as np
import pytest

from epinomic import epi
from epinomic import epi_kernels as K
from epinomic.coupler import ScenarioSpec, Simulation, contact_age_weights, read_tidy_csv, run, seed_epidemic
from epinomic.memory import BehaviorSignal
from epinomic.policies import ChangePoint


def _spec(days=60, **kw):
    end = dt.date(2020, 1, 1) + dt.timedelta(days=days)
    kw.setdefault("awareness", "off")
    return ScenarioSpec("t", "BE", "2020-01-01", end, **kw)


def test_joint_fixed_point(fixture2):
    rec = run(_spec(365, awareness="threshold"), fixture2)
    assert len(rec.dates) == 365
    np.testing.assert_array_equal(rec.final_state, epi.new_state(fixture2.geo.population))
    for series in (rec.Q_hosp, rec.incidence, rec.M_eff, rec.kD, rec.kS):
        assert np.all(series == 0) or np.all(series == 1)
    np.testing.assert_allclose(rec.x, np.broadcast_to(rec.x0, rec.x.shape), rtol=1e-9)
    np.testing.assert_allclose(rec.l, np.broadcast_to(rec.l0, rec.l.shape), rtol=1e-9)
    assert not rec.awareness.any()


def test_run_is_deterministic(fixture2):
    spec = _spec(60, awareness="threshold", seeds={0: 20.0})
    a, b = run(spec, fixture2), run(spec, fixture2)
    for name in ("Q_hosp", "incidence", "x", "l", "d", "kD", "kS", "M_eff", "final_state"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_seed_examples(fixture2):
    y0 = epi.new_state(fixture2.geo.population)
    np.testing.assert_array_equal(seed_epidemic(y0, {0: 0.0}, np.ones(17)), y0)
    y = seed_epidemic(y0, {1: 17.0}, np.ones(17))
    np.testing.assert_allclose(y[K.E, :, 1], 1.0)
    np.testing.assert_array_equal(y[:, :, 0], y0[:, :, 0])
    np.testing.assert_allclose(y[:K.N_COMP].sum(0), y0[:K.N_COMP].sum(0), rtol=1e-15)
    with pytest.raises(ValueError):
        seed_epidemic(y0, {0: 1e9}, np.ones(17))
    with pytest.raises(ValueError):
        seed_epidemic(y0, {0: -1.0}, np.ones(17))


def test_seed_locality_packaged(swe):
    y0 = epi.new_state(swe.geo.population)
    g = swe.geo.patch_ids.index("SE110")
    y = seed_epidemic(y0, {g: 2.0}, contact_age_weights(swe))
    changed = np.flatnonzero(np.any(y != y0, axis=(0, 1)))
    assert changed.tolist() == [g]
    assert y[K.E, :, g].sum() == pytest.approx(2.0)


def test_record_conservation(fixture2, tmp_path):
    rec = run(_spec(120, seeds={0: 50.0, 1: 10.0}), fixture2)
    cum = (rec.admissions_end - rec.admissions_start).sum()
    assert cum > 1.0
    assert abs(rec.incidence.sum() - cum) <= 0.005 * cum
    T = fixture2.geo.population
    np.testing.assert_allclose(rec.final_state[:K.N_COMP].sum(0), T, rtol=1e-8)
    assert np.all(np.isfinite(rec.x)) and np.all(np.isfinite(rec.Q_hosp))
    rec.to_csv(tmp_path / "r.csv")
    back = read_tidy_csv(tmp_path / "r.csv")
    dates, vals = back[("hosp_incidence", "national")]
    assert len(dates) == 120
    np.testing.assert_array_equal(vals, rec.incidence.sum(1))


def test_snapshot_restart_matches(fixture2):
    spec = _spec(50, awareness="threshold", seeds={0: 40.0})
    full, snap = run(spec, fixture2, snapshot_at="2020-01-21")
    tail = run(spec, fixture2, snapshot=snap)
    assert tail.dates[0] == dt.date(2020, 1, 21)
    np.testing.assert_array_equal(tail.Q_hosp, full.Q_hosp[20:])
    np.testing.assert_array_equal(tail.l, full.l[20:])
    with pytest.raises(ValueError):
        run(spec, fixture2, snapshot_at="2021-01-01")


def test_awareness_off_only_sickness_shocks(fixture2):
    rec = run(_spec(90, seeds={0: 200.0}), fixture2)
    assert np.all(rec.M_eff == 1) and np.all(rec.M_leisure == 1) and np.all(rec.M_work == 1)
    lav = fixture2.sectors.lav_d
    peak = int(np.argmax(rec.kD.sum(1)))
    assert rec.kD[peak].max() > 0
    pos = lav > 0
    ratio = rec.kD[peak, pos] / lav[pos]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)
    np.testing.assert_array_equal(rec.kD[peak, ~pos], 0.0)


def test_awareness_off_matches_epi_only_loop(fixture2):
    """Re-integrate the epidemic alone, feeding it the recorded labour ratios."""
    ds = fixture2
    spec = _spec(40, seeds={0: 30.0})
    rec = run(spec, ds)
    sim = Simulation(spec, ds)
    y, T, Pbar, p = sim.y, sim.T, sim.Pbar, sim.epi_params
    G, Kn = ds.n_patches, ds.n_sectors
    for n in range(40):
        summ = epi.symptomatic_summaries(y, T, Pbar)
        ct = epi.compose_contacts(ds, epi.PolicyInputs.none(G, Kn), BehaviorSignal.inactive(G, Kn), summ,
                                  rec.l[n] / rec.l0)
        y = epi.integrate_day(y, p, ct, Pbar, T, float(n))
        np.testing.assert_allclose(y[K.Q].sum(0), rec.Q_hosp[n], rtol=1e-12)
    np.testing.assert_allclose(y, rec.final_state, rtol=1e-12, atol=1e-12)


def test_labour_ratio_limits_work_contacts(fixture2):
    ds = fixture2
    G, Kn = ds.n_patches, ds.n_sectors
    quiet = {"I": np.zeros(G), "I_active": np.zeros(G)}
    sig = BehaviorSignal.inactive(G, Kn)
    pol = epi.PolicyInputs.none(G, Kn)
    base = epi.compose_contacts(ds, pol, sig, quiet, np.ones(Kn))
    ratio = np.ones(Kn)
    ratio[1] = 0.5
    half = epi.compose_contacts(ds, pol, sig, quiet, ratio)
    sector = np.einsum("g,ij->gij", ds.sectors.lmc[:, 1], ds.work_contacts[1])
    np.testing.assert_allclose(base.work - half.work, 0.5 * sector, rtol=1e-12, atol=1e-15)


def test_lockdown_drives_labour_to_allowed_level(fixture2):
    ds = fixture2
    G, Kn = ds.n_patches, ds.n_sectors
    lv = epi.PolicyInputs.none(G, Kn)
    lv.closure[:, 0] = 1.0
    spec = _spec(40, policy_points=[ChangePoint(dt.date(2020, 1, 1), lv, ramp=0.0)])
    rec = run(spec, ds)
    allowed = ds.sectors.f_workplace[0] + ds.sectors.f_telework[0]
    # no sickness and no behaviour: the labour supply shock is exactly 1 - allowed
    np.testing.assert_allclose(rec.kS[:, 0], 1 - allowed, rtol=1e-12)
    iota_F = 6.1
    day = int(np.ceil(5 * iota_F))
    ratio = rec.l[day:, 0] / rec.l0[0]
    assert np.all(ratio <= allowed + 1e-12)
    assert np.all(ratio >= 0.9 * allowed)
    np.testing.assert_array_equal(rec.kS[:, 1:], 0.0)
