import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epinomic import econ
from epinomic.econ import (EconState, ExogenousSchedule, ShockSet, adjust_labor,
                           criticality_masks, equilibrium_state, household_demand, household_shock,
                           input_capacity, labor_shock, labor_shock_patch, leontief_capacity, make_params,
                           produce_and_ration, step_econ_day)
from oracles import random_network, step_oracle, three_sector


def test_equilibrium_is_fixed():
    p = three_sector()
    s = equilibrium_state(p)
    zero = ShockSet(np.zeros(3), np.zeros(3), np.zeros(3))
    for _ in range(50):
        s = step_econ_day(s, p, zero)
    np.testing.assert_allclose(s.x, p.x0, rtol=1e-12)
    np.testing.assert_allclose(s.l, p.l0, rtol=1e-12)
    np.testing.assert_allclose(s.S, p.S0, rtol=1e-12)


def test_step_matches_loop_oracle():
    p = three_sector()
    rng = np.random.default_rng(0)
    s = equilibrium_state(p)
    s = EconState(s.x, s.d * rng.uniform(0.8, 1.1, 3), s.l * rng.uniform(0.7, 1.0, 3), s.c, s.f, s.O,
                  s.S * rng.uniform(0.05, 1.2, (3, 3)))
    kD, kS, kF = np.array([0.1, 0.4, 0.0]), np.array([0.05, 0.3, 0.2]), np.array([0.0, 0.1, 0.3])
    new = step_econ_day(s, p, ShockSet(kD, kS, kF))
    x, d, l, S = step_oracle(s.d, s.l, s.S, p, kD, kS, kF)
    np.testing.assert_allclose(new.x, x, rtol=1e-9)
    np.testing.assert_allclose(new.d, d, rtol=1e-9)
    np.testing.assert_allclose(new.l, l, rtol=1e-9)
    np.testing.assert_allclose(new.S, S, rtol=1e-9)


def test_packaged_equilibrium_fixed(be):
    p = make_params(be)
    s = equilibrium_state(p)
    zero = ShockSet(np.zeros(63), np.zeros(63), np.zeros(63))
    for _ in range(30):
        s = step_econ_day(s, p, zero)
    np.testing.assert_allclose(s.x, p.x0, rtol=1e-9)
    np.testing.assert_allclose(s.l, p.l0, rtol=1e-9)


def test_household_demand():
    theta0 = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(household_demand(np.zeros(3), theta0, 0.75, 100.0), [20, 30, 50])
    np.testing.assert_array_equal(household_demand(np.ones(3), theta0, 0.75, 100.0), 0.0)
    # shocking half the first sector: retained share 0.9, aggregate saving 0.75 * 0.1
    c = household_demand(np.array([0.5, 0, 0]), theta0, 0.75, 100.0)
    assert math.isclose(c.sum(), (1 - 0.075) * 100.0)
    assert math.isclose(c[0] / c[1], 0.1 / 0.3)


def test_household_shock():
    lav = np.array([0.0, 0.5, 1.0])
    np.testing.assert_array_equal(household_shock(0.0, 0.0, lav), 0.0)
    np.testing.assert_allclose(household_shock(1.0, 0.0, lav), lav)
    np.testing.assert_allclose(household_shock(0.1, 0.5, lav), (0.1 + 0.9 * 0.5) * lav)


def test_labor_shock_patch_and_national():
    k = labor_shock_patch([0.0], np.array([[1.0]]), np.array([[0.0]]), np.array([0.3]), np.array([0.2]))
    assert math.isclose(float(k[0, 0]), 0.5)  # closed share not at workplace and not teleworking
    k = labor_shock_patch([0.1], np.array([[0.0]]), np.array([[0.6]]), np.array([0.3]), np.array([0.2]))
    assert math.isclose(float(k[0, 0]), 0.1 + 0.9 * 0.4)
    lmc = np.array([[1.0], [1.0]])
    nat = labor_shock([0.0, 0.0], np.array([[1.0], [0.0]]), np.zeros((2, 1)), np.array([0.3]),
                      np.array([0.2]), lmc, [100.0, 300.0])
    assert math.isclose(float(nat[0]), 0.5 * 0.25)


def test_produce_and_ration_proportional():
    O_d = np.array([[10.0, 10.0], [5.0, 5.0]])
    c_d = np.array([20.0, 10.0])
    f_d = np.array([10.0, 0.0])
    x, d, O, c, f = produce_and_ration(O_d, c_d, f_d, np.array([25.0, 100.0]), np.array([np.inf, np.inf]))
    np.testing.assert_allclose(d, [50.0, 20.0])
    np.testing.assert_allclose(x, [25.0, 20.0])
    np.testing.assert_allclose(O[0], [5.0, 5.0])
    assert math.isclose(c[0], 10.0) and math.isclose(f[0], 5.0)
    np.testing.assert_allclose(O[1], O_d[1])


def test_adjust_labor_rates():
    l = adjust_labor(np.array([10.0, 10.0]), np.array([10.0, 10.0]), np.array([100.0, 100.0]),
                     np.array([120.0, 50.0]), np.array([120.0, 50.0]), np.array([80.0, 100.0]),
                     7.0, 6.1, np.array([100.0, 100.0]))
    assert math.isclose(l[0], 10.0 + 4.0 / 7.0)
    assert math.isclose(l[1], 10.0 - 5.0 / 6.1)


def test_input_capacity_hand():
    A = np.array([[0.1, 0.2], [0.3, 0.0]])
    S = np.array([[5.0, 10.0], [3.0, 0.0]])
    crit = np.array([[True, False], [False, False]])
    imp = np.array([[False, True], [True, False]])
    x0 = np.array([100.0, 100.0])
    # sector 0: critical 5/0.1 = 50, important (3/0.3 + 100)/2 = 55 -> 50
    # sector 1: important (10/0.2 + 100)/2 = 75
    np.testing.assert_allclose(input_capacity(S, A, crit, imp, x0), [50.0, 75.0])
    np.testing.assert_allclose(leontief_capacity(S, A, x0), [10.0, 50.0])
    assert np.isinf(input_capacity(S, A, np.zeros_like(crit), np.zeros_like(imp), x0)).all()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pbl_effective_capacity_not_below_leontief(seed):
    A, cm, im, x0, S = random_network(np.random.default_rng(seed))
    pbl = np.minimum(input_capacity(S, A, cm, im, x0), x0)
    leo = np.minimum(leontief_capacity(S, A, x0), x0)
    assert np.all(pbl >= leo)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pbl_not_below_leontief_when_depleted(seed):
    A, cm, im, x0, S = random_network(np.random.default_rng(seed), max_days=1.0)
    assert np.all(input_capacity(S, A, cm, im, x0) >= leontief_capacity(S, A, x0))


def test_important_input_exhausted_halves_capacity():
    A = np.array([[0.1, 0.0], [0.2, 0.1]])
    S = np.array([[50.0, 0.0], [0.0, 50.0]])
    cm = np.array([[True, False], [False, True]])
    im = np.array([[False, False], [True, False]])
    x0 = np.array([100.0, 100.0])
    assert math.isclose(input_capacity(S, A, cm, im, x0)[0], 50.0)


def test_criticality_masks_warns_on_dead_entries():
    A = np.array([[0.1, 0.0], [0.0, 0.2]])
    crit = np.array([[1.0, 1.0], [0.5, 0.5]])
    with pytest.warns(RuntimeWarning, match="zero technical coefficient"):
        cm, im = criticality_masks(A, crit)
    np.testing.assert_array_equal(cm, [[True, False], [False, False]])
    np.testing.assert_array_equal(im, [[False, False], [False, True]])


def test_exogenous_schedule_profile():
    s = ExogenousSchedule(investment=0.2, exports_goods=0.1, exports_services=0.3)
    np.testing.assert_array_equal(s.components(dt.date(2020, 2, 1)), 0.0)
    mid_ramp = s.components(dt.date(2020, 3, 1) + dt.timedelta(days=15))
    assert math.isclose(mid_ramp[1], 0.2 * 15 / 31)
    full = s.components(dt.date(2020, 4, 15))
    np.testing.assert_allclose(full, [0.0, 0.2, 0.1, 0.3])
    # linear release over the 123 days from 1 May to 1 September
    assert math.isclose(s.components(dt.date(2020, 5, 1) + dt.timedelta(days=61))[2], 0.1 * (1 - 61 / 123))
    assert s.components(dt.date(2020, 10, 1))[1] == 0.0
    assert s.components(dt.date(2020, 10, 1))[3] > 0
    with pytest.raises(ValueError):
        s.components(dt.date(2030, 1, 1))


def test_exogenous_demand_split():
    split = np.array([[1.0, 0, 0, 0], [0, 0.5, 0.5, 0]])
    sched = ExogenousSchedule(investment=0.2, exports_goods=0.1)
    f = econ.exogenous_demand(dt.date(2020, 4, 15), sched, np.array([10.0, 10.0]), split)
    np.testing.assert_allclose(f, [10.0, 10.0 * (1 - 0.15)])


def test_shock_examples():
    assert household_shock(0.01, 0.5, np.array([1.0]))[0] == pytest.approx(0.505)
    k = labor_shock_patch([0.0], np.array([[1.0]]), np.array([[0.0]]), np.array([0.236]), np.array([0.4]))
    assert k[0, 0] == pytest.approx(1 - 0.236 - 0.4)
    k = labor_shock_patch([0.0], np.array([[0.0]]), np.array([[0.9]]), np.array([0.1]), np.array([0.3]))
    assert k[0, 0] == pytest.approx(0.6)
    k = labor_shock_patch([0.0], np.array([[0.0]]), np.array([[0.0]]), np.array([0.1]), np.array([0.3]))
    assert k[0, 0] == 0.0


def test_exogenous_examples(be):
    f0 = np.array([10.0, 20.0])
    split = np.array([[0.0, 0.5, 0.5, 0.0], [0.0, 0.0, 0.0, 1.0]])
    sched = econ.SCHEDULES["BE"]
    np.testing.assert_allclose(econ.exogenous_demand(dt.date(2020, 1, 15), sched, f0, split), f0)
    comp = sched.components(dt.date(2020, 4, 15))
    assert 1 - comp[2] == pytest.approx(0.75)
    full = ExogenousSchedule(investment=1.0, exports_goods=1.0, exports_services=1.0)
    np.testing.assert_allclose(econ.exogenous_demand(dt.date(2020, 4, 15), full, np.array([5.0]),
                                                     np.array([[0.0, 0.2, 0.3, 0.5]])), 0.0, atol=1e-15)


def test_household_demand_examples():
    theta0 = np.array([0.2, 0.3, 0.5])
    c0 = 100.0 * theta0
    np.testing.assert_allclose(household_demand(np.zeros(3), theta0, 0.75, 100.0), c0)
    np.testing.assert_allclose(household_demand(np.full(3, 0.4), theta0, 0.75, 100.0), (1 - 0.75 * 0.4) * c0)
    c = household_demand(np.array([1.0, 0.0, 0.0]), theta0, 0.75, 100.0)
    assert c[0] == 0.0
    np.testing.assert_allclose(c[1:], c0[1:] * (1 - 0.75 * 0.2) / (1 - 0.2))


def test_order_examples():
    A = np.array([[0.1, 0.2], [0.3, 0.0]])
    d = np.array([50.0, 40.0])
    S0 = np.array([[100.0, 80.0], [60.0, 0.0]])
    np.testing.assert_allclose(econ.intermediate_demand(d, S0, S0, A, 14.0), A * d[None, :])
    np.testing.assert_allclose(econ.intermediate_demand(d, S0 - 30, S0, A, np.inf), A * d[None, :])
    S = S0.copy()
    S[0, 0] -= 14.0
    O = econ.intermediate_demand(d, S, S0, A, 14.0)
    assert O[0, 0] == pytest.approx(0.1 * 50 + 1.0)


def test_capacity_examples():
    assert econ.labor_capacity(10.0, 10.0, 500.0) == 500.0
    assert econ.labor_capacity(0.0, 10.0, 500.0) == 0.0
    assert econ.labor_capacity(8.0, 10.0, 500.0) == pytest.approx(400.0)
    A = np.array([[0.1, 0.0], [0.2, 0.1]])
    cm = np.array([[True, False], [False, True]])
    im = np.array([[False, False], [True, False]])
    x0 = np.array([100.0, 100.0])
    S = np.array([[0.0, 0.0], [50.0, 50.0]])
    assert input_capacity(S, A, cm, im, x0)[0] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_stocks_at_target_do_not_bind(seed):
    rng = np.random.default_rng(seed)
    K = 5
    A = rng.uniform(0, 0.2, (K, K)) * (rng.uniform(size=(K, K)) < 0.7)
    cm, im = criticality_masks(A, rng.choice([0.0, 0.5, 1.0], size=(K, K)), warn=False)
    x0 = rng.uniform(50, 150, K)
    S0 = A * x0[None, :] * rng.uniform(1, 30, K)[None, :]
    assert np.all(input_capacity(S0, A, cm, im, x0) >= x0 * (1 - 1e-12))


def test_rationing_examples():
    O_d = np.array([[30.0]])
    x, d, O, c, f = produce_and_ration(O_d, np.array([10.0]), np.array([60.0]), np.array([80.0]),
                                       np.array([np.inf]))
    assert d[0] == 100.0 and x[0] == 80.0 and c[0] == pytest.approx(8.0)
    assert O[0, 0] == pytest.approx(24.0) and f[0] == pytest.approx(48.0)
    x, d, O, c, f = produce_and_ration(O_d, np.array([10.0]), np.array([60.0]), np.array([200.0]),
                                       np.array([300.0]))
    assert x[0] == 100.0 and c[0] == 10.0 and f[0] == 60.0
    x, d, O, c, f = produce_and_ration(np.zeros((1, 1)), np.zeros(1), np.zeros(1), np.ones(1), np.ones(1))
    assert x[0] == 0.0 and np.all(np.isfinite(O))


def test_inventory_examples():
    A = np.array([[0.5]])
    assert econ.update_inventories(np.array([[10.0]]), np.array([[3.0]]), A, np.array([10.0]))[0, 0] == 8.0
    assert econ.update_inventories(np.array([[1.0]]), np.array([[0.0]]), A, np.array([10.0]))[0, 0] == 0.0
    assert econ.update_inventories(np.array([[7.0]]), np.array([[5.0]]), A, np.array([10.0]))[0, 0] == 7.0


def test_labour_examples():
    l = adjust_labor(np.array([50.0]), np.array([50.0]), np.array([100.0]), np.array([90.0]),
                     np.array([95.0]), np.array([100.0]), 7.0, 6.1, np.array([50.0]))
    assert l[0] == pytest.approx(50.0 - 5.0 / 6.1)
    l = adjust_labor(np.array([40.0]), np.array([50.0]), np.array([100.0]), np.array([200.0]),
                     np.array([200.0]), np.array([80.0]), 7.0, 6.1, np.array([42.0]))
    assert l[0] == 42.0
    l = adjust_labor(np.array([50.0]), np.array([50.0]), np.array([100.0]), np.array([100.0]),
                     np.array([100.0]), np.array([100.0]), 7.0, 6.1, np.array([50.0]))
    assert l[0] == 50.0


def test_full_labour_shock_day():
    p = three_sector()
    s = step_econ_day(equilibrium_state(p), p, ShockSet(np.zeros(3), np.ones(3), np.zeros(3)))
    np.testing.assert_array_equal(s.x, 0.0)
    np.testing.assert_array_equal(s.l, 0.0)  # clamped to the available labour (1 - kS) * l0


def test_ten_day_trajectory_matches_loop_oracle():
    p = three_sector()
    s = equilibrium_state(p)
    kD, kS, kF = np.array([0.0, 0.6, 0.0]), np.zeros(3), np.zeros(3)
    d, l, S = s.d, s.l, s.S
    for _ in range(10):
        s = step_econ_day(s, p, ShockSet(kD, kS, kF))
        x, d, l, S = step_oracle(d, l, S, p, kD, kS, kF)
        np.testing.assert_allclose(s.x, x, rtol=1e-9)
        np.testing.assert_allclose(s.l, l, rtol=1e-9)
    assert s.l[1] < p.l0[1] * 0.9
