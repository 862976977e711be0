"""Daily input-output production network with inventories and labour adjustment."""
from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class EconState:
    x: np.ndarray  # gross output
    d: np.ndarray  # total demand
    l: np.ndarray  # labour compensation
    c: np.ndarray  # realised household consumption
    f: np.ndarray  # realised exogenous demand
    O: np.ndarray  # realised orders, O[k, l] from customer l to supplier k
    S: np.ndarray  # inventories, S[k, l] of input k held by sector l


@dataclass(frozen=True)
class EconParams:
    A: np.ndarray
    crit_mask: np.ndarray  # (K, K) bool, critical input k of sector l with A > 0
    imp_mask: np.ndarray  # (K, K) bool, important input
    x0: np.ndarray
    l0: np.ndarray
    c0: np.ndarray
    f0: np.ndarray
    S0: np.ndarray
    theta0: np.ndarray
    tau: float = 14.0
    iota_H: float = 7.0
    iota_F: float = 6.1
    delta_s: float = 0.75

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class ShockSet:
    kD: np.ndarray
    kS: np.ndarray
    kF: np.ndarray


def criticality_masks(A, criticality, warn=True):
    """Boolean masks of critical and important inputs, dropping entries with ``A == 0``."""
    A = np.asarray(A)
    crit = np.asarray(criticality)
    listed = crit > 0
    dead = listed & (A <= 0)
    if warn and dead.any():
        k, l = np.argwhere(dead)[0]
        warnings.warn(f"{int(dead.sum())} listed input(s) have zero technical coefficient "
                      f"(first: input {k} of sector {l}); excluded", RuntimeWarning, stacklevel=2)
    return (crit == 1.0) & (A > 0), (crit == 0.5) & (A > 0)


def make_params(ds, iota_H=7.0, iota_F=6.1, tau=14.0, delta_s=0.75):
    """Economic parameters and the consistent pre-shock equilibrium of a dataset.

    The exogenous demand is taken as the residual ``x0 - sum(Z) - c0`` so that the
    starting point is an exact fixed point despite rounding in the source table.
    """
    io = ds.io
    crit, imp = criticality_masks(io.A, ds.sectors.criticality)
    f_eq = io.x0 - io.Z.sum(1) - io.c0
    return EconParams(io.A, crit, imp, io.x0, io.l0, io.c0, f_eq, io.S0, io.c0 / io.c0.sum(),
                      tau, iota_H, iota_F, delta_s)


def equilibrium_state(p):
    Z = p.A * p.x0[None, :]
    return EconState(p.x0.copy(), p.x0.copy(), p.l0.copy(), p.c0.copy(), p.f0.copy(), Z, p.S0.copy())


# --------------------------------------------------------------------------- shocks


def household_shock(I_mild, a_leisure, lav_d, reading="avoidance"):
    """Household demand shock per sector.

    Parameters
    ----------
    I_mild : float
        National mild-symptomatic fraction.
    a_leisure : float
        National mean leisure avoidance ``1 - M_leisure``.
    lav_d : ndarray
        Maximum shock per sector.
    reading : {"avoidance", "printed"}
        ``"printed"`` evaluates the literal alternative with the remaining fraction and
        ``1 - lav_d``, kept only for comparison.
    """
    lav_d = np.asarray(lav_d, dtype=float)
    if reading == "printed":
        return np.clip((I_mild + (1 - I_mild) * (1 - a_leisure)) * (1 - lav_d), 0, 1)
    return (I_mild + (1 - I_mild) * a_leisure) * lav_d


def labor_shock_patch(I_tilde, closure, a_work, f_workplace, f_telework):
    """Labour supply shock per patch and sector, shape (G, K)."""
    I_tilde = np.asarray(I_tilde, dtype=float)[:, None]
    closed = np.asarray(closure) * (1 - f_workplace - f_telework)
    avoid = np.maximum(0.0, np.asarray(a_work) - f_telework)
    return I_tilde + (1 - I_tilde) * np.maximum(closed, avoid)


def labor_shock(I_tilde, closure, a_work, f_workplace, f_telework, lmc, T_active):
    """National labour supply shock, employment-weighted over patches."""
    k_g = labor_shock_patch(I_tilde, closure, a_work, f_workplace, f_telework)
    w = np.asarray(lmc) * np.asarray(T_active, dtype=float)[:, None]
    return (w * k_g).sum(0) / w.sum(0)


@dataclass(frozen=True)
class ExogenousSchedule:
    """Time course of the shocks to investment and exports.

    Magnitudes are fractions of each component; government spending is never shocked.
    """

    investment: float
    exports_goods: float
    exports_services: float = 0.21
    onset: dt.date = dt.date(2020, 3, 1)
    ramp_in_days: int = 31
    release: dt.date = dt.date(2020, 5, 1)
    goods_end: dt.date = dt.date(2020, 9, 1)
    services_end: dt.date = dt.date(2021, 9, 1)
    valid_from: dt.date = dt.date(2019, 1, 1)
    valid_to: dt.date = dt.date(2023, 12, 31)

    def _profile(self, date, end):
        if date < self.onset:
            return 0.0
        if date < self.release:
            return min(1.0, (date - self.onset).days / self.ramp_in_days)
        if date >= end:
            return 0.0
        return 1.0 - (date - self.release).days / (end - self.release).days

    def components(self, date):
        """Shock per component (government, investment, goods exports, services exports)."""
        if not self.valid_from <= date <= self.valid_to:
            raise ValueError(f"{date} outside the exogenous shock schedule")
        pg = self._profile(date, self.goods_end)
        ps = self._profile(date, self.services_end)
        return np.array([0.0, self.investment * pg, self.exports_goods * pg, self.exports_services * ps])


SCHEDULES = {
    "BE": ExogenousSchedule(investment=0.162, exports_goods=0.25),
    "SWE": ExogenousSchedule(investment=0.069, exports_goods=0.14),
}


def exogenous_shock(date, schedule, split):
    """Per-sector shock to exogenous demand given component shares ``split`` (K, 4)."""
    return np.asarray(split) @ schedule.components(date)


def exogenous_demand(date, schedule, f0, split):
    """Shocked exogenous demand ``(1 - kF) * f0``."""
    return (1 - exogenous_shock(date, schedule, split)) * np.asarray(f0, dtype=float)


# --------------------------------------------------------------------------- steps


def household_demand(kD, theta0, delta_s, c_total):
    """Household demand after preference shift and aggregate saving.

    Returns zeros when every sector is fully shocked.
    """
    kD = np.asarray(kD, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    kept = (1 - kD) * theta0
    tot = kept.sum()
    if tot <= 0:
        return np.zeros_like(theta0)
    theta = kept / tot
    k_agg = delta_s * (1 - tot)
    return (1 - k_agg) * theta * c_total


def intermediate_demand(d_prev, S, S0, A, tau):
    """Orders ``A * d_prev + (S0 - S) / tau``, floored at zero."""
    return np.maximum(np.asarray(A) * np.asarray(d_prev)[None, :] + (np.asarray(S0) - S) / tau, 0.0)


def labor_capacity(l, l0, x0):
    """Output that the available labour can sustain."""
    return np.asarray(l) / np.asarray(l0) * np.asarray(x0)


def input_capacity(S, A, crit_mask, imp_mask, x0):
    """Partially binding Leontief capacity.

    Critical inputs cap output at ``S / A``; important inputs at ``(S / A + x0) / 2``.
    Sectors without listed inputs are unconstrained (``inf``).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(A > 0, S / np.where(A > 0, A, 1.0), np.inf)
    crit = np.where(crit_mask, ratio, np.inf).min(0)
    half = np.where(imp_mask, 0.5 * (ratio + np.asarray(x0)[None, :]), np.inf).min(0)
    return np.minimum(crit, half)


def leontief_capacity(S, A, x0):
    """Capacity when every input with ``A > 0`` is critical."""
    A = np.asarray(A)
    return input_capacity(S, A, A > 0, np.zeros_like(A, dtype=bool), x0)


def produce_and_ration(O_d, c_d, f_d, x_cap, x_inp):
    """Realised output and proportionally rationed deliveries."""
    d = O_d.sum(1) + c_d + f_d
    x = np.minimum(np.minimum(x_cap, x_inp), d)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(d > 0, x / np.where(d > 0, d, 1.0), 1.0)
    x = np.where(d > 0, x, 0.0)
    return x, d, O_d * r[:, None], c_d * r, f_d * r


def update_inventories(S, O, A, x):
    return np.maximum(S + O - np.asarray(A) * np.asarray(x)[None, :], 0.0)


def adjust_labor(l, l0, x0, x_inp, d, x_cap, iota_H, iota_F, l_max):
    """Hire towards (or fire down to) the labour consistent with inputs and demand."""
    delta = np.asarray(l0) / np.asarray(x0) * (np.minimum(x_inp, d) - x_cap)
    l_new = l + np.where(delta >= 0, delta / iota_H, delta / iota_F)
    return np.clip(l_new, 0.0, l_max)


def step_econ_day(state, p, shocks):
    """One day: demands, capacities, production and rationing, inventories, labour.

    Labour above today's supply limit ``(1 - kS) * l0`` cannot work, so the supply
    shock binds on today's capacity; hiring and firing then act on the gap.
    """
    c_d = household_demand(shocks.kD, p.theta0, p.delta_s, p.c0.sum())
    f_d = (1 - shocks.kF) * p.f0
    O_d = intermediate_demand(state.d, state.S, p.S0, p.A, p.tau)
    l_max = (1 - shocks.kS) * p.l0
    x_cap = labor_capacity(np.minimum(state.l, l_max), p.l0, p.x0)
    x_inp = input_capacity(state.S, p.A, p.crit_mask, p.imp_mask, p.x0)
    x, d, O, c, f = produce_and_ration(O_d, c_d, f_d, x_cap, x_inp)
    S = update_inventories(state.S, O, p.A, x)
    l = adjust_labor(state.l, p.l0, p.x0, x_inp, d, x_cap, p.iota_H, p.iota_F, l_max)
    return EconState(x, d, l, c, f, O, S)
