"""Hot loops of the transmission model.

Each kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version.  :data:`BACKEND` names the one in use; set
``ARTIFACT_DISABLE_NUMBA=1`` to force numpy.  State arrays have shape
``(9, 17, G)``: the eight compartments S, E, Ip, Ia, Im, Q, R, D followed by a
cumulative hospital-admissions accumulator.
"""
import math

import numpy as np

from ._accel import HAVE_NUMBA, jit

S, E, IP, IA, IM, Q, R, D, ADM = range(9)
N_COMP = 8
N_ROWS = 9
SUBSTEPS = 4


# --------------------------------------------------------------------------- numpy


def foi_numpy(y, N_local, N_work, Pbar, T, s, beta):
    """New infections per day, shape (17, G).

    Parameters
    ----------
    y : ndarray, shape (9, 17, G)
    N_local : ndarray, shape (G, 17, 17)
        Composed contacts minus the workplace component.
    N_work : ndarray, shape (G, 17, 17)
        Workplace component per (destination) patch.
    Pbar : ndarray, shape (G, G)
    T : ndarray, shape (17, G)
    s : ndarray, shape (17,)
    beta : float
    """
    prev = (y[IP] + y[IA] + y[IM]) / T
    local = np.einsum("gij,jg->ig", N_local, prev)
    at_work = np.einsum("hij,jh->ih", N_work, prev)
    work = at_work @ Pbar.T
    return s[:, None] * beta * y[S] * (local + work)


def rhs_numpy(y, lam, a, h, m, rates):
    alpha_i, gamma_i, delta_i, eps_i, zeta_i = rates
    dy = np.empty_like(y)
    dy[S] = zeta_i * y[R] - lam
    dy[E] = lam - alpha_i * y[E]
    dy[IP] = alpha_i * y[E] - gamma_i * y[IP]
    dy[IA] = a[:, None] * gamma_i * y[IP] - delta_i * y[IA]
    dy[IM] = (1 - a[:, None]) * gamma_i * y[IP] - delta_i * y[IM]
    dy[Q] = h[:, None] * delta_i * y[IM] - eps_i * y[Q]
    dy[R] = (delta_i * y[IA] + (1 - h[:, None]) * delta_i * y[IM]
             + (1 - m[:, None]) * eps_i * y[Q] - zeta_i * y[R])
    dy[D] = m[:, None] * eps_i * y[Q]
    dy[ADM] = h[:, None] * delta_i * y[IM]
    return dy


def seasonal(beta, amp, shift, t):
    return beta * (1.0 + amp * math.cos(2.0 * math.pi * (t - shift) / 365.0))


def rk4_day_numpy(y, t0, N_local, N_work, Pbar, T, s, a, h, m, rates, beta, amp, shift, substeps):
    dt = 1.0 / substeps
    y = y.copy()
    clipped = 0.0
    for n in range(substeps):
        t = t0 + n * dt
        b1 = seasonal(beta, amp, shift, t)
        b2 = seasonal(beta, amp, shift, t + 0.5 * dt)
        b4 = seasonal(beta, amp, shift, t + dt)
        k1 = rhs_numpy(y, foi_numpy(y, N_local, N_work, Pbar, T, s, b1), a, h, m, rates)
        y2 = y + 0.5 * dt * k1
        k2 = rhs_numpy(y2, foi_numpy(y2, N_local, N_work, Pbar, T, s, b2), a, h, m, rates)
        y3 = y + 0.5 * dt * k2
        k3 = rhs_numpy(y3, foi_numpy(y3, N_local, N_work, Pbar, T, s, b2), a, h, m, rates)
        y4 = y + dt * k3
        k4 = rhs_numpy(y4, foi_numpy(y4, N_local, N_work, Pbar, T, s, b4), a, h, m, rates)
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        neg = y[:N_COMP] < 0
        if neg.any():
            clipped += -y[:N_COMP][neg].sum()
            y[:N_COMP][neg] = 0.0
    return y, clipped


# --------------------------------------------------------------------------- numba


@jit
def foi_loops(y, N_local, N_work, Pbar, T, s, beta):
    G = y.shape[2]
    n = y.shape[1]
    prev = np.empty((n, G))
    for g in range(G):
        for j in range(n):
            prev[j, g] = (y[2, j, g] + y[3, j, g] + y[4, j, g]) / T[j, g]
    at_work = np.zeros((n, G))
    for hh in range(G):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += N_work[hh, i, j] * prev[j, hh]
            at_work[i, hh] = acc
    lam = np.empty((n, G))
    for g in range(G):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += N_local[g, i, j] * prev[j, g]
            for hh in range(G):
                acc += Pbar[g, hh] * at_work[i, hh]
            lam[i, g] = s[i] * beta * y[0, i, g] * acc
    return lam


@jit
def rhs_loops(y, lam, a, h, m, rates, out):
    alpha_i, gamma_i, delta_i, eps_i, zeta_i = rates[0], rates[1], rates[2], rates[3], rates[4]
    n, G = y.shape[1], y.shape[2]
    for i in range(n):
        for g in range(G):
            Ev, Ip, Ia, Im = y[1, i, g], y[2, i, g], y[3, i, g], y[4, i, g]
            Qv, Rv = y[5, i, g], y[6, i, g]
            L = lam[i, g]
            out[0, i, g] = zeta_i * Rv - L
            out[1, i, g] = L - alpha_i * Ev
            out[2, i, g] = alpha_i * Ev - gamma_i * Ip
            out[3, i, g] = a[i] * gamma_i * Ip - delta_i * Ia
            out[4, i, g] = (1.0 - a[i]) * gamma_i * Ip - delta_i * Im
            out[5, i, g] = h[i] * delta_i * Im - eps_i * Qv
            out[6, i, g] = (delta_i * Ia + (1.0 - h[i]) * delta_i * Im
                            + (1.0 - m[i]) * eps_i * Qv - zeta_i * Rv)
            out[7, i, g] = m[i] * eps_i * Qv
            out[8, i, g] = h[i] * delta_i * Im


@jit
def _seasonal_nb(beta, amp, shift, t):
    return beta * (1.0 + amp * math.cos(2.0 * math.pi * (t - shift) / 365.0))


@jit
def rk4_day_loops(y0, t0, N_local, N_work, Pbar, T, s, a, h, m, rates, beta, amp, shift, substeps):
    dt = 1.0 / substeps
    y = y0.copy()
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    clipped = 0.0
    for n in range(substeps):
        t = t0 + n * dt
        b1 = _seasonal_nb(beta, amp, shift, t)
        b2 = _seasonal_nb(beta, amp, shift, t + 0.5 * dt)
        b4 = _seasonal_nb(beta, amp, shift, t + dt)
        rhs_loops(y, foi_loops(y, N_local, N_work, Pbar, T, s, b1), a, h, m, rates, k1)
        y2 = y + 0.5 * dt * k1
        rhs_loops(y2, foi_loops(y2, N_local, N_work, Pbar, T, s, b2), a, h, m, rates, k2)
        y3 = y + 0.5 * dt * k2
        rhs_loops(y3, foi_loops(y3, N_local, N_work, Pbar, T, s, b2), a, h, m, rates, k3)
        y4 = y + dt * k3
        rhs_loops(y4, foi_loops(y4, N_local, N_work, Pbar, T, s, b4), a, h, m, rates, k4)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for c in range(8):
            for i in range(y.shape[1]):
                for g in range(y.shape[2]):
                    if y[c, i, g] < 0.0:
                        clipped -= y[c, i, g]
                        y[c, i, g] = 0.0
    return y, clipped


if HAVE_NUMBA:
    BACKEND = "numba"
    force_of_infection_kernel = foi_loops
    rk4_day = rk4_day_loops
else:
    BACKEND = "numpy"
    force_of_infection_kernel = foi_numpy
    rk4_day = rk4_day_numpy
