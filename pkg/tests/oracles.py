"""Independent scalar-loop oracles and random fixtures shared by the tests."""
import math

import numpy as np

from epinomic import epi_kernels as K
from epinomic.econ import EconParams, criticality_masks
from epinomic.epi import new_state


def random_state(T, rng, frac=0.02):
    y = new_state(T)
    for row in (K.E, K.IP, K.IA, K.IM, K.Q, K.R):
        moved = rng.uniform(0, frac, size=T.shape) * T
        y[row] += moved
        y[K.S] -= moved
    return y


def foi_oracle(y, total, work, Pbar, T, s, beta):
    """Scalar loops over (i, g): local contacts at home patch plus workplace contacts
    at every destination visited, each weighted by the commuting fraction."""
    n, G = T.shape
    out = np.zeros((n, G))
    for g in range(G):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                prev_g = (y[2, j, g] + y[3, j, g] + y[4, j, g]) / T[j, g]
                acc += (total[g, i, j] - work[g, i, j]) * prev_g
            for h in range(G):
                for j in range(n):
                    prev_h = (y[2, j, h] + y[3, j, h] + y[4, j, h]) / T[j, h]
                    acc += Pbar[g, h] * work[h, i, j] * prev_h
            out[i, g] = s[i] * beta * y[0, i, g] * acc
    return out


def three_sector():
    Z = np.array([[10.0, 20.0, 5.0], [15.0, 5.0, 10.0], [5.0, 10.0, 20.0]])
    c0 = np.array([40.0, 50.0, 30.0])
    f0 = np.array([30.0, 20.0, 35.0])
    x0 = Z.sum(1) + c0 + f0  # 110, 100, 100
    A = Z / x0[None, :]
    crit = np.array([[1, 0, 0], [0.5, 1, 0], [0, 0.5, 1]], dtype=float)
    cm, im = criticality_masks(A, crit)
    l0 = np.array([30.0, 40.0, 25.0])
    S0 = A * x0[None, :] * np.array([10.0, 20.0, 15.0])[None, :]
    return EconParams(A, cm, im, x0, l0, c0, f0, S0, c0 / c0.sum(), tau=14.0, iota_H=7.0, iota_F=6.1,
                      delta_s=0.75)


def step_oracle(x_prev_d, l_prev, S_prev, p, kD, kS, kF):
    """Scalar-loop transcription of one economic day."""
    n = len(p.x0)
    # household demand
    kept = [(1 - kD[k]) * p.theta0[k] for k in range(n)]
    tot = sum(kept)
    k_agg = p.delta_s * (1 - tot)
    c_tot = sum(p.c0)
    c_d = [(1 - k_agg) * kept[k] / tot * c_tot for k in range(n)]
    f_d = [(1 - kF[k]) * p.f0[k] for k in range(n)]
    O_d = [[max(p.A[k][l] * x_prev_d[l] + (p.S0[k][l] - S_prev[k][l]) / p.tau, 0.0) for l in range(n)]
           for k in range(n)]
    l_max = [(1 - kS[k]) * p.l0[k] for k in range(n)]
    x_cap = [min(l_prev[k], l_max[k]) / p.l0[k] * p.x0[k] for k in range(n)]
    x_inp = []
    for l in range(n):
        cap = math.inf
        for k in range(n):
            if p.A[k][l] <= 0:
                continue
            if p.crit_mask[k][l]:
                cap = min(cap, S_prev[k][l] / p.A[k][l])
            elif p.imp_mask[k][l]:
                cap = min(cap, 0.5 * (S_prev[k][l] / p.A[k][l] + p.x0[l]))
        x_inp.append(cap)
    d = [sum(O_d[k]) + c_d[k] + f_d[k] for k in range(n)]
    x = [min(x_cap[k], x_inp[k], d[k]) for k in range(n)]
    r = [x[k] / d[k] for k in range(n)]
    O = [[O_d[k][l] * r[k] for l in range(n)] for k in range(n)]
    S = [[max(S_prev[k][l] + O[k][l] - p.A[k][l] * x[l], 0.0) for l in range(n)] for k in range(n)]
    l_new = []
    for k in range(n):
        delta = p.l0[k] / p.x0[k] * (min(x_inp[k], d[k]) - x_cap[k])
        v = l_prev[k] + (delta / p.iota_H if delta >= 0 else delta / p.iota_F)
        l_new.append(min(max(v, 0.0), l_max[k]))
    return np.array(x), np.array(d), np.array(l_new), np.array(S)


def random_network(rng, K=5, max_days=30.0):
    A = rng.uniform(0, 0.2, (K, K)) * (rng.uniform(size=(K, K)) < 0.7)
    cm, im = criticality_masks(A, rng.choice([0.0, 0.5, 1.0], size=(K, K)), warn=False)
    x0 = rng.uniform(50, 150, K)
    S = A * x0[None, :] * rng.uniform(0, max_days, (K, K))
    return A, cm, im, x0, S
