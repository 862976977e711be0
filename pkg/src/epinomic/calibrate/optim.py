"""Derivative-free simplex minimisation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    nfev: int
    nit: int
    converged: bool


def _initial_simplex(x0, step):
    n = x0.size
    sim = np.repeat(x0[None, :], n + 1, axis=0)
    for i in range(n):
        h = step * x0[i] if x0[i] != 0 else step
        sim[i + 1, i] += h
    return sim


def nelder_mead(f, x0, step=0.05, xtol=1e-10, max_evals=5000, simplex=None):
    """Minimise ``f`` with the simplex method.

    Parameters
    ----------
    f : callable
        Objective ``f(x) -> float``; ``nan`` and ``inf`` are treated as ``+inf``.
    x0 : array_like
        Starting point; ``f(x0)`` must be finite.
    step : float
        Relative size of the initial simplex (absolute for zero coordinates).
    xtol : float
        Stop when the simplex diameter (largest vertex distance from the best) drops below.
    max_evals : int
    simplex : ndarray, optional
        Explicit ``(n + 1, n)`` starting simplex.

    Returns
    -------
    SimplexResult
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    nfev = 0

    def fx(x):
        nonlocal nfev
        nfev += 1
        v = float(f(x))
        return v if math.isfinite(v) else math.inf

    sim = np.array(simplex, dtype=float) if simplex is not None else _initial_simplex(x0, step)
    if not math.isfinite(float(f(x0))):
        raise ValueError("objective is not finite at the starting point")
    fs = np.array([fx(v) for v in sim])
    if not np.isfinite(fs).any():
        raise ValueError("objective is not finite at any simplex vertex")
    nit = 0
    converged = False
    while nfev < max_evals:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        diam = np.max(np.linalg.norm(sim[1:] - sim[0], axis=1))
        if diam < xtol:
            converged = True
            break
        nit += 1
        centroid = sim[:-1].mean(0)
        xr = centroid + REFLECT * (centroid - sim[-1])
        fr = fx(xr)
        if fr < fs[0]:
            xe = centroid + EXPAND * (xr - centroid)
            fe = fx(xe)
            sim[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + CONTRACT * (xr - centroid)
            fc = fx(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + CONTRACT * (sim[-1] - centroid)
            fc = fx(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        for i in range(1, len(sim)):
            sim[i] = sim[0] + SHRINK * (sim[i] - sim[0])
            fs[i] = fx(sim[i])
    best = int(np.argmin(fs))
    return SimplexResult(sim[best].copy(), float(fs[best]), nfev, nit, converged)


def maximize(f, x0, **kw):
    """Maximise ``f`` by minimising ``-f``; ``fun`` of the result is the maximum."""
    res = nelder_mead(lambda x: -f(x), x0, **kw)
    res.fun = -res.fun
    return res


def laplace_sd(logp, theta, rel_step=1e-2, min_step=1e-4):
    """Posterior standard deviations from a central-difference Hessian of ``logp`` at a mode.

    Returns ``nan`` entries when the Hessian is not negative definite.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    h = np.maximum(rel_step * np.abs(theta), min_step)
    f0 = float(logp(theta))
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (float(logp(theta + ei)) - 2 * f0 + float(logp(theta - ei))) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (float(logp(theta + ei + ej)) - float(logp(theta + ei - ej))
                                 - float(logp(theta - ei + ej)) + float(logp(theta - ei - ej))) / (4 * h[i] * h[j])
    try:
        np.linalg.cholesky(-H)
    except np.linalg.LinAlgError:
        return np.full(n, np.nan)
    return np.sqrt(np.diag(np.linalg.inv(-H)))
