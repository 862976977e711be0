"""Observation models and the temporal alignment of simulated and observed series."""
from __future__ import annotations

import datetime as dt
import math
import warnings

import numpy as np
from scipy.special import gammaln

FAMILIES = ("negative_binomial", "poisson", "gaussian")
MEAN_FLOOR = 1e-12
DEFAULT_DISPERSION = 0.1
ECON_SD_POINTS = 2.0


def _floor(mean):
    mean = np.asarray(mean, dtype=float)
    if np.any(mean < MEAN_FLOOR):
        if np.any(mean < 0):
            warnings.warn(f"{int((mean < 0).sum())} negative simulated mean(s) floored at {MEAN_FLOOR}",
                          RuntimeWarning, stacklevel=3)
        mean = np.maximum(mean, MEAN_FLOOR)
    return mean


def poisson_loglik(observed, mean):
    """Poisson log-likelihood of counts given simulated means."""
    k = np.asarray(observed, dtype=float)
    m = _floor(mean)
    return float(np.sum(k * np.log(m) - m - gammaln(k + 1)))


def negative_binomial_loglik(observed, mean, alpha=DEFAULT_DISPERSION):
    """Negative-binomial log-likelihood with variance ``mean + alpha * mean**2``.

    ``alpha = 0`` is the Poisson limit.
    """
    if alpha < 0:
        raise ValueError("dispersion must be non-negative")
    if alpha == 0:
        return poisson_loglik(observed, mean)
    k, m = np.broadcast_arrays(np.asarray(observed, dtype=float), _floor(mean))
    r = 1.0 / alpha
    total = 0.0
    for kk, mm in zip(k.ravel(), m.ravel()):
        if kk == int(kk) and kk < 1e6:
            # log[Gamma(k + r) / (Gamma(r) (r + m)^k)] as a sum, stable for large r
            j = np.arange(int(kk))
            head = float(np.sum(np.log1p((j - mm) / (r + mm))))
        else:
            head = float(gammaln(kk + r) - gammaln(r) - kk * np.log(r + mm))
        total += head + kk * math.log(mm) - float(gammaln(kk + 1)) - r * math.log1p(mm / r)
    return total


def gaussian_loglik(observed, simulated, sd):
    """Normal log-likelihood with a fixed standard deviation."""
    if sd <= 0:
        raise ValueError("standard deviation must be positive")
    res = np.asarray(observed, dtype=float) - np.asarray(simulated, dtype=float)
    return float(np.sum(-0.5 * (res / sd) ** 2 - math.log(sd * math.sqrt(2 * math.pi))))


def log_likelihood(simulated, observed, family, dispersion=DEFAULT_DISPERSION, sd=ECON_SD_POINTS):
    """Log-likelihood of one aligned series.

    Parameters
    ----------
    simulated, observed : array_like
        Same length.
    family : {"negative_binomial", "poisson", "gaussian"}
    dispersion : float
        Negative-binomial ``alpha``.
    sd : float
        Gaussian standard deviation (percentage points of the retained scale).
    """
    simulated, observed = np.asarray(simulated, dtype=float), np.asarray(observed, dtype=float)
    if simulated.shape != observed.shape:
        raise ValueError(f"simulated {simulated.shape} and observed {observed.shape} are not aligned")
    if family == "negative_binomial":
        return negative_binomial_loglik(observed, simulated, dispersion)
    if family == "poisson":
        return poisson_loglik(observed, simulated)
    if family == "gaussian":
        return gaussian_loglik(observed, simulated, sd)
    raise ValueError(f"unknown likelihood family {family!r}")


# --------------------------------------------------------------------------- alignment


def iso_week(date):
    y, w, _ = date.isocalendar()
    return (y, w)


def weekly_sums(dates, values):
    """Sum daily values per ISO week; returns ``{(year, week): total}`` in date order."""
    out = {}
    for d, v in zip(dates, np.asarray(values, dtype=float)):
        key = iso_week(d)
        out[key] = out.get(key, 0.0) + float(v)
    return out


def window(date, cadence):
    """Inclusive reporting window ``(first, last)`` of an observation dated ``date``."""
    if cadence == "daily":
        return date, date
    if cadence == "weekly":
        first = date - dt.timedelta(days=date.weekday())
        return first, first + dt.timedelta(days=6)
    if cadence == "biweekly":
        return date - dt.timedelta(days=13), date
    if cadence == "monthly":
        first = date.replace(day=1)
        nxt = (first + dt.timedelta(days=32)).replace(day=1)
        return first, nxt - dt.timedelta(days=1)
    raise ValueError(f"unknown cadence {cadence!r}")


def align(sim_dates, sim_values, obs_dates, cadence, how):
    """Simulated value per observation: ``how`` is ``"sum"`` or ``"mean"`` over its window.

    Raises if a window is not fully covered by the simulation.
    """
    index = {d: n for n, d in enumerate(sim_dates)}
    vals = np.asarray(sim_values, dtype=float)
    out = np.empty(len(obs_dates))
    for n, d in enumerate(obs_dates):
        lo, hi = window(d, cadence)
        days = [lo + dt.timedelta(days=i) for i in range((hi - lo).days + 1)]
        if any(x not in index for x in days):
            raise ValueError(f"observation window {lo}..{hi} not covered by the simulation")
        seg = vals[[index[x] for x in days]]
        out[n] = seg.sum() if how == "sum" else seg.mean()
    return out
