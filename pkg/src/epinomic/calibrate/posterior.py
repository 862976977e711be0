"""Joint posterior over both countries and the iterative initial-condition procedure."""
from __future__ import annotations

import dataclasses
import datetime as dt
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..coupler import run
from ..datahub import aggregate_patches
from ..params import CALIBRATED
from ..scenarios import ORIGIN, replication2020
from .likelihood import log_likelihood
from .observations import simulated_for
from .optim import nelder_mead
from .priors import ParameterSpace, log_prior

SEED_DATE = dt.date(2020, 2, 1)
SEED_FIT_END = dt.date(2020, 5, 1)
PARAM_FIT_START = dt.date(2020, 3, 1)
PARAM_FIT_END = dt.date(2021, 1, 1)
REDUCED_FIT_END = dt.date(2020, 7, 1)


def reduce_dataset(ds):
    """Two-patch version of a dataset: the capital region and the rest of the country."""
    cap = ORIGIN.get(ds.name, ds.geo.patch_ids[0])
    rest = [p for p in ds.geo.patch_ids if p != cap]
    return aggregate_patches(ds, [[cap], rest], ids=[cap, f"{ds.name}-rest"])


def default_builder(ds, country, seeds, end):
    spec = replication2020(ds, country)
    return dataclasses.replace(spec, seeds=dict(seeds), end=end)


def series_loglik(rec, observations):
    """Sum of log-likelihoods of the series whose country matches the record's run."""
    total = 0.0
    for s in observations:
        total += log_likelihood(simulated_for(rec, s), s.values, s.family, s.dispersion, s.sd)
    return total


def log_posterior(theta, space, loglik):
    """``log_prior(theta) + loglik(theta)``; ``-inf`` if the prior vanishes or ``loglik`` fails."""
    lp = log_prior(theta, space)
    if not math.isfinite(lp):
        return -math.inf
    try:
        ll = float(loglik(theta))
    except (FloatingPointError, ValueError, OverflowError) as exc:
        warnings.warn(f"simulation failed at theta={np.round(theta, 6).tolist()}: {exc}", RuntimeWarning,
                      stacklevel=2)
        return -math.inf
    return lp + ll if math.isfinite(ll) else -math.inf


class Posterior:
    """Posterior of the shared parameters given observations from one or more countries.

    Parameters
    ----------
    datasets : dict
        Country code to :class:`CountryDataset`.
    observations : list of ObservationSeries
    space : ParameterSpace
    seeds : dict
        Country code to ``{patch: exposed}`` on the start date.
    base : Parameters
        Values of the parameters outside ``space``.
    end : date
        Last simulated day (exclusive).
    snapshots : dict, optional
        Country code to a :class:`Snapshot` to start from instead of the seeds.
    builder : callable
        ``builder(ds, country, seeds, end) -> ScenarioSpec``.
    """

    def __init__(self, datasets, observations, space=None, seeds=None, base=CALIBRATED,
                 end=PARAM_FIT_END, snapshots=None, builder=default_builder):
        self.datasets = datasets
        self.observations = list(observations)
        self.space = space or ParameterSpace()
        self.seeds = seeds or {}
        self.base = base
        self.end = end
        self.snapshots = snapshots or {}
        self.builder = builder
        unknown = {s.country for s in self.observations} - set(datasets)
        if unknown:
            raise ValueError(f"observations for countries without a dataset: {sorted(unknown)}")

    def params(self, theta):
        return self.base.with_(**self.space.as_dict(theta))

    def simulate(self, theta):
        p = self.params(theta)
        out = {}
        for country, ds in self.datasets.items():
            spec = self.builder(ds, country, self.seeds.get(country, {}), self.end)
            out[country] = run(spec, ds, p, snapshot=self.snapshots.get(country))
        return out

    def log_likelihood(self, theta):
        if not self.observations:
            return 0.0
        recs = self.simulate(theta)
        return sum(series_loglik(recs[c], [s for s in self.observations if s.country == c])
                   for c in recs)

    def __call__(self, theta):
        return log_posterior(theta, self.space, self.log_likelihood)


# --------------------------------------------------------------------------- initial condition


@dataclass
class InitialConditionResult:
    seeds: dict  # country -> {patch id: exposed}
    theta: np.ndarray
    iterations: int
    converged: bool
    history: list


def fit_seeds(ds, country, observations, params, start_seeds=None, end=SEED_FIT_END, max_evals=400,
              builder=default_builder):
    """Nelder-Mead over per-patch exposed counts on the seeding date.

    Counts are parameterised as squares so the optimiser can reach zero.
    """
    obs = [s for s in (o.within(None, end - dt.timedelta(days=1)) for o in observations
                       if o.country == country and o.variable == "hosp_incidence") if s is not None]
    if not obs:
        raise ValueError(f"no hospital incidence observations for {country} before {end}")
    ids = ds.geo.patch_ids
    s0 = np.array([float((start_seeds or {}).get(p, 1.0)) for p in ids])

    def neg_ll(u):
        seeds = dict(zip(ids, u ** 2))
        rec = run(builder(ds, country, seeds, end), ds, params)
        return -series_loglik(rec, obs)

    res = nelder_mead(neg_ll, np.sqrt(s0), step=0.5, xtol=1e-3, max_evals=max_evals)
    return dict(zip(ids, map(float, res.x ** 2))), res


def iterative_initial_condition(datasets, observations, theta_fixed, space=None, base=CALIBRATED,
                                max_iter=3, tol=0.01, seed_evals=400, param_evals=400, fit_end=PARAM_FIT_END,
                                start_seeds=None, builder=default_builder, raise_on_failure=True):
    """Alternate seed fitting (first wave) and parameter fitting (from 1 March).

    Parameters
    ----------
    datasets : dict
        Country code to dataset.
    observations : list of ObservationSeries
    theta_fixed : array_like
        Starting parameter vector in ``space`` order.
    tol : float
        Convergence when no parameter changes by more than this fraction.
    fit_end : date
        End of the parameter-fitting window.

    Returns
    -------
    InitialConditionResult
    """
    space = space or ParameterSpace()
    theta = np.asarray(theta_fixed, dtype=float)
    seeds = {c: dict((start_seeds or {}).get(c, {})) for c in datasets}
    history = []
    for it in range(1, max_iter + 1):
        params = base.with_(**space.as_dict(theta))
        snaps = {}
        for c, ds in datasets.items():
            seeds[c], _ = fit_seeds(ds, c, observations, params, seeds[c] or None,
                                    max_evals=seed_evals, builder=builder)
            _, snaps[c] = run(builder(ds, c, seeds[c], fit_end), ds, params, snapshot_at=PARAM_FIT_START)
        later = [s for s in (o.within(PARAM_FIT_START, fit_end - dt.timedelta(days=1)) for o in observations)
                 if s is not None]
        post = Posterior(datasets, later, space, seeds, base, fit_end, snaps, builder)
        res = nelder_mead(lambda th: -post(th), theta, max_evals=param_evals)
        change = np.max(np.abs(res.x - theta) / np.maximum(np.abs(theta), 1e-12))
        history.append({"iteration": it, "theta": res.x.copy(), "log_posterior": -res.fun,
                        "max_relative_change": float(change)})
        theta = res.x
        if change < tol:
            return InitialConditionResult(seeds, theta, it, True, history)
    if raise_on_failure:
        raise RuntimeError(f"initial condition did not converge in {max_iter} iterations "
                           f"(last relative change {history[-1]['max_relative_change']:.3g})")
    return InitialConditionResult(seeds, theta, max_iter, False, history)
