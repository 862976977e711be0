"""Write a synthetic observations file from a reduced-fidelity replication run.

Weekly hospital incidence gets negative-binomial noise; monthly output and labour
get Gaussian noise.  Used by the example calibration config and the tests.
"""
import argparse
import dataclasses
import datetime as dt

import numpy as np

from epinomic.calibrate import ObservationSeries, write_observations
from epinomic.calibrate.observations import simulated_daily
from epinomic.calibrate.likelihood import align
from epinomic.calibrate.posterior import REDUCED_FIT_END, reduce_dataset
from epinomic.coupler import run
from epinomic.datahub import load_packaged
from epinomic.scenarios import replication2020


def synthesize(country="BE", seeds=None, end=REDUCED_FIT_END, seed=0, alpha=0.1, sd=2.0):
    ds = reduce_dataset(load_packaged(country))
    ids = ds.geo.patch_ids
    seeds = seeds or {ids[0]: 50.0, ids[1]: 400.0}
    spec = dataclasses.replace(replication2020(ds, country), seeds=seeds, end=end)
    rec = run(spec, ds)
    rng = np.random.default_rng(seed)
    # weeks are labelled by their Sunday; keep only complete weeks
    first = rec.dates[0] + dt.timedelta(days=6 + (-rec.dates[0].weekday()) % 7)
    weeks = tuple(first + dt.timedelta(weeks=k) for k in range((rec.dates[-1] - first).days // 7 + 1))
    mean = align(rec.dates, simulated_daily(rec, "hosp_incidence", "national"), weeks, "weekly", "sum")
    # NB as a gamma-Poisson mixture with variance mean + alpha * mean^2
    counts = rng.poisson(rng.gamma(1.0 / alpha, alpha * np.maximum(mean, 1e-12)))
    out = [ObservationSeries(country, "hosp_incidence", "national", "weekly", weeks, counts.astype(float),
                             "negative_binomial", alpha, sd)]
    months = tuple(d for d in rec.dates if d.day == 15 and d >= dt.date(2020, 3, 15))
    for var in ("output", "labour"):
        m = align(rec.dates, simulated_daily(rec, var, "national"), months, "monthly", "mean")
        out.append(ObservationSeries(country, var, "national", "monthly", months,
                                     m + rng.normal(0.0, sd, m.size), "gaussian", alpha, sd))
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--country", default="BE")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    write_observations(synthesize(a.country, seed=a.seed), a.out)
