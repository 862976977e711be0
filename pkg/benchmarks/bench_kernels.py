"""Time the numba kernels against their numpy counterparts.

Usage: ``python benchmarks/bench_kernels.py [--country BE] [--repeat 20]``.
Both backends are imported in one process; the numba versions are compiled
once before timing.
"""
import argparse
import time

import numpy as np

from epinomic import epi
from epinomic import epi_kernels as K
from epinomic._accel import HAVE_NUMBA
from epinomic.datahub import load_packaged


def _state(T, rng):
    y = epi.new_state(T)
    moved = 1e-3 * T * rng.uniform(0.5, 1.5, T.shape)
    y[K.S] -= 4 * moved
    for c in (K.E, K.IP, K.IA, K.IM):
        y[c] += moved
    return y


def _time(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--country", default="BE", choices=["BE", "SWE"])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    ds = load_packaged(args.country)
    T = np.ascontiguousarray(ds.geo.population, dtype=float)
    Pbar = np.ascontiguousarray(ds.mobility.normalized, dtype=float)
    ct = epi.prepandemic_contacts(ds)
    Nl, Nw = np.ascontiguousarray(ct.local), np.ascontiguousarray(ct.work)
    p = epi.EpiParams(beta=0.03)
    y = _state(T, np.random.default_rng(0))
    rk4_args = (y, 0.0, Nl, Nw, Pbar, T, p.s, p.a, p.h, p.m, p.rates(), 0.03, 0.0, 0.0, K.SUBSTEPS)

    cases = {
        "force of infection": (lambda: K.foi_numpy(y, Nl, Nw, Pbar, T, p.s, 0.03),
                               lambda: K.foi_loops(y, Nl, Nw, Pbar, T, p.s, 0.03)),
        "rk4 day": (lambda: K.rk4_day_numpy(*rk4_args), lambda: K.rk4_day_loops(*rk4_args)),
    }
    print(f"{args.country}: G={T.shape[1]}, numba available: {HAVE_NUMBA}")
    print(f"{'kernel':<20}{'numpy (ms)':>12}{'numba (ms)':>12}{'speed-up':>10}")
    for name, (f_np, f_nb) in cases.items():
        t_np = _time(f_np, args.repeat)
        t_nb = _time(f_nb, args.repeat)
        print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")


if __name__ == "__main__":
    main()
