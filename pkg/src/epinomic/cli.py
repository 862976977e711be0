"""Command-line interface: validate, scenario, sweep, calibrate, simulate."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import hashlib
import json
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata
from pathlib import Path

import numpy as np

from . import epi_kernels
from .calibrate import (ParameterSpace, PosteriorChain, ensemble_mcmc, gelman_rubin, initial_ensemble,
                        iterative_initial_condition, laplace_sd, load_observations)
from .calibrate.posterior import (PARAM_FIT_END, PARAM_FIT_START, REDUCED_FIT_END, Posterior, default_builder,
                                  reduce_dataset)
from .config import SPEC_SCHEMA, calibration_config, load_toml, spec_from_dict
from .coupler import run
from .datahub import DatasetError, load_country_dataset, load_packaged, packaged_dataset_path, validate_dataset
from .params import CALIBRATED, parse_overrides
from .scenarios import (ORIGIN, SCENARIOS, scenario3, scenario_grid, scenario_library, scenario_window,
                        summarize_csv, summarize_record)

SUMMARY_FIELDS = ("output_reduction_pct", "labour_reduction_pct", "cumulative_ic", "peak_ic_load")
DEFAULT_COUNTRIES = {"scenario1": ["BE"], "scenario2": ["BE", "SWE"], "scenario3": ["BE"],
                     "scenario4": ["SWE", "BE"]}


# --------------------------------------------------------------------------- helpers


def _dataset_dirs(items):
    """``--dataset`` values: ``DIR`` (country from the folder name) or ``COUNTRY=DIR``."""
    out = {}
    for item in items or ():
        country, _, path = item.rpartition("=") if "=" in item else (Path(item).name, "", item)
        p = Path(path)
        if not p.is_dir():
            raise FileNotFoundError(f"dataset directory not found: {p}")
        out[country.upper()] = p
    return out


def _load(country, dirs, fidelity):
    ds = load_country_dataset(dirs[country], name=country) if country in dirs else load_packaged(country)
    return reduce_dataset(ds) if fidelity == "reduced" else ds


def _reduce_seeds(spec, ds):
    """Map seeds onto the patches of a reduced dataset (capital or rest)."""
    ids = ds.geo.patch_ids
    seeds = {}
    for k, v in spec.seeds.items():
        key = k if k in ids or k in ds.geo.names else (ids[0] if k == ORIGIN.get(ds.name) else ids[-1])
        seeds[key] = seeds.get(key, 0.0) + v
    return dataclasses.replace(spec, seeds=seeds)


def _reduced_variant(name, ds, kw):
    """Point a scenario-4 second seed outside the capital at the reduced dataset's rest patch."""
    seed = kw.get("second_seed")
    if name == "scenario4" and seed is not None and seed not in ds.geo.patch_ids:
        kw = {**kw, "second_seed": ds.geo.patch_ids[-1]}
    return kw


def _with_sets(spec, sets):
    if not sets:
        return spec
    CALIBRATED.with_(**sets)  # reject unknown names early
    return dataclasses.replace(spec, overrides={**spec.overrides, **sets})


def _hash_dir(path):
    h = hashlib.sha256()
    for f in sorted(Path(path).rglob("*.csv")):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()


def _versions():
    out = {"python": platform.python_version(), "numpy": np.__version__, "kernel_backend": epi_kernels.BACKEND}
    for pkg in ("artifact", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def write_manifest(out, command, args, datasets, outputs, extra=None):
    man = {
        "command": command,
        "arguments": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")},
        "seed": getattr(args, "seed", None),
        "datasets": {c: {"path": str(p), "sha256": _hash_dir(p)} for c, p in sorted(datasets.items())},
        "versions": _versions(),
        "outputs": sorted(outputs),
    }
    if extra:
        man.update(extra)
    Path(out, "manifest.json").write_text(json.dumps(man, indent=2, default=str) + "\n", encoding="utf-8")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _run_job(job):
    spec, ds, path = job
    rec = run(spec, ds)
    rec.to_csv(path)
    return summarize_record(rec, *scenario_window(spec))


def _map(workers):
    if workers and workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)
        return pool, pool.map
    return None, map


def _run_jobs(jobs, workers):
    pool, mapper = _map(workers)
    try:
        return list(mapper(_run_job, jobs))
    finally:
        if pool is not None:
            pool.shutdown()


def _ds_paths(countries, dirs):
    return {c: dirs.get(c, packaged_dataset_path(c)) for c in countries}


# --------------------------------------------------------------------------- commands


def cmd_validate(args):
    dirs = _dataset_dirs(args.dataset) or {c: packaged_dataset_path(c) for c in ("BE", "SWE")}
    failed = False
    for country, path in sorted(dirs.items()):
        problems = validate_dataset(path)
        if problems:
            failed = True
            print(f"{country}: FAIL ({path})")
            for p in problems:
                print(f"  {p}")
        else:
            print(f"{country}: ok ({path})")
    return 1 if failed else 0


def cmd_scenario(args):
    if args.name not in SCENARIOS:
        raise ValueError(f"unknown scenario {args.name!r}; expected one of {list(SCENARIOS)}")
    dirs = _dataset_dirs(args.dataset)
    sets = parse_overrides(args.set)
    countries = [c.upper() for c in (args.country or DEFAULT_COUNTRIES[args.name])]
    variant = {k: v for k, v in (("policy", args.policy), ("date", args.date),
                                 ("release_months", args.release_months), ("nu", args.nu),
                                 ("second_seed", args.second_seed)) if v is not None}
    out = Path(args.out)
    (out / "records").mkdir(parents=True, exist_ok=True)
    jobs, labels = [], []
    for country in countries:
        ds = _load(country, dirs, args.fidelity)
        if variant:
            kw = dict(variant)
            if args.name != "scenario1":
                kw["country"] = country
            if args.fidelity == "reduced":
                kw = _reduced_variant(args.name, ds, kw)
            pairs = [({"country": country, **kw}, scenario_library(args.name, ds, **kw))]
        else:
            pairs = scenario_grid(args.name, ds)
        for lab, spec in pairs:
            spec = _with_sets(spec, sets)
            if args.fidelity == "reduced":
                spec = _reduce_seeds(spec, ds)
            lab = {"country": country, **lab}
            jobs.append((spec, ds, out / "records" / f"{spec.name}.csv"))
            labels.append(lab)
    summaries = _run_jobs(jobs, args.workers)
    keys = list(dict.fromkeys(k for lab in labels for k in lab))
    rows = [[lab.get(k, "") for k in keys] + [job[0].name] + [s[f] for f in SUMMARY_FIELDS]
            for lab, job, s in zip(labels, jobs, summaries)]
    _write_csv(out / "summary.csv", keys + ["run"] + list(SUMMARY_FIELDS), rows)
    outputs = ["summary.csv"] + [f"records/{j[0].name}.csv" for j in jobs]
    write_manifest(out, "scenario", args, _ds_paths(countries, dirs), outputs)
    print(f"{len(jobs)} run(s) written to {out}")
    return 0


def cmd_sweep(args):
    values = [float(v) for v in args.values]
    if not values:
        raise ValueError("sweep needs at least one value")
    if args.param not in CALIBRATED.as_dict():
        raise KeyError(f"unknown parameter {args.param!r}")
    dirs = _dataset_dirs(args.dataset)
    sets = parse_overrides(args.set)
    country = args.country.upper()
    ds = _load(country, dirs, args.fidelity)
    out = Path(args.out)
    (out / "records").mkdir(parents=True, exist_ok=True)
    jobs = []
    for v in values:
        if args.scenario == "scenario3":
            spec = scenario3(ds, country, nu=CALIBRATED.nu)
        elif args.scenario == "scenario4" and args.fidelity == "reduced":
            spec = scenario_library("scenario4", ds, country=country, second_seed=ds.geo.patch_ids[-1])
        else:
            spec = scenario_library(args.scenario, ds, country=country)
        spec = _with_sets(spec, {**sets, args.param: v})
        spec = dataclasses.replace(spec, name=f"sweep_{args.param}_{v:g}")
        if args.fidelity == "reduced":
            spec = _reduce_seeds(spec, ds)
        jobs.append((spec, ds, out / "records" / f"{spec.name}.csv"))
    summaries = _run_jobs(jobs, args.workers)
    _write_csv(out / "summary.csv", ["parameter", "value"] + list(SUMMARY_FIELDS),
               [[args.param, v] + [s[f] for f in SUMMARY_FIELDS] for v, s in zip(values, summaries)])
    rows = []
    for v, (spec, _, path) in zip(values, jobs):
        with open(path, newline="", encoding="utf-8") as fh:
            for r in csv.DictReader(fh):
                if r["stratum"] == "national" and r["variable"] in ("ic_load", "output_retained",
                                                                    "labour_retained"):
                    rows.append((args.param, v, r["date"], r["variable"], r["stratum"], float(r["value"])))
    _write_csv(out / "sweep.csv", ["parameter", "parameter_value", "date", "variable", "stratum", "value"], rows)
    outputs = ["summary.csv", "sweep.csv"] + [f"records/{j[0].name}.csv" for j in jobs]
    write_manifest(out, "sweep", args, _ds_paths([country], dirs), outputs)
    print(f"{len(jobs)} run(s) written to {out}")
    return 0


def cmd_calibrate(args):
    cfg_path = Path(args.config)
    cfg = calibration_config(load_toml(cfg_path))
    obs_path = Path(cfg["observations"])
    if not obs_path.is_absolute():
        obs_path = cfg_path.parent / obs_path
    observations = load_observations(obs_path)
    dirs = _dataset_dirs(args.dataset) or {c.upper(): cfg_path.parent / p for c, p in cfg["dataset"].items()}
    countries = cfg["countries"]
    datasets = {c: _load(c, dirs, args.fidelity) for c in countries}
    observations = [s for s in observations if s.country in datasets]
    if not observations:
        raise ValueError("no observations for the configured countries")
    space = ParameterSpace()
    if cfg["parameters"]:
        space = space.subset(cfg["parameters"])
    if cfg["priors"]:
        space = space.with_priors(cfg["priors"])
    base = CALIBRATED.with_(**parse_overrides(args.set)) if args.set else CALIBRATED
    fit_end = REDUCED_FIT_END if args.fidelity == "reduced" else PARAM_FIT_END
    theta0 = space.initial
    seeds = {c.upper(): {k: float(v) for k, v in s.items()} for c, s in cfg["seeds"].items()}
    opt = cfg["optimizer"]
    history = []
    prev = None
    if args.resume:
        prev = PosteriorChain.from_csv(args.resume, seed=args.seed)
        if list(prev.names) != list(space.names):
            raise ValueError(f"chain parameters {list(prev.names)} differ from the config {space.names}")
        fit = Path(args.resume).with_name("best_fit.json")
        if not fit.is_file():
            raise FileNotFoundError(f"resuming needs {fit} from the earlier run")
        saved = json.loads(fit.read_text(encoding="utf-8"))
        seeds = saved["seeds"]
        theta0 = space.vector(saved["snapshot_parameters"])
    elif cfg["initial_condition"]:
        ic = iterative_initial_condition(datasets, observations, theta0, space, base, max_iter=int(opt["max_iter"]),
                                         tol=float(opt["tol"]), seed_evals=int(opt["seed_evals"]),
                                         param_evals=int(opt["param_evals"]), fit_end=fit_end,
                                         start_seeds=seeds, raise_on_failure=False)
        theta0, seeds, history = ic.theta, ic.seeds, ic.history
    snaps = {}
    for c, ds in datasets.items():
        _, snaps[c] = run(default_builder(ds, c, seeds.get(c, {}), fit_end), ds,
                          base.with_(**space.as_dict(theta0)), snapshot_at=PARAM_FIT_START)
    last = fit_end - dt.timedelta(days=1)
    later = [s for s in (o.within(PARAM_FIT_START, last) for o in observations) if s is not None]
    post = Posterior(datasets, later, space, seeds, base, fit_end, snaps)
    mc = cfg["mcmc"]
    walkers = int(mc["walkers"] or 2 * len(space))
    walkers += walkers % 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pool, mapper = _map(args.workers)
    try:
        if prev is not None:
            chain = ensemble_mcmc(post, None, int(mc["steps"]), args.seed, resume=prev, pool_map=mapper)
        else:
            p0 = initial_ensemble(theta0, walkers, args.seed)
            chain = ensemble_mcmc(post, p0, int(mc["steps"]), args.seed, names=space.names, pool_map=mapper)
    finally:
        if pool is not None:
            pool.shutdown()
    chain.to_csv(out / "chain.csv")
    w, s = np.unravel_index(np.nanargmax(np.where(np.isfinite(chain.log_prob), chain.log_prob, -np.inf)),
                            chain.log_prob.shape)
    best = {"parameters": space.as_dict(chain.chain[w, s]), "log_posterior": float(chain.log_prob[w, s]),
            "seeds": seeds, "snapshot_parameters": space.as_dict(theta0)}
    if args.laplace:
        sd = laplace_sd(post, theta0)
        best["laplace_sd"] = {k: (float(v) if np.isfinite(v) else None) for k, v in zip(space.names, sd)}
    Path(out, "best_fit.json").write_text(json.dumps(best, indent=2) + "\n", encoding="utf-8")
    diag = {"autocorrelation_time": dict(zip(space.names, map(float, chain.autocorr_time()))),
            "acceptance_fraction": [float(a) for a in chain.acceptance_fraction],
            "gelman_rubin": dict(zip(space.names, map(float, gelman_rubin(chain.chain)))),
            "long_enough": bool(chain.long_enough()),
            "initial_condition": [{k: (v.tolist() if hasattr(v, "tolist") else v) for k, v in h.items()}
                                  for h in history]}
    Path(out, "diagnostics.json").write_text(json.dumps(diag, indent=2) + "\n", encoding="utf-8")
    write_manifest(out, "calibrate", args, _ds_paths(countries, dirs),
                   ["chain.csv", "best_fit.json", "diagnostics.json"],
                   {"observations": {"path": str(obs_path),
                                     "sha256": hashlib.sha256(obs_path.read_bytes()).hexdigest()}})
    print(f"chain of {chain.n_walkers} walkers x {chain.n_steps} steps written to {out}")
    return 0


def cmd_simulate(args):
    if args.schema:
        print(json.dumps(SPEC_SCHEMA, indent=2))
        return 0
    if not args.spec:
        raise ValueError("simulate needs --spec FILE")
    path = Path(args.spec)
    cfg = load_toml(path)
    country = str(cfg.get("country", "")).upper()
    dirs = _dataset_dirs(args.dataset)
    if "dataset" in cfg and country not in dirs:
        dirs[country] = path.parent / cfg["dataset"]
    if country not in ("BE", "SWE") and country not in dirs:
        raise ValueError(f"no dataset for country {country!r}")
    ds = _load(country, dirs, args.fidelity)
    spec = _with_sets(spec_from_dict(cfg, ds, path.parent), parse_overrides(args.set))
    if args.fidelity == "reduced":
        spec = _reduce_seeds(spec, ds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rec = run(spec, ds)
    rec.to_csv(out / "record.csv")
    s = summarize_csv(out / "record.csv")
    _write_csv(out / "summary.csv", ["run"] + list(SUMMARY_FIELDS), [[spec.name] + [s[f] for f in SUMMARY_FIELDS]])
    write_manifest(out, "simulate", args, _ds_paths([country], dirs), ["record.csv", "summary.csv"],
                   {"spec_sha256": hashlib.sha256(path.read_bytes()).hexdigest()})
    print(f"{spec.n_days} days written to {out}")
    return 0


# --------------------------------------------------------------------------- parser


def _common(p):
    p.add_argument("--dataset", action="append", metavar="[COUNTRY=]DIR",
                   help="dataset directory (repeatable; default: packaged data)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--fidelity", choices=("full", "reduced"), default="full",
                   help="reduced merges patches into capital and rest")
    p.add_argument("--set", action="append", default=[], metavar="PARAM=VALUE",
                   help="parameter override (repeatable)")


def build_parser():
    parser = argparse.ArgumentParser(prog="epinomic", description="Coupled epidemic-economic model")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check dataset invariants")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scenario", help="run a scenario grid or one variant")
    p.add_argument("name", help=", ".join(SCENARIOS))
    p.add_argument("--country", action="append", help="country (repeatable)")
    p.add_argument("--policy")
    p.add_argument("--date")
    p.add_argument("--release-months", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--second-seed")
    _common(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("sweep", help="one-at-a-time parameter sweep")
    p.add_argument("--param", required=True)
    p.add_argument("--values", nargs="*", required=True)
    p.add_argument("--scenario", default="scenario3", choices=("scenario3", "scenario2", "scenario4"))
    p.add_argument("--country", default="BE")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="initial condition, then ensemble MCMC")
    p.add_argument("--config", required=True, help="calibration TOML file")
    p.add_argument("--resume", help="chain CSV to continue")
    p.add_argument("--laplace", action="store_true",
                   help="also report posterior standard deviations from the Hessian at the starting mode")
    _common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="run a scenario described in a TOML spec file")
    p.add_argument("--spec", help="spec TOML file")
    p.add_argument("--schema", action="store_true", help="print the spec file's JSON schema")
    _common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, DatasetError, RuntimeError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
