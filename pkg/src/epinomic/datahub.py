"""Country datasets: CSV ingestion, validation and derived quantities.

A dataset directory holds one CSV per table (see ``FILES``).  Loading validates
every invariant and precomputes the normalised mobility matrix, the technical
coefficients, the target inventories and the sector willingness index.  The
resulting :class:`CountryDataset` is immutable and may be shared between runs.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

N_AGE = 17
AGE_LABELS = tuple([f"{5 * i}-{5 * i + 5}" for i in range(16)] + ["80+"])
ACTIVE_AGE_WEIGHTS = np.array([0, 0, 0, 0.8] + [1.0] * 9 + [0.2, 0, 0, 0])
CONTACT_SETTINGS = ("home", "school", "leisure_public", "leisure_private")

FILES = (
    "demography.csv", "active_population.csv", "mobility.csv",
    "contacts_home.csv", "contacts_school.csv", "contacts_leisure_public.csv",
    "contacts_leisure_private.csv", "contacts_work.csv", "sectors.csv", "lmc.csv",
    "io_z.csv", "io_vectors.csv", "criticality.csv",
)
OPTIONAL_FILES = ("exogenous_split.csv",)
SECTOR_COLUMNS = ("code", "f_workplace", "f_telework", "lav_c", "lav_d", "fp",
                  "inventory_days", "employee_share")
EXOGENOUS_COMPONENTS = ("government", "investment", "exports_goods", "exports_services")

CLOSURE_TOL = 0.01
RECIPROCITY_TOL = 1e-3


class DatasetError(ValueError):
    """Raised when a dataset file is missing or violates an invariant."""

    def __init__(self, file, row, invariant, detail=""):
        self.file, self.row, self.invariant = file, row, invariant
        where = f"{file}" + (f", row {row}" if row is not None else "")
        super().__init__(f"{where}: {invariant}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class GeoFrame:
    """Patches and their age-stratified populations."""

    patch_ids: tuple
    names: tuple
    population: np.ndarray  # (17, G)
    active_population: np.ndarray  # (G,)
    area: np.ndarray  # (G,)

    @property
    def n_patches(self):
        return len(self.patch_ids)


@dataclass(frozen=True)
class MobilityMatrix:
    raw: np.ndarray
    normalized: np.ndarray


@dataclass(frozen=True)
class ContactMatrixSet:
    """Pre-pandemic contact rates (contacts per person per day)."""

    home: np.ndarray
    school: np.ndarray
    leisure_public: np.ndarray
    leisure_private: np.ndarray
    work: dict  # key (sector code or NACE-21 letter) -> (17, 17)

    def work_for(self, code):
        """Work matrix for a NACE-64 code, broadcasting NACE-21 entries to sub-activities."""
        if code in self.work:
            return self.work[code]
        if code[0] in self.work:
            return self.work[code[0]]
        raise KeyError(code)


@dataclass(frozen=True)
class SectorCatalog:
    codes: tuple
    f_workplace: np.ndarray
    f_telework: np.ndarray
    lav_c: np.ndarray
    lav_d: np.ndarray
    fp: np.ndarray
    inventory_days: np.ndarray
    employee_share: np.ndarray
    criticality: np.ndarray  # (input k, sector l) in {0, 0.5, 1}
    lmc: np.ndarray  # (G, K)
    willingness: np.ndarray

    @property
    def n_sectors(self):
        return len(self.codes)

    def index(self, code):
        return self.codes.index(code)


@dataclass(frozen=True)
class IOTables:
    Z: np.ndarray
    x0: np.ndarray
    c0: np.ndarray
    f0: np.ndarray
    l0: np.ndarray
    A: np.ndarray
    S0: np.ndarray


@dataclass(frozen=True)
class CountryDataset:
    name: str
    geo: GeoFrame
    mobility: MobilityMatrix
    contacts: ContactMatrixSet
    sectors: SectorCatalog
    io: IOTables
    exogenous_split: np.ndarray | None = None  # (K, 4) fractions of f0
    work_contacts: np.ndarray = field(default=None, repr=False)  # (K, 17, 17)

    @property
    def n_patches(self):
        return self.geo.n_patches

    @property
    def n_sectors(self):
        return self.sectors.n_sectors


# --------------------------------------------------------------------------- derived


def normalize_mobility(P, T_active):
    """Commuter counts to fractions of the origin's active population.

    Parameters
    ----------
    P : ndarray, shape (G, G)
        Daily commuters from origin ``g`` (row) to destination ``h`` (column).
    T_active : ndarray, shape (G,)
        Active population per origin patch.

    Returns
    -------
    ndarray
        ``P[g, h] / T_active[g]``.
    """
    P = np.asarray(P, dtype=float)
    T_active = np.asarray(T_active, dtype=float)
    if np.any(T_active <= 0):
        raise ValueError("active population must be positive in every patch")
    return P / T_active[:, None]


def technical_coefficients(Z, x0):
    """Input per unit of output, ``A[k, l] = Z[k, l] / x0[l]``."""
    Z = np.asarray(Z, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 <= 0):
        raise ValueError("gross output must be positive for every sector")
    return Z / x0[None, :]


def willingness(fp, f_telework, employee_share):
    """Sector willingness to reduce workplace contacts.

    Parameters
    ----------
    fp : ndarray
        Physical proximity index per sector.
    f_telework : ndarray
        Fraction of employees able to telework.
    employee_share : ndarray
        Share of national employment per sector, summing to one.

    Returns
    -------
    ndarray
        ``fp * f_telework`` normalised so its employment-weighted mean is 1.
    """
    prod = np.asarray(fp, dtype=float) * np.asarray(f_telework, dtype=float)
    denom = float(np.sum(prod * np.asarray(employee_share, dtype=float)))
    if denom == 0.0:
        raise ValueError("physical proximity times telework fraction is zero in every sector")
    return prod / denom


def active_population_from_ages(population):
    """Persons aged 16-65 from 5-year bins (partial weights on the edge bins)."""
    return ACTIVE_AGE_WEIGHTS @ np.asarray(population, dtype=float)


# --------------------------------------------------------------------------- csv io


def _fmt(v):
    if isinstance(v, str):
        return v
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _write(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _read(root, name, columns=None):
    path = Path(root) / name
    if not path.is_file():
        raise DatasetError(name, None, "missing file")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(name, None, "empty file")
    header, body = rows[0], rows[1:]
    if columns is not None and tuple(header[: len(columns)]) != tuple(columns):
        raise DatasetError(name, 1, "header mismatch", f"expected {','.join(columns)}")
    return header, body


def _num(name, row_no, value):
    try:
        x = float(value)
    except ValueError:
        raise DatasetError(name, row_no, "non-numeric value", repr(value)) from None
    if not math.isfinite(x):
        raise DatasetError(name, row_no, "non-finite value", repr(value))
    return x


def _age(name, row_no, label):
    try:
        return AGE_LABELS.index(label)
    except ValueError:
        raise DatasetError(name, row_no, "unknown age bin", label) from None


def _matrix_17(root, name):
    _, body = _read(root, name, ("age_i", "age_j", "rate"))
    M = np.full((N_AGE, N_AGE), np.nan)
    for n, r in enumerate(body, start=2):
        v = _num(name, n, r[2])
        if v < 0:
            raise DatasetError(name, n, "negative contact rate")
        M[_age(name, n, r[0]), _age(name, n, r[1])] = v
    if np.isnan(M).any():
        raise DatasetError(name, None, "dimension mismatch", "expected 17x17 age pairs")
    return M


def load_country_dataset(root, name=None, check=True):
    """Load and validate a country dataset directory.

    Parameters
    ----------
    root : str or Path
        Directory with the CSV layout listed in ``FILES``.
    name : str, optional
        Dataset label; defaults to the directory name.
    check : bool
        Validate invariants (disable only for repair tooling).

    Returns
    -------
    CountryDataset

    Raises
    ------
    DatasetError
        Naming the file, the row (when applicable) and the violated invariant.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(str(root), None, "missing dataset directory")

    # demography
    fn = "demography.csv"
    _, body = _read(root, fn, ("patch", "age_bin", "population"))
    patch_ids = []
    for r in body:
        if r[0] not in patch_ids:
            patch_ids.append(r[0])
    G = len(patch_ids)
    pop = np.full((N_AGE, G), np.nan)
    for n, r in enumerate(body, start=2):
        v = _num(fn, n, r[2])
        if check and v <= 0:
            raise DatasetError(fn, n, "population must be positive")
        pop[_age(fn, n, r[1]), patch_ids.index(r[0])] = v
    if np.isnan(pop).any():
        raise DatasetError(fn, None, "dimension mismatch", "every patch needs 17 age bins")

    fn = "active_population.csv"
    _, body = _read(root, fn, ("patch", "name", "active_population", "area"))
    if [r[0] for r in body] != patch_ids:
        raise DatasetError(fn, None, "patch order differs from demography.csv")
    names = tuple(r[1] for r in body)
    t_act = np.array([_num(fn, n, r[2]) for n, r in enumerate(body, start=2)])
    area = np.array([_num(fn, n, r[3]) for n, r in enumerate(body, start=2)])
    if check:
        for n, v in enumerate(t_act, start=2):
            if v <= 0:
                raise DatasetError(fn, n, "active population must be positive")
    geo = GeoFrame(tuple(patch_ids), names, pop, t_act, area)

    fn = "mobility.csv"
    _, body = _read(root, fn, ("origin", "destination", "commuters"))
    P = np.zeros((G, G))
    for n, r in enumerate(body, start=2):
        if r[0] not in patch_ids or r[1] not in patch_ids:
            raise DatasetError(fn, n, "unknown patch", f"{r[0]}->{r[1]}")
        v = _num(fn, n, r[2])
        if check and v < 0:
            raise DatasetError(fn, n, "negative commuter count")
        P[patch_ids.index(r[0]), patch_ids.index(r[1])] = v
    Pbar = normalize_mobility(P, t_act)
    if check:
        for g in range(G):
            if Pbar[g].sum() > 1 + 1e-9:
                raise DatasetError(fn, None, "mobility row sum exceeds 1", patch_ids[g])

    mats = {s: _matrix_17(root, f"contacts_{s}.csv") for s in CONTACT_SETTINGS}
    if check:
        nat = pop.sum(1)
        for s in ("home", "leisure_public", "leisure_private"):
            tot = mats[s] * nat[:, None]
            if np.abs(tot - tot.T).max() > RECIPROCITY_TOL * tot.max():
                raise DatasetError(f"contacts_{s}.csv", None, "reciprocity violated")
    fn = "contacts_work.csv"
    _, body = _read(root, fn, ("sector", "age_i", "age_j", "rate"))
    work = {}
    for n, r in enumerate(body, start=2):
        M = work.setdefault(r[0], np.full((N_AGE, N_AGE), np.nan))
        v = _num(fn, n, r[3])
        if v < 0:
            raise DatasetError(fn, n, "negative contact rate")
        M[_age(fn, n, r[1]), _age(fn, n, r[2])] = v
    for k, M in work.items():
        if np.isnan(M).any():
            raise DatasetError(fn, None, "dimension mismatch", f"sector {k} incomplete")
    contacts = ContactMatrixSet(work=work, **mats)

    fn = "sectors.csv"
    _, body = _read(root, fn, SECTOR_COLUMNS)
    codes = tuple(r[0] for r in body)
    K = len(codes)
    cols = np.array([[_num(fn, n, v) for v in r[1:8]] for n, r in enumerate(body, start=2)]).reshape(K, 7)
    fw, ftel, lav_c, lav_d, fp, ndays, share = cols.T
    if check:
        for n, k in enumerate(range(K), start=2):
            if fw[k] + ftel[k] > 1 + 1e-9:
                raise DatasetError(fn, n, "f_workplace + f_telework exceeds 1", codes[k])
            if min(cols[k, [0, 1, 2, 3, 4]]) < 0 or max(cols[k, [0, 1, 2, 3, 4]]) > 1:
                raise DatasetError(fn, n, "fraction outside [0, 1]", codes[k])
            if ndays[k] <= 0:
                raise DatasetError(fn, n, "inventory days must be positive", codes[k])
        if abs(share.sum() - 1) > 1e-6:
            raise DatasetError(fn, None, "employee shares do not sum to 1", f"{share.sum():.6g}")

    fn = "lmc.csv"
    _, body = _read(root, fn, ("patch", "sector", "share"))
    lmc = np.full((G, K), np.nan)
    for n, r in enumerate(body, start=2):
        if r[0] not in patch_ids or r[1] not in codes:
            raise DatasetError(fn, n, "unknown patch or sector", f"{r[0]},{r[1]}")
        lmc[patch_ids.index(r[0]), codes.index(r[1])] = _num(fn, n, r[2])
    if np.isnan(lmc).any():
        raise DatasetError(fn, None, "dimension mismatch", "need one share per patch and sector")
    if check:
        for g in range(G):
            if abs(lmc[g].sum() - 1) > 1e-6 or lmc[g].min() < 0:
                raise DatasetError(fn, None, "labour market composition must sum to 1", patch_ids[g])

    fn = "io_z.csv"
    header, body = _read(root, fn)
    if tuple(header[1:]) != codes or [r[0] for r in body] != list(codes):
        raise DatasetError(fn, 1, "dimension mismatch", f"expected {K}x{K} in sectors.csv order")
    Z = np.array([[_num(fn, n, v) for v in r[1:]] for n, r in enumerate(body, start=2)])
    if check and Z.min() < 0:
        n = int(np.argwhere(Z < 0)[0, 0]) + 2
        raise DatasetError(fn, n, "negative intermediate flow")

    fn = "io_vectors.csv"
    _, body = _read(root, fn, ("sector", "x0", "c0", "f0", "l0"))
    if [r[0] for r in body] != list(codes):
        raise DatasetError(fn, None, "dimension mismatch", "sector order differs from sectors.csv")
    vec = np.array([[_num(fn, n, v) for v in r[1:5]] for n, r in enumerate(body, start=2)])
    x0, c0, f0, l0 = vec.T.copy()
    for n, k in enumerate(range(K), start=2):
        if x0[k] <= 0:
            raise DatasetError(fn, n, "gross output must be positive", codes[k])
        if check and (l0[k] <= 0 or c0[k] < 0):
            raise DatasetError(fn, n, "labour compensation must be positive and consumption non-negative", codes[k])
        if check and abs(x0[k] - Z[k].sum() - c0[k] - f0[k]) > CLOSURE_TOL * x0[k]:
            raise DatasetError(fn, n, "accounting identity x0 = sum(Z) + c0 + f0 violated beyond 1%", codes[k])
    A = technical_coefficients(Z, x0)
    S0 = ndays[None, :] * Z

    fn = "criticality.csv"
    _, body = _read(root, fn, ("sector", "input_sector", "level"))
    crit = np.zeros((K, K))
    for n, r in enumerate(body, start=2):
        if r[0] not in codes or r[1] not in codes:
            raise DatasetError(fn, n, "unknown sector", f"{r[0]},{r[1]}")
        lvl = _num(fn, n, r[2])
        if lvl not in (0.0, 0.5, 1.0):
            raise DatasetError(fn, n, "criticality level must be 0, 0.5 or 1", r[2])
        crit[codes.index(r[1]), codes.index(r[0])] = lvl

    split = None
    if (root / "exogenous_split.csv").is_file():
        fn = "exogenous_split.csv"
        _, body = _read(root, fn, ("sector",) + EXOGENOUS_COMPONENTS)
        if [r[0] for r in body] != list(codes):
            raise DatasetError(fn, None, "dimension mismatch", "sector order differs from sectors.csv")
        split = np.array([[_num(fn, n, v) for v in r[1:5]] for n, r in enumerate(body, start=2)])
        for n, row in enumerate(split, start=2):
            if abs(row.sum() - 1) > 1e-9 or row.min() < 0:
                raise DatasetError(fn, n, "component shares must be non-negative and sum to 1")

    sectors = SectorCatalog(codes, fw, ftel, lav_c, lav_d, fp, ndays, share, crit, lmc,
                            willingness(fp, ftel, share))
    work_stack = np.array([contacts.work_for(c) for c in codes]) if work else np.zeros((K, N_AGE, N_AGE))
    io_t = IOTables(Z, x0, c0, f0, l0, A, S0)
    for arr in (pop, t_act, area, P, Pbar, Z, A, S0, lmc, crit, x0, c0, f0, l0, work_stack):
        arr.setflags(write=False)
    return CountryDataset(name or root.name, geo, MobilityMatrix(P, Pbar), contacts, sectors, io_t,
                          split, work_stack)


def validate_dataset(root):
    """Return a list of violation messages (empty when the dataset is clean)."""
    try:
        load_country_dataset(root)
    except DatasetError as exc:
        return [str(exc)]
    except ValueError as exc:
        return [f"{root}: {exc}"]
    return []


def write_country_dataset(ds, root):
    """Serialise a dataset to the CSV layout read by :func:`load_country_dataset`."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    geo, sec, iot = ds.geo, ds.sectors, ds.io
    ids, codes = geo.patch_ids, sec.codes
    G, K = len(ids), len(codes)
    _write(root / "demography.csv", ("patch", "age_bin", "population"),
           [(ids[g], AGE_LABELS[i], geo.population[i, g]) for g in range(G) for i in range(N_AGE)])
    _write(root / "active_population.csv", ("patch", "name", "active_population", "area"),
           [(ids[g], geo.names[g], geo.active_population[g], geo.area[g]) for g in range(G)])
    _write(root / "mobility.csv", ("origin", "destination", "commuters"),
           [(ids[g], ids[h], ds.mobility.raw[g, h]) for g in range(G) for h in range(G)])
    for s in CONTACT_SETTINGS:
        M = getattr(ds.contacts, s)
        _write(root / f"contacts_{s}.csv", ("age_i", "age_j", "rate"),
               [(AGE_LABELS[i], AGE_LABELS[j], M[i, j]) for i in range(N_AGE) for j in range(N_AGE)])
    _write(root / "contacts_work.csv", ("sector", "age_i", "age_j", "rate"),
           [(k, AGE_LABELS[i], AGE_LABELS[j], M[i, j]) for k, M in ds.contacts.work.items()
            for i in range(N_AGE) for j in range(N_AGE)])
    _write(root / "sectors.csv", SECTOR_COLUMNS,
           [(codes[k], sec.f_workplace[k], sec.f_telework[k], sec.lav_c[k], sec.lav_d[k], sec.fp[k],
             sec.inventory_days[k], sec.employee_share[k]) for k in range(K)])
    _write(root / "lmc.csv", ("patch", "sector", "share"),
           [(ids[g], codes[k], sec.lmc[g, k]) for g in range(G) for k in range(K)])
    _write(root / "io_z.csv", ("sector",) + codes, [(codes[k],) + tuple(iot.Z[k]) for k in range(K)])
    _write(root / "io_vectors.csv", ("sector", "x0", "c0", "f0", "l0"),
           [(codes[k], iot.x0[k], iot.c0[k], iot.f0[k], iot.l0[k]) for k in range(K)])
    _write(root / "criticality.csv", ("sector", "input_sector", "level"),
           [(codes[l], codes[k], sec.criticality[k, l]) for l in range(K) for k in range(K)
            if sec.criticality[k, l] > 0])
    if ds.exogenous_split is not None:
        _write(root / "exogenous_split.csv", ("sector",) + EXOGENOUS_COMPONENTS,
               [(codes[k],) + tuple(ds.exogenous_split[k]) for k in range(K)])


def packaged_dataset_path(country):
    """Directory of a dataset shipped with the package (``"BE"`` or ``"SWE"``)."""
    p = Path(__file__).parent / "data" / country.upper()
    if not p.is_dir():
        raise DatasetError(str(p), None, "no packaged dataset", country)
    return p


_CACHE = {}


def load_packaged(country):
    """Load (and cache) a packaged country dataset."""
    key = country.upper()
    if key not in _CACHE:
        _CACHE[key] = load_country_dataset(packaged_dataset_path(key), name=key)
    return _CACHE[key]


def dataset_from_arrays(name, population, commuters, home, school, leisure_public, leisure_private,
                        work, sectors, lmc, Z, x0, c0, f0, l0, criticality, patch_ids=None,
                        patch_names=None, active_population=None, area=None, exogenous_split=None):
    """Build a validated in-memory dataset (used for synthetic fixtures).

    ``sectors`` is a mapping with the ``SECTOR_COLUMNS`` fields (``code`` a sequence of
    codes, the others arrays); ``work`` maps sector codes or NACE-21 letters to 17x17
    matrices; ``criticality`` is indexed ``[input, sector]``.
    """
    import tempfile

    population = np.asarray(population, dtype=float)
    G = population.shape[1]
    patch_ids = tuple(patch_ids or [f"P{g}" for g in range(G)])
    codes = tuple(sectors["code"])
    t_act = active_population if active_population is not None else active_population_from_ages(population)
    geo = GeoFrame(patch_ids, tuple(patch_names or patch_ids), population, np.asarray(t_act, float),
                   np.asarray(area if area is not None else np.ones(G), float))
    P = np.asarray(commuters, float)
    cm = ContactMatrixSet(np.asarray(home, float), np.asarray(school, float),
                          np.asarray(leisure_public, float), np.asarray(leisure_private, float),
                          {k: np.asarray(v, float) for k, v in work.items()})
    sc = SectorCatalog(codes, *(np.asarray(sectors[c], float) for c in SECTOR_COLUMNS[1:]),
                       np.asarray(criticality, float), np.asarray(lmc, float), None)
    Z = np.asarray(Z, float)
    iot = IOTables(Z, np.asarray(x0, float), np.asarray(c0, float), np.asarray(f0, float),
                   np.asarray(l0, float), None, None)
    draft = CountryDataset(name, geo, MobilityMatrix(P, None), cm, sc, iot,
                           None if exogenous_split is None else np.asarray(exogenous_split, float))
    with tempfile.TemporaryDirectory() as tmp:
        write_country_dataset(draft, tmp)
        return load_country_dataset(tmp, name=name)


def aggregate_patches(ds, groups, ids=None):
    """Merge patches into coarser ones (reduced-fidelity mode).

    Parameters
    ----------
    ds : CountryDataset
    groups : sequence of sequence of str
        Patch ids per merged patch; every patch must appear exactly once.
    ids : sequence of str, optional
        Ids of the merged patches (default: first member of each group).
    """
    import tempfile

    index = {p: g for g, p in enumerate(ds.geo.patch_ids)}
    members = [[index[p] for p in grp] for grp in groups]
    flat = sorted(g for m in members for g in m)
    if flat != list(range(ds.n_patches)):
        raise ValueError("groups must partition the dataset's patches")
    n = len(members)
    agg = np.zeros((ds.n_patches, n))
    for j, m in enumerate(members):
        agg[m, j] = 1.0
    geo = ds.geo
    t_act = geo.active_population @ agg
    lmc = (agg * geo.active_population[:, None]).T @ ds.sectors.lmc / t_act[:, None]
    ids = tuple(ids or (grp[0] for grp in groups))
    names = tuple(" + ".join(geo.names[g] for g in m) if len(m) > 1 else geo.names[m[0]] for m in members)
    draft = replace(ds, geo=GeoFrame(ids, names, geo.population @ agg, t_act, geo.area @ agg),
                    mobility=MobilityMatrix(agg.T @ ds.mobility.raw @ agg, None),
                    sectors=replace(ds.sectors, lmc=lmc))
    with tempfile.TemporaryDirectory() as tmp:
        write_country_dataset(draft, tmp)
        return load_country_dataset(tmp, name=ds.name)
