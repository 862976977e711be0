"""Spatial, age-stratified SEIQRD transmission model.

Compartments are stored as one array of shape ``(9, 17, G)`` (see
:mod:`epinomic.epi_kernels`).  Contacts are composed once per day from the
pre-pandemic matrices, the policy levers, the behavioural signal and the labour
available in each sector, and held fixed while the day is integrated with RK4.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import epi_kernels as K
from .datahub import ACTIVE_AGE_WEIGHTS

DAYS_PER_MONTH = 30.44
CLIP_TOL = 1e-9

AGE_A = np.array([82, 82, 82, 82, 78, 78, 78, 78, 70, 70, 70, 70, 65, 65, 65, 65, 17.8]) / 100
AGE_H = np.array([1, 1, 1, 1.2, 1.5, 2.5, 2.5, 3, 3, 6, 6, 12, 12, 45, 45, 95, 97]) / 100
AGE_M = np.array([0, 0, 1.2, 1.2, 1.5, 1.5, 2.7, 2.7, 4.1, 4.1, 8, 8, 16.4, 16.4, 26.6, 26.6, 40.4]) / 100
AGE_S = np.array([56, 56, 82] + [100] * 14) / 100


@dataclass(frozen=True)
class EpiParams:
    """Disease parameters; durations in days."""

    alpha: float = 4.5
    gamma: float = 0.7
    delta: float = 7.0
    epsilon: float = 11.4
    zeta: float = 9.2 * DAYS_PER_MONTH
    beta: float = 0.031
    amplitude: float = 0.0
    shift: float = 0.0
    a: np.ndarray = field(default_factory=lambda: AGE_A.copy())
    h: np.ndarray = field(default_factory=lambda: AGE_H.copy())
    m: np.ndarray = field(default_factory=lambda: AGE_M.copy())
    s: np.ndarray = field(default_factory=lambda: AGE_S.copy())

    def rates(self):
        return np.array([1 / self.alpha, 1 / self.gamma, 1 / self.delta, 1 / self.epsilon, 1 / self.zeta])

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class PolicyInputs:
    """Government levers per patch (and sector); 1 means fully imposed."""

    closure: np.ndarray  # (G, K)
    telework: np.ndarray  # (G, K)
    private_ban: np.ndarray  # (G,)
    school: np.ndarray  # (G,)

    @classmethod
    def none(cls, G, K_):
        return cls(np.zeros((G, K_)), np.zeros((G, K_)), np.zeros(G), np.zeros(G))


@dataclass
class ComposedContacts:
    total: np.ndarray  # (G, 17, 17)
    work: np.ndarray  # (G, 17, 17)

    @property
    def local(self):
        return self.total - self.work


# --------------------------------------------------------------------------- state


def new_state(T):
    """All-susceptible state for populations ``T`` (17, G)."""
    y = np.zeros((K.N_ROWS,) + np.shape(T))
    y[K.S] = T
    return y


def seasonal_beta(beta, amplitude, shift, t):
    """Transmission rate with cosine forcing peaking at day ``shift`` after Jan 1."""
    if not 0 <= amplitude < 1:
        raise ValueError("seasonal amplitude must lie in [0, 1)")
    return beta * (1.0 + amplitude * np.cos(2 * np.pi * (np.asarray(t, dtype=float) - shift) / 365.0))


# --------------------------------------------------------------------------- contacts


def remaining_work_fraction(closure, telework, M_work, I_active, labour_ratio, f_workplace, f_telework):
    """Remaining fraction of workplace contacts ``B``.

    Parameters
    ----------
    closure, telework : array_like
        Mandated closure and telework levels in [0, 1].
    M_work : array_like
        Behavioural remaining fraction for work.
    I_active : array_like
        Mild-symptomatic fraction of the active population.
    labour_ratio : array_like
        ``l / l0`` from the economy.
    f_workplace, f_telework : array_like
        Sector fractions of employees who must be at the workplace and who can telework.

    Returns
    -------
    ndarray
        ``min(A, E, M_work, 1 - I_active, l / l0)`` with
        ``A = f_workplace + (1 - closure)(1 - f_workplace)`` and
        ``E = 1 - telework * f_telework``.
    """
    A_bar = f_workplace + (1 - np.asarray(closure)) * (1 - f_workplace)
    E_bar = 1 - np.asarray(telework) * f_telework
    out = np.minimum(A_bar, E_bar)
    out = np.minimum(out, M_work)
    out = np.minimum(out, 1 - np.asarray(I_active))
    return np.minimum(out, labour_ratio)


def remaining_public_leisure(closure, M_leisure, I_mild, lav_c):
    """Remaining fraction of public leisure contacts ``C`` per patch.

    ``closure`` has shape (G, K); the open share of leisure-associated activity is
    weighted by ``lav_c``.
    """
    lav_c = np.asarray(lav_c, dtype=float)
    tot = lav_c.sum()
    if tot <= 0:
        raise ValueError("leisure activity weights are all zero")
    open_share = (1 - np.asarray(closure)) @ lav_c / tot
    return np.minimum(np.minimum(open_share, M_leisure), 1 - np.asarray(I_mild))


def remaining_private_leisure(private_ban, M_leisure, I_mild):
    """Remaining fraction of private leisure contacts ``D``."""
    return np.minimum(np.minimum(1 - np.asarray(private_ban), M_leisure), 1 - np.asarray(I_mild))


def compose_contacts(ds, policy, signal, summaries, labour_ratio):
    """Daily contact matrices per patch.

    Parameters
    ----------
    ds : CountryDataset
    policy : PolicyInputs
    signal : BehaviorSignal
    summaries : dict
        Output of :func:`symptomatic_summaries`.
    labour_ratio : ndarray, shape (K,)
        ``l / l0`` per sector.

    Returns
    -------
    ComposedContacts
    """
    sec = ds.sectors
    cm = ds.contacts
    M_eff = signal.M_eff[:, None, None]
    B = remaining_work_fraction(policy.closure, policy.telework, signal.M_work,
                                summaries["I_active"][:, None], np.asarray(labour_ratio)[None, :],
                                sec.f_workplace[None, :], sec.f_telework[None, :])
    C = remaining_public_leisure(policy.closure, signal.M_leisure, summaries["I"], sec.lav_c)
    D = remaining_private_leisure(policy.private_ban, signal.M_leisure, summaries["I"])
    work = np.einsum("gk,kij->gij", sec.lmc * B, ds.work_contacts) * M_eff
    total = (cm.home[None]
             + (1 - policy.school)[:, None, None] * M_eff * cm.school[None]
             + work
             + C[:, None, None] * M_eff * cm.leisure_public[None]
             + D[:, None, None] * M_eff * cm.leisure_private[None])
    return ComposedContacts(total, work)


def prepandemic_contacts(ds):
    G, K_ = ds.n_patches, ds.n_sectors
    from .memory import BehaviorSignal

    return compose_contacts(ds, PolicyInputs.none(G, K_), BehaviorSignal.inactive(G, K_),
                            {"I": np.zeros(G), "I_active": np.zeros(G)}, np.ones(K_))


# --------------------------------------------------------------------------- dynamics


def force_of_infection(y, contacts, Pbar, T, s, beta):
    """New infections per day for every age and patch, shape (17, G)."""
    return K.force_of_infection_kernel(np.ascontiguousarray(y, dtype=float),
                                       np.ascontiguousarray(contacts.local),
                                       np.ascontiguousarray(contacts.work),
                                       np.ascontiguousarray(Pbar, dtype=float),
                                       np.ascontiguousarray(T, dtype=float),
                                       np.ascontiguousarray(s, dtype=float), float(beta))


def epi_derivatives(y, lam, params):
    """Time derivative of the state given the force of infection ``lam``."""
    return K.rhs_numpy(np.asarray(y, dtype=float), lam, params.a, params.h, params.m, params.rates())


def integrate_day(y, params, contacts, Pbar, T, t, substeps=K.SUBSTEPS):
    """Advance the state by one day with classical RK4.

    Parameters
    ----------
    y : ndarray, shape (9, 17, G)
    params : EpiParams
    contacts : ComposedContacts
    Pbar : ndarray, shape (G, G)
    T : ndarray, shape (17, G)
    t : float
        Day of year of the start of the step (days since Jan 1).
    substeps : int
        Substeps per day (4 gives the fixed 0.25 day step).

    Raises
    ------
    FloatingPointError
        When the step produces NaN or clips more than ``1e-9`` of the population.
    """
    y_new, clipped = K.rk4_day(np.ascontiguousarray(y, dtype=float), float(t),
                               np.ascontiguousarray(contacts.local), np.ascontiguousarray(contacts.work),
                               np.ascontiguousarray(Pbar, dtype=float), np.ascontiguousarray(T, dtype=float),
                               params.s, params.a, params.h, params.m, params.rates(),
                               float(params.beta), float(params.amplitude), float(params.shift), int(substeps))
    if not np.all(np.isfinite(y_new)):
        raise FloatingPointError("integration produced non-finite values")
    if clipped > CLIP_TOL * float(np.sum(T)):
        raise FloatingPointError(f"negative mass clipped ({clipped:.3g}) exceeds tolerance")
    return y_new


def symptomatic_summaries(y, T, Pbar):
    """Population-weighted mild-symptomatic prevalence per patch.

    Returns
    -------
    dict
        ``I`` (all ages), ``I_active`` (working ages) and ``I_tilde`` (active prevalence
        times the employed fraction commuting out of each patch).
    """
    Im = y[K.IM]
    I_all = Im.sum(0) / T.sum(0)
    w = ACTIVE_AGE_WEIGHTS[:, None]
    I_act = (w * Im).sum(0) / (w * T).sum(0)
    return {"I": I_all, "I_active": I_act, "I_tilde": I_act * np.asarray(Pbar).sum(1)}


# --------------------------------------------------------------------------- R0


def next_generation_matrix(params, contacts, Pbar, T, beta=None):
    """Next-generation matrix over (age, patch) at the disease-free state.

    Entry ``[(i, g), (j, h)]`` is the expected number of infections in age ``i`` of
    patch ``g`` caused by one infectious individual of age ``j`` in patch ``h``.
    """
    beta = params.beta if beta is None else beta
    G = T.shape[1]
    n = T.shape[0]
    duration = params.gamma + params.delta  # presymptomatic plus either infectious branch
    Mx = np.zeros((n, G, n, G))
    for g in range(G):
        Mx[:, g, :, g] += contacts.local[g]
        for h in range(G):
            Mx[:, g, :, h] += Pbar[g, h] * contacts.work[h]
    scale = params.s[:, None] * beta * T * duration  # (i, g)
    Mx = Mx * scale[:, :, None, None] / T[None, None, :, :]
    return Mx.reshape(n * G, n * G)


def spectral_radius(M, tol=1e-10, max_iter=10_000):
    """Dominant eigenvalue of a non-negative matrix by power iteration."""
    M = np.asarray(M, dtype=float)
    if not M.any():
        return 0.0
    v = np.ones(M.shape[0]) / M.shape[0]
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        norm = w.sum()
        if norm == 0:
            return 0.0
        w /= norm
        if abs(norm - lam) <= tol * max(norm, 1e-300) and np.abs(w - v).max() <= tol:
            return float(norm)
        v, lam = w, norm
    raise ArithmeticError("power iteration did not converge")


def next_generation_R0(params, contacts, Pbar, T, beta=None):
    """Basic reproduction number for the given contacts and mobility."""
    return spectral_radius(next_generation_matrix(params, contacts, Pbar, T, beta))


def calibrate_beta(target, params, contacts, Pbar, T, tol=1e-6):
    """Transmission rate giving ``R0 = target`` (bisection on a linear bracket)."""
    if target < 0:
        raise ValueError("target R0 must be non-negative")
    if target == 0:
        return 0.0
    r1 = next_generation_R0(params, contacts, Pbar, T, beta=1.0)
    if r1 <= 0:
        raise ArithmeticError("R0 is zero for every beta; cannot bracket")
    guess = target / r1
    lo, hi = 0.5 * guess, 2.0 * guess
    f = lambda b: next_generation_R0(params, contacts, Pbar, T, beta=b) - target  # noqa: E731
    if f(lo) > 0 or f(hi) < 0:
        raise ArithmeticError("bracket failure")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol:
            return mid
        if fm < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dataset_R0(ds, params):
    """R0 of a dataset with its pre-pandemic contacts."""
    return next_generation_R0(params, prepandemic_contacts(ds), ds.mobility.normalized, ds.geo.population)
