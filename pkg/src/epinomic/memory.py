"""Collective memory of hospital load and the behavioural response it drives."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HORIZON = 182
PER_100K = 1e5


class HospitalMemory:
    """Per-patch ring buffer of daily hospital loads per 100k, newest first.

    Parameters
    ----------
    n_patches : int
        Number of spatial patches.
    horizon : int
        Days retained; older entries are dropped.
    """

    def __init__(self, n_patches, horizon=HORIZON):
        self.horizon = int(horizon)
        self._buf = np.zeros((self.horizon, n_patches))
        self._head = -1
        self.length = 0

    def copy(self):
        new = HospitalMemory(self._buf.shape[1], self.horizon)
        new._buf = self._buf.copy()
        new._head, new.length = self._head, self.length
        return new

    def push(self, entry):
        entry = np.asarray(entry, dtype=float)
        self._head = (self._head + 1) % self.horizon
        self._buf[self._head] = entry
        self.length = min(self.length + 1, self.horizon)

    def history(self):
        """Stored loads, shape (length, G), row 0 the most recent day."""
        idx = (self._head - np.arange(self.length)) % self.horizon
        return self._buf[idx]


def record_load(memory, hospital_load, population):
    """Append today's load, normalised to patients per 100 000 inhabitants.

    Parameters
    ----------
    memory : HospitalMemory
    hospital_load : array_like, shape (G,)
        Hospitalised patients per patch.
    population : array_like, shape (G,)
        Total inhabitants per patch.
    """
    load = np.asarray(hospital_load, dtype=float)
    if np.any(load < 0):
        raise ValueError("hospital load must be non-negative")
    memory.push(PER_100K * load / np.asarray(population, dtype=float))
    return memory


def ema_weights(nu, horizon=HORIZON):
    """Normalised exponential weights for lags 0..horizon-1."""
    if not nu > 0:
        raise ValueError("memory lifetime nu must be positive")
    if np.isinf(nu):
        w = np.ones(horizon)
    else:
        w = np.exp(-np.arange(horizon) / nu)
    return w / w.sum()


def ema_load(memory, nu):
    """Exponentially weighted average of the remembered load.

    Days before the simulation start count as zero load but keep their weight, so
    the normalisation always spans the full horizon.
    """
    w = ema_weights(nu, memory.horizon)
    hist = memory.history()
    return w[: len(hist)] @ hist if len(hist) else np.zeros(memory._buf.shape[1])


def connectivity_weights(Pbar):
    """Symmetrised commuting intensity relative to each patch's mean connectivity.

    ``C[g, h] = kappa[g, h] / mean_{h' != g} kappa[g, h']`` with
    ``kappa = (Pbar + Pbar.T) / 2`` and ``C[g, g] = 1``.
    """
    Pbar = np.asarray(Pbar, dtype=float)
    G = Pbar.shape[0]
    kappa = 0.5 * (Pbar + Pbar.T)
    C = np.ones((G, G))
    if G == 1:
        return C
    off = ~np.eye(G, dtype=bool)
    for g in range(G):
        m = kappa[g, off[g]].mean()
        C[g, off[g]] = kappa[g, off[g]] / m if m > 0 else 0.0
    return C


def ic_ratio(beds, population, ref_beds=1000.0, ref_population=11_431_000.0):
    """IC beds per capita of the reference country over that of the given country."""
    return (ref_beds / ref_population) / (beds / population)


def perceived_load(ema, mu, C, r=1.0):
    """Blend each patch's memory with the worst-hit patch, scaled by IC capacity.

    Parameters
    ----------
    ema : ndarray, shape (G,)
    mu : float
        Spatial awareness weight.
    C : ndarray, shape (G, G)
        Connectivity weights.
    r : float
        IC capacity ratio.
    """
    ema = np.asarray(ema, dtype=float)
    h = int(np.argmax(ema))
    w = mu * np.asarray(C)[:, h]
    out = r * (ema + w * ema[h]) / (1 + w)
    out[h] = r * ema[h]
    return out


@dataclass(frozen=True)
class BehaviorParams:
    nu: float = 20.8
    mu: float = 0.76
    xi_eff: float = 0.39
    pi_eff: float = 0.070
    xi_work: float = 10.0
    pi_work: float = 0.032
    xi_leisure: float = 10.0
    pi_leisure: float = 0.055
    awareness_threshold: float = 0.2


@dataclass
class BehaviorSignal:
    """Remaining fractions ``M`` (1 = pre-pandemic) with avoidance duals ``a = 1 - M``."""

    M_eff: np.ndarray  # (G,)
    M_leisure: np.ndarray  # (G,)
    M_work: np.ndarray  # (G, K)
    a_eff: np.ndarray = field(init=False)
    a_leisure: np.ndarray = field(init=False)
    a_work: np.ndarray = field(init=False)

    def __post_init__(self):
        self.a_eff = 1.0 - self.M_eff
        self.a_leisure = 1.0 - self.M_leisure
        self.a_work = 1.0 - self.M_work

    @classmethod
    def inactive(cls, G, K):
        return cls(np.ones(G), np.ones(G), np.ones((G, K)))


def gompertz(Q, xi, pi):
    """Remaining fraction ``1 - exp(-xi * exp(-pi * Q))``."""
    return 1.0 - np.exp(-xi * np.exp(-pi * np.asarray(Q, dtype=float)))


def gompertz_response(Q, params, W, active=True):
    """Behavioural multipliers for each patch (and sector, for work).

    Parameters
    ----------
    Q : ndarray, shape (G,)
        Perceived load per patch.
    params : BehaviorParams
    W : ndarray, shape (K,)
        Sector willingness; scales the work steepness.
    active : bool
        Awareness flag; when False every multiplier is 1.
    """
    Q = np.asarray(Q, dtype=float)
    W = np.asarray(W, dtype=float)
    if not active:
        return BehaviorSignal.inactive(Q.size, W.size)
    return BehaviorSignal(
        gompertz(Q, params.xi_eff, params.pi_eff),
        gompertz(Q, params.xi_leisure, params.pi_leisure),
        gompertz(Q[:, None], params.xi_work, params.pi_work * W[None, :]),
    )


def update_awareness(active, incidence_per_100k, threshold=0.2):
    """Latching awareness switch: on once national incidence reaches the threshold."""
    if incidence_per_100k < 0:
        raise ValueError("incidence must be non-negative")
    return bool(active or incidence_per_100k >= threshold)
