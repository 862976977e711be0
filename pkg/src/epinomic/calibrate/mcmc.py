"""Affine-invariant ensemble sampler (stretch move) and chain diagnostics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

STRETCH = 2.0


def walker_stream(seed, walker, step):
    """Random stream of one walker at one step; independent of every other (walker, step)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(walker), int(step)]))


def draw_stretch(rng, a=STRETCH):
    """Stretch factor with density proportional to ``1/sqrt(z)`` on ``[1/a, a]``."""
    return ((a - 1.0) * rng.random() + 1.0) ** 2 / a


@dataclass
class PosteriorChain:
    """Samples ``chain[walker, step, parameter]`` with their log-posteriors.

    Attributes
    ----------
    chain : ndarray, shape (W, S, D)
    log_prob : ndarray, shape (W, S)
    accepted : ndarray, shape (W,)
        Accepted proposals per walker.
    names : tuple of str
    seed : int
    """

    chain: np.ndarray
    log_prob: np.ndarray
    accepted: np.ndarray
    names: tuple
    seed: int = 0

    @property
    def n_walkers(self):
        return self.chain.shape[0]

    @property
    def n_steps(self):
        return self.chain.shape[1]

    @property
    def acceptance_fraction(self):
        return self.accepted / max(self.n_steps - 1, 1)

    def autocorr_time(self, discard=0, c=5.0):
        return integrated_autocorr_time(self.chain[:, discard:], c)

    def flat(self, discard=0, thin=1):
        return self.chain[:, discard::thin].reshape(-1, self.chain.shape[2])

    def thinned(self):
        """Burn-in and thinning from the autocorrelation time.

        Discards twice the largest autocorrelation time and thins by half of it.
        """
        tau = float(np.max(self.autocorr_time()))
        discard = min(int(math.ceil(2 * tau)), self.n_steps - 1)
        thin = max(1, int(0.5 * tau))
        return self.flat(discard, thin), discard, thin

    def long_enough(self, factor=50.0):
        return self.n_steps >= factor * float(np.max(self.autocorr_time()))

    def to_csv(self, path):
        """Write ``walker, step, parameter, value, log_posterior`` rows."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("walker", "step", "parameter", "value", "log_posterior"))
        W, S, D = self.chain.shape
        for i in range(W):
            for s in range(S):
                lp = repr(float(self.log_prob[i, s]))
                for d in range(D):
                    w.writerow((i, s, self.names[d], repr(float(self.chain[i, s, d])), lp))
        Path(path).write_text(buf.getvalue(), encoding="utf-8")

    @classmethod
    def from_csv(cls, path, seed=0):
        rows = list(csv.DictReader(open(path, newline="", encoding="utf-8")))
        if not rows:
            raise ValueError(f"{path}: empty chain file")
        names = list(dict.fromkeys(r["parameter"] for r in rows))
        W = 1 + max(int(r["walker"]) for r in rows)
        S = 1 + max(int(r["step"]) for r in rows)
        chain = np.full((W, S, len(names)), np.nan)
        lp = np.full((W, S), np.nan)
        col = {n: k for k, n in enumerate(names)}
        for r in rows:
            i, s = int(r["walker"]), int(r["step"])
            chain[i, s, col[r["parameter"]]] = float(r["value"])
            lp[i, s] = float(r["log_posterior"])
        if np.isnan(chain).any():
            raise ValueError(f"{path}: incomplete chain")
        acc = np.array([(np.diff(chain[i], axis=0) != 0).any(1).sum() for i in range(W)], dtype=float)
        return cls(chain, lp, acc, tuple(names), seed)


def initial_ensemble(theta, n_walkers, seed, spread=0.05):
    """Walkers at ``theta`` perturbed uniformly by up to ``spread`` (relative)."""
    theta = np.asarray(theta, dtype=float)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xE05E]))
    u = rng.uniform(-spread, spread, size=(n_walkers, theta.size))
    return theta[None, :] * (1.0 + u) + np.where(theta == 0, u, 0.0)


def ensemble_mcmc(log_prob, p0, steps, seed, a=STRETCH, names=None, resume=None, pool_map=map,
                  progress=None):
    """Sample with the stretch move, updating the two half-ensembles in turn.

    Parameters
    ----------
    log_prob : callable
        ``log_prob(theta) -> float``.
    p0 : ndarray, shape (W, D)
        Initial walker positions; ``W >= 2 * D`` and even.
    steps : int
        Steps to add (the first stored step is ``p0`` itself when not resuming).
    seed : int
    a : float
        Stretch-scale parameter.
    resume : PosteriorChain, optional
        Continue this chain; the result equals an uninterrupted run of the same length.
    pool_map : callable
        ``map``-like function used to evaluate one half-ensemble.

    Returns
    -------
    PosteriorChain
    """
    if resume is not None:
        pos = resume.chain[:, -1].copy()
        lp = resume.log_prob[:, -1].copy()
        start = resume.n_steps
        names = resume.names
    else:
        pos = np.array(p0, dtype=float)
        lp = np.array(list(pool_map(log_prob, list(pos))), dtype=float)
        start = 1
    W, D = pos.shape
    if W < 2 * D:
        raise ValueError(f"need at least {2 * D} walkers for {D} parameters")
    if W % 2:
        raise ValueError("the number of walkers must be even")
    if not np.isfinite(lp).any():
        raise ValueError("every walker starts at zero posterior probability")
    names = tuple(names or (f"theta{d}" for d in range(D)))
    chain = np.empty((W, steps if resume is not None else steps + 1, D))
    lps = np.empty(chain.shape[:2])
    acc = np.zeros(W) if resume is None else resume.accepted.copy()
    off = 0
    if resume is None:
        chain[:, 0], lps[:, 0] = pos, lp
        off = 1
    halves = (np.arange(0, W // 2), np.arange(W // 2, W))
    for n in range(steps):
        step = start + n
        for h in (0, 1):
            active, other = halves[h], halves[1 - h]
            props, zs = [], []
            for i in active:
                rng = walker_stream(seed, i, step)
                z = draw_stretch(rng, a)
                j = other[rng.integers(len(other))]
                props.append(pos[j] + z * (pos[i] - pos[j]))
                zs.append((z, rng.random()))
            new_lp = list(pool_map(log_prob, props))
            for (i, y, nl, (z, u)) in zip(active, props, new_lp, zs):
                log_acc = (D - 1) * math.log(z) + nl - lp[i]
                if math.isfinite(nl) and math.log(u) < log_acc:
                    pos[i], lp[i] = y, nl
                    acc[i] += 1
        chain[:, off + n], lps[:, off + n] = pos, lp
    if resume is not None:
        chain = np.concatenate([resume.chain, chain], axis=1)
        lps = np.concatenate([resume.log_prob, lps], axis=1)
    return PosteriorChain(chain, lps, acc, names, seed)


# --------------------------------------------------------------------------- diagnostics


def autocorr_function(x):
    """Normalised autocorrelation function of a 1-D series (FFT based)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x - x.mean(), n=size)
    acf = np.fft.irfft(f * np.conj(f), n=size)[:n]
    return acf / acf[0] if acf[0] > 0 else np.zeros(n)


def integrated_autocorr_time(chain, c=5.0):
    """Integrated autocorrelation time per parameter with automatic windowing.

    Parameters
    ----------
    chain : ndarray, shape (W, S, D)
    c : float
        Window constant: the smallest ``M`` with ``M >= c * tau(M)`` is used.
    """
    chain = np.asarray(chain, dtype=float)
    W, S, D = chain.shape
    taus = np.empty(D)
    for d in range(D):
        f = np.mean([autocorr_function(chain[w, :, d]) for w in range(W)], axis=0)
        tau = 2.0 * np.cumsum(f) - 1.0
        m = np.arange(S) >= c * tau
        window = int(np.argmax(m)) if m.any() else S - 1
        taus[d] = max(tau[window], 1.0)
    return taus


def gelman_rubin(chain):
    """Potential scale reduction per parameter, each walker treated as one chain."""
    chain = np.asarray(chain, dtype=float)
    W, S, D = chain.shape
    means = chain.mean(1)
    B = S * means.var(0, ddof=1)
    Wv = chain.var(1, ddof=1).mean(0)
    var = (S - 1) / S * Wv + B / S
    return np.sqrt(var / Wv)
