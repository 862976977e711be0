"""Calibrated parameters, their bounds and the weighted normal prior."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    lower: float
    upper: float
    weight: float  # lambda
    mean: float
    sd: float
    initial: float


# name, bounds, (lambda, mu, sigma), initial estimate
PARAMETER_TABLE = (
    ParameterSpec("nu", 1.0, 182.0, 10.0, 22.0, 1.0, 18.0),
    ParameterSpec("xi_eff", 0.01, 3.0, 10.0, 0.45, 0.01, 0.40),
    ParameterSpec("pi_eff", 0.0, 1.0, 25.0, 0.0, 0.015, 0.060),
    ParameterSpec("pi_work", 0.0, 1.0, 25.0, 0.035, 0.004, 0.035),
    ParameterSpec("pi_leisure", 0.0, 1.0, 15.0, 0.060, 0.006, 0.060),
    ParameterSpec("mu", 0.0, 10.0, 10.0, 1.0, 0.1, 0.72),
    ParameterSpec("A_BE", 0.0, 1.0, 20.0, 0.18, 0.03, 0.16),
    ParameterSpec("dt_BE", -60.0, 60.0, 15.0, 0.0, 3.5, -14.0),
    ParameterSpec("A_SWE", 0.0, 1.0, 20.0, 0.22, 0.03, 0.23),
    ParameterSpec("dt_SWE", -60.0, 60.0, 15.0, 0.0, 3.5, 14.0),
    ParameterSpec("iota_H", 1.0, 60.0, 10.0, 7.0, 2.0, 7.0),
    ParameterSpec("iota_F", 1.0, 60.0, 10.0, 7.0, 2.0, 7.0),
)


class ParameterSpace:
    """Ordered set of calibrated parameters.

    Parameters
    ----------
    specs : sequence of ParameterSpec, optional
        Defaults to the twelve behavioural, seasonal and labour-market parameters.
    """

    def __init__(self, specs=PARAMETER_TABLE):
        specs = tuple(specs)
        for s in specs:
            if not (math.isfinite(s.lower) and math.isfinite(s.upper) and s.lower < s.upper):
                raise ValueError(f"{s.name}: bounds must be finite and increasing")
            if not s.sd > 0:
                raise ValueError(f"{s.name}: prior standard deviation must be positive")
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError("duplicate parameter names")
        self.specs = specs

    def __len__(self):
        return len(self.specs)

    @property
    def names(self):
        return tuple(s.name for s in self.specs)

    @property
    def lower(self):
        return np.array([s.lower for s in self.specs])

    @property
    def upper(self):
        return np.array([s.upper for s in self.specs])

    @property
    def initial(self):
        return np.array([s.initial for s in self.specs])

    @property
    def prior_mean(self):
        return np.array([s.mean for s in self.specs])

    @property
    def prior_sd(self):
        return np.array([s.sd for s in self.specs])

    def with_priors(self, changes):
        """Copy with some fields replaced, e.g. ``{"nu": {"sd": 5.0}}``."""
        unknown = set(changes) - set(self.names)
        if unknown:
            raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return ParameterSpace([replace(s, **{k: float(v) for k, v in changes.get(s.name, {}).items()})
                               for s in self.specs])

    def subset(self, names):
        by = {s.name: s for s in self.specs}
        return ParameterSpace([by[n] for n in names])

    def in_bounds(self, theta):
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def as_dict(self, theta):
        return dict(zip(self.names, map(float, theta)))

    def vector(self, params):
        """Vector of the space's parameters from a :class:`Parameters` instance or mapping."""
        get = params.get if isinstance(params, dict) else lambda n: getattr(params, n)
        return np.array([float(get(n)) for n in self.names])


def log_prior(theta, space):
    """Sum of ``log(lambda_k * N(theta_k; mu_k, sigma_k))``; ``-inf`` outside the bounds."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(space),) or not np.all(np.isfinite(theta)) or not space.in_bounds(theta):
        return -math.inf
    total = 0.0
    for x, s in zip(theta, space.specs):
        z = (x - s.mean) / s.sd
        total += math.log(s.weight) - 0.5 * z * z - math.log(s.sd) - 0.5 * math.log(2 * math.pi)
    return total
