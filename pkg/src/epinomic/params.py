"""Model-wide parameter set with calibrated defaults and string overrides."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from .epi import EpiParams
from .memory import BehaviorParams, ic_ratio


@dataclass(frozen=True)
class Parameters:
    # collective memory and behaviour
    nu: float = 20.8
    xi_eff: float = 0.39
    pi_eff: float = 0.070
    pi_work: float = 0.032
    pi_leisure: float = 0.055
    mu: float = 0.76
    xi_work: float = 10.0
    xi_leisure: float = 10.0
    awareness_threshold: float = 0.2
    awareness_ramp: float = 0.0
    # seasonality
    A_BE: float = 0.158
    dt_BE: float = -15.8
    A_SWE: float = 0.243
    dt_SWE: float = 7.7
    # transmission
    beta_BE: float = 0.031
    beta_SWE: float = 0.034
    # economy
    iota_H: float = 7.0
    iota_F: float = 6.1
    tau: float = 14.0
    delta_s: float = 0.75
    # health-care capacity
    ic_beds_BE: float = 1000.0
    ic_beds_SWE: float = 600.0
    ic_fraction: float = 1.0
    # policy transitions (days)
    ramp: float = 5.0

    def with_(self, **kw):
        unknown = set(kw) - {f.name for f in fields(self)}
        if unknown:
            raise KeyError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        return replace(self, **{k: float(v) for k, v in kw.items()})

    def as_dict(self):
        return asdict(self)

    def behavior(self):
        return BehaviorParams(self.nu, self.mu, self.xi_eff, self.pi_eff, self.xi_work, self.pi_work,
                              self.xi_leisure, self.pi_leisure, self.awareness_threshold)

    def epi(self, country, seasonality=True):
        c = country.upper()
        if not hasattr(self, f"beta_{c}"):
            raise ValueError(f"no parameters for country {country!r}; expected BE or SWE")
        amp, shift = (getattr(self, f"A_{c}"), getattr(self, f"dt_{c}")) if seasonality else (0.0, 0.0)
        return EpiParams(beta=getattr(self, f"beta_{c}"), amplitude=amp, shift=shift)

    def ic_capacity(self, country):
        return getattr(self, f"ic_beds_{country.upper()}")

    def ic_ratio(self, country, population):
        """IC-capacity ratio relative to Belgium's beds per capita."""
        if country.upper() == "BE":
            return 1.0
        return ic_ratio(self.ic_capacity(country), population, self.ic_beds_BE, BE_POPULATION)


BE_POPULATION = 11_431_000.0
CALIBRATED = Parameters()


def parse_overrides(items):
    """``["nu=7", "mu=0"]`` to a dict of floats."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form name=value")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out
