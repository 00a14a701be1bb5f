"""Configuration dataclasses for the Dirichlet-Beta state-space model."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..bench import HISTORICAL_MEAN, HISTORICAL_COV
from ..peak_inverse import InverseMethod
from ..truncnorm import symmetrize

# "prevalence" reads both the peak prior and y_t as prevalence; "prevalence-prior"
# keeps the incidence likelihood and maps z through the prevalence peak only.
TARGETS = ("incidence", "prevalence", "prevalence-prior")


@dataclass(frozen=True)
class ZPrior:
    """Bivariate normal on (peak value, peak week) before truncation.

    The lower bound on the peak value is not stored: it is the initial
    prevalence of whichever theta0 the prior is conditioned on.
    """

    mean: tuple[float, float] = HISTORICAL_MEAN
    cov: tuple = HISTORICAL_COV
    piv_upper: float = 1.0
    pit_bounds: tuple[float, float] = (1.0, 35.0)

    def __post_init__(self):
        c = symmetrize(self.cov)
        if not np.all(np.linalg.eigvalsh(c) > 0):
            raise ValueError("z prior covariance is not positive definite")
        object.__setattr__(self, "cov", tuple(map(tuple, c.tolist())))
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))
        lo, hi = self.pit_bounds
        if not lo < hi:
            raise ValueError("empty peak-week interval")
        if not 0 < self.piv_upper <= 1:
            raise ValueError("piv_upper must lie in (0, 1]")

    @property
    def cov_array(self) -> np.ndarray:
        return np.array(self.cov, dtype=float)


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 4
    iterations: int = 62_500
    burn_in: int = 12_500
    thin: int = 10
    workers: int | None = None

    def __post_init__(self):
        if min(self.chains, self.iterations, self.thin) < 1 or self.burn_in < 0:
            raise ValueError("mcmc counts must be positive")
        if not self.burn_in < self.iterations:
            raise ValueError("burn_in must be smaller than iterations")

    @property
    def draws_per_chain(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass(frozen=True)
class DbssmConfig:
    init_prior: tuple[float, float, float] = (900.0, 2.0, 98.0)
    lambda_prior: tuple[float, float] = (2.0, 0.0002)  # shape, rate
    iota_prior: tuple[float, float] = (2.0, 0.0002)
    z_prior: ZPrior = field(default_factory=ZPrior)
    inverse_method: InverseMethod = InverseMethod.COMPUTE_INTEGRAL
    horizon: int = 35
    target: str = "incidence"
    mcmc: McmcConfig = field(default_factory=McmcConfig)

    def __post_init__(self):
        if len(self.init_prior) != 3 or min(self.init_prior) <= 0:
            raise ValueError("init_prior needs three positive concentrations")
        for name in ("lambda_prior", "iota_prior"):
            shape, rate = getattr(self, name)
            if not (shape > 0 and rate > 0):
                raise ValueError(f"{name} shape and rate must be positive")
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2 weeks")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        object.__setattr__(self, "inverse_method", InverseMethod.parse(self.inverse_method))
        object.__setattr__(self, "init_prior", tuple(float(a) for a in self.init_prior))

    @property
    def obs_target(self) -> str:
        return "prevalence" if self.target == "prevalence" else "incidence"

    @property
    def prior_target(self) -> str:
        return "incidence" if self.target == "incidence" else "prevalence"

    @property
    def theta0_mean(self) -> tuple[float, float, float]:
        a = np.asarray(self.init_prior)
        return tuple((a / a.sum()).tolist())

    def with_mcmc(self, **kw) -> "DbssmConfig":
        return replace(self, mcmc=replace(self.mcmc, **kw))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inverse_method"] = self.inverse_method.value
        return d

    @classmethod
    def from_mapping(cls, data: dict) -> "DbssmConfig":
        data = dict(data)
        if "z_prior" in data and isinstance(data["z_prior"], dict):
            zp = dict(data["z_prior"])
            for key in ("mean", "pit_bounds"):
                if key in zp:
                    zp[key] = tuple(zp[key])
            if "cov" in zp:
                zp["cov"] = tuple(map(tuple, zp["cov"]))
            data["z_prior"] = ZPrior(**zp)
        if "mcmc" in data and isinstance(data["mcmc"], dict):
            data["mcmc"] = McmcConfig(**data["mcmc"])
        for key in ("init_prior", "lambda_prior", "iota_prior"):
            if key in data:
                data[key] = tuple(data[key])
        extra = set(data) - set(cls.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown dbssm config keys: {sorted(extra)}")
        return cls(**data)
