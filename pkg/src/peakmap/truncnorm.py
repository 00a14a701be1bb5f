"""Bivariate normal truncated to an axis-aligned box."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

MIN_ACCEPTANCE = 1e-4
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(200)


class LowAcceptanceError(RuntimeError):
    pass


def symmetrize(cov) -> np.ndarray:
    """Copy the lower off-diagonal entry over the upper one."""
    c = np.array(cov, dtype=float)
    if c.shape != (2, 2):
        raise ValueError("covariance must be 2x2")
    c[0, 1] = c[1, 0]
    return c


@dataclass(frozen=True)
class TruncatedBvn:
    mean: tuple[float, float]
    cov: np.ndarray = field(repr=False)
    lower: tuple[float, float]
    upper: tuple[float, float]

    def __post_init__(self):
        cov = symmetrize(self.cov)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", tuple(float(m) for m in self.mean))
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc
        if not np.all(np.linalg.eigvalsh(cov) > 0):
            raise ValueError("covariance is not positive definite")
        object.__setattr__(self, "_chol", chol)
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"empty truncation interval ({lo}, {hi})")

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return (
            (x[:, 0] > self.lower[0]) & (x[:, 0] < self.upper[0])
            & (x[:, 1] > self.lower[1]) & (x[:, 1] < self.upper[1])
        )

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Rejection sampling; raises if the acceptance rate is below 1e-4."""
        out = np.empty((size, 2))
        filled = 0
        tried = 0
        batch = max(64, 2 * size)
        while filled < size:
            z = rng.standard_normal((batch, 2)) @ self._chol.T + np.asarray(self.mean)
            ok = z[self.contains(z)]
            tried += batch
            take = min(len(ok), size - filled)
            out[filled:filled + take] = ok[:take]
            filled += take
            if tried >= 100_000 and filled / tried < MIN_ACCEPTANCE:
                raise LowAcceptanceError(
                    f"acceptance rate {filled / tried:.2e} below {MIN_ACCEPTANCE:g}; "
                    "check the truncation bounds"
                )
        return out

    def log_mass(self) -> float:
        """log P(box) under the untruncated normal (Gauss-Legendre over the 2nd axis)."""
        m1, m2 = self.mean
        s1 = math.sqrt(self.cov[0, 0])
        s2 = math.sqrt(self.cov[1, 1])
        corr = self.cov[0, 1] / (s1 * s2)
        lo = max(self.lower[1], m2 - 9 * s2)
        hi = min(self.upper[1], m2 + 9 * s2)
        if hi <= lo:
            return -math.inf
        y = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
        w = 0.5 * (hi - lo) * _GL_WEIGHTS
        # x | y ~ N(m1 + corr s1 (y - m2)/s2, s1^2 (1 - corr^2))
        cm = m1 + corr * s1 * (y - m2) / s2
        cs = s1 * math.sqrt(1 - corr * corr)
        px = special.ndtr((self.upper[0] - cm) / cs) - special.ndtr((self.lower[0] - cm) / cs)
        dens = np.exp(-0.5 * ((y - m2) / s2) ** 2) / (s2 * math.sqrt(2 * math.pi))
        mass = float(np.sum(w * dens * px))
        return math.log(mass) if mass > 0 else -math.inf

    def logpdf(self, x) -> float:
        """Log density of the truncated distribution at a single point."""
        x = np.asarray(x, dtype=float)
        if not self.contains(x)[0]:
            return -math.inf
        return self.untruncated_logpdf(x) - self.log_mass()

    def untruncated_logpdf(self, x) -> float:
        d = np.asarray(x, dtype=float) - np.asarray(self.mean)
        sol = np.linalg.solve(self._chol, d)
        return float(
            -0.5 * sol @ sol - np.log(np.diag(self._chol)).sum() - math.log(2 * math.pi)
        )
