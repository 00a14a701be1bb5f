"""Recover (beta, gamma) from peak prevalence or peak incidence data.

The incidence inversion solves the two-equation system

    beta S(tau*) I(tau*)                                   = PIV
    -(S0 + I0) + gamma tau* + 2 S0 exp(-beta tau*) - 1/rho = 0

in (log beta, log gamma). The four methods differ only in how they turn the
observed peak week PIT into a position on the tau axis; from there one
weekly removal step is undone (tau* + I(tau*) = tau(PIT)) so that the
forward map of the solution lands exactly on PIT.
"""

from __future__ import annotations

import enum
import functools
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import _numerics as nm
from .peak_forward import PeakIncidence, PeakPrevalence, peak_incidence
from .sir_core import InitialConditions, SirParams

PIT_WINDOW = (1.0, 35.0)
SEED_RHO_S0 = np.geomspace(1.1, 4.0, 5)
NEWTON_TOL = 1e-10
NEWTON_MAXITER = 200
FEASIBILITY_MARGIN = 1.25
BRANCH_SCAN_POINTS = 60
PROBES = 4


class InfeasiblePeakError(ValueError):
    """No SIR curve with the given initial conditions attains the requested peak."""


class InverseConvergenceError(RuntimeError):
    """The outer solver did not reach the residual tolerance."""

    def __init__(self, message, best_params=None, best_residuals=None):
        super().__init__(message)
        self.best_params = best_params
        self.best_residuals = best_residuals


class InverseMethod(enum.Enum):
    COMPUTE_INTEGRAL = "compute-integral"
    TAYLOR = "taylor"
    SINGLE_ODE = "single-ode"
    FULL_ODE = "full-ode"

    @property
    def code(self) -> int:
        return _CODES[self]

    @classmethod
    def parse(cls, value) -> "InverseMethod":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "computeintegral": "compute-integral",
            "integral": "compute-integral",
            "taylorapprox": "taylor",
            "singleode": "single-ode",
            "fullode": "full-ode",
        }
        key = aliases.get(key.replace("-", ""), key)
        return cls(key)


_CODES = {
    InverseMethod.COMPUTE_INTEGRAL: nm.COMPUTE_INTEGRAL,
    InverseMethod.TAYLOR: nm.TAYLOR,
    InverseMethod.SINGLE_ODE: nm.SINGLE_ODE,
    InverseMethod.FULL_ODE: nm.FULL_ODE,
}


@dataclass(frozen=True)
class InverseResult:
    params: SirParams
    residual_piv: float
    residual_pit: float
    iterations: int
    wall_time: float
    method: InverseMethod
    slope_residual: float = 0.0
    value_residual: float = 0.0
    tau_star: float = math.nan
    n_converged: int = 0


# ---------------------------------------------------------------------------
# prevalence
# ---------------------------------------------------------------------------

def prevalence_to_params(peak: PeakPrevalence, init: InitialConditions) -> SirParams:
    """(PPV, PPT) -> (beta, gamma) for fixed initial conditions.

    x = log(rho S0) solves log1p(x) - x = log(1 - (PPV - I0)/S0) on x > 0 (the
    epidemic branch), and beta * PPT is the time integral up to x evaluated
    at beta = 1, gamma = 1/rho.
    """
    ppv, ppt = peak.ppv, peak.ppt
    if not (init.i < ppv < 1.0):
        raise InfeasiblePeakError(f"ppv={ppv} must lie in (i0={init.i}, 1)")
    if not ppt > 0:
        raise InfeasiblePeakError("ppt must be positive")
    if not ppv < init.s + init.i:
        raise InfeasiblePeakError("ppv exceeds S0 + I0; no epidemic-branch root")
    lb, lg, ok = nm.prevalence_inverse(ppv, ppt, init.s, init.i)
    if not ok:
        raise InfeasiblePeakError("ppv too close to i0 to resolve an epidemic")
    return SirParams(beta=math.exp(lb), gamma=math.exp(lg))


# ---------------------------------------------------------------------------
# incidence
# ---------------------------------------------------------------------------

def _exact_weekly_time(beta: float, rho: float, s0: float, i0: float) -> float:
    """Calendar time of the incidence peak week for (beta, beta/rho); nan if undefined."""
    piv, pit, _, boundary = nm.forward_incidence(s0, i0, beta, beta / rho)
    return math.nan if boundary else pit


@functools.lru_cache(maxsize=4096)
def _attainable_piv(s0: float, i0: float, pit: float) -> float:
    """Coarse-grid supremum of peak incidence among SIR curves peaking at ``pit``."""
    lo = max(1.01, 1.01 * s0 / max(s0 - i0, 1e-12))
    best = 0.0
    for rho_s0 in np.geomspace(lo, 100.0, 30):
        rho = rho_s0 / s0

        def f(lb):
            t = _exact_weekly_time(math.exp(lb), rho, s0, i0)
            return (t - pit) if math.isfinite(t) else -pit

        a, b = math.log(1e-3), math.log(1e3)
        fa, fb = f(a), f(b)
        if not (fa > 0 > fb):
            continue
        lb = optimize.brentq(f, a, b, xtol=1e-8)
        piv, _, _, boundary = nm.forward_incidence(s0, i0, math.exp(lb), math.exp(lb) / rho)
        if not boundary:
            best = max(best, piv)
    return best


def attainable_peak_incidence(init: InitialConditions, pit: float) -> float:
    """Largest PIV found on a coarse reproduction-number grid for peak week ``pit``."""
    return _attainable_piv(round(init.s, 12), round(init.i, 12), round(float(pit), 12))


def _choose(candidates: np.ndarray, tol: float):
    """Smallest residual (converged solutions tie), then smallest beta."""
    order = sorted(
        range(len(candidates)),
        key=lambda k: (
            0.0 if candidates[k, 2] < tol else candidates[k, 2],
            candidates[k, 0],
        ),
    )
    return candidates[order[0]]


def _principal_root(code, cand, piv, pit, s0, i0, r0, as_printed, tol):
    """Start for the smallest-beta root when the seeds may have missed it.

    Along x = log(rho S0) the smallest-beta root is the largest sign change
    of the scalar residual. If the seeds converged somewhere, a few probes
    above that x decide whether a larger root can exist; otherwise, or when
    a probe changes sign, the full downward scan runs.
    """
    ok = cand[:, 2] < tol
    if ok.any():
        lb, lg = cand[ok][np.argmin(cand[ok, 0]), :2]
        x0 = lb - lg + math.log(s0)
        hi = nm.BRANCH_X_MAX
        if x0 < hi:
            fs = [nm.branch_residual(code, x0 + (hi - x0) * (k / (PROBES + 1.0)) ** 2,
                                     piv, pit, s0, i0, r0, as_printed)[0]
                  for k in range(1, PROBES + 1)]
            fs.append(nm.branch_residual(code, hi, piv, pit, s0, i0, r0, as_printed)[0])
            if all(f > 0 for f in fs):
                return None
    lb, lg, _, found = nm.solve_branch(code, piv, pit, s0, i0, r0, as_printed, np.nan,
                                       BRANCH_SCAN_POINTS)
    return (lb, lg) if found else None


def _nelder_mead(code, start, piv, pit, s0, i0, r0, as_printed):
    def obj(x):
        r1, r2, _, ok = nm.inverse_residual(code, x[0], x[1], piv, pit, s0, i0, r0, as_printed)
        return r1 * r1 + r2 * r2 if ok else 1e10

    res = optimize.minimize(
        obj, np.asarray(start, float), method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-26, "maxiter": 4000},
    )
    return res.x, int(res.nit)


@functools.lru_cache(maxsize=None)
def warmup() -> None:
    """Compile the solver kernels once so that timed calls exclude JIT cost."""
    init = InitialConditions(0.9, 0.05, 0.05)
    peak = peak_incidence(init, SirParams(1.137, 0.446))
    for method in InverseMethod:
        for printed in (False, True):
            try:
                incidence_to_params(peak, init, method, taylor_as_printed=printed, check_feasible=False)
            except (ValueError, RuntimeError):
                pass


def incidence_to_params(
    peak: PeakIncidence,
    init: InitialConditions,
    method: InverseMethod | str = InverseMethod.COMPUTE_INTEGRAL,
    *,
    taylor_as_printed: bool = False,
    check_feasible: bool = True,
    pit_window: tuple[float, float] = PIT_WINDOW,
    tol: float = NEWTON_TOL,
    maxiter: int = NEWTON_MAXITER,
    exhaustive: bool = True,
) -> InverseResult:
    """(PIV, PIT) -> (beta, gamma) with the chosen time-map method.

    The system can have further roots near the epidemic threshold with very
    large beta and gamma (a fast, low-prevalence epidemic). Every seed is run,
    together with a downward scan in log(rho S0) for the largest sign change,
    and the smallest-beta converged root is returned, which makes the map a
    function. ``exhaustive=False`` stops at the first converged seed instead.
    """
    method = InverseMethod.parse(method)
    piv, pit = float(peak.piv), float(peak.pit)
    s0, i0, r0 = init.s, init.i, init.r
    if not (math.isfinite(piv) and 0.0 < piv < 1.0):
        raise InfeasiblePeakError(f"piv={piv} must lie in (0, 1)")
    if not (pit_window[0] < pit < pit_window[1]):
        raise InfeasiblePeakError(f"pit={pit} is outside the window {pit_window}")
    if check_feasible:
        sup = attainable_peak_incidence(init, pit)
        if piv > FEASIBILITY_MARGIN * sup:
            raise InfeasiblePeakError(
                f"piv={piv} exceeds the attainable peak incidence (~{sup:.4g}) for pit={pit}"
            )

    code = method.code
    t0 = time.perf_counter()
    cand = nm.solve_multistart(
        code, SEED_RHO_S0, piv, pit, s0, i0, r0, taylor_as_printed, tol, maxiter, not exhaustive
    )
    if exhaustive:
        root = _principal_root(code, cand, piv, pit, s0, i0, r0, taylor_as_printed, tol)
        if root is not None:
            lb, lg, nrm, its, ok = nm.newton_solve(
                code, root[0], root[1], piv, pit, s0, i0, r0, taylor_as_printed, tol, maxiter
            )
            cand = np.vstack([cand, [lb, lg, nrm, its, 1.0 if ok else 0.0]])
    iterations = int(cand[:, 3].sum())
    converged = cand[:, 4] > 0
    best = _choose(cand, tol)
    if best[2] >= tol:
        start = best[:2] if np.isfinite(best[2]) else nm.seed_guess(2.0, piv, pit, s0, i0)
        x, nit = _nelder_mead(code, start, piv, pit, s0, i0, r0, taylor_as_printed)
        lb, lg, nrm, its, ok = nm.newton_solve(
            code, x[0], x[1], piv, pit, s0, i0, r0, taylor_as_printed, tol, maxiter
        )
        iterations += nit + its
        if nrm < best[2]:
            best = np.array([lb, lg, nrm, its, 1.0 if ok else 0.0])
    wall = time.perf_counter() - t0

    lb, lg = float(best[0]), float(best[1])
    r1, r2, tau_a, ok = nm.inverse_residual(code, lb, lg, piv, pit, s0, i0, r0, taylor_as_printed)
    if not (best[2] < tol and ok):
        raise InverseConvergenceError(
            f"{method.value}: residual norm {best[2]:.3g} after {iterations} iterations",
            best_params=(math.exp(lb), math.exp(lg)),
            best_residuals=(r1, r2),
        )
    params = SirParams(beta=math.exp(lb), gamma=math.exp(lg))
    fwd = peak_incidence(init, params)
    return InverseResult(
        params=params,
        residual_piv=fwd.piv - piv,
        residual_pit=fwd.pit - pit,
        iterations=iterations,
        wall_time=wall,
        method=method,
        slope_residual=float(r2),
        value_residual=float(r1),
        tau_star=float(tau_a),
        n_converged=int(converged.sum()),
    )
