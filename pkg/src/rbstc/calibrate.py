"""Threshold calibration for trigger-induced partitions.

The relative threshold sigma is a free parameter of the rule; published
inter-event-time bounds pin it down only implicitly. The crossing time of
every direction is monotone increasing in sigma, so the sampled minimum
inter-event time is too, and a bisection on sigma recovers the parameter that
reproduces a target tau_min.
"""

import numpy as np

from . import numkit
from .errors import CalibrationError, InvalidArgumentError
from .regions import DEFAULT_HORIZON, RelativeTrigger, sphere_samples

__all__ = ["calibrate_sigma"]


def _bounds_for_sigma(trig, X, norms):
    err, xn = norms
    crossed = err >= trig.sigma * xn
    crossed[0] = False
    any_cross = crossed.any(axis=0)
    first = np.argmax(crossed, axis=0)
    first_eff = first.copy()
    first_eff[~any_cross] = trig.grid.grid_points + 1
    lo = first_eff.min()
    hi_candidates = first[any_cross]
    if hi_candidates.size == 0:
        return trig.horizon, trig.horizon
    hi = hi_candidates.max()
    tmin = trig.horizon
    if lo <= trig.grid.grid_points:
        rows = np.where(first_eff == lo)[0]
        tmin = float(trig.grid.refine(X[rows], first[rows], trig.sigma).min())
    rows = np.where(any_cross & (first == hi))[0]
    tmax = float(trig.grid.refine(X[rows], first[rows], trig.sigma).max())
    if np.any(~any_cross):
        tmax = trig.horizon
    return tmin, tmax


def calibrate_sigma(sys, target_tau_min, target_tau_max=None,
                    horizon=DEFAULT_HORIZON, samples=2048, seed=0,
                    tol=numkit.DEFAULT_TOL, sigma_bracket=(1e-6, 1e3),
                    iterations=60, max_residual=0.20):
    """Bisection on sigma matching the sampled tau_min to target_tau_min.

    Returns a result dict with the calibrated sigma, achieved bounds and
    relative residuals. Raises CalibrationError when no sigma in the bracket
    lands within max_residual of the target.
    """
    if not (target_tau_min > 0):
        raise InvalidArgumentError("target tau_min must be positive")
    if target_tau_max is not None and not (target_tau_max > target_tau_min):
        raise InvalidArgumentError("target tau_max must exceed target tau_min")

    X = sphere_samples(sys.n, samples, [seed, 5])
    base = RelativeTrigger(sys, 1.0, horizon, tol=tol)
    norms = base.grid.flow_norms(X)

    def tmin_of(sigma):
        trig = RelativeTrigger(sys, sigma, horizon, tol=tol)
        return _bounds_for_sigma(trig, X, norms)

    lo, hi = sigma_bracket
    t_lo = tmin_of(lo)[0]
    t_hi = tmin_of(hi)[0]
    if t_lo > target_tau_min or t_hi < target_tau_min:
        # target outside the reachable range of the bracket; report best edge
        best_sigma, (best_min, best_max) = (
            (lo, tmin_of(lo)) if abs(t_lo - target_tau_min) <
            abs(t_hi - target_tau_min) else (hi, tmin_of(hi)))
        residual = abs(best_min - target_tau_min) / target_tau_min
        if residual > max_residual:
            raise CalibrationError(
                f"no sigma in [{lo:g}, {hi:g}] reaches tau_min "
                f"{target_tau_min:g} within {max_residual:.0%} "
                f"(best residual {residual:.1%} at sigma={best_sigma:g})")
        lo = hi = best_sigma
    for _ in range(iterations):
        mid = np.sqrt(lo * hi)  # sigma spans decades; bisect in log space
        if tmin_of(mid)[0] < target_tau_min:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-12:
            break
    sigma = float(np.sqrt(lo * hi))
    tmin, tmax = tmin_of(sigma)
    residual_min = abs(tmin - target_tau_min) / target_tau_min
    result = {
        "sigma": sigma,
        "achieved_tau_min": tmin,
        "achieved_tau_max": tmax,
        "target_tau_min": float(target_tau_min),
        "target_tau_max": (float(target_tau_max)
                           if target_tau_max is not None else None),
        "residual_tau_min": residual_min,
        "residual_tau_max": (abs(tmax - target_tau_max) / target_tau_max
                             if target_tau_max is not None else None),
        "samples": int(samples),
        "status": "ok" if residual_min <= max_residual else "failed",
    }
    if result["status"] == "failed":
        raise CalibrationError(
            f"calibration residual {residual_min:.1%} exceeds "
            f"{max_residual:.0%} (sigma={sigma:g})")
    return result
