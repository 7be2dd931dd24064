"""Nadaraya-Watson estimators of drift and squared diffusion.

Two families:

* *integrated* estimators work from the difference-quotient proxy
  ``breve[i] = (Y_i - Y_{i-1}) / delta`` built from integrated observations.
  Kernel weights sit at ``breve[j-1]`` and responses use the next increment
  ``breve[j+1] - breve[j]``, for every ``j`` where the triple exists. The squared
  response carries a 3/2 factor that undoes the 2/3 variance shrinkage caused by
  averaging over an observation interval.
* *direct* estimators work from ``X`` sampled at the observation times, with
  weights at ``X_{i-1}`` and responses ``X_i - X_{i-1}``.

Every estimator returns an :class:`EstimateCurve`. Points whose empirical
density falls below ``1e-12 / h`` are NaN instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import BandwidthError, InsufficientDataError, ParameterError
from .kernels import KernelSpec, make_kernel
from .sde import ObservationSet

ESTIMATOR_TAGS = ("sigma2_integrated", "sigma2_direct", "drift_integrated", "drift_direct")


@dataclass(frozen=True)
class BreveSeries:
    values: np.ndarray
    delta: float

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class EstimateCurve:
    eval_points: np.ndarray
    values: np.ndarray
    denominators: np.ndarray
    h: float
    n_used: int


def eps_den(h: float) -> float:
    return 1e-12 / h


def compute_breve(obs: ObservationSet) -> BreveSeries:
    """Difference quotients of the integrated observations, one per interval."""
    y = np.asarray(obs.y_obs, dtype=float)
    if len(y) < 3:
        raise InsufficientDataError(f"need at least 2 observation intervals, got {len(y) - 1}")
    return BreveSeries(np.diff(y) / obs.delta, float(obs.delta))


def breve_from_values(values, delta: float) -> BreveSeries:
    """Wrap an existing proxy series (e.g. loaded from disk)."""
    return BreveSeries(np.asarray(values, dtype=float), float(delta))


def _prepare(h, eval_points):
    h = float(h)
    if not h > 0.0 or not np.isfinite(h):
        raise BandwidthError(f"bandwidth must be positive and finite, got {h!r}")
    pts = np.atleast_1d(np.asarray(eval_points, dtype=float))
    if pts.size == 0:
        raise ParameterError("empty evaluation grid")
    return h, pts


def nw_curve(weights_at, responses, delta: float, kernel, h: float, eval_points) -> EstimateCurve:
    """Generic N-W ratio ``sum K_h(w_j - x) r_j / (delta * sum K_h(w_j - x))``.

    ``denominators`` holds the empirical density ``(1/k) sum K_h(w_j - x)`` with
    ``k`` the number of summands.
    """
    spec: KernelSpec = make_kernel(kernel)
    h, pts = _prepare(h, eval_points)
    w = np.ascontiguousarray(weights_at, dtype=float)
    r = np.ascontiguousarray(responses, dtype=float)
    k = len(w)
    num, den = _backend.nw_sums(w, r, pts, h, spec.code)
    density = den / k
    with np.errstate(divide="ignore", invalid="ignore"):
        values = num / (delta * den)
    values[density < eps_den(h)] = np.nan
    return EstimateCurve(pts, values, density, h, k)


def _integrated_triples(breve: BreveSeries):
    v = np.asarray(breve.values, dtype=float)
    if len(v) < 3:
        raise InsufficientDataError(f"proxy series of length {len(v)}; need at least 3")
    return v[:-2], v[2:] - v[1:-1]


def nw_sigma2_integrated(breve: BreveSeries, kernel, h: float, eval_points) -> EstimateCurve:
    """Squared diffusion from integrated observations (3/2-corrected squared increments)."""
    w, d = _integrated_triples(breve)
    return nw_curve(w, 1.5 * (d * d), breve.delta, kernel, h, eval_points)


def nw_drift_integrated(breve: BreveSeries, kernel, h: float, eval_points) -> EstimateCurve:
    """Drift from integrated observations."""
    w, d = _integrated_triples(breve)
    return nw_curve(w, d, breve.delta, kernel, h, eval_points)


def _direct_pairs(x_obs):
    x = np.asarray(x_obs, dtype=float)
    if len(x) < 2:
        raise InsufficientDataError(f"{len(x)} direct observations; need at least 2")
    return x[:-1], np.diff(x)


def nw_sigma2_direct(x_obs, delta: float, kernel, h: float, eval_points) -> EstimateCurve:
    """Squared diffusion from direct observations of ``X``."""
    w, d = _direct_pairs(x_obs)
    return nw_curve(w, d * d, float(delta), kernel, h, eval_points)


def nw_drift_direct(x_obs, delta: float, kernel, h: float, eval_points) -> EstimateCurve:
    """Drift from direct observations of ``X``."""
    w, d = _direct_pairs(x_obs)
    return nw_curve(w, d, float(delta), kernel, h, eval_points)


def estimate(tag: str, obs: ObservationSet, kernel, h: float, eval_points, breve=None) -> EstimateCurve:
    """Dispatch on an estimator tag from :data:`ESTIMATOR_TAGS`."""
    if tag.endswith("_integrated"):
        breve = compute_breve(obs) if breve is None else breve
        fn = nw_sigma2_integrated if tag.startswith("sigma2") else nw_drift_integrated
        return fn(breve, kernel, h, eval_points)
    if tag.endswith("_direct"):
        if obs.x_obs is None:
            raise ParameterError(f"{tag} needs direct observations of X")
        fn = nw_sigma2_direct if tag.startswith("sigma2") else nw_drift_direct
        return fn(obs.x_obs, obs.delta, kernel, h, eval_points)
    raise ParameterError(f"unknown estimator tag {tag!r}")
