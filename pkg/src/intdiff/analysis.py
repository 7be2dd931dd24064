"""Monte-Carlo error metrics, conditional-moment checks and theoretical rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConditionNotApplicableError, InvalidEstimateError, ParameterError
from .estimators import ESTIMATOR_TAGS, EstimateCurve
from .sde import SdeModel, make_rng, run_euler_batch

# bias allowance for the O(delta) remainder in the moment identities
C_BIAS = 5.0


@dataclass(frozen=True)
class MaaeReport:
    maae: float
    per_replication_max_err: np.ndarray
    n: int | None = None
    delta: float | None = None
    h: float | None = None
    estimator_tag: str | None = None
    nan_count: int = 0


def maae(
    replicated_curves: Sequence[EstimateCurve],
    truth: Callable,
    *,
    n: int | None = None,
    delta: float | None = None,
    estimator_tag: str | None = None,
) -> MaaeReport:
    """Mean over replications of the maximum absolute error on the grid.

    Raises
    ------
    InvalidEstimateError
        If any curve holds a NaN; names the first offending (replication, point).
    """
    curves = list(replicated_curves)
    if not curves:
        raise ParameterError("need at least one replication")
    if estimator_tag is not None and estimator_tag not in ESTIMATOR_TAGS:
        raise ParameterError(f"unknown estimator tag {estimator_tag!r}")
    pts = np.asarray(curves[0].eval_points, dtype=float)
    target = np.asarray(truth(pts), dtype=float) * np.ones_like(pts)
    errs = np.empty(len(curves))
    for k, c in enumerate(curves):
        cp = np.asarray(c.eval_points, dtype=float)
        if cp.shape != pts.shape or not np.array_equal(cp, pts):
            raise ParameterError(f"replication {k} uses a different evaluation grid")
        v = np.asarray(c.values, dtype=float)
        bad = np.flatnonzero(np.isnan(v))
        if bad.size:
            raise InvalidEstimateError(k, int(bad[0]), float(pts[bad[0]]))
        errs[k] = np.max(np.abs(v - target))
    value = math.fsum(errs.tolist()) / len(errs)
    return MaaeReport(value, errs, n, delta, curves[0].h, estimator_tag, 0)


def eval_grid(lo: float, hi: float, n_points: int) -> np.ndarray:
    """``n_points`` equidistant points on ``[lo, hi]``, endpoints included."""
    if not lo < hi:
        raise ParameterError(f"degenerate range [{lo}, {hi}]")
    if n_points < 2:
        raise ParameterError("n_points must be at least 2")
    return np.linspace(lo, hi, int(n_points))


@dataclass(frozen=True)
class RateParams:
    """Exponents entering the uniform rates and the mixing-decay conditions.

    q
        moment exponent (``E|X|^(2+q) < inf``)
    theta, kappa_exp
        exponents of the squared-diffusion result, ``theta`` in (0, 1) and
        ``kappa_exp`` in (0, 1/2)
    theta_bar, kappa_bar
        exponents of the drift result
    beta_mix
        polynomial decay exponent of the mixing coefficients
    """

    q: float = 38.0
    theta: float = 0.4
    kappa_exp: float = 0.4
    theta_bar: float = 0.5
    kappa_bar: float = 0.4
    beta_mix: float = 20.0

    def __post_init__(self):
        checks = [
            ("q", self.q > 0 and math.isfinite(self.q)),
            ("theta", 0 < self.theta < 1),
            ("kappa_exp", 0 < self.kappa_exp < 0.5),
            ("theta_bar", 0 < self.theta_bar < 1),
            ("kappa_bar", self.kappa_bar > 0 and math.isfinite(self.kappa_bar)),
            ("beta_mix", self.beta_mix > 0 and math.isfinite(self.beta_mix)),
        ]
        for name, ok in checks:
            if not ok:
                raise ParameterError(f"{name}={getattr(self, name)!r} outside its admissible range")


def rate_remark2(n: int) -> float:
    """``((ln n)^3 / n)^(2/5)``, the optimised squared-diffusion rate."""
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    return (math.log(n) ** 3 / n) ** 0.4


def rate_diffusion_terms(delta: float, h: float, n: int, params: RateParams) -> tuple[float, float, float]:
    """Discretisation, variance and smoothing terms of the squared-diffusion rate."""
    if not isinstance(params, RateParams):
        raise ParameterError("params must be a RateParams")
    if delta < 0 or not h > 0 or n < 2:
        raise ParameterError(f"invalid arguments delta={delta}, h={h}, n={n}")
    disc = delta * h ** (-1.0 / (1.0 + params.q))
    var = math.sqrt(math.log(n) ** 3 / (n * h))
    return disc, var, h * h


def rate_diffusion(delta: float, h: float, n: int, params: RateParams) -> float:
    """``delta h^(-1/(1+q)) + sqrt((ln n)^3 / (n h)) + h^2``."""
    return sum(rate_diffusion_terms(delta, h, n, params))


def rate_drift_terms(delta: float, h: float, t_horizon: float, params: RateParams) -> tuple[float, float, float]:
    if not isinstance(params, RateParams):
        raise ParameterError("params must be a RateParams")
    if not t_horizon > 1.0:
        raise ParameterError(f"t_horizon must exceed 1 so that log T > 0, got {t_horizon}")
    if delta < 0 or not h > 0:
        raise ParameterError(f"invalid arguments delta={delta}, h={h}")
    disc = delta ** (0.5 - 1.0 / (2.0 + params.q))
    var = math.sqrt(math.log(t_horizon) / (t_horizon**params.theta_bar * h))
    return disc, var, h * h


def rate_drift(delta: float, h: float, t_horizon: float, params: RateParams) -> float:
    """``delta^(1/2 - 1/(2+q)) + sqrt(ln T / (T^theta_bar h)) + h^2``."""
    return sum(rate_drift_terms(delta, h, t_horizon, params))


def beta_bound_diffusion(params: RateParams) -> float:
    """Smallest mixing exponent the squared-diffusion rate tolerates (strict bound)."""
    th, ka, q = params.theta, params.kappa_exp, params.q
    gap = 1.0 - th - ka
    if not gap > 0:
        raise ConditionNotApplicableError(f"1 - theta - kappa = {gap} is not positive")
    return max((2.0 + 3.0 * th) / gap, (2.0 + 1.0 / (2.0 + q)) / (1.0 - 2.0 * ka))


def beta_bound_drift(params: RateParams) -> float:
    """Smallest mixing exponent the drift rate tolerates (strict bound)."""
    tb, kb, q = params.theta_bar, params.kappa_bar, params.q
    gap = 1.0 - (1.0 + 4.0 / q) * tb - 2.0 * kb / q
    if not gap > 0:
        raise ConditionNotApplicableError(f"1 - (1 + 4/q) theta_bar - 2 kappa_bar / q = {gap} is not positive")
    return max((1.5 + tb + kb) / gap - 2.0, (2.0 + 1.0 / (2.0 + q)) * tb / (1.0 - tb))


def check_beta_conditions(params: RateParams) -> tuple[bool, bool]:
    """Whether ``beta_mix`` satisfies the squared-diffusion and drift conditions.

    Raises :class:`ConditionNotApplicableError` when a structural precondition
    fails, which is different from the condition being false.
    """
    return params.beta_mix > beta_bound_diffusion(params), params.beta_mix > beta_bound_drift(params)


@dataclass(frozen=True)
class MomentCheckReport:
    x0: float
    mc_estimate: float
    mc_stderr: float
    target: float
    delta: float
    replications: int

    def tolerance(self, c_bias: float = C_BIAS) -> float:
        return 4.0 * self.mc_stderr + c_bias * self.delta * (1.0 + abs(self.target))

    def passes(self, c_bias: float = C_BIAS) -> bool:
        return abs(self.mc_estimate - self.target) <= self.tolerance(c_bias)


def _proxy_increments(model, x0, delta, fine_factor, reps, seed):
    if reps < 100:
        raise ParameterError("reps must be at least 100")
    if fine_factor < 1:
        raise ParameterError("fine_factor must be >= 1")
    dt = delta / fine_factor
    z = make_rng(seed).standard_normal((reps, 2 * fine_factor))
    _, y = run_euler_batch(model, x0, dt, z)
    first = y[:, fine_factor] / delta
    second = (y[:, 2 * fine_factor] - y[:, fine_factor]) / delta
    return second - first


def _report(x0, stat, target, delta):
    reps = len(stat)
    mean = math.fsum(stat.tolist()) / reps
    stderr = float(np.std(stat, ddof=1)) / math.sqrt(reps)
    return MomentCheckReport(float(x0), mean, stderr, float(target), float(delta), reps)


def moment_check_diffusion(
    model: SdeModel,
    x0: float,
    delta: float,
    fine_factor: int = 10,
    reps: int = 100_000,
    seed: int = 0,
    *,
    factor: float = 2.0 / 3.0,
) -> MomentCheckReport:
    """Monte-Carlo mean of the squared proxy increment over ``delta``, started at ``x0``.

    The target is ``factor * sigma^2(x0)``; ``factor`` exists for negative controls.
    """
    d = _proxy_increments(model, x0, delta, fine_factor, reps, seed)
    return _report(x0, d * d / delta, factor * float(model.sigma2_true(x0)), delta)


def moment_check_drift(
    model: SdeModel,
    x0: float,
    delta: float,
    fine_factor: int = 10,
    reps: int = 100_000,
    seed: int = 0,
) -> MomentCheckReport:
    """Monte-Carlo mean of the proxy increment over ``delta``, targeting ``b(x0)``."""
    d = _proxy_increments(model, x0, delta, fine_factor, reps, seed)
    return _report(x0, d / delta, float(model.drift(x0)), delta)


def integrated_variance_factor(fine_factor: int) -> float:
    """``E[(breve_{i+1} - breve_i)^2] / (sigma^2 delta)`` for a locally Brownian path.

    With ``Y`` accumulated by left-Riemann sums over ``M`` fine steps per
    observation interval the factor is ``2/3 + 1/(3 M^2)``; it tends to the
    continuous-time value 2/3. ``M = 1`` gives 1, so the 3/2-corrected
    estimator then overshoots by 50%.
    """
    m = int(fine_factor)
    if m < 1:
        raise ParameterError("fine_factor must be >= 1")
    return 2.0 / 3.0 + 1.0 / (3.0 * m * m)


def rate_fit(maae_values, rate_values) -> tuple[float, float, float]:
    """Least-squares line ``maae ~ slope * rate + intercept`` and Pearson correlation."""
    y = np.asarray(maae_values, dtype=float)
    x = np.asarray(rate_values, dtype=float)
    if y.shape != x.shape or y.ndim != 1:
        raise ParameterError("maae_values and rate_values must be 1-d and of equal length")
    if len(x) < 3:
        raise ParameterError("need at least 3 points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterError("non-finite input")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ParameterError("rate_values are all equal")
    syy = float(yc @ yc)
    sxy = float(xc @ yc)
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    corr = 0.0 if syy == 0.0 else sxy / math.sqrt(sxx * syy)
    return slope, intercept, corr
