"""Euler-Maruyama simulation of a scalar diffusion and its time integral.

The latent state follows ``dX = b(X) dt + sigma(X) dW`` and only
``Y_t = int_0^t X_s ds`` is observed, at spacing ``delta``. Paths are produced on
a fine grid ``dt = delta / M`` and then subsampled.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend
from .errors import DivergenceError, GridMismatchError, InsufficientDataError, ParameterError

POSITIVITY_SCHEMES = ("none", "full_truncation")


@dataclass(frozen=True)
class SdeModel:
    """Scalar diffusion ``dX = drift(X) dt + diffusion(X) dW``.

    ``drift`` and ``diffusion`` must accept floats and numpy arrays. When
    ``affine`` is set to ``(kappa, theta, sigma, sqrt_diffusion)`` the model is
    ``kappa (theta - x) dt + sigma x^p dW`` with ``p = 1/2`` if ``sqrt_diffusion``
    else ``0``, and simulation goes through the compiled stepper.
    """

    drift: Callable
    diffusion: Callable
    domain_lo: float = -math.inf
    domain_hi: float = math.inf
    positivity_scheme: str = "none"
    name: str = "custom"
    params: dict = field(default_factory=dict)
    affine: tuple | None = None
    _sigma2: Callable | None = None

    def __post_init__(self):
        if self.positivity_scheme not in POSITIVITY_SCHEMES:
            raise ParameterError(f"unknown positivity scheme {self.positivity_scheme!r}")

    @property
    def drift_true(self):
        return self.drift

    def sigma2_true(self, x):
        if self._sigma2 is not None:
            return self._sigma2(x)
        d = self.diffusion(x)
        return d * d

    def in_domain(self, x: float) -> bool:
        # the closed lower end is allowed for truncated schemes (CIR may sit at 0)
        if self.positivity_scheme == "full_truncation":
            return self.domain_lo <= x < self.domain_hi
        return self.domain_lo < x < self.domain_hi


def _positive(name, value):
    value = float(value)
    if not value > 0.0 or not math.isfinite(value):
        raise ParameterError(f"{name} must be positive and finite, got {value!r}")
    return value


def make_cir_model(kappa: float, theta: float, sigma: float) -> SdeModel:
    """Cox-Ingersoll-Ross: ``dX = kappa (theta - X) dt + sigma sqrt(X) dW``."""
    kappa = _positive("kappa", kappa)
    theta = _positive("theta", theta)
    sigma = _positive("sigma", sigma)
    s2 = sigma * sigma

    def drift(x):
        return kappa * (theta - x)

    def diffusion(x):
        return sigma * np.sqrt(np.maximum(x, 0.0))

    def sigma2(x):
        return s2 * np.maximum(x, 0.0)

    return SdeModel(
        drift,
        diffusion,
        domain_lo=0.0,
        domain_hi=math.inf,
        positivity_scheme="full_truncation",
        name="cir",
        params={"kappa": kappa, "theta": theta, "sigma": sigma},
        affine=(kappa, theta, sigma, True),
        _sigma2=sigma2,
    )


def make_ou_model(kappa: float, theta: float, sigma: float) -> SdeModel:
    """Ornstein-Uhlenbeck: ``dX = kappa (theta - X) dt + sigma dW``."""
    kappa = _positive("kappa", kappa)
    theta = float(theta)
    if not math.isfinite(theta):
        raise ParameterError("theta must be finite")
    sigma = _positive("sigma", sigma)
    s2 = sigma * sigma

    def drift(x):
        return kappa * (theta - x)

    def diffusion(x):
        return sigma + 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else sigma

    def sigma2(x):
        return s2 + 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else s2

    return SdeModel(
        drift,
        diffusion,
        name="ou",
        params={"kappa": kappa, "theta": theta, "sigma": sigma},
        affine=(kappa, theta, sigma, False),
        _sigma2=sigma2,
    )


def make_model(kind: str, kappa: float, theta: float, sigma: float) -> SdeModel:
    kind = kind.lower()
    if kind == "cir":
        return make_cir_model(kappa, theta, sigma)
    if kind == "ou":
        return make_ou_model(kappa, theta, sigma)
    raise ParameterError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class FinePath:
    dt: float
    x: np.ndarray
    y: np.ndarray
    seed: int

    @property
    def n_steps(self) -> int:
        return len(self.x) - 1


@dataclass(frozen=True)
class ObservationSet:
    delta: float
    y_obs: np.ndarray
    x_obs: np.ndarray | None
    n: int
    t_horizon: float


def hash64(master_seed: int, *keys) -> int:
    """Stable 64-bit seed derived from a master seed and any number of keys.

    Keys are ints, floats or strings; floats are hashed by their exact bit
    pattern so that ``0.1`` and ``0.1000000001`` never collide.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", int(master_seed) & 0xFFFFFFFFFFFFFFFF))
    for key in keys:
        if isinstance(key, bool) or isinstance(key, (int, np.integer)):
            h.update(b"i" + struct.pack("<q", int(key)))
        elif isinstance(key, (float, np.floating)):
            h.update(b"f" + struct.pack("<d", float(key)))
        else:
            h.update(b"s" + str(key).encode("utf-8") + b"\0")
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def integer_ratio(num: float, den: float, what: str = "ratio") -> int:
    """``num / den`` as an integer, or raise :class:`GridMismatchError`.

    Accepts a relative discrepancy up to 1e-9, which tolerates decimal inputs
    such as ``0.3 / 0.1`` whose binary quotient is not exactly integral.
    """
    r = num / den
    k = round(r)
    if k < 1 or abs(r - k) > 1e-9 * max(1.0, abs(r)):
        raise GridMismatchError(f"{what}: {num!r} is not an integer multiple of {den!r}")
    return int(k)


def _run_generic(model: SdeModel, x0: float, dt: float, z: np.ndarray, trapezoid: bool):
    m = len(z)
    x = np.empty(m + 1)
    y = np.empty(m + 1)
    x[0] = x0
    y[0] = 0.0
    sqdt = math.sqrt(dt)
    truncate = model.positivity_scheme == "full_truncation"
    drift, diffusion = model.drift, model.diffusion
    xk = float(x0)
    yk = 0.0
    for k in range(m):
        xt = 0.0 if (truncate and xk < 0.0) else xk
        assert not truncate or xt >= 0.0
        xn = float(xk + drift(xk) * dt + diffusion(xt) * sqdt * z[k])
        if not math.isfinite(xn):
            raise DivergenceError(k, xn)
        if trapezoid:
            yk = yk + 0.5 * (xk + xn) * dt
        else:
            yk = yk + xk * dt
        x[k + 1] = xn
        y[k + 1] = yk
        xk = xn
    return x, y


def run_euler(model: SdeModel, x0: float, dt: float, z, trapezoid: bool = False):
    """Step the model over the supplied standard normals; returns ``(x, y)``."""
    z = np.ascontiguousarray(z, dtype=float)
    if model.affine is None:
        return _run_generic(model, x0, dt, z, trapezoid)
    kappa, theta, sigma, sqrt_diff = model.affine
    truncate = model.positivity_scheme == "full_truncation"
    x, y, bad = _backend.euler_affine(
        float(x0), kappa, theta, sigma, sqrt_diff, truncate, float(dt), z, trapezoid
    )
    if bad >= 0:
        raise DivergenceError(bad)
    return x, y


def euler_simulate(
    model: SdeModel,
    x0: float,
    t_end: float,
    dt: float,
    seed: int,
    *,
    trapezoid: bool = False,
) -> FinePath:
    """Simulate one Euler-Maruyama path of ``(X, Y)`` on ``[0, t_end]``.

    ``Y`` is accumulated by the left-Riemann rule ``y[k+1] = y[k] + x[k] dt``
    unless ``trapezoid`` is set.

    Raises
    ------
    DivergenceError
        If the state becomes non-finite; carries the step index.
    """
    if not dt > 0.0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if not t_end >= dt:
        raise ParameterError(f"t_end must be at least dt, got t_end={t_end!r}, dt={dt!r}")
    if not model.in_domain(float(x0)):
        raise ParameterError(f"x0={x0!r} outside model domain ({model.domain_lo}, {model.domain_hi})")
    m = integer_ratio(t_end, dt, "t_end/dt")
    z = make_rng(seed).standard_normal(m)
    x, y = run_euler(model, x0, dt, z, trapezoid)
    return FinePath(float(dt), x, y, int(seed))


def subsample(path: FinePath, delta: float, with_x: bool = True, offset: int = 0) -> ObservationSet:
    """Observe the path every ``delta`` time units, starting at fine index ``offset``.

    ``Y`` is re-based so that ``y_obs[0] = 0`` at the first observation.
    """
    M = integer_ratio(delta, path.dt, "delta/dt")
    m = path.n_steps - offset
    n = m // M
    if n < 3:
        raise InsufficientDataError(f"only {n} observation intervals; need at least 3")
    idx = offset + M * np.arange(n + 1)
    y_obs = path.y[idx]
    if offset:
        y_obs = y_obs - path.y[offset]
    x_obs = path.x[idx].copy() if with_x else None
    return ObservationSet(float(delta), y_obs, x_obs, int(n), n * float(delta))


def fine_factor_for(delta: float, fine_factor: int = 10, fine_step: float | None = None) -> int:
    """Number of fine steps per observation interval."""
    if fine_step is not None:
        return integer_ratio(delta, fine_step, "delta/fine_step")
    if int(fine_factor) < 1:
        raise ParameterError("fine_factor must be >= 1")
    return int(fine_factor)


def simulate_observations(
    model: SdeModel,
    delta: float,
    n: int,
    seed: int,
    *,
    x0: float | None = None,
    fine_factor: int = 10,
    fine_step: float | None = None,
    burn_in: float = 0.0,
    with_x: bool = True,
    trapezoid: bool = False,
) -> ObservationSet:
    """Simulate and subsample ``n`` observation intervals after a discarded burn-in.

    The burn-in is rounded up to a whole number of observation intervals. When
    ``x0`` is omitted the path starts at ``params['theta']`` (the stationary mean
    of both shipped models).
    """
    if n < 3:
        raise InsufficientDataError(f"n={n} observation intervals; need at least 3")
    M = fine_factor_for(delta, fine_factor, fine_step)
    dt = delta / M
    if x0 is None:
        x0 = model.params["theta"]
    nb = math.ceil(burn_in / delta - 1e-9) if burn_in > 0 else 0
    z = make_rng(seed).standard_normal((nb + n) * M)
    x, y = run_euler(model, x0, dt, z, trapezoid)
    return subsample(FinePath(dt, x, y, int(seed)), delta, with_x, offset=nb * M)


def run_euler_batch(model: SdeModel, x0, dt: float, z: np.ndarray):
    """Vectorised Euler over independent paths; ``z`` has shape ``(reps, steps)``.

    Same per-step arithmetic as :func:`run_euler`. Returns ``(x_end, y)`` where
    ``y`` has shape ``(reps, steps + 1)``.
    """
    reps, steps = z.shape
    truncate = model.positivity_scheme == "full_truncation"
    sqdt = math.sqrt(dt)
    x = np.full(reps, x0, dtype=float)
    y = np.zeros((reps, steps + 1))
    for k in range(steps):
        xt = np.maximum(x, 0.0) if truncate else x
        xn = x + model.drift(x) * dt + model.diffusion(xt) * sqdt * z[:, k]
        bad = ~np.isfinite(xn)
        if bad.any():
            raise DivergenceError(k, float(xn[np.argmax(bad)]))
        y[:, k + 1] = y[:, k] + x * dt
        x = xn
    return x, y
