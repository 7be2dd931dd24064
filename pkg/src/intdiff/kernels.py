"""Compactly supported smoothing kernels and their scaled form ``K_h(z) = K(z/h)/h``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BandwidthError, ParameterError

KERNEL_KINDS = ("epanechnikov", "uniform", "triangular")

# integer codes understood by the compiled core
KIND_CODES = {"epanechnikov": 0, "uniform": 1, "triangular": 2}

_SUP_BOUND = {"epanechnikov": 0.75, "uniform": 0.5, "triangular": 1.0}
# documentation only; the uniform kernel is not Lipschitz at its edges
_LIPSCHITZ = {"epanechnikov": 1.5, "uniform": math.inf, "triangular": 1.0}


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric, nonnegative kernel supported on ``[-support_radius, support_radius]``.

    The shipped kinds all have unit support radius; ``support_radius`` and
    ``sup_bound`` are derived from ``kind`` by :func:`make_kernel`.
    """

    kind: str = "epanechnikov"
    support_radius: float = 1.0
    sup_bound: float = 0.75
    lipschitz: float = 1.5

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]


def make_kernel(kind: str | KernelSpec = "epanechnikov") -> KernelSpec:
    if isinstance(kind, KernelSpec):
        return kind
    kind = str(kind).lower()
    if kind not in KERNEL_KINDS:
        raise ParameterError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
    return KernelSpec(kind, 1.0, _SUP_BOUND[kind], _LIPSCHITZ[kind])


EPANECHNIKOV = make_kernel("epanechnikov")


def kernel_eval(spec: KernelSpec | str, u: float) -> float:
    """Evaluate the unscaled kernel at ``u``."""
    spec = make_kernel(spec)
    a = abs(u)
    if a > spec.support_radius:
        return 0.0
    if spec.kind == "epanechnikov":
        return 0.75 * (1.0 - u * u)
    if spec.kind == "uniform":
        return 0.5
    return 1.0 - a


def kernel_eval_array(spec: KernelSpec | str, u) -> np.ndarray:
    """Vectorised :func:`kernel_eval`, identical value for value."""
    spec = make_kernel(spec)
    u = np.asarray(u, dtype=float)
    a = np.abs(u)
    if spec.kind == "epanechnikov":
        out = 0.75 * (1.0 - u * u)
    elif spec.kind == "uniform":
        out = np.full_like(u, 0.5)
    else:
        out = 1.0 - a
    return np.where(a > spec.support_radius, 0.0, out)


def _check_bandwidth(h: float) -> float:
    h = float(h)
    if not h > 0.0 or not math.isfinite(h):
        raise BandwidthError(f"bandwidth must be positive and finite, got {h!r}")
    return h


def kernel_scaled(spec: KernelSpec | str, h: float, z: float) -> float:
    """``K(z/h)/h``."""
    h = _check_bandwidth(h)
    return kernel_eval(spec, z / h) / h


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    integral: float
    symmetry_defect: float
    second_moment: float
    quad_points: int

    @property
    def passed(self) -> bool:
        return abs(self.integral - 1.0) < 1e-9 and self.symmetry_defect < 1e-12


def _simpson(f, a: float, b: float, intervals: int) -> float:
    if intervals % 2:
        intervals += 1
    x = np.linspace(a, b, intervals + 1)
    y = f(x)
    step = (b - a) / intervals
    return float(step / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def validate_kernel(spec: KernelSpec | str, quad_points: int = 100_000) -> ValidationReport:
    """Numerically check normalisation, symmetry and the second moment.

    Composite Simpson on each half of the support; the split at zero keeps the
    triangular kernel's kink on a node.
    """
    spec = make_kernel(spec)
    if quad_points < 100:
        raise ParameterError("quad_points must be at least 100")
    c = spec.support_radius
    half = max(quad_points // 2, 50)

    def k(x):
        return kernel_eval_array(spec, x)

    def k2(x):
        return x * x * np.abs(kernel_eval_array(spec, x))

    integral = _simpson(k, -c, 0.0, half) + _simpson(k, 0.0, c, half)
    moment = _simpson(k2, -c, 0.0, half) + _simpson(k2, 0.0, c, half)
    u = np.linspace(0.0, 2.0 * c, quad_points)
    defect = float(np.max(np.abs(k(u) - k(-u))))
    return ValidationReport(spec.kind, integral, defect, moment, quad_points)
