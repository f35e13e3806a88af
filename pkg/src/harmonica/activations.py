"""Activation catalog and majorant series.

Each activation sigma gets the nonnegative series with coefficients
|sigma^(t)(0)| / t!, the kernel-side surrogate of the activation. The two
integral-form activations have closed-form Taylor coefficients:

  erf sigmoid   0.5 * (1 + erf(sqrt(pi) x)):
      c_0 = 1/2,  c_{2n+1} = (-1)^n pi^n / (n! (2n+1)),  even (>0) vanish.
  smooth hinge  x * erf(x) + exp(-pi x^2) / (2 pi):
      c_0 = 1/(2 pi),  odd vanish,
      c_{2n} = (-1)^{n-1} [ (2/sqrt(pi)) / ((n-1)! (2n-1)) - pi^{n-1} / (2 n!) ].

Both are cross-checked against a finite-difference oracle in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import UnsupportedActivationError
from .taylor import CoeffSeries, DEFAULT_ORDER, series_from

KINDS = ("exp", "square", "poly", "erf_sigmoid", "smooth_hinge", "custom",
         "identity", "geometric")


@dataclass(frozen=True)
class ActivationSpec:
    """An activation function by name, plus coefficients where required.

    ``poly``/``custom`` carry an explicit coefficient list (poly is meant for
    genuine polynomials, custom for arbitrary finite coefficient vectors such
    as truncated geometric series). ``identity`` is sugar for poly [0, 1],
    ``geometric`` for custom coefficients ratio^m.
    """

    kind: str
    coeffs: tuple = field(default=())
    ratio: float = field(default=0.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedActivationError(f"unknown activation {self.kind!r}")
        if self.kind in ("poly", "custom"):
            c = tuple(float(v) for v in self.coeffs)
            if not c or not all(math.isfinite(v) for v in c):
                raise ValueError(f"{self.kind} activation needs finite coefficients")
            object.__setattr__(self, "coeffs", c)
        if self.kind == "geometric" and not 0.0 < self.ratio < 1.0:
            raise ValueError("geometric activation needs ratio in (0, 1)")

    @property
    def universal_part(self) -> bool:
        """True when all derivatives at 0 are nonzero, the hypothesis under
        which the kernel is universal; recorded, never enforced."""
        if self.kind in ("exp", "geometric"):
            return True
        if self.kind in ("poly", "custom"):
            return False  # finite coefficient list always has zeros
        return False  # square / erf_sigmoid / smooth_hinge / identity have gaps


def activation(kind: str, coeffs=None, ratio=None) -> ActivationSpec:
    return ActivationSpec(kind, coeffs=tuple(coeffs or ()),
                          ratio=0.0 if ratio is None else float(ratio))


def _erf_sigmoid_coeffs(order: int) -> list[float]:
    c = [0.0] * (order + 1)
    c[0] = 0.5
    n = 0
    while 2 * n + 1 <= order:
        c[2 * n + 1] = (-1.0) ** n * math.pi ** n / (math.factorial(n) * (2 * n + 1))
        n += 1
    return c


def _smooth_hinge_coeffs(order: int) -> list[float]:
    c = [0.0] * (order + 1)
    c[0] = 1.0 / (2.0 * math.pi)
    n = 1
    while 2 * n <= order:
        a = (2.0 / math.sqrt(math.pi)) / (math.factorial(n - 1) * (2 * n - 1))
        b = math.pi ** (n - 1) / (2.0 * math.factorial(n))
        c[2 * n] = (-1.0) ** (n - 1) * (a - b)
        n += 1
    return c


def taylor_coeffs(spec: ActivationSpec, order: int) -> CoeffSeries:
    """Signed Taylor coefficients of sigma at 0 (may be negative)."""
    if spec.kind == "exp":
        return series_from([1.0 / math.factorial(m) for m in range(order + 1)])
    if spec.kind == "square":
        return series_from([0.0, 0.0, 1.0], order=max(order, 2))
    if spec.kind == "identity":
        return series_from([0.0, 1.0], order=max(order, 1))
    if spec.kind in ("poly", "custom"):
        return series_from(spec.coeffs, order=max(order, len(spec.coeffs) - 1))
    if spec.kind == "geometric":
        return series_from([spec.ratio ** m for m in range(order + 1)])
    if spec.kind == "erf_sigmoid":
        return series_from(_erf_sigmoid_coeffs(order))
    if spec.kind == "smooth_hinge":
        return series_from(_smooth_hinge_coeffs(order))
    raise UnsupportedActivationError(spec.kind)


def majorant_series(spec: ActivationSpec, order: int = DEFAULT_ORDER) -> CoeffSeries:
    """Nonnegative series |sigma^(t)(0)|/t! x^t truncated at ``order``."""
    signed = taylor_coeffs(spec, order)
    return series_from([abs(v) for v in signed.coeffs][: order + 1],
                       order=order, nonneg=True)


def evaluate(spec: ActivationSpec, x):
    """sigma(x) itself (not the majorant); vectorized over numpy arrays."""
    x = np.asarray(x, dtype=float)
    if spec.kind == "exp":
        out = np.exp(x)
    elif spec.kind == "square":
        out = x * x
    elif spec.kind == "identity":
        out = x + 0.0
    elif spec.kind in ("poly", "custom"):
        out = np.polynomial.polynomial.polyval(x, np.asarray(spec.coeffs))
    elif spec.kind == "geometric":
        out = 1.0 / (1.0 - spec.ratio * x)
    elif spec.kind == "erf_sigmoid":
        out = 0.5 * (1.0 + erf(math.sqrt(math.pi) * x))
    elif spec.kind == "smooth_hinge":
        out = x * erf(x) + np.exp(-math.pi * x * x) / (2.0 * math.pi)
    else:
        raise UnsupportedActivationError(spec.kind)
    return out if out.shape else float(out)
