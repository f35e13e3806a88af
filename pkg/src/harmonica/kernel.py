"""Construction and evaluation of the multi-layer kernel.

The kernel is g(sum_i f1(<x_i, y_i>)) with f1 the innermost majorant series
and g the composed chain of the outer majorants. Evaluation goes through the
scalar series; the spectral route lives in `spectrum` and the two are
cross-checked by the Mercer reconstruction tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .activations import ActivationSpec, majorant_series
from .errors import StructuralError
from .image import PatchedImage, stack_patches
from .taylor import (CoeffSeries, DEFAULT_L_MAX, compose_series, eval_series,
                     identity_series, series_from)


@dataclass(frozen=True)
class TruncationConfig:
    """Caps shared by the spectral machinery.

    k_max / a_max bound the lambda table, q_max bounds the outer expansion,
    s_tol stops the eigenvalue s-series, series_order is the coefficient
    truncation degree and l_max the composition depth.
    """

    k_max: int = 20
    a_max: int = 16
    q_max: int = 64
    s_tol: float = 1e-12
    series_order: int = 64
    l_max: int = DEFAULT_L_MAX

    @classmethod
    def from_dict(cls, doc: dict) -> "TruncationConfig":
        return cls(k_max=int(doc.get("K_max", 20)),
                   a_max=int(doc.get("A_max", 16)),
                   q_max=int(doc.get("Q_max", 64)),
                   s_tol=float(doc.get("s_tol", 1e-12)),
                   series_order=int(doc.get("order", 64)),
                   l_max=int(doc.get("L_max", DEFAULT_L_MAX)))


@dataclass(frozen=True)
class KernelSpec:
    """Inner series f1, composed outer series g, and the size/degree data."""

    f1: CoeffSeries
    g: CoeffSeries
    n: int
    d: int
    D: float  # outer polynomial degree; math.inf when non-polynomial
    trunc: TruncationConfig = field(default_factory=TruncationConfig)

    def __post_init__(self):
        if not (self.f1.nonneg and self.g.nonneg):
            raise ValueError("kernel series must be nonnegative")
        if self.d < 2 or self.n < 1:
            raise ValueError("need d >= 2 and n >= 1")
        if not (self.D == math.inf or (float(self.D).is_integer() and self.D >= 0)):
            raise ValueError("D must be a nonnegative integer or inf")

    @property
    def d_star(self) -> int:
        """Maximal interaction order min(D, n)."""
        return int(min(self.D, self.n))

    @property
    def q_cap(self) -> int:
        """Largest outer power retained in spectral sums."""
        if self.D == math.inf:
            return min(self.trunc.q_max, self.trunc.a_max, self.g.order)
        return int(self.D)

    def diag_value(self) -> float:
        """K(x, x) = g(n * f1(1)) for any unit-patch input."""
        return float(eval_series(self.g, self.n * eval_series(self.f1, 1.0)))


def build_kernel(acts: list, n: int, d: int,
                 trunc: TruncationConfig | None = None) -> KernelSpec:
    """Assemble the kernel for activations [sigma_1, ..., sigma_N].

    f1 is the majorant of sigma_1; g composes the majorants of the rest
    (identity series when N = 1). D is exact whenever every outer majorant
    is a polynomial, else inf.
    """
    if not acts:
        raise StructuralError("need at least one activation")
    trunc = trunc or TruncationConfig()
    order = trunc.series_order
    f1 = majorant_series(acts[0], order)
    outer = [majorant_series(a, trunc.q_max) for a in acts[1:]]
    if not outer:
        g = identity_series(order=trunc.q_max)
        D = 1.0
    else:
        g = outer[0]
        for nxt in outer[1:]:
            g = compose_series(nxt, g, trunc.q_max, l_max=trunc.l_max)
        D = _composed_degree(acts[1:])
    return KernelSpec(f1=f1, g=g, n=n, d=d, D=D, trunc=trunc)


def _activation_degree(a: ActivationSpec) -> float:
    """Exact polynomial degree of the majorant, or inf."""
    if a.kind in ("exp", "erf_sigmoid", "smooth_hinge", "geometric"):
        return math.inf
    if a.kind == "square":
        return 2.0
    if a.kind == "identity":
        return 1.0
    last = max((i for i, c in enumerate(a.coeffs) if c != 0.0), default=None)
    return 0.0 if last is None else float(last)


def _composed_degree(acts: list) -> float:
    prod = 1.0
    for a in acts:
        dg = _activation_degree(a)
        if dg == 0.0:
            return 0.0  # a constant factor collapses the chain
        prod *= dg
    return prod


def _inner_products(x: PatchedImage, y: PatchedImage) -> np.ndarray:
    if x.n != y.n or x.d != y.d:
        raise StructuralError(
            f"patch layout mismatch: ({x.n},{x.d}) vs ({y.n},{y.d})")
    t = np.einsum("nd,nd->n", x.patches, y.patches)
    return np.clip(t, -1.0, 1.0)


def eval_kernel(spec: KernelSpec, x: PatchedImage, y: PatchedImage) -> float:
    if x.n != spec.n or x.d != spec.d:
        raise StructuralError(
            f"input ({x.n},{x.d}) does not match kernel ({spec.n},{spec.d})")
    t = _inner_products(x, y)
    s = float(np.sum(eval_series(spec.f1, t)))
    return float(eval_series(spec.g, s))


def gram(spec: KernelSpec, xs: list) -> np.ndarray:
    """Symmetric Gram matrix G[i][j] = K(xs[i], xs[j])."""
    G = cross_gram(spec, xs, xs)
    return 0.5 * (G + G.T)  # exact symmetry despite float reduction order


def cross_gram(spec: KernelSpec, xs: list, ys: list) -> np.ndarray:
    """K(xs[i], ys[j]) assembled vectorized over all pairs."""
    a = stack_patches(xs)
    b = stack_patches(ys)
    if a.shape[1:] != (spec.n, spec.d) or b.shape[1:] != (spec.n, spec.d):
        raise StructuralError("inputs do not match kernel patch layout")
    t = np.clip(np.einsum("apd,bpd->abp", a, b), -1.0, 1.0)
    s = np.polynomial.polynomial.polyval(t, spec.f1.asarray()).sum(axis=-1)
    return np.polynomial.polynomial.polyval(s, spec.g.asarray())


def constant_kernel(value: float, n: int, d: int,
                    trunc: TruncationConfig | None = None) -> KernelSpec:
    """K identically ``value``; used by rank-one sanity checks."""
    trunc = trunc or TruncationConfig()
    f1 = series_from([0.0, 1.0], order=trunc.series_order, nonneg=True)
    g = series_from([float(value)], order=trunc.q_max, nonneg=True)
    return KernelSpec(f1=f1, g=g, n=n, d=d, D=0.0, trunc=trunc)
