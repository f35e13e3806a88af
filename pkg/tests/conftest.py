"""Shared oracles used across test modules.

These deliberately avoid the library code paths they check: convolution by
explicit double loop, derivatives by central finite differences.
"""

import math

import numpy as np
import pytest


def brute_force_product(a, b, order):
    """Discrete convolution by nested loops; independent of taylor.cauchy_product."""
    out = [0.0] * (order + 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            if i + j <= order:
                out[i + j] += ai * bj
    return out


def brute_force_power(a, alpha, order):
    out = [1.0] + [0.0] * order
    for _ in range(alpha):
        out = brute_force_product(out, a, order)
    return out


def fd_stencil(m, npts, h):
    """Central finite-difference weights for the m-th derivative at 0."""
    assert npts % 2 == 1 and npts > m
    offsets = np.arange(npts) - npts // 2
    A = np.vander(offsets * h, npts, increasing=True).T
    rhs = np.zeros(npts)
    rhs[m] = math.factorial(m)
    return offsets * h, np.linalg.solve(A, rhs)


def fd_derivative(f, m, h=0.05, npts=11, richardson=True):
    """m-th derivative of f at 0 by high-order central differences.

    One Richardson step on the leading h^(npts-m) error term; good to ~1e-9
    relative for analytic f and m <= 4.
    """
    def estimate(step):
        xs, w = fd_stencil(m, npts, step)
        return float(np.dot(w, [f(x) for x in xs]))

    d1 = estimate(h)
    if not richardson:
        return d1
    d2 = estimate(h / 2.0)
    p = npts - m if (npts - m) % 2 == 0 else npts - m - 1  # symmetric stencil order
    return (2 ** p * d2 - d1) / (2 ** p - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
