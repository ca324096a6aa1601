"""Quadrature rules used throughout the package."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import expit


@lru_cache(maxsize=32)
def _hermgauss(n: int):
    z, w = np.polynomial.hermite.hermgauss(n)
    return z, w / np.sqrt(np.pi)


def gauss_hermite_normal(n: int, sigma: float = 1.0):
    """Nodes and weights integrating against ``N(0, sigma**2)``.

    Returns ``(theta, weights)`` with ``theta = sqrt(2) * sigma * z`` and the
    physicists' Gauss-Hermite weights divided by ``sqrt(pi)`` so they sum
    to one.
    """
    if n < 1:
        raise ValueError("number of Gauss-Hermite nodes must be positive")
    z, w = _hermgauss(int(n))
    return np.sqrt(2.0) * sigma * z, w.copy()


@lru_cache(maxsize=8)
def _tanh_sinh(h: float, umax: float):
    tmax = np.arcsinh(umax / np.pi)
    k = int(np.floor(tmax / h))
    t = h * np.arange(-k, k + 1)
    u = np.pi * np.sinh(t)
    q = expit(u)
    qc = expit(-u)
    w = h * np.pi * np.cosh(t) * q * qc
    return q, qc, w


def unit_interval_rule(h: float = 1.0 / 16, umax: float = 700.0):
    """Double-exponential rule on ``(0, 1)`` for integrands singular at the ends.

    Uses the substitution ``q = expit(pi * sinh(t))`` followed by the
    trapezoidal rule in ``t`` with step ``h``.  Returns ``(q, 1 - q, w)``;
    the complement is computed directly so that nodes near 1 keep full
    relative precision in ``1 - q``.
    """
    q, qc, w = _tanh_sinh(float(h), float(umax))
    return q.copy(), qc.copy(), w.copy()


def gauss_legendre_unit(n: int, eps: float = 1e-10):
    """Gauss-Legendre nodes and weights on ``(eps, 1 - eps)``."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (1.0 - 2.0 * eps)
    return eps + half * (x + 1.0), half * w
