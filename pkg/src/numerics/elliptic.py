"""
Complete elliptic integrals in the parameter convention

    K(m) = ∫₀^{π/2} dθ / √(1 − m sin²θ),   E(m) = ∫₀^{π/2} √(1 − m sin²θ) dθ,

evaluated by the arithmetic-geometric mean. All functions accept scalars or
numpy arrays and an optional complementary parameter ``m1 = 1 − m``, which
callers pass when they can compute it without cancellation (m close to 1).
"""
import math

import numpy as np
from scipy import integrate

MAX_ITERATIONS = 64

# Below this |m| the derivative uses its power series.
SERIES_THRESHOLD = 1e-4


def _parameters(m, m1):
    m = np.asarray(m, dtype=float)
    m1 = 1.0 - m if m1 is None else np.asarray(m1, dtype=float)
    if np.any(m <= -1) or np.any(m1 <= 0) or np.any(np.isnan(m)):
        raise ValueError(f"Elliptic parameter must lie in (-1, 1), got {m}")
    return m, m1


def _agm(m, m1):
    """AGM of (1, √m1) and the sum Σ 2^(n−1) c_n² with c_0² = m."""
    a = np.ones_like(m1)
    b = np.sqrt(m1)
    total = 0.5 * m
    power = 0.5
    for _ in range(MAX_ITERATIONS):
        if np.all(np.abs(a - b) <= 1e-16 * a):
            break
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        power *= 2
        total = total + power * c * c
    return a, total


def _result(value, scalar):
    return float(value) if scalar else value


def elliptic_K(m, m1=None):
    scalar = np.ndim(m) == 0
    m, m1 = _parameters(m, m1)
    a, _ = _agm(m, m1)
    return _result(math.pi / (2 * a), scalar)


def elliptic_E(m, m1=None):
    scalar = np.ndim(m) == 0
    m, m1 = _parameters(m, m1)
    a, total = _agm(m, m1)
    return _result(math.pi / (2 * a) * (1 - total), scalar)


def elliptic_K_derivative(m, m1=None):
    """dK/dm = (E − (1−m) K) / (2 m (1−m))."""
    scalar = np.ndim(m) == 0
    m, m1 = _parameters(m, m1)
    a, total = _agm(m, m1)
    k = math.pi / (2 * a)
    e = k * (1 - total)
    small = np.abs(m) < SERIES_THRESHOLD
    safe_m = np.where(small, 1.0, m)
    general = (e - m1 * k) / (2 * safe_m * m1)
    series = math.pi / 2 * (0.25 + 9 * m / 32 + 75 * m * m / 256)
    return _result(np.where(small, series, general), scalar)


def elliptic_K_quadrature(m, epsrel: float = 1e-13) -> float:
    """K(m) by adaptive quadrature of its defining integral, as a cross-check."""
    _parameters(m, None)
    value, _ = integrate.quad(
        lambda t: 1.0 / math.sqrt(1.0 - m * math.sin(t) ** 2),
        0.0,
        math.pi / 2,
        epsabs=0.0,
        epsrel=epsrel,
        limit=200,
    )
    return value
