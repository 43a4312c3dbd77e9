"""Bump functions, the smooth transition cutoff, Bessel J_nu and the Fourier
transform of surface measure on spheres.

Bessel functions are only needed for integer and half-integer orders (the
sphere dimension is an integer), so a power series for small arguments and the
Hankel expansion for large ones cover everything.  For half-integer orders the
Hankel expansion terminates and is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from .errors import RhoTooSmall, UnsupportedOrder

MAX_BUMP_ORDER = 4
_EDGE = 1e-6


# ---------------------------------------------------------------------------
# bump profile


@lru_cache(maxsize=None)
def _bump_polys() -> tuple[Polynomial, ...]:
    # g(u) = exp(-1/(1-u^2)),  g^(k)(u) = g(u) P_k(u) / (1-u^2)^(2k)
    u = Polynomial([0.0, 1.0])
    s = Polynomial([1.0, 0.0, -1.0])
    polys = [Polynomial([1.0])]
    for k in range(MAX_BUMP_ORDER):
        P = polys[-1]
        polys.append((P.deriv() * s + 4 * k * u * P) * s - 2 * u * P)
    return tuple(polys)


@dataclass(frozen=True)
class BumpProfile:
    """r -> c exp(-1/(1-(r/radius)^2)) on |r| < radius, zero elsewhere."""

    radius: float = 0.5
    c: float = 1.0

    def __call__(self, r, order: int = 0):
        return bump_eval(self, r, order)

    def derivative_l1(self) -> float:
        """||phi'||_{L^1(R)} of the one-dimensional profile: twice its peak value."""
        return 2.0 * self.c * math.exp(-1.0)

    def mass(self, n: int = 1) -> float:
        return bump_mass(self, n)


def bump_eval(b: BumpProfile, r, order: int = 0):
    if not 0 <= order <= MAX_BUMP_ORDER:
        raise UnsupportedOrder(f"bump derivatives are available up to order {MAX_BUMP_ORDER}")
    r_arr = np.asarray(r, dtype=float)
    u = r_arr / b.radius
    inside = np.abs(u) < 1.0 - _EDGE
    out = np.zeros_like(u)
    ui = u[inside]
    s = 1.0 - ui * ui
    val = np.exp(-1.0 / s)
    if order:
        val = val * _bump_polys()[order](ui) / s ** (2 * order) / b.radius**order
    out[inside] = b.c * val
    return out if np.ndim(r) else float(out)


def sphere_area(m: int) -> float:
    """Surface measure of S^{m-1}; S^0 = {-1, 1} with counting measure."""
    return 2.0 * math.pi ** (m / 2) / math.gamma(m / 2)


def bump_mass(b: BumpProfile, n: int = 1) -> float:
    """Integral over R^n of the radial bump phi(|xi|)."""
    nodes, weights = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(0.0, b.radius, 17)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        r = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * float(np.dot(weights, bump_eval(b, r) * r ** (n - 1)))
    return sphere_area(n) * total


# ---------------------------------------------------------------------------
# transition cutoff


def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _dg(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    out[pos] = np.exp(-1.0 / tp) / (tp * tp)
    return out


@dataclass(frozen=True)
class TransitionCutoff:
    """Smooth monotone step: 0 for r <= lo, 1 for r >= hi."""

    lo: float = 0.5
    hi: float = 1.0

    def __call__(self, r):
        r_arr = np.asarray(r, dtype=float)
        t = (r_arr - self.lo) / (self.hi - self.lo)
        a, b = _g(t), _g(1.0 - t)
        out = a / (a + b)
        return out if np.ndim(r) else float(out)

    def derivative(self, r):
        r_arr = np.asarray(r, dtype=float)
        w = self.hi - self.lo
        t = (r_arr - self.lo) / w
        a, b = _g(t), _g(1.0 - t)
        da, db = _dg(t), _dg(1.0 - t)
        out = (da * b + a * db) / (a + b) ** 2 / w
        return out if np.ndim(r) else float(out)


ETA = TransitionCutoff()


# ---------------------------------------------------------------------------
# Bessel J_nu for integer / half-integer nu >= 0


def _check_order(nu: float) -> None:
    if nu < 0 or abs(2 * nu - round(2 * nu)) > 1e-12:
        raise UnsupportedOrder(f"only integer and half-integer orders >= 0 are supported, got {nu}")


def series_threshold(nu: float) -> float:
    return max(12.0, 2.0 * nu)


def _scaled_series(nu: float, z: np.ndarray) -> np.ndarray:
    """(z/2)^{-nu} J_nu(z) by its power series; entire in z."""
    q = -(0.5 * z) ** 2
    term = np.full_like(z, 1.0 / math.gamma(nu + 1.0))
    total = term.copy()
    k = 0
    while True:
        k += 1
        term = term * q / (k * (k + nu))
        total += term
        if k > 8 and np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
        if k > 400:
            break
    return total


def hankel_coefficient(nu: float, k: int) -> float:
    """a_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k)."""
    mu = 4.0 * nu * nu
    val = 1.0
    for j in range(1, k + 1):
        val *= (mu - (2 * j - 1) ** 2) / (8.0 * j)
    return val


def _hankel_pq(nu: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P and Q of the Hankel expansion, summed to the smallest term."""
    mu = 4.0 * nu * nu
    P = np.ones_like(z)
    Q = np.zeros_like(z)
    term = np.ones_like(z)
    prev = np.full_like(z, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 200):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        mag = np.abs(term)
        active &= mag < prev
        if not active.any():
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        contrib = np.where(active, sign * term, 0.0)
        if k % 2:
            Q += contrib
        else:
            P += contrib
        prev = np.where(mag == 0.0, 0.0, mag)
        active &= mag > 0.0
    return P, Q


def bessel_j(nu: float, z) -> np.ndarray:
    """J_nu(z) for z >= 0 and nu integer or half-integer."""
    _check_order(nu)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(z_arr)
    small = z_arr < series_threshold(nu)
    if small.any():
        zs = z_arr[small]
        out[small] = (0.5 * zs) ** nu * _scaled_series(nu, zs)
    big = ~small
    if big.any():
        zb = z_arr[big]
        P, Q = _hankel_pq(nu, zb)
        w = zb - 0.5 * nu * math.pi - 0.25 * math.pi
        out[big] = np.sqrt(2.0 / (math.pi * zb)) * (P * np.cos(w) - Q * np.sin(w))
    return out if np.ndim(z) else float(out[0])


def bessel_j_series(nu: float, z) -> np.ndarray:
    _check_order(nu)
    z_arr = np.asarray(z, dtype=float)
    return (0.5 * z_arr) ** nu * _scaled_series(nu, np.atleast_1d(z_arr)).reshape(z_arr.shape)


def bessel_j_asymptotic(nu: float, z) -> np.ndarray:
    _check_order(nu)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    P, Q = _hankel_pq(nu, z_arr)
    w = z_arr - 0.5 * nu * math.pi - 0.25 * math.pi
    return np.sqrt(2.0 / (math.pi * z_arr)) * (P * np.cos(w) - Q * np.sin(w))


# ---------------------------------------------------------------------------
# Fourier transform of sphere surface measure


def sphere_ft(m: int, rho):
    """Fourier transform of surface measure on S^{m-1} at radius ``rho``.

    m = 1 is the counting measure on {-1, 1}.  For m >= 2 the value is
    2 pi rho^{-(m-2)/2} J_{(m-2)/2}(2 pi rho), continuous at rho = 0.
    """
    if m < 1:
        raise ValueError("sphere dimension m must be >= 1")
    rho_arr = np.abs(np.atleast_1d(np.asarray(rho, dtype=float)))
    if m == 1:
        out = 2.0 * np.cos(2.0 * math.pi * rho_arr)
    else:
        nu = 0.5 * (m - 2)
        z = 2.0 * math.pi * rho_arr
        out = np.empty_like(z)
        small = z < series_threshold(nu)
        if small.any():
            out[small] = 2.0 * math.pi ** (nu + 1.0) * _scaled_series(nu, z[small])
        big = ~small
        if big.any():
            out[big] = 2.0 * math.pi * rho_arr[big] ** (-nu) * bessel_j_asymptotic(nu, z[big])
    return out if np.ndim(rho) else float(out[0])


def sphere_ft_phase(m: int) -> float:
    return (m - 1) * math.pi / 4.0


def sphere_ft_leading(m: int, rho):
    """rho^{-(m-1)/2} (b e^{2 pi i rho} + a e^{-2 pi i rho}); real valued."""
    rho_arr = np.asarray(rho, dtype=float)
    return 2.0 * rho_arr ** (-0.5 * (m - 1)) * np.cos(2.0 * math.pi * rho_arr - sphere_ft_phase(m))


def sphere_ft_remainder(m: int, rho):
    """sphere_ft minus its two leading oscillatory terms."""
    rho_arr = np.abs(np.atleast_1d(np.asarray(rho, dtype=float)))
    if m == 1:
        out = np.zeros_like(rho_arr)
        return out if np.ndim(rho) else float(out[0])
    nu = 0.5 * (m - 2)
    z = 2.0 * math.pi * rho_arr
    out = np.empty_like(z)
    small = z < series_threshold(nu)
    if small.any():
        out[small] = sphere_ft(m, rho_arr[small]) - sphere_ft_leading(m, rho_arr[small])
    big = ~small
    if big.any():
        # drop the leading 1 of P analytically instead of subtracting
        zb = z[big]
        P, Q = _hankel_pq(nu, zb)
        w = zb - 0.5 * nu * math.pi - 0.25 * math.pi
        out[big] = (2.0 * math.pi * rho_arr[big] ** (-nu) * np.sqrt(2.0 / (math.pi * zb))
                    * ((P - 1.0) * np.cos(w) - Q * np.sin(w)))
    return out if np.ndim(rho) else float(out[0])


def _watson_bound(nu: float, z: float) -> float:
    """Bound on |P - 1| + |Q| from the first neglected Hankel terms (z > 0)."""
    p = 1
    while 2 * p < nu - 0.5:
        p += 1
    q = 0
    while 2 * q < nu - 1.5:
        q += 1
    bound_p = sum(abs(hankel_coefficient(nu, 2 * k)) / z ** (2 * k) for k in range(1, p + 1))
    bound_q = sum(abs(hankel_coefficient(nu, 2 * k + 1)) / z ** (2 * k + 1) for k in range(0, q + 1))
    return bound_p + bound_q


def sphere_ft_asymptotic(m: int, rho: float) -> tuple[complex, complex, float]:
    """Leading coefficients (a, b) and a bound on
    |sphere_ft(m, rho) rho^{(m-1)/2} - (a e^{-2 pi i rho} + b e^{2 pi i rho})|.

    For m = 1 the two-term form is exact: a = b = 1 and the bound is 0.
    """
    if m == 1:
        return 1.0 + 0j, 1.0 + 0j, 0.0
    if m < 1:
        raise ValueError("sphere dimension m must be >= 1")
    if rho < 1:
        raise RhoTooSmall(f"asymptotic form requires rho >= 1, got {rho}")
    theta = sphere_ft_phase(m)
    a = complex(math.cos(theta), math.sin(theta))
    b = a.conjugate()
    nu = 0.5 * (m - 2)
    return a, b, 2.0 * _watson_bound(nu, 2.0 * math.pi * rho)
