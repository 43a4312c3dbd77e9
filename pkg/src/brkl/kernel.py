"""Kernel objects: the oscillatory factor k(x, y), the radial weight
A_alpha(|(y, z)|) and their product K = A_alpha k.

``k_radial`` works on the polar reduction

    k = int_0^delta exp(2 pi i y.Psi0(r)) sigma^(r |x|) phi0(r) r^{n-1} dr

splitting the sphere transform with the smooth cutoff eta(r |x|) into a
near-origin part, the two oscillatory branches and the asymptotic remainder.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveAlpha, TooLarge
from .oscquad import OscIntegral, QuadResult, integrate_osc
from .phase import RadialPhase
from .special import (
    ETA,
    BumpProfile,
    sphere_area,
    sphere_ft,
    sphere_ft_asymptotic,
    sphere_ft_remainder,
)
from .variety import Variety

DEFAULT_TOL = 1e-10
DEFAULT_MAX_EVALS = 10_000_000


@dataclass(frozen=True)
class KernelPoint:
    x: tuple[float, ...]
    y: tuple[float, ...]
    z: tuple[float, ...] = ()

    @property
    def r_x(self) -> float:
        return float(np.linalg.norm(self.x))

    @property
    def rho(self) -> float:
        return float(math.sqrt(sum(t * t for t in self.y) + sum(t * t for t in self.z)))

    def check(self, v: Variety) -> None:
        if len(self.x) != v.n or len(self.y) != v.L1 or len(self.z) != v.L2:
            raise ValueError(
                f"point dimensions ({len(self.x)}, {len(self.y)}, {len(self.z)}) do not match "
                f"(n, L1, L2) = ({v.n}, {v.L1}, {v.L2})"
            )


@dataclass(frozen=True)
class KernelValue:
    k: complex
    a_alpha: float
    K: complex
    err_est: float = 0.0


def bump_for(v: Variety) -> BumpProfile:
    return BumpProfile(radius=v.delta)


# ---------------------------------------------------------------------------
# A_alpha


_A_CACHE: dict[tuple, float] = {}
_A_LOCK = threading.Lock()


def _a_alpha_integral(v: Variety, alpha: float, rho: float, tol: float = 1e-12) -> QuadResult:
    chi = bump_for(v)
    L = v.L
    power = alpha + L - 1.0

    def amplitude(s):
        return s**power * chi(s) * sphere_ft(L, s * rho)

    spec = OscIntegral(
        amplitude=amplitude,
        phase=[0.0],
        interval=(0.0, v.delta),
        tol=tol,
        bandwidth=rho,
        graded_left=60,
        max_evals=50_000_000,
    )
    return integrate_osc(spec)


def a_alpha(v: Variety, alpha: float, rho: float) -> float:
    """A_alpha at |(y, z)| = rho (radial in its argument)."""
    alpha = float(alpha)
    if alpha <= 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
    rho = abs(float(rho))
    key = (v.L, v.delta, alpha, rho)
    hit = _A_CACHE.get(key)
    if hit is not None:
        return hit
    res = _a_alpha_integral(v, alpha, rho)
    # the radial form is real by construction; keep the certification anyway
    assert abs(res.value.imag) < 1e-10 * max(res.abs_integral, 1e-300)
    val = float(res.value.real)
    with _A_LOCK:
        _A_CACHE[key] = val
    return val


class AAlphaTable:
    """A_alpha tabulated on [0, rho_max] for fast batched lookups.

    Below ``rho_lin`` the table is uniform; above it ``rho^{L+alpha} A`` is
    tabulated on a logarithmic grid where it is slowly varying.
    """

    def __init__(self, v: Variety, alpha: float, rho_max: float, rho_lin: float = 64.0,
                 lin_step: float = 0.05, per_octave: int = 16):
        from scipy.interpolate import CubicSpline

        self.v, self.alpha = v, float(alpha)
        self.power = v.L + self.alpha
        self.rho_lin = rho_lin
        lin = np.arange(0.0, rho_lin + lin_step / 2, lin_step)
        octaves = max(1.0, math.log2(max(rho_max, 2 * rho_lin) / rho_lin))
        # nodes at rho_lin 2^{k / per_octave}, shared by tables of any range
        logs = rho_lin * 2.0 ** (np.arange(int(math.ceil(per_octave * octaves)) + 3) / per_octave)
        self.rho_max = float(logs[-1])
        a_lin = np.array([a_alpha(v, alpha, r) for r in lin])
        a_log = np.array([a_alpha(v, alpha, r) for r in logs])
        self._lin = CubicSpline(lin, a_lin)
        self._log = CubicSpline(np.log(logs), a_log * logs**self.power)

    def __call__(self, rho):
        rho = np.abs(np.asarray(rho, dtype=float))
        if np.any(rho > self.rho_max):
            raise ValueError("rho beyond the tabulated range")
        out = np.empty_like(rho)
        low = rho <= self.rho_lin
        out[low] = self._lin(rho[low])
        hi = ~low
        out[hi] = self._log(np.log(rho[hi])) / rho[hi] ** self.power
        return out


# ---------------------------------------------------------------------------
# k(x, y)


@dataclass
class KPieces:
    """Pieces of k: near-origin part (1 - eta), the two oscillatory branches
    (``minus`` carries the stationary point) and the asymptotic remainder."""

    near: QuadResult
    plus: complex
    plus_res: QuadResult | None
    minus: complex
    minus_res: QuadResult | None
    remainder: QuadResult | None
    extra: dict = field(default_factory=dict)

    @property
    def value(self) -> complex:
        total = self.near.value + self.plus + self.minus
        if self.remainder is not None:
            total += self.remainder.value
        return total

    @property
    def err_est(self) -> float:
        errs = [self.near.error_estimate]
        for r, coeff in ((self.plus_res, self.extra.get("b", 1.0)), (self.minus_res, self.extra.get("a", 1.0))):
            if r is not None:
                errs.append(abs(coeff) * r.error_estimate * self.extra.get("scale", 1.0))
        if self.remainder is not None:
            errs.append(self.remainder.error_estimate)
        return float(sum(errs))


_ZERO = QuadResult(0j, 0.0, 0, 0)


def _radial_phase(v: Variety, sign: int, r_x: float, y) -> RadialPhase:
    return RadialPhase(sign, r_x, tuple(y), v.d, (0.0, v.delta))


def k_pieces(v: Variety, r_x: float, y, tol: float = DEFAULT_TOL,
             max_evals: int = DEFAULT_MAX_EVALS) -> KPieces:
    r_x = abs(float(r_x))
    y = tuple(float(t) for t in y)
    phi = bump_for(v)
    n, delta = v.n, v.delta
    base = _radial_phase(v, 1, 0.0, y)

    near_hi = delta if r_x == 0 else min(delta, 1.0 / r_x)

    def near_amp(r):
        return (1.0 - ETA(r * r_x)) * sphere_ft(n, r * r_x) * phi(r) * r ** (n - 1)

    near = integrate_osc(OscIntegral(near_amp, base, (0.0, near_hi), tol=tol,
                                     bandwidth=r_x, max_evals=max_evals))
    far_lo = math.inf if r_x == 0 else 0.5 / r_x
    if far_lo >= delta:
        return KPieces(near, 0j, None, 0j, None, None)

    a, b, _ = sphere_ft_asymptotic(n, max(1.0, r_x * delta))
    scale = r_x ** (-0.5 * (n - 1))

    def branch_amp(r):
        return ETA(r * r_x) * phi(r) * r ** (0.5 * (n - 1))

    branch = {}
    for sign in (1, -1):
        branch[sign] = integrate_osc(OscIntegral(branch_amp, _radial_phase(v, sign, r_x, y), (far_lo, delta),
                                                 tol=tol, max_evals=max_evals))
    remainder = None
    if n > 1:
        def rem_amp(r):
            return sphere_ft_remainder(n, r * r_x) * ETA(r * r_x) * phi(r) * r ** (n - 1)

        remainder = integrate_osc(OscIntegral(rem_amp, base, (far_lo, delta), tol=tol,
                                              bandwidth=r_x, max_evals=max_evals))
    return KPieces(
        near=near,
        plus=b * scale * branch[1].value,
        plus_res=branch[1],
        minus=a * scale * branch[-1].value,
        minus_res=branch[-1],
        remainder=remainder,
        extra={"a": a, "b": b, "scale": scale},
    )


def k_direct(v: Variety, r_x: float, y, tol: float = DEFAULT_TOL,
             max_evals: int = DEFAULT_MAX_EVALS) -> QuadResult:
    """k by a single quadrature, without the cutoff split."""
    r_x = abs(float(r_x))
    phi = bump_for(v)
    if v.n == 1:
        phase = RadialPhase(1, r_x, tuple(y), v.d, (-v.delta, v.delta))
        return integrate_osc(OscIntegral(lambda t: phi(t), phase, (-v.delta, v.delta), tol=tol,
                                         max_evals=max_evals))
    n = v.n

    def amp(r):
        return sphere_ft(n, r * r_x) * phi(r) * r ** (n - 1)

    return integrate_osc(OscIntegral(amp, _radial_phase(v, 1, 0.0, y), (0.0, v.delta), tol=tol,
                                     bandwidth=r_x, max_evals=max_evals))


def k_radial(v: Variety, r_x: float, y, method: str = "split", tol: float = DEFAULT_TOL,
             max_evals: int = DEFAULT_MAX_EVALS) -> complex:
    return k_radial_with_error(v, r_x, y, method, tol, max_evals)[0]


def k_radial_with_error(v: Variety, r_x: float, y, method: str = "split", tol: float = DEFAULT_TOL,
                        max_evals: int = DEFAULT_MAX_EVALS) -> tuple[complex, float]:
    if len(tuple(y)) != v.L1:
        raise ValueError(f"y must have {v.L1} components")
    if method == "split":
        pieces = k_pieces(v, r_x, y, tol, max_evals)
        return complex(pieces.value), pieces.err_est
    if method == "direct":
        res = k_direct(v, r_x, y, tol, max_evals)
        return res.value, res.error_estimate
    raise ValueError(f"unknown method {method!r}")


def kernel_K(v: Variety, alpha: float, point: KernelPoint, tol: float = DEFAULT_TOL,
             max_evals: int = DEFAULT_MAX_EVALS) -> KernelValue:
    point.check(v)
    k, err = k_radial_with_error(v, point.r_x, point.y, "split", tol, max_evals)
    A = a_alpha(v, alpha, point.rho)
    return KernelValue(k=k, a_alpha=A, K=A * k, err_est=abs(A) * err)


# ---------------------------------------------------------------------------
# direct (n + L)-dimensional quadrature of the inverse Fourier transform


def _graded_gl(hi: float, n_panels: int, levels: int = 40, order: int = 16):
    """Gauss-Legendre on [0, hi]: uniform panels, the first one replaced by
    geometrically shrinking panels towards 0 (weak power singularity there)."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, hi, n_panels + 1)
    inner = edges[1] * 2.0 ** -np.arange(levels, 0, -1)
    edges = np.concatenate([[0.0], inner, edges[1:]])
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def kernel_K_direct(v: Variety, alpha: float, point: KernelPoint, ppo: float = 10.0) -> complex:
    """Tensor-grid quadrature of K over (xi, eta) in R^n x R^L.

    Uses the translated form eta -> eta + Psi(xi), so the integrand is
    phi(xi) |eta|^alpha chi(eta) exp(2 pi i (x.xi + w.(eta + Psi(xi)))) with
    w = (y, z); the full phase is evaluated at every tensor node.
    """
    point.check(v)
    if v.n + v.L > 3:
        raise TooLarge("direct quadrature is limited to n + L <= 3")
    x = np.asarray(point.x, dtype=float)
    w = np.concatenate([np.asarray(point.y, dtype=float), np.asarray(point.z, dtype=float)])
    if np.abs(x).sum() + np.abs(w).sum() > 100.0:
        raise TooLarge("direct quadrature is limited to |x| + |y| + |z| <= 100")
    delta = v.delta
    phi = bump_for(v)
    wn = float(np.linalg.norm(w))

    # xi grid: uniform trapezoid (integrand compactly supported and smooth)
    psi_slope = sum(abs(yj) * dj * delta ** (dj - 1) for yj, dj in zip(point.y, v.d))
    freq_xi = float(np.abs(x).sum()) + psi_slope
    n_xi = int(math.ceil(ppo * 2 * delta * freq_xi)) + 96
    t = np.linspace(-delta, delta, n_xi)
    h = t[1] - t[0]
    if v.n == 1:
        xi = t[:, None]
    else:
        g1, g2 = np.meshgrid(t, t, indexing="ij")
        xi = np.stack([g1.ravel(), g2.ravel()], axis=1)
    rxi = np.linalg.norm(xi, axis=1)
    w_xi = phi(rxi) * h**v.n
    keep = w_xi > 0
    xi, rxi, w_xi = xi[keep], rxi[keep], w_xi[keep]
    psi = np.stack([rxi**dj for dj in v.d] + [np.zeros_like(rxi)] * v.L2, axis=1)
    phase_xi = xi @ x + psi @ w

    # eta grid: graded Gauss-Legendre in the radius, trapezoid in the angle
    n_r = int(math.ceil(ppo * wn * delta / 16.0)) + 8
    rho, wr = _graded_gl(delta, n_r)
    radial_w = wr * rho**alpha * phi(rho) * rho ** (v.L - 1)
    if v.L == 1:
        dirs = np.array([[1.0], [-1.0]])
        w_dir = np.ones(2)
    else:
        n_th = int(math.ceil(ppo * wn * delta)) + 64
        th = 2 * math.pi * np.arange(n_th) / n_th
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        w_dir = np.full(n_th, 2 * math.pi / n_th)
    eta = (rho[:, None, None] * dirs[None, :, :]).reshape(-1, v.L)
    w_eta = (radial_w[:, None] * w_dir[None, :]).ravel()
    phase_eta = eta @ w

    total = 0j
    chunk = max(1, 2_000_000 // max(1, phase_eta.size))
    for s in range(0, phase_xi.size, chunk):
        ph = phase_xi[s:s + chunk, None] + phase_eta[None, :]
        wts = w_xi[s:s + chunk, None] * w_eta[None, :]
        total += complex(np.sum(wts * np.exp(2j * math.pi * ph)))
    return total


# ---------------------------------------------------------------------------
# batched evaluation of |k| for Monte Carlo sampling


def max_local_frequency(v: Variety, r_x, y) -> np.ndarray:
    """|x| + sum_j |y_j| d_j delta^{d_j - 1}: bound on |d/dt phase| on the support."""
    r_x = np.abs(np.asarray(r_x, dtype=float))
    y = np.abs(np.asarray(y, dtype=float)).reshape(r_x.size, v.L1)
    slope = sum(y[:, j] * dj * v.delta ** (dj - 1) for j, dj in enumerate(v.d))
    return r_x + slope


def k_batch(v: Variety, r_x, y, margin: float = 160.0, rows: int = 32) -> np.ndarray:
    """k at many points sharing one quadrature grid.

    n = 1 uses the trapezoid rule on [-delta, delta] with spacing below the
    reciprocal of the largest local frequency plus ``margin`` (aliasing-free
    for the compactly supported smooth integrand).  n >= 2 uses composite
    Gauss-Legendre panels of at most two periods on [0, delta].
    """
    r_x = np.abs(np.atleast_1d(np.asarray(r_x, dtype=float)))
    y = np.asarray(y, dtype=float).reshape(r_x.size, v.L1)
    if r_x.size == 0:
        return np.zeros(0, dtype=complex)
    phi = bump_for(v)
    delta = v.delta
    fmax = float(max_local_frequency(v, r_x, y).max()) + margin
    if v.n == 1:
        n_nodes = int(math.ceil(2 * delta * fmax)) + 1
        t = np.linspace(-delta, delta, n_nodes)
        wts = phi(t) * (t[1] - t[0])
        keep = wts > 0
        t, wts = t[keep], wts[keep]
        at = np.abs(t)
        powers = [at**dj for dj in v.d]
        out = np.empty(r_x.size, dtype=complex)
        for s in range(0, r_x.size, rows):
            ph = r_x[s:s + rows, None] * t[None, :]
            for j, pw in enumerate(powers):
                ph += y[s:s + rows, j, None] * pw[None, :]
            ph *= 2 * math.pi
            # explicit sums keep the reduction order fixed (no BLAS threading)
            out[s:s + rows] = np.sum(np.cos(ph) * wts, axis=1) + 1j * np.sum(np.sin(ph) * wts, axis=1)
        return out
    panels = max(8, int(math.ceil(delta * fmax / 2.0)))
    xg, wg = np.polynomial.legendre.leggauss(20)
    edges = np.linspace(0.0, delta, panels + 1)
    half = 0.5 * np.diff(edges)
    r = (0.5 * (edges[1:] + edges[:-1])[:, None] + half[:, None] * xg[None, :]).ravel()
    wr = (half[:, None] * wg[None, :]).ravel() * phi(r) * r ** (v.n - 1)
    keep = wr > 0
    r, wr = r[keep], wr[keep]
    powers = [r**dj for dj in v.d]
    out = np.empty(r_x.size, dtype=complex)
    for s in range(0, r_x.size, rows):
        ph = np.zeros((min(rows, r_x.size - s), r.size))
        for j, pw in enumerate(powers):
            ph += y[s:s + rows, j, None] * pw[None, :]
        amp = sphere_ft(v.n, r_x[s:s + rows, None] * r[None, :]) * wr[None, :]
        out[s:s + rows] = np.sum(amp * np.exp(2j * math.pi * ph), axis=1)
    return out


def bump_mass_nd(v: Variety) -> float:
    """Integral of phi over R^n by the radial formula."""
    return bump_for(v).mass(v.n)


__all__ = [
    "KernelPoint", "KernelValue", "KPieces", "AAlphaTable", "a_alpha", "k_pieces", "k_direct",
    "k_radial", "k_radial_with_error", "kernel_K", "kernel_K_direct", "k_batch",
    "max_local_frequency", "bump_mass_nd", "sphere_area",
]
