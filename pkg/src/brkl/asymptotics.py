"""Stationary-phase evaluation of k in the region where |x| is comparable to
y_1, the four-piece decomposition of k, and empirical checks of the
oscillatory-integral bounds (van der Corput ratios, H sublevel measures).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamples, ValidationError
from .kernel import DEFAULT_MAX_EVALS, DEFAULT_TOL, bump_for, k_direct, k_pieces
from .oscquad import OscIntegral, integrate_osc, vdc_bound
from .phase import RadialPhase, critical_point, h_inf, h_inf_batch, scale_reduce
from .special import ETA, BumpProfile, sphere_area, sphere_ft_asymptotic
from .variety import Variety


@dataclass(frozen=True)
class RegionR:
    """delta1/2 <= |x|/y_1 <= delta1, |y_i| <= delta1 y_1, y_1 >= E, y_i >= 1, |x| >= 1."""

    delta1: float = 0.05
    E: float = 1e3

    def __post_init__(self):
        if not self.delta1 > 0 or not self.E > 0:
            raise ValidationError("delta1 and E must be positive")

    def contains(self, x_norm: float, y) -> bool:
        y = tuple(float(t) for t in y)
        y1 = y[0]
        if y1 < self.E or x_norm < 1:
            return False
        ratio = x_norm / y1
        if not (0.5 * self.delta1 <= ratio <= self.delta1):
            return False
        return all(1.0 <= yi <= self.delta1 * y1 for yi in y[1:])

    def ray_point(self, v: Variety, x_norm: float, frac: float = 0.75) -> tuple[float, ...]:
        """y on the ray |x| = frac * delta1 * y_1 with y_i = 1 for i >= 2."""
        y1 = x_norm / (frac * self.delta1)
        return (y1,) + (1.0,) * (v.L1 - 1)


# ---------------------------------------------------------------------------
# stationary phase


@dataclass(frozen=True)
class StationaryTerm:
    value: complex
    s_star: float
    lam: float
    second_derivative: float
    sigma: float = 0.0
    r_star: float = 0.0


def stationary_phase_main(v: Variety, x_norm: float, y) -> StationaryTerm:
    """Leading stationary-phase term of the branch with phase -|x| r + y.Psi0(r).

    Phi''(r*) and Phi(r*) are computed in the scaled variable r = sigma s so
    the critical point search is well conditioned for any lambda.
    """
    y = tuple(float(t) for t in y)
    sp = scale_reduce(v, x_norm, y)
    s_star, d2_scaled = critical_point(sp.phase)
    sigma, lam = sp.sigma, sp.lam
    r_star = sigma * s_star
    phi_val = lam * sp.phase.value(s_star, check=False)
    d2 = lam * d2_scaled / sigma**2
    n = v.n
    a = sphere_ft_asymptotic(n, max(1.0, x_norm * r_star))[0]
    phi0 = bump_for(v)(r_star)
    # reduce the phase mod 1 before exponentiating
    frac = phi_val - math.floor(phi_val)
    value = (
        a
        * x_norm ** (-0.5 * (n - 1))
        * np.exp(2j * math.pi * frac)
        * np.exp(0.25j * math.pi * math.copysign(1.0, d2))
        * abs(d2) ** -0.5
        * r_star ** (0.5 * (n - 1))
        * phi0
    )
    return StationaryTerm(complex(value), s_star, lam, d2, sigma, r_star)


# ---------------------------------------------------------------------------
# k = M + E1 + E2 + E3


@dataclass(frozen=True)
class Decomposition:
    """``M`` is the stationary branch integrated numerically, ``E1`` the part
    with r |x| <= 1, ``E2`` the non-stationary branch, ``E3`` the remainder of
    the sphere transform's two-term expansion."""

    x_norm: float
    M: complex
    E1: complex
    E2: complex
    E3: complex
    err_est: float

    @property
    def total(self) -> complex:
        return self.M + self.E1 + self.E2 + self.E3

    def scaled(self, n: int) -> dict:
        x = self.x_norm
        return {
            "M": abs(self.M) * x ** (0.5 * n),
            "E1": abs(self.E1) * x**n,
            "E2": abs(self.E2) * x ** (0.5 * (n + 1)),
            "E3": abs(self.E3) * x ** (0.5 * (n + 1)),
        }


def decompose_k(v: Variety, x_norm: float, y, tol: float = DEFAULT_TOL,
                max_evals: int = DEFAULT_MAX_EVALS) -> Decomposition:
    p = k_pieces(v, x_norm, y, tol, max_evals)
    E3 = 0j if p.remainder is None else p.remainder.value
    return Decomposition(float(x_norm), complex(p.minus), complex(p.near.value), complex(p.plus),
                         complex(E3), p.err_est)


def decomposition_check(v: Variety, x_norm: float, y, tol: float = DEFAULT_TOL,
                        max_evals: int = DEFAULT_MAX_EVALS) -> tuple[Decomposition, complex, float]:
    """Decomposition plus the single-quadrature value of k and its error estimate."""
    dec = decompose_k(v, x_norm, y, tol, max_evals)
    ref = k_direct(v, x_norm, y, tol, max_evals)
    return dec, ref.value, ref.error_estimate


# ---------------------------------------------------------------------------
# fitting helpers


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def envelope_slope(x, y, bins: int = 8) -> float:
    """Slope of the per-bin maxima of |y| in log-log coordinates.

    Useful when |y| oscillates underneath a power-law envelope.
    """
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    edges = np.linspace(np.log(x.min()), np.log(x.max()), bins + 1)
    idx = np.clip(np.digitize(np.log(x), edges) - 1, 0, bins - 1)
    px, py = [], []
    for b in range(bins):
        sel = idx == b
        if sel.any():
            j = np.argmax(np.where(sel, y, -np.inf))
            px.append(x[j])
            py.append(y[j])
    return loglog_slope(px, py)


def region_ray(v: Variety, x_values, region: RegionR = RegionR(), frac: float = 0.75):
    return [(float(x), region.ray_point(v, float(x), frac)) for x in x_values]


# ---------------------------------------------------------------------------
# van der Corput ratios


@dataclass(frozen=True)
class VdcCase:
    phase: RadialPhase
    amplitude: object = field(default_factory=BumpProfile)
    interval: tuple[float, float] | None = None


@dataclass(frozen=True)
class VdcStats:
    ratios: tuple[float, ...]
    kappas: tuple[float, ...]
    max: float
    median: float
    per_decade: dict


def vdc_ratio(case: VdcCase, tol: float = 1e-10) -> tuple[float, float]:
    """(|integral| / vdc_bound, kappa) for one case."""
    interval = case.phase.domain if case.interval is None else case.interval
    res = integrate_osc(OscIntegral(case.amplitude, case.phase, tuple(interval), tol=tol,
                                    max_evals=50_000_000))
    bound = vdc_bound(case.phase, case.amplitude, interval)
    kappa = h_inf(case.phase, interval).value
    return abs(res.value) / bound, kappa


def _stats(ratios, kappas) -> VdcStats:
    r = np.asarray(ratios, dtype=float)
    k = np.asarray(kappas, dtype=float)
    per = {}
    pos = k > 0
    if pos.any():
        dec = np.floor(np.log10(k[pos])).astype(int)
        for d in np.unique(dec):
            per[int(d)] = float(r[pos][dec == d].max())
    if (~pos).any():
        per[None] = float(r[~pos].max())
    return VdcStats(tuple(r.tolist()), tuple(k.tolist()), float(r.max()), float(np.median(r)), per)


def vdc_check(cases, threads: int = 1) -> VdcStats:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        out = list(ex.map(vdc_ratio, cases))
    return _stats([o[0] for o in out], [o[1] for o in out])


def fresnel_suite(lams, radius: float = 0.5) -> list[VdcCase]:
    return [VdcCase(RadialPhase(1, 0.0, (float(lam),), (2,), (-radius, radius)), BumpProfile(radius))
            for lam in lams]


def random_radial_suite(count: int, seed: int = 0, max_degree: int = 6, max_coeff: float = 1e3) -> list[VdcCase]:
    """Random radial monomial phases sign*|x| t + sum y_j |t|^{d_j}, d_j <= max_degree."""
    cases = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        k = int(rng.integers(1, max_degree))
        d = tuple(sorted(rng.choice(np.arange(2, max_degree + 1), size=min(k, max_degree - 1), replace=False)))
        y = tuple(rng.uniform(-1, 1, len(d)) * 10 ** rng.uniform(0, math.log10(max_coeff), len(d)))
        x = float(10 ** rng.uniform(0, math.log10(max_coeff)))
        cases.append(VdcCase(RadialPhase(int(rng.choice([-1, 1])), x, y, d)))
    return cases


def vdc_radial_ratio(v: Variety, sign: int, x_norm: float, y, tol: float = 1e-10) -> tuple[float, float]:
    """|x|^{-(n-1)/2} |int e^{2 pi i(sign |x| r + y.Psi0)} r^{(n-1)/2} eta(|x| r) phi0(r) dr|
    divided by kappa^{-1} |x|^{-(n-1)/2}, with kappa = H over [0, delta]."""
    phi = bump_for(v)
    n = v.n
    phase = RadialPhase(sign, float(x_norm), tuple(y), v.d, (0.0, v.delta))
    lo = min(v.delta, 0.5 / x_norm)

    def amp(r):
        return r ** (0.5 * (n - 1)) * ETA(r * x_norm) * phi(r)

    res = integrate_osc(OscIntegral(amp, phase, (lo, v.delta), tol=tol, max_evals=50_000_000))
    kappa = h_inf(phase, (0.0, v.delta)).value
    return abs(res.value) * kappa, kappa


# ---------------------------------------------------------------------------
# sublevel measures of H


@dataclass(frozen=True)
class SublevelResult:
    l: int
    m: int
    value: float
    stderr: float
    bound_trivial: float
    bound_sublevel: float

    @property
    def ratio_trivial(self) -> float:
        return self.value / self.bound_trivial

    @property
    def ratio_sublevel(self) -> float:
        return self.value / self.bound_sublevel


def _uniform_directions(rng, count: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sublevel_measure(v: Variety, l: int, m: int, p: float, samples: int = 20000, seed: int = 0,
                     max_rel_err: float = 0.25) -> SublevelResult:
    """Monte Carlo estimate of the integral of |x|^{-p(n-1)/2} over
    {2^{l-1} < H(x, y) <= 2^l, |x| <= |y|, 2^{m-1} <= |y| < 2^m}, (x, y) in R^n x R^{L1}.

    y is uniform in its shell; |x| is drawn with density proportional to
    r^{n-1-beta} on [0, |y|] (beta = p(n-1)/2), which cancels the integrand.
    """
    if l < 0 or m < 0:
        raise ValidationError("l and m must be non-negative")
    n, L1 = v.n, v.L1
    beta = p * (n - 1) / 2.0
    if n - beta <= 0:
        raise ValidationError("|x|^{-p(n-1)/2} is not locally integrable for this p")
    rng = np.random.default_rng([seed, l, m])
    r1, r2 = 2.0 ** (m - 1), 2.0**m
    u = rng.random(samples)
    ry = (r1**L1 + u * (r2**L1 - r1**L1)) ** (1.0 / L1)
    y = ry[:, None] * _uniform_directions(rng, samples, L1)
    vol_y = sphere_area(L1) / L1 * (r2**L1 - r1**L1)
    e = n - beta
    rx = ry * rng.random(samples) ** (1.0 / e)
    # x-integral of |x|^{-beta} over the ball of radius |y|
    weight = vol_y * sphere_area(n) * ry**e / e
    H, _ = h_inf_batch(rx, y, v.d, (-v.delta, v.delta))
    hit = (H > 2.0 ** (l - 1)) & (H <= 2.0**l)
    f = np.where(hit, weight, 0.0)
    value = float(f.mean())
    stderr = float(f.std(ddof=1) / math.sqrt(samples))
    if value > 0 and stderr > max_rel_err * value:
        raise InsufficientSamples(f"relative standard error {stderr / value:.2f} exceeds {max_rel_err}")
    triv = 2.0 ** (m * v.L) * 2.0 ** (m * n - p * (n - 1) * m / 2.0)
    est2 = 2.0 ** (2 * l) * 2.0 ** (L1 * m) * 2.0 ** (m * (n - 1 - p * (n - 1) / 2.0))
    return SublevelResult(l, m, value, stderr, triv, est2)


__all__ = [
    "RegionR", "StationaryTerm", "Decomposition", "VdcCase", "VdcStats", "SublevelResult",
    "stationary_phase_main", "decompose_k", "decomposition_check", "loglog_slope", "envelope_slope",
    "region_ray", "vdc_ratio", "vdc_check", "fresnel_suite", "random_radial_suite",
    "vdc_radial_ratio", "sublevel_measure",
]
