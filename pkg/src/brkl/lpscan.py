"""Monte Carlo masses of |K|^p on dyadic shells 2^{m-1} <= |(x, y, z)| < 2^m
and the fitted growth rate of those masses in m.

The sign of the fitted slope decides whether the tail of int |K|^p
converges.  All randomness comes from per-block substreams of one seed and
every reduction runs in a fixed order, so results do not depend on the
number of worker threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InsufficientSamples, PoorFit, ValidationError
from .kernel import AAlphaTable, k_batch, max_local_frequency
from .special import sphere_area
from .variety import Variety, critical_exponent

M_MIN = 4
BLOCK = 4096
CHUNK = 256
REL_ERR_CAP = 0.2
RESIDUAL_CAP = 0.25
BAND = 0.15


def resolve_threads(threads) -> int:
    if threads in (None, "auto", 0):
        return os.cpu_count() or 1
    return max(1, int(threads))


@dataclass(frozen=True)
class SamplerConfig:
    """How points of a shell are drawn.

    ``uniform`` samples the whole shell; ``region`` restricts to the region
    delta1/2 <= |x|/y_1 <= delta1, y_1 >= E (importance weights attached);
    ``decay`` puts |x| in the shell with (y, z) confined to a ball of radius
    ``yz_radius``, a region where K is negligible.
    """

    mode: str = "uniform"
    delta1: float = 0.05
    E: float = 1e3
    yz_radius: float = 1.0
    samples: int = 100_000

    def __post_init__(self):
        if self.mode not in ("uniform", "region", "decay"):
            raise ValidationError(f"unknown sampler mode {self.mode!r}")
        if self.samples < 2:
            raise ValidationError("need at least two samples")


@dataclass(frozen=True)
class ShellEstimate:
    m: int
    p: float
    mass: float
    stderr: float
    samples: int

    @property
    def rel_err(self) -> float:
        return self.stderr / self.mass if self.mass > 0 else math.inf


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    m_range: tuple[int, int]
    theory_slope: float
    slope_stderr: float = 0.0
    p: float = math.nan


@dataclass(frozen=True)
class Verdict:
    label: str
    analytic_sign: int
    agrees: bool


# ---------------------------------------------------------------------------
# sampling


def _ball_volume(dim: int, r: float) -> float:
    return sphere_area(dim) / dim * r**dim


def _directions(rng, count: int, dim: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _radii(rng, count: int, dim: int, r1: float, r2: float) -> np.ndarray:
    """Radii of points uniform in the dim-dimensional annulus r1 <= r < r2."""
    u = rng.random(count)
    return (r1**dim + u * (r2**dim - r1**dim)) ** (1.0 / dim)


@dataclass
class _Points:
    r_x: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    weight: np.ndarray


def _draw_block(v: Variety, sampler: SamplerConfig, rng, count: int, r1: float, r2: float) -> _Points:
    n, L1, L2 = v.n, v.L1, v.L2
    if sampler.mode == "uniform":
        N = v.N
        pts = _radii(rng, count, N, r1, r2)[:, None] * _directions(rng, count, N)
        x, y, z = pts[:, :n], pts[:, n:n + L1], pts[:, n + L1:]
        w = np.full(count, _ball_volume(N, r2) - _ball_volume(N, r1))
    elif sampler.mode == "decay":
        x = _radii(rng, count, n, r1, r2)[:, None] * _directions(rng, count, n)
        yz = _radii(rng, count, v.L, 0.0, sampler.yz_radius)[:, None] * _directions(rng, count, v.L)
        y, z = yz[:, :L1], yz[:, L1:]
        w = np.full(count, (_ball_volume(n, r2) - _ball_volume(n, r1)) * _ball_volume(v.L, sampler.yz_radius))
    else:
        d1, E = sampler.delta1, sampler.E
        y1 = E + (r2 - E) * rng.random(count)
        hi = d1 * y1
        rx = _radii(rng, count, n, 0.5 * hi, hi)
        x = rx[:, None] * _directions(rng, count, n)
        rest = 1.0 + (hi - 1.0)[:, None] * rng.random((count, L1 - 1))
        y = np.concatenate([y1[:, None], rest], axis=1)
        z = (_radii(rng, count, L2, 0.0, r2)[:, None] * _directions(rng, count, L2)) if L2 else np.zeros((count, 0))
        dens_inv = ((r2 - E) * (_ball_volume(n, 1.0) * (hi**n - (0.5 * hi) ** n))
                    * np.prod(np.broadcast_to((hi - 1.0)[:, None], (count, L1 - 1)), axis=1))
        if L2:
            dens_inv = dens_inv * _ball_volume(L2, r2)
        norm = np.sqrt(np.sum(x * x, axis=1) + np.sum(y * y, axis=1) + np.sum(z * z, axis=1))
        inside = (norm >= r1) & (norm < r2)
        w = np.where(inside, dens_inv, 0.0)
    r_x = np.linalg.norm(x, axis=1)
    rho = np.sqrt(np.sum(y * y, axis=1) + np.sum(z * z, axis=1))
    return _Points(r_x, y, rho, w)


def draw_shell(v: Variety, sampler: SamplerConfig, m: int, seed: int,
               r_range: tuple[float, float] | None = None) -> _Points:
    """All samples of shell m; block b comes from the substream (seed, m, b)."""
    r1, r2 = (2.0 ** (m - 1), 2.0**m) if r_range is None else r_range
    blocks = []
    for b, start in enumerate(range(0, sampler.samples, BLOCK)):
        count = min(BLOCK, sampler.samples - start)
        rng = np.random.default_rng([seed, m, b])
        if sampler.mode == "region" and r2 <= sampler.E:
            blocks.append(_Points(np.ones(count), np.ones((count, v.L1)), np.ones(count), np.zeros(count)))
            continue
        blocks.append(_draw_block(v, sampler, rng, count, r1, r2))
    return _Points(
        np.concatenate([b.r_x for b in blocks]),
        np.concatenate([b.y for b in blocks]),
        np.concatenate([b.rho for b in blocks]),
        np.concatenate([b.weight for b in blocks]),
    )


# ---------------------------------------------------------------------------
# |K| at the samples


def abs_k(v: Variety, r_x: np.ndarray, y: np.ndarray, threads=1) -> np.ndarray:
    """|k| at many points.  Points are sorted by oscillation frequency and cut
    into fixed chunks, so each chunk's quadrature grid is independent of the
    thread count."""
    out = np.empty(r_x.size)
    if r_x.size == 0:
        return out
    order = np.argsort(max_local_frequency(v, r_x, y), kind="stable")
    chunks = [order[s:s + CHUNK] for s in range(0, order.size, CHUNK)]

    def work(idx):
        return idx, np.abs(k_batch(v, r_x[idx], y[idx]))

    with ThreadPoolExecutor(max_workers=resolve_threads(threads)) as ex:
        for idx, vals in ex.map(work, chunks):
            out[idx] = vals
    return out


_TABLES: dict[tuple, AAlphaTable] = {}


def a_table(v: Variety, alpha: float, rho_max: float) -> AAlphaTable:
    # one table per power-of-two range: a shell always sees the same table,
    # whatever was computed before it
    size = 2.0 ** math.ceil(math.log2(max(rho_max, 64.0)))
    key = (v.L, v.delta, float(alpha), size)
    tab = _TABLES.get(key)
    if tab is None:
        tab = AAlphaTable(v, alpha, size)
        _TABLES[key] = tab
    return tab


def _weighted_abs_K(v: Variety, alpha: float, pts: _Points, threads) -> tuple[np.ndarray, np.ndarray]:
    w = pts.weight
    live = w > 0
    absK = np.zeros(w.size)
    if live.any():
        tab = a_table(v, alpha, float(pts.rho[live].max()))
        ak = abs_k(v, pts.r_x[live], pts.y[live], threads)
        absK[live] = np.abs(tab(pts.rho[live])) * ak
    return w, absK


def _mass(w: np.ndarray, absK: np.ndarray, p: float) -> tuple[float, float]:
    f = w * absK**p
    n = f.size
    mean = math.fsum(f) / n
    var = math.fsum((f - mean) ** 2) / (n - 1)
    return mean, math.sqrt(var / n)


def shell_masses(v: Variety, alpha: float, ps: Sequence[float], m: int, sampler: SamplerConfig = SamplerConfig(),
                 seed: int = 0, threads=1, r_range: tuple[float, float] | None = None,
                 m_min: int = M_MIN, rel_err_cap: float | None = None) -> list[ShellEstimate]:
    """Shell mass estimates for several p from one shared set of samples."""
    if m < m_min:
        raise ValidationError(f"shell index {m} below m_min = {m_min}")
    if any(p <= 0 for p in ps):
        raise ValidationError("p must be positive")
    pts = draw_shell(v, sampler, m, seed, r_range)
    w, absK = _weighted_abs_K(v, alpha, pts, threads)
    out = []
    for p in ps:
        mass, se = _mass(w, absK, float(p))
        est = ShellEstimate(m, float(p), mass, se, sampler.samples)
        if rel_err_cap is not None and mass > 0 and est.rel_err > rel_err_cap:
            raise InsufficientSamples(f"shell {m}, p={p}: relative stderr {est.rel_err:.2f} > {rel_err_cap}")
        out.append(est)
    return out


def shell_mass(v: Variety, alpha: float, p: float, m: int, sampler: SamplerConfig = SamplerConfig(),
               seed: int = 0, threads=1, **kw) -> ShellEstimate:
    return shell_masses(v, alpha, [p], m, sampler, seed, threads, **kw)[0]


def region_R_mass(v: Variety, alpha: float, p: float, m: int, seed: int = 0, delta1: float = 0.05,
                  E: float = 1e3, samples: int = 100_000, threads=1) -> ShellEstimate:
    sampler = SamplerConfig("region", delta1=delta1, E=E, samples=samples)
    return shell_mass(v, alpha, p, m, sampler, seed, threads)


def scan(v: Variety, alpha: float, ps: Sequence[float], m_range: tuple[int, int],
         sampler: SamplerConfig = SamplerConfig(), seed: int = 0, threads=1) -> dict[float, list[ShellEstimate]]:
    """Shell masses for every p and every m in the inclusive range."""
    out = {float(p): [] for p in ps}
    for m in range(m_range[0], m_range[1] + 1):
        for est in shell_masses(v, alpha, ps, m, sampler, seed, threads):
            out[est.p].append(est)
    return out


# ---------------------------------------------------------------------------
# fitting and verdicts


def theory_slope(v: Variety, alpha, p) -> float:
    return float(v.N - Fraction(str(p)) * (v.L + Fraction(str(alpha)) + Fraction(v.n, 2)))


def exponent_fit(estimates: Sequence[ShellEstimate], v: Variety | None = None, alpha=None,
                 rel_err_cap: float = REL_ERR_CAP, residual_cap: float = RESIDUAL_CAP) -> SlopeFit:
    """Weighted least squares of log2(mass) against m."""
    est = sorted(estimates, key=lambda e: e.m)
    if len(est) < 4:
        raise PoorFit(f"need at least 4 shells, got {len(est)}")
    for e in est:
        if not e.mass > 0:
            raise InsufficientSamples(f"shell {e.m} has zero mass")
        if e.rel_err > rel_err_cap:
            raise InsufficientSamples(f"shell {e.m}: relative stderr {e.rel_err:.2f} > {rel_err_cap}")
    m = np.array([e.m for e in est], dtype=float)
    yv = np.log2([e.mass for e in est])
    sig = np.array([max(e.rel_err, 1e-12) / math.log(2.0) for e in est])
    wts = 1.0 / sig**2
    A = np.stack([m, np.ones_like(m)], axis=1)
    Aw = A * np.sqrt(wts)[:, None]
    coef, *_ = np.linalg.lstsq(Aw, yv * np.sqrt(wts), rcond=None)
    cov = np.linalg.inv(Aw.T @ Aw)
    resid = yv - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    p = est[0].p
    th = theory_slope(v, alpha, p) if v is not None and alpha is not None else math.nan
    fit = SlopeFit(float(coef[0]), float(coef[1]), rms, (int(m[0]), int(m[-1])), th,
                   float(math.sqrt(cov[0, 0])), p)
    if rms > residual_cap:
        raise PoorFit(f"RMS residual {rms:.3f} (log2 units) exceeds {residual_cap}")
    return fit


def convergence_verdict(fit: SlopeFit, v: Variety, alpha, band: float = BAND) -> Verdict:
    """Converges if the slope is below -band, Diverges above +band."""
    if fit.slope < -band:
        label = "Converges"
    elif fit.slope > band:
        label = "Diverges"
    else:
        label = "Inconclusive"
    diff = Fraction(str(fit.p)) - critical_exponent(v, alpha)
    sign = (diff > 0) - (diff < 0)
    expected = {1: "Converges", -1: "Diverges", 0: "Inconclusive"}[sign]
    return Verdict(label, sign, label == expected)


__all__ = [
    "SamplerConfig", "ShellEstimate", "SlopeFit", "Verdict", "draw_shell", "abs_k", "a_table",
    "shell_masses", "shell_mass", "region_R_mass", "scan", "theory_slope", "exponent_fit",
    "convergence_verdict", "resolve_threads",
]
