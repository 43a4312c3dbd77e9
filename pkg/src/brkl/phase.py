"""Radial phases  Phi(t) = sign |x| t + sum_j y_j |t|^{d_j}  and the
van der Corput functional H(x, y) = inf_t sum_{j <= d_L1} |Phi^(j)(t)|^{1/j}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScaling, NoCriticalPoint, OrderTooHigh, OutOfDomain
from .variety import Variety

GRID_POINTS = 1024
N_BASINS = 3
GOLDEN_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _falling(d: int, j: int) -> float:
    out = 1.0
    for i in range(j):
        out *= d - i
    return out


@dataclass(frozen=True)
class RadialPhase:
    sign: int
    x_norm: float
    y: tuple[float, ...]
    d: tuple[int, ...]
    domain: tuple[float, float] = (-0.5, 0.5)

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        object.__setattr__(self, "d", tuple(int(v) for v in self.d))
        if len(self.y) != len(self.d):
            raise ValueError("y and d must have the same length")

    @classmethod
    def for_variety(cls, v: Variety, sign: int, x_norm: float, y) -> "RadialPhase":
        return cls(sign, float(x_norm), tuple(y), v.d, (-v.delta, v.delta))

    @property
    def max_order(self) -> int:
        return self.d[-1]

    @property
    def linear(self) -> float:
        return self.sign * self.x_norm

    def _check(self, t: np.ndarray) -> None:
        lo, hi = self.domain
        slack = 1e-12 * max(1.0, hi - lo)
        if t.size and (t.min() < lo - slack or t.max() > hi + slack):
            raise OutOfDomain(f"t outside [{lo}, {hi}]")

    def derivative(self, t, j: int = 0, check: bool = True):
        """j-th derivative; for t < 0 the terms are those of |t|^d."""
        if j < 0 or j > self.max_order:
            raise OrderTooHigh(f"order {j} exceeds d_L1 = {self.max_order}")
        t_arr = np.asarray(t, dtype=float)
        if check:
            self._check(t_arr)
        a = np.abs(t_arr)
        neg = t_arr < 0
        out = np.zeros_like(t_arr)
        if j == 0:
            out = out + self.linear * t_arr
        elif j == 1:
            out = out + self.linear
        for yj, dj in zip(self.y, self.d):
            if j > dj or yj == 0.0:
                continue
            term = yj * _falling(dj, j) * a ** (dj - j)
            if j % 2:
                term = np.where(neg, -term, term)
            out = out + term
        return out if np.ndim(t) else float(out)

    def value(self, t, check: bool = True):
        return self.derivative(t, 0, check)

    def __call__(self, t):
        return self.value(t)

    def h_t(self, t):
        """H_t = sum_{j=1}^{d_L1} |Phi^(j)(t)|^{1/j}."""
        t_arr = np.asarray(t, dtype=float)
        total = np.zeros_like(t_arr)
        for j in range(1, self.max_order + 1):
            total = total + np.abs(self.derivative(t_arr, j, check=False)) ** (1.0 / j)
        return total if np.ndim(t) else float(total)


@dataclass(frozen=True)
class HResult:
    value: float
    minimizer: float
    per_term: tuple[float, ...] = field(default=())


# ---------------------------------------------------------------------------
# batched H evaluation.  Coefficient layout: lin (M,), y (M, L1); t (..., K)


def _deriv_batch(lin, y, d, t, j):
    a = np.abs(t)
    neg = t < 0
    out = np.zeros(np.broadcast(lin[:, None], t).shape)
    if j == 1:
        out += lin[:, None]
    for k, dj in enumerate(d):
        if j > dj:
            continue
        term = y[:, k, None] * _falling(dj, j) * a ** (dj - j)
        if j % 2:
            term = np.where(neg, -term, term)
        out += term
    return out


def _h_batch(lin, y, d, t):
    total = np.zeros(np.broadcast(lin[:, None], t).shape)
    for j in range(1, d[-1] + 1):
        total += np.abs(_deriv_batch(lin, y, d, t, j)) ** (1.0 / j)
    return total


def _root_in(lin, y, d, j, left, right, iters=64):
    """Bisected sign change of Phi^(j) on [left, right] (left where none)."""
    fl = _deriv_batch(lin, y, d, left[:, None], j)[:, 0]
    fr = _deriv_batch(lin, y, d, right[:, None], j)[:, 0]
    has = np.sign(fl) * np.sign(fr) <= 0
    a_, b_ = left.copy(), right.copy()
    for _ in range(iters):
        mid = 0.5 * (a_ + b_)
        fm = _deriv_batch(lin, y, d, mid[:, None], j)[:, 0]
        same = np.sign(fm) == np.sign(fl)
        a_ = np.where(same, mid, a_)
        fl = np.where(same, fm, fl)
        b_ = np.where(same, b_, mid)
    return np.where(has, 0.5 * (a_ + b_), left)


def h_inf_batch(lin, y, d, interval=(-0.5, 0.5), grid=GRID_POINTS, basins=N_BASINS, tol=GOLDEN_TOL):
    """Vectorised H = inf over ``interval`` of H_t for M phases.

    ``lin`` holds the linear coefficients sign*|x|, ``y`` the (M, L1) monomial
    coefficients.  Returns (values, minimisers).
    """
    lin = np.atleast_1d(np.asarray(lin, dtype=float))
    y = np.asarray(y, dtype=float).reshape(lin.size, -1)
    d = tuple(d)
    lo, hi = interval
    tg = np.linspace(lo, hi, grid)
    H = _h_batch(lin, y, d, tg[None, :])
    M = lin.size
    step = tg[1] - tg[0]

    # discrete local minima (endpoints included), best `basins` of them
    left = np.concatenate([np.full((M, 1), np.inf), H[:, :-1]], axis=1)
    right = np.concatenate([H[:, 1:], np.full((M, 1), np.inf)], axis=1)
    is_min = (H <= left) & (H <= right)
    ranked = np.where(is_min, H, np.inf)
    k = min(basins, grid)
    order = np.argsort(ranked, axis=1, kind="stable")[:, :k]

    best_val = H.min(axis=1)
    best_t = tg[np.argmin(H, axis=1)]
    for b in range(k):
        idx = order[:, b]
        valid = np.isfinite(ranked[np.arange(M), idx])
        a_ = np.clip(tg[idx] - step, lo, hi)
        b_ = np.clip(tg[idx] + step, lo, hi)
        c = b_ - _INVPHI * (b_ - a_)
        e = a_ + _INVPHI * (b_ - a_)
        fc = _h_batch(lin, y, d, c[:, None])[:, 0]
        fe = _h_batch(lin, y, d, e[:, None])[:, 0]
        while np.max(b_ - a_) > tol:
            go_left = fc <= fe
            b_ = np.where(go_left, e, b_)
            a_ = np.where(go_left, a_, c)
            c = b_ - _INVPHI * (b_ - a_)
            e = a_ + _INVPHI * (b_ - a_)
            fc = _h_batch(lin, y, d, c[:, None])[:, 0]
            fe = _h_batch(lin, y, d, e[:, None])[:, 0]
        t_ref = 0.5 * (a_ + b_)
        cand = [a_, t_ref, b_]
        # minima often sit on a cusp |Phi^(j)|^{1/j} where golden section only
        # resolves sqrt(tol); add the sign changes of each derivative directly
        wl = np.clip(t_ref - step, lo, hi)
        wr = np.clip(t_ref + step, lo, hi)
        for j in range(1, d[-1]):
            cand.append(_root_in(lin, y, d, j, wl, wr))
        # the |t|^d terms are all non-smooth at the origin
        cand.append(np.full(M, min(max(0.0, lo), hi)))
        cand = np.stack(cand, axis=1)
        vals = _h_batch(lin, y, d, cand)
        j = np.argmin(vals, axis=1)
        v_ref = vals[np.arange(M), j]
        t_ref = cand[np.arange(M), j]
        better = valid & ((v_ref < best_val) | ((v_ref == best_val) & (t_ref < best_t)))
        best_val = np.where(better, v_ref, best_val)
        best_t = np.where(better, t_ref, best_t)
    return best_val, best_t


def h_inf(p: RadialPhase, interval: tuple[float, float] | None = None) -> HResult:
    interval = p.domain if interval is None else interval
    val, t = h_inf_batch([p.linear], [p.y], p.d, interval)
    t0 = float(t[0])
    per = tuple(abs(p.derivative(t0, j, check=False)) ** (1.0 / j) for j in range(1, p.max_order + 1))
    return HResult(value=float(val[0]), minimizer=t0, per_term=per)


def h_tilde1(p: RadialPhase, interval: tuple[float, float] | None = None, grid: int = 4097) -> float:
    """max_j inf_t |Phi^(j)(t)|, homogeneous of degree one in (x, y)."""
    lo, hi = p.domain if interval is None else interval
    t = np.linspace(lo, hi, grid)
    best = 0.0
    for j in range(1, p.max_order + 1):
        vals = p.derivative(t, j, check=False)
        if np.any(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0) or np.any(vals == 0):
            inf_j = 0.0
        else:
            inf_j = float(np.min(np.abs(vals)))
        best = max(best, inf_j)
    return best


# ---------------------------------------------------------------------------
# stationary regime


def critical_point(p: RadialPhase, upper: float | None = None, tol: float = 1e-12) -> tuple[float, float]:
    """Unique root s* > 0 of Phi' for sign = -1 and non-negative monomial
    coefficients (Phi' is then increasing on (0, upper]).  Returns (s*, Phi''(s*)).
    """
    if p.sign != -1 or p.x_norm <= 0 or p.y[0] <= 0 or any(v < 0 for v in p.y):
        raise NoCriticalPoint("critical_point needs sign=-1, |x| > 0, y_1 > 0 and y_j >= 0")
    hi = p.domain[1] if upper is None else upper
    lo = 0.0
    if p.derivative(hi, 1, check=False) < 0:
        raise NoCriticalPoint(f"Phi' < 0 on all of (0, {hi}]: no stationary point in the domain")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if p.derivative(mid, 1, check=False) < 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    return s, float(p.derivative(s, 2, check=False))


@dataclass(frozen=True)
class ScaledPhase:
    sigma: float
    lam: float
    epsilons: tuple[float, ...]
    phase: RadialPhase


def scale_reduce(v: Variety, x_norm: float, y) -> ScaledPhase:
    """Change of variables r = sigma s with sigma^{d_1 - 1} = |x| / y_1.

    The reduced phase is -s + s^{d_1} + sum_{j >= 2} eps_j s^{d_j}, with
    lambda = sigma |x| and eps_j = y_j sigma^{d_j} / lambda.
    """
    y = tuple(float(t) for t in y)
    if y[0] <= 0:
        raise DegenerateScaling(f"need y_1 > 0, got {y[0]}")
    if x_norm <= 0:
        raise DegenerateScaling(f"need |x| > 0, got {x_norm}")
    d1 = v.d[0]
    sigma = (x_norm / y[0]) ** (1.0 / (d1 - 1))
    lam = sigma * x_norm
    eps = tuple(yj * sigma**dj / lam for yj, dj in zip(y[1:], v.d[1:]))
    scaled = RadialPhase(-1, 1.0, (1.0,) + eps, v.d, (0.0, v.delta / sigma))
    return ScaledPhase(sigma, lam, eps, scaled)
