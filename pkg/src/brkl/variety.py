"""Radial monomial graph varieties and their closed-form exponents.

A variety is the graph of Psi(xi) = (|xi|^d_1, ..., |xi|^d_L1, 0, ..., 0) in
R^n x R^L.  All exponent arithmetic is done with ``fractions.Fraction`` so the
identities checked by the test-suite hold exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence

from .errors import (
    BadDimensions,
    DualUndefined,
    EmptyGraph,
    ExponentBelowTwo,
    NonIncreasingExponents,
    NonPositiveAlpha,
    OddLeadingExponent,
    ValidationError,
)


def as_fraction(value) -> Fraction:
    """Exact rational for ints, Fractions and decimal-looking floats."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value)
    raise ValidationError(f"cannot interpret {value!r} as a rational number")


@dataclass(frozen=True)
class Variety:
    n: int
    L: int
    L1: int
    d: tuple[int, ...]
    delta: float = 0.5

    @property
    def L2(self) -> int:
        return self.L - self.L1

    @property
    def N(self) -> int:
        return self.n + self.L

    @property
    def D(self) -> int:
        return sum(self.d)

    @property
    def d_max(self) -> int:
        return self.d[-1]

    def to_dict(self) -> dict:
        return {"n": self.n, "L": self.L, "L1": self.L1, "d": list(self.d), "delta": self.delta}


def validate_variety(raw: Mapping) -> Variety:
    """Build a :class:`Variety` from a plain mapping, enforcing every invariant."""
    try:
        n = int(raw["n"])
        L = int(raw["L"])
        d = tuple(int(v) for v in raw["d"])
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r}") from None
    L1 = int(raw.get("L1", len(d)))
    delta = float(raw.get("delta", 0.5))

    if n < 1 or L < 1:
        raise BadDimensions(f"need n >= 1 and L >= 1, got n={n}, L={L}")
    if L1 == 0 or not d:
        raise EmptyGraph("at least one non-zero graph component is required")
    if L1 < 0 or L1 > L:
        raise BadDimensions(f"need 1 <= L1 <= L, got L1={L1}, L={L}")
    if len(d) != L1:
        raise BadDimensions(f"d has {len(d)} entries but L1={L1}")
    if any(dj < 2 for dj in d):
        raise ExponentBelowTwo(f"all exponents must be >= 2, got {list(d)}")
    if any(b <= a for a, b in zip(d, d[1:])):
        raise NonIncreasingExponents(f"exponents must be strictly increasing, got {list(d)}")
    if d[0] % 2:
        raise OddLeadingExponent(f"leading exponent d_1={d[0]} must be even")
    if not (delta > 0 and math.isfinite(delta)):
        raise ValidationError(f"delta must be positive, got {delta}")
    return Variety(n=n, L=L, L1=L1, d=d, delta=delta)


def _check_alpha(alpha) -> Fraction:
    a = as_fraction(alpha)
    if a <= 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
    return a


def integrability_threshold(n: int, codim: int, alpha) -> Fraction:
    """(codim + n) / (codim + alpha + n/2), valid for alpha >= 0 (limit values included)."""
    a = as_fraction(alpha)
    return Fraction(codim + n) / (codim + a + Fraction(n, 2))


def herz_exponent(N: int, alpha) -> Fraction:
    """Integrability threshold 2N/(N+1+2 alpha) of the classical sphere kernel in R^N."""
    return Fraction(2 * N) / (N + 1 + 2 * as_fraction(alpha))


def critical_exponent(v: Variety, alpha) -> Fraction:
    return integrability_threshold(v.n, v.L, _check_alpha(alpha))


def knapp_exponent(v: Variety) -> Fraction:
    """q' = 2 (1 + D/n) with D the sum of the non-zero exponents."""
    return 2 * (1 + Fraction(v.D, v.n))


def mockenhoupt_alpha_threshold(n: int, codim: int, p) -> Fraction:
    p = as_fraction(p)
    if p <= 0:
        raise ValidationError(f"p must be positive, got {p}")
    value = (n + codim) * abs(1 / p - Fraction(1, 2)) - Fraction(codim, 2)
    return max(value, Fraction(0))


def dual_endpoint(n: int, codim: int, alpha) -> Fraction:
    a = as_fraction(alpha)
    denom = codim - a + Fraction(n, 2)
    if denom <= 0:
        raise DualUndefined(
            f"alpha={a} >= codim + n/2 = {codim + Fraction(n, 2)}: upper endpoint undefined"
        )
    return Fraction(codim + n) / denom


@dataclass(frozen=True)
class ExponentReport:
    variety: Variety
    alpha: Fraction
    p_star: Fraction
    p_star_sub: Fraction
    knapp_qprime: Fraction
    # upper endpoint is None when the range is open-ended (alpha >= L1 + n/2)
    operator_range: tuple[Fraction, Fraction | None]
    sphere_check: Fraction | None
    gap_flag: bool
    hypothesis_met: bool
    status: str = field(default="proven")

    def csv_row(self) -> dict:
        lo, hi = self.operator_range
        v = self.variety
        return {
            "n": v.n,
            "L": v.L,
            "L1": v.L1,
            "d": ";".join(str(x) for x in v.d),
            "alpha": float(self.alpha),
            "p_star": float(self.p_star),
            "p_star_sub": float(self.p_star_sub),
            "knapp_qprime": float(self.knapp_qprime),
            "op_lo": float(lo),
            "op_hi": math.inf if hi is None else float(hi),
            "gap_flag": int(self.gap_flag),
            "hypothesis_met": int(self.hypothesis_met),
        }


EXPONENT_COLUMNS = [
    "n", "L", "L1", "d", "alpha", "p_star", "p_star_sub", "knapp_qprime",
    "op_lo", "op_hi", "gap_flag", "hypothesis_met",
]


def exponent_report(v: Variety, alpha) -> ExponentReport:
    """Every closed-form exponent for ``(v, alpha)``.

    The operator range is only established when d_1 >= n (L1 + 1); otherwise
    ``status`` is ``"conjectural"``.  An alpha at or beyond L1 + n/2 gives an
    open-ended range (upper endpoint ``None``).
    """
    a = _check_alpha(alpha)
    p_star = integrability_threshold(v.n, v.L, a)
    p_sub = integrability_threshold(v.n, v.L1, a)
    try:
        hi = dual_endpoint(v.n, v.L1, a)
    except DualUndefined:
        hi = None
    hypothesis = v.d[0] >= v.n * (v.L1 + 1)
    return ExponentReport(
        variety=v,
        alpha=a,
        p_star=p_star,
        p_star_sub=p_sub,
        knapp_qprime=knapp_exponent(v),
        operator_range=(p_sub, hi),
        sphere_check=herz_exponent(v.n + 1, a) if v.L == 1 else None,
        gap_flag=v.L1 < v.L and a < Fraction(v.n, 2),
        hypothesis_met=hypothesis,
        status="proven" if hypothesis else "conjectural",
    )


def make_variety(n: int, L: int, d: Sequence[int], L1: int | None = None, delta: float = 0.5) -> Variety:
    return validate_variety({"n": n, "L": L, "L1": len(d) if L1 is None else L1, "d": list(d), "delta": delta})
