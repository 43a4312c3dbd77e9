import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brkl import make_variety
from brkl.asymptotics import (
    RegionR,
    decompose_k,
    decomposition_check,
    envelope_slope,
    fresnel_suite,
    loglog_slope,
    random_radial_suite,
    region_ray,
    stationary_phase_main,
    sublevel_measure,
    vdc_check,
    vdc_radial_ratio,
)
from brkl.errors import InsufficientSamples, ValidationError
from brkl.kernel import bump_for

V1 = make_variety(n=1, L=1, d=(2,))
V2 = make_variety(n=2, L=1, d=(2,))
V23 = make_variety(n=2, L=2, d=(2, 4))


def test_region_membership():
    R = RegionR(0.05, 1e3)
    assert R.contains(40.0, (1000.0,))
    assert not R.contains(40.0, (999.0,))
    assert not R.contains(60.0, (1000.0,))
    assert not R.contains(20.0, (1000.0,))
    assert R.contains(40.0, (1000.0, 1.0))
    assert not R.contains(40.0, (1000.0, 0.5))
    assert not R.contains(40.0, (1000.0, 51.0))
    with pytest.raises(ValidationError):
        RegionR(0.0, 1.0)


@given(st.floats(50, 1e5))
def test_ray_points_inside(x):
    R = RegionR(0.05, 1e3)
    y = R.ray_point(V23, x)
    assert len(y) == 2 and R.contains(x, y)
    assert region_ray(V23, [x], R)[0] == (x, y)


def test_stationary_fresnel_closed_form():
    x, y1 = 40.0, 1e3
    st_ = stationary_phase_main(V1, x, (y1,))
    r_star = x / (2 * y1)
    assert st_.r_star == pytest.approx(r_star, rel=1e-10)
    assert st_.second_derivative == pytest.approx(2 * y1, rel=1e-9)
    phase = -(x**2) / (4 * y1)
    exact = (2 * y1) ** -0.5 * bump_for(V1)(r_star) * np.exp(2j * np.pi * phase + 0.25j * np.pi)
    assert abs(st_.value - exact) < 1e-9 * abs(exact)


@pytest.mark.parametrize("v", [V1, V2])
def test_stationary_term_approximates_branch(v):
    rel = []
    for x in (100.0, 1000.0):
        y = RegionR(0.05, 1.0).ray_point(v, x)
        dec = decompose_k(v, x, y)
        main = stationary_phase_main(v, x, y).value
        rel.append(abs(dec.M - main) / abs(main))
    assert rel[1] < 0.05 and rel[1] < rel[0]


@pytest.mark.parametrize("v", [V1, V2, V23])
def test_decomposition_sums_to_k(v):
    x = 150.0
    y = RegionR(0.05, 1.0).ray_point(v, x)
    dec, ref, ref_err = decomposition_check(v, x, y)
    assert abs(dec.total - ref) <= 10 * (dec.err_est + ref_err) + 1e-13
    s = dec.scaled(v.n)
    assert set(s) == {"M", "E1", "E2", "E3"}
    if v.n == 1:
        assert dec.E3 == 0


def test_slopes():
    x = np.geomspace(1, 1e3, 50)
    assert loglog_slope(x, 3 * x**-1.5) == pytest.approx(-1.5, abs=1e-12)
    x = np.linspace(10, 1000, 4000)
    y = x**-2.0 * np.abs(np.cos(x))
    assert envelope_slope(x, y) == pytest.approx(-2.0, abs=0.05)


def test_fresnel_vdc_bounded():
    stats = vdc_check(fresnel_suite(np.geomspace(10, 1e4, 13)), threads=2)
    assert stats.max < 2.0
    decs = [k for k in stats.per_decade if k is not None]
    vals = [stats.per_decade[k] for k in sorted(decs)]
    assert max(vals) / min(vals) < 1.25


def test_vdc_threads_identical():
    cases = random_radial_suite(6, seed=3)
    a = vdc_check(cases, threads=1)
    b = vdc_check(cases, threads=3)
    assert a == b


def test_random_radial_suite_deterministic():
    a = random_radial_suite(5, seed=11)
    b = random_radial_suite(5, seed=11)
    assert a == b
    assert all(1 <= len(c.phase.d) <= 5 and c.phase.d[0] >= 2 for c in a)


def test_vdc_radial_ratio_finite():
    ratios = [vdc_radial_ratio(V2, s, x, (x / 0.0375,))[0] for s in (-1, 1) for x in (30.0, 300.0)]
    assert all(np.isfinite(ratios)) and max(ratios) < 50


def test_sublevel_additivity_n1():
    # n = 1, d = (2): H >= sqrt(2 |y|) >= 1, so the dyadic levels l >= 1 exhaust the set
    m = 6
    r1, r2 = 2.0 ** (m - 1), 2.0**m
    exact = 2 * (r2**2 - r1**2)
    parts = [sublevel_measure(V1, l, m, 1.0, samples=6000, seed=1, max_rel_err=1.0) for l in range(0, m + 3)]
    total = sum(p.value for p in parts)
    se = math.sqrt(sum(p.stderr**2 for p in parts))
    assert abs(total - exact) <= 4 * se + 1e-9 * exact


def test_sublevel_errors():
    with pytest.raises(ValidationError):
        sublevel_measure(V2, -1, 3, 1.0)
    with pytest.raises(ValidationError):
        sublevel_measure(V2, 1, 3, 4.0)
    with pytest.raises(InsufficientSamples):
        sublevel_measure(V23, 8, 8, 1.0, samples=30, seed=0)
