import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from vil.vortex import (
    DEMO_PARAMS,
    PiecewisePolynomial,
    VortexError,
    VortexParams,
    build_vortex,
    constant_profile,
    eval_A,
    gamma1_family,
)
from numpy.polynomial import Polynomial

# frozen outputs of scipy.quad on the shipped (untuned) demo parameters
V1_QUAD = 0.8275759241071428
PHASE_QUAD = {0.5: -0.24999999999999992, 1.3: -2.297915916731049, 2.0: -4.014313336197415}


@pytest.fixture(scope="module")
def demo():
    return build_vortex(DEMO_PARAMS)


def _quad(f, a, b, breaks):
    pts = [x for x in breaks if a < x < b]
    return quad(f, a, b, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def test_v1_matches_quadrature_oracle(demo):
    assert demo.v1 == pytest.approx(V1_QUAD, rel=1e-13)


@pytest.mark.parametrize("r", sorted(PHASE_QUAD))
def test_phase_integral_matches_quadrature_oracle(demo, r):
    assert float(demo.phase_integral(np.array([r]))[0]) == pytest.approx(PHASE_QUAD[r], rel=1e-12)


def test_zero_mean(demo):
    assert abs(float(demo.moment(np.array([demo.support_radius]))[0])) < 1e-13


def test_v0_is_half_core_vorticity(demo):
    assert demo.v0 == pytest.approx(DEMO_PARAMS.g0 / 2)


def test_v_prime_at_1_identity(demo):
    # v'(1) = g(1) - 2 v(1) and g(1) = -g1 at the well bottom
    assert demo.v_prime_at_1 == pytest.approx(-DEMO_PARAMS.g1 - 2 * demo.v1, rel=1e-14)
    assert demo.v_prime_at_1 < 0


def test_velocity_vanishes_past_support(demo):
    r = np.array([1.7, 3.0, 50.0])
    assert np.all(demo.v(r) == 0.0)
    assert np.all(demo.g(r) == 0.0)


def test_monotone_flanks(demo):
    r = np.linspace(0.0, 1.0, 2001)
    assert np.max(demo.g_prime(r)) <= 1e-12
    r = np.linspace(1.0, demo.support_radius, 2001)[1:-1]
    assert np.min(demo.g_prime(r)) >= -1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.02, max_value=1.58))
def test_v_matches_quadrature(r):
    prof = build_vortex(DEMO_PARAMS)
    ref = _quad(lambda s: s * float(prof.g(np.array(s))), 0.0, r, prof.g_pp.breaks) / r**2
    assert float(prof.v(np.array([r]))[0]) == pytest.approx(ref, rel=1e-10, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.01, max_value=1.59).filter(lambda r: abs(r - 1.0) > 0.05))
def test_A_matches_definition_away_from_r1(r):
    prof = build_vortex(DEMO_PARAMS)
    x = np.array([r])
    ref = prof.g_prime(x) / (x * (prof.v(x) - prof.v1))
    assert eval_A(prof, x)[0] == pytest.approx(ref[0], rel=1e-9)


def test_A_is_finite_at_critical_radius(demo):
    r = 1.0 + np.array([-1e-9, 0.0, 1e-9])
    vals = eval_A(demo, r)
    assert np.all(np.isfinite(vals))
    assert np.ptp(vals) < 1e-6 * np.max(np.abs(vals))


def test_v_prime_matches_finite_difference(demo):
    r = np.array([0.3, 0.9, 1.1, 1.5])
    h = 1e-6
    fd = (demo.v(r + h) - demo.v(r - h)) / (2 * h)
    assert np.allclose(demo.v_prime(r), fd, rtol=1e-7, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.9, max_value=1.1))
def test_gamma1_family_members_are_admissible(t):
    prof = build_vortex(gamma1_family(DEMO_PARAMS)(t))
    assert abs(float(prof.moment(np.array([prof.support_radius]))[0])) < 1e-12
    assert prof.v_prime_at_1 < 0


@pytest.mark.parametrize(
    "change",
    [
        {"delta0": 0.9},
        {"delta1": 1.5},
        {"r0": 1.1},
        {"gamma0": 40.0},
        {"gamma1": 200.0},
        {"g0": -1.0},
    ],
)
def test_invalid_parameters_raise(change):
    with pytest.raises(VortexError):
        build_vortex(DEMO_PARAMS.replace(**change))


def test_params_roundtrip_and_unknown_keys():
    d = DEMO_PARAMS.as_dict()
    assert VortexParams.from_dict(d) == DEMO_PARAMS
    with pytest.raises(VortexError):
        VortexParams.from_dict({**d, "bogus": 1.0})


def test_piecewise_integral_matches_quadrature():
    pp = PiecewisePolynomial([0.0, 1.0, 2.5], [Polynomial([1.0, -2.0, 3.0]), Polynomial([0.5, 4.0])])
    w = Polynomial([0.0, 1.0])
    ref = _quad(lambda s: s * float(pp(np.array(s))), 0.2, 2.1, [1.0])
    assert pp.integral(0.2, 2.1, w) == pytest.approx(ref, rel=1e-13)


def test_constant_profile_rotates_rigidly():
    prof = constant_profile(3.0, 2.0)
    r = np.linspace(0.1, 2.0, 7)
    assert np.allclose(prof.v(r), 1.5)


def test_to_csv_columns(demo, tmp_path):
    path = tmp_path / "v.csv"
    demo.to_csv(path, np.linspace(0, 2, 5))
    lines = path.read_text().splitlines()
    assert lines[0] == "r,g,g_prime,v,A"
    assert len(lines) == 6
