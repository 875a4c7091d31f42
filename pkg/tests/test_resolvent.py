import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from vil.grid_ops import composite_grid
from vil.resolvent import (
    ResolventError,
    S_beta_apply,
    SemigroupParams,
    T_beta_apply,
    collocation_resolvent,
    collocation_T_beta,
    grid_function,
    isometry_defect,
    make_probe,
    multiplier_apply,
    random_smooth_functions,
    resolvent_apply,
    semigroup_apply,
)
from vil.vortex import DEMO_PARAMS, build_vortex

PROFILE = build_vortex(DEMO_PARAMS)
R0 = PROFILE.support_radius


def _w(seed=0):
    return random_smooth_functions(np.random.default_rng(seed), R0, 1)[0]


def _support_grid(degree=24):
    return composite_grid([0.0] + [b for b in PROFILE.g_pp.breaks if 0 < b < R0] + [R0], degree)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 6.0), st.floats(0.0, 30.0), st.integers(0, 10_000))
def test_isometry(log_beta, tau, seed):
    params = SemigroupParams(0.4, 10**log_beta, 2, PROFILE)
    assert isometry_defect(params, tau, _w(seed), R0) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(1.0, 5.0), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_group_property(log_beta, t1, t2):
    params = SemigroupParams(0.4, 10**log_beta, 2, PROFILE)
    w = _w(1)
    r = np.linspace(0.01, R0, 97)
    inner_step = lambda rho: semigroup_apply(params, t2, w, rho)
    lhs = semigroup_apply(params, t1, inner_step, r)
    rhs = semigroup_apply(params, t1 + t2, w, r)
    assert np.allclose(lhs, rhs, atol=1e-11)


@settings(max_examples=20, deadline=None)
@given(st.floats(1.0, 5.0), st.floats(0.0, 5.0))
def test_adjoint_flow_inverts(log_beta, tau):
    params = SemigroupParams(0.4, 10**log_beta, 2, PROFILE)
    w = _w(2)
    r = np.linspace(0.01, R0, 61)
    forward = lambda rho: semigroup_apply(params, tau, w, rho)
    back = semigroup_apply(params.adjoint(), tau, forward, r)
    assert np.allclose(back, w(r), atol=1e-11)


def test_limit_flow_is_pure_rotation():
    params = SemigroupParams(0.4, np.inf, 2, PROFILE)
    r = np.linspace(0.0, R0, 11)
    w = _w(3)
    assert np.allclose(semigroup_apply(params, 1.7, w, r), np.exp(-2j * 1.7 * PROFILE.v(r)) * w(r))


def test_laplace_resolvent_matches_adaptive_quadrature():
    # the integrand vanishes once the flow carries r past the support of w
    params = SemigroupParams(0.4, 1e3, 2, PROFILE)
    z = 0.5 + 0.2j
    w = _w(4)
    r = 0.8
    tau_end = params.ab * np.log(R0 / r)

    def part(fn):
        f = lambda tau: fn(np.exp(-z * tau) * semigroup_apply(params, tau, w, np.array([r]))[0])
        return quad(f, 0.0, tau_end, limit=2000, epsabs=1e-13, epsrel=1e-12)[0]

    ref = -(part(np.real) + 1j * part(np.imag))
    got = resolvent_apply(make_probe(params, z), w, np.array([r]))[0]
    assert abs(got - ref) <= 1e-9 * abs(ref)


def test_limit_resolvent_is_multiplier():
    params = SemigroupParams(0.4, np.inf, 2, PROFILE)
    z = 0.7
    w = _w(5)
    r = _support_grid().nodes
    probe = make_probe(params, z)
    assert np.allclose(resolvent_apply(probe, w, r), -multiplier_apply(params, z, w, r), atol=1e-11)
    assert np.all(T_beta_apply(probe, w, r) == 0)


def test_splitting_identity():
    params = SemigroupParams(0.4, 1e3, 2, PROFILE)
    z = 0.5
    probe = make_probe(params, z)
    g = _support_grid()
    w = _w(6)
    total = resolvent_apply(probe, w, g.nodes) + multiplier_apply(params, z, w, g.nodes) + T_beta_apply(probe, w, g.nodes)
    assert np.max(np.abs(total)) < 1e-12 * np.max(np.abs(w(g.nodes)))


def test_resolvent_inverts_generator():
    params = SemigroupParams(0.4, 1e3, 2, PROFILE)
    z = 0.5 + 0.3j
    g = _support_grid(32)
    w = _w(7)
    u = resolvent_apply(make_probe(params, z), w, g.nodes)
    back = S_beta_apply(params, g, u) - z * u
    assert np.max(np.abs(back - w(g.nodes))[:-1]) < 1e-7 * np.max(np.abs(w(g.nodes)))


def test_collocation_matches_laplace():
    params = SemigroupParams(0.4, 1e3, 2, PROFILE)
    z = 0.5
    g = _support_grid(24)
    w = _w(8)
    lap = T_beta_apply(make_probe(params, z), w, g.nodes)
    col = collocation_T_beta(params, g, z) @ w(g.nodes)
    assert np.max(np.abs(lap - col)) < 1e-7 * np.max(np.abs(w(g.nodes)))
    R = collocation_resolvent(params, g, z)
    assert np.allclose(R @ w(g.nodes), resolvent_apply(make_probe(params, z), w, g.nodes), atol=1e-7)


def test_T_beta_shrinks_with_beta():
    g = _support_grid()
    w = _w(9)
    sizes = []
    for beta in (1e2, 1e3, 1e4):
        params = SemigroupParams(0.4, beta, 2, PROFILE)
        tw = T_beta_apply(make_probe(params, 0.5), w, g.nodes)
        sizes.append(np.sqrt(np.dot(g.weights, np.abs(tw) ** 2)))
    assert sizes[0] > sizes[1] > sizes[2]


def test_probe_rejects_bad_z_and_small_beta():
    with pytest.raises(ResolventError):
        make_probe(SemigroupParams(0.4, 1e3, 2, PROFILE), -0.1)
    with pytest.raises(ResolventError):
        make_probe(SemigroupParams(0.4, 1.0, 2, PROFILE), 0.5)
    with pytest.raises(ResolventError):
        SemigroupParams(2.5, 1e3, 2, PROFILE)


def test_random_functions_vanish_at_cut():
    for f in random_smooth_functions(np.random.default_rng(0), R0, 5):
        assert abs(f(np.array([R0]))[0]) == 0.0
        assert abs(f(np.array([0.0]))[0]) == 0.0


def test_grid_function_zero_outside():
    g = composite_grid([0.0, 1.0], 8)
    f = grid_function(g, g.nodes**2)
    assert f(np.array([0.5]))[0] == pytest.approx(0.25)
    assert f(np.array([1.5]))[0] == 0.0
