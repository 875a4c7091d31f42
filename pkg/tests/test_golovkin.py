import csv

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from vil.golovkin import (
    GolovkinError,
    QuadraticSystem,
    angular_lp_constant,
    euler_bundle,
    golovkin_solutions,
    lp_norms_2d,
    lp_scaling_study,
    powerlaw_integrability,
    rows_to_csv,
    shell_toy_system,
    verify_powerlaw_example,
)


@pytest.fixture(scope="module")
def bundle(direct_pair, profile, direct_eta):
    return euler_bundle(direct_pair, profile, direct_eta)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 2.0), st.floats(-3.0, 3.0), st.floats(0.01, 5.0))
def test_toy_system_gives_two_exact_solutions(seed, re_lam, im_lam, t):
    system, full = shell_toy_system(seed, complex(re_lam, im_lam))
    assert system.eigen_residual() < 1e-10
    assert system.bilinearity_defect(seed) < 1e-12
    traj = golovkin_solutions(system)
    scale = 1 + np.linalg.norm(traj.force(t)) + np.linalg.norm(traj.perturbation(t))
    for sign in (1, -1):
        assert np.linalg.norm(traj.residual(t, sign)) < 1e-10 * scale
    assert np.allclose(traj.G_plus(t) + traj.G_minus(t), 2 * system.g0)


def test_toy_linearization_spectrum():
    system, full = shell_toy_system(3, 0.4 + 2.0j, stable=-0.7)
    ev = np.sort_complex(np.linalg.eigvals(full))
    assert np.allclose(ev, np.sort_complex(np.array([0.4 + 2.0j, 0.4 - 2.0j, -0.7])))
    J = np.array([system.linearized(e) for e in np.eye(3)]).T
    assert np.allclose(J, full)


def test_solutions_separate_from_g0():
    system, _ = shell_toy_system(1)
    traj = golovkin_solutions(system)
    # |Re(t^lambda eta)| <= t^Re(lambda) |eta|
    for t in (1e-8, 1e-4):
        assert np.linalg.norm(traj.perturbation(t)) <= t**system.lam.real * np.linalg.norm(system.eta) * (1 + 1e-12)
    assert np.linalg.norm(traj.G_plus(1.0) - traj.G_minus(1.0)) > 0


def test_golovkin_rejects_bad_pairs():
    system, _ = shell_toy_system(2)
    stable = QuadraticSystem(system.apply_L, system.apply_B, system.g0, -0.5 + 1j, system.eta)
    with pytest.raises(GolovkinError):
        golovkin_solutions(stable)
    trivial = QuadraticSystem(system.apply_L, system.apply_B, system.g0, system.lam, np.zeros(3, complex))
    with pytest.raises(GolovkinError):
        golovkin_solutions(trivial)


def test_powerlaw_closed_form_symbolic():
    t, r, th, a, g = sp.symbols("t r theta alpha gamma", positive=True)
    c = 1 / (a * (2 - a))
    w = t**g * r ** (-(1 + a)) * sp.cos(th)
    phi = -c * t**g * (r ** (1 - a) * sp.cos(th) + g / t * r * sp.sin(th))
    transport = sp.diff(w, t) + r ** (-a) * sp.diff(w, th) + a * (2 - a) * r ** (-(2 + a)) * sp.diff(phi, th)
    lap = sp.diff(phi, r, 2) + sp.diff(phi, r) / r + sp.diff(phi, th, 2) / r**2
    assert sp.simplify(transport) == 0
    assert sp.simplify(lap - w) == 0


@pytest.mark.parametrize("alpha,gamma", [(0.4, 1.0), (1.0, 0.5), (1.7, 3.0)])
def test_powerlaw_residuals(alpha, gamma):
    rep = verify_powerlaw_example(alpha, gamma, t=0.7)
    assert rep["transport_residual"] < 1e-12
    assert rep["poisson_residual"] < 1e-9
    # spectral D² roundoff floor, amplified by the 1/r² terms near r = 0.1
    assert rep["harmonic_residual"] < 1e-8
    assert rep["force_loglog_slope"] == pytest.approx(-(2 + 2 * alpha), rel=1e-3)


def test_powerlaw_literal_sign_fails():
    rep = verify_powerlaw_example(0.4, 1.0, transport_sign=-1.0)
    assert rep["transport_residual"] > 0.1


def test_powerlaw_rejects_bad_parameters():
    with pytest.raises(GolovkinError):
        verify_powerlaw_example(2.0, 1.0)
    with pytest.raises(GolovkinError):
        verify_powerlaw_example(0.5, 0.0)


def test_powerlaw_integrability_exponents():
    out = powerlaw_integrability(0.5)
    assert out["vorticity_p_max"] == pytest.approx(4 / 3)
    assert out["force_p_max"] == pytest.approx(2 / 3)
    assert out["force_exponents"] == [-3.0, -2.5]


@pytest.mark.parametrize("p", [1.0, 2.0, 2.5, 5.0])
def test_angular_lp_constant(p):
    from scipy.special import gamma as G

    # int_0^{2pi} |cos|^p = 2 sqrt(pi) Gamma((p+1)/2) / Gamma(p/2 + 1)
    ref = 2 * np.sqrt(np.pi) * G((p + 1) / 2) / G(p / 2 + 1)
    assert angular_lp_constant(p) == pytest.approx(ref, rel=1e-12)


def test_euler_residuals_and_sign_symmetry(bundle, direct_pair):
    for t in (1.0, 0.5):
        out = bundle.self_similar_residual(t)
        assert out["plus"] <= 10 * direct_pair.residual
        assert out["minus"] <= 10 * direct_pair.residual
        assert out["sign_gap"] < 1e-12
    assert bundle.self_similar_residual(0.1)["rescaled"]


def test_euler_bundle_rejects(direct_pair, profile, direct_eta):
    from dataclasses import replace

    with pytest.raises(GolovkinError):
        euler_bundle(replace(direct_pair, lambda_beta=-0.1 + 0j), profile)
    with pytest.raises(GolovkinError):
        euler_bundle(replace(direct_pair, beta=np.inf), profile)
    with pytest.raises(GolovkinError):
        euler_bundle(direct_pair, profile, direct_eta, consistency_tol=1e-14)


def test_total_vorticity_equal_for_both_signs(bundle):
    # a single k = 2 mode integrates to zero over theta
    out = bundle.total_vorticity(1.0)
    assert abs(out["plus"] - out["minus"]) < 1e-12 * out["scale"]


def test_lp_slopes(bundle):
    rows = lp_scaling_study(bundle, p_list=(2.5, 5.0))
    for row in rows:
        assert row["slope_diff"] == pytest.approx(row["expected_diff"], rel=1e-6)
        assert row["slope_vortex"] == pytest.approx(row["expected_vortex"], abs=1e-6)
        assert row["norm_diff_at_1"] > 0
    assert rows[1]["expected_vortex"] == pytest.approx(0.0)
    with pytest.raises(GolovkinError):
        lp_scaling_study(bundle, p_list=(5.5,))


def test_lp_norms_2d(bundle):
    out = lp_norms_2d(bundle, 2.5, 1.0)
    assert out["diff"] > 0
    # rotating by pi/k flips the sign of a single k-mode, so both states have equal norms
    assert out["plus"] == pytest.approx(out["minus"], rel=1e-12)


def test_rows_csv(tmp_path, bundle):
    rows = lp_scaling_study(bundle, p_list=(3.0,))
    path = tmp_path / "lp.csv"
    rows_to_csv(rows, path)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert data[0][:3] == ["p", "t", "norm_diff"]
    assert len(data) == 1 + len(rows[0]["t"])
