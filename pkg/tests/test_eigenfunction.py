import csv
from dataclasses import replace

import numpy as np
import pytest

from vil.eigenfunction import (
    EnvelopeUnderflowError,
    EtaFormulaError,
    build_eta,
    consistency,
    eta_to_csv,
    log_I,
    measure_regularity,
    phase_by_quadrature,
    phi_from_eta,
    regularity_report,
    second_difference_check,
    vorticity_moment,
)
from vil.rayleigh_solver import solve_log_bvp

# frozen log-grid pair continued from the alpha*beta = 80 pair to alpha*beta = 84
LAMBDA_LOG_AB84 = 0.030078428234477317 - 1.7006788602213885j


@pytest.fixture(scope="module")
def log_pair_84(profile, demo_config, log_pair):
    cfg = demo_config.with_(beta=84.0 / demo_config.alpha)
    return solve_log_bvp(profile, cfg, log_pair.lambda_beta)


def test_phase_quadrature_matches_closed_form(profile):
    r = np.array([0.05, 0.5, 1.0, 1.3, profile.support_radius, 3.0])
    assert np.allclose(phase_by_quadrature(profile, r), profile.phase_integral(r), atol=1e-13)


def test_log_I_methods_agree(profile, log_pair):
    r = np.geomspace(1e-6, 2.0, 25)
    args = (log_pair.lambda_beta, log_pair.k, log_pair.ab, profile)
    exact = log_I(r, *args)
    quad = log_I(r, *args, method="quadrature")
    assert np.max(np.abs(exact - quad)) < 1e-10
    with pytest.raises(EtaFormulaError):
        log_I(np.array([0.0, 1.0]), *args)
    with pytest.raises(ValueError):
        log_I(r, *args, method="simpson")


def test_log_I_modulus_is_power_law(profile, log_pair):
    r = np.array([1e-4, 1e-2])
    mod = log_I(r, log_pair.lambda_beta, log_pair.k, log_pair.ab, profile).real
    assert mod[1] - mod[0] == pytest.approx((log_pair.ab * log_pair.lambda_beta.real - 0.5) * np.log(100.0))


def test_build_eta_rejects_stable_and_limit_pairs(profile, direct_pair):
    stable = replace(direct_pair, lambda_beta=-0.1 - 1.0j)
    with pytest.raises(EtaFormulaError):
        build_eta(stable, profile)
    limit = replace(direct_pair, beta=np.inf)
    with pytest.raises(EtaFormulaError):
        build_eta(limit, profile)
    with pytest.raises(EtaFormulaError):
        build_eta(direct_pair, profile, "quadrature")
    with pytest.raises(ValueError):
        build_eta(direct_pair, profile, "trapezoid")


def test_eta_consistent_with_lk_phi(direct_pair, direct_eta, log_pair, log_eta):
    assert consistency(direct_eta, direct_pair) < 1e-6
    assert consistency(log_eta, log_pair) < 1e-6


def test_eta_vanishes_outside_support(direct_eta, log_eta, profile):
    for e in (direct_eta, log_eta):
        assert e.exterior_residual < 1e-9
        assert e.support_radius <= profile.support_radius * (1 + 1e-9)
        assert np.all(e.evaluate(np.array([1.2, 2.0]) * profile.support_radius) == 0)


def test_flow_realization_matches_eigenpair(direct_pair, direct_eta):
    scale = np.max(np.abs(direct_pair.eta))
    assert np.max(np.abs(direct_eta.eta - direct_pair.eta)) < 1e-8 * scale


def test_integrability_flag(direct_eta, log_eta, direct_pair, log_pair):
    # the coefficient integral converges iff Re(k + 1 - alpha*beta*lambda) > 0
    assert log_eta.integrable and log_eta.C_phi is not None
    assert not direct_eta.integrable
    assert (log_pair.k + 1 - log_pair.ab * log_pair.lambda_beta.real > 0) == log_eta.integrable
    assert (direct_pair.k + 1 - direct_pair.ab * direct_pair.lambda_beta.real > 0) == direct_eta.integrable


def test_phi_roundtrip_through_lk(log_pair, log_eta):
    phi = phi_from_eta(log_eta, log_pair)
    assert np.max(np.abs(phi - log_pair.phi)) < 1e-10 * np.max(np.abs(log_pair.phi))


def test_phi_roundtrip_needs_log_grid(direct_pair, direct_eta):
    with pytest.raises(EtaFormulaError):
        phi_from_eta(direct_eta, direct_pair)


def test_measured_exponent_matches_formula(log_eta):
    rep = regularity_report(log_eta)
    assert rep["expected"] == pytest.approx(log_eta.holder_exponent)
    assert rep["relative_error"] < 1e-4


def test_measured_exponent_tracks_beta(log_pair_84, log_pair, profile, log_eta):
    assert abs(log_pair_84.lambda_beta - LAMBDA_LOG_AB84) < 1e-9
    e84 = build_eta(log_pair_84, profile, "quadrature")
    g80, g84 = measure_regularity(log_eta), measure_regularity(e84)
    assert g84 > g80
    assert g80 == pytest.approx(80 * log_pair.lambda_beta.real - 0.5, rel=1e-4)
    assert g84 == pytest.approx(84 * LAMBDA_LOG_AB84.real - 0.5, rel=1e-4)


def test_demo_envelope_is_regular_part(direct_eta):
    # gamma ~ 6e3 is far beyond k + 1/2, so the regular part r^(k+1/2) leads
    rep = regularity_report(direct_eta)
    assert rep["expected"] == pytest.approx(2.5)
    assert rep["relative_error"] < 1e-6


def test_underflow_is_reported(direct_eta):
    with pytest.raises(EnvelopeUnderflowError):
        measure_regularity(direct_eta, r_lo=1e-300, decades=1.0)


def test_second_differences(direct_eta, log_eta):
    assert second_difference_check(direct_eta)["bounded"]
    # gamma < 2 at alpha*beta = 80: eta is not C² at the origin
    assert not second_difference_check(log_eta)["bounded"]


def test_vorticity_moment_finite(log_pair, log_eta):
    assert 0 < vorticity_moment(log_eta, log_pair) < np.inf


def test_eta_csv(tmp_path, log_eta):
    path = tmp_path / "eta.csv"
    eta_to_csv(log_eta, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "eta_re", "eta_im", "eta_abs"]
    assert len(rows) == len(log_eta.r) + 1
    i = len(rows) // 2
    assert complex(float(rows[i][1]), float(rows[i][2])) == log_eta.eta[i - 1]
