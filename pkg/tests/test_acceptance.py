"""End-to-end acceptance criteria on the tuned demo vortex (k = 2, eps = 0.01, alpha = 0.4).

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts every sub-check of its criterion.
"""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from vil.eigenfunction import consistency, measure_regularity, regularity_report
from vil.golovkin import euler_bundle, lp_scaling_study, verify_powerlaw_example
from vil.grid_ops import composite_grid
from vil.rayleigh_solver import (
    EigenProblemConfig,
    assemble_perturbative_operators,
    measure_M_norms,
    predict_ctilde,
    solve_direct,
    solve_perturbative,
)
from vil.resolvent import (
    SemigroupParams,
    T_beta_apply,
    estimate_operator_norm,
    isometry_defect,
    make_probe,
    multiplier_apply,
    random_smooth_functions,
    resolvent_apply,
)
from vil.sturm_liouville import fd_k0_squared, solve_neutral_mode, tune_vortex
from vil.vortex import DEMO_GAMMA1_BRACKET, DEMO_PARAMS, build_vortex, gamma1_family

# |lambda_pert - lambda_direct| <= C eps², C frozen at about twice the first
# calibration (5.2e-6) on the demo configuration
PERTURBATIVE_C = 1e-5


def _record(key, checks):
    """``checks`` maps a label to ``(ok, value_text)``; stores one summary line and prints it."""
    ok = all(c[0] for c in checks.values())
    detail = "; ".join(f"{name}={val}{'' if c_ok else ' (FAIL)'}" for name, (c_ok, val) in checks.items())
    ACCEPTANCE[key] = (ok, detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
    failed = [name for name, (c_ok, _) in checks.items() if not c_ok]
    assert not failed, f"criterion {key} failed: {failed}"


def test_criterion_1_powerlaw_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (0.5, 1.0, 1.5):
        for gamma in (0.5, 1.0, 2.0):
            rep = verify_powerlaw_example(alpha, gamma)
            worst = max(worst, rep["transport_residual"], rep["poisson_residual"])
    elapsed = time.perf_counter() - t0
    _record(
        1,
        {
            "max_residual": (worst <= 1e-8, f"{worst:.2e}"),
            "runtime_s": (elapsed < 1.0, f"{elapsed:.3f}"),
        },
    )


def test_criterion_2_semigroup_isometry(profile):
    rng = np.random.default_rng(2024)
    r0 = profile.support_radius
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        beta = 10 ** rng.uniform(1.0, 6.0)
        tau = rng.uniform(0.0, 20.0)
        w = random_smooth_functions(rng, r0, 1)[0]
        worst = max(worst, isometry_defect(SemigroupParams(0.4, beta, 2, profile), tau, w, r0))
    elapsed = time.perf_counter() - t0
    _record(
        2,
        {
            "max_defect": (worst <= 1e-10, f"{worst:.2e}"),
            "runtime_s": (elapsed < 10.0, f"{elapsed:.2f}"),
        },
    )


def test_criterion_3_resolvent_splitting(profile):
    r0 = profile.support_radius
    grid = composite_grid([0.0] + [b for b in profile.g_pp.breaks if 0 < b < r0] + [r0], 24)
    z = 0.5 + 0.0j
    spaces = ("L2", "H1_dot", "H1_r")
    t0 = time.perf_counter()
    split = 0.0
    norms = {sp: [] for sp in spaces}
    for beta in (1e2, 1e3, 1e4):
        params = SemigroupParams(0.4, beta, 2, profile)
        probe = make_probe(params, z)
        r = grid.nodes
        for w in random_smooth_functions(np.random.default_rng(7), r0, 4):
            total = resolvent_apply(probe, w, r) + multiplier_apply(params, z, w, r) + T_beta_apply(probe, w, r)
            wn = np.sqrt(np.dot(grid.weights, np.abs(w(r)) ** 2))
            split = max(split, float(np.sqrt(np.dot(grid.weights, np.abs(total) ** 2)) / wn))
        for sp in spaces:
            norms[sp].append(estimate_operator_norm(probe, grid, sp, trials=8, seed=0))
    elapsed = time.perf_counter() - t0
    checks = {"splitting": (split <= 1e-8, f"{split:.2e}")}
    for sp in spaces:
        checks[f"T_beta[{sp}]"] = (bool(np.all(np.diff(norms[sp]) < 0)), "/".join(f"{v:.3g}" for v in norms[sp]))
    checks["runtime_s"] = (elapsed < 120.0, f"{elapsed:.1f}")
    _record(3, checks)


def test_criterion_4_neutral_mode(profile):
    t0 = time.perf_counter()
    mode = solve_neutral_mode(profile, None, 16, min_k0_squared=None)
    fd = fd_k0_squared(profile, mode.M)
    doubled = solve_neutral_mode(profile, 2 * mode.M, 16, min_k0_squared=None)
    elapsed = time.perf_counter() - t0
    rel_fd = abs(fd["k0_squared"] - mode.k0_squared) / mode.k0_squared
    rq = mode.rayleigh_quotient(mode.phi0)
    rq_err = abs(rq + (mode.k0_squared - 0.25))
    b1 = mode.weighted_bounds()["r_dphi_plus_phi"]
    b2 = doubled.weighted_bounds()["r_dphi_plus_phi"]
    _record(
        4,
        {
            "fd_oracle_rel": (rel_fd <= 1e-6, f"{rel_fd:.2e}"),
            "rayleigh_quotient_err": (rq_err <= 1e-8, f"{rq_err:.2e}"),
            "M_doubling_rel": (abs(b2 - b1) / b1 < 0.01, f"{abs(b2 - b1) / b1:.2e}"),
            "runtime_s": (elapsed < 30.0, f"{elapsed:.1f}"),
        },
    )


def test_criterion_5_instability(profile, demo_config, neutral, direct_pair, timings):
    pair = direct_pair
    eps = demo_config.epsilon
    lam = pair.lambda_beta
    finer = solve_direct(profile, demo_config.with_(degree=2 * demo_config.degree), neutral)
    wider = solve_direct(profile, demo_config.with_(support_factor=2.0), neutral)
    d_res = abs(finer.lambda_beta - lam) / abs(lam)
    d_dom = abs(wider.lambda_beta - lam) / abs(lam)
    elapsed = timings.seconds["solve_direct"]
    _record(
        5,
        {
            "Re_lambda_beta": (lam.real > eps / 2, f"{lam.real:.6g}"),
            "Im_c": (pair.c.imag > 0, f"{pair.c.imag:.6g}"),
            "residual": (pair.residual <= 1e-7, f"{pair.residual:.2e}"),
            "resolution_doubling": (d_res <= 1e-4, f"{d_res:.2e}"),
            "domain_doubling": (d_dom <= 1e-4, f"{d_dom:.2e}"),
            "runtime_s": (elapsed < 300.0, f"{elapsed:.1f}"),
        },
    )


def test_criterion_6_dispersion(dispersion, direct_pair, timings):
    disp = dispersion
    c = direct_pair.c
    elapsed = timings.seconds["dispersion"]
    _record(
        6,
        {
            "Im_z0_vs_plemelj": (disp.plemelj_error() <= 0.02, f"{disp.plemelj_error():.2e}"),
            "c_in_ball": (disp.contains_c(c), f"{abs((c - disp.v1) / disp.epsilon - disp.center):.4g}<{disp.radius:.4g}"),
            "rouche_margin": (disp.rouche_margin > 0, f"{disp.rouche_margin:.3g}"),
            "runtime_s": (elapsed < 300.0, f"{elapsed:.1f}"),
        },
    )


def test_criterion_7_eigenfunction(direct_pair, direct_eta, log_pair, log_eta, timings):
    # the exponent check needs gamma below k + 1/2 (otherwise the regular part
    # r^(k+1/2) leads); the demo pair has gamma ~ 6e3, so it runs on the
    # alpha*beta = 80 pair and the demo pair is checked against min(gamma, k+1/2)
    cons_demo = consistency(direct_eta, direct_pair)
    cons_log = consistency(log_eta, log_pair)
    gamma = log_pair.holder_exponent
    measured = measure_regularity(log_eta)
    rel = abs(measured - gamma) / gamma
    demo_env = regularity_report(direct_eta)
    elapsed = timings.seconds["eta_semigroup"] + timings.seconds["eta_quadrature"]
    _record(
        7,
        {
            "consistency_demo": (cons_demo <= 1e-5, f"{cons_demo:.2e}"),
            "consistency_ab80": (cons_log <= 1e-5, f"{cons_log:.2e}"),
            "exterior_demo": (direct_eta.exterior_residual <= 1e-8, f"{direct_eta.exterior_residual:.2e}"),
            "exterior_ab80": (log_eta.exterior_residual <= 1e-8, f"{log_eta.exterior_residual:.2e}"),
            "exponent_ab80_rel": (rel <= 0.05, f"{measured:.6g} vs {gamma:.6g}"),
            "envelope_demo_rel": (demo_env["relative_error"] <= 0.05, f"{demo_env['measured']:.6g} vs {demo_env['expected']:.6g}"),
            "runtime_s": (elapsed < 60.0, f"{elapsed:.1f}"),
        },
    )


def test_criterion_8_nonuniqueness(profile, direct_pair, direct_eta):
    t0 = time.perf_counter()
    bundle = euler_bundle(direct_pair, profile, direct_eta)
    limit = 10 * direct_pair.residual
    checks = {}
    worst, gap = 0.0, 0.0
    for t in (0.1, 0.5, 1.0):
        rr = bundle.self_similar_residual(t)
        worst = max(worst, rr["plus"], rr["minus"])
        gap = max(gap, rr["sign_gap"])
    checks["residuals"] = (worst <= limit, f"{worst:.2e}<={limit:.2e}")
    checks["sign_symmetry"] = (gap <= 1e-10, f"{gap:.2e}")
    for row in lp_scaling_study(bundle, (2.5, 3.0, 4.0, 5.0)):
        rel = abs(row["slope_diff"] - row["stated_diff"]) / abs(row["stated_diff"])
        checks[f"slope[p={row['p']:g}]"] = (rel <= 0.01, f"{row['slope_diff']:.8g} vs {row['stated_diff']:.8g}")
        checks[f"distinct_t1[p={row['p']:g}]"] = (row["norm_diff_at_1"] > 0, f"{row['norm_diff_at_1']:.4g}")
    elapsed = time.perf_counter() - t0
    checks["runtime_s"] = (elapsed < 120.0, f"{elapsed:.1f}")
    _record(8, checks)


def test_criterion_9_perturbative(profile, demo_config, neutral, dispersion, direct_pair):
    eps = demo_config.epsilon
    pert = solve_perturbative(profile, demo_config, dispersion, neutral)
    gap = abs(pert.lambda_beta - direct_pair.lambda_beta)
    r0 = profile.support_radius
    base = measure_M_norms(pert.bundle)
    wide_cfg = demo_config.with_(M=120 * r0)
    wide = measure_M_norms(assemble_perturbative_operators(profile, wide_cfg, predict_ctilde(profile, neutral, wide_cfg).c_tilde_root))
    eps2 = eps / 2
    params, _, _ = tune_vortex(gamma1_family(DEMO_PARAMS), 2, eps2, DEMO_GAMMA1_BRACKET, 9)
    prof2 = build_vortex(params)
    cfg2 = EigenProblemConfig(alpha=demo_config.alpha, k=2, epsilon=eps2)
    neutral2 = solve_neutral_mode(prof2, None, 16, min_k0_squared=None)
    small = measure_M_norms(assemble_perturbative_operators(prof2, cfg2, predict_ctilde(prof2, neutral2, cfg2).c_tilde_root))
    _record(
        9,
        {
            "pert_vs_direct": (gap <= PERTURBATIVE_C * eps**2, f"{gap:.2e}<={PERTURBATIVE_C * eps**2:.1e}"),
            "M11_eps_down": (small["M11"] < base["M11"], f"{base['M11']:.4g}->{small['M11']:.4g}"),
            "M12_M_up": (wide["M12"] < base["M12"], f"{base['M12']:.4g}->{wide['M12']:.4g}"),
            "M21_M_up": (wide["M21"] < base["M21"], f"{base['M21']:.4g}->{wide['M21']:.4g}"),
        },
    )
