"""Command-line driver: config loading, pipeline stages, manifests, CSV and SVG output.

Exit codes: 0 when every check passes, 1 when a numerical check fails (the
manifest is still written), 2 for an invalid configuration.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import fields
from importlib import resources
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import __version__
from .eigenfunction import EnvelopeUnderflowError, build_eta, consistency, eta_to_csv, regularity_report, measure_regularity
from .golovkin import euler_bundle, lp_norms_2d, lp_scaling_study, verify_powerlaw_example
from .grid_ops import NORMS, composite_grid
from .rayleigh_solver import (
    EigenProblemConfig,
    predict_ctilde,
    solve_direct,
    solve_log_bvp,
    solve_perturbative,
)
from .resolvent import (
    SemigroupParams,
    T_beta_apply,
    estimate_operator_norm,
    isometry_defect,
    make_probe,
    multiplier_apply,
    random_smooth_functions,
    resolvent_apply,
)
from .sturm_liouville import fd_k0_squared, scan_family, solve_neutral_mode, tune_vortex, tuning_target
from .svgplot import line_plot
from .vortex import VortexError, VortexParams, build_vortex, gamma1_family

log = logging.getLogger("vil")

SCHEMA_VERSION = 1
MANIFEST_SCHEMA = "vil-manifest"
SUBCOMMANDS = (
    "build-vortex",
    "tune",
    "solve-sl",
    "solve-eig",
    "resolvent-study",
    "demo-nonuniqueness",
    "verify-powerlaw",
    "full-pipeline",
)

# |lambda_pert - lambda_direct| <= C eps² and |lambda_pred - lambda_direct| <= C eps²,
# constants frozen from the first calibration run of the demo configuration
PERTURBATIVE_C = 1e-5
DISPERSION_C = 5.0

_VORTEX_FIELDS = [f.name for f in fields(VortexParams)]

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "output_dir": None,
    "vortex": {
        "g0": 8.0,
        "gamma0": 8.0,
        "delta0": 0.5,
        "g1": 2.0,
        "gamma1": 7.8,
        "delta1": 0.2,
        "r0": 1.6,
        "r1": 1.0,
        "blend_knots": [],
        "tail_amplitude": None,
        "tune": True,
        "tune_bracket": [0.9, 1.1],
        "tune_scan": 9,
    },
    "discretization": {
        "degree": 16,
        "finest": 1e-4,
        "max_size": 0.1,
        "M": None,
        "R": None,
        "R_out": None,
        "support_factor": 1.0,
        "check_degree": None,
        "neutral_M": None,
        "neutral_degree": 16,
        "fd_oracle": True,
        "fd_h": 2e-3,
    },
    "eigensolver": {
        "alpha": 0.4,
        "beta": None,
        "k": 2,
        "epsilon": 0.01,
        "stability_tol": 1e-4,
        "residual_tol": 1e-7,
        "allow_below_beta0": False,
        "dispersion": True,
        "perturbative": True,
        "eta_method": "auto",
        "regularity_alpha_beta": 80.0,
        "regularity_lambda_guess": [0.023, -1.713],
    },
    "resolvent": {
        "beta_list": [100.0, 1000.0, 10000.0],
        "z": [0.5, 0.0],
        "spaces": ["L2", "H1_dot", "H1_r"],
        "trials": 8,
        "isometry_samples": 100,
        "isometry_tol": 1e-10,
        "split_tol": 1e-8,
    },
    "demo": {
        "p_list": [2.5, 3.0, 4.0, 5.0],
        "t_samples": [0.1, 0.5, 1.0],
        "residual_factor": 10.0,
        "slope_tol": 0.01,
        "powerlaw_alpha": 1.0,
        "powerlaw_gamma": 1.0,
        "powerlaw_tol": 1e-8,
    },
}

# keys that may be absent (None) in TOML
_NULLABLE = {
    ("vortex", "tail_amplitude"),
    ("discretization", "M"),
    ("discretization", "R"),
    ("discretization", "R_out"),
    ("discretization", "check_degree"),
    ("discretization", "neutral_M"),
    ("eigensolver", "beta"),
    ("eigensolver", "regularity_alpha_beta"),
    ("", "output_dir"),
}


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where!r} must be a table")
            out[key] = _merge(base[key], val, where + ".")
        else:
            out[key] = val
    return out


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(cfg: dict, dotted: str) -> dict:
    """Apply ``section.key=value``; the value is parsed as TOML when possible."""
    if "=" not in dotted:
        raise ConfigError(f"override {dotted!r} must look like section.key=value")
    path, text = dotted.split("=", 1)
    keys = path.strip().split(".")
    update: dict = {}
    node = update
    for k in keys[:-1]:
        node[k] = {}
        node = node[k]
    node[keys[-1]] = _parse_value(text.strip())
    return _merge(cfg, update)


def load_config(path: str | os.PathLike | None = None, overrides=()) -> dict:
    """Defaults, then the file (TOML, or the ``config`` echo of a JSON manifest), then overrides."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if path.suffix == ".json":
            data = json.loads(text)
            data = data.get("config", data)
            data = {k: v for k, v in data.items() if v is not None}
            for sec in data.values():
                if isinstance(sec, dict):
                    for k in [k for k, v in sec.items() if v is None]:
                        del sec[k]
        else:
            try:
                data = tomllib.loads(text)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        cfg = _merge(cfg, data)
    for ov in overrides:
        cfg = apply_override(cfg, ov)
    validate_config(cfg)
    return cfg


def _number(cfg, sec, key, positive=False, integer=False):
    val = cfg[sec][key] if sec else cfg[key]
    if val is None:
        if (sec, key) in _NULLABLE:
            return None
        raise ConfigError(f"{sec}.{key} is required")
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{sec}.{key} must be a number, got {val!r}")
    if integer and not float(val).is_integer():
        raise ConfigError(f"{sec}.{key} must be an integer")
    if positive and not val > 0:
        raise ConfigError(f"{sec}.{key} must be positive")
    return val


def validate_config(cfg: dict) -> None:
    """Type checks plus the cross-module constraints."""
    if cfg["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"schema_version {cfg['schema_version']} unsupported (expected {SCHEMA_VERSION})")
    _number(cfg, "", "seed", integer=True)
    for key in ("g0", "gamma0", "delta0", "g1", "gamma1", "delta1", "r0", "r1"):
        _number(cfg, "vortex", key, positive=True)
    _number(cfg, "vortex", "tail_amplitude")
    lo, hi = cfg["vortex"]["tune_bracket"]
    if not lo < hi:
        raise ConfigError("vortex.tune_bracket must be increasing")
    for key in ("degree", "neutral_degree"):
        _number(cfg, "discretization", key, positive=True, integer=True)
    for key in ("finest", "max_size", "support_factor", "fd_h"):
        _number(cfg, "discretization", key, positive=True)
    for key in ("M", "R", "R_out", "neutral_M", "check_degree"):
        _number(cfg, "discretization", key, positive=True)
    es = cfg["eigensolver"]
    alpha = _number(cfg, "eigensolver", "alpha")
    if not 0.0 < alpha < 2.0:
        raise ConfigError(f"eigensolver.alpha = {alpha} violates the constraint alpha in (0, 2)")
    k = _number(cfg, "eigensolver", "k", integer=True)
    if abs(k) < 2:
        raise ConfigError("eigensolver.k must satisfy |k| >= 2")
    eps = _number(cfg, "eigensolver", "epsilon", positive=True)
    beta = _number(cfg, "eigensolver", "beta", positive=True)
    beta0 = 100.0 / eps**2
    if beta is not None and beta < beta0 and not es["allow_below_beta0"]:
        raise ConfigError(f"eigensolver.beta = {beta:g} is below beta0 = 100/epsilon^2 = {beta0:g}")
    if es["eta_method"] not in ("auto", "quadrature", "semigroup"):
        raise ConfigError("eigensolver.eta_method must be auto, quadrature or semigroup")
    r0 = cfg["vortex"]["r0"]
    R = cfg["discretization"]["R"]
    if R is not None and abs(R - 10 * r0) > 1e-12 * r0:
        raise ConfigError(f"discretization.R must equal 10 r0 = {10 * r0:g}")
    M = cfg["discretization"]["M"]
    if M is not None and M < 40 * r0:
        raise ConfigError(f"discretization.M = {M:g} must be at least 4R = {40 * r0:g}")
    rs = cfg["resolvent"]
    for b in rs["beta_list"]:
        if isinstance(b, bool) or not isinstance(b, (int, float)) or b <= 0:
            raise ConfigError("resolvent.beta_list entries must be positive numbers")
    if len(rs["z"]) != 2 or not rs["z"][0] > 0:
        raise ConfigError("resolvent.z must be [re, im] with re > 0")
    for sp in rs["spaces"]:
        if sp not in NORMS:
            raise ConfigError(f"unknown space {sp!r}; choose from {sorted(NORMS)}")
    if rs["trials"] < 8:
        raise ConfigError("resolvent.trials must be at least 8")
    p_crit = 2.0 / alpha
    for p in cfg["demo"]["p_list"]:
        if not 1.0 < p <= p_crit:
            raise ConfigError(f"demo.p_list entry {p} outside (1, 2/alpha] = (1, {p_crit:g}]")
    for t in cfg["demo"]["t_samples"]:
        if not 0.0 < t <= 1.0:
            raise ConfigError("demo.t_samples must lie in (0, 1]")
    pa = _number(cfg, "demo", "powerlaw_alpha")
    if not 0.0 < pa < 2.0:
        raise ConfigError(f"demo.powerlaw_alpha = {pa} violates the constraint alpha in (0, 2)")
    _number(cfg, "demo", "powerlaw_gamma", positive=True)


def demo_config_path() -> Path:
    return Path(str(resources.files("vil") / "data" / "demo.toml"))


# ----------------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating, int, np.integer)) and not isinstance(x, bool) else x for x in row])


class Run:
    """State shared across stages of one invocation."""

    def __init__(self, cfg: dict, out_dir: Path):
        self.cfg = cfg
        self.out = out_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.results: dict = {}
        self.checks: list[dict] = []
        self.artifacts: list[str] = []
        self.timing: dict = {}
        self._cache: dict = {}

    def check(self, name: str, passed: bool, value=None, threshold=None, note: str = "") -> bool:
        self.checks.append({"name": name, "passed": bool(passed), "value": value, "threshold": threshold, "note": note})
        log.info("%s %s value=%s threshold=%s", "PASS" if passed else "FAIL", name, value, threshold)
        return bool(passed)

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name

    # ----- cached objects -------------------------------------------------
    def base_params(self) -> VortexParams:
        vc = {k: v for k, v in self.cfg["vortex"].items() if k in _VORTEX_FIELDS}
        return VortexParams.from_dict(vc)

    def tuned(self):
        if "tuned" not in self._cache:
            vc = self.cfg["vortex"]
            es = self.cfg["eigensolver"]
            t0 = time.perf_counter()
            params, mode, t = tune_vortex(
                gamma1_family(self.base_params()),
                target_k=abs(es["k"]),
                epsilon=es["epsilon"],
                bracket=tuple(vc["tune_bracket"]),
                n_scan=vc["tune_scan"],
            )
            self.timing["tune"] = time.perf_counter() - t0
            self._cache["tuned"] = (params, mode, t)
        return self._cache["tuned"]

    def params(self) -> VortexParams:
        return self.tuned()[0] if self.cfg["vortex"]["tune"] else self.base_params()

    def profile(self):
        if "profile" not in self._cache:
            self._cache["profile"] = build_vortex(self.params())
        return self._cache["profile"]

    def neutral(self):
        if "neutral" not in self._cache:
            d = self.cfg["discretization"]
            self._cache["neutral"] = solve_neutral_mode(self.profile(), d["neutral_M"], d["neutral_degree"], min_k0_squared=None)
        return self._cache["neutral"]

    def eig_config(self, **changes) -> EigenProblemConfig:
        d = self.cfg["discretization"]
        es = self.cfg["eigensolver"]
        kw = dict(
            alpha=es["alpha"],
            beta=es["beta"],
            k=int(es["k"]),
            epsilon=es["epsilon"],
            M=d["M"],
            R=d["R"],
            R_out=d["R_out"],
            degree=int(d["degree"]),
            finest=d["finest"],
            max_size=d["max_size"],
            support_factor=d["support_factor"],
            check_degree=None if d["check_degree"] is None else int(d["check_degree"]),
            stability_tol=es["stability_tol"],
            residual_tol=es["residual_tol"],
        )
        kw.update(changes)
        return EigenProblemConfig(**kw)

    def pair(self):
        if "pair" not in self._cache:
            t0 = time.perf_counter()
            self._cache["pair"] = solve_direct(self.profile(), self.eig_config(), self.neutral())
            self.timing["solve_direct"] = time.perf_counter() - t0
        return self._cache["pair"]

    def eta(self):
        if "eta" not in self._cache:
            t0 = time.perf_counter()
            self._cache["eta"] = build_eta(self.pair(), self.profile(), self.cfg["eigensolver"]["eta_method"])
            self.timing["build_eta"] = time.perf_counter() - t0
        return self._cache["eta"]


# ----------------------------------------------------------------------------
# stages
# ----------------------------------------------------------------------------


def stage_build_vortex(run: Run, tuned: bool = False) -> None:
    prof = build_vortex(run.params() if tuned else run.base_params())
    r0 = prof.support_radius
    r = np.linspace(0.0, 1.25 * r0, 401)
    prof.to_csv(run.path("vortex.csv"), r)
    line_plot(
        run.path("vortex.svg"),
        [("g", r, prof.g(r)), ("v", r, prof.v(r))],
        title="vortex profile",
        xlabel="r",
        ylabel="value",
    )
    moment = float(np.asarray(prof.moment(np.array([r0]))).ravel()[0])
    run.results["vortex"] = {
        "params": prof.params.as_dict() if prof.params else None,
        "r0": r0,
        "v0": prof.v0,
        "v1": prof.v1,
        "v_prime_at_1": prof.v_prime_at_1,
        "moment_at_r0": moment,
    }
    run.check("vortex.zero_moment", abs(moment) <= 1e-10, abs(moment), 1e-10)
    run.check("vortex.v_prime_at_1_negative", prof.v_prime_at_1 < 0, prof.v_prime_at_1, 0.0)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(float(v)) if isinstance(v, float) else str(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return json.dumps(str(v))


def stage_tune(run: Run) -> None:
    vc = run.cfg["vortex"]
    es = run.cfg["eigensolver"]
    params, mode, t = run.tuned()
    target = tuning_target(abs(es["k"]), es["epsilon"])
    ts = np.linspace(vc["tune_bracket"][0], vc["tune_bracket"][1], vc["tune_scan"])
    scan = scan_family(gamma1_family(run.base_params()), ts)
    _write_csv(run.path("tune_scan.csv"), ["t", "gamma1", "k0_squared"], [(ti, run.base_params().gamma1 * ti, k) for ti, k in zip(ts, scan)])
    line_plot(run.path("tune_scan.svg"), [("k0^2", ts, scan), ("target", ts, [target] * len(ts))], title="k0^2 along the gamma1 family", xlabel="gamma1 scale", ylabel="k0^2", markers=True)
    lines = ["[vortex]"]
    for key, val in params.as_dict().items():
        if val is None:
            continue
        lines.append(f"{key} = {_toml_value(val)}")
    lines.append("tune = false")
    with open(run.path("tuned_vortex.toml"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    run.results["tune"] = {"scale": t, "params": params.as_dict(), "k0_squared": mode.k0_squared, "target": target}
    run.check("tune.k0_squared", abs(mode.k0_squared - target) <= 1e-8, abs(mode.k0_squared - target), 1e-8)
    monotone = bool(np.all(np.diff(scan[np.isfinite(scan)]) > 0) or np.all(np.diff(scan[np.isfinite(scan)]) < 0))
    run.check("tune.scan_monotone", monotone, None, None)


def stage_solve_sl(run: Run) -> None:
    d = run.cfg["discretization"]
    prof = run.profile()
    mode = run.neutral()
    rq = mode.rayleigh_quotient(mode.phi0)
    res = {"k0_squared": mode.k0_squared, "mu_min": mode.mu_min, "gap": mode.gap, "M": mode.M, "rayleigh_quotient": rq}
    run.check("sl.rayleigh_quotient", abs(rq - mode.mu_min) <= 1e-8 * max(1.0, abs(mode.mu_min)), abs(rq - mode.mu_min), 1e-8)
    run.check("sl.ground_state", mode.n_interior_zeros() == 0, mode.n_interior_zeros(), 0)
    doubled = solve_neutral_mode(prof, 2 * mode.M, d["neutral_degree"], min_k0_squared=None)
    b1 = mode.weighted_bounds()["r_dphi_plus_phi"]
    b2 = doubled.weighted_bounds()["r_dphi_plus_phi"]
    res["weighted_bound"] = b1
    res["weighted_bound_doubled_M"] = b2
    run.check("sl.weighted_bound_M_doubling", abs(b2 - b1) / b1 < 0.01, abs(b2 - b1) / b1, 0.01)
    if d["fd_oracle"]:
        t0 = time.perf_counter()
        fd = fd_k0_squared(prof, mode.M, h=d["fd_h"])
        run.timing["fd_oracle"] = time.perf_counter() - t0
        rel = abs(fd["k0_squared"] - mode.k0_squared) / mode.k0_squared
        res["fd_oracle"] = fd
        run.check("sl.fd_oracle", rel <= 1e-6, rel, 1e-6)
    run.check("sl.k0_squared_at_least_4", mode.k0_squared >= 4.0, mode.k0_squared, 4.0)
    g = mode.grid
    _write_csv(run.path("neutral_mode.csv"), ["r", "phi0"], zip(g.nodes, mode.phi0))
    line_plot(run.path("neutral_mode.svg"), [("phi0", g.nodes, mode.phi0)], title="neutral mode", xlabel="r", ylabel="phi0")
    run.results["neutral"] = res


def stage_resolvent(run: Run) -> None:
    rc = run.cfg["resolvent"]
    es = run.cfg["eigensolver"]
    prof = run.profile()
    r0 = prof.support_radius
    alpha = es["alpha"]
    k = abs(int(es["k"]))
    rng = np.random.default_rng(run.cfg["seed"])
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(int(rc["isometry_samples"])):
        beta = 10 ** rng.uniform(1.0, 6.0)
        tau = rng.uniform(0.0, 20.0)
        w = random_smooth_functions(rng, r0, 1)[0]
        worst = max(worst, isometry_defect(SemigroupParams(alpha, beta, k, prof), tau, w, r0))
    run.timing["isometry"] = time.perf_counter() - t0
    run.check("resolvent.isometry", worst <= rc["isometry_tol"], worst, rc["isometry_tol"])
    z = complex(rc["z"][0], rc["z"][1])
    grid = composite_grid([0.0] + [b for b in prof.g_pp.breaks if 0 < b < r0] + [r0], 24)
    rows = []
    split_worst = 0.0
    t0 = time.perf_counter()
    for beta in rc["beta_list"]:
        params = SemigroupParams(alpha, float(beta), k, prof)
        probe = make_probe(params, z)
        for w in random_smooth_functions(np.random.default_rng(run.cfg["seed"] + 1), r0, 4):
            r = grid.nodes
            total = resolvent_apply(probe, w, r) + multiplier_apply(params, z, w, r) + T_beta_apply(probe, w, r)
            wn = np.sqrt(np.dot(grid.weights, np.abs(w(r)) ** 2))
            split_worst = max(split_worst, float(np.sqrt(np.dot(grid.weights, np.abs(total) ** 2)) / wn))
        row = {"beta": float(beta)}
        for sp in rc["spaces"]:
            row[sp] = estimate_operator_norm(probe, grid, sp, trials=int(rc["trials"]), seed=run.cfg["seed"])
        rows.append(row)
    run.timing["resolvent_norms"] = time.perf_counter() - t0
    run.check("resolvent.splitting", split_worst <= rc["split_tol"], split_worst, rc["split_tol"])
    for sp in rc["spaces"]:
        vals = [row[sp] for row in rows]
        run.check(f"resolvent.T_beta_decreasing[{sp}]", bool(np.all(np.diff(vals) < 0)), vals, None)
    header = ["beta"] + [f"norm_{sp}" for sp in rc["spaces"]]
    _write_csv(run.path("resolvent_norms.csv"), header, [[row["beta"]] + [row[sp] for sp in rc["spaces"]] for row in rows])
    line_plot(
        run.path("resolvent_norms.svg"),
        [(sp, [row["beta"] for row in rows], [row[sp] for row in rows]) for sp in rc["spaces"]],
        title="estimated |T_beta| against beta",
        xlabel="beta",
        ylabel="norm",
        logx=True,
        logy=True,
        markers=True,
    )
    run.results["resolvent"] = {"z": z, "isometry_defect": worst, "splitting_defect": split_worst, "norms": rows}


def stage_solve_eig(run: Run) -> None:
    es = run.cfg["eigensolver"]
    prof = run.profile()
    cfg = run.eig_config()
    eps = cfg.epsilon
    pair = run.pair()
    c = pair.c
    res = {
        "alpha": cfg.alpha,
        "beta": cfg.beta_value,
        "k": cfg.k,
        "epsilon": eps,
        "lambda_beta": pair.lambda_beta,
        "lambda_physical": pair.lambda_physical,
        "c": c,
        "c_tilde": pair.c_tilde,
        "residual": pair.residual,
        "holder_exponent": pair.holder_exponent,
        "diagnostics": pair.diagnostics,
        "grid_nodes": pair.grid.n,
    }
    run.check("eig.growth_above_half_epsilon", pair.lambda_beta.real > eps / 2, pair.lambda_beta.real, eps / 2)
    run.check("eig.im_c_positive", c.imag > 0, c.imag, 0.0)
    run.check("eig.residual", pair.residual <= cfg.residual_tol, pair.residual, cfg.residual_tol)
    neutral = run.neutral()
    if es["dispersion"]:
        t0 = time.perf_counter()
        disp = predict_ctilde(prof, neutral, cfg)
        run.timing["dispersion"] = time.perf_counter() - t0
        gap = abs(disp.lambda_predicted - pair.lambda_beta)
        res["dispersion"] = {
            "z0": disp.z0,
            "kappa": disp.kappa,
            "gamma1_term": disp.gamma1_term,
            "plemelj_error": disp.plemelj_error(),
            "c_tilde_root": disp.c_tilde_root,
            "Gamma2": disp.Gamma2,
            "rouche_margin": disp.rouche_margin,
            "ball_center": disp.center,
            "ball_radius": disp.radius,
            "lambda_predicted": disp.lambda_predicted,
            "prediction_gap": gap,
            "prediction_constant": gap / eps**2,
        }
        run.check("dispersion.im_z0_positive", disp.z0.imag > 0, disp.z0.imag, 0.0)
        run.check("dispersion.plemelj", disp.plemelj_error() <= 0.02, disp.plemelj_error(), 0.02)
        run.check("dispersion.rouche_margin", disp.rouche_margin > 0, disp.rouche_margin, 0.0)
        run.check("dispersion.contains_direct_c", disp.contains_c(c), abs((c - disp.v1) / eps - disp.center), disp.radius)
        run.check("dispersion.prediction_gap", gap <= DISPERSION_C * eps**2, gap, DISPERSION_C * eps**2)
        if es["perturbative"]:
            t0 = time.perf_counter()
            pert = solve_perturbative(prof, cfg, disp, neutral)
            run.timing["perturbative"] = time.perf_counter() - t0
            dgap = abs(pert.lambda_beta - pair.lambda_beta)
            res["perturbative"] = {
                "lambda_beta": pert.lambda_beta,
                "c_tilde": pert.c_tilde,
                "neumann_terms": pert.neumann_terms,
                "orthogonality_history": [h[1] for h in pert.orthogonality_history],
                "spectral_radius": pert.bundle.spectral_radius(),
                "gap": dgap,
            }
            run.check("perturbative.agreement", dgap <= PERTURBATIVE_C * eps**2, dgap, PERTURBATIVE_C * eps**2)
    etaf = run.eta()
    cons = consistency(etaf, pair)
    reg = regularity_report(etaf)
    res["eta"] = {
        "representation": etaf.representation,
        "consistency": cons,
        "exterior_residual": etaf.exterior_residual,
        "support_radius": etaf.support_radius,
        "integrable": etaf.integrable,
        "regularity": reg,
    }
    run.check("eta.consistency", cons <= 1e-5, cons, 1e-5)
    run.check("eta.exterior_vanishing", etaf.exterior_residual <= 1e-8, etaf.exterior_residual, 1e-8)
    run.check("eta.support", etaf.support_radius <= prof.support_radius * (1 + 1e-3), etaf.support_radius, prof.support_radius * (1 + 1e-3))
    if reg.get("measured") is not None:
        run.check("eta.leading_exponent", reg["relative_error"] <= 0.05, reg["measured"], reg["expected"], "expected = min(gamma, k + 1/2)")
    ab = es["regularity_alpha_beta"]
    if ab is not None:
        t0 = time.perf_counter()
        guess = complex(*es["regularity_lambda_guess"])
        lp = solve_log_bvp(prof, cfg.with_(beta=ab / cfg.alpha), guess)
        le = build_eta(lp, prof, "quadrature")
        gm = measure_regularity(le)
        rel = abs(gm - lp.holder_exponent) / lp.holder_exponent
        run.timing["regularity_pair"] = time.perf_counter() - t0
        res["regularity_pair"] = {
            "alpha_beta": ab,
            "lambda_beta": lp.lambda_beta,
            "residual": lp.residual,
            "gamma": lp.holder_exponent,
            "gamma_measured": gm,
            "relative_error": rel,
            "consistency": consistency(le, lp),
            "exterior_residual": le.exterior_residual,
            "C_phi": le.C_phi,
        }
        run.check("regularity_pair.exponent", rel <= 0.05, gm, lp.holder_exponent)
        run.check("regularity_pair.consistency", res["regularity_pair"]["consistency"] <= 1e-5, res["regularity_pair"]["consistency"], 1e-5)
        run.check("regularity_pair.exterior_vanishing", le.exterior_residual <= 1e-8, le.exterior_residual, 1e-8)
    r = pair.r
    _write_csv(
        run.path("eigenfunction.csv"),
        ["r", "phi_re", "phi_im", "eta_re", "eta_im", "eta_formula_re", "eta_formula_im"],
        zip(r, pair.phi.real, pair.phi.imag, pair.eta.real, pair.eta.imag, etaf.eta.real, etaf.eta.imag),
    )
    eta_to_csv(etaf, run.path("eta.csv"))
    line_plot(
        run.path("eigenfunction.svg"),
        [("|phi|", r, np.abs(pair.phi)), ("|eta|", r, np.abs(pair.eta))],
        title="eigenfunction moduli",
        xlabel="r",
        ylabel="modulus",
    )
    run.results["eigen"] = res


def stage_demo(run: Run) -> None:
    dc = run.cfg["demo"]
    prof = run.profile()
    pair = run.pair()
    bundle = euler_bundle(pair, prof, run.eta())
    limit = dc["residual_factor"] * pair.residual
    res_rows = []
    for t in dc["t_samples"]:
        rr = bundle.self_similar_residual(t)
        res_rows.append({"t": t, "plus": rr["plus"], "minus": rr["minus"], "sign_gap": rr["sign_gap"], "rescaled": rr["rescaled"]})
        run.check(f"demo.residual_plus[t={t:g}]", rr["plus"] <= limit, rr["plus"], limit)
        run.check(f"demo.residual_minus[t={t:g}]", rr["minus"] <= limit, rr["minus"], limit)
        run.check(f"demo.sign_symmetry[t={t:g}]", rr["sign_gap"] <= 1e-10, rr["sign_gap"], 1e-10)
        tv = bundle.total_vorticity(t)
        rel = max(abs(tv["plus"]), abs(tv["minus"])) / tv["scale"]
        run.check(f"demo.zero_total_vorticity[t={t:g}]", rel <= 1e-10, rel, 1e-10)
    rows = lp_scaling_study(bundle, dc["p_list"])
    csv_rows = []
    for row in rows:
        p = row["p"]
        rel_stated = abs(row["slope_diff"] - row["stated_diff"]) / abs(row["stated_diff"])
        rel_derived = abs(row["slope_diff"] - row["expected_diff"]) / abs(row["expected_diff"])
        row["relative_error_stated"] = rel_stated
        row["relative_error_derived"] = rel_derived
        run.check(f"demo.slope_diff[p={p:g}]", rel_stated <= dc["slope_tol"], row["slope_diff"], row["stated_diff"])
        run.check(f"demo.slope_diff_derived[p={p:g}]", rel_derived <= 1e-6, row["slope_diff"], row["expected_diff"])
        ev = row["expected_vortex"]
        err_v = abs(row["slope_vortex"] - ev) / max(abs(ev), 1e-300) if ev != 0 else abs(row["slope_vortex"])
        run.check(f"demo.slope_vortex[p={p:g}]", err_v <= dc["slope_tol"], row["slope_vortex"], ev)
        run.check(f"demo.distinct_at_t1[p={p:g}]", row["norm_diff_at_1"] > 0, row["norm_diff_at_1"], 0.0)
        for t, nd in zip(row["t"], row["norm_diff"]):
            n2 = lp_norms_2d(bundle, p, t)
            csv_rows.append([t, p, n2["plus"], n2["minus"], nd, row["slope_diff"], row["slope_vortex"]])
    _write_csv(run.path("nonuniqueness.csv"), ["t", "p", "norm_plus", "norm_minus", "norm_diff", "slope_diff", "slope_vortex"], csv_rows)
    line_plot(
        run.path("nonuniqueness.svg"),
        [(f"p={row['p']:g}", row["t"], row["norm_diff"]) for row in rows],
        title="|omega+ - omega-|_Lp against t",
        xlabel="t",
        ylabel="norm",
        logx=True,
        logy=True,
        markers=True,
    )
    line_plot(
        run.path("vortex_lp.svg"),
        [(f"p={row['p']:g}", row["t_vortex"], row["norm_vortex"]) for row in rows],
        title="|t^-1 beta g(x / t^(1/alpha))|_Lp against t",
        xlabel="t",
        ylabel="norm",
        logx=True,
        logy=True,
        markers=True,
    )
    run.results["demo"] = {
        "lambda_physical": bundle.lambda_physical,
        "growth": bundle.growth,
        "eta_consistency": bundle.eta_consistency,
        "residuals": res_rows,
        "lp": rows,
    }


def stage_powerlaw(run: Run) -> None:
    dc = run.cfg["demo"]
    t0 = time.perf_counter()
    rep = verify_powerlaw_example(dc["powerlaw_alpha"], dc["powerlaw_gamma"])
    run.timing["powerlaw"] = time.perf_counter() - t0
    tol = dc["powerlaw_tol"]
    run.check("powerlaw.transport", rep["transport_residual"] <= tol, rep["transport_residual"], tol)
    run.check("powerlaw.poisson", rep["poisson_residual"] <= tol, rep["poisson_residual"], tol)
    _write_csv(run.path("powerlaw.csv"), list(rep.keys()), [[v if not isinstance(v, list) else ";".join(map(repr, v)) for v in rep.values()]])
    run.results["powerlaw"] = rep


STAGES = {
    "build-vortex": [stage_build_vortex],
    "tune": [stage_tune],
    "solve-sl": [stage_solve_sl],
    "solve-eig": [stage_solve_eig],
    "resolvent-study": [stage_resolvent],
    "demo-nonuniqueness": [stage_demo],
    "verify-powerlaw": [stage_powerlaw],
    "full-pipeline": [stage_build_vortex, stage_tune, stage_solve_sl, stage_resolvent, stage_solve_eig, stage_demo, stage_powerlaw],
}


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vil", description="Self-similar vortex instability pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config or a JSON manifest to rerun (default: shipped demo)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config key")
        p.add_argument("--output-dir", help="output directory (default: config output_dir, then $VIL_OUTPUT_DIR, then ./vil-output)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "resolvent-study":
            p.add_argument("--beta-list", help="comma-separated beta values")
            p.add_argument("--z", help="complex z, e.g. 0.5+0.1j")
            p.add_argument("--space", action="append", help="norm space (repeatable)")
        if name == "verify-powerlaw":
            p.add_argument("--alpha", type=float)
            p.add_argument("--gamma", type=float)
    return parser


def _flag_overrides(args) -> list[str]:
    out = list(args.overrides)
    if getattr(args, "beta_list", None):
        out.append(f"resolvent.beta_list=[{args.beta_list}]")
    if getattr(args, "z", None):
        try:
            z = complex(args.z.replace(" ", ""))
        except ValueError as exc:
            raise ConfigError(f"cannot parse --z {args.z!r}") from exc
        out.append(f"resolvent.z=[{z.real!r}, {z.imag!r}]")
    if getattr(args, "space", None):
        out.append("resolvent.spaces=[" + ", ".join(json.dumps(s) for s in args.space) + "]")
    if getattr(args, "alpha", None) is not None:
        out.append(f"demo.powerlaw_alpha={args.alpha!r}")
    if getattr(args, "gamma", None) is not None:
        out.append(f"demo.powerlaw_gamma={args.gamma!r}")
    return out


def resolve_output_dir(cli_value, cfg: dict, command: str) -> Path:
    base = cli_value or cfg.get("output_dir") or os.environ.get("VIL_OUTPUT_DIR") or "vil-output"
    return Path(base) / command


def write_manifest(run: Run, command: str, error: str | None = None) -> Path:
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "subcommand": command,
        "config": run.cfg,
        "results": run.results,
        "checks": run.checks,
        "passed": error is None and all(c["passed"] for c in run.checks),
        "error": error,
        "artifacts": sorted(set(run.artifacts)),
        "timing_seconds": run.timing,
    }
    path = run.out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config or demo_config_path(), _flag_overrides(args))
    except (ConfigError, VortexError) as exc:
        print(f"vil: invalid config: {exc}", file=sys.stderr)
        return 2
    run = Run(cfg, resolve_output_dir(args.output_dir, cfg, args.command))
    error = None
    try:
        for stage in STAGES[args.command]:
            t0 = time.perf_counter()
            stage(run)
            run.timing[stage.__name__] = time.perf_counter() - t0
    except VortexError as exc:
        print(f"vil: invalid config: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, RuntimeError, EnvelopeUnderflowError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        run.check("pipeline.completed", False, None, None, error)
    path = write_manifest(run, args.command, error)
    failed = [c["name"] for c in run.checks if not c["passed"]]
    for c in run.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}")
    print(f"manifest: {path}")
    return 1 if failed else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
