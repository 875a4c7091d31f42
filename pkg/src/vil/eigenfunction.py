"""Vorticity eigenfunction from the integrating-factor formula.

With ``I(r) = r^(alpha beta lambda - 1/2) exp(i k alpha beta Psi(r))`` and
``Psi(r) = v(0) log r + int_0^r (v(s) - v(0))/s ds``, the vorticity solving
``(S_beta - lambda) eta = -i k (g'/r) phi`` and vanishing past ``r0`` is

    eta(r) = i k alpha beta I(r) int_r^r0 g'(s) phi(s) / (s² I(s)) ds.

When ``gamma = alpha beta Re(lambda) - 1/2 < k + 1/2`` the integral converges
at 0 and ``eta = I(r) (C_phi - i k alpha beta int_0^r ...)``, whose leading
behaviour is ``C_phi I(r) ~ r^gamma``.  Otherwise the regular part
``~ r^(k+1/2)`` dominates near the origin.

Two realizations are provided: cumulative quadrature on a log-r grid (pairs
from ``solve_log_bvp``) and the Laplace transform of the explicit
transport-dilation flow, which integrates the same formula along
characteristics and works at any ``beta``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .grid_ops import RadialGrid, composite_grid
from .rayleigh_solver import EigenPair, _coupling
from .resolvent import SemigroupParams, make_probe, resolvent_apply
from .vortex import VortexProfile

__all__ = [
    "EtaFormulaError",
    "EnvelopeUnderflowError",
    "EtaFunction",
    "log_I",
    "build_I",
    "build_I_tilde",
    "phase_by_quadrature",
    "build_eta",
    "lk_phi",
    "consistency",
    "measure_regularity",
    "regularity_report",
    "second_difference_check",
    "phi_from_eta",
    "vorticity_moment",
    "eta_to_csv",
]


class EtaFormulaError(ValueError):
    pass


class EnvelopeUnderflowError(ArithmeticError):
    pass


# ----------------------------------------------------------------------------
# integrating factor
# ----------------------------------------------------------------------------


def phase_by_quadrature(profile: VortexProfile, r, points: int = 24) -> np.ndarray:
    """``int_0^r (v(s) - v(0))/s ds`` by Gauss-Legendre on panels split at the profile joints.

    The integrand is ``O(s)`` at the origin, so no special treatment is needed.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    x, w = leggauss(points)
    joints = np.asarray(profile.g_pp.breaks, dtype=float)
    out = np.empty(r.shape)
    for i, ri in enumerate(r):
        cuts = np.concatenate([[0.0], joints[(joints > 0) & (joints < ri)], [ri]])
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            s = 0.5 * (b - a) * (x + 1) + a
            total += 0.5 * (b - a) * np.dot(w, (profile.v(s) - profile.v0) / s)
        out[i] = total
    return out


def log_I(r, lam: complex, k: int, ab: float, profile: VortexProfile, method: str = "exact") -> np.ndarray:
    """``log I(r)``; ``method='quadrature'`` integrates the phase numerically."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise EtaFormulaError("I(r) is undefined at r = 0")
    if method == "exact":
        phase = profile.phase_integral(r)
    elif method == "quadrature":
        phase = phase_by_quadrature(profile, r).reshape(r.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (ab * lam - 0.5) * np.log(r) + 1j * k * ab * (profile.v0 * np.log(r) + phase)


def build_I(r, pair: EigenPair, profile: VortexProfile, method: str = "exact") -> np.ndarray:
    return np.exp(log_I(r, pair.lambda_beta, pair.k, pair.ab, profile, method))


def build_I_tilde(r, pair: EigenPair, profile: VortexProfile) -> np.ndarray:
    """``I(r) exp(-i k alpha beta v(0) log r)``: the factor without the logarithmic spiral."""
    r = np.asarray(r, dtype=float)
    lam, ab, k = pair.lambda_beta, pair.ab, pair.k
    return np.exp((ab * lam - 0.5) * np.log(r) + 1j * k * ab * profile.phase_integral(r))


# ----------------------------------------------------------------------------
# eta
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EtaFunction:
    """Vorticity ``eta`` at the pair's nodes plus an evaluator at arbitrary radii."""

    r: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    C_phi: complex | None
    holder_exponent: float
    support_radius: float
    integrable: bool
    representation: str
    cancellation: float
    exterior_residual: float
    k: int
    evaluate: Callable = field(repr=False)
    r_min: float = 0.0


def _reverse_cumulative(grid: RadialGrid, f: np.ndarray) -> np.ndarray:
    """``int_x^end f`` at every node, accumulated from the right end."""
    flipped = composite_grid(-grid.breaks[::-1], list(grid.degrees[::-1]), kind="log")
    return flipped.cumulative_apply(f[::-1])[::-1]


def _support_radius(r, eta, r0, rel: float = 1e-10) -> float:
    scale = np.max(np.abs(eta))
    if scale == 0:
        return 0.0
    big = np.abs(eta) > rel * scale
    return float(min(np.max(r[big]), r0)) if np.all(r[big] <= r0 * (1 + 1e-12)) else float(np.max(r[big]))


def _eta_integral(pair: EigenPair, profile: VortexProfile, R_out: float) -> EtaFunction:
    g = pair.grid
    t = g.nodes
    r = pair.r
    k, ab, lam = pair.k, pair.ab, pair.lambda_beta
    r0 = profile.support_radius
    logI = log_I(r, lam, k, ab, profile)
    q = profile.g_prime(r) * pair.phi / r * np.exp(-logI)
    K = _reverse_cumulative(g, q)
    eta = 1j * k * ab * np.exp(logI) * K
    gamma = pair.holder_exponent
    kappa = k + 1 - ab * lam - 1j * k * ab * profile.v0
    integrable = kappa.real > 0
    C_phi = None
    cancellation = 0.0
    exterior = 0.0
    scale = np.max(np.abs(eta))
    if integrable:
        tail = q[0] / kappa
        C_phi = complex(1j * k * ab * (K[0] + tail))
        J = tail + g.cumulative_apply(q)
        eta_fwd = np.exp(logI) * (C_phi - 1j * k * ab * J)
        cancellation = float(abs(eta_fwd[-1]) / scale)
        if cancellation > 1e-6:
            raise EtaFormulaError(f"cancellation loss |eta(r0-)| = {cancellation:.2e} max|eta|; refine near r0")
        r_ext = np.geomspace(r0, R_out, 64)
        defect = abs(C_phi - 1j * k * ab * J[-1])
        exterior = float(np.max(np.abs(np.exp(log_I(r_ext, lam, k, ab, profile)))) * defect / scale)

    t_min = t[0]

    def evaluate(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape, dtype=complex)
        inside = (x > 0) & (x <= r0)
        on_grid = inside & (np.log(np.where(x > 0, x, 1.0)) >= t_min)
        out[on_grid] = g.interpolate(eta, np.log(x[on_grid]))
        below = inside & ~on_grid
        if np.any(below) and integrable:
            out[below] = C_phi * np.exp(log_I(x[below], lam, k, ab, profile))
        return out

    return EtaFunction(
        r, eta, C_phi, gamma, _support_radius(r, eta, r0), bool(integrable),
        "log-quadrature", cancellation, exterior, k, evaluate, float(r[0]),
    )


def _eta_semigroup(pair: EigenPair, profile: VortexProfile, R_out: float, tol: float) -> EtaFunction:
    k, lam = pair.k, pair.lambda_beta
    r0 = profile.support_radius
    params = SemigroupParams(pair.alpha, pair.beta, k, profile)
    probe = make_probe(params, lam, tol=tol)

    def w(rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros(rho.shape, dtype=complex)
        inside = rho < r0
        if np.any(inside):
            x = rho[inside]
            out[inside] = 1j * k * _coupling(profile, x) * pair.phi_at(x)
        return out

    def evaluate(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return -resolvent_apply(probe, w, x)

    r = pair.r
    eta = evaluate(r)
    scale = np.max(np.abs(eta))
    r_ext = np.geomspace(r0, R_out, 16)
    exterior = float(np.max(np.abs(evaluate(r_ext))) / scale)
    kappa = k + 1 - pair.ab * lam.real
    return EtaFunction(
        r, eta, None, pair.holder_exponent, _support_radius(r, eta, r0), bool(kappa > 0),
        "semigroup", 0.0, exterior, k, evaluate, 0.0,
    )


def build_eta(pair: EigenPair, profile: VortexProfile, method: str = "auto", R_out: float | None = None, tol: float = 1e-12) -> EtaFunction:
    """``eta`` from ``phi`` by the integrating-factor formula.

    ``method='quadrature'`` needs a pair on a log-r grid; ``'semigroup'``
    works for any pair; ``'auto'`` picks quadrature when possible.
    """
    if pair.lambda_beta.real <= 0:
        raise EtaFormulaError("the formula needs Re lambda > 0")
    if not np.isfinite(pair.beta):
        raise EtaFormulaError("beta = inf has no integrating factor; eta = (g'/r) phi / (v - c)")
    r0 = profile.support_radius
    R_out = 8 * 60 * r0 if R_out is None else R_out
    if method == "auto":
        method = "quadrature" if pair.coordinate == "log" else "semigroup"
    if method == "quadrature":
        if pair.coordinate != "log":
            raise EtaFormulaError("quadrature realization needs a pair on a log-r grid")
        return _eta_integral(pair, profile, R_out)
    if method == "semigroup":
        return _eta_semigroup(pair, profile, R_out, tol)
    raise ValueError(f"unknown method {method!r}")


# ----------------------------------------------------------------------------
# checks
# ----------------------------------------------------------------------------


def lk_phi(pair: EigenPair) -> np.ndarray:
    """``L_k phi`` at the pair's nodes by spectral differentiation of ``phi``."""
    g = pair.grid
    k = pair.k
    if pair.coordinate == "log":
        p1 = g.apply_D(pair.phi)
        p2 = g.apply_D(p1)
        return np.exp(-2 * g.nodes) * (p2 - p1 - (k * k - 0.25) * pair.phi)
    r = g.nodes
    pos = r > 0
    if pair.planar:
        f = np.zeros_like(pair.phi)
        f[pos] = pair.phi[pos] / np.sqrt(r[pos])
        f1 = g.apply_D(f)
        f2 = g.apply_D(f1)
        out = np.zeros_like(pair.phi)
        out[pos] = np.sqrt(r[pos]) * (f2[pos] + f1[pos] / r[pos] - k * k * f[pos] / r[pos] ** 2)
        return out
    p2 = g.apply_D(g.apply_D(pair.phi))
    out = np.zeros_like(pair.phi)
    out[pos] = p2[pos] - (k * k - 0.25) * pair.phi[pos] / r[pos] ** 2
    return out


def consistency(etaf: EtaFunction, pair: EigenPair) -> float:
    """``|eta - L_k phi|_{L2} / |eta|_{L2}`` on the pair's nodes."""
    w = pair.weights
    diff = etaf.eta - lk_phi(pair)
    return float(np.sqrt(np.sum(w * np.abs(diff) ** 2) / np.sum(w * np.abs(etaf.eta) ** 2)))


def _fit_window(etaf: EtaFunction, decades: float, r_lo: float | None):
    if r_lo is None:
        r_lo = etaf.r_min if etaf.r_min > 0 else 1e-8 * etaf.support_radius
    r = np.geomspace(r_lo, r_lo * 10**decades, 41)
    vals = np.abs(etaf.evaluate(r))
    if np.any(vals < np.finfo(float).tiny * 1e10) or not np.all(np.isfinite(vals)):
        raise EnvelopeUnderflowError(
            f"|eta| underflows on [{r[0]:.2e}, {r[-1]:.2e}]: exponent >= measurable limit"
        )
    return r, vals


def measure_regularity(etaf: EtaFunction, decades: float = 2.0, r_lo: float | None = None) -> float:
    """Slope of ``log|eta|`` against ``log r`` over the innermost ``decades``."""
    r, vals = _fit_window(etaf, decades, r_lo)
    slope, _ = np.polyfit(np.log(r), np.log(vals), 1)
    return float(slope)


def regularity_report(etaf: EtaFunction, decades: float = 2.0) -> dict:
    """Measured slope next to the formula exponent and the regular-part exponent ``k + 1/2``."""
    out = {"gamma": etaf.holder_exponent, "regular_exponent": etaf.k + 0.5, "integrable": etaf.integrable}
    try:
        out["measured"] = measure_regularity(etaf, decades)
    except EnvelopeUnderflowError as exc:
        out["measured"] = None
        out["note"] = str(exc)
        return out
    out["expected"] = min(etaf.holder_exponent, etaf.k + 0.5)
    out["relative_error"] = abs(out["measured"] - out["expected"]) / out["expected"]
    return out


def second_difference_check(etaf: EtaFunction, h0: float = 1e-2, levels: int = 3, r_max: float = 0.2) -> dict:
    """Largest ``|eta(x+h) - 2 eta(x) + eta(x-h)| / h²`` near the origin for ``h = h0 / 2^j``.

    Bounded second differences under refinement indicate ``eta in C²``.
    """
    maxima = []
    for j in range(levels):
        h = h0 / 2**j
        x = np.arange(0.0, r_max + h / 2, h)
        e = etaf.evaluate(x)
        d2 = np.abs(e[2:] - 2 * e[1:-1] + e[:-2]) / h**2
        maxima.append(float(np.max(d2)))
    ratios = [maxima[j + 1] / maxima[j] for j in range(levels - 1)]
    return {"h0": h0, "maxima": maxima, "ratios": ratios, "bounded": bool(ratios[-1] < 1.3)}


def phi_from_eta(etaf: EtaFunction, pair: EigenPair) -> np.ndarray:
    """Invert ``L_k`` with decay past ``r0`` (log-grid pairs only)."""
    if pair.coordinate != "log":
        raise EtaFormulaError("roundtrip inversion is implemented for log-grid pairs")
    g = pair.grid
    r = pair.r
    k = pair.k
    eta = etaf.eta
    inner = g.cumulative_apply(r ** (k + 1.5) * eta)
    outer = _reverse_cumulative(g, r ** (1.5 - k) * eta)
    return -(r ** (0.5 - k) * inner + r ** (0.5 + k) * outer) / (2 * k)


def vorticity_moment(etaf: EtaFunction, pair: EigenPair) -> float:
    """``int |eta| r^(1/2) dr``; finite means ``r^(-1/2) eta e^(ik theta)`` is integrable in the plane."""
    return float(np.sum(pair.weights * np.abs(etaf.eta) * np.sqrt(pair.r)))


def eta_to_csv(etaf: EtaFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "eta_re", "eta_im", "eta_abs"])
        for ri, ei in zip(etaf.r, etaf.eta):
            w.writerow([f"{ri:.17g}", f"{ei.real:.17g}", f"{ei.imag:.17g}", f"{abs(ei):.17g}"])
