"""Self-similar Rayleigh eigenvalue problem.

Unknowns are ``eta = L_k phi`` and ``lambda`` with

    lambda eta = S_beta eta + i k (g'/r) phi,   S_beta = -i k v + (r d/dr + 1/2)/(alpha beta).

Three solvers are provided:

* ``solve_direct``: dense collocation in the planar variables
  ``eta_hat = r^-1/2 eta`` on ``[0, r0]`` with the exact Green's function for
  ``phi``.  Accurate for ``beta = inf`` and large ``beta``.
* ``solve_log_bvp``: Lobatto collocation of the first-order system
  ``(phi, r phi', eta)`` in ``t = log r`` as a sparse boundary-value problem,
  with a secant iteration on ``lambda``.  It resolves the
  ``r^(i alpha beta k v(0))`` oscillation near the origin, so it covers moderate
  ``beta``, and gives an independent check at ``beta = inf``.
  ``shooting_function`` offers the element-propagator determinant as a
  further cross-check.
* the perturbative construction around the neutral mode: dispersion
  prediction for ``c~`` (``predict_ctilde``), the inner/outer operator bundle
  and its Neumann solve (``solve_perturbative``).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from numpy.polynomial import Polynomial
from scipy.optimize import newton
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .grid_ops import (
    RadialGrid,
    adapted_breaks,
    composite_grid,
    gll_diff,
    gll_rule,
    mode_operator,
    Lk_inverse_matrix,
    norm_gram,
)
from .resolvent import SemigroupParams, collocation_resolvent, collocation_T_beta
from .sturm_liouville import DETUNING_SIGN, NeutralMode, solve_neutral_mode
from .vortex import VortexProfile, eval_A

log = logging.getLogger(__name__)

__all__ = [
    "EigenProblemConfig",
    "EigenPair",
    "EigenSolveError",
    "Cutoff",
    "direct_grid",
    "solve_direct",
    "solve_log_bvp",
    "continue_eigenvalue",
    "shooting_function",
    "DispersionReport",
    "Gamma1",
    "Gamma2",
    "denominator_correction",
    "predict_ctilde",
    "PerturbativeBundle",
    "assemble_perturbative_operators",
    "measure_M_norms",
    "PerturbativeResult",
    "solve_perturbative",
    "RayleighEigenSolver",
]


class EigenSolveError(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenProblemConfig:
    """Numerical and physical parameters of one eigenproblem.

    ``M``, ``R``, ``R_out`` default to ``60 r0``, ``10 r0`` and ``8 M``;
    ``beta=None`` means the default ``100/epsilon²``.
    """

    alpha: float = 0.4
    beta: float | None = None
    k: int = 2
    epsilon: float = 1e-2
    M: float | None = None
    R: float | None = None
    R_out: float | None = None
    degree: int = 16
    finest: float = 1e-4
    max_size: float = 0.1
    support_factor: float = 1.0
    check_degree: int | None = None
    stability_tol: float = 1e-4
    residual_tol: float = 1e-7

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if abs(self.k) < 2:
            raise ValueError("|k| must be at least 2")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.beta is not None and not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.support_factor < 1.0:
            raise ValueError("support_factor must be >= 1")

    @property
    def beta0(self) -> float:
        return 100.0 / self.epsilon**2

    @property
    def beta_value(self) -> float:
        return self.beta0 if self.beta is None else float(self.beta)

    @property
    def ab(self) -> float:
        return self.alpha * self.beta_value

    def radii(self, r0: float) -> tuple[float, float, float]:
        M = 60.0 * r0 if self.M is None else float(self.M)
        R = 10.0 * r0 if self.R is None else float(self.R)
        R_out = 8.0 * M if self.R_out is None else float(self.R_out)
        if M < 4 * R:
            raise ValueError(f"M = {M:g} must be at least 4R = {4 * R:g} so the cutoffs do not overlap")
        return M, R, R_out

    def with_(self, **changes) -> "EigenProblemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Cutoff:
    """``C^3`` step from 1 to 0 on ``[a, b]`` (``rising=False``) or from 0 to 1."""

    a: float
    b: float
    rising: bool = False

    _S = Polynomial([0, 0, 0, 0, 35, -84, 70, -20])

    def __call__(self, r, m: int = 0):
        r = np.asarray(r, dtype=float)
        s = np.clip((r - self.a) / (self.b - self.a), 0.0, 1.0)
        inside = (r > self.a) & (r < self.b)
        S = self._S.deriv(m) if m else self._S
        val = S(s) / (self.b - self.a) ** m
        if m:
            val = np.where(inside, val, 0.0)
        return val if self.rising else (1.0 - val if m == 0 else -val)

    def bound_constant(self) -> float:
        """``sup|chi'| + sup|r chi''|`` sampled on the transition."""
        r = np.linspace(self.a, self.b, 2001)
        return float(np.max(np.abs(self(r, 1))) + np.max(np.abs(r * self(r, 2))))


# ----------------------------------------------------------------------------
# eigenpair container
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigenpair on ``[0, r_end]``; ``phi`` continues as ``r^(1/2-k)`` beyond, ``eta`` as 0.

    ``grid`` lives in ``r`` (``coordinate='r'``) or in ``t = log r``
    (``coordinate='log'``).  ``phi`` is normalized by ``|phi/r|_{L2(0,inf)} = 1``
    with ``phi(1) > 0``.
    """

    lambda_beta: complex
    k: int
    alpha: float
    beta: float
    epsilon: float
    grid: RadialGrid = field(repr=False)
    coordinate: str
    phi: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    residual: float
    method: str
    v1: float
    diagnostics: dict = field(default_factory=dict, repr=False)
    planar: bool = False

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.grid.nodes) if self.coordinate == "log" else self.grid.nodes

    @property
    def r_end(self) -> float:
        hi = self.grid.domain[1]
        return float(np.exp(hi)) if self.coordinate == "log" else hi

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights for ``dr``."""
        return self.grid.weights * self.r if self.coordinate == "log" else self.grid.weights

    @property
    def c(self) -> complex:
        return 1j * self.lambda_beta / self.k

    @property
    def c_tilde(self) -> complex:
        return (self.c - self.v1) / self.epsilon

    @property
    def ab(self) -> float:
        return self.alpha * self.beta

    @property
    def lambda_physical(self) -> complex:
        """Rate in ``t^(beta lambda)``: ``lambda_beta + (alpha-1)/(alpha beta)``."""
        if not np.isfinite(self.beta):
            return self.lambda_beta
        return self.lambda_beta + (self.alpha - 1.0) / (self.alpha * self.beta)

    @property
    def holder_exponent(self) -> float:
        return self.ab * self.lambda_beta.real - 0.5

    def _x(self, r):
        r = np.asarray(r, dtype=float)
        if self.coordinate == "log":
            return np.log(np.maximum(r, 1e-300))
        return r

    def _interp(self, values, r):
        if not self.planar:
            return self.grid.interpolate(values, self._x(r), fill=0.0).astype(complex)
        # r^(-1/2) times the data is polynomial on each element
        rn = self.r
        hat = np.zeros_like(values)
        hat[rn > 0] = values[rn > 0] / np.sqrt(rn[rn > 0])
        return self.grid.interpolate(hat, r, fill=0.0) * np.sqrt(np.maximum(r, 0.0))

    def phi_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = self._interp(self.phi, r)
        beyond = r > self.r_end
        if np.any(beyond):
            out[beyond] = self.phi[-1] * (r[beyond] / self.r_end) ** (0.5 - abs(self.k))
        return out

    def eta_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = self._interp(self.eta, r)
        out[r > self.r_end] = 0.0
        return out


def _normalize(phi, eta, r, w, k, r_end, phi_end, r_one_value):
    """Scale so that ``|phi/r|_{L2(0, inf)} = 1`` and ``phi(1)`` is real positive."""
    pos = r > 0
    inside = np.sum(w[pos] * np.abs(phi[pos]) ** 2 / r[pos] ** 2)
    tail = abs(phi_end) ** 2 / (2 * abs(k) * r_end)
    scale = np.sqrt(inside + tail)
    phase = r_one_value / abs(r_one_value)
    s = 1.0 / (scale * phase)
    return phi * s, eta * s


# ----------------------------------------------------------------------------
# direct collocation in planar variables
# ----------------------------------------------------------------------------


def direct_grid(profile: VortexProfile, config: EigenProblemConfig, degree: int | None = None) -> RadialGrid:
    r0 = profile.support_radius
    r_end = r0 * config.support_factor
    required = [b for b in profile.g_pp.breaks if 0 < b < r_end]
    if config.support_factor > 1:
        required.append(r0)
    breaks = adapted_breaks(0.0, r_end, sorted(set(required)), focus=[profile.r1], finest=config.finest, max_size=config.max_size)
    return composite_grid(breaks, config.degree if degree is None else degree)


def _planar_green(grid: RadialGrid, k: int) -> np.ndarray:
    """Matrix ``G`` with ``phi_hat = G eta_hat`` for ``L_k phi = eta``, ``phi ~ r^(1/2-k)`` past the grid.

    ``phi_hat(r) = -(1/2k) [r^-k int_0^r s^(k+1) eta_hat + r^k int_r^R s^(1-k) eta_hat]``.
    """
    k = abs(k)
    r = grid.nodes
    Q = grid.cumulative
    n = grid.n
    pos = r > 0
    A1 = Q * (r ** (k + 1))[None, :]
    w2 = np.zeros(n)
    w2[pos] = r[pos] ** (1.0 - k)
    tailQ = Q[-1][None, :] - Q
    A2 = tailQ * w2[None, :]
    if k == 1:
        A2[:, ~pos] = tailQ[:, ~pos]
    elif k == 2:
        # s^-1 eta_hat at s = 0 equals eta_hat'(0) because eta_hat(0) = 0
        A2 += tailQ[:, [0]] * grid.D[0][None, :]
    G = np.zeros((n, n))
    G[pos] = -(A1[pos] / (r[pos] ** k)[:, None] + (r[pos] ** k)[:, None] * A2[pos]) / (2 * k)
    return G


def _coupling(profile: VortexProfile, r: np.ndarray) -> np.ndarray:
    """``g'(r)/r`` with its limit ``g''(0)`` at the origin."""
    out = np.empty(r.shape)
    pos = r > 0
    out[pos] = profile.g_prime(r[pos]) / r[pos]
    out[~pos] = profile.g_second(np.zeros(np.count_nonzero(~pos)))
    return out


def _direct_matrix(profile: VortexProfile, grid: RadialGrid, k: int, ab: float):
    r = grid.nodes
    G = _planar_green(grid, k)
    mat = np.diag(-1j * k * profile.v(r)) + (1j * k * _coupling(profile, r))[:, None] * G
    if np.isfinite(ab):
        D = grid.diff_matrix("right")
        mat = mat + (r[:, None] * D + np.eye(grid.n)) / ab
    keep = np.arange(1, grid.n - 1)
    return mat[np.ix_(keep, keep)], G, keep


def _direct_residual(profile, grid, k, ab, lam, eta_hat, oversample=8) -> float:
    """Residual of the planar equation on a finer grid, relative to ``|eta|``."""
    fine = composite_grid(grid.breaks, [p + oversample for p in grid.degrees])
    e = grid.interpolate(eta_hat, fine.nodes)
    rf = fine.nodes
    phi_hat = _planar_green(fine, k) @ e
    rhs = -1j * k * profile.v(rf) * e + 1j * k * _coupling(profile, rf) * phi_hat
    if np.isfinite(ab):
        rhs = rhs + (rf * fine.apply_D(e, "right") + e) / ab
    res = lam * e - rhs
    w = fine.weights * rf
    return float(np.sqrt(np.sum(w * np.abs(res) ** 2) / np.sum(w * np.abs(lam * e) ** 2)))


def _nearest(values: np.ndarray, target: complex) -> complex:
    return complex(values[np.argmin(np.abs(values - target))])


def _refine_eigenvalue(profile, grid, k, ab, guess: complex) -> complex:
    mat, _, _ = _direct_matrix(profile, grid, k, ab)
    val = spla.eigs(mat, k=1, sigma=guess, which="LM", return_eigenvectors=False)
    return complex(val[0])


def solve_direct(profile: VortexProfile, config: EigenProblemConfig, neutral: NeutralMode | None = None) -> EigenPair:
    """Most unstable eigenpair by dense collocation, with spurious-mode filters.

    Candidates need ``Re lambda > epsilon/2``.  Each must reappear (relative
    shift below ``stability_tol``) on a grid of higher degree, and its vorticity
    must stay inside ``[0, r0]`` when the domain extends past ``r0``.  The
    survivor with the largest growth rate wins; ties go to ``c`` nearest ``v(1)``.
    """
    k = abs(config.k)
    ab = config.ab
    grid = direct_grid(profile, config)
    mat, G, keep = _direct_matrix(profile, grid, k, ab)
    vals, vecs = sla.eig(mat)
    check_deg = config.check_degree or config.degree + 8
    check_grid = direct_grid(profile, config, degree=check_deg)
    order = np.argsort(-vals.real)
    r0 = profile.support_radius
    rejected = []
    chosen = None
    v1 = profile.v1
    threshold = config.epsilon / 2
    survivors = []
    for i in order:
        lam = complex(vals[i])
        if lam.real <= threshold:
            break
        try:
            lam_check = _refine_eigenvalue(profile, check_grid, k, ab, lam)
        except Exception as exc:  # ARPACK failures count as instability
            rejected.append((lam, f"refinement failed: {exc}"))
            continue
        shift = abs(lam_check - lam) / abs(lam)
        if shift > config.stability_tol:
            rejected.append((lam, f"moved {shift:.2e} under refinement"))
            continue
        eta_hat = np.zeros(grid.n, dtype=complex)
        eta_hat[keep] = vecs[:, i]
        if config.support_factor > 1:
            w = grid.weights * grid.nodes * np.abs(eta_hat) ** 2
            outside = np.sum(w[grid.nodes > r0 * (1 + 1e-3)]) / np.sum(w)
            if outside > 1e-6:
                rejected.append((lam, f"vorticity mass {outside:.2e} outside r0"))
                continue
        survivors.append((lam, eta_hat, shift))
    if not survivors:
        if not rejected:
            raise EigenSolveError(f"no eigenvalue with Re lambda > epsilon/2 = {threshold:g}")
        raise EigenSolveError(f"all {len(rejected)} candidates rejected by the spurious-mode filters: {rejected[:3]}")
    best_re = max(s[0].real for s in survivors)
    ties = [s for s in survivors if s[0].real >= best_re * (1 - 1e-9)]
    lam, eta_hat, shift = min(ties, key=lambda s: abs(1j * s[0] / k - v1))
    for lam_rej, why in rejected:
        log.info("rejected lambda=%s: %s", lam_rej, why)

    r = grid.nodes
    phi_hat = G @ eta_hat
    phi = np.sqrt(r) * phi_hat
    eta = np.sqrt(r) * eta_hat
    phi_one = grid.interpolate(phi, np.array([profile.r1]))[0]
    phi, eta = _normalize(phi, eta, r, grid.weights, k, grid.domain[1], phi[-1], phi_one)
    residual = _direct_residual(profile, grid, k, ab, lam, eta_hat)
    diag = {
        "n_nodes": grid.n,
        "refinement_shift": shift,
        "check_degree": check_deg,
        "rejected": [(str(l), why) for l, why in rejected],
        "n_candidates": len(survivors) + len(rejected),
    }
    return EigenPair(lam, k, config.alpha, config.beta_value, config.epsilon, grid, "r", phi, eta, residual, "direct", v1, diag, planar=True)


# ----------------------------------------------------------------------------
# shooting in t = log r
# ----------------------------------------------------------------------------


def _log_breaks(profile, k, ab, lam, t_min, t_max, q, h_max=0.05, samples=4000):
    """Element breaks in ``t`` with density set by the local oscillation rate."""
    joints = [np.log(b) for b in profile.g_pp.breaks if 0 < b and t_min < np.log(b) < t_max]
    fixed = [t_min] + sorted(joints) + [t_max]
    c = 1j * lam / k
    out = [t_min]
    for a, b in zip(fixed[:-1], fixed[1:]):
        t = np.linspace(a, b, samples)
        r = np.exp(t)
        v = profile.v(r)
        if np.isfinite(ab):
            density = (ab * np.abs(lam + 1j * k * v) + k + 1) / q
        else:
            density = r * np.abs(profile.v_prime(r)) / (q * np.abs(v - c))
        density = np.maximum(density, 1.0 / h_max)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(t))])
        count = max(1, int(np.ceil(cum[-1])))
        inner = np.interp(np.linspace(0, cum[-1], count + 1)[1:-1], cum, t)
        out.extend(list(inner) + [b])
    return np.array(out)


def _system_matrices(profile, k, ab, lam, T):
    """``dy/dt = A(t) y`` for ``y = (phi, r phi', eta)`` (or ``(phi, r phi')`` when ``beta = inf``)."""
    r = np.exp(T)
    v = profile.v(r.ravel()).reshape(T.shape)
    gpr = (profile.g_prime(r.ravel()) / r.ravel()).reshape(T.shape)
    m = 2 if not np.isfinite(ab) else 3
    A = np.zeros(T.shape + (m, m), dtype=complex)
    A[..., 0, 1] = 1.0
    A[..., 1, 1] = 1.0
    if m == 2:
        c = 1j * lam / k
        A[..., 1, 0] = k * k - 0.25 + r * r * gpr / (v - c)
    else:
        A[..., 1, 0] = k * k - 0.25
        A[..., 1, 2] = r * r
        A[..., 2, 0] = -1j * k * ab * gpr
        A[..., 2, 2] = ab * (lam + 1j * k * v) - 0.5
    return A


def _fundamental(grid: RadialGrid, A: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Per-element fundamental matrices ``Y[e, j]`` with ``Y[e, 0] = I`` by Lobatto collocation."""
    p = grid.degrees[0]
    m = A.shape[-1]
    D = gll_diff(p)
    h = np.diff(grid.breaks)
    E = len(h)
    n = (p + 1) * m
    Dk = np.kron(D, np.eye(m))
    B = np.zeros((n, m))
    B[:m] = np.eye(m)
    out = np.empty((E, p + 1, m, m), dtype=complex)
    for s in range(0, E, chunk):
        sl = slice(s, min(E, s + chunk))
        Mx = np.repeat(Dk[None], sl.stop - sl.start, axis=0).astype(complex) * (2.0 / h[sl])[:, None, None]
        for j in range(p + 1):
            Mx[:, j * m : (j + 1) * m, j * m : (j + 1) * m] -= A[sl, j]
        Mx[:, :m, :] = 0.0
        Mx[:, :m, :m] = np.eye(m)
        Y = np.linalg.solve(Mx, np.broadcast_to(B, (sl.stop - sl.start, n, m)))
        out[sl] = Y.reshape(-1, p + 1, m, m)
    return out


@dataclass
class _ShootState:
    grid: RadialGrid
    i_match: int
    Y: np.ndarray
    y_in: np.ndarray
    Y_out: np.ndarray
    value: complex


def _log_grid(profile, k, ab, lam, r_min, degree, q, r_match):
    r0 = profile.support_radius
    tb = _log_breaks(profile, k, ab, lam, np.log(r_min), np.log(r0), q)
    i_m = int(np.argmin(np.abs(tb - np.log(r_match))))
    i_m = min(max(i_m, 1), len(tb) - 2)
    return composite_grid(tb, degree, kind="log"), i_m


def _shoot(profile, k, ab, lam, grid, i_m) -> _ShootState:
    x, _ = gll_rule(grid.degrees[0])
    tb = grid.breaks
    h = np.diff(tb)
    T = tb[:-1, None] + 0.5 * (x[None, :] + 1) * h[:, None]
    A = _system_matrices(profile, k, ab, lam, T)
    Y = _fundamental(grid, A)
    m = A.shape[-1]
    P = Y[:, -1]
    # inward from r0: exterior phi ~ r^(1/2-k) and eta = 0
    y = np.array([1.0, 0.5 - k, 0.0][:m], dtype=complex)
    y_in = np.empty((len(tb), m), dtype=complex)
    y_in[-1] = y
    for e in range(len(tb) - 2, i_m - 1, -1):
        y = np.linalg.solve(P[e], y)
        y = y / np.linalg.norm(y)
        y_in[e] = y
    # outward: regular phi plus, for finite beta, the free homogeneous eta
    r_min = np.exp(tb[0])
    phi0 = 1.0
    if m == 2:
        Yo = np.array([[phi0], [(k + 0.5) * phi0]], dtype=complex)
    else:
        a0 = ab * (lam + 1j * k * profile.v0) - 0.5
        b0 = 1j * k * ab * float(profile.g_second(np.zeros(1))[0])
        Yo = np.array([[phi0, 0.0], [(k + 0.5) * phi0, 0.0], [b0 * phi0 / (a0 - k - 0.5), 1.0]], dtype=complex)
    Y_out = np.empty((len(tb), m, Yo.shape[1]), dtype=complex)
    Y_out[0] = Yo
    for e in range(0, i_m):
        Yo = P[e] @ Yo
        Yo = Yo / np.linalg.norm(Yo, axis=0)
        Y_out[e + 1] = Yo
    S = np.column_stack([y_in[i_m], Y_out[i_m]])
    val = np.linalg.det(S)
    del r_min
    return _ShootState(grid, i_m, Y, y_in, Y_out, complex(val))


def shooting_function(profile: VortexProfile, k: int, alpha: float, beta: float, grid: RadialGrid, i_match: int) -> Callable[[complex], complex]:
    """``lambda -> det[inward solution, outward family]`` at the matching node."""
    ab = alpha * beta

    def F(lam):
        return _shoot(profile, k, ab, complex(lam), grid, i_match).value

    return F


def solve_log_bvp(
    profile: VortexProfile,
    config: EigenProblemConfig,
    lam_guess: complex,
    r_min: float | None = None,
    degree: int = 20,
    q: float | None = None,
    tol: float = 1e-12,
    maxiter: int = 40,
) -> EigenPair:
    """Eigenpair from the collocation boundary-value problem in ``t = log r``.

    The secant iteration drives the defect of one dropped boundary condition
    to zero.  The element layout is frozen at ``lam_guess`` and rebuilt once
    at the converged value.
    """
    k = abs(config.k)
    ab = config.ab
    r0 = profile.support_radius
    if r_min is None:
        r_min = 1e-8 * r0
    if q is None:
        q = 4.0 if np.isfinite(ab) else 1.0
    lam = complex(lam_guess)
    for _ in range(2):
        grid, i_m = _log_grid(profile, k, ab, lam, r_min, degree, q, 0.5)
        defect = lambda z: _bvp_eigenvector(profile, k, ab, complex(z), grid, signed=True)[1]
        try:
            lam = complex(newton(defect, lam, tol=tol, maxiter=maxiter))
        except RuntimeError as exc:
            raise EigenSolveError(f"log-grid eigen solve did not converge from {lam_guess}: {exc}") from exc
    nodes, bc_defect = _bvp_eigenvector(profile, k, ab, lam, grid)
    m = nodes.shape[1]
    r = np.exp(grid.nodes)
    phi = nodes[:, 0]
    if m == 2:
        c = 1j * lam / k
        eta = _coupling(profile, r) * phi / (profile.v(r) - c)
    else:
        eta = nodes[:, 2]
    phi_one = grid.interpolate(phi, np.array([np.log(profile.r1)]))[0]
    phi, eta = _normalize(phi, eta, r, grid.weights * r, k, r0, phi[-1], phi_one)
    shoot = _shoot(profile, k, ab, lam, grid, i_m)
    pair = EigenPair(
        lam, k, config.alpha, config.beta_value, config.epsilon, grid, "log", phi, eta, 0.0, "log-bvp", profile.v1,
        {"n_elements": len(grid.degrees), "n_nodes": grid.n, "r_min": r_min, "degree": degree, "q": q,
         "bc_defect": bc_defect, "shooting_det": abs(shoot.value)},
    )
    return replace(pair, residual=_log_residual(profile, pair))


def continue_eigenvalue(profile: VortexProfile, config: EigenProblemConfig, lam_start: complex, ab_start: float, ab_target: float, steps: int = 8, **kw) -> list[EigenPair]:
    """Follow one eigenvalue branch in ``alpha beta`` with a linear predictor."""
    abs_ = np.geomspace(ab_start, ab_target, steps + 1)
    pairs = []
    lam_prev, lam_cur = None, complex(lam_start)
    for j, ab in enumerate(abs_):
        guess = lam_cur
        if lam_prev is not None:
            guess = lam_cur + (lam_cur - lam_prev) * (ab - abs_[j - 1]) / (abs_[j - 1] - abs_[j - 2])
        pair = solve_log_bvp(profile, config.with_(beta=ab / config.alpha), guess, **kw)
        if j > 0:
            lam_prev = lam_cur
        lam_cur = pair.lambda_beta
        pairs.append(pair)
    return pairs


def _bvp_eigenvector(profile, k, ab, lam, grid: RadialGrid, signed: bool = False) -> tuple[np.ndarray, complex]:
    """Eigenvector at a converged ``lambda`` from the global collocation boundary-value problem.

    Chained propagation cannot do this when the regular solution is
    subdominant.  The sparse system imposes regularity at ``r_min``, the
    exterior decay ``r phi' = (1/2 - k) phi`` and ``eta = 0`` at ``r0``, with
    one decay condition swapped for ``phi(r_match) = 1``.  The dropped
    condition's defect is returned as a consistency check.
    """
    import scipy.sparse as sp

    p = grid.degrees[0]
    x, _ = gll_rule(p)
    tb = grid.breaks
    h = np.diff(tb)
    E = len(h)
    T = tb[:-1, None] + 0.5 * (x[None, :] + 1) * h[:, None]
    A = _system_matrices(profile, k, ab, lam, T)
    m = A.shape[-1]
    D = gll_diff(p)
    nb = (p + 1) * m
    blocks = np.repeat(np.kron(D, np.eye(m))[None].astype(complex), E, axis=0) * (2.0 / h)[:, None, None]
    for j in range(p + 1):
        blocks[:, j * m : (j + 1) * m, j * m : (j + 1) * m] -= A[:, j]
    coll = blocks[:, m:, :]  # equations at nodes 1..p
    rows, cols, vals = [], [], []
    er = np.arange(E)[:, None, None] * (p * m) + np.arange(p * m)[None, :, None]
    ec = np.arange(E)[:, None, None] * nb + np.arange(nb)[None, None, :]
    rows.append(np.broadcast_to(er, coll.shape).ravel())
    cols.append(np.broadcast_to(ec, coll.shape).ravel())
    vals.append(coll.ravel())
    n_eq = E * p * m
    # continuity between elements
    for c in range(m):
        e = np.arange(1, E)
        r_idx = n_eq + (e - 1) * m + c
        rows += [r_idx, r_idx]
        cols += [e * nb + c, (e - 1) * nb + p * m + c]
        vals += [np.ones(E - 1, complex), -np.ones(E - 1, complex)]
    n_eq += (E - 1) * m
    last = (E - 1) * nb + p * m
    extra = [([0 * nb + 1, 0], [1.0, -(k + 0.5)])]  # r phi' = (k + 1/2) phi at r_min
    if m == 3:
        extra.append(([last + 2], [1.0]))  # eta(r0) = 0
    i_m = int(np.argmin(np.abs(tb - np.log(0.5))))
    i_m = min(max(i_m, 1), E - 1)
    extra.append(([i_m * nb], [1.0]))  # normalization phi(t_match) = 1
    rhs = np.zeros(n_eq + len(extra), dtype=complex)
    for j, (cc, vv) in enumerate(extra):
        rows.append(np.full(len(cc), n_eq + j))
        cols.append(np.array(cc))
        vals.append(np.array(vv, dtype=complex))
    rhs[-1] = 1.0
    N = E * nb
    mat = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    y = spla.spsolve(mat, rhs).reshape(E, p + 1, m)
    # dropped condition: r phi' = (1/2 - k) phi at r0
    phi_end, psi_end = y[-1, -1, 0], y[-1, -1, 1]
    defect = (psi_end - (0.5 - k) * phi_end) / phi_end
    if signed:
        return None, complex(defect)
    nodes = np.zeros((grid.n, m), dtype=complex)
    for e, sl, a, b in grid.element_slices():
        nodes[sl] = y[e]
    return nodes, float(abs(defect))


def _log_residual(profile: VortexProfile, pair: EigenPair) -> float:
    """Residual of ``lambda eta = S_beta eta + i k (g'/r) phi`` with spectral ``d/dt``."""
    if not np.isfinite(pair.beta):
        return 0.0
    g = pair.grid
    r = pair.r
    eta = pair.eta
    k = pair.k
    s_eta = -1j * k * profile.v(r) * eta + (g.apply_D(eta) + 0.5 * eta) / pair.ab
    res = pair.lambda_beta * eta - s_eta - 1j * k * _coupling(profile, r) * pair.phi
    w = pair.weights
    return float(np.sqrt(np.sum(w * np.abs(res) ** 2) / np.sum(w * np.abs(pair.lambda_beta * eta) ** 2)))


# ----------------------------------------------------------------------------
# dispersion prediction
# ----------------------------------------------------------------------------


def _layer_grid(profile: VortexProfile, finest: float = 1e-6, degree: int = 16) -> RadialGrid:
    r0 = profile.support_radius
    required = [b for b in profile.g_pp.breaks if 0 < b < r0]
    return composite_grid(adapted_breaks(0.0, r0, required, focus=[profile.r1], finest=finest, max_size=0.05), degree)


def Gamma1(profile: VortexProfile, neutral: NeutralMode, c: complex, grid: RadialGrid | None = None) -> complex:
    """``int A phi0² / (v - c) dr`` over the support (``A = g'/(r(v - v(1)))``)."""
    grid = _layer_grid(profile) if grid is None else grid
    r = grid.nodes
    phi0 = neutral(r)
    return complex(np.dot(grid.weights, eval_A(profile, r) * phi0**2 / (profile.v(r) - c)))


def Gamma2(profile: VortexProfile, neutral: NeutralMode, alpha: float, beta: float, k: int, c: complex, grid: RadialGrid | None = None) -> complex:
    """``<T_beta(i k g'/r phi0), phi0>`` at ``z = -i k c`` via the collocation resolvent."""
    if not np.isfinite(beta):
        return 0.0j
    if grid is None:
        grid = direct_grid(profile, EigenProblemConfig(alpha=alpha, beta=beta, k=k))
    r = grid.nodes
    params = SemigroupParams(alpha, beta, k, profile)
    z = -1j * k * c
    phi0 = neutral(r)
    T = collocation_T_beta(params, grid, z)
    return complex(np.dot(grid.weights, (T @ (1j * k * _coupling(profile, r) * phi0)) * phi0))


def denominator_correction(profile: VortexProfile, c_tilde: complex, epsilons, r=None) -> dict:
    """``h_eps = 1/(v - c) - 1/(v'(1)(r - 1) - eps c~)`` over an epsilon ladder."""
    r = np.linspace(1e-3, profile.support_radius, 20001) if r is None else np.asarray(r)
    v1, vp = profile.v1, profile.v_prime_at_1
    out = {"epsilon": [], "max_abs": [], "max_imag": []}
    for eps in epsilons:
        c = v1 + eps * c_tilde
        h = 1.0 / (profile.v(r) - c) - 1.0 / (vp * (r - profile.r1) - eps * c_tilde)
        out["epsilon"].append(float(eps))
        out["max_abs"].append(float(np.max(np.abs(h))))
        out["max_imag"].append(float(np.max(np.abs(h.imag))))
    return out


@dataclass(frozen=True)
class DispersionReport:
    """Step-five prediction of ``c~`` and its Rouché certificate."""

    z0: complex
    kappa: float
    gamma1_term: float
    c_tilde_root: complex
    Gamma2: complex
    rouche_margin: float
    epsilon: float
    v1: float
    k: int
    ladder: tuple = ()
    newton_history: tuple = ()

    @property
    def center(self) -> complex:
        return -1.0 / self.z0

    @property
    def radius(self) -> float:
        return 1.0 / (2.0 * abs(self.z0))

    @property
    def lambda_predicted(self) -> complex:
        return -1j * self.k * (self.v1 + self.epsilon * self.c_tilde_root)

    def contains_c(self, c: complex) -> bool:
        return abs((c - self.v1) / self.epsilon - self.center) < self.radius

    def plemelj_error(self) -> float:
        return abs(self.z0.imag - self.gamma1_term) / self.gamma1_term


def predict_ctilde(
    profile: VortexProfile,
    neutral: NeutralMode,
    config: EigenProblemConfig,
    ladder_levels: int = 5,
    boundary_points: int = 128,
    sign: float = DETUNING_SIGN,
) -> DispersionReport:
    """Solve ``F(c~) = -eps(1 + c~ z0) - eps c~ (sign Gamma1 - z0) - sign Gamma2 = 0``.

    ``z0 = sign * lim Gamma1(v(1) + eps c~)`` comes from Richardson
    extrapolation over ``eps, eps/2, ...``; the root is found by secant
    iteration from ``-1/z0`` and certified on the ball ``|c~ + 1/z0| = 1/(2|z0|)``.
    """
    eps = config.epsilon
    k = abs(config.k)
    v1 = profile.v1
    qgrid = _layer_grid(profile)
    dgrid = direct_grid(profile, config)
    # Plemelj limit
    probe_ct = 1j
    epss = eps / 2.0 ** np.arange(ladder_levels)
    vals = np.array([Gamma1(profile, neutral, v1 + e * probe_ct, qgrid) for e in epss])
    table = [vals]
    for j in range(1, ladder_levels):
        prev = table[-1]
        table.append((2**j * prev[1:] - prev[:-1]) / (2**j - 1))
    z0 = complex(sign * table[-1][0])
    vp = profile.v_prime_at_1
    gamma1 = profile.params.gamma1 if profile.params is not None else float(profile.g_second(np.array([profile.r1]))[0])
    phi1 = float(neutral(np.array([profile.r1]))[0])
    gamma1_term = np.pi * gamma1 * phi1**2 / vp**2
    if z0.imag <= 0:
        raise EigenSolveError(f"Im z0 = {z0.imag:.3g} <= 0: sign convention or vortex is inconsistent")
    beta = config.beta_value

    def g_part(ct):
        c = v1 + eps * ct
        G1 = Gamma1(profile, neutral, c, qgrid)
        G2 = Gamma2(profile, neutral, config.alpha, beta, k, c, dgrid)
        return -eps * ct * (sign * G1 - z0) - sign * G2, G2

    def F(ct):
        return -eps * (1 + ct * z0) + g_part(ct)[0]

    history = []

    def F_logged(ct):
        val = F(ct)
        history.append((complex(ct), complex(val)))
        return val

    root = complex(newton(F_logged, -1.0 / z0, tol=1e-13, maxiter=50))
    G2 = g_part(root)[1]
    center, radius = -1.0 / z0, 1.0 / (2 * abs(z0))
    theta = np.linspace(0, 2 * np.pi, boundary_points, endpoint=False)
    margin = np.inf
    for th in theta:
        ct = center + radius * np.exp(1j * th)
        f = -eps * (1 + ct * z0)
        margin = min(margin, abs(f) - abs(g_part(ct)[0]))
    return DispersionReport(
        z0=z0, kappa=z0.real, gamma1_term=float(gamma1_term), c_tilde_root=root, Gamma2=G2,
        rouche_margin=float(margin), epsilon=eps, v1=v1, k=k,
        ladder=tuple((float(e), complex(sign * v)) for e, v in zip(epss, vals)), newton_history=tuple(history),
    )


# ----------------------------------------------------------------------------
# perturbative inner/outer construction
# ----------------------------------------------------------------------------


def _insert_points(breaks: np.ndarray, points) -> np.ndarray:
    """Add ``points`` to ``breaks``, moving a nearby break instead of creating a sliver."""
    b = np.asarray(breaks, dtype=float).copy()
    for p in points:
        i = int(np.searchsorted(b, p))
        if i < len(b) and b[i] == p:
            continue
        h = b[i] - b[i - 1]
        if p - b[i - 1] < 0.3 * h and i - 1 > 0:
            b[i - 1] = p
        elif b[i] - p < 0.3 * h and i < len(b) - 1:
            b[i] = p
        else:
            b = np.insert(b, i, p)
    return b


def _inner_grid(profile: VortexProfile, M: float, R: float, config: EigenProblemConfig) -> RadialGrid:
    r0 = profile.support_radius
    required = [b for b in profile.g_pp.breaks if 0 < b <= r0]
    breaks = adapted_breaks(0.0, M, required, focus=[0.0, profile.r1], finest=config.finest, max_size=config.max_size)
    return composite_grid(_insert_points(breaks, [R, 2 * R, M / 2]), config.degree, "inner")


def _outer_grid(R: float, M: float, R_out: float, degree: int, ratio: float = 1.25) -> RadialGrid:
    pts = [R]
    while pts[-1] < R_out:
        pts.append(min(R_out, pts[-1] * ratio))
    return composite_grid(_insert_points(np.array(pts), [2 * R, M / 2, M]), degree, "outer")


def _transfer(src: RadialGrid, dst: RadialGrid, support: tuple[float, float]) -> np.ndarray:
    """Interpolation matrix from ``src`` nodes to ``dst`` nodes inside ``support``."""
    x = dst.nodes
    sel = (x >= support[0]) & (x <= support[1])
    T = np.zeros((dst.n, src.n))
    eye = np.eye(src.n)
    for j in range(src.n):
        T[sel, j] = src.interpolate(eye[:, j], x[sel])
    return T


def _commutator_matrix(grid: RadialGrid, chi: Cutoff, k: int, ab: float, lam: complex) -> np.ndarray:
    """Nodal matrix of ``[chi, (S_beta - lambda) L_k]`` where ``v = 0``.

    ``= -(r chi'/(alpha beta)) L_k phi - (S_beta - lambda)(chi'' phi + 2 chi' phi')``.
    """
    r = grid.nodes
    D = grid.D
    D2 = D @ D
    n = grid.n
    c1, c2 = chi(r, 1), chi(r, 2)
    safe = np.where(r > 0, r, 1.0)
    Lk = D2 - np.diag((k * k - 0.25) / safe**2)
    H = np.diag(c2) + 2 * np.diag(c1) @ D
    S_minus = (-lam + 0.5 / ab) * np.eye(n) + np.diag(r) @ D / ab
    return -np.diag(r * c1) @ Lk / ab - S_minus @ H


@dataclass(eq=False)
class PerturbativeBundle:
    """Matrices of the inner/outer system at a given ``c~``."""

    c_tilde: complex
    lam: complex
    inner: RadialGrid = field(repr=False)
    outer: RadialGrid = field(repr=False)
    phi0: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    R_eps: np.ndarray = field(repr=False)
    R_beta: np.ndarray = field(repr=False)
    M11: np.ndarray = field(repr=False)
    M12: np.ndarray = field(repr=False)
    M21: np.ndarray = field(repr=False)
    Lk0_inv: np.ndarray = field(repr=False)
    I_minus_K_inv_Linv: np.ndarray = field(repr=False)
    chi1: Cutoff = None
    chi2: Cutoff = None
    M: float = 0.0
    R: float = 0.0
    smallest_singular_value: float = 0.0

    def block(self) -> np.ndarray:
        n1, n2 = self.inner.n, self.outer.n
        B = np.zeros((n1 + n2, n1 + n2), dtype=complex)
        B[:n1, :n1] = self.M11
        B[:n1, n1:] = self.M12
        B[n1:, :n1] = self.M21
        return B

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(sla.eigvals(self.block()))))


def assemble_perturbative_operators(
    profile: VortexProfile,
    config: EigenProblemConfig,
    c_tilde: complex,
    neutral: NeutralMode | None = None,
    sign: float = DETUNING_SIGN,
    min_singular: float = 1e-8,
) -> PerturbativeBundle:
    """Assemble ``K``, ``R_eps``, ``R_beta`` and the blocks ``M11, M12, M21``.

    ``P f = <f, phi0> phi0 / |phi0|²`` is the linear rank-one projection.
    """
    r0 = profile.support_radius
    M, R, R_out = config.radii(r0)
    k = abs(config.k)
    eps = config.epsilon
    ab = config.ab
    inner = _inner_grid(profile, M, R, config)
    if neutral is None or neutral.grid is not inner:
        neutral = solve_neutral_mode(profile, M, grid=inner, min_k0_squared=None)
    outer = _outer_grid(R, M, R_out, config.degree)
    r = inner.nodes
    w = inner.weights
    phi0 = neutral.phi0
    n = inner.n
    I = inner.interior
    c = profile.v1 + eps * c_tilde
    lam = -1j * k * c

    op0 = mode_operator(k, inner, k_squared=neutral.k0_squared)
    Linv = Lk_inverse_matrix(op0)
    A = np.zeros(n)
    A[I] = eval_A(profile, r[I])
    P = np.outer(phi0, phi0 * w) / np.dot(w, phi0**2)
    K = Linv @ (np.diag(A) + P)
    ImK = np.eye(n) - K
    sv = sla.svdvals(ImK[np.ix_(I, I)])
    smin = float(sv[-1])
    if smin < min_singular:
        raise EigenSolveError(f"I - K is nearly singular (smallest singular value {smin:.2e})")
    ImK_inv = np.zeros((n, n))
    ImK_inv[np.ix_(I, I)] = sla.inv(ImK[np.ix_(I, I)])

    mult = np.zeros(n, dtype=complex)
    # k² - k0² equals sign*eps only when the tuning used this same M
    detuning = k * k - neutral.k0_squared
    mult[I] = eps * c_tilde * A[I] / (profile.v(r[I]) - c) + detuning / r[I] ** 2
    R_eps = Linv @ np.diag(mult)

    # T_beta acts on data supported in [0, r0]
    n_sub = int(np.searchsorted(inner.breaks, r0 + 1e-12))
    sub = composite_grid(inner.breaks[: n_sub], inner.degrees[: n_sub - 1])
    ns = sub.n
    params = SemigroupParams(config.alpha, config.beta_value, k, profile)
    R_beta = np.zeros((n, n), dtype=complex)
    if np.isfinite(config.beta_value):
        Tsub = collocation_T_beta(params, sub, lam)
        coup = 1j * k * _coupling(profile, sub.nodes)
        R_beta[:, :ns] = Linv[:, :ns] @ (Tsub * coup[None, :])
    M11 = ImK_inv @ (R_eps + R_beta)

    chi1 = Cutoff(M / 2, M, rising=False)
    chi2 = Cutoff(R, 2 * R, rising=True)
    # M21: inner -> outer through C1 on [M/2, M]
    C1_inner = _commutator_matrix(inner, chi1, k, ab, lam)
    to_outer = _transfer(inner, outer, (M / 2, M))
    Res_out = collocation_resolvent(params, outer, lam)
    op_out = mode_operator(k, outer)
    Linv_out = Lk_inverse_matrix(op_out)
    M21 = Linv_out @ Res_out @ to_outer @ C1_inner
    # M12: outer -> inner through C2 on [R, 2R]
    C2_outer = _commutator_matrix(outer, chi2, k, ab, lam)
    to_inner = _transfer(outer, inner, (R, 2 * R))
    Res_in = collocation_resolvent(params, inner, lam)
    M12 = ImK_inv @ Linv @ Res_in @ to_inner @ C2_outer
    return PerturbativeBundle(
        c_tilde=complex(c_tilde), lam=lam, inner=inner, outer=outer, phi0=phi0, K=K, P=P,
        R_eps=R_eps, R_beta=R_beta, M11=M11, M12=M12, M21=M21, Lk0_inv=Linv,
        I_minus_K_inv_Linv=ImK_inv @ Linv, chi1=chi1, chi2=chi2, M=M, R=R, smallest_singular_value=smin,
    )


def _induced_norm(A: np.ndarray, G_in: np.ndarray, G_out: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    """``sup |A f|_out / |f|_in`` for Hilbert norms with Gram matrices on the given index sets."""
    Li = sla.cholesky(G_in[np.ix_(cols, cols)], lower=True)
    Lo = sla.cholesky(G_out[np.ix_(rows, rows)], lower=True)
    B = Lo.T @ A[np.ix_(rows, cols)]
    C = sla.solve_triangular(Li, B.T.conj(), lower=True).T.conj()
    return float(sla.svdvals(C)[0])


def measure_M_norms(bundle: PerturbativeBundle) -> dict:
    """Induced norms ``|M11|_{H1_r}``, ``|M12|_{Z_M -> H1_r}``, ``|M21|_{H1_r -> Z_M}``.

    Computed exactly for the discrete operators from the Gram matrices of the
    Hilbert versions of the norms.
    """
    gi, go = bundle.inner, bundle.outer
    Gi = norm_gram(gi, "H1_r")
    Go = norm_gram(go, "Z_M", M=bundle.M)
    Ii = np.flatnonzero(gi.interior)
    Io = np.flatnonzero(go.interior)
    return {
        "M11": _induced_norm(bundle.M11, Gi, Gi, Ii, Ii),
        "M12": _induced_norm(bundle.M12, Go, Gi, Ii, Io),
        "M21": _induced_norm(bundle.M21, Gi, Go, Io, Ii),
        "spectral_radius": bundle.spectral_radius(),
    }


@dataclass(frozen=True, eq=False)
class PerturbativeResult:
    lambda_beta: complex
    c_tilde: complex
    phi_corr: np.ndarray = field(repr=False)
    phi_out: np.ndarray = field(repr=False)
    bundle: PerturbativeBundle = field(repr=False)
    orthogonality_history: tuple = ()
    neumann_terms: int = 0
    lambda_predicted: complex = 0j

    def phi_at(self, r) -> np.ndarray:
        """Global ``chi1 (phi0 + phi_corr) + chi2 phi_out``."""
        b = self.bundle
        r = np.asarray(r, dtype=float)
        inner = b.inner.interpolate(b.phi0 + self.phi_corr, r, fill=0.0)
        outer = b.outer.interpolate(self.phi_out, r, fill=0.0)
        return b.chi1(r) * inner + b.chi2(r) * outer


def _neumann(bundle: PerturbativeBundle, tol: float = 1e-10, max_terms: int = 500):
    B = bundle.block()
    n1 = bundle.inner.n
    rhs = np.concatenate([bundle.M11 @ bundle.phi0, bundle.M21 @ bundle.phi0])
    x = rhs.copy()
    term = rhs.copy()
    for l in range(1, max_terms + 1):
        term = B @ term
        x += term
        if np.linalg.norm(term) < tol * max(np.linalg.norm(x), 1e-300):
            return x[:n1], x[n1:], l
        if not np.all(np.isfinite(term)) or np.linalg.norm(term) > 1e12:
            break
    raise EigenSolveError("Neumann series for (I - M)^-1 diverged")


def solve_perturbative(
    profile: VortexProfile,
    config: EigenProblemConfig,
    dispersion: DispersionReport,
    neutral: NeutralMode | None = None,
    tol: float = 1e-10,
    maxiter: int = 20,
) -> PerturbativeResult:
    """Neumann solve of the inner/outer system with ``c~`` refined until ``<phi_corr, phi0> = 0``.

    Starts from the dispersion root.  The secant iteration on
    ``c~ -> <phi_corr(c~), phi0>`` records the orthogonality defect per iterate.
    """
    history = []
    cache = {}

    def defect(ct):
        b = assemble_perturbative_operators(profile, config, ct, neutral)
        phi, phi_out, terms = _neumann(b)
        w = b.inner.weights
        d = complex(np.dot(w, phi * b.phi0) / np.dot(w, b.phi0**2))
        history.append((complex(ct), abs(d)))
        cache[complex(ct)] = (b, phi, phi_out, terms)
        return d

    ct = complex(newton(defect, dispersion.c_tilde_root, tol=tol, maxiter=maxiter))
    if ct not in cache:
        defect(ct)
    b, phi, phi_out, terms = cache[ct]
    k = abs(config.k)
    lam = -1j * k * (profile.v1 + config.epsilon * ct)
    return PerturbativeResult(lam, ct, phi, phi_out, b, tuple(history), terms, dispersion.lambda_predicted)


# ----------------------------------------------------------------------------
# estimator
# ----------------------------------------------------------------------------


class RayleighEigenSolver(BaseEstimator):
    """``fit(profile)`` runs ``solve_direct`` and sets ``lambda_beta_``, ``c_``, ``pair_``."""

    def __init__(self, alpha=0.4, beta=None, k=2, epsilon=1e-2, degree=16, finest=1e-4, support_factor=1.0):
        self.alpha = alpha
        self.beta = beta
        self.k = k
        self.epsilon = epsilon
        self.degree = degree
        self.finest = finest
        self.support_factor = support_factor

    def _config(self) -> EigenProblemConfig:
        return EigenProblemConfig(
            alpha=self.alpha, beta=self.beta, k=self.k, epsilon=self.epsilon,
            degree=self.degree, finest=self.finest, support_factor=self.support_factor,
        )

    def fit(self, profile: VortexProfile, y=None):
        if not isinstance(profile, VortexProfile):
            raise TypeError("fit expects a VortexProfile")
        pair = solve_direct(profile, self._config())
        self.pair_ = pair
        self.lambda_beta_ = pair.lambda_beta
        self.c_ = pair.c
        self.residual_ = pair.residual
        return self

    def c_tilde(self) -> complex:
        check_is_fitted(self, "pair_")
        return self.pair_.c_tilde
