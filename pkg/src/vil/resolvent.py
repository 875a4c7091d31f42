"""Transport-dilation semigroup ``exp(tau S_beta)``, its resolvent and ``T_beta``.

``S_beta = -i k v(r) + (r d/dr + 1/2)/(alpha beta)``.  The flow is explicit:
with ``rho = exp(tau/(alpha beta)) r`` and ``Psi(r) = int^r v(s)/s ds``,

    f_beta(tau, r) = exp(tau/(2 alpha beta)) exp(-i k alpha beta (Psi(rho) - Psi(r))) w(rho),

and ``Psi(rho) - Psi(r) = v(0) tau/(alpha beta) + Phi(rho) - Phi(r)`` where
``Phi`` is the profile's exact phase integral.  The resolvent is the Laplace
transform ``-(int_0^inf exp(-z tau) f_beta d tau)`` and ``T_beta`` integrates
``f_beta - f_inf``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.legendre import leggauss

from .grid_ops import RadialGrid, composite_grid, norm
from .vortex import VortexProfile

__all__ = [
    "SemigroupParams",
    "ResolventProbe",
    "ResolventError",
    "make_probe",
    "grid_function",
    "semigroup_apply",
    "resolvent_apply",
    "T_beta_apply",
    "multiplier_apply",
    "collocation_resolvent",
    "collocation_T_beta",
    "random_smooth_functions",
    "estimate_operator_norm",
    "S_beta_apply",
    "isometry_defect",
]


class ResolventError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SemigroupParams:
    """``(alpha, beta, k, profile)``; ``beta = inf`` selects the pure transport limit.

    ``direction = -1`` realizes ``-S_beta`` (the adjoint generator), which
    dilates inward instead of outward.
    """

    alpha: float
    beta: float
    k: int
    profile: VortexProfile = field(repr=False)
    direction: int = 1

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ResolventError(f"alpha must lie in (0, 2), got {self.alpha}")
        if not self.beta > 0:
            raise ResolventError(f"beta must be positive, got {self.beta}")
        if self.direction not in (1, -1):
            raise ResolventError("direction must be +1 or -1")

    @property
    def is_limit(self) -> bool:
        return not np.isfinite(self.beta)

    @property
    def ab(self) -> float:
        """Signed ``alpha beta`` (negative for the adjoint generator)."""
        return self.direction * self.alpha * self.beta

    @property
    def k_signed(self) -> int:
        return self.direction * self.k

    def adjoint(self) -> "SemigroupParams":
        return SemigroupParams(self.alpha, self.beta, self.k, self.profile, -self.direction)

    def limit(self) -> "SemigroupParams":
        return SemigroupParams(self.alpha, np.inf, self.k, self.profile, self.direction)


def grid_function(grid: RadialGrid, values) -> Callable:
    """Callable interpolant of nodal values, zero outside the grid."""
    values = np.asarray(values)

    def f(r):
        return grid.interpolate(values, r, fill=0.0)

    return f


def _eval(w, r) -> np.ndarray:
    return np.asarray(w(r), dtype=complex)


def semigroup_apply(params: SemigroupParams, tau: float, w: Callable, r) -> np.ndarray:
    """``exp(tau S_beta) w`` at radii ``r`` (``tau`` broadcasts against ``r``).

    ``w`` is a callable that vanishes past its support.
    """
    r = np.asarray(r, dtype=float)
    prof = params.profile
    ks = params.k_signed
    if params.is_limit:
        r, tau = np.broadcast_arrays(r, tau)
        return np.exp(-1j * ks * tau * prof.v(r)) * _eval(w, r)
    ab = params.ab
    rho = r * np.exp(tau / ab)
    dphase = prof.v0 * tau / ab + prof.phase_integral(rho) - prof.phase_integral(r)
    return np.exp(tau / (2 * ab) - 1j * ks * ab * dphase) * _eval(w, rho)


def isometry_defect(params: SemigroupParams, tau: float, w: Callable, r_cut: float, degree: int = 32) -> float:
    """``| |exp(tau S_beta) w|_L2 - |w|_L2 | / |w|_L2`` for ``w`` supported in ``[0, r_cut]``.

    Each norm is integrated on its own support with the profile joints (mapped
    by the flow) as element breaks, so both quadratures see smooth integrands.
    """
    joints = [b for b in params.profile.g_pp.breaks if 0 < b < r_cut]
    base = composite_grid([0.0] + joints + [r_cut], degree)
    n_w = np.sqrt(np.dot(base.weights, np.abs(_eval(w, base.nodes)) ** 2))
    shrink = 1.0 if params.is_limit else np.exp(-tau / params.ab)
    moved = composite_grid([0.0] + [b * shrink for b in joints] + [r_cut * shrink], degree)
    f = semigroup_apply(params, tau, w, moved.nodes)
    n_f = np.sqrt(np.dot(moved.weights, np.abs(f) ** 2))
    return float(abs(n_f - n_w) / n_w)


# ----------------------------------------------------------------------------
# Laplace quadrature
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ResolventProbe:
    """Laplace quadrature for ``(S_beta - z)^-1`` with ``Re z > 0``."""

    z: complex
    params: SemigroupParams
    T_horizon: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    tail_bound: float = 0.0


def make_probe(params: SemigroupParams, z: complex, tol: float = 1e-12, points: int = 16, horizon: float | None = None) -> ResolventProbe:
    """Composite Gauss-Legendre rule on ``[0, T]`` with ``T = max(1, 40/Re z)``.

    Panels are short enough to resolve ``exp(-(z + i k v) tau)``.  The tail
    ``int_T^inf |exp(-z tau)| exp(tau/(2 alpha beta)) d tau`` is bounded analytically.
    """
    z = complex(z)
    if z.real <= 0:
        raise ResolventError("the Laplace representation needs Re z > 0")
    growth = 0.0 if params.is_limit else max(0.0, 1.0 / (2 * params.ab))
    decay = z.real - growth
    if decay <= 0:
        raise ResolventError(f"beta too small for Re z = {z.real:g}: need alpha*beta > 1/(2 Re z)")
    T = max(1.0, 40.0 / z.real) if horizon is None else float(horizon)
    tail = np.exp(-decay * T) / decay
    if tail > tol:
        raise ResolventError(f"horizon {T:g} leaves tail {tail:.2e} above tolerance {tol:.1e}")
    vmax = float(np.max(np.abs(params.profile.v(np.linspace(0.0, params.profile.support_radius, 257)))))
    omega = abs(z.imag) + abs(params.k) * vmax + 1.0
    h = min(1.0 / z.real, 1.0, 4.0 / omega)
    n_panels = int(np.ceil(T / h))
    x, wq = leggauss(points)
    edges = np.linspace(0.0, T, n_panels + 1)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1)).ravel()
    weights = (half[:, None] * wq[None, :]).ravel()
    return ResolventProbe(z, params, T, nodes, weights, float(tail))


def _laplace(probe: ResolventProbe, w: Callable, r, difference: bool, chunk: int = 64) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    p = probe.params
    lim = p.limit()
    out = np.zeros(r.shape, dtype=complex)
    for s in range(0, len(probe.nodes), chunk):
        taus = probe.nodes[s : s + chunk, None]
        f = semigroup_apply(p, taus, w, r[None, :])
        if difference:
            f = f - semigroup_apply(lim, taus, w, r[None, :])
        out += (probe.weights[s : s + chunk] * np.exp(-probe.z * probe.nodes[s : s + chunk])) @ f
    return out


def resolvent_apply(probe: ResolventProbe, w: Callable, r) -> np.ndarray:
    """``(S_beta - z)^-1 w = -int_0^T exp(-z tau) exp(tau S_beta) w d tau`` at ``r``."""
    return -_laplace(probe, w, r, difference=False)


def T_beta_apply(probe: ResolventProbe, w: Callable, r) -> np.ndarray:
    """``T_beta w = int_0^T exp(-z tau) (f_beta - f_inf) d tau``; zero when ``beta = inf``."""
    if probe.params.is_limit:
        return np.zeros(np.shape(r), dtype=complex)
    return _laplace(probe, w, r, difference=True)


def multiplier_apply(params: SemigroupParams, z: complex, w: Callable, r) -> np.ndarray:
    """``-(S_inf - z)^-1 w = w / (i k v + z)`` pointwise."""
    r = np.asarray(r, dtype=float)
    return _eval(w, r) / (1j * params.k_signed * params.profile.v(r) + z)


# ----------------------------------------------------------------------------
# collocation realizations (large beta)
# ----------------------------------------------------------------------------


def S_beta_apply(params: SemigroupParams, grid: RadialGrid, u) -> np.ndarray:
    """``S_beta u`` with the grid's derivative (upwind toward the inflow end)."""
    u = np.asarray(u)
    r = grid.nodes
    out = -1j * params.k_signed * params.profile.v(r) * u
    if not params.is_limit:
        out = out + (r * grid.apply_D(u, "right" if params.direction > 0 else "left") + 0.5 * u) / params.ab
    return out


def collocation_resolvent(params: SemigroupParams, grid: RadialGrid, z: complex) -> np.ndarray:
    """Dense nodal matrix of ``(S_beta - z)^-1`` for data supported on the grid.

    The outward flow enters at ``r_max`` where the solution vanishes; ``r = 0``
    is a characteristic point and needs no condition.
    """
    if params.direction != 1:
        raise ResolventError("collocation resolvent is implemented for +S_beta only")
    r = grid.nodes
    n = grid.n
    mat = np.diag(-1j * params.k * params.profile.v(r) - z).astype(complex)
    if not params.is_limit:
        D = grid.diff_matrix("right")
        mat += (r[:, None] * D + 0.5 * np.eye(n)) / params.ab
    out = np.zeros((n, n), dtype=complex)
    keep = np.arange(n - 1)
    out[np.ix_(keep, keep)] = sla.inv(mat[np.ix_(keep, keep)])
    return out


def collocation_T_beta(params: SemigroupParams, grid: RadialGrid, z: complex) -> np.ndarray:
    """``T_beta = -(S_beta - z)^-1 - (i k v + z)^-1`` as a nodal matrix."""
    R = collocation_resolvent(params, grid, z)
    mult = 1.0 / (1j * params.k * params.profile.v(grid.nodes) + z)
    T = -R
    T[np.diag_indices(grid.n)] -= mult
    T[-1, :] = 0.0
    return T


# ----------------------------------------------------------------------------
# operator norms
# ----------------------------------------------------------------------------


def random_smooth_functions(rng: np.random.Generator, r_cut: float, count: int, modes: int = 6) -> list[Callable]:
    """Random combinations of ``sin(j pi r / r_cut)`` tapered to vanish smoothly at ``r_cut``."""
    funcs = []
    for _ in range(count):
        a = rng.normal(size=modes) + 1j * rng.normal(size=modes)
        a /= np.arange(1, modes + 1)

        def f(r, a=a):
            r = np.asarray(r, dtype=float)
            x = np.clip(r / r_cut, 0.0, 1.0)
            s = sum(aj * np.sin((j + 1) * np.pi * x) for j, aj in enumerate(a))
            return np.where(r < r_cut, s * (1 - x * x) ** 4, 0.0)

        funcs.append(f)
    return funcs


def estimate_operator_norm(
    probe: ResolventProbe,
    grid: RadialGrid,
    space: str = "L2",
    trials: int = 8,
    seed: int = 0,
    r_cut: float | None = None,
) -> float:
    """Largest ``|T_beta w|_X / |w|_X`` over seeded random smooth ``w``.

    This is a lower bound for the operator norm, enough to track decay in beta.
    """
    if trials < 8:
        raise ResolventError("use at least 8 trials")
    if probe.params.is_limit:
        return 0.0
    rng = np.random.default_rng(seed)
    r_cut = grid.domain[1] if r_cut is None else r_cut
    best = 0.0
    for w in random_smooth_functions(rng, r_cut, trials):
        wv = _eval(w, grid.nodes)
        tw = T_beta_apply(probe, w, grid.nodes)
        best = max(best, norm(grid, tw, space) / norm(grid, wv, space))
    return best
