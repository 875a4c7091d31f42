"""Neutral mode of ``-phi'' + A phi = mu phi / r²`` and tuning of vortex families.

The lowest eigenvalue gives ``k0² = 1/4 - mu_min``.  Two independent solvers
are provided: a Lobatto spectral-element Galerkin solve (production) and a
second-order finite-difference solve with Richardson extrapolation (oracle).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .grid_ops import RadialGrid, adapted_breaks, composite_grid, norm
from .vortex import VortexError, VortexParams, VortexProfile, build_vortex, eval_A

__all__ = [
    "NeutralMode",
    "NeutralModeError",
    "TuningError",
    "neutral_grid",
    "solve_neutral_mode",
    "neutral_k0_squared",
    "fd_k0_squared",
    "tuning_target",
    "tune_vortex",
    "scan_family",
    "NeutralModeSolver",
    "DETUNING_SIGN",
]

# (k² - k0²)/eps.  With v'(1) < 0 the Plemelj limit of the projected
# resolvent has negative imaginary part, so instability needs k² below k0².
DETUNING_SIGN = -1.0


class NeutralModeError(ValueError):
    def __init__(self, msg, mu_min=None):
        super().__init__(msg)
        self.mu_min = mu_min


class TuningError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NeutralMode:
    """Ground state of the neutral problem on ``[0, M]``.

    ``phi0`` holds nodal values on ``grid`` with ``|phi0/r|_{L2} = 1`` and
    ``phi0(1) > 0``.  ``gap`` is the distance to the next eigenvalue ``mu``.
    """

    k0_squared: float
    phi0: np.ndarray = field(repr=False)
    grid: RadialGrid = field(repr=False)
    M: float
    gap: float
    A: np.ndarray = field(repr=False)

    @property
    def mu_min(self) -> float:
        return 0.25 - self.k0_squared

    def __call__(self, r):
        return self.grid.interpolate(self.phi0, r)

    def rayleigh_quotient(self, f) -> float:
        """``(|f'|² + int A f²) / |f/r|²`` for nodal values ``f`` vanishing at the ends."""
        g = self.grid
        f = np.asarray(f, dtype=float)
        num = f @ g.stiffness @ f + np.dot(g.weights, self.A * f * f)
        r = g.nodes
        inner = r > 0
        den = np.dot(g.weights[inner], f[inner] ** 2 / r[inner] ** 2)
        return float(num / den)

    def weighted_bounds(self) -> dict:
        g = self.grid
        r = g.nodes
        dphi = g.D @ self.phi0
        return {
            "r_dphi_plus_phi": norm(g, r * dphi, "L2") + norm(g, self.phi0, "L2"),
            "r2_phi": norm(g, r * r * self.phi0, "L2"),
        }

    def n_interior_zeros(self) -> int:
        core = self.phi0[1:-1]
        scale = np.max(np.abs(core))
        sig = core[np.abs(core) > 1e-10 * scale]
        return int(np.count_nonzero(np.diff(np.sign(sig))))


def neutral_grid(profile: VortexProfile, M: float, degree: int = 16, finest: float = 1e-3, max_size: float = 0.1) -> RadialGrid:
    """Elements aligned with the profile joints, graded toward ``r = 0``."""
    required = [b for b in profile.g_pp.breaks if 0 < b < M]
    return composite_grid(adapted_breaks(0.0, M, required, focus=[0.0], finest=finest, max_size=max_size), degree, "inner")


def _assemble(profile: VortexProfile, grid: RadialGrid, shift: float = 0.0):
    I = grid.interior
    r = grid.nodes
    A = eval_A(profile, r) + shift / np.where(r > 0, r, 1.0) ** 2 * (r > 0)
    w = grid.weights
    lhs = grid.stiffness[np.ix_(I, I)] + np.diag(w[I] * A[I])
    rhs = np.diag(w[I] / r[I] ** 2)
    return 0.5 * (lhs + lhs.T), rhs, A


def _inverse_iteration(lhs, rhs, mu, x, steps: int = 3):
    """Polish the lowest eigenpair; dense ``eigh`` loses accuracy on strongly graded grids."""
    shift = mu - 1e-6 * max(1.0, abs(mu))
    lu = sla.lu_factor(lhs - shift * rhs)
    for _ in range(steps):
        x = sla.lu_solve(lu, rhs @ x)
        x = x / np.sqrt(x @ rhs @ x)
    mu = float(x @ lhs @ x)
    return mu, x


def solve_neutral_mode(
    profile: VortexProfile,
    M: float | None = None,
    degree: int = 16,
    grid: RadialGrid | None = None,
    shift: float = 0.0,
    min_k0_squared: float | None = 4.0,
) -> NeutralMode:
    """Lowest eigenpair of ``(-d²/dr² + A) phi = mu phi / r²`` with Dirichlet ends.

    ``shift`` adds ``shift / r²`` to ``A`` (the eigenvalue moves by ``shift``).
    Raises when ``k0² < min_k0_squared`` (pass ``None`` to skip).
    """
    if M is None:
        M = 20.0 * profile.support_radius
    if grid is None:
        grid = neutral_grid(profile, M, degree)
    lhs, rhs, A = _assemble(profile, grid, shift)
    vals, vecs = sla.eigh(lhs, rhs, subset_by_index=[0, 1])
    mu, x = _inverse_iteration(lhs, rhs, float(vals[0]), vecs[:, 0])
    vecs[:, 0] = x
    k0sq = 0.25 - mu
    if min_k0_squared is not None and k0sq < min_k0_squared:
        raise NeutralModeError(
            f"k0^2 = {k0sq:.6g} < {min_k0_squared}: vortex not unstable enough (mu_min = {mu:.6g})", mu
        )
    phi = np.zeros(grid.n)
    phi[grid.interior] = vecs[:, 0]
    # eigh normalizes phi^T rhs phi = 1, i.e. |phi/r| = 1 in the discrete norm
    if grid.interpolate(phi, np.array([profile.r1]))[0] < 0:
        phi = -phi
    return NeutralMode(k0sq, phi, grid, float(M), float(vals[1] - vals[0]), A)


def neutral_k0_squared(profile: VortexProfile, M: float | None = None, degree: int = 16) -> float:
    return solve_neutral_mode(profile, M, degree, min_k0_squared=None).k0_squared


# ----------------------------------------------------------------------------
# finite-difference oracle
# ----------------------------------------------------------------------------


def _fd_nodes(profile: VortexProfile, M: float, h: float) -> np.ndarray:
    # piecewise uniform: every profile joint is a node
    joints = [0.0] + [b for b in profile.g_pp.breaks if 0 < b < M] + [M]
    pieces = [np.linspace(a, b, max(2, int(np.ceil((b - a) / h))) + 1)[:-1] for a, b in zip(joints[:-1], joints[1:])]
    return np.concatenate(pieces + [[M]])


def fd_mu_min(profile: VortexProfile, M: float, h: float, guess: float) -> float:
    """Second-order symmetric FD estimate of ``mu_min`` on spacing about ``h``."""
    r = _fd_nodes(profile, M, h)
    dr = np.diff(r)
    ri = r[1:-1]
    hl, hr = dr[:-1], dr[1:]
    m = 0.5 * (hl + hr)
    # one-sided A values so jumps at joints are averaged correctly
    A_left = eval_A(profile, ri - 1e-13)
    A_right = eval_A(profile, ri + 1e-13)
    a_lump = 0.5 * (hl * A_left + hr * A_right)
    main = 1.0 / hl + 1.0 / hr + a_lump
    off = -1.0 / dr[1:-1]
    K = sp.diags([off, main, off], [-1, 0, 1], format="csc")
    B = sp.diags(m / ri**2, format="csc")
    val = spla.eigsh(K, k=1, M=B, sigma=guess, which="LM", return_eigenvectors=False)
    return float(val[0])


def fd_k0_squared(profile: VortexProfile, M: float, h: float = 2e-3, levels: int = 3, guess: float | None = None) -> dict:
    """FD oracle for ``k0²``: spacings ``h, h/2, ...`` plus Richardson extrapolation."""
    if guess is None:
        guess = fd_mu_min(profile, M, 4 * h, -4.0) - 0.05
    mus = []
    for j in range(levels):
        mus.append(fd_mu_min(profile, M, h / 2**j, guess - 1e-3))
        guess = mus[-1]
    extrap = mus[-1] + (mus[-1] - mus[-2]) / 3.0
    return {"k0_squared": 0.25 - extrap, "levels": [0.25 - m for m in mus], "h": h}


# ----------------------------------------------------------------------------
# tuning
# ----------------------------------------------------------------------------


def tuning_target(k: int, epsilon: float, sign: float = DETUNING_SIGN) -> float:
    """``k0²`` making ``(k² - k0²)/epsilon = sign``."""
    return float(k * k - sign * epsilon)


def scan_family(family: Callable[[float], VortexParams], ts: Sequence[float], M: float | None = None, degree: int = 16):
    """Tabulate ``k0²`` along a one-parameter family; invalid members give NaN."""
    out = []
    for t in ts:
        try:
            out.append(neutral_k0_squared(build_vortex(family(float(t))), M, degree))
        except VortexError:
            out.append(np.nan)
    return np.asarray(out)


def tune_vortex(
    family: Callable[[float], VortexParams],
    target_k: int = 2,
    epsilon: float = 1e-2,
    bracket: tuple[float, float] = (0.5, 2.0),
    n_scan: int = 9,
    M: float | None = None,
    degree: int = 16,
    sign: float = DETUNING_SIGN,
    tol: float = 1e-8,
):
    """Find ``t`` with ``k0²(family(t)) = target_k² - sign*epsilon``.

    Returns ``(params, mode, t)``.  The bracket is scanned for a sign change
    and refined with Brent's method.
    """
    if target_k < 2:
        raise TuningError("target_k must be at least 2")
    target = tuning_target(target_k, epsilon, sign)
    ts = np.linspace(bracket[0], bracket[1], n_scan)
    fs = scan_family(family, ts, M, degree) - target
    root_t = None
    for i in range(n_scan - 1):
        if np.isfinite(fs[i]) and np.isfinite(fs[i + 1]) and fs[i] * fs[i + 1] <= 0:
            f = lambda t: neutral_k0_squared(build_vortex(family(t)), M, degree) - target
            root_t = brentq(f, ts[i], ts[i + 1], xtol=1e-14, rtol=1e-15)
            break
    if root_t is None:
        raise TuningError(f"no sign change of k0^2 - {target:g} on [{bracket[0]}, {bracket[1]}]")
    params = family(root_t)
    mode = solve_neutral_mode(build_vortex(params), M, degree, min_k0_squared=None)
    if abs(mode.k0_squared - target) > tol:
        raise TuningError(f"tuning stalled at |k0^2 - target| = {abs(mode.k0_squared - target):.3g}")
    return params, mode, float(root_t)


class NeutralModeSolver(BaseEstimator):
    """Estimator wrapper: ``fit(profile)`` sets ``k0_squared_``, ``phi0_``, ``grid_``, ``mode_``."""

    def __init__(self, M=None, degree=16, min_k0_squared=4.0):
        self.M = M
        self.degree = degree
        self.min_k0_squared = min_k0_squared

    def fit(self, profile: VortexProfile, y=None):
        if not isinstance(profile, VortexProfile):
            raise TypeError("fit expects a VortexProfile")
        mode = solve_neutral_mode(profile, self.M, self.degree, min_k0_squared=self.min_k0_squared)
        self.mode_ = mode
        self.k0_squared_ = mode.k0_squared
        self.phi0_ = mode.phi0
        self.grid_ = mode.grid
        self.gap_ = mode.gap
        return self

    def rayleigh_quotient(self, f) -> float:
        check_is_fitted(self, "mode_")
        return self.mode_.rayleigh_quotient(f)
