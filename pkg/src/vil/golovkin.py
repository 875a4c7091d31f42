"""Two solutions from one force: the quadratic-system construction and its 2D Euler instance.

For ``t d/dt G = L(G) + B(G, G) + F`` with an eigenpair ``L_g0 eta = lambda eta``
of the linearization at ``g0``, the force
``F = -L(g0) - B(g0, g0) - B(Re(t^lambda eta), Re(t^lambda eta))`` makes both
``g0 + Re(t^lambda eta)`` and ``g0 - Re(t^lambda eta)`` exact solutions.

In self-similar variables ``xi = x / t^(1/alpha)`` the forced Euler equation reads

    t d/dt Omega - (1 + (1/alpha) xi . grad) Omega + U . grad Omega = F,

with physical fields ``omega = Omega / t`` and ``f = F / t²`` at ``(x / t^(1/alpha), t)``.
The background is ``beta g(r)`` and the perturbation a single angular mode
``W = Re(t^(beta lambda) r^(-1/2) e^(ik theta) eta(r))`` with stream function
``Re(t^(beta lambda) r^(-1/2) e^(ik theta) phi(r))``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .grid_ops import composite_grid
from .rayleigh_solver import EigenPair
from .vortex import VortexProfile

__all__ = [
    "GolovkinError",
    "QuadraticSystem",
    "GolovkinTrajectories",
    "golovkin_solutions",
    "shell_toy_system",
    "NonuniquenessBundle",
    "euler_bundle",
    "angular_lp_constant",
    "lp_scaling_study",
    "verify_powerlaw_example",
    "powerlaw_integrability",
]


class GolovkinError(ValueError):
    pass


# ----------------------------------------------------------------------------
# abstract construction
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadraticSystem:
    """``t dG/dt = L(G) + B(G, G) + F`` on real vectors, with an eigenpair at ``g0``."""

    apply_L: Callable = field(repr=False)
    apply_B: Callable = field(repr=False)
    g0: np.ndarray = field(repr=False)
    lam: complex
    eta: np.ndarray = field(repr=False)

    def linearized(self, h):
        """``L(h) + B(g0, h) + B(h, g0)``; complex ``h`` is applied to real and imaginary parts."""
        h = np.asarray(h)
        if np.iscomplexobj(h):
            return self.linearized(h.real) + 1j * self.linearized(h.imag)
        return self.apply_L(h) + self.apply_B(self.g0, h) + self.apply_B(h, self.g0)

    def eigen_residual(self) -> float:
        return float(np.linalg.norm(self.linearized(self.eta) - self.lam * self.eta) / np.linalg.norm(self.eta))

    def bilinearity_defect(self, seed: int = 0, trials: int = 4) -> float:
        """Largest relative violation of ``B(a x + y, z) = a B(x, z) + B(y, z)`` (and in the second slot)."""
        rng = np.random.default_rng(seed)
        n = self.g0.shape[0]
        worst = 0.0
        for _ in range(trials):
            x, y, z = rng.normal(size=(3, n))
            a = rng.normal()
            B = self.apply_B
            scale = np.linalg.norm(B(x, z)) + np.linalg.norm(B(y, z)) + np.linalg.norm(B(z, x)) + 1e-300
            d1 = np.linalg.norm(B(a * x + y, z) - a * B(x, z) - B(y, z))
            d2 = np.linalg.norm(B(z, a * x + y) - a * B(z, x) - B(z, y))
            worst = max(worst, (d1 + d2) / scale)
        return float(worst)


@dataclass(frozen=True, eq=False)
class GolovkinTrajectories:
    system: QuadraticSystem = field(repr=False)

    def perturbation(self, t):
        return np.real(t**self.system.lam * self.system.eta)

    def G_plus(self, t):
        return self.system.g0 + self.perturbation(t)

    def G_minus(self, t):
        return self.system.g0 - self.perturbation(t)

    def force(self, t):
        s = self.system
        p = self.perturbation(t)
        return -s.apply_L(s.g0) - s.apply_B(s.g0, s.g0) - s.apply_B(p, p)

    def residual(self, t, sign: int = 1):
        """``t dG/dt - L(G) - B(G, G) - F`` for ``G = g0 + sign Re(t^lambda eta)``."""
        s = self.system
        G = s.g0 + sign * self.perturbation(t)
        t_dt = sign * np.real(s.lam * t**s.lam * s.eta)
        return t_dt - s.apply_L(G) - s.apply_B(G, G) - self.force(t)


def golovkin_solutions(system: QuadraticSystem) -> GolovkinTrajectories:
    if system.lam.real <= 0:
        raise GolovkinError("Re lambda must be positive so both solutions start from g0")
    if not np.any(system.eta):
        raise GolovkinError("eta must be nontrivial")
    return GolovkinTrajectories(system)


def shell_toy_system(seed: int = 0, lam: complex = 0.5 + 1.0j, stable: float = -1.0):
    """Three-mode quadratic system whose linearization at a random ``g0`` has eigenvalues ``lam, conj(lam), stable``.

    ``B`` is a seeded random symmetric-in-structure tensor, ``L`` is chosen so
    that ``L + B(g0, .) + B(., g0)`` equals ``P J P^-1`` with ``J`` in real
    block form.  Returns ``(system, J_full)`` where ``J_full`` is that matrix.
    """
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(3, 3, 3))
    g0 = rng.normal(size=3)

    def apply_B(u, v):
        return np.einsum("ijk,j,k->i", C, u, v)

    lin_B = np.einsum("ijk,j->ik", C, g0) + np.einsum("ijk,k->ij", C, g0)
    J = np.array([[lam.real, lam.imag, 0.0], [-lam.imag, lam.real, 0.0], [0.0, 0.0, stable]])
    P = rng.normal(size=(3, 3)) + 3 * np.eye(3)
    full = P @ J @ np.linalg.inv(P)
    Lmat = full - lin_B

    def apply_L(u):
        return Lmat @ u

    # (1, i) spans the lam eigenspace of the real block [[a, b], [-b, a]]
    eta = P @ np.array([1.0, 1.0j, 0.0]) / np.sqrt(2)
    return QuadraticSystem(apply_L, apply_B, g0, complex(lam), eta), full


# ----------------------------------------------------------------------------
# Euler instance
# ----------------------------------------------------------------------------


def _r_dr(pair: EigenPair, values: np.ndarray) -> np.ndarray:
    """``r d/dr`` of nodal values on the pair's grid."""
    g = pair.grid
    if pair.coordinate == "log":
        return g.apply_D(values)
    r = g.nodes
    pos = r > 0
    if pair.planar:
        f = np.zeros_like(values)
        f[pos] = values[pos] / np.sqrt(r[pos])
        df = g.apply_D(f, "right")
        out = np.zeros_like(values)
        out[pos] = np.sqrt(r[pos]) * (0.5 * f[pos] + r[pos] * df[pos])
        return out
    return r * g.apply_D(values, "right")


@dataclass(frozen=True, eq=False)
class NonuniquenessBundle:
    """Self-similar states ``Omega = beta g +- W``, the shared force, and physical evaluators."""

    pair: EigenPair = field(repr=False)
    profile: VortexProfile = field(repr=False)
    eta: np.ndarray = field(repr=False)
    alpha: float
    beta: float
    k: int
    lambda_beta: complex
    lambda_physical: complex
    eta_consistency: float

    @property
    def growth(self) -> complex:
        """Exponent of ``t`` in ``W``: ``beta lambda``."""
        return self.beta * self.lambda_physical

    def time_factor(self, t: float) -> complex:
        return complex(np.exp(self.growth * np.log(t)))

    # ----- mode amplitudes on the pair's nodes (r > 0) ------------------
    def _modes(self):
        pair = self.pair
        mask = pair.r > 0
        r = pair.r[mask]
        eta = self.eta[mask]
        phi = pair.phi[mask]
        r_eta = _r_dr(pair, self.eta)[mask]
        r_phi = _r_dr(pair, pair.phi)[mask]
        s = r**-0.5
        # W amplitude a, r a_r, stream amplitude b, r b_r
        return mask, r, s * eta, s * (r_eta - 0.5 * eta), s * phi, s * (r_phi - 0.5 * phi)

    def self_similar_residual(self, t: float, theta: np.ndarray | None = None) -> dict:
        """Pointwise residuals of ``Omega+`` and ``Omega-`` with the same force.

        Both are normalized by the size of ``beta lambda_beta W``.  If
        ``|t^(beta lambda)|`` underflows, the modulus is set to 1; the relative
        residual is invariant under that rescaling up to roundoff.
        """
        if theta is None:
            theta = np.linspace(0.0, 2 * np.pi, 4 * self.k + 4, endpoint=False)
        prof = self.profile
        alpha, beta, k = self.alpha, self.beta, self.k
        T = self.time_factor(t)
        rescaled = abs(T) < 1e-200
        if rescaled:
            T = np.exp(1j * self.growth.imag * np.log(t))
        t_dt_T = self.growth * T
        mask, r, a, ra, b, rb = self._modes()
        e = np.exp(1j * k * theta)[None, :]
        Re = np.real
        col = lambda x: x[:, None]
        W = Re(T * col(a) * e)
        r_dW = Re(T * col(ra) * e)
        th_dW = Re(1j * k * T * col(a) * e)
        t_dW = Re(t_dt_T * col(a) * e)
        ur_W = -Re(1j * k * T * col(b) * e) / col(r)
        ut_W = Re(T * col(rb) * e) / col(r)
        gv = beta * prof.g(r)
        r_dgv = beta * r * prof.g_prime(r)
        ut_V = beta * r * prof.v(r)
        dil_V = col(gv + r_dgv / alpha)
        # the radial background advects itself trivially: u_r = 0 and d_theta = 0
        adv_WW = ur_W * r_dW / col(r) + ut_W * th_dW / col(r)
        F = -dil_V + adv_WW
        out = {"t": float(t), "rescaled": bool(rescaled)}
        w = self.pair.weights[mask] * r
        scale = np.sqrt(np.sum(w * np.abs(beta * self.lambda_beta * T * a) ** 2) * np.pi)
        for name, sgn in (("plus", 1), ("minus", -1)):
            dil = dil_V + sgn * (W + r_dW / alpha)
            ur = sgn * ur_W
            ut = col(ut_V) + sgn * ut_W
            dOm_r = col(r_dgv / r) + sgn * r_dW / col(r)
            dOm_th = sgn * th_dW
            adv = ur * dOm_r + ut * dOm_th / col(r)
            R = sgn * t_dW - dil + adv - F
            norm = np.sqrt(np.sum(w[:, None] * R**2) * 2 * np.pi / len(theta))
            out[name] = float(norm / scale)
            out[f"{name}_field"] = R
        out["sign_gap"] = float(np.max(np.abs(np.abs(out["plus_field"]) - np.abs(out["minus_field"]))) / scale)
        return out

    def total_vorticity(self, t: float, n_theta: int = 32) -> dict:
        """``int Omega+- d xi`` over the plane by radial quadrature and periodic trapezoid in theta."""
        prof = self.profile
        pair = self.pair
        r = pair.r
        theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
        T = self.time_factor(t)
        pos = r > 0
        amp = np.zeros(r.shape, dtype=complex)
        amp[pos] = r[pos] ** -0.5 * self.eta[pos]
        W = np.real(T * amp[:, None] * np.exp(1j * self.k * theta)[None, :])
        vort = self.beta * prof.g(r)
        wr = pair.weights * r
        base = float(np.sum(wr * vort)) * 2 * np.pi
        pert = float(np.sum(wr[:, None] * W)) * 2 * np.pi / n_theta
        size = float(np.sum(wr * np.abs(vort))) * 2 * np.pi
        return {"plus": base + pert, "minus": base - pert, "scale": size}

    # ----- physical variables -------------------------------------------
    def _W_at(self, xi, theta, t):
        T = self.time_factor(t)
        xi = np.asarray(xi, dtype=float)
        return np.real(T * xi**-0.5 * self.pair.eta_at(xi) * np.exp(1j * self.k * theta))

    def Omega(self, xi, theta, t, sign: int = 1):
        return self.beta * self.profile.g(np.asarray(xi, dtype=float)) + sign * self._W_at(xi, theta, t)

    def omega(self, x, theta, t, sign: int = 1):
        """Physical vorticity ``t^-1 Omega(x / t^(1/alpha), theta, t)``."""
        return self.Omega(np.asarray(x) / t ** (1 / self.alpha), theta, t, sign) / t


def euler_bundle(pair: EigenPair, profile: VortexProfile, etaf=None, consistency_tol: float = 1e-5) -> NonuniquenessBundle:
    """Assemble the Euler instance from an accepted eigenpair.

    ``eta`` comes from the pair.  When an ``EtaFunction`` is given, its values
    must agree with the pair's ``eta`` to ``consistency_tol``.
    """
    if pair.lambda_beta.real <= 0:
        raise GolovkinError("eigenpair must be unstable (Re lambda > 0)")
    if not np.isfinite(pair.beta):
        raise GolovkinError("the Euler instance needs finite beta")
    eta = pair.eta
    gap = 0.0
    if etaf is not None:
        w = pair.weights
        gap = float(np.sqrt(np.sum(w * np.abs(etaf.eta - eta) ** 2) / np.sum(w * np.abs(eta) ** 2)))
        if gap > consistency_tol:
            raise GolovkinError(f"eta from the formula disagrees with the eigenpair: {gap:.2e}")
    return NonuniquenessBundle(
        pair, profile, eta, pair.alpha, pair.beta, pair.k, pair.lambda_beta, pair.lambda_physical, gap
    )


# ----------------------------------------------------------------------------
# L^p in time
# ----------------------------------------------------------------------------


def angular_lp_constant(p: float) -> float:
    """``int_0^2pi |cos theta|^p d theta`` by adaptive quadrature."""
    val, _ = quad(lambda th: abs(np.cos(th)) ** p, 0.0, np.pi / 2, epsabs=1e-14, epsrel=1e-13)
    return 4.0 * val


def _vortex_grid(profile: VortexProfile, degree: int = 24):
    breaks = np.asarray(profile.g_pp.breaks, dtype=float)
    return composite_grid(breaks, degree)


def lp_scaling_study(bundle: NonuniquenessBundle, p_list=(2.5, 3.0, 4.0, 5.0), t_grid=None, t_grid_vortex=None) -> list[dict]:
    """``L^p`` norms of the physical fields against ``t`` and their log-log slopes.

    ``omega+ - omega- = 2 W / t`` is a single mode, so its angular integral is
    ``angular_lp_constant(p)`` times the radial one.  The default time window
    for the difference ends at ``t = 1`` and starts where ``t^slope`` is about
    ``e^-600``, so nothing underflows.
    """
    alpha = bundle.alpha
    p_crit = 2.0 / alpha
    pair = bundle.pair
    prof = bundle.profile
    vg = _vortex_grid(prof)
    rows = []
    for p in p_list:
        if not 1.0 < p <= p_crit * (1 + 1e-12):
            raise GolovkinError(f"p = {p} outside (1, 2/alpha] = (1, {p_crit:g}]")
        Cp = angular_lp_constant(p)
        slope_guess = bundle.beta * bundle.lambda_physical.real - 1 + 2 / (alpha * p)
        if t_grid is None:
            ts = np.exp(np.linspace(-600.0 / max(slope_guess, 1.0), 0.0, 9))
        else:
            ts = np.asarray(t_grid, dtype=float)
        log_diff = []
        for t in ts:
            s = t ** (1 / alpha)
            x = s * pair.r
            wx = s * pair.weights * x
            pos = x > 0
            amp = np.zeros(x.shape)
            # |t^(beta lambda)| is factored out and restored in log form
            amp[pos] = np.abs(2 * (x[pos] / s) ** -0.5 * pair.eta_at(x[pos] / s)) / t
            log_T = bundle.growth.real * np.log(t)
            log_diff.append(log_T + np.log(Cp * np.sum(wx * amp**p)) / p)
        log_diff = np.asarray(log_diff)
        diff = np.exp(log_diff)
        slope_diff, _ = np.polyfit(np.log(ts), log_diff, 1)
        tv = np.geomspace(1e-3, 1.0, 7) if t_grid_vortex is None else np.asarray(t_grid_vortex, dtype=float)
        vort = []
        for t in tv:
            s = t ** (1 / alpha)
            x = s * vg.nodes
            wx = s * vg.weights * x
            vort.append((2 * np.pi * np.sum(wx * np.abs(bundle.beta * prof.g(x / s) / t) ** p)) ** (1 / p))
        vort = np.asarray(vort)
        slope_vort, _ = np.polyfit(np.log(tv), np.log(vort), 1)
        rows.append(
            {
                "p": float(p),
                "angular_constant": Cp,
                "t": ts.tolist(),
                "norm_diff": diff.tolist(),
                "log_norm_diff": log_diff.tolist(),
                "slope_diff": float(slope_diff),
                "t_vortex": tv.tolist(),
                "norm_vortex": vort.tolist(),
                "slope_vortex": float(slope_vort),
                "expected_vortex": 2 / (alpha * p) - 1,
                "expected_diff": bundle.beta * bundle.lambda_beta.real + (2 / p - 1) / alpha,
                "stated_diff": bundle.beta * bundle.lambda_beta.real + (2 / p - 0.5) / alpha,
                "norm_diff_at_1": float(diff[-1]) if ts[-1] == 1.0 else float("nan"),
            }
        )
    return rows


def lp_norms_2d(bundle: NonuniquenessBundle, p: float, t: float, n_theta: int = 128) -> dict:
    """``|omega+|_p``, ``|omega-|_p`` and ``|omega+ - omega-|_p`` by tensor quadrature."""
    alpha = bundle.alpha
    s = t ** (1 / alpha)
    pair = bundle.pair
    xi = np.unique(np.concatenate([pair.r[pair.r > 0], _vortex_grid(bundle.profile).nodes[1:]]))
    # trapezoid weights in xi for the merged node set
    wxi = np.gradient(xi)
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    X = (s * xi)[:, None]
    out = {}
    fields = {}
    for name, sgn in (("plus", 1), ("minus", -1)):
        fields[name] = bundle.omega(X, theta[None, :], t, sgn)
    fields["diff"] = fields["plus"] - fields["minus"]
    for name, f in fields.items():
        integrand = np.abs(f) ** p * (s * xi)[:, None]
        out[name] = float((np.sum((s * wxi)[:, None] * integrand) * 2 * np.pi / n_theta) ** (1 / p))
    return out


# ----------------------------------------------------------------------------
# power-law example
# ----------------------------------------------------------------------------


def powerlaw_integrability(alpha: float) -> dict:
    """Local integrability near ``r = 0`` of the power-law fields.

    ``w ~ r^-(1+alpha)`` is in ``L^p_loc`` for ``p < 2/(1+alpha)``.  The force
    ``grad^perp phi . grad w`` has an ``r^-(2+2 alpha)`` and an ``r^-(2+alpha)``
    part, giving ``p < 1/(1+alpha)`` and ``p < 2/(2+alpha)``.
    """
    return {
        "vorticity_p_max": 2.0 / (1.0 + alpha),
        "force_p_max": min(1.0 / (1.0 + alpha), 2.0 / (2.0 + alpha)),
        "force_exponents": [-(2.0 + 2.0 * alpha), -(2.0 + alpha)],
    }


def verify_powerlaw_example(
    alpha: float,
    gamma: float,
    r_range=(0.1, 10.0),
    n_elements: int = 8,
    degree: int = 16,
    n_theta: int = 16,
    t: float = 1.0,
    transport_sign: float = 1.0,
) -> dict:
    """Residuals of the explicit power-law solution of the linearized system.

    Transport line: ``dw/dt + r^-alpha dw/dtheta + s alpha (2-alpha) r^-(2+alpha) dphi/dtheta``
    with ``s = transport_sign``; the closed form solves it for ``s = +1``.
    Poisson line: ``laplacian(phi) - w``.  Radial derivatives use a Lobatto
    grid, angular ones FFT, the time derivative a complex step.  Residuals
    are relative to the largest term at each point.
    """
    if not 0.0 < alpha < 2.0:
        raise GolovkinError("alpha must lie in (0, 2)")
    if gamma <= 0:
        raise GolovkinError("gamma must be positive")
    c = 1.0 / (alpha * (2.0 - alpha))
    breaks = np.geomspace(r_range[0], r_range[1], n_elements + 1)
    grid = composite_grid(breaks, degree)
    r = grid.nodes[:, None]
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)[None, :]

    def w(tt):
        return tt**gamma * r ** (-(1 + alpha)) * np.cos(theta)

    def phi(tt):
        return -c * tt**gamma * (r ** (1 - alpha) * np.cos(theta) + (gamma / tt) * r * np.sin(theta))

    h = 1e-30
    w_t = np.imag(w(t + 1j * h)) / h
    wv = w(t)
    pv = phi(t)
    kfreq = np.fft.fftfreq(n_theta, d=1.0 / n_theta)
    d_theta = lambda f: np.real(np.fft.ifft(1j * kfreq[None, :] * np.fft.fft(f, axis=1), axis=1))
    w_th = d_theta(wv)
    p_th = d_theta(pv)
    term1 = w_t
    term2 = r ** (-alpha) * w_th
    term3 = transport_sign * alpha * (2 - alpha) * r ** (-(2 + alpha)) * p_th
    transport = term1 + term2 + term3
    scale_t = np.abs(term1) + np.abs(term2) + np.abs(term3)
    D = grid.D
    p_r = D @ pv
    p_rr = D @ p_r
    p_thth = d_theta(d_theta(pv))
    lap = p_rr + p_r / r + p_thth / r**2
    poisson = lap - wv
    scale_p = np.abs(p_rr) + np.abs(p_r / r) + np.abs(p_thth / r**2) + np.abs(wv)
    # harmonic ingredient r sin(theta)
    h_f = r * np.sin(theta) + 0 * theta
    h_r = D @ h_f
    h_lap = D @ h_r + h_r / r + d_theta(d_theta(h_f)) / r**2
    # force grad^perp(phi) . grad(w) = (1/r)(phi_r w_theta - phi_theta w_r), fitted on a grid near the origin
    near = composite_grid(np.geomspace(1e-6, 1e-4, 5), degree)
    rn = near.nodes[:, None]
    wn = t**gamma * rn ** (-(1 + alpha)) * np.cos(theta)
    pn = -c * t**gamma * (rn ** (1 - alpha) * np.cos(theta) + (gamma / t) * rn * np.sin(theta))
    force = ((near.D @ pn) * d_theta(wn) - d_theta(pn) * (near.D @ wn)) / rn
    fmax = np.max(np.abs(force), axis=1)
    slope = float(np.polyfit(np.log(near.nodes), np.log(fmax), 1)[0])
    return {
        "alpha": alpha,
        "gamma": gamma,
        "t": t,
        "transport_residual": float(np.max(np.abs(transport) / scale_t)),
        "poisson_residual": float(np.max(np.abs(poisson) / scale_p)),
        "harmonic_residual": float(np.max(np.abs(h_lap)) / np.max(np.abs(h_r))),
        "force_loglog_slope": slope,
        **powerlaw_integrability(alpha),
    }


def rows_to_csv(rows: list[dict], path) -> None:
    """Long-format CSV of an ``lp_scaling_study`` table."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "t", "norm_diff", "slope_diff", "expected_diff", "slope_vortex", "expected_vortex"])
        for row in rows:
            for t, n in zip(row["t"], row["norm_diff"]):
                w.writerow([row["p"], f"{t:.17g}", f"{n:.17g}", f"{row['slope_diff']:.17g}", f"{row['expected_diff']:.17g}", f"{row['slope_vortex']:.17g}", f"{row['expected_vortex']:.17g}"])
