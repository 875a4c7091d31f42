"""Radial background vortices with a positive core, a negative well and zero mean.

A profile ``g`` is stored as an exact piecewise polynomial, each piece written
in the local variable ``y = r - (left break)`` so that short pieces far from
the origin keep well-scaled coefficients.  Everything derived from it (the
angular velocity ``v``, its derivative, the Rayleigh weight ``A`` and the
logarithmic phase integral) is evaluated in closed form from the pieces, so
the only approximation is a rounding-level Chebyshev interpolant of the
phase integrand on pieces away from the origin.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

__all__ = [
    "VortexError",
    "VortexParams",
    "VortexProfile",
    "PiecewisePolynomial",
    "build_vortex",
    "constant_profile",
    "eval_A",
    "vprime_at_1",
    "DEMO_PARAMS",
    "DEMO_GAMMA1_BRACKET",
    "gamma1_family",
]

# |v'(1)| below this makes A blow up; such vortices are rejected.
VPRIME_FLOOR = 1e-8
# relative slack for sampled sign conditions on g'
MONOTONE_TOL = 1e-12


class VortexError(ValueError):
    """Raised for parameter sets that do not define an admissible vortex."""


@dataclass(frozen=True)
class VortexParams:
    g0: float
    gamma0: float
    delta0: float
    g1: float
    gamma1: float
    delta1: float
    r0: float
    r1: float = 1.0
    blend_knots: tuple[tuple[float, float], ...] = ()
    tail_amplitude: float | None = None

    def replace(self, **changes) -> "VortexParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["blend_knots"] = [list(k) for k in self.blend_knots]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "VortexParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise VortexError(f"unknown vortex keys: {sorted(unknown)}")
        data = dict(data)
        if "blend_knots" in data:
            data["blend_knots"] = tuple(tuple(map(float, k)) for k in data["blend_knots"])
        return cls(**data)


# Shipped demonstration vortex before tuning.  Tuning rescales gamma1 by a
# factor near 1 (see ``DEMO_GAMMA1_BRACKET``).  The amplitude is doubled from
# the unit-well shape so the unstable growth rate clears half the detuning.
DEMO_PARAMS = VortexParams(g0=8.0, gamma0=8.0, delta0=0.5, g1=2.0, gamma1=7.8, delta1=0.2, r0=1.6)
DEMO_GAMMA1_BRACKET = (0.9, 1.1)


class PiecewisePolynomial:
    """Polynomials on consecutive intervals ``[breaks[i], breaks[i+1]]``.

    Piece ``i`` is a polynomial in ``r - breaks[i]``.  Outside ``[breaks[0], breaks[-1]]`` the value is ``outside`` (0 by default).
    """

    def __init__(self, breaks: Sequence[float], polys: Sequence[Polynomial], outside: float = 0.0):
        self.breaks = np.asarray(breaks, dtype=float)
        self.polys = list(polys)
        if len(self.polys) != len(self.breaks) - 1:
            raise ValueError("need one polynomial per interval")
        self.outside = outside

    def piece_index(self, r: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breaks, r, side="right") - 1
        return np.clip(idx, 0, len(self.polys) - 1)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, float(self.outside))
        inside = (r >= self.breaks[0]) & (r <= self.breaks[-1])
        idx = self.piece_index(r)
        for i, p in enumerate(self.polys):
            sel = inside & (idx == i)
            if np.any(sel):
                out[sel] = p(r[sel] - self.breaks[i])
        return out

    def deriv(self, m: int = 1) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breaks, [p.deriv(m) for p in self.polys])

    def integral(self, a: float, b: float, weight: Polynomial | None = None) -> float:
        """Exact integral of ``weight * self`` over ``[a, b]``; ``weight`` is in absolute ``r``."""
        total = 0.0
        for origin, hi, p in zip(self.breaks[:-1], self.breaks[1:], self.polys):
            lo, hi = max(origin, a), min(hi, b)
            if hi <= lo:
                continue
            q = (p * weight(Polynomial([origin, 1.0])) if weight is not None else p).integ()
            total += q(hi - origin) - q(lo - origin)
        return float(total)


def _end_layer(length: float) -> tuple[Polynomial, Polynomial]:
    """Nonnegative profiles carrying the slope and curvature data at one end.

    In the local coordinate ``y`` (distance from the end), ``H1(0)=1, H1'(0)=0``
    and ``H2(0)=0, H2'(0)=1``; both vanish with their first derivative at
    ``y = length``.
    """
    u = Polynomial([0.0, 1.0 / length])
    h1 = (1 - u) ** 3 * (1 + 3 * u)
    h2 = Polynomial([0.0, 1.0]) * (1 - u) ** 3
    return h1, h2


def _layer_length(slope: float, curv: float, drop: float, span: float) -> float:
    """Largest layer length (at most half the span) using a quarter of the drop."""
    # integral of |slope| H1 + |curv| H2 is 0.4 |slope| l + |curv| l^2 / 20
    a, b, c = abs(curv) / 20.0, 0.4 * abs(slope), -0.25 * drop
    if a > 0:
        ell = (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)
    elif b > 0:
        ell = -c / b
    else:
        ell = span
    return float(min(ell, 0.5 * span))


def _beta_bump(a: float, b: float, p: int, q: int, origin: float) -> Polynomial:
    """``x^p (1-x)^q`` on ``[a, b]`` with unit integral, in the variable ``r - origin``."""
    x = Polynomial([(origin - a) / (b - a), 1.0 / (b - a)])
    bump = x**p * (1 - x) ** q
    prim = bump.integ()
    return bump / (prim(b - origin) - prim(a - origin))


def _monotone_segment(a: float, da, b: float, db, shapes: list[tuple[int, int]]):
    """Monotone C^2 segment from data ``da=(value, slope, curv)`` at ``a`` to ``db`` at ``b``.

    The derivative is ``sign * h`` with ``h >= 0`` built from end layers plus
    ``mass`` times a Beta bump with exponents ``shapes[0]``.  Further entries of
    ``shapes`` give alternative segments (same ends, interior mass redistributed).
    Returns ``(breaks, polys for shapes[0], [polys for shapes[j] - shapes[0]], mass)``
    with each polynomial in the variable ``r - (its left break)``.
    """
    drop = db[0] - da[0]
    sign = 1.0 if drop >= 0 else -1.0
    span = b - a
    la = _layer_length(da[1], da[2], abs(drop), span)
    lb = _layer_length(db[1], db[2], abs(drop), span)
    zero = Polynomial([0.0])
    h1a, h2a = _end_layer(la) if la > 0 else (zero, zero)
    h1b, h2b = _end_layer(lb) if lb > 0 else (zero, zero)

    def left_h(origin):
        y = Polynomial([origin - a, 1.0])
        return sign * da[1] * h1a(y) + sign * da[2] * h2a(y)

    def right_h(origin):
        ybar = Polynomial([b - origin, -1.0])
        return sign * db[1] * h1b(ybar) - sign * db[2] * h2b(ybar)

    left_mass = left_h(a).integ()(la) if la > 0 else 0.0
    right_mass = (right_h(b - lb).integ()(lb) if lb > 0 else 0.0)
    mass = abs(drop) - left_mass - right_mass
    breaks = [a]
    for x in (a + la, b - lb, b):
        if x > breaks[-1] + 1e-12 * span:
            breaks.append(x)
    breaks[-1] = b
    outs = []
    for p, q in shapes:
        polys = []
        acc = da[0]
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            hh = mass * _beta_bump(a, b, p, q, lo)
            if lo < a + la:
                hh = hh + left_h(lo)
            if hi > b - lb:
                hh = hh + right_h(lo)
            prim = (sign * hh).integ()
            polys.append(prim - prim(0.0) + acc)
            acc = polys[-1](hi - lo)
        outs.append(polys)
    base = outs[0]
    diffs = [[p - q for p, q in zip(o, base)] for o in outs[1:]]
    return breaks, base, diffs, mass


def _connector(a: float, fa, b: float, fb, knots: list[tuple[float, float]], tail: bool = False):
    """Monotone chain from ``(a, fa)`` to ``(b, fb)`` through ``(radius, value)`` knots.

    With ``tail=True`` the last segment also returns a bump:
    the difference between a late and an early interior mass distribution.
    """
    pts = [(a, fa[0])] + list(knots) + [(b, fb[0])]
    chords = [(pts[i + 1][1] - pts[i][1]) / (pts[i + 1][0] - pts[i][0]) for i in range(len(pts) - 1)]
    data = [tuple(fa)]
    for i in range(1, len(pts) - 1):
        s0, s1 = chords[i - 1], chords[i]
        slope = 0.0 if s0 * s1 <= 0 else 2.0 * s0 * s1 / (s0 + s1)
        data.append((pts[i][1], slope, 0.0))
    data.append(tuple(fb))
    breaks, polys, bump = [a], [], None
    for i in range(len(pts) - 1):
        lo, hi = pts[i][0], pts[i + 1][0]
        last = tail and i == len(pts) - 2
        shapes = [(2, 2)]
        if last:
            shapes = [(2, 6), (6, 2)]
        seg_breaks, seg_polys, diffs, mass = _monotone_segment(lo, data[i], hi, data[i + 1], shapes)
        if mass < 0:
            raise VortexError(f"connector on [{lo:.4g}, {hi:.4g}] cannot stay monotone")
        breaks.extend(seg_breaks[1:])
        polys.extend(seg_polys)
        if last:
            bump = (seg_breaks, diffs[0])
    return breaks, polys, bump


class _PhasePiece:
    """Antiderivative of ``P/s**3 - v0/s`` on one piece away from ``s = 0``.

    The integrand is analytic on the piece (its only pole is at ``s = 0``), so a
    degree-40 Chebyshev interpolant integrated exactly is accurate to rounding.
    A Laurent split would extrapolate ``P`` to ``s = 0`` and lose digits.
    """

    def __init__(self, P: Polynomial, origin: float, length: float, v0: float):
        if origin <= 0:
            raise ValueError("phase pieces must start away from the origin")

        def integrand(y):
            sv = origin + y
            return P(y) / sv**3 - v0 / sv

        cheb = Chebyshev.interpolate(integrand, 40, domain=[0.0, length])
        self.prim = cheb.integ(lbnd=0.0)
        self.origin = origin

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return self.prim(np.asarray(s, dtype=float) - self.origin)


@dataclass(frozen=True, eq=False)
class VortexProfile:
    """Immutable evaluator bundle for a radial vorticity profile ``g``."""

    params: VortexParams | None
    g_pp: PiecewisePolynomial = field(repr=False)
    r1: float = 1.0
    well: tuple[float, float] | None = None
    validated: bool = False

    def __post_init__(self):
        g = self.g_pp
        breaks = g.breaks
        # moment antiderivative P(r) = int_0^r s g(s) ds, continuous across pieces
        P_polys, acc = [], 0.0
        for lo, hi, p in zip(breaks[:-1], breaks[1:], g.polys):
            q = (Polynomial([lo, 1.0]) * p).integ()
            q = q - q(0.0) + acc
            P_polys.append(q)
            acc = q(hi - lo)
        object.__setattr__(self, "_P", PiecewisePolynomial(breaks, P_polys))
        object.__setattr__(self, "_P_end", float(acc))
        object.__setattr__(self, "_gp", g.deriv(1))
        object.__setattr__(self, "_gpp", g.deriv(2))
        # first piece touches r = 0, so P / r^2 is an exact polynomial there
        first = P_polys[0]
        v_first = Polynomial(first.coef[2:]) if len(first.coef) > 2 else Polynomial([0.0])
        object.__setattr__(self, "_v_first", v_first)
        v0 = float(v_first(0.0))
        object.__setattr__(self, "v0", v0)
        logs = [None] + [
            _PhasePiece(q, lo, hi - lo, v0) for lo, hi, q in zip(breaks[1:-1], breaks[2:], P_polys[1:])
        ]
        # phase integral Phi(r) = int_0^r (v(s) - v0)/s ds, constants by continuity
        first_phase = Polynomial(v_first.coef[1:]).integ() if len(v_first.coef) > 1 else Polynomial([0.0])
        consts = [0.0]
        acc = float(first_phase(breaks[1]))
        for i in range(1, len(P_polys)):
            consts.append(acc - float(logs[i](np.array(breaks[i]))))
            acc = consts[i] + float(logs[i](np.array(breaks[i + 1])))
        object.__setattr__(self, "_phase", (first_phase, logs, consts, acc))

    # ----- basic fields -------------------------------------------------
    @property
    def support_radius(self) -> float:
        return float(self.g_pp.breaks[-1])

    def g(self, r):
        return self.g_pp(r)

    def g_prime(self, r):
        return self._gp(r)

    def g_second(self, r):
        return self._gpp(r)

    def moment(self, r):
        """``int_0^r s g(s) ds``."""
        r = np.asarray(r, dtype=float)
        return np.where(r >= self.support_radius, self._P_end, self._P(r))

    def v(self, r):
        """Angular velocity ``r^-2 int_0^r s g(s) ds``."""
        r = np.asarray(r, dtype=float)
        out = np.empty(r.shape)
        b1 = self.g_pp.breaks[1]
        near = r <= b1
        out[near] = self._v_first(r[near])
        far = ~near
        rf = r[far]
        num = np.where(rf >= self.support_radius, self._P_end, self._P(rf))
        if self.validated:
            num = np.where(rf >= self.support_radius, 0.0, num)
        out[far] = num / rf**2
        return out

    def v_prime(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        b1 = self.g_pp.breaks[1]
        near = r <= b1
        out[near] = self._v_first.deriv()(r[near])
        far = ~near
        out[far] = (self.g(r[far]) - 2.0 * self.v(r[far])) / r[far]
        return out

    def phase_integral(self, r):
        """``int_0^r (v(s) - v(0))/s ds``, exact."""
        r = np.asarray(r, dtype=float)
        first_phase, logs, consts, end_value = self._phase
        breaks = self.g_pp.breaks
        out = np.empty(r.shape)
        idx = self.g_pp.piece_index(r)
        inside = r <= breaks[-1]
        sel = inside & (idx == 0)
        out[sel] = first_phase(r[sel])
        for i in range(1, len(logs)):
            sel = inside & (idx == i)
            if np.any(sel):
                out[sel] = consts[i] + logs[i](r[sel])
        beyond = ~inside
        if np.any(beyond):
            # v = P_end / s^2 past the support
            rb = r[beyond]
            R = breaks[-1]
            out[beyond] = (
                end_value
                - self.v0 * np.log(rb / R)
                + 0.5 * self._P_end * (R**-2 - rb**-2)
            )
        return out

    # ----- quantities at the critical radius ------------------------------
    @property
    def v1(self) -> float:
        return float(self.v(np.array(self.r1)))

    @property
    def v_prime_at_1(self) -> float:
        return vprime_at_1(self)

    def A(self, r):
        return eval_A(self, r)

    def to_csv(self, path, r: Iterable[float]) -> None:
        r = np.asarray(list(r), dtype=float)
        cols = [r, self.g(r), self.g_prime(r), self.v(r), self.A(r)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "g", "g_prime", "v", "A"])
            for row in zip(*cols):
                w.writerow([repr(float(x)) for x in row])


def _g_pieces(params: VortexParams):
    """Pieces of ``g`` with zero tail amplitude, plus the unit-moment tail bump."""
    p = params
    r1 = p.r1
    a_core, b_well, e_well = p.delta0, r1 - p.delta1, r1 + p.delta1
    core = Polynomial([p.g0, 0.0, -p.gamma0])
    # the well piece starts at b_well, so write it in y = r - b_well
    well = -p.g1 + 0.5 * p.gamma1 * Polynomial([b_well - r1, 1.0]) ** 2
    left_knots = sorted(k for k in p.blend_knots if a_core < k[0] < b_well)
    right_knots = sorted(k for k in p.blend_knots if e_well < k[0] < p.r0)
    if len(left_knots) + len(right_knots) != len(p.blend_knots):
        raise VortexError("blend knots must lie strictly inside a connector interval")
    core_end = (core(a_core), core.deriv()(a_core), core.deriv(2)(a_core))
    well_start = (well(0.0), well.deriv()(0.0), well.deriv(2)(0.0))
    well_end = (well(e_well - b_well), well.deriv()(e_well - b_well), well.deriv(2)(e_well - b_well))
    lb, lp, _ = _connector(a_core, core_end, b_well, well_start, left_knots)
    rb, rp, (bump_breaks, bump_polys) = _connector(
        e_well, well_end, p.r0, (0.0, 0.0, 0.0), right_knots, tail=True
    )
    breaks = [0.0] + lb + rb
    polys = [core] + lp + [well] + rp
    # bump = late minus early interior mass; rescale to unit radial moment
    moment = sum(
        (Polynomial([lo, 1.0]) * q).integ()(hi - lo)
        for lo, hi, q in zip(bump_breaks[:-1], bump_breaks[1:], bump_polys)
    )
    unit = [q / moment for q in bump_polys]
    max_amp = moment  # amplitude 1 in the raw scaling is the fully late profile
    bump_map = {}
    for lo, q in zip(bump_breaks[:-1], unit):
        bump_map[round(lo, 14)] = q
    return breaks, polys, bump_map, max_amp


def _with_tail(breaks, polys, bump_map, tail: float):
    out = []
    for lo, q in zip(breaks[:-1], polys):
        b = bump_map.get(round(lo, 14))
        out.append(q + tail * b if b is not None else q)
    return out


def _check_structure(p: VortexParams) -> None:
    for name in ("g0", "gamma0", "g1", "gamma1", "r0", "r1"):
        if not getattr(p, name) > 0:
            raise VortexError(f"{name} must be positive")
    for name in ("delta0", "delta1"):
        if not 0 < getattr(p, name) < 1:
            raise VortexError(f"{name} must lie in (0, 1)")
    if not p.delta0 < p.r1 - p.delta1:
        raise VortexError("core and well overlap: need delta0 < r1 - delta1")
    if not p.r0 > p.r1 + p.delta1:
        raise VortexError("support too small: need r0 > r1 + delta1")
    if not p.g0 - p.gamma0 * p.delta0**2 > 0:
        raise VortexError("core vorticity must stay positive on [0, delta0]")
    if not 0.5 * p.gamma1 * p.delta1**2 < p.g1:
        raise VortexError("well edges must stay negative: need gamma1*delta1^2/2 < g1")


def _sign_violations(profile: VortexProfile, n: int = 4001) -> tuple[float, float]:
    r1, r0 = profile.r1, profile.support_radius
    left = np.linspace(0.0, r1, n)
    right = np.linspace(r1, r0, n)[1:-1]
    scale = float(np.max(np.abs(profile.g_prime(np.linspace(0, r0, n)))))
    up = float(np.max(profile.g_prime(left))) / scale
    down = float(np.min(profile.g_prime(right))) / scale
    return up, down


def build_vortex(params: VortexParams) -> VortexProfile:
    """Assemble the profile and solve the tail amplitude for zero mean.

    The moment is linear in the tail amplitude, so one linear solve is exact.
    Raises :class:`VortexError` for overlapping pieces, for sign conditions on
    ``g'`` that fail after the zero-mean solve, and for degenerate ``v'(1)``.
    """
    _check_structure(params)
    breaks, polys, bump_map, max_amp = _g_pieces(params)
    base = PiecewisePolynomial(breaks, polys)
    s = Polynomial([0.0, 1.0])
    base_moment = base.integral(0.0, params.r0, s)
    tail = -base_moment  # the bump has unit moment
    # amplitudes between 0 and max_amp mix two monotone flanks
    lo_amp, hi_amp = sorted((0.0, max_amp))
    if not lo_amp - 1e-14 <= tail <= hi_amp + 1e-14:
        raise VortexError(
            "zero mean unreachable with the tail bump (sign obstruction): "
            f"residual moment {base_moment:.6g}, admissible amplitudes [{lo_amp:.6g}, {hi_amp:.6g}]"
        )
    g_pp = PiecewisePolynomial(breaks, _with_tail(breaks, polys, bump_map, tail))
    resolved = params.replace(tail_amplitude=float(tail))
    profile = VortexProfile(
        resolved,
        g_pp,
        r1=params.r1,
        well=(params.r1 - params.delta1, params.r1 + params.delta1),
        validated=True,
    )
    up, down = _sign_violations(profile)
    if up > MONOTONE_TOL or down < -MONOTONE_TOL:
        raise VortexError(
            "monotonicity fails after the zero-mean solve "
            f"(tail amplitude {tail:.6g}, base moment {base_moment:.6g}, "
            f"max g' on [0,r1] {up:.3g}, min g' on (r1,r0) {down:.3g})"
        )
    vprime_at_1(profile)
    _check_A_denominator(profile)
    return profile


def constant_profile(c: float, r_max: float) -> VortexProfile:
    """Validation-bypass profile ``g = c`` on ``[0, r_max]`` (no class checks)."""
    g_pp = PiecewisePolynomial([0.0, r_max], [Polynomial([float(c)])])
    return VortexProfile(None, g_pp, r1=1.0, well=None, validated=False)


def vprime_at_1(profile: VortexProfile) -> float:
    """``v'(1) = -2 int_0^1 g r dr - g1`` (equivalently ``g(1) - 2 v(1)``)."""
    if profile.r1 != 1.0:
        raise VortexError("v'(1) is defined for the r1 = 1 normalization only")
    val = float(profile.g(np.array(1.0)) - 2.0 * profile.moment(np.array(1.0)))
    if abs(val) < VPRIME_FLOOR:
        raise VortexError(f"degenerate vortex: |v'(1)| = {abs(val):.3g}")
    return val


def _A_parts(profile: VortexProfile):
    """Per-piece numerator/denominator polynomials with the r=1 zero divided out."""
    cached = getattr(profile, "_A_cache", None)
    if cached is not None:
        return cached
    g = profile.g_pp
    v1 = profile.v1
    parts = []
    for i, (lo, hi, p) in enumerate(zip(g.breaks[:-1], g.breaks[1:], g.polys)):
        gp = p.deriv()
        if i == 0:
            # A = (g'/r) / (v - v1), both exact polynomials on the core
            num = Polynomial(gp.coef[1:]) if len(gp.coef) > 1 else Polynomial([0.0])
            den = profile._v_first - v1
        else:
            # A = g' r / (P - v1 r^2), in y = r - lo
            s = Polynomial([lo, 1.0])
            num = gp * s
            den = profile._P.polys[i] - v1 * s**2
        if profile.well is not None and np.isclose(lo, profile.well[0]) and np.isclose(hi, profile.well[1]):
            # remove the common factor (r - 1) exactly
            num, _ = divmod(num, Polynomial([lo - profile.r1, 1.0]))
            den, _ = divmod(den, Polynomial([lo - profile.r1, 1.0]))
        parts.append((num, den))
    object.__setattr__(profile, "_A_cache", parts)
    return parts


def _check_A_denominator(profile: VortexProfile) -> None:
    g = profile.g_pp
    for (lo, hi), (num, den) in zip(zip(g.breaks[:-1], g.breaks[1:]), _A_parts(profile)):
        rs = np.linspace(lo, hi, 257)
        d = den(rs - lo)
        if np.any(np.sign(d[1:]) != np.sign(d[:-1])) or np.any(d == 0):
            x = rs[np.argmin(np.abs(d))]
            raise VortexError(f"v(r) = v(1) near r = {x:.6g} away from r = 1; A would be singular")


def eval_A(profile: VortexProfile, r):
    """Rayleigh weight ``A = g' / (r (v - v(1)))``; zero beyond the support."""
    if profile.r1 != 1.0:
        raise VortexError("A is defined for the r1 = 1 normalization only")
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape)
    g = profile.g_pp
    idx = g.piece_index(r)
    inside = (r >= 0) & (r < profile.support_radius)
    for i, (num, den) in enumerate(_A_parts(profile)):
        sel = inside & (idx == i)
        if np.any(sel):
            y = r[sel] - g.breaks[i]
            out[sel] = num(y) / den(y)
    return out


def gamma1_family(base: VortexParams):
    """One-parameter family ``t -> base`` with ``gamma1`` scaled by ``t``."""

    def member(t: float) -> VortexParams:
        return base.replace(gamma1=base.gamma1 * float(t), tail_amplitude=None)

    return member
