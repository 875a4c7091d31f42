"""Radial grids, quadrature, the per-mode operator ``L_k`` and the function-space norms.

Grids are composite Legendre–Gauss–Lobatto: the interval is cut into elements,
each carrying GLL nodes and weights.  GLL quadrature is exact for the
degree ``2p-2`` products in the stiffness matrix, so the weak-form operator
coincides with nodal collocation inside an element.  Elements let the breakpoints of a piecewise-smooth background
coincide with element boundaries, which keeps spectral accuracy.

``L_k = d²/dr² - (k² - 1/4)/r²`` is realized in weak form,
``-K - (k² - 1/4) W/r²`` with ``K`` the stiffness matrix, so the matrix is
exactly symmetric and negative definite on the Dirichlet subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import legendre

__all__ = [
    "RadialGrid",
    "ModeOperator",
    "GridError",
    "make_grid",
    "composite_grid",
    "adapted_breaks",
    "mode_operator",
    "apply_Lk",
    "invert_Lk",
    "norm",
    "inner",
    "NORMS",
]

NORMS = ("L2", "H1_0", "H1_dot", "H1", "Z_M", "H1_r")


class GridError(ValueError):
    pass


@lru_cache(maxsize=None)
def gll_rule(p: int) -> tuple[np.ndarray, np.ndarray]:
    """Legendre–Gauss–Lobatto nodes (ascending) and weights on [-1, 1]."""
    cp = np.zeros(p + 1)
    cp[p] = 1.0
    inner_x = np.sort(legendre.legroots(legendre.legder(cp)).real)
    x = np.concatenate([[-1.0], inner_x, [1.0]])
    # one Newton polish on (1 - x²) P_p'(x)
    for _ in range(2):
        d1 = legendre.legval(x[1:-1], legendre.legder(cp))
        d2 = legendre.legval(x[1:-1], legendre.legder(cp, 2))
        x[1:-1] -= d1 / d2
    Pp = legendre.legval(x, cp)
    w = 2.0 / (p * (p + 1) * Pp**2)
    return x, w


@lru_cache(maxsize=None)
def gll_diff(p: int) -> np.ndarray:
    """Differentiation matrix on the GLL nodes of [-1, 1]."""
    x, _ = gll_rule(p)
    cp = np.zeros(p + 1)
    cp[p] = 1.0
    Pp = legendre.legval(x, cp)
    X = x[:, None] - x[None, :]
    np.fill_diagonal(X, 1.0)
    D = (Pp[:, None] / Pp[None, :]) / X
    np.fill_diagonal(D, 0.0)
    D[0, 0] = -p * (p + 1) / 4.0
    D[p, p] = p * (p + 1) / 4.0
    return D


@lru_cache(maxsize=None)
def gll_cumint(p: int) -> np.ndarray:
    """Matrix giving the integral of the interpolant from -1 to each node."""
    x, _ = gll_rule(p)
    V = legendre.legvander(x, p)
    prim = np.zeros((p + 1, p + 1))
    for j in range(p + 1):
        coef = np.zeros(p + 1)
        coef[j] = 1.0
        prim[:, j] = legendre.legval(x, legendre.legint(coef, lbnd=-1.0))
    return prim @ np.linalg.inv(V)


@lru_cache(maxsize=None)
def _bary_weights(p: int) -> np.ndarray:
    x, _ = gll_rule(p)
    X = x[:, None] - x[None, :]
    np.fill_diagonal(X, 1.0)
    logs = np.log(np.abs(X)).sum(axis=1)
    sign = np.prod(np.sign(X), axis=1)
    return sign * np.exp(-(logs - logs.mean()))


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Composite Lobatto grid on ``[r_min, r_max]``.

    ``nodes`` includes both endpoints; ``interior`` masks the solution nodes for
    Dirichlet problems.
    """

    breaks: np.ndarray
    degrees: tuple[int, ...]
    kind: str = "global"
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    starts: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float)
        if np.any(np.diff(breaks) <= 0):
            raise GridError("element breaks must be strictly increasing")
        if breaks[0] < 0 and self.kind != "log":
            raise GridError("r_min must be nonnegative")
        nodes = [breaks[:1]]
        weights = np.zeros(1 + sum(self.degrees))
        starts = []
        pos = 0
        for (a, b), p in zip(zip(breaks[:-1], breaks[1:]), self.degrees):
            x, w = gll_rule(p)
            nodes.append(a + (b - a) * (x[1:] + 1) / 2)
            weights[pos : pos + p + 1] += 0.5 * (b - a) * w
            starts.append(pos)
            pos += p
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "nodes", np.concatenate(nodes))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "starts", tuple(starts))

    # ----- basic metadata --------------------------------------------------
    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breaks[0]), float(self.breaks[-1])

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[0] = mask[-1] = False
        return mask

    def element_slices(self) -> Iterable[tuple[int, slice, float, float]]:
        for e, (s, p) in enumerate(zip(self.starts, self.degrees)):
            yield e, slice(s, s + p + 1), float(self.breaks[e]), float(self.breaks[e + 1])

    # ----- quadrature -------------------------------------------------------
    def integrate(self, f) -> complex | float:
        return np.dot(self.weights, f)

    @cached_property
    def cumulative(self) -> np.ndarray:
        """Matrix ``Q`` with ``(Q f)_i = int_{r_min}^{r_i} f``."""
        Q = np.zeros((self.n, self.n))
        for e, sl, a, b in self.element_slices():
            local = 0.5 * (b - a) * gll_cumint(self.degrees[e])
            rows = np.arange(sl.start + 1, sl.stop)
            # carry the integral up to the element's left node
            Q[rows, :] = Q[sl.start, :]
            Q[rows, sl] += local[1:]
        return Q

    def cumulative_apply(self, f) -> np.ndarray:
        """``int_{r_min}^{r_i} f`` without forming the dense matrix."""
        f = np.asarray(f)
        out = np.zeros(f.shape, dtype=np.result_type(f, float))
        carry = 0.0
        for e, sl, a, b in self.element_slices():
            local = 0.5 * (b - a) * (gll_cumint(self.degrees[e]) @ f[sl])
            out[sl] = carry + local
            carry = out[sl.stop - 1]
        return out

    # ----- differentiation -------------------------------------------------
    def apply_D(self, f, interface: str = "average") -> np.ndarray:
        """Matrix-free version of ``diff_matrix(interface) @ f``."""
        f = np.asarray(f)
        out = np.zeros(f.shape, dtype=np.result_type(f, float))
        count = np.zeros(self.n)
        n_el = len(self.degrees)
        for e, sl, a, b in self.element_slices():
            local = self._local_D(e) @ f[sl]
            use = np.ones(sl.stop - sl.start, dtype=bool)
            if interface == "right" and e < n_el - 1:
                use[-1] = False
            if interface == "left" and e > 0:
                use[0] = False
            idx = np.arange(sl.start, sl.stop)[use]
            out[idx] += local[use]
            count[idx] += 1
        return out / count

    def _local_D(self, e: int) -> np.ndarray:
        a, b = self.breaks[e], self.breaks[e + 1]
        return gll_diff(self.degrees[e]) * (2.0 / (b - a))

    @cached_property
    def D(self) -> np.ndarray:
        """Collocation derivative; interface rows average the two elements."""
        return self.diff_matrix("average")

    def diff_matrix(self, interface: str = "average") -> np.ndarray:
        """Global derivative matrix.

        ``interface`` chooses the value at shared nodes: ``average`` of the two
        elements, or the ``left``/``right`` element only (upwinding).
        """
        D = np.zeros((self.n, self.n))
        count = np.zeros(self.n)
        n_el = len(self.degrees)
        for e, sl, a, b in self.element_slices():
            De = self._local_D(e)
            rows = np.arange(sl.start, sl.stop)
            use = np.ones(len(rows), dtype=bool)
            if interface == "right" and e < n_el - 1:
                use[-1] = False  # right neighbour owns the shared node
            if interface == "left" and e > 0:
                use[0] = False
            D[rows[use], sl] += De[use]
            count[rows[use]] += 1
        return D / count[:, None]

    @cached_property
    def stiffness(self) -> np.ndarray:
        """``K_ij = int phi_i' phi_j'`` with element-wise Lobatto quadrature."""
        K = np.zeros((self.n, self.n))
        for e, sl, a, b in self.element_slices():
            De = self._local_D(e)
            we = 0.5 * (b - a) * gll_rule(self.degrees[e])[1]
            K[sl, sl] += De.T @ (we[:, None] * De)
        return K

    # ----- interpolation ---------------------------------------------------
    def interpolate(self, values, x, fill: float | None = 0.0):
        """Evaluate the piecewise interpolant at ``x``.

        Points outside the domain take ``fill``; ``fill=None`` raises instead.
        """
        values = np.asarray(values)
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=np.result_type(values, float))
        lo, hi = self.domain
        outside = (x < lo) | (x > hi)
        if np.any(outside):
            if fill is None:
                raise GridError("interpolation point outside the grid")
            out[outside] = fill
        el = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, len(self.degrees) - 1)
        for e, sl, a, b in self.element_slices():
            sel = (~outside) & (el == e)
            if not np.any(sel):
                continue
            out[sel] = _barycentric(self.degrees[e], values[sl], 2 * (x[sel] - a) / (b - a) - 1)
        return out


def _barycentric(p: int, f: np.ndarray, t: np.ndarray) -> np.ndarray:
    xk, _ = gll_rule(p)
    wk = _bary_weights(p)
    diff = t[:, None] - xk[None, :]
    exact = diff == 0
    diff[exact] = 1.0
    c = wk[None, :] / diff
    out = (c @ f) / c.sum(axis=1)
    hit = exact.any(axis=1)
    if np.any(hit):
        out[hit] = f[np.argmax(exact[hit], axis=1)]
    return out


def composite_grid(breaks: Sequence[float], degree: int | Sequence[int] = 16, kind: str = "global") -> RadialGrid:
    breaks = np.asarray(breaks, dtype=float)
    if np.isscalar(degree):
        degrees = (int(degree),) * (len(breaks) - 1)
    else:
        degrees = tuple(int(d) for d in degree)
    if min(degrees) < 2:
        raise GridError("each element needs degree >= 2")
    return RadialGrid(breaks, degrees, kind)


def adapted_breaks(
    r_min: float,
    r_max: float,
    required: Sequence[float] = (),
    focus: Sequence[float] = (),
    finest: float = 1e-3,
    ratio: float = 2.0,
    max_size: float = 0.1,
    growth: float = 1.5,
) -> np.ndarray:
    """Element breaks honouring ``required`` points, graded toward ``focus`` points.

    Elements touching a focus point have length ``finest`` and grow by
    ``ratio``.  Inside the core (up to the last required/focus point) lengths
    are capped by ``max_size``; beyond it the cap grows geometrically.
    """
    if not r_min < r_max:
        raise GridError("need r_min < r_max")
    pts = {float(r_min), float(r_max)}
    pts.update(float(x) for x in required if r_min < x < r_max)
    for f in focus:
        if not r_min <= f <= r_max:
            continue
        pts.add(float(f))
        for direction in (-1.0, 1.0):
            h, x = finest, f + direction * finest
            while r_min < x < r_max and h < max_size:
                pts.add(x)
                h *= ratio
                x += direction * h
    raw = np.array(sorted(pts))
    keep = [raw[0]]
    for x in raw[1:-1]:
        if x - keep[-1] > 0.25 * finest and r_max - x > 0.25 * finest:
            keep.append(x)
    keep.append(raw[-1])
    core_end = max([r_min, *[x for x in required if x < r_max], *[f for f in focus if f <= r_max]])

    def cap(x):
        return max_size if x < core_end else max_size + (growth - 1.0) * (x - core_end)

    out = [keep[0]]
    for a, b in zip(keep[:-1], keep[1:]):
        x = a
        while b - x > 1.5 * cap(x):
            x += cap(x)
            out.append(x)
        out.append(b)
    return np.array(out)


def make_grid(
    kind: str,
    r_min: float,
    r_max: float,
    n: int,
    clustering: float = 0.0,
    focus: Sequence[float] = (1.0,),
    degree: int = 16,
) -> RadialGrid:
    """Grid with about ``n`` nodes on ``[r_min, r_max]``.

    ``clustering = 0`` gives a single Lobatto element.  For ``clustering > 0`` the
    interval is split into elements whose sizes follow the density
    ``1 + clustering * L / (|r - f| + L/64)`` summed over the focus points and
    ``r = r_min`` (algebraic stretching); each element has ``degree`` intervals.
    """
    if kind not in ("inner", "outer", "global"):
        raise GridError(f"unknown grid kind {kind!r}")
    if n < 16:
        raise GridError("n must be at least 16")
    if not r_min < r_max:
        raise GridError("need r_min < r_max")
    if clustering <= 0:
        return composite_grid([r_min, r_max], n - 1, kind)
    m = max(1, int(round((n - 1) / degree)))
    if m < 2:
        raise GridError("n too small for the requested clustering")
    L = r_max - r_min
    s = np.linspace(r_min, r_max, 20001)
    dens = np.ones_like(s)
    for f in list(focus) + [r_min]:
        if r_min <= f <= r_max:
            dens += clustering * L / (np.abs(s - f) + L / 64)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(s))])
    cdf /= cdf[-1]
    breaks = np.interp(np.linspace(0, 1, m + 1), cdf, s)
    breaks[0], breaks[-1] = r_min, r_max
    return composite_grid(breaks, degree, kind)


# ----------------------------------------------------------------------------
# L_k
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """Weak-form ``L_k`` with Dirichlet conditions at both ends.

    ``matrix`` acts on interior nodal values and is symmetric; the nodal
    operator is ``W^-1 matrix``.
    """

    k: float
    grid: RadialGrid
    matrix: np.ndarray = field(repr=False)

    @cached_property
    def factorization(self):
        return sla.cho_factor(-self.matrix)

    @property
    def coefficient(self) -> float:
        return self.k * self.k - 0.25


def mode_operator(k: float, grid: RadialGrid, k_squared: float | None = None) -> ModeOperator:
    """Assemble ``L_k``.  ``k_squared`` overrides ``k**2`` (non-integer detunings)."""
    ksq = float(k) ** 2 if k_squared is None else float(k_squared)
    if ksq < 1.0:
        raise GridError("L_k needs |k| >= 1")
    I = grid.interior
    r = grid.nodes[I]
    w = grid.weights[I]
    mat = -grid.stiffness[np.ix_(I, I)] - np.diag((ksq - 0.25) * w / r**2)
    mat = 0.5 * (mat + mat.T)
    return ModeOperator(float(np.sqrt(ksq)), grid, mat)


def apply_Lk(op: ModeOperator, phi) -> np.ndarray:
    """Nodal ``phi'' - (k²-1/4) phi / r²`` at interior nodes; Dirichlet rows are 0.

    ``phi`` holds values at every node (boundary values included).
    """
    phi = np.asarray(phi)
    g = op.grid
    if phi.shape[0] != g.n:
        raise GridError(f"grid function has {phi.shape[0]} values, grid has {g.n}")
    I = g.interior
    out = np.zeros(phi.shape, dtype=np.result_type(phi, float))
    stiff = -(g.stiffness[I] @ phi) / g.weights[I]
    out[I] = stiff - op.coefficient * phi[I] / g.nodes[I] ** 2
    return out


def invert_Lk(op: ModeOperator, eta) -> np.ndarray:
    """Dirichlet solution of ``L_k phi = eta``; returns nodal values (zeros at the ends)."""
    eta = np.asarray(eta)
    g = op.grid
    if eta.shape[0] != g.n:
        raise GridError(f"grid function has {eta.shape[0]} values, grid has {g.n}")
    I = g.interior
    rhs = g.weights[I] * eta[I]
    sol = -sla.cho_solve(op.factorization, rhs)
    if not np.all(np.isfinite(sol)):
        raise GridError("singular factorization")
    out = np.zeros(eta.shape, dtype=np.result_type(eta, float))
    out[I] = sol
    return out


def Lk_inverse_matrix(op: ModeOperator) -> np.ndarray:
    """Dense nodal matrix of ``invert_Lk`` (rows/cols over all nodes)."""
    g = op.grid
    I = g.interior
    out = np.zeros((g.n, g.n))
    out[np.ix_(I, I)] = -sla.cho_solve(op.factorization, np.diag(g.weights[I]))
    return out


# ----------------------------------------------------------------------------
# norms
# ----------------------------------------------------------------------------


def inner(grid: RadialGrid, f, g) -> complex:
    """``int f conj(g) dr``."""
    return complex(np.dot(grid.weights, np.asarray(f) * np.conj(g)))


def _l2(grid: RadialGrid, f) -> float:
    return float(np.sqrt(np.dot(grid.weights, np.abs(f) ** 2)))


def _over_r(grid: RadialGrid, f, dfdr) -> np.ndarray:
    r = grid.nodes
    out = np.empty(np.shape(f), dtype=np.result_type(f, float))
    pos = r > 0
    out[pos] = f[pos] / r[pos]
    # f(0) = 0 is required; the quotient tends to f'(0)
    out[~pos] = dfdr[~pos]
    return out


def norm(grid: RadialGrid, f, which: str, M: float | None = None, k_scale: float = 1.0) -> float:
    """Discrete versions of the radial norms.

    ``H1_0``/``H1_dot``: ``sqrt(|f'|² + |f/r|²)``; ``H1 = sqrt(|f|² + H1_dot²)``;
    ``Z_M = sqrt(M) H1_dot``; ``H1_r = sum_{q=0,1} |r^q f'| + |r^(q-1) f|``.
    ``k_scale`` replaces ``1/r`` by ``k_scale/r``.
    """
    f = np.asarray(f)
    if which not in NORMS:
        raise GridError(f"unknown norm {which!r}")
    if which == "L2":
        return _l2(grid, f)
    df = grid.D @ f
    fr = k_scale * _over_r(grid, f, df)
    if which in ("H1_0", "H1_dot", "Z_M"):
        val = float(np.sqrt(_l2(grid, df) ** 2 + _l2(grid, fr) ** 2))
        if which == "Z_M":
            if M is None:
                raise GridError("Z_M needs M")
            val *= np.sqrt(M)
        return val
    if which == "H1":
        return float(np.sqrt(_l2(grid, f) ** 2 + _l2(grid, df) ** 2 + _l2(grid, fr) ** 2))
    r = grid.nodes
    return _l2(grid, df) + _l2(grid, fr) + _l2(grid, r * df) + _l2(grid, k_scale * f)


def norm_gram(grid: RadialGrid, which: str, M: float | None = None, k_scale: float = 1.0) -> np.ndarray:
    """Hermitian Gram matrix ``G`` with ``f^H G f`` the squared Hilbert version of ``which``.

    For ``H1_r`` (a sum of norms) this is the equivalent squared sum
    ``sum_q |r^q f'|² + |r^(q-1) f|²``.
    """
    W = np.diag(grid.weights)
    D = grid.D
    r = grid.nodes
    over_r = np.zeros((grid.n, grid.n))
    pos = r > 0
    over_r[pos, pos] = k_scale / r[pos]
    over_r[~pos] = k_scale * D[~pos]
    if which == "L2":
        return W
    terms = [D, over_r]
    if which == "H1":
        terms.append(np.eye(grid.n))
    if which == "H1_r":
        terms += [r[:, None] * D, k_scale * np.eye(grid.n)]
    G = sum(T.T @ W @ T for T in terms)
    if which == "Z_M":
        if M is None:
            raise GridError("Z_M needs M")
        G = M * G
    return G
