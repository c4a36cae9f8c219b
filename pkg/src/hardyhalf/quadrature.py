"""Adaptive Gauss-Kronrod quadrature in one and two variables.

The two-dimensional routines cover the axisymmetric reduction of integrals over
the half-space: an integrand f(r, y) is integrated against omega_{N-2} r^{N-2}
dr dy (the factor is 2 when N = 2).  Regions near the pole (0, 1) and regions
bounded by level sets of U are handled in polar coordinates about the pole, so
that the integrable singularity and the curved boundary both become coordinate
features instead of something the refinement has to discover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core_math import DomainError, sphere_area
from .potentials import U, PotentialContext, grad_U, level_radius, p_laplacian_U, singular_order


class SingularityError(DomainError):
    """The excluded pole disc carries mass but no singularity exponent was given."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_depth: int = 40
    pole_exclusion: float = 1e-6
    truncation: float = 1e6
    max_cells: int = 60000

    def __post_init__(self):
        if min(self.rel_tol, self.abs_tol, self.pole_exclusion, self.truncation) <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_depth < 4:
            raise DomainError("max_depth must be at least 4")

    def scaled(self, factor: float) -> "QuadratureSpec":
        return replace(self, rel_tol=self.rel_tol * factor, abs_tol=self.abs_tol * factor)


@dataclass
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        return IntegralResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
            self.converged and other.converged,
        )

    def scaled(self, c: float) -> "IntegralResult":
        return IntegralResult(c * self.value, abs(c) * self.error_estimate, self.evaluations, self.converged)


ZERO = IntegralResult(0.0, 0.0, 0, True)

# 15-point Kronrod rule with its embedded 7-point Gauss rule on [-1, 1].
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG7 = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
for _i, _w in zip((1, 3, 5), _WG7[:3]):
    GAUSS_WEIGHTS[_i] = _w
    GAUSS_WEIGHTS[14 - _i] = _w
GAUSS_WEIGHTS[7] = _WG7[3]


def _target(value: float, spec: QuadratureSpec) -> float:
    return max(spec.rel_tol * abs(value), spec.abs_tol)


def _pick(err: np.ndarray, splittable: np.ndarray) -> np.ndarray:
    """Indices of the splittable cells that carry the top half of the error."""
    idx = np.flatnonzero(splittable)
    if idx.size == 0:
        return idx
    order = idx[np.argsort(-err[idx], kind="stable")]
    cum = np.cumsum(err[order])
    k = int(np.searchsorted(cum, 0.5 * cum[-1])) + 1
    return order[:k]


# ---------------------------------------------------------------- one variable

def _gk_1d(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    k = half * (fx @ KRONROD_WEIGHTS)
    g = half * (fx @ GAUSS_WEIGHTS)
    return k, np.abs(k - g)


def _adapt_1d(f, edges, spec: QuadratureSpec, max_intervals: int = 20000, return_intervals: bool = False):
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1].copy(), edges[1:].copy()
    depth = np.zeros(a.size, dtype=int)
    val, err = _gk_1d(f, a, b)
    evals = 15 * a.size
    converged = False
    while True:
        total, total_err = float(np.sum(val)), float(np.sum(err))
        if total_err <= _target(total, spec):
            converged = True
            break
        if a.size >= max_intervals:
            break
        # stop splitting below the roundoff level of the interval
        room = (depth < spec.max_depth) & ((b - a) > 64 * np.finfo(float).eps * np.maximum(np.abs(a), np.abs(b)))
        sel = _pick(err, room)
        if sel.size == 0:
            break
        m = 0.5 * (a[sel] + b[sel])
        na = np.concatenate([a[sel], m])
        nb = np.concatenate([m, b[sel]])
        nv, ne = _gk_1d(f, na, nb)
        evals += 15 * na.size
        keep = np.ones(a.size, dtype=bool)
        keep[sel] = False
        nd = np.concatenate([depth[sel], depth[sel]]) + 1
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        depth = np.concatenate([depth[keep], nd])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
    order = np.argsort(a, kind="stable")
    res = IntegralResult(float(np.sum(val[order])), float(np.sum(err)), evals, converged)
    if return_intervals:
        return res, (a[order], b[order], val[order])
    return res


def _shell_sum(shell: Callable[[int], IntegralResult], spec: QuadratureSpec,
               outer: Callable[[int], float], first: IntegralResult) -> IntegralResult:
    """Add dyadic shells until the remaining tail is negligible.

    After each shell the tail is extrapolated geometrically from the last two
    shell values, which is exact for power-law decay on dyadic shells.  The
    change of that extrapolation between consecutive shells is the tail error.
    """
    acc = first
    prev_val = None
    prev_est = None
    k = 0
    while True:
        if outer(k) > spec.truncation:
            return IntegralResult(acc.value, acc.error_estimate + abs(prev_val or 0.0), acc.evaluations, False)
        s = shell(k)
        acc = acc + s
        if prev_val is not None:
            if s.value == 0.0 and prev_val == 0.0:
                return acc
            tgt = _target(acc.value, spec)
            rho = s.value / prev_val if prev_val != 0.0 else math.inf
            tail = s.value * rho / (1.0 - rho) if 0.0 <= rho < 1.0 else None
            est = None if tail is None else acc.value + tail
            if est is not None and prev_est is not None and abs(est - prev_est) <= tgt:
                return IntegralResult(est, acc.error_estimate + abs(est - prev_est),
                                      acc.evaluations, acc.converged)
            if max(abs(s.value), abs(prev_val)) <= tgt:
                extra = tail if tail is not None else 0.0
                return IntegralResult(acc.value + extra, acc.error_estimate + abs(s.value) + abs(extra),
                                      acc.evaluations, acc.converged)
            prev_est = est
        prev_val = s.value
        k += 1


def _singular_left(f, a: float, b: float, spec: QuadratureSpec, points=()) -> IntegralResult:
    """Geometric subdivision toward a, with the last piece [a, a + delta] extrapolated.

    For f ~ (t - a)^gamma the contributions of the dyadic pieces form a geometric
    sequence, so the excluded piece is the sum of its continuation.
    """
    L = b - a
    rel = [x - a for x in points if a < x < b]
    top = min(rel) if rel else L
    geo = _geometric_edges(spec.pole_exclusion * L, top)
    delta = geo[0]
    edges = sorted(set([a + e for e in geo] + [a + x for x in rel] + [b]))
    res, (ia, ib, iv) = _adapt_1d(f, edges, spec, return_intervals=True)

    def piece(lo, hi):
        m = (ia >= a + lo * (1 - 1e-12)) & (ib <= a + hi * (1 + 1e-12))
        return float(np.sum(iv[m]))

    r1, r2, r3 = piece(delta, 2 * delta), piece(2 * delta, 4 * delta), piece(4 * delta, 8 * delta)

    def extrapolate(x, y):
        rho = x / y if y != 0.0 else math.inf
        return x * rho / (1.0 - rho) if 0.0 <= rho < 1.0 else None

    if r1 == 0.0 and r2 == 0.0 and r3 == 0.0:
        # f vanishes next to the endpoint, so the excluded piece contributes nothing
        return res
    t1 = extrapolate(r1, r2)
    t2 = extrapolate(r2, r3)
    if t1 is None:
        return IntegralResult(res.value, res.error_estimate + abs(r1), res.evaluations, False)
    t_alt = t1 if t2 is None else t2 * (r1 / r2)
    terr = abs(t1 - t_alt)
    ok = res.converged and terr <= _target(res.value + t1, spec)
    return IntegralResult(res.value + t1, res.error_estimate + terr, res.evaluations, ok)


def integrate_1d(f: Callable, a: float, b: float, spec: Optional[QuadratureSpec] = None,
                 points: Sequence[float] = (), singular: Optional[str] = None,
                 log_left: bool = False) -> IntegralResult:
    """Adaptive 15/7-point Gauss-Kronrod integration of a vectorised f over (a, b).

    ``singular`` in {"left", "right", "both"} declares integrable power-type
    endpoint singularities, which are treated by geometric subdivision with a
    geometric extrapolation of the innermost piece.  ``log_left`` integrates in
    u = log(t - a) instead, for logarithmic endpoint behaviour; the variable u
    is cut where t - a would underflow and the rest is extrapolated.  b may be
    +inf, in which case the integral is accumulated over dyadic shells.
    """
    spec = spec or QuadratureSpec()
    if not a < b:
        raise DomainError("integrate_1d needs a < b")
    pts = sorted(x for x in points if a < x < b)
    if log_left:
        if math.isinf(b):
            raise DomainError("log_left needs a finite upper limit")
        g = lambda u: f(a + np.exp(u)) * np.exp(u)
        inner = [math.log(x - a) for x in pts]
        return _integrate_to_minus_inf(g, math.log(b - a), inner, spec)
    if math.isinf(b):
        if singular in ("right", "both"):
            raise DomainError("an infinite endpoint cannot be declared singular")
        lead = max([1.0, abs(a)] + [x - a for x in pts])
        if singular == "left":
            first = _singular_left(f, a, a + lead, spec, pts)
        else:
            first = _adapt_1d(f, [a] + pts + [a + lead], spec)
        return _shell_sum(lambda k: _adapt_1d(f, [a + lead * 2 ** k, a + lead * 2 ** (k + 1)], spec),
                          spec, lambda k: lead * 2 ** (k + 1), first)
    if singular is None:
        return _adapt_1d(f, [a] + pts + [b], spec)
    if singular == "left":
        return _singular_left(f, a, b, spec, pts)
    if singular == "right":
        g = lambda x: f(a + b - x)
        return _singular_left(g, a, b, spec, [a + b - x for x in pts])
    if singular == "both":
        m = pts[len(pts) // 2] if pts else 0.5 * (a + b)
        left = _singular_left(f, a, m, spec, [x for x in pts if x < m])
        g = lambda x: f(m + b - x)
        right = _singular_left(g, m, b, spec, [m + b - x for x in pts if x > m])
        return left + right
    raise DomainError(f"unknown singular mode {singular!r}")


def _integrate_to_minus_inf(g, hi, inner, spec):
    """Integral of g over (-inf, hi] by shells [-2W, -W], [-4W, -2W], ... centred on u = 0.

    Shells anchored at the origin make a pure power law in u exactly geometric.
    """
    W = max([1.0, 1.0 - hi] + [1.0 - x for x in inner])
    first = _adapt_1d(g, sorted({-W, hi, *inner}), spec)
    # exp(u) must stay representable
    cut = replace(spec, truncation=min(spec.truncation, 700.0))
    return _shell_sum(lambda k: _adapt_1d(g, [-W * 2 ** (k + 1), -W * 2 ** k], spec),
                      cut, lambda k: W * 2 ** (k + 1), first)


def integrate_radial_ball(N: int, g: Callable, spec: Optional[QuadratureSpec] = None,
                          points: Sequence[float] = (), radius: float = 1.0,
                          singular: Optional[str] = None) -> IntegralResult:
    """omega_{N-1} times the integral of g(t) t^{N-1} over (0, radius)."""
    omega = sphere_area(N)
    res = integrate_1d(lambda t: g(t) * t ** (N - 1), 0.0, radius, spec, points, singular=singular)
    return res.scaled(omega)


def integrate_radial_rn(N: int, g: Callable, spec: Optional[QuadratureSpec] = None,
                        points: Sequence[float] = (), support_end: Optional[float] = None,
                        singular: Optional[str] = None) -> IntegralResult:
    """omega_{N-1} times the integral of g(r) r^{N-1} over (0, inf)."""
    omega = sphere_area(N)
    h = lambda t: g(t) * t ** (N - 1)
    end = support_end if support_end is not None and math.isfinite(support_end) else math.inf
    res = integrate_1d(h, 0.0, end, spec, points, singular=singular)
    return res.scaled(omega)


# --------------------------------------------------------------- two variables

def _gk_2d(F, u0, u1, v0, v1):
    hu = 0.5 * (u1 - u0)
    hv = 0.5 * (v1 - v0)
    Uq = (0.5 * (u0 + u1))[:, None, None] + hu[:, None, None] * NODES[None, :, None]
    Vq = (0.5 * (v0 + v1))[:, None, None] + hv[:, None, None] * NODES[None, None, :]
    Uq, Vq = np.broadcast_arrays(Uq, Vq)
    fx = np.asarray(F(Uq, Vq), dtype=float)
    area = hu * hv
    k = area * np.einsum("nij,i,j->n", fx, KRONROD_WEIGHTS, KRONROD_WEIGHTS)
    g = area * np.einsum("nij,i,j->n", fx, GAUSS_WEIGHTS, GAUSS_WEIGHTS)
    kabs = area * np.einsum("nij,i,j->n", np.abs(fx), KRONROD_WEIGHTS, KRONROD_WEIGHTS)
    return k, np.abs(k - g), kabs


@dataclass
class _Cells:
    u0: np.ndarray
    u1: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    depth: np.ndarray
    val: np.ndarray
    err: np.ndarray


def _adapt_2d(F, u_edges, v_edges, spec: QuadratureSpec, indicator=None, tol_floor: float = 0.0):
    """Adaptive tensor Gauss-Kronrod over a rectangle grid; returns (result, cells).

    With an ``indicator`` the integrand is F * indicator; a cell whose corners
    and midpoint disagree on the indicator is a straddle cell.  Straddle cells
    are refined like any other cell; once they hit max_depth they are counted
    at half weight and the other half goes into the error estimate.
    """
    ue = np.asarray(u_edges, dtype=float)
    ve = np.asarray(v_edges, dtype=float)
    U0, V0 = np.meshgrid(ue[:-1], ve[:-1], indexing="ij")
    U1, V1 = np.meshgrid(ue[1:], ve[1:], indexing="ij")
    u0, u1, v0, v1 = U0.ravel(), U1.ravel(), V0.ravel(), V1.ravel()

    def evaluate(u0, u1, v0, v1, depth):
        if indicator is None:
            k, e, _ = _gk_2d(F, u0, u1, v0, v1)
            return k, e
        G = lambda U, V: F(U, V) * indicator(U, V)
        k, e, _ = _gk_2d(G, u0, u1, v0, v1)
        # corners pulled slightly inwards so a boundary on a cell edge is not a straddle
        du, dv = 1e-9 * (u1 - u0), 1e-9 * (v1 - v0)
        cu = np.stack([u0 + du, u1 - du, u0 + du, u1 - du, 0.5 * (u0 + u1)])
        cv = np.stack([v0 + dv, v0 + dv, v1 - dv, v1 - dv, 0.5 * (v0 + v1)])
        flags = np.asarray(indicator(cu, cv), dtype=bool)
        straddle = flags.any(axis=0) & ~flags.all(axis=0)
        if np.any(straddle):
            kf, _, kabs = _gk_2d(F, u0[straddle], u1[straddle], v0[straddle], v1[straddle])
            deep = depth[straddle] >= spec.max_depth
            k_s = k[straddle]
            e_s = np.maximum(e[straddle], 0.5 * kabs)
            k_s = np.where(deep, 0.5 * kf, k_s)
            k = k.copy()
            e = e.copy()
            k[straddle] = k_s
            e[straddle] = e_s
        return k, e

    depth = np.zeros(u0.size, dtype=int)
    val, err = evaluate(u0, u1, v0, v1, depth)
    evals = 225 * u0.size
    converged = False
    while True:
        total = float(np.sum(val))
        total_err = float(np.sum(err))
        if total_err <= max(_target(total, spec), tol_floor):
            converged = True
            break
        if u0.size >= spec.max_cells:
            break
        sel = _pick(err, depth < spec.max_depth)
        if sel.size == 0:
            break
        um = 0.5 * (u0[sel] + u1[sel])
        vm = 0.5 * (v0[sel] + v1[sel])
        nu0 = np.concatenate([u0[sel], um, u0[sel], um])
        nu1 = np.concatenate([um, u1[sel], um, u1[sel]])
        nv0 = np.concatenate([v0[sel], v0[sel], vm, vm])
        nv1 = np.concatenate([vm, vm, v1[sel], v1[sel]])
        nd = np.tile(depth[sel] + 1, 4)
        nv, ne = evaluate(nu0, nu1, nv0, nv1, nd)
        evals += 225 * nu0.size
        keep = np.ones(u0.size, dtype=bool)
        keep[sel] = False
        u0 = np.concatenate([u0[keep], nu0])
        u1 = np.concatenate([u1[keep], nu1])
        v0 = np.concatenate([v0[keep], nv0])
        v1 = np.concatenate([v1[keep], nv1])
        depth = np.concatenate([depth[keep], nd])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
    # fixed summation order keeps the total reproducible
    order = np.lexsort((v0, u0))
    cells = _Cells(u0[order], u1[order], v0[order], v1[order], depth[order], val[order], err[order])
    res = IntegralResult(float(np.sum(cells.val)), float(np.sum(cells.err)), evals, converged)
    return res, cells


def _axis_factor(N: int) -> float:
    """omega_{N-2}; equals 2 for N = 2, matching x in R^1 with r = |x|."""
    return sphere_area(N - 1)


def integrate_halfspace_axisym(N: int, f: Callable, spec: Optional[QuadratureSpec] = None, *,
                               box: Optional[tuple] = None, indicator: Optional[Callable] = None,
                               singular_exponent: Optional[float] = None,
                               points_r: Sequence[float] = (), points_y: Sequence[float] = ()) -> IntegralResult:
    """Integral over the half-space of an axisymmetric integrand f(r, y).

    Without ``singular_exponent`` the integrand is treated on a Cartesian grid:
    over ``box = (r_max, y_min, y_max)`` when given, otherwise over (0, inf)^2
    with dyadic square shells.  With ``singular_exponent`` beta the pole (0, 1)
    is excluded down to ``pole_exclusion`` and integrated in polar coordinates;
    the excluded disc is estimated from the power law d_-^{-beta}.
    """
    spec = spec or QuadratureSpec()
    if singular_exponent is not None:
        return integrate_about_pole(N, f, spec, beta=singular_exponent)
    c = _axis_factor(N)
    F = lambda R, Y: f(R, Y) * R ** (N - 2)
    ind = None
    if indicator is not None:
        ind = lambda R, Y: indicator(R, Y)
    if box is not None:
        r_max, y_min, y_max = box
        ue = sorted({0.0, float(r_max), *[x for x in points_r if 0 < x < r_max]})
        ve = sorted({float(y_min), float(y_max), *[x for x in points_y if y_min < x < y_max]})
        res, _ = _adapt_2d(F, ue, ve, spec, indicator=ind)
        return res.scaled(c)
    ue = sorted({0.0, 1.0, *[x for x in points_r if 0 < x < 1]})
    ve = sorted({0.0, 1.0, *[x for x in points_y if 0 < x < 1]})
    first, _ = _adapt_2d(F, ue, ve, spec, indicator=ind)

    def shell(k):
        L0, L1 = 2.0 ** k, 2.0 ** (k + 1)
        parts = [((L0, L1), (0.0, L0)), ((0.0, L0), (L0, L1)), ((L0, L1), (L0, L1))]
        acc = ZERO
        for (ra, rb), (ya, yb) in parts:
            ue = sorted({ra, rb, *[x for x in points_r if ra < x < rb]})
            ve = sorted({ya, yb, *[x for x in points_y if ya < x < yb]})
            res, _ = _adapt_2d(F, ue, ve, spec, indicator=ind, tol_floor=spec.rel_tol * abs(first.value))
            acc = acc + res
        return acc

    res = _shell_sum(shell, spec, lambda k: 2.0 ** (k + 1), first)
    return res.scaled(c)


# ------------------------------------------------------ polar about a centre

def _geometric_edges(lo: float, hi: float = 1.0, ratio: float = 2.0):
    """hi, hi/ratio, ... down to the first edge at or below lo (exact dyadic rings)."""
    edges = [hi]
    while edges[-1] > lo * (1.0 + 1e-12):
        edges.append(edges[-1] / ratio)
    return sorted(edges)


def integrate_polar(N: int, f: Callable, spec: Optional[QuadratureSpec] = None, *,
                    center_y: float = 1.0, outer: Callable, inner: Optional[Callable] = None,
                    beta: Optional[float] = None, sigma_points: Sequence[float] = (),
                    theta_points: Sequence[float] = (), inverse_linear: bool = False) -> IntegralResult:
    """Integral of f(r, y) over a region star-shaped about (0, center_y).

    The region is inner(theta) < rho < outer(theta) in polar coordinates
    (r, y) = (rho sin theta, center_y + rho cos theta), theta in [0, pi].  It is
    mapped onto sigma in [0, 1], linearly in rho, or linearly in 1/rho when
    ``inverse_linear`` is set (this allows outer = inf).  Without ``inner`` the
    region contains the centre; with ``beta`` set the centre is treated as a
    singular point of order d^{-beta}, excluded below sigma = pole_exclusion and
    restored by a power-law tail estimate.
    """
    spec = spec or QuadratureSpec()
    c = _axis_factor(N)

    def radii(T):
        rout = np.asarray(outer(T), dtype=float)
        rin = np.zeros_like(rout) if inner is None else np.asarray(inner(T), dtype=float)
        return rin, rout

    def F(S, T):
        # many nodes share theta; evaluate the boundary radii once per distinct value
        tu, inv = np.unique(T, return_inverse=True)
        rin_u, rout_u = radii(tu)
        rin = rin_u[inv].reshape(T.shape)
        rout = rout_u[inv].reshape(T.shape)
        if inverse_linear:
            w_in = 1.0 / rin
            w_out = np.where(np.isfinite(rout), 1.0 / rout, 0.0)
            rho = 1.0 / ((1.0 - S) * w_in + S * w_out)
            jac = rho * rho * (w_in - w_out)
        else:
            rho = rin + S * (rout - rin)
            jac = rout - rin
        st = np.sin(T)
        R = rho * st
        Y = center_y + rho * np.cos(T)
        return f(R, Y) * jac * rho * R ** (N - 2)

    theta_edges = sorted({0.0, 0.5 * math.pi, math.pi, *[t for t in theta_points if 0 < t < math.pi]})
    pts = sorted(x for x in sigma_points if 0 < x < 1)
    singular = inner is None
    if singular:
        geo = _geometric_edges(spec.pole_exclusion, pts[0] if pts else 1.0)
        d0 = geo[0]
        sig_edges = sorted(set(geo + pts + [1.0]))
    else:
        sig_edges = sorted({0.0, 1.0, *pts})
    res, cells = _adapt_2d(F, sig_edges, theta_edges, spec)
    res = res.scaled(c)
    if not singular:
        return res
    ring1 = c * float(np.sum(cells.val[(cells.u0 >= d0 * (1 - 1e-12)) & (cells.u1 <= 2 * d0 * (1 + 1e-12))]))
    ring2 = c * float(np.sum(cells.val[(cells.u0 >= 2 * d0 * (1 - 1e-12)) & (cells.u1 <= 4 * d0 * (1 + 1e-12))]))
    if beta is None:
        if abs(ring1) > spec.abs_tol:
            raise SingularityError(
                "the excluded disc is not negligible; pass the singularity exponent beta")
        return IntegralResult(res.value, res.error_estimate + abs(ring1), res.evaluations, res.converged)
    if not beta < N:
        raise DomainError("singularity exponent must be below N for integrability")
    q = 2.0 ** (N - beta)
    tail = ring1 / (q - 1.0)
    tail_alt = ring2 / (q - 1.0) / q
    return IntegralResult(res.value + tail, res.error_estimate + abs(tail - tail_alt),
                          res.evaluations, res.converged)


def integrate_about_pole(N: int, f: Callable, spec: Optional[QuadratureSpec] = None, *,
                         beta: Optional[float] = None, radius: Optional[float] = None) -> IntegralResult:
    """Integral over the whole half-space (or the disc of given radius about the pole)."""
    spec = spec or QuadratureSpec()
    rad = 1.0 if radius is None else float(radius)
    if rad > 1.0:
        raise DomainError("a disc about the pole must stay inside the half-space")
    disc = integrate_polar(N, f, spec, center_y=1.0, outer=lambda T: np.full(np.shape(T), rad), beta=beta)
    if radius is not None:
        return disc
    rest = integrate_polar(N, f, spec, center_y=1.0, inner=lambda T: np.ones(np.shape(T)),
                           outer=_boundary_radius, inverse_linear=True)
    return disc + rest


def _boundary_radius(T):
    """Distance from the pole to the boundary y = 0 along theta; inf for upward rays."""
    ct = np.cos(T)
    down = ct < 0.0
    return np.where(down, -1.0 / np.where(down, ct, -1.0), np.inf)


def integrate_between_levels(ctx: PotentialContext, f: Callable, levels: Sequence[float],
                             spec: Optional[QuadratureSpec] = None, beta: Optional[float] = None,
                             theta_points: Sequence[float] = ()) -> IntegralResult:
    """Integral of f over the superlevel set {U > levels[0]}, split at every level.

    levels[0] may be 0, which means the whole half-space.  Each band between
    consecutive levels is integrated in polar coordinates about the pole with
    both level curves as exact coordinate boundaries; the innermost band
    {U > levels[-1]} contains the pole and uses the singular treatment with
    exponent ``beta``.
    """
    spec = spec or QuadratureSpec()
    lv = sorted(set(float(s) for s in levels))
    if not lv or lv[0] < 0.0:
        raise DomainError("levels must be nonnegative")
    if lv[-1] == 0.0:
        # the inner band needs a positive level; take the value at unit distance above the pole
        lv.append(float(U(ctx, 0.0, 2.0)))
    N = ctx.N
    radius = lambda s: (lambda T: level_radius(ctx, T, s))
    res = integrate_polar(N, f, spec, outer=radius(lv[-1]), beta=beta, theta_points=theta_points)
    for lo, hi in zip(lv[:-1], lv[1:]):
        if lo == 0.0:
            part = integrate_polar(N, f, spec, inner=radius(hi), outer=_boundary_radius,
                                   inverse_linear=True, theta_points=theta_points)
        else:
            part = integrate_polar(N, f, spec, inner=radius(hi), outer=radius(lo),
                                   theta_points=theta_points)
        res = res + part
    return res


def superlevel_integral(ctx: PotentialContext, s: float, spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """F_p(s): integral of the p-Laplacian defect -Delta_p U over {U > s}."""
    if not s > 0.0:
        raise DomainError("superlevel_integral needs s > 0")
    if ctx.p == 2.0 or ctx.critical:
        return IntegralResult(0.0, 0.0, 0, True)
    f = lambda R, Y: p_laplacian_U(ctx, R, Y)
    return integrate_between_levels(ctx, f, [s], spec, beta=singular_order(ctx))


def superlevel_flux(ctx: PotentialContext, s: float, spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """F_p(s) by the divergence theorem: the flux of |grad U|^{p-1} through {U = s} minus 1.

    The unit is the flux through a small sphere about the pole, where U behaves
    like the fundamental solution.  The level curve is parametrised by its polar
    angle about the pole, with d rho / d theta from implicit differentiation.
    """
    if not s > 0.0:
        raise DomainError("superlevel_flux needs s > 0")
    spec = spec or QuadratureSpec()
    N, p = ctx.N, ctx.p
    def g(T):
        rho = level_radius(ctx, T, s)
        st, ct = np.sin(T), np.cos(T)
        R, Y = rho * st, 1.0 + rho * ct
        ur, uy = grad_U(ctx, R, Y)
        u_rho = ur * st + uy * ct
        u_theta = (ur * ct - uy * st) * rho
        arc = np.sqrt(rho * rho + (u_theta / u_rho) ** 2)
        return np.hypot(ur, uy) ** (p - 1.0) * arc * R ** (N - 2)

    res = integrate_1d(g, 0.0, math.pi, spec, points=(0.5 * math.pi,)).scaled(_axis_factor(N))
    return IntegralResult(res.value - 1.0, res.error_estimate, res.evaluations, res.converged)


# ------------------------------------------------- product rule on a ball in R^N

def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _ball_rule(N: int, center, radius: float, n: int):
    """Nodes and weights of a spherical product rule on B(center, radius), N in {2, 3}."""
    xr, wr = _gauss_legendre(n)
    panels = 4
    s_nodes, s_w = [], []
    for j in range(panels):
        a, b = radius * j / panels, radius * (j + 1) / panels
        s_nodes.append(0.5 * (a + b) + 0.5 * (b - a) * xr)
        s_w.append(0.5 * (b - a) * wr)
    s = np.concatenate(s_nodes)
    ws = np.concatenate(s_w) * s ** (N - 1)
    m = 2 * n
    phi = 2.0 * math.pi * np.arange(m) / m
    wphi = np.full(m, 2.0 * math.pi / m)
    if N == 2:
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        wd = wphi
    elif N == 3:
        ct, wct = _gauss_legendre(n)
        st = np.sqrt(1.0 - ct ** 2)
        dirs = np.stack([
            (st[:, None] * np.cos(phi)[None, :]).ravel(),
            (st[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(ct, m),
        ], axis=-1)
        wd = (wct[:, None] * wphi[None, :]).ravel()
    else:
        raise DomainError("the ball product rule is implemented for N = 2 and N = 3")
    pts = np.asarray(center, dtype=float)[None, None, :] + s[:, None, None] * dirs[None, :, :]
    w = ws[:, None] * wd[None, :]
    return pts.reshape(-1, N), w.ravel()


def integrate_ball_nd(N: int, f: Callable, center, radius: float, n: int = 24) -> IntegralResult:
    """Integral of f over the ball B(center, radius) in R^N by a spherical product rule.

    f receives an array of points of shape (m, N).  The error estimate is the
    difference between rules with n and 2n points per direction.
    """
    p1, w1 = _ball_rule(N, center, radius, n)
    p2, w2 = _ball_rule(N, center, radius, 2 * n)
    v1 = float(np.dot(w1, f(p1)))
    v2 = float(np.dot(w2, f(p2)))
    return IntegralResult(v2, abs(v2 - v1), w1.size + w2.size, True)
