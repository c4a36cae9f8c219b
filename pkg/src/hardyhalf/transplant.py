"""Harmonic transplantation between balls, R^N and the half-space.

Radial functions are transported by matching Green-function levels.  On the
half-space the level function is U_p, so a transplanted function has the form
u(x, y) = u~(U_p(x, y)).  For 2 < p < N (or p < 2) U_p is not p-harmonic and the
transported energies pick up a correction weighted by
F_p(s) = integral of -Delta_p U_p over {U_p > s}.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .core_math import DomainError, Params, sphere_area
from .potentials import (
    PotentialContext,
    U,
    grad_U_norm,
    green_ball,
    green_ball_inverse,
    green_radial_derivative,
    green_rn,
    green_rn_inverse,
    hardy_weight,
)
from .quadrature import (
    IntegralResult,
    QuadratureSpec,
    integrate_1d,
    integrate_between_levels,
    superlevel_integral,
)


class InvalidProfileError(DomainError):
    """A radial profile violates its boundary condition or knot ordering."""


@dataclass(frozen=True)
class RadialProfile:
    """A radial function v(t) with derivative, support end and non-smooth knots."""

    value: Callable
    derivative: Callable
    support_end: float = math.inf
    breakpoints: Tuple[float, ...] = ()

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        if list(bp) != sorted(bp) or any(b <= 0.0 for b in bp):
            raise InvalidProfileError("breakpoints must be positive and sorted")
        object.__setattr__(self, "breakpoints", bp)
        if math.isfinite(self.support_end):
            if not self.support_end > 0.0:
                raise InvalidProfileError("support_end must be positive")
            if abs(float(self.value(np.float64(self.support_end)))) > 1e-12:
                raise InvalidProfileError("profile must vanish at support_end")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if math.isfinite(self.support_end):
            inside = t < self.support_end
            return np.where(inside, self.value(np.where(inside, t, 0.0)), 0.0)
        return self.value(t)

    def d(self, t):
        t = np.asarray(t, dtype=float)
        if math.isfinite(self.support_end):
            inside = t < self.support_end
            return np.where(inside, self.derivative(np.where(inside, t, 0.0)), 0.0)
        return self.derivative(t)

    def knots(self, upper: float) -> list:
        end = min(upper, self.support_end)
        return [b for b in self.breakpoints if 0.0 < b < end]


def zero_profile(support_end: float = 1.0) -> RadialProfile:
    return RadialProfile(lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                         lambda t: np.zeros_like(np.asarray(t, dtype=float)), support_end)


@dataclass(frozen=True)
class SymmetricFunction:
    """u(x, y) = u~(U_p(x, y)) with u~(s) = 0 for s <= s_min.

    ``energy_pole_order`` and ``hardy_pole_order`` are the exponents beta with
    |integrand| = O(d_-^{-beta}) at the pole for the gradient energy and for the
    improved Hardy integral; the quadrature restores the excluded disc from them.
    ``origin`` records the radial profile the function was transplanted from.
    """

    profile: Callable
    derivative: Callable
    ctx: PotentialContext
    s_min: float = 0.0
    s_breakpoints: Tuple[float, ...] = ()
    energy_pole_order: float = 0.0
    hardy_pole_order: Optional[float] = None
    origin: Optional[Tuple[str, RadialProfile]] = field(default=None, compare=False)

    def __call__(self, r, y):
        return self.profile(U(self.ctx, r, y))

    def grad_norm(self, r, y):
        return np.abs(self.derivative(U(self.ctx, r, y))) * grad_U_norm(self.ctx, r, y)

    @property
    def levels(self) -> list:
        return sorted({self.s_min, *[s for s in self.s_breakpoints if s > self.s_min]})


def _require_zero(v: RadialProfile, t: float):
    if t < v.support_end and abs(float(v.value(np.float64(t)))) > 1e-12:
        raise InvalidProfileError(f"profile must vanish at t = {t}")


def _hardy_order(ctx: PotentialContext) -> Optional[float]:
    return None if ctx.critical else float(ctx.p)


def transplant_from_ball(ctx: PotentialContext, v: RadialProfile) -> SymmetricFunction:
    """u(x, y) = v(t) where U_p(x, y) = G_ball(t)."""
    _require_zero(v, 1.0)
    end = min(v.support_end, 1.0)

    def prof(s):
        return v(green_ball_inverse(ctx, s))

    def dprof(s):
        t = green_ball_inverse(ctx, s)
        return v.d(t) / green_radial_derivative(ctx, t)

    s_min = 0.0 if end >= 1.0 else float(green_ball(ctx, end))
    bps = tuple(sorted(float(green_ball(ctx, b)) for b in v.knots(1.0)))
    return SymmetricFunction(prof, dprof, ctx, s_min, bps, 0.0, _hardy_order(ctx), ("ball", v))


def transplant_from_rn(ctx: PotentialContext, w: RadialProfile) -> SymmetricFunction:
    """u(x, y) = w(r) where U_p(x, y) = G_{R^N}(r); needs p < N."""
    if ctx.critical:
        raise DomainError("the whole-space transplantation needs p < N")
    if not math.isfinite(w.support_end):
        raise InvalidProfileError("whole-space profiles need a finite support end")

    def prof(s):
        return w(green_rn_inverse(ctx, np.maximum(s, 1e-300)))

    def dprof(s):
        r = green_rn_inverse(ctx, np.maximum(s, 1e-300))
        return w.d(r) / green_radial_derivative(ctx, r)

    s_min = float(green_rn(ctx, w.support_end))
    bps = tuple(sorted(float(green_rn(ctx, b)) for b in w.knots(w.support_end)))
    return SymmetricFunction(prof, dprof, ctx, s_min, bps, 0.0, _hardy_order(ctx), ("rn", w))


# ------------------------------------------------------------ radial transforms

def _ball_green_exponent(N: int, p: float) -> float:
    return (N - p) / (p - 1.0)


def classical_transplant_ball_to_ball(params: Params, R: float, v: RadialProfile) -> RadialProfile:
    """Radial u on B_R with u(rho) = v(t) where G_{B_1}(t) = G_{B_R}(rho)."""
    N, p = params.N, params.p
    if not R > 0.0:
        raise DomainError("R must be positive")
    _require_zero(v, 1.0)
    if params.critical:
        def t_of(rho):
            return np.asarray(rho, dtype=float) / R
    else:
        k = _ball_green_exponent(N, p)

        def t_of(rho):
            rho = np.asarray(rho, dtype=float)
            return (rho ** (-k) - R ** (-k) + 1.0) ** (-1.0 / k)
    m = (N - 1.0) / (p - 1.0)

    def val(rho):
        return v(t_of(rho))

    def der(rho):
        rho = np.asarray(rho, dtype=float)
        t = t_of(rho)
        # dt/drho from G_B1'(t) dt = G_BR'(rho) drho
        return v.d(t) * (t / rho) ** m

    if params.critical:
        bps = tuple(b * R for b in v.knots(1.0))
    else:
        k = _ball_green_exponent(N, p)
        bps = tuple((b ** (-k) - 1.0 + R ** (-k)) ** (-1.0 / k) for b in v.knots(1.0))
    return RadialProfile(val, der, R, bps)




def moser_transform(N: int, u: RadialProfile, R: float = 1.0, p: Optional[float] = None) -> RadialProfile:
    """v(z) = u(r) where G_{B_R}(r) = z; the critical case p = N is the Moser change of variables."""
    p = float(N) if p is None else float(p)
    ctx = PotentialContext.of(N, p)
    _require_zero(u, R)
    omega = sphere_area(N)
    if ctx.critical:
        c = omega ** (1.0 / (N - 1.0))

        def r_of(z):
            return R * np.exp(-c * np.asarray(z, dtype=float))
    else:
        k = _ball_green_exponent(N, p)

        def r_of(z):
            return (np.asarray(z, dtype=float) / ctx.c_np + R ** (-k)) ** (-1.0 / k)

    def val(z):
        return u(r_of(z))

    def der(z):
        r = r_of(z)
        # dr/dz = 1 / G'(r)
        return u.d(r) / green_radial_derivative(ctx, r)

    def z_of(r):
        if ctx.critical:
            return math.log(R / r) / omega ** (1.0 / (N - 1.0))
        k = _ball_green_exponent(N, p)
        return ctx.c_np * (r ** (-k) - R ** (-k))

    bps = tuple(sorted(z_of(b) for b in u.knots(R)))
    return RadialProfile(val, der, math.inf, bps)


def moser_inverse(N: int, v: RadialProfile, R: float = 1.0, p: Optional[float] = None) -> RadialProfile:
    """u(r) = v(G_{B_R}(r)), the inverse of moser_transform."""
    p = float(N) if p is None else float(p)
    ctx = PotentialContext.of(N, p)
    omega = sphere_area(N)
    if ctx.critical:
        def z_of(r):
            return np.log(R / np.asarray(r, dtype=float)) / omega ** (1.0 / (N - 1.0))
    else:
        k = _ball_green_exponent(N, p)

        def z_of(r):
            return ctx.c_np * (np.asarray(r, dtype=float) ** (-k) - R ** (-k))

    def val(r):
        return v(z_of(r))

    def der(r):
        return v.d(z_of(r)) * green_radial_derivative(ctx, np.asarray(r, dtype=float))

    return RadialProfile(val, der, R, ())


def dimension_transform(N: int, m: int, R: float, u: RadialProfile) -> RadialProfile:
    """Radial v on B_R^m with v(rho) = u(r) where G^N_{B_R}(r) = G^m_{B_R}(rho), exponent N in both."""
    if not m > N:
        raise DomainError("dimension_transform needs m > N")
    _require_zero(u, R)
    om_n = sphere_area(N)
    om_m = sphere_area(m)
    k = (m - N) / (N - 1.0)
    c_m = (N - 1.0) / (m - N) * om_m ** (-1.0 / (N - 1.0))
    c_n = om_n ** (-1.0 / (N - 1.0))

    def r_of(rho):
        g = c_m * (np.asarray(rho, dtype=float) ** (-k) - R ** (-k))
        return R * np.exp(-g / c_n)

    def val(rho):
        return u(r_of(rho))

    def der(rho):
        rho = np.asarray(rho, dtype=float)
        r = r_of(rho)
        # c_n dr / r = c_m k rho^{-k-1} drho
        return u.d(r) * r * c_m * k * rho ** (-k - 1.0) / c_n

    def rho_of(r):
        g = c_n * math.log(R / r)
        return (g / c_m + R ** (-k)) ** (-1.0 / k)

    bps = tuple(sorted(rho_of(b) for b in u.knots(R)))
    return RadialProfile(val, der, R, bps)


def weighted_transform(params: Params, w: RadialProfile) -> RadialProfile:
    """Radial u on B_1 with u(t) = w(z) where omega^{-1/(p-1)} log(1/t) = G_{R^N}(z)."""
    ctx = PotentialContext(Params(params.N, params.p))
    if ctx.critical:
        raise DomainError("the weighted transform needs p < N")
    c = ctx.omega ** (-1.0 / (ctx.p - 1.0))

    def z_of(t):
        g = c * np.log(1.0 / np.asarray(t, dtype=float))
        return green_rn_inverse(ctx, np.maximum(g, 1e-300))

    def val(t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 1.0, w(z_of(np.minimum(t, 1.0 - 1e-16))), 0.0)

    def der(t):
        t = np.asarray(t, dtype=float)
        z = z_of(t)
        # -c dt / t = G'(z) dz
        return w.d(z) * (-c / t) / green_radial_derivative(ctx, z)

    knots = []
    for b in w.knots(w.support_end) + ([w.support_end] if math.isfinite(w.support_end) else []):
        knots.append(math.exp(-float(green_rn(ctx, b)) / c))
    return RadialProfile(val, der, 1.0, tuple(sorted(knots)))


def radial_energy(N: int, p: float, f: RadialProfile, radius: float = math.inf,
                  spec: Optional[QuadratureSpec] = None, weight_power: float = 0.0) -> IntegralResult:
    """omega_{N-1} times the integral of |f'(t)|^p t^{N-1+weight_power} over (0, radius)."""
    omega = sphere_area(N)
    end = min(radius, f.support_end)
    g = lambda t: np.abs(f.d(t)) ** p * t ** (N - 1.0 + weight_power)
    return integrate_1d(g, 0.0, end, spec, f.knots(end)).scaled(omega)


def line_energy(p: float, v: RadialProfile, spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Integral of |v'(z)|^p over (0, inf) (or up to the support end)."""
    return integrate_1d(lambda z: np.abs(v.d(z)) ** p, 0.0, v.support_end, spec, v.breakpoints)


# ------------------------------------------------------------ correction term F_p

class FpTable:
    """F_p on a log-spaced level grid with monotone cubic interpolation in (log s, log|F|).

    Below the grid F is continued linearly in s; above it by the power law
    s^{-(N+p-2)/(N-p)} of a level set shrinking onto the pole.
    """

    def __init__(self, ctx: PotentialContext, n: int = 64, spec: Optional[QuadratureSpec] = None):
        self.ctx = ctx
        self.zero = ctx.p == 2.0 or ctx.critical
        if self.zero:
            return
        spec = spec or QuadratureSpec(abs_tol=1e-300)
        C = ctx.c_np
        self.s_lo = 1e-6 * C
        self.s_hi = C * 1e-4 ** (-2.0 * ctx.a)
        self.gamma = (ctx.N + ctx.p - 2.0) / (ctx.N - ctx.p)
        self.s = np.exp(np.linspace(math.log(self.s_lo), math.log(self.s_hi), n))
        res = [superlevel_integral(ctx, float(s), spec) for s in self.s]
        self.F = np.array([r.value for r in res])
        self.converged = all(r.converged for r in res)
        self.error = max(r.error_estimate / max(abs(r.value), 1e-300) for r in res)
        self.sign = float(np.sign(self.F[0]))
        if np.any(np.sign(self.F) != self.sign):
            raise DomainError("F_p changes sign on the grid; the log interpolation does not apply")
        self._interp = PchipInterpolator(np.log(self.s), np.log(np.abs(self.F)))
        self._slope0 = (self.F[1] - self.F[0]) / (self.s[1] - self.s[0])

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.zero:
            return np.zeros_like(s)
        out = np.empty_like(s)
        lo = s < self.s_lo
        hi = s > self.s_hi
        mid = ~(lo | hi)
        out[mid] = self.sign * np.exp(self._interp(np.log(s[mid])))
        out[lo] = self.F[0] + self._slope0 * (s[lo] - self.s_lo)
        out[hi] = self.F[-1] * (s[hi] / self.s_hi) ** (-self.gamma)
        return out


@functools.lru_cache(maxsize=32)
def fp_table(N: int, p: float) -> FpTable:
    return FpTable(PotentialContext.of(N, p))


# ------------------------------------------------------------ energies on the half-space

@dataclass(frozen=True)
class DualResult:
    """A direct quadrature value together with the value of an independent identity."""

    value: float
    error_estimate: float
    converged: bool
    identity: float
    identity_error: float

    @property
    def discrepancy(self) -> float:
        return abs(self.value - self.identity) / max(abs(self.value), abs(self.identity), 1e-300)


def _direct(ctx: PotentialContext, f: Callable, u: SymmetricFunction, beta: Optional[float],
            spec: Optional[QuadratureSpec]) -> IntegralResult:
    return integrate_between_levels(ctx, f, u.levels, spec, beta=beta)


def _profile_knots(u: SymmetricFunction, upper: float):
    return u.origin[1].knots(upper)


def dirichlet_energy_symmetric(ctx: PotentialContext, u: SymmetricFunction,
                               spec: Optional[QuadratureSpec] = None) -> DualResult:
    """Integral of |grad u|^p over the half-space, computed directly and via transplantation."""
    p = ctx.p
    f = lambda R, Y: u.grad_norm(R, Y) ** p
    direct = _direct(ctx, f, u, u.energy_pole_order, spec)
    ident = energy_identity(ctx, u, spec)
    return DualResult(direct.value, direct.error_estimate, direct.converged and ident.converged,
                      ident.value, ident.error_estimate)


def energy_identity(ctx: PotentialContext, u: SymmetricFunction,
                    spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Ball (or R^N) energy of the source profile plus the F_p correction."""
    p, N = ctx.p, ctx.N
    omega = sphere_area(N)
    F = fp_table(N, p)
    if u.origin is None:
        # coarea in the level variable: |grad U|^{p-1} integrates to 1 + F_p(s) over {U = s}
        g = lambda s: np.abs(u.derivative(s)) ** p * (1.0 + F(s))
        return _level_integral(g, u, spec)
    kind, prof = u.origin
    if kind == "ball":
        end = min(prof.support_end, 1.0)
        base = lambda t: np.abs(prof.d(t)) ** p * t ** (N - 1.0)
        corr = lambda t: base(t) * F(green_ball(ctx, np.minimum(t, 1.0)))
    else:
        end = prof.support_end
        base = lambda t: np.abs(prof.d(t)) ** p * t ** (N - 1.0)
        corr = lambda t: base(t) * F(green_rn(ctx, t))
    pts = prof.knots(end)
    a = integrate_1d(base, 0.0, end, spec, pts).scaled(omega)
    if F.zero:
        return a
    b = integrate_1d(corr, 0.0, end, spec, pts).scaled(omega)
    return a + b


def _level_integral(g: Callable, u: SymmetricFunction, spec) -> IntegralResult:
    pts = list(u.s_breakpoints)
    lo = u.s_min
    top = max([lo] + pts) + 1.0
    head = integrate_1d(g, lo, top, spec, pts, singular="left" if lo == 0.0 else None)
    tail = integrate_1d(g, top, math.inf, spec)
    return head + tail


def hardy_side_symmetric(ctx: PotentialContext, u: SymmetricFunction,
                         spec: Optional[QuadratureSpec] = None) -> DualResult:
    """Integral of V_p^{p/2} d_-^{-p} |u|^p, directly and via the transplantation identity."""
    if ctx.critical:
        raise DomainError("the improved Hardy weight with V_p needs p < N")
    p = ctx.p
    f = lambda R, Y: hardy_weight(ctx, R, Y) * np.abs(u(R, Y)) ** p
    direct = _direct(ctx, f, u, u.hardy_pole_order, spec)
    ident = hardy_identity(ctx, u, spec)
    return DualResult(direct.value, direct.error_estimate, direct.converged and ident.converged,
                      ident.value, ident.error_estimate)


def hardy_identity(ctx: PotentialContext, u: SymmetricFunction,
                   spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Whole-space Hardy integral of the source profile plus the F_p correction."""
    N, p = ctx.N, ctx.p
    omega = sphere_area(N)
    F = fp_table(N, p)
    if u.origin is None or u.origin[0] != "rn":
        k = ((p - 1.0) / (N - p)) ** p
        if u.origin is None:
            g = lambda s: k * np.abs(u.profile(s)) ** p * s ** (-p) * (1.0 + F(s))
            return _level_integral(g, u, spec)
        prof = u.origin[1]
        e = _ball_green_exponent(N, p)
        end = min(prof.support_end, 1.0)
        base = lambda t: np.abs(prof(t)) ** p * t ** (N - 1.0 - p) * (1.0 - t ** e) ** (-p)
        corr = lambda t: base(t) * F(green_ball(ctx, np.minimum(t, 1.0)))
    else:
        prof = u.origin[1]
        end = prof.support_end
        base = lambda r: np.abs(prof(r)) ** p * r ** (N - 1.0 - p)
        corr = lambda r: base(r) * F(green_rn(ctx, r))
    pts = prof.knots(end)
    a = integrate_1d(base, 0.0, end, spec, pts).scaled(omega)
    if F.zero:
        return a
    return a + integrate_1d(corr, 0.0, end, spec, pts).scaled(omega)


def weighted_hardy_1d(ctx: PotentialContext, w: RadialProfile,
                      spec: Optional[QuadratureSpec] = None) -> Tuple[IntegralResult, IntegralResult]:
    """Both sides of the one-dimensional Hardy inequality with weight F_p(G_{R^N}(r)).

    Returns (lhs, rhs) with lhs = ((N-p)/p)^p int |w|^p r^{N-1-p} F dr and
    rhs = int |w'|^p r^{N-1} F dr.
    """
    N, p = ctx.N, ctx.p
    F = fp_table(N, p)
    end = w.support_end
    pts = w.knots(end)
    lhs = integrate_1d(lambda r: np.abs(w(r)) ** p * r ** (N - 1.0 - p) * F(green_rn(ctx, r)),
                       0.0, end, spec, pts).scaled(((N - p) / p) ** p)
    rhs = integrate_1d(lambda r: np.abs(w.d(r)) ** p * r ** (N - 1.0) * F(green_rn(ctx, r)),
                       0.0, end, spec, pts)
    return lhs, rhs


def level_set_energy_rn(ctx: PotentialContext, t: float,
                        spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Integral of |grad G|^p over {G < t} for the whole-space Green function G (should equal t)."""
    if not t > 0.0:
        raise DomainError("level must be positive")
    r0 = float(green_rn_inverse(ctx, t))
    g = lambda r: np.abs(green_radial_derivative(ctx, r)) ** ctx.p * r ** (ctx.N - 1.0)
    return integrate_1d(g, r0, math.inf, spec).scaled(sphere_area(ctx.N))
