"""Inequality functionals, their Rayleigh quotients and the standard test families.

``lhs`` returns the weighted integral raised to the power that appears in the
inequality, without the constant; ``rhs`` returns the gradient energy (the
derivative energy for the one-dimensional Bliss kinds).  ``rayleigh`` divides
the two, and ``best_constant`` gives the number the quotient is compared to.

Symmetric functions u = u~(U_p) are integrated in the level variable s = U_p by
the coarea formula, where the level sets carry the flux 1 + F_p(s); any other
axisymmetric function is integrated directly over the half-space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .core_math import (
    DomainError,
    Params,
    ball_volume,
    bliss_constant,
    bliss_log_constant,
    critical_hardy_constant,
    hardy_constant,
    hardy_sobolev_constant,
    sobolev_constant,
    sphere_area,
)
from .potentials import (
    V_p,
    PotentialContext,
    U,
    grad_U,
    hardy_weight,
)
from .quadrature import (
    IntegralResult,
    QuadratureSpec,
    integrate_1d,
    integrate_between_levels,
    integrate_polar,
)
from .transplant import (
    RadialProfile,
    SymmetricFunction,
    energy_identity,
    fp_table,
    hardy_identity,
)


class UndefinedQuotientError(DomainError):
    """The denominator of a Rayleigh quotient vanishes."""


# ------------------------------------------------------------------ kinds

@dataclass(frozen=True)
class HardySubcritical:
    """Hardy inequality on R^N for radial functions about ``pole``."""

    N: int
    p: float
    pole: Tuple[float, ...] = ()

    def __post_init__(self):
        Params(self.N, self.p)
        if self.p >= self.N:
            raise DomainError("the subcritical Hardy inequality needs p < N")


@dataclass(frozen=True)
class CriticalHardyHalf:
    N: int

    def __post_init__(self):
        Params(self.N, float(self.N))


@dataclass(frozen=True)
class ImprovedHardyHalf:
    N: int
    p: float

    def __post_init__(self):
        Params(self.N, self.p)
        if self.p >= self.N:
            raise DomainError("the improved Hardy inequality needs p < N")


@dataclass(frozen=True)
class HardySobolevImproved:
    """The p = 2 improved Hardy-Sobolev functional with exponent 2(N-s)/(N-2)."""

    N: int
    s: float

    def __post_init__(self):
        Params(self.N, 2.0, s=self.s)
        if self.N < 3:
            raise DomainError("the improved Hardy-Sobolev inequality needs N >= 3")

    @property
    def q(self) -> float:
        return 2.0 * (self.N - self.s) / (self.N - 2.0)


@dataclass(frozen=True)
class TrudingerMoser:
    N: int
    alpha: float

    def __post_init__(self):
        Params(self.N, float(self.N))
        if not self.alpha > 0.0:
            raise DomainError("alpha must be positive")


@dataclass(frozen=True)
class Bliss:
    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 1.0 and self.q > self.p):
            raise DomainError("Bliss needs q > p > 1")


@dataclass(frozen=True)
class BlissLog:
    N: int
    q: float

    def __post_init__(self):
        Params(self.N, float(self.N), q=self.q)


@dataclass(frozen=True)
class SobolevRN:
    N: int
    p: float

    def __post_init__(self):
        Params(self.N, self.p)
        if self.p >= self.N:
            raise DomainError("the Sobolev inequality needs p < N")


@dataclass(frozen=True)
class WeightedCandidate:
    """Candidate embedding of radial W^{1,N}(R^N) into L^q with a radial weight g(|x|)."""

    N: int
    q: float
    weight: Callable = field(compare=False)
    weight_support: float = math.inf
    weight_points: Tuple[float, ...] = ()

    def __post_init__(self):
        Params(self.N, float(self.N))
        if not self.q >= 1.0:
            raise DomainError("q must be at least 1")


FunctionalKind = Union[HardySubcritical, CriticalHardyHalf, ImprovedHardyHalf, HardySobolevImproved,
                       TrudingerMoser, Bliss, BlissLog, SobolevRN, WeightedCandidate]


def best_constant(kind: FunctionalKind) -> float:
    """The sharp constant the Rayleigh quotient is bounded below by."""
    if isinstance(kind, (HardySubcritical, ImprovedHardyHalf)):
        return hardy_constant(Params(kind.N, kind.p))
    if isinstance(kind, CriticalHardyHalf):
        return critical_hardy_constant(kind.N)
    if isinstance(kind, HardySobolevImproved):
        return hardy_sobolev_constant(kind.N, kind.s)
    if isinstance(kind, Bliss):
        return bliss_constant(kind.p, kind.q) ** kind.p
    if isinstance(kind, BlissLog):
        return bliss_log_constant(kind.N, kind.q)
    if isinstance(kind, SobolevRN):
        return sobolev_constant(Params(kind.N, kind.p))
    raise DomainError(f"{type(kind).__name__} has no best constant")


# ------------------------------------------------- non-symmetric test functions

@dataclass(frozen=True)
class ProductFunction:
    """u = u_sym (1 + amp exp(-(r^2 + (y - y0)^2)/w^2)).

    Axisymmetric and smooth, but its level sets are not those of U_p, so it is
    not of the form u~(U_p).
    """

    base: SymmetricFunction
    amp: float
    y0: float
    width: float

    def __post_init__(self):
        if not abs(self.amp) < 1.0:
            raise DomainError("|amp| < 1 keeps the factor positive")
        if not self.width > 0.0:
            raise DomainError("width must be positive")

    @property
    def ctx(self) -> PotentialContext:
        return self.base.ctx

    def _factor(self, r, y):
        e = self.amp * np.exp(-(r * r + (y - self.y0) ** 2) / self.width ** 2)
        w2 = self.width ** 2
        return 1.0 + e, -2.0 * r / w2 * e, -2.0 * (y - self.y0) / w2 * e

    def __call__(self, r, y):
        phi, _, _ = self._factor(r, y)
        return self.base(r, y) * phi

    def grad(self, r, y):
        phi, pr, py = self._factor(r, y)
        s = U(self.ctx, r, y)
        d = self.base.derivative(s)
        ur, uy = grad_U(self.ctx, r, y)
        b = self.base.profile(s)
        return d * ur * phi + b * pr, d * uy * phi + b * py

    def grad_norm(self, r, y):
        gr, gy = self.grad(r, y)
        return np.hypot(gr, gy)


HalfSpaceFunction = Union[SymmetricFunction, ProductFunction]


# ------------------------------------------------------------------ helpers

def _power(res: IntegralResult, e: float) -> IntegralResult:
    v = max(res.value, 0.0)
    val = v ** e
    err = e * v ** (e - 1.0) * res.error_estimate if v > 0.0 else res.error_estimate ** e
    return IntegralResult(val, err, res.evaluations, res.converged)


def _radial(N: int, g: Callable, end: float, pts, spec, **kw) -> IntegralResult:
    """omega_{N-1} int_0^end g(t) t^{N-1} dt."""
    h = lambda t: g(t) * t ** (N - 1.0)
    return integrate_1d(h, 0.0, end, spec, pts, **kw).scaled(sphere_area(N))


def _need_symmetric(u, ctx_p: float, N: int) -> SymmetricFunction:
    if not isinstance(u, SymmetricFunction):
        raise DomainError("this route needs a function of the form u~(U_p)")
    if u.ctx.N != N or u.ctx.p != ctx_p:
        raise DomainError(f"function is built on U_p with (N, p) = ({u.ctx.N}, {u.ctx.p}), "
                          f"expected ({N}, {ctx_p})")
    return u


def _need_halfspace(u, N: int, p: float):
    if not isinstance(u, (SymmetricFunction, ProductFunction)):
        raise DomainError("expected a function on the half-space")
    if u.ctx.N != N:
        raise DomainError("dimension mismatch")
    if u.ctx.p != p:
        raise DomainError(f"function is built on U_p with p = {u.ctx.p}, expected {p}")


def _levels(u) -> list:
    return (u.base if isinstance(u, ProductFunction) else u).levels


def _halfspace_direct(u, f: Callable, beta: Optional[float], spec) -> IntegralResult:
    ctx = u.ctx
    return integrate_between_levels(ctx, f, _levels(u), spec, beta=beta)


def _pole_value(u) -> float:
    base = u.base if isinstance(u, ProductFunction) else u
    if base.origin is not None:
        kind, prof = base.origin
        return float(abs(prof(np.float64(0.0))))
    return float("nan")


def _ball_log_route(v: RadialProfile, g: Callable, spec) -> IntegralResult:
    """Integral over L = log(1/t) in (0, inf) of g(L, t) for a profile on the unit ball."""
    end = min(v.support_end, 1.0)
    lo = 0.0 if end >= 1.0 else math.log(1.0 / end)
    pts = sorted(math.log(1.0 / k) for k in v.knots(end))

    def h(L):
        L = np.asarray(L, dtype=float)
        return g(L, np.exp(-L))

    return integrate_1d(h, lo, math.inf, spec, pts, singular="left" if lo == 0.0 else None)


def _level_route(u: SymmetricFunction, g: Callable, spec) -> IntegralResult:
    """Integral of g over the level variable, from s_min to infinity."""
    pts = list(u.s_breakpoints)
    lo = u.s_min
    top = max([lo] + pts) + 1.0
    head = integrate_1d(g, lo, top, spec, pts, singular="left" if lo == 0.0 else None)
    tail = integrate_1d(g, top, math.inf, spec)
    return head + tail


# ------------------------------------------------------------------ lhs / rhs

def lhs(kind: FunctionalKind, u, spec: Optional[QuadratureSpec] = None, route: str = "auto") -> IntegralResult:
    """The weighted side of the inequality, raised to its power, without the constant.

    ``route`` selects, for half-space kinds, the level-variable reduction
    ("level", symmetric functions only) or two-dimensional quadrature
    ("direct"); "auto" takes the reduction whenever it applies.
    """
    if route not in ("auto", "level", "direct"):
        raise DomainError(f"unknown route {route!r}")
    if isinstance(kind, HardySubcritical):
        N, p = kind.N, kind.p
        return _radial(N, lambda t: np.abs(u(t)) ** p * t ** (-p), u.support_end, u.knots(u.support_end), spec)
    if isinstance(kind, SobolevRN):
        N, p = kind.N, kind.p
        ps = N * p / (N - p)
        res = _radial(N, lambda t: np.abs(u(t)) ** ps, u.support_end, u.knots(u.support_end), spec)
        return _power(res, p / ps)
    if isinstance(kind, WeightedCandidate):
        N, q = kind.N, kind.q
        end = min(u.support_end, kind.weight_support)
        pts = sorted(set(u.knots(end)) | {x for x in kind.weight_points if 0.0 < x < end})
        res = _radial(N, lambda t: np.abs(u(t)) ** q * kind.weight(t), end, pts, spec)
        return _power(res, N / q)
    if isinstance(kind, Bliss):
        p, q = kind.p, kind.q
        e = 1.0 + q * (p - 1.0) / p
        g = lambda t: np.abs(u(t)) ** q * t ** (-e)
        end = u.support_end
        if math.isfinite(end):
            res = integrate_1d(g, 0.0, end, spec, u.knots(end), singular="left")
        else:
            res = integrate_1d(g, 0.0, math.inf, spec, u.breakpoints, singular="left")
        return _power(res, p / q)
    if isinstance(kind, BlissLog):
        N, q = kind.N, kind.q
        e = 1.0 + q * (N - 1.0) / N
        end = min(u.support_end, 1.0)
        g = lambda t: np.abs(u(t)) ** q / (t * np.log(1.0 / t) ** e)
        res = integrate_1d(g, 0.0, end, spec, u.knots(end), log_left=True).scaled(sphere_area(N))
        return _power(res, N / q)
    if isinstance(kind, CriticalHardyHalf):
        return _critical_hardy_lhs(kind, u, spec, route)
    if isinstance(kind, ImprovedHardyHalf):
        return _improved_hardy_lhs(kind, u, spec, route)
    if isinstance(kind, HardySobolevImproved):
        return _hs_lhs(kind, u, spec, route)
    if isinstance(kind, TrudingerMoser):
        return _tm_lhs(kind, u, spec, route)
    raise DomainError(f"unknown functional kind {kind!r}")


def rhs(kind: FunctionalKind, u, spec: Optional[QuadratureSpec] = None, route: str = "auto") -> IntegralResult:
    """Gradient energy of u (derivative energy on the line for the Bliss kind)."""
    if route not in ("auto", "level", "direct"):
        raise DomainError(f"unknown route {route!r}")
    if isinstance(kind, Bliss):
        p = kind.p
        return integrate_1d(lambda t: np.abs(u.d(t)) ** p, 0.0, u.support_end, spec, u.breakpoints)
    if isinstance(kind, (HardySubcritical, SobolevRN)):
        N, p = kind.N, kind.p
        return _radial(N, lambda t: np.abs(u.d(t)) ** p, u.support_end, u.knots(u.support_end), spec)
    if isinstance(kind, (WeightedCandidate, BlissLog)):
        N = kind.N
        end = u.support_end if isinstance(kind, WeightedCandidate) else min(u.support_end, 1.0)
        return _radial(N, lambda t: np.abs(u.d(t)) ** N, end, u.knots(end), spec)
    if isinstance(kind, (CriticalHardyHalf, TrudingerMoser)):
        return halfspace_energy(kind.N, float(kind.N), u, spec, route)
    if isinstance(kind, ImprovedHardyHalf):
        return halfspace_energy(kind.N, kind.p, u, spec, route)
    if isinstance(kind, HardySobolevImproved):
        return halfspace_energy(kind.N, 2.0, u, spec, route)
    raise DomainError(f"unknown functional kind {kind!r}")


def halfspace_energy(N: int, p: float, u, spec=None, route: str = "auto") -> IntegralResult:
    """Integral of |grad u|^p over the half-space."""
    _need_halfspace(u, N, p)
    if isinstance(u, SymmetricFunction) and route != "direct":
        if u.ctx.critical and u.origin is not None and u.origin[0] == "ball":
            # conformal case: the ball energy is omega_{N-1} int |dv/dL|^N dL with L = log(1/t)
            v = u.origin[1]
            g = lambda L, t: np.abs(v.d(t) * t) ** N
            return _ball_log_route(v, g, spec).scaled(sphere_area(N))
        return energy_identity(u.ctx, u, spec)
    if route == "level":
        raise DomainError("the level route needs a function of the form u~(U_p)")
    beta = u.energy_pole_order if isinstance(u, SymmetricFunction) else u.base.energy_pole_order
    return _halfspace_direct(u, lambda R, Y: u.grad_norm(R, Y) ** p, beta, spec)


def _critical_hardy_lhs(kind: CriticalHardyHalf, u, spec, route) -> IntegralResult:
    N = kind.N
    _need_halfspace(u, N, float(N))
    if isinstance(u, SymmetricFunction) and route != "direct":
        # V_N^{N/2} = (|grad U_N| / U_N)^N and the level sets carry unit flux
        if u.origin is not None and u.origin[0] == "ball":
            v = u.origin[1]
            return _ball_log_route(v, lambda L, t: np.abs(v(t)) ** N * L ** (-float(N)), spec).scaled(sphere_area(N))
        return _level_route(u, lambda s: np.abs(u.profile(s)) ** N * s ** (-float(N)), spec)
    if route == "level":
        raise DomainError("the level route needs a function of the form u~(U_N)")
    f = lambda R, Y: hardy_weight(u.ctx, R, Y) * np.abs(u(R, Y)) ** N
    if _pole_value(u) != 0.0:
        raise DomainError("direct quadrature of the critical weight needs u to vanish near the pole")
    return _halfspace_direct(u, f, None, spec)


def _improved_hardy_lhs(kind: ImprovedHardyHalf, u, spec, route) -> IntegralResult:
    N, p = kind.N, kind.p
    _need_halfspace(u, N, p)
    if isinstance(u, SymmetricFunction) and route != "direct":
        return hardy_identity(u.ctx, u, spec)
    if route == "level":
        raise DomainError("the level route needs a function of the form u~(U_p)")
    f = lambda R, Y: hardy_weight(u.ctx, R, Y) * np.abs(u(R, Y)) ** p
    base = u.base if isinstance(u, ProductFunction) else u
    return _halfspace_direct(u, f, base.hardy_pole_order, spec)


def improved_hs_weight(N: int, s: float, r, y):
    """d_-^{-s} V_2 [1 - X^{(N-2)/2}]^{-(2-s)/(N-2)}."""
    ctx = PotentialContext.of(N, 2.0)
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    dm2 = r * r + (y - 1.0) ** 2
    # 1 - X^a = U d_-^{N-2} / C
    bracket = U(ctx, r, y) * dm2 ** ((N - 2.0) / 2.0) / ctx.c_np
    return dm2 ** (-s / 2.0) * V_p(ctx, r, y) * bracket ** (-(2.0 - s) / (N - 2.0))


def _hs_lhs(kind: HardySobolevImproved, u, spec, route) -> IntegralResult:
    N, s, q = kind.N, kind.s, kind.q
    _need_halfspace(u, N, 2.0)
    if isinstance(u, SymmetricFunction) and route != "direct":
        # the weight is (N-2)^{-2} |grad U|^2 U^{-2} (U/C)^{-(2-s)/(N-2)} and the flux is 1
        C = u.ctx.c_np
        e = 2.0 + (2.0 - s) / (N - 2.0)
        k = C ** ((2.0 - s) / (N - 2.0)) / (N - 2.0) ** 2
        res = _level_route(u, lambda t: np.abs(u.profile(t)) ** q * t ** (-e), spec).scaled(k)
        return _power(res, 2.0 / q)
    if route == "level":
        raise DomainError("the level route needs a function of the form u~(U_2)")
    f = lambda R, Y: improved_hs_weight(N, s, R, Y) * np.abs(u(R, Y)) ** q
    # near the pole the weight is O(d_-^{-s}) times |u|^q, and u is bounded there
    res = _halfspace_direct(u, f, s, spec)
    return _power(res, 2.0 / q)


def _tm_lhs(kind: TrudingerMoser, u, spec, route) -> IntegralResult:
    """Integral of exp(alpha |u|^{N/(N-1)}) against 2^N d_+^{-2N} dx dy.

    The measure has total mass |B_1|, so the value is |B_1| plus the integral of
    exp(...) - 1, which vanishes outside the support of u.
    """
    N, alpha = kind.N, kind.alpha
    e = N / (N - 1.0)
    vol = ball_volume(N)
    if isinstance(u, (int, float)) and u == 0:
        return IntegralResult(vol, 0.0, 0, True)
    _need_halfspace(u, N, float(N))
    if isinstance(u, SymmetricFunction) and route != "direct":
        if u.origin is None or u.origin[0] != "ball":
            raise DomainError("the level route for TM needs a pullback of a ball function")
        v = u.origin[1]
        end = min(v.support_end, 1.0)
        g = lambda t: np.expm1(alpha * np.abs(v(t)) ** e)
        res = _radial(N, g, end, v.knots(end), spec)
        return IntegralResult(vol + res.value, res.error_estimate, res.evaluations, res.converged)
    if route == "level":
        raise DomainError("the level route needs a function of the form u~(U_N)")

    def f(R, Y):
        return np.expm1(alpha * np.abs(u(R, Y)) ** e) * 2.0 ** N * (R * R + (Y + 1.0) ** 2) ** (-float(N))

    res = _halfspace_direct(u, f, 0.0, spec)
    return IntegralResult(vol + res.value, res.error_estimate, res.evaluations, res.converged)


def tm_measure_mass(N: int, spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """Total mass of 2^N d_+^{-2N} dx dy over the half-space by direct quadrature."""
    ctx = PotentialContext.of(N, float(N))
    f = lambda R, Y: 2.0 ** N * (R * R + (Y + 1.0) ** 2) ** (-float(N))
    return integrate_between_levels(ctx, f, [0.0], spec, beta=0.0)


# ------------------------------------------------------------------ quotients

@dataclass(frozen=True)
class Evaluation:
    lhs: IntegralResult
    rhs: IntegralResult

    @property
    def quotient(self) -> float:
        if not self.lhs.value > 0.0:
            raise UndefinedQuotientError("the weighted side vanishes")
        return self.rhs.value / self.lhs.value

    @property
    def converged(self) -> bool:
        return self.lhs.converged and self.rhs.converged


def evaluate(kind: FunctionalKind, u, spec: Optional[QuadratureSpec] = None, route: str = "auto") -> Evaluation:
    if isinstance(kind, TrudingerMoser):
        raise DomainError("the Trudinger-Moser functional is not a quotient")
    return Evaluation(lhs(kind, u, spec, route), rhs(kind, u, spec, route))


def rayleigh(kind: FunctionalKind, u, spec: Optional[QuadratureSpec] = None, route: str = "auto") -> float:
    """rhs / lhs, to be compared with best_constant(kind)."""
    return evaluate(kind, u, spec, route).quotient


# ------------------------------------------------------------------ families

def smoothstep(x):
    """3x^2 - 2x^3 clamped to [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def smoothstep_d(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0.0) & (x < 1.0)
    return np.where(inside, 6.0 * x * (1.0 - x), 0.0)


def ih_eps_max(N: int, p: float) -> float:
    """Upper bound for epsilon: the stated guard, capped where the exponent reaches zero."""
    guard = 0.5 * (N - p) / (p - 1.0) * (p / (p - 1.0))
    return min(guard, (N - p) / p)


def ih_exponent(N: int, p: float, eps: float) -> float:
    return (p - 1.0) / p - (p - 1.0) / (N - p) * eps


def family_ih(ctx: PotentialContext, eps: float, M: float) -> SymmetricFunction:
    """u = U^kappa psi_M(U) with kappa = (p-1)/p - (p-1) eps/(N-p) and a smoothstep cutoff on [M/2, M]."""
    N, p = ctx.N, ctx.p
    if ctx.critical:
        raise DomainError("family_ih needs p < N")
    if not (0.0 < eps < ih_eps_max(N, p)):
        raise DomainError(f"eps must lie in (0, {ih_eps_max(N, p)})")
    if not M > 0.0:
        raise DomainError("M must be positive")
    kappa = ih_exponent(N, p, eps)
    h = 0.5 * M

    def prof(s):
        s = np.asarray(s, dtype=float)
        return np.where(s > h, np.abs(s) ** kappa * smoothstep((s - h) / h), 0.0)

    def dprof(s):
        s = np.asarray(s, dtype=float)
        sp = np.where(s > h, s, 1.0)
        x = (sp - h) / h
        d = kappa * sp ** (kappa - 1.0) * smoothstep(x) + sp ** kappa * smoothstep_d(x) / h
        return np.where(s > h, d, 0.0)

    beta = N - p * eps
    return SymmetricFunction(prof, dprof, ctx, h, (M,), beta, beta, None)


def ih_bounding_radius(ctx: PotentialContext, M: float) -> float:
    """delta_2 = (M / C(N,p))^{(p-1)/(N-p)}: {U > M} lies in the ball of this radius about the pole."""
    return (M / ctx.c_np) ** (-(ctx.p - 1.0) / (ctx.N - ctx.p))


def family_ih_quotient(ctx: PotentialContext, eps: float, M: float,
                       spec: Optional[QuadratureSpec] = None) -> Evaluation:
    """Both sides of the improved Hardy inequality for family_ih in the level variable.

    Beyond the top of the F_p table the integrands are pure powers times
    1 + F(s) with F ~ s^{-gamma}, so the tails are summed in closed form.
    """
    N, p = ctx.N, ctx.p
    u = family_ih(ctx, eps, M)
    F = fp_table(N, p)
    kappa = ih_exponent(N, p, eps)
    k = ((p - 1.0) / (N - p)) ** p
    e = (1.0 - kappa) * p  # both integrands decay like s^{-e} once the cutoff is 1
    top = max(M, F.s_hi if not F.zero else M)
    gE = lambda s: np.abs(u.derivative(s)) ** p * (1.0 + F(s))
    gH = lambda s: k * np.abs(u.profile(s)) ** p * s ** (-p) * (1.0 + F(s))
    pts = [M] + ([x for x in np.geomspace(M, top, 40)[1:-1]] if top > M else [])

    def tail(c):
        # c int_top^inf s^{-e} (1 + F(s)) ds with F(s) = F(top) (s/top)^{-gamma}
        t = c * top ** (1.0 - e) / (e - 1.0)
        if not F.zero:
            Ft = float(F(np.array([top]))[0])
            t += c * Ft * top ** (1.0 - e) / (e - 1.0 + F.gamma)
        return t

    def side(g, c):
        head = integrate_1d(g, 0.5 * M, top, spec, pts) if top > 0.5 * M else IntegralResult(0.0, 0.0, 0, True)
        tv = tail(c)
        return IntegralResult(head.value + tv, head.error_estimate, head.evaluations, head.converged)

    E = side(gE, kappa ** p)
    H = side(gH, k)
    return Evaluation(H, E)


def family_log_cutoff(R: float) -> RadialProfile:
    """1 on [0, 1], log(R/t)/log R on (1, R), 0 beyond."""
    if not R > 1.0:
        raise DomainError("R must exceed 1")
    L = math.log(R)

    def val(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 1.0, 1.0, np.log(R / np.maximum(t, 1.0)) / L)

    def der(t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 1.0, -1.0 / (np.maximum(t, 1.0) * L), 0.0)

    return RadialProfile(val, der, R, (1.0,))


def log_cutoff_energy(N: int, R: float) -> float:
    """Closed form omega_{N-1} (log R)^{1-N} of the N-energy of family_log_cutoff(R)."""
    return sphere_area(N) * math.log(R) ** (1.0 - N)


@dataclass(frozen=True)
class Bubble:
    """u(z) = v(|z - z_eps| / eps) with z_eps = (0, eps); v = 1 on [0, 1/2], 2(1 - t) on (1/2, 1]."""

    N: int
    p: float
    eps: float

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 0.5, 1.0, np.where(t < 1.0, 2.0 * (1.0 - t), 0.0))

    def __call__(self, r, y):
        t = np.hypot(r, np.asarray(y, dtype=float) - self.eps) / self.eps
        return self.profile(t)

    def grad_norm(self, r, y):
        t = np.hypot(r, np.asarray(y, dtype=float) - self.eps) / self.eps
        return np.where((t > 0.5) & (t < 1.0), 2.0 / self.eps, 0.0)

    def energy_closed_form(self) -> float:
        """eps^{N-p} int_{B_1} |grad v|^p = eps^{N-p} omega 2^p (1 - 2^{-N}) / N."""
        N, p = self.N, self.p
        return self.eps ** (N - p) * sphere_area(N) * 2.0 ** p * (1.0 - 2.0 ** (-N)) / N


def family_bubble(N: int, p: float, eps: float) -> Bubble:
    Params(N, p)
    if not (0.0 < eps < 0.5):
        raise DomainError("eps must lie in (0, 1/2)")
    return Bubble(N, p, eps)


def _integrate_bubble(b: Bubble, f: Callable, spec) -> IntegralResult:
    outer = lambda T: np.full(np.shape(T), b.eps)
    return integrate_polar(b.N, f, spec, center_y=b.eps, outer=outer, beta=0.0, sigma_points=(0.5,))


def bubble_energy(b: Bubble, spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    return _integrate_bubble(b, lambda R, Y: b.grad_norm(R, Y) ** b.p, spec)


def bubble_weighted_side(b: Bubble, s: float, spec: Optional[QuadratureSpec] = None) -> IntegralResult:
    """(int |u|^{p*(s)} d_-^{-s} V_p^{p/2} [1 - X^a]^{-(p-1)(p-s)/(N-p)})^{p/p*(s)}."""
    N, p = b.N, b.p
    if not p < N:
        raise DomainError("needs p < N")
    ctx = PotentialContext.of(N, p)
    ps = p * (N - s) / (N - p)
    C = ctx.c_np
    a = ctx.a

    def f(R, Y):
        dm2 = R * R + (Y - 1.0) ** 2
        bracket = U(ctx, R, Y) * dm2 ** a / C
        w = dm2 ** (-s / 2.0) * V_p(ctx, R, Y) ** (p / 2.0) * bracket ** (-(p - 1.0) * (p - s) / (N - p))
        return np.abs(b(R, Y)) ** ps * w

    return _power(_integrate_bubble(b, f, spec), p / ps)


def moser_function(N: int, k: float) -> RadialProfile:
    """Moser's unit-energy profile on B_1 concentrating at the origin as k grows."""
    if not k > 0.0:
        raise DomainError("k must be positive")
    omega = sphere_area(N)
    c = omega ** (-1.0 / N)
    t0 = math.exp(-k)

    def val(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= t0, c * k ** ((N - 1.0) / N),
                        c * k ** (-1.0 / N) * np.log(1.0 / np.clip(t, t0, None)))

    def der(t):
        t = np.asarray(t, dtype=float)
        return np.where(t > t0, -c * k ** (-1.0 / N) / np.maximum(t, t0), 0.0)

    return RadialProfile(val, der, 1.0, (t0,))


def family_ch_concentration(N: int, eps: float) -> RadialProfile:
    """Ball profile concentrating at the sphere, in L = log(1/t): L^{(N-1)/N + eps} on [0, 1], 2 - L on [1, 2].

    Its critical-Hardy quotient is ((c+eps)^N/(N eps) + 1) / (1/(N eps) + J) with
    c = (N-1)/N and J = int_1^2 (2-L)^N L^{-N} dL, which tends to c^N as eps -> 0.
    """
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    c = (N - 1.0) / N + eps
    t1, t2 = math.exp(-1.0), math.exp(-2.0)

    def val(t):
        t = np.asarray(t, dtype=float)
        L = np.log(1.0 / np.clip(t, 1e-300, 1.0))
        return np.where(L <= 1.0, L ** c, np.where(L < 2.0, 2.0 - L, 0.0))

    def der(t):
        t = np.asarray(t, dtype=float)
        ts = np.clip(t, 1e-300, 1.0)
        L = np.log(1.0 / ts)
        dL = np.where(L <= 1.0, c * np.maximum(L, 1e-300) ** (c - 1.0), np.where(L < 2.0, -1.0, 0.0))
        return -dL / ts

    return RadialProfile(val, der, 1.0, (t2, t1))


# ------------------------------------------------------------------ random samples

@dataclass(frozen=True)
class _Bumps:
    centers: Tuple[float, ...]
    widths: Tuple[float, ...]
    amps: Tuple[float, ...]
    base: float
    end: float

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if self.base:
            x = np.clip(t / self.end, 0.0, 1.0)
            out = out + self.base * (1.0 - x * x) ** 2
        for c, w, a in zip(self.centers, self.widths, self.amps):
            x = np.clip((t - c) / w, -1.0, 1.0)
            out = out + a * (1.0 - x * x) ** 2
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if self.base:
            x = np.clip(t / self.end, 0.0, 1.0)
            out = out - self.base * 4.0 * x * (1.0 - x * x) / self.end
        for c, w, a in zip(self.centers, self.widths, self.amps):
            x = (t - c) / w
            inside = np.abs(x) < 1.0
            out = out + np.where(inside, -a * 4.0 * x * (1.0 - x * x) / w, 0.0)
        return out


def random_smooth_profile(seed: int, support_end: float = 1.0, inner: float = 0.0,
                          n_bumps: int = 3) -> RadialProfile:
    """Seeded superposition of C^1 bumps (1 - x^2)^2 inside (inner, support_end).

    With inner = 0 a base term (1 - (t/end)^2)^2 makes the profile nonzero at
    the origin with zero slope there; with inner > 0 the profile vanishes on
    [0, inner].  The profile and its slope vanish at support_end.
    """
    if not (0.0 <= inner < support_end < math.inf):
        raise DomainError("need 0 <= inner < support_end < inf")
    rng = np.random.default_rng(seed)
    span = support_end - inner
    widths = rng.uniform(0.1, 0.3, n_bumps) * span
    centers = inner + widths + rng.uniform(0.0, 1.0, n_bumps) * (span - 2.0 * widths)
    amps = rng.uniform(0.2, 1.0, n_bumps) * rng.choice([-1.0, 1.0], n_bumps)
    base = float(rng.uniform(0.5, 1.5)) if inner == 0.0 else 0.0
    if inner > 0.0:
        amps = np.abs(amps)
    b = _Bumps(tuple(centers), tuple(widths), tuple(amps), base, support_end)
    knots = sorted({float(x) for c, w in zip(centers, widths) for x in (c - w, c, c + w)
                    if 0.0 < x < support_end})
    return RadialProfile(b.value, b.derivative, support_end, tuple(knots))


def random_product(base: SymmetricFunction, seed: int) -> ProductFunction:
    rng = np.random.default_rng(seed)
    return ProductFunction(base, float(rng.uniform(-0.6, 0.6)), float(rng.uniform(0.3, 2.0)),
                           float(rng.uniform(0.3, 1.5)))
