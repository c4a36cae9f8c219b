"""The reflected fundamental solution on the half-space and the potentials built from it.

Every function works in axisymmetric coordinates: r = |x| >= 0 and the height
y > 0.  The pole sits at (r, y) = (0, 1).  Arguments broadcast like numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_math import DomainError, Params, PoleError, sphere_area


@dataclass(frozen=True)
class HalfSpacePoint:
    r: float
    y: float

    def __post_init__(self):
        if self.r < 0.0:
            raise DomainError("r = |x| must be nonnegative")
        if not self.y > 0.0:
            raise DomainError("points of the half-space need y > 0")

    @property
    def d_minus_sq(self) -> float:
        return self.r ** 2 + (self.y - 1.0) ** 2

    @property
    def d_plus_sq(self) -> float:
        return self.r ** 2 + (self.y + 1.0) ** 2


@dataclass(frozen=True)
class PotentialContext:
    params: Params

    @classmethod
    def of(cls, N: int, p: float) -> "PotentialContext":
        return cls(Params(N, p))

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def critical(self) -> bool:
        return self.params.p == self.params.N

    @property
    def omega(self) -> float:
        return sphere_area(self.N)

    @property
    def a(self) -> float:
        """Half the decay exponent, (N-p)/(2(p-1)); zero at p = N."""
        return (self.N - self.p) / (2.0 * (self.p - 1.0))

    @property
    def c_np(self) -> float:
        """C(N,p) = (p-1)/(N-p) omega^{-1/(p-1)}, the prefactor of the fundamental solution."""
        if self.critical:
            raise DomainError("C(N,p) is undefined for p = N")
        return (self.p - 1.0) / (self.N - self.p) * self.omega ** (-1.0 / (self.p - 1.0))


def _distances(r, y, allow_pole: bool = False):
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError("points of the half-space need y > 0")
    if np.any(r < 0.0):
        raise DomainError("r = |x| must be nonnegative")
    dm2 = r * r + (y - 1.0) ** 2
    dp2 = r * r + (y + 1.0) ** 2
    if not allow_pole and np.any(dm2 <= 0.0):
        raise PoleError("evaluation at the pole (0, 1)")
    return r, y, dm2, dp2


def _log_X(y, dm2, dp2):
    """log(d_-^2/d_+^2): log1p form near the boundary (X near 1), plain logs near the pole."""
    near_pole = dm2 < 0.5 * dp2
    with np.errstate(divide="ignore", invalid="ignore"):
        plain = np.log(dm2) - np.log(dp2)
        bdry = np.log1p(-4.0 * y / dp2)
    return np.where(near_pole, plain, bdry)


def U(ctx: PotentialContext, r, y):
    """Fundamental solution with pole (0,1) minus its reflection across y = 0."""
    r, y, dm2, dp2 = _distances(r, y)
    if ctx.critical:
        return 0.5 * np.log1p(4.0 * y / dm2) * ctx.omega ** (-1.0 / (ctx.N - 1.0))
    a = ctx.a
    # dm2^{-a} - dp2^{-a} = dm2^{-a} (1 - X^a)
    return ctx.c_np * dm2 ** (-a) * (-np.expm1(a * _log_X(y, dm2, dp2)))


def grad_U(ctx: PotentialContext, r, y):
    """Analytic gradient (dU/dr, dU/dy)."""
    r, y, dm2, dp2 = _distances(r, y)
    k = ctx.a + 1.0
    fac = ctx.omega ** (-1.0 / (ctx.p - 1.0))
    em = dm2 ** (-k)
    ep = dp2 ** (-k)
    ur = fac * r * (ep - em)
    uy = fac * (ep * (y + 1.0) - em * (y - 1.0))
    return ur, uy


def grad_U_norm(ctx: PotentialContext, r, y):
    ur, uy = grad_U(ctx, r, y)
    return np.hypot(ur, uy)


def p_laplacian_U(ctx: PotentialContext, r, y):
    """Closed form of -div(|grad U|^{p-2} grad U) away from the pole.

    Expanding |g|^2 Delta U + (p-2) g.H.g for g = grad U, every term cubic in the
    two point-source factors cancels and what remains is
    -4 (N-p)(p-2)(N+p-2) / ((p-1)^2 omega^{2/(p-1)}) |g|^{p-4} U |x|^2 d_-^{-2a-4} d_+^{-2a-4}.
    It carries no cancellation, is nonpositive for p > 2 and vanishes on the axis.
    """
    r, y, dm2, dp2 = _distances(r, y)
    N, p = ctx.N, ctx.p
    if p == 2.0 or ctx.critical:
        return np.zeros(np.broadcast(r, y).shape)
    a = ctx.a
    coef = -4.0 * (N - p) * (p - 2.0) * (N + p - 2.0) / ((p - 1.0) ** 2 * ctx.omega ** (2.0 / (p - 1.0)))
    g = grad_U_norm(ctx, r, y)
    u = U(ctx, r, y)
    return coef * g ** (p - 4.0) * u * r * r * dm2 ** (-a - 2.0) * dp2 ** (-a - 2.0)


def singular_order(ctx: PotentialContext) -> float:
    """Exponent beta with |p_laplacian_U| = O(d_-^{-beta}) at the pole."""
    return (ctx.N - 1.0) * (ctx.p - 2.0) / (ctx.p - 1.0)


def X_ratio(r, y):
    """X = d_-^2 / d_+^2 in [0, 1)."""
    r, y, dm2, dp2 = _distances(r, y, allow_pole=True)
    return dm2 / dp2


def V_p(ctx: PotentialContext, r, y):
    """Improved Hardy potential; all powers of X are taken through log X."""
    if ctx.critical:
        raise DomainError("V_p is defined for p < N; use V_N_weight at p = N")
    r, y, dm2, dp2 = _distances(r, y)
    N, p, a = ctx.N, ctx.p, ctx.a
    lx = _log_X(y, dm2, dp2)
    xa = np.exp(a * lx)
    num = 1.0 + np.exp((N - 1.0) / (p - 1.0) * lx) - 2.0 * xa * (r * r + y * y - 1.0) / dp2
    den = np.expm1(a * lx) ** 2
    return num / den


def V_N_weight(N: int, r, y):
    """V_N = 1 / (d_-^2 (d_+^2/4) (log sqrt(d_+^2/d_-^2))^2); the inequality weight is V_N^{N/2}."""
    r, y, dm2, dp2 = _distances(r, y)
    half_log = 0.5 * np.log1p(4.0 * y / dm2)
    return 1.0 / (dm2 * (dp2 / 4.0) * half_log ** 2)


def hardy_weight(ctx: PotentialContext, r, y):
    """Weight of the improved inequality: V_p^{p/2} d_-^{-p}, or V_N^{N/2} at p = N."""
    if ctx.critical:
        return V_N_weight(ctx.N, r, y) ** (ctx.N / 2.0)
    r, y, dm2, dp2 = _distances(r, y)
    return V_p(ctx, r, y) ** (ctx.p / 2.0) * dm2 ** (-ctx.p / 2.0)


def _check_level(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0) or np.any(t > 1.0):
        raise DomainError("ball radius must lie in (0, 1]")
    return t


def green_ball(ctx: PotentialContext, t):
    """Green function of the unit ball with pole at the origin, as a function of |z| = t."""
    t = _check_level(t)
    if ctx.critical:
        return ctx.omega ** (-1.0 / (ctx.N - 1.0)) * np.log(1.0 / t)
    k = (ctx.N - ctx.p) / (ctx.p - 1.0)
    return ctx.c_np * (t ** (-k) - 1.0)


def green_ball_inverse(ctx: PotentialContext, s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise DomainError("Green levels are nonnegative")
    if ctx.critical:
        return np.exp(-s * ctx.omega ** (1.0 / (ctx.N - 1.0)))
    k = (ctx.N - ctx.p) / (ctx.p - 1.0)
    return (s / ctx.c_np + 1.0) ** (-1.0 / k)


def green_radial_derivative(ctx: PotentialContext, t):
    """d/dt of the ball (or whole-space) Green function: -omega^{-1/(p-1)} t^{-(N-1)/(p-1)}."""
    t = np.asarray(t, dtype=float)
    return -ctx.omega ** (-1.0 / (ctx.p - 1.0)) * t ** (-(ctx.N - 1.0) / (ctx.p - 1.0))


def green_rn(ctx: PotentialContext, r):
    """Fundamental solution on R^N with pole at the origin, as a function of |z| = r."""
    if ctx.critical:
        raise DomainError("the whole-space Green function needs p < N")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("radius must be positive")
    return ctx.c_np * r ** (-(ctx.N - ctx.p) / (ctx.p - 1.0))


def green_rn_inverse(ctx: PotentialContext, s):
    if ctx.critical:
        raise DomainError("the whole-space Green function needs p < N")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DomainError("levels must be positive")
    return (s / ctx.c_np) ** (-(ctx.p - 1.0) / (ctx.N - ctx.p))


def h_map(ctx: PotentialContext, r, y):
    """The radius h(r, y) with U(r, y) = green_rn(h(r, y))."""
    if ctx.critical:
        raise DomainError("h is defined for p < N")
    r, y, dm2, dp2 = _distances(r, y)
    a = ctx.a
    log_bracket = -a * np.log(dm2) + np.log(-np.expm1(a * _log_X(y, dm2, dp2)))
    return np.exp(-log_bracket / (2.0 * a))


def psi2_and_G2(N: int, r, y):
    """Reflected part psi_2 = d_+^{-(N-2)} and the p = 2 Green function of the half-space."""
    if N < 3:
        raise DomainError("psi_2 needs N >= 3")
    r, y, dm2, dp2 = _distances(r, y)
    psi = dp2 ** (-(N - 2.0) / 2.0)
    g = (1.0 / (N - 2.0)) / sphere_area(N) * (dm2 ** (-(N - 2.0) / 2.0) - psi)
    return psi, g


def level_radius(ctx: PotentialContext, theta, s, iterations: int = 64):
    """Distance rho from the pole along direction theta at which U equals s.

    Directions are measured from the positive y axis, so the ray is
    (r, y) = (rho sin theta, 1 + rho cos theta).  U strictly decreases along
    every such ray, so bisection in log rho brackets the unique crossing.
    """
    theta = np.asarray(theta, dtype=float)
    s = float(s)
    if not s > 0.0:
        raise DomainError("level must be positive")
    st, ct = np.sin(theta), np.cos(theta)
    if ctx.critical:
        # U <= omega^{-1/(N-1)} log(1 + 2/rho)
        hi = 2.0 / np.expm1(s * ctx.omega ** (1.0 / (ctx.N - 1.0)))
    else:
        # U < C rho^{-2a}
        hi = (ctx.c_np / s) ** (1.0 / (2.0 * ctx.a))
    hi = np.full(theta.shape, min(hi, 1e150))
    down = ct < 0.0
    hit = np.where(down, -1.0 / np.where(down, ct, -1.0), np.inf)
    hi = np.minimum(hi, hit)
    lo = hi * 1e-12
    lhi, llo = np.log(hi), np.log(lo)
    for _ in range(iterations):
        mid = 0.5 * (lhi + llo)
        rho = np.exp(mid)
        yy = 1.0 + rho * ct
        inside = yy > 0.0
        val = np.where(inside, U(ctx, np.abs(rho * st), np.where(inside, yy, 1.0 + rho)), 0.0)
        above = val > s
        llo = np.where(above, mid, llo)
        lhi = np.where(above, lhi, mid)
    return np.exp(0.5 * (lhi + llo))
