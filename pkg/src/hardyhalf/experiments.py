"""Named verification experiments, their registry and the report format.

An experiment expands its configuration into independent tasks (one per grid
point), runs them serially or in a process pool, and reduces the rows in grid
order.  Every row carries a margin: the measured deviation minus the allowed
tolerance, so a row passes when its margin is <= 0.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import functionals as fn
from . import mobius as mb
from .core_math import (
    DomainError,
    Params,
    bliss_log_constant,
    critical_hardy_constant,
    hardy_constant,
    sobolev_constant,
    tm_threshold,
)
from .potentials import (
    PotentialContext,
    V_N_weight,
    V_p,
    X_ratio,
    grad_U,
    hardy_weight,
    p_laplacian_U,
    singular_order,
)
from .quadrature import QuadratureSpec, integrate_about_pole, integrate_ball_nd, superlevel_flux, superlevel_integral
from .transplant import (
    dimension_transform,
    dirichlet_energy_symmetric,
    hardy_side_symmetric,
    level_set_energy_rn,
    line_energy,
    moser_transform,
    radial_energy,
    transplant_from_ball,
    transplant_from_rn,
    weighted_hardy_1d,
)


class ConfigError(DomainError):
    """Unknown experiment or invalid configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    params_grid: Dict[str, list] = field(default_factory=dict)
    family_grid: Dict[str, list] = field(default_factory=dict)
    quadrature: Dict[str, float] = field(default_factory=dict)
    seed: int = 0
    output: Optional[str] = None
    options: Dict[str, object] = field(default_factory=dict)
    tol_scale: float = 1.0

    def spec(self) -> QuadratureSpec:
        try:
            return QuadratureSpec(**self.quadrature)
        except TypeError as exc:
            raise ConfigError(f"bad quadrature override: {exc}") from None

    def to_dict(self) -> dict:
        """Everything that determines the rows; the output prefix is left out so reports compare byte for byte."""
        return {
            "experiment": self.experiment,
            "params_grid": self.params_grid,
            "family_grid": self.family_grid,
            "quadrature": self.quadrature,
            "seed": self.seed,
            "options": self.options,
            "tol_scale": self.tol_scale,
        }


@dataclass
class Row:
    inputs: Dict[str, object]
    outputs: Dict[str, object]
    margin: float
    converged: bool = True


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    rows: List[Row]
    passed: bool
    worst_violation: float
    runtime_seconds: Optional[float] = None

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.rows)

    def to_dict(self, include_runtime: bool = False) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "rows": [
                {"row_index": i, "inputs": _jsonable(r.inputs), "outputs": _jsonable(r.outputs),
                 "margin": _num(r.margin), "converged": r.converged}
                for i, r in enumerate(self.rows)
            ],
            "summary": {
                "pass": self.passed,
                "worst_violation": _num(self.worst_violation),
                "runtime_seconds": self.runtime_seconds if include_runtime else None,
            },
        }


@dataclass(frozen=True)
class Experiment:
    name: str
    claim: str
    tolerance: str
    defaults: dict
    tasks: Callable
    finalize: Optional[Callable] = None


# ------------------------------------------------------------------ helpers

def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _jsonable(d: dict) -> dict:
    return {k: _num(v) for k, v in d.items()}


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng([int(k) for k in key])


def _pkey(p: float) -> int:
    return int(round(p * 1000))


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# ------------------------------------------------------------ mobius-invariance

def _bump(c, rho, amp):
    c = np.asarray(c, dtype=float)

    def f(w):
        x = np.sum((w - c) ** 2, axis=-1) / rho ** 2
        return amp * np.where(x < 1.0, (1.0 - np.minimum(x, 1.0)) ** 4, 0.0)

    return f


def _ball_image(M: mb.MobiusMap, c, rho):
    """Centre and radius of the image of the sphere |w - c| = rho under M."""
    N = M.N
    pts = np.concatenate([c + rho * np.eye(N), c - rho * np.eye(N)])
    w = mb.apply(M, pts)
    A = np.concatenate([2.0 * w, np.ones((w.shape[0], 1))], axis=1)
    b = np.sum(w * w, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    m = sol[:N]
    R = math.sqrt(sol[N] + float(m @ m))
    return m, R


def _random_map(N: int, kind: str, rng: np.random.Generator) -> mb.MobiusMap:
    if kind == "T":
        return mb.MobiusMap((mb.Translation(tuple(rng.uniform(-1.0, 1.0, N))),), N)
    if kind == "S":
        return mb.MobiusMap((mb.Scaling(float(rng.uniform(0.5, 2.0))),), N)
    if kind == "R":
        return mb.MobiusMap((mb.random_orthogonal(N, rng),), N)
    if kind == "J":
        return mb.MobiusMap((mb.Inversion(),), N)
    if kind == "Cayley":
        return mb.cayley_as_composition(N)
    raise ConfigError(f"unknown map {kind!r}")


def _mobius_task(N: int, p: float, j: int, seed: int, maps: list, n_rule: int, tol_scale: float) -> List[Row]:
    rng = _rng(seed, N, _pkey(p), j)
    kind = maps[j % len(maps)]
    M = _random_map(N, kind, rng)
    pole_below = np.zeros(N)
    pole_below[-1] = -1.0
    while True:
        rho = float(rng.uniform(0.2, 0.6))
        c = rng.uniform(-1.5, 1.5, N)
        if np.linalg.norm(c) > rho + 0.25 and np.linalg.norm(c - pole_below) > rho + 0.25:
            break
    f = _bump(c, rho, float(rng.uniform(0.5, 2.0)))
    g = mb.pushforward(M, f, p)
    m, R = _ball_image(M.inverse(), c, rho)
    grad_p = lambda h: (lambda z: np.sum(mb.fd_gradient(h, z) ** 2, axis=-1) ** (p / 2.0))
    rows = []
    e0 = integrate_ball_nd(N, grad_p(f), c, rho, n_rule)
    e1 = integrate_ball_nd(N, grad_p(g), m, R, n_rule)
    base = {"N": N, "p": p, "sample": j, "map": kind}
    d = _rel(e0.value, e1.value)
    rows.append(Row({**base, "quantity": "energy"}, {"original": e0.value, "transformed": e1.value,
                                                    "rel_error": d}, d - 1e-5 * tol_scale))
    if p < N:
        ps = N * p / (N - p)
        l0 = integrate_ball_nd(N, lambda z: np.abs(f(z)) ** ps, c, rho, n_rule)
        l1 = integrate_ball_nd(N, lambda z: np.abs(g(z)) ** ps, m, R, n_rule)
        d = _rel(l0.value, l1.value)
        rows.append(Row({**base, "quantity": "lp_star"}, {"original": l0.value, "transformed": l1.value,
                                                         "rel_error": d}, d - 1e-5 * tol_scale))
        hw = lambda h: (lambda z: np.abs(h(z)) ** p / np.sum(z * z, axis=-1) ** (p / 2.0))
        h0 = integrate_ball_nd(N, hw(f), c, rho, n_rule)
        h1 = integrate_ball_nd(N, hw(g), m, R, n_rule)
        d = _rel(h0.value, h1.value)
        rows.append(Row({**base, "quantity": "hardy"}, {"original": h0.value, "transformed": h1.value,
                                                       "rel_error": d}, d - 1e-5 * tol_scale))
    return rows


def _mobius_tasks(cfg: ExperimentConfig):
    maps = list(cfg.options.get("maps", ["T", "S", "R", "J", "Cayley"]))
    n = int(cfg.options.get("samples", 20))
    n_rule = int(cfg.options.get("rule_points", 24))
    out = []
    for N in cfg.params_grid["N"]:
        for p in sorted({2.0, float(N)} if cfg.params_grid.get("p") is None else
                        {float(N) if x == "N" else float(x) for x in cfg.params_grid["p"]}):
            for j in range(n):
                out.append((_mobius_task, dict(N=int(N), p=p, j=j, seed=cfg.seed, maps=maps,
                                               n_rule=n_rule, tol_scale=cfg.tol_scale)))
    return out


# ------------------------------------------------------------ cayley-identities

def _cayley_task(N: int, n: int, seed: int, tol_scale: float) -> List[Row]:
    rng = _rng(seed, N)
    x = rng.uniform(-3.0, 3.0, (n, N - 1))
    y = rng.uniform(0.01, 3.0, n)
    z = np.concatenate([x, y[:, None]], axis=1)
    B = mb.cayley(z)
    comp = mb.cayley_as_composition(N)
    tol = 1e-10 * tol_scale
    rows = []
    inv = float(np.max(np.linalg.norm(mb.cayley(B) - z, axis=1) / (1.0 + np.linalg.norm(z, axis=1))))
    rows.append(Row({"N": N, "check": "involution"}, {"max_error": inv}, inv - tol))
    # |B(z)|^2 = d_-^2 / d_+^2 < 1 on the half-space
    r = np.linalg.norm(x, axis=1)
    ball = float(np.max(np.abs(np.sum(B * B, axis=1) - X_ratio(r, y))))
    ball = max(ball, float(np.max(np.sum(B * B, axis=1))) - 1.0)
    rows.append(Row({"N": N, "check": "maps_to_ball"}, {"max_error": ball}, ball - tol))
    d0 = mb.cayley_jacobian_det(z)
    d1 = mb.jacobian_det(comp, z)
    det = float(np.max(np.abs(d0 - d1) / np.abs(d0)))
    rows.append(Row({"N": N, "check": "determinant"}, {"max_error": det}, det - tol))
    dec = float(np.max(np.linalg.norm(mb.apply(comp, z) - B, axis=1)))
    rows.append(Row({"N": N, "check": "decomposition"}, {"max_error": dec}, dec - tol))
    dd = np.linalg.det(mb.differential(comp, z))
    dif = float(np.max(np.abs(dd - d0) / np.abs(d0)))
    rows.append(Row({"N": N, "check": "differential_det"}, {"max_error": dif}, dif - 1e-9 * tol_scale))
    return rows


def _cayley_tasks(cfg):
    n = int(cfg.options.get("points", 1000))
    return [(_cayley_task, dict(N=int(N), n=n, seed=cfg.seed, tol_scale=cfg.tol_scale))
            for N in cfg.params_grid["N"]]


# ------------------------------------------------------------ plaplacian-sign

def _sample_halfspace(rng, n):
    r = 10.0 ** rng.uniform(-3.0, 1.5, n)
    y = 10.0 ** rng.uniform(-3.0, 1.5, n)
    keep = (r * r + (y - 1.0) ** 2) > 1e-6
    return r[keep], y[keep]


def _fd_divergence(ctx, r, y, h_rel=2e-3):
    """-div(|grad U|^{p-2} grad U) in axisymmetric coordinates by fourth-order central differences.

    The step is a fixed fraction of the distance to the pole, the axis and the
    boundary, which keeps the truncation error uniform in relative terms.
    """
    p, N = ctx.p, ctx.N

    def flux(R, Y):
        ur, uy = grad_U(ctx, R, Y)
        g = np.hypot(ur, uy) ** (p - 2.0)
        return g * ur, g * uy

    h = h_rel * np.minimum(np.minimum(np.sqrt(r * r + (y - 1.0) ** 2), r), y)

    def d5(F):
        return (-F(2.0) + 8.0 * F(1.0) - 8.0 * F(-1.0) + F(-2.0)) / (12.0 * h)

    dr = d5(lambda k: flux(r + k * h, y)[0])
    dy = d5(lambda k: flux(r, y + k * h)[1])
    ar, _ = flux(r, y)
    return -(dr + (N - 2.0) * ar / r + dy)


def _expected_sign(N, p):
    if p == 2.0 or p == N:
        return 0
    return -1 if p < 2.0 else 1


def _plap_task(N: int, p: float, n: int, n_fd: int, seed: int, tol_scale: float) -> List[Row]:
    ctx = PotentialContext.of(N, p)
    rng = _rng(seed, N, _pkey(p))
    r, y = _sample_halfspace(rng, n)
    val = p_laplacian_U(ctx, r, y)
    sgn = _expected_sign(N, p)
    base = {"N": N, "p": p}
    if sgn == 0:
        worst = float(np.max(np.abs(val)))
        frac = float(np.mean(val != 0.0))
        sign_row = Row({**base, "check": "sign"}, {"expected_sign": 0, "worst": worst,
                                                   "violating_fraction": frac}, worst)
    else:
        bad = -sgn * val
        worst = float(np.max(bad))
        frac = float(np.mean(bad > 0.0))
        sign_row = Row({**base, "check": "sign"}, {"expected_sign": sgn, "worst": worst,
                                                   "violating_fraction": frac}, worst)
    rows = [sign_row]
    if sgn != 0:
        rf = rng.uniform(0.1, 2.0, n_fd)
        yf = rng.uniform(0.1, 3.0, n_fd)
        far = (rf * rf + (yf - 1.0) ** 2) > 0.01
        rf, yf = rf[far], yf[far]
        cf = p_laplacian_U(ctx, rf, yf)
        fd = _fd_divergence(ctx, rf, yf)
        rel = float(np.max(np.abs(cf - fd) / np.abs(cf)))
        rows.append(Row({**base, "check": "closed_form_vs_fd"}, {"max_rel_error": rel}, rel - 1e-4 * tol_scale))
    return rows


def _plap_tasks(cfg):
    n = int(cfg.options.get("points", 10000))
    n_fd = int(cfg.options.get("fd_points", 200))
    return [(_plap_task, dict(N=int(N), p=float(p), n=n, n_fd=n_fd, seed=cfg.seed, tol_scale=cfg.tol_scale))
            for N, p in cfg.params_grid["Np"]]


# ------------------------------------------------------------ weak-form

def _weak_form_task(N: int, p: float, j: int, seed: int, quad: dict, tol_scale: float) -> List[Row]:
    ctx = PotentialContext.of(N, p)
    spec = QuadratureSpec(**quad)
    rng = _rng(seed, N, _pkey(p), j)
    yc = 1.0 + float(rng.uniform(-0.3, 0.3))
    rho = float(rng.uniform(abs(yc - 1.0) + 0.1, 0.95 - abs(yc - 1.0)))
    amp = float(rng.uniform(0.5, 2.0))

    def phi(R, Y):
        x = (R * R + (Y - yc) ** 2) / rho ** 2
        return amp * np.where(x < 1.0, (1.0 - np.minimum(x, 1.0)) ** 4, 0.0)

    def dphi(R, Y):
        x = (R * R + (Y - yc) ** 2) / rho ** 2
        c = np.where(x < 1.0, -4.0 * amp * (1.0 - np.minimum(x, 1.0)) ** 3 * 2.0 / rho ** 2, 0.0)
        return c * R, c * (Y - yc)

    def flux_term(R, Y):
        ur, uy = grad_U(ctx, R, Y)
        pr, py = dphi(R, Y)
        return np.hypot(ur, uy) ** (p - 2.0) * (ur * pr + uy * py)

    radius = abs(yc - 1.0) + rho
    a = integrate_about_pole(N, flux_term, spec, beta=N - 1.0, radius=min(radius, 1.0))
    if p == 2.0 or p == N:
        b_val, b_conv = 0.0, True
    else:
        b = integrate_about_pole(N, lambda R, Y: p_laplacian_U(ctx, R, Y) * phi(R, Y), spec,
                                 beta=singular_order(ctx), radius=min(radius, 1.0))
        b_val, b_conv = b.value, b.converged
    target = float(phi(np.float64(0.0), np.float64(1.0)))
    res = abs(a.value - b_val - target) / target
    return [Row({"N": N, "p": p, "bump": j},
                {"flux_integral": a.value, "defect_integral": b_val, "phi_at_pole": target, "rel_residual": res},
                res - 1e-3 * tol_scale, a.converged and b_conv)]


def _weak_form_tasks(cfg):
    n = int(cfg.options.get("bumps", 5))
    return [(_weak_form_task, dict(N=int(N), p=float(p), j=j, seed=cfg.seed, quad=cfg.quadrature,
                                   tol_scale=cfg.tol_scale))
            for N, p in cfg.params_grid["Np"] for j in range(n)]


# ------------------------------------------------------------ vp-bound

def _vp_task(N: int, p: float, n: int, seed: int, tol_scale: float) -> List[Row]:
    ctx = PotentialContext.of(N, p)
    rng = _rng(seed, N, _pkey(p))
    r, y = _sample_halfspace(rng, n)
    v = V_p(ctx, r, y)
    vmin = float(np.min(v))
    rows = [Row({"N": N, "p": p, "check": "lower_bound"}, {"min_Vp": vmin, "points": int(r.size)},
                (1.0 - vmin) - 1e-12 * tol_scale)]
    if N == 3 and p == 2.0:
        spot = float(V_p(ctx, 0.0, 2.0))
        err = abs(spot - 16.0 / 9.0)
        rows.append(Row({"N": N, "p": p, "check": "spot_value"}, {"min_Vp": spot, "points": 1},
                        err - 1e-12 * tol_scale))
    return rows


def _vp_tasks(cfg):
    n = int(cfg.options.get("points", 10000))
    return [(_vp_task, dict(N=int(N), p=float(p), n=n, seed=cfg.seed, tol_scale=cfg.tol_scale))
            for N, p in cfg.params_grid["Np"]]


# ------------------------------------------------------------ critical-hardy

def _ch_sample_task(N: int, j: int, seed: int, quad: dict, tol_scale: float, dual: bool) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, float(N))
    rng = _rng(seed, N, j)
    v = fn.random_smooth_profile(int(rng.integers(2 ** 31)), 1.0, inner=float(rng.uniform(0.05, 0.3)))
    u = transplant_from_ball(ctx, v)
    kind = fn.CriticalHardyHalf(N)
    ev = fn.evaluate(kind, u, spec)
    c = critical_hardy_constant(N)
    rows = [Row({"N": N, "check": "sample", "sample": j}, {"quotient": ev.quotient, "constant": c},
                c - ev.quotient - 1e-6 * tol_scale, ev.converged)]
    if dual:
        d = fn.lhs(kind, u, spec, route="direct")
        rel = _rel(d.value, ev.lhs.value)
        rows.append(Row({"N": N, "check": "pullback_identity", "sample": j},
                        {"quotient": d.value, "constant": ev.lhs.value, "rel_error": rel},
                        rel - 1e-4 * tol_scale, d.converged and ev.converged))
    return rows


def _ch_sweep_task(N: int, eps: float, quad: dict) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, float(N))
    u = transplant_from_ball(ctx, fn.family_ch_concentration(N, eps))
    ev = fn.evaluate(fn.CriticalHardyHalf(N), u, spec)
    c = critical_hardy_constant(N)
    return [Row({"N": N, "check": "concentration", "eps": eps}, {"quotient": ev.quotient, "constant": c},
                c - ev.quotient, ev.converged)]


def _ch_tasks(cfg):
    n = int(cfg.options.get("samples", 25))
    n_dual = int(cfg.options.get("dual_samples", 2))
    out = [(_ch_sample_task, dict(N=int(N), j=j, seed=cfg.seed, quad=cfg.quadrature, tol_scale=cfg.tol_scale,
                                  dual=j < n_dual))
           for N in cfg.params_grid["N"] for j in range(n)]
    for N in cfg.family_grid.get("sweep_N", [2]):
        for eps in cfg.family_grid["eps"]:
            out.append((_ch_sweep_task, dict(N=int(N), eps=float(eps), quad=cfg.quadrature)))
    return out


def _ch_finalize(cfg, rows):
    out = []
    for N in cfg.family_grid.get("sweep_N", [2]):
        sweep = [r for r in rows if r.inputs.get("check") == "concentration" and r.inputs["N"] == N]
        if not sweep:
            continue
        last = sweep[-1]
        gap = abs(last.outputs["quotient"] - last.outputs["constant"]) / last.outputs["constant"]
        out.append(Row({"N": N, "check": "concentration_limit"},
                       {"quotient": last.outputs["quotient"], "constant": last.outputs["constant"],
                        "rel_error": gap}, gap - 0.1 * cfg.tol_scale, all(r.converged for r in sweep)))
    return rows + out


# ------------------------------------------------------------ improved-hardy

def _random_rn_function(ctx, rng):
    w = fn.random_smooth_profile(int(rng.integers(2 ** 31)), float(rng.uniform(0.5, 3.0)))
    return transplant_from_rn(ctx, w), w


def _ih_sample_task(N: int, p: float, j: int, symmetric: bool, seed: int, quad: dict,
                    tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, p)
    rng = _rng(seed, N, _pkey(p), j, 1 if symmetric else 2)
    u, _ = _random_rn_function(ctx, rng)
    if not symmetric:
        u = fn.random_product(u, int(rng.integers(2 ** 31)))
    ev = fn.evaluate(fn.ImprovedHardyHalf(N, p), u, spec)
    c = hardy_constant(Params(N, p))
    return [Row({"N": N, "p": p, "check": "symmetric" if symmetric else "non_symmetric", "sample": j},
                {"quotient": ev.quotient, "constant": c}, c - ev.quotient - 1e-6 * tol_scale, ev.converged)]


def _ih_sweep_task(N: int, p: float, eps: float, M: float, quad: dict) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, p)
    ev = fn.family_ih_quotient(ctx, eps, M, spec)
    c = hardy_constant(Params(N, p))
    return [Row({"N": N, "p": p, "check": "family_ih", "eps": eps, "M": M},
                {"quotient": ev.quotient, "constant": c}, 0.0, ev.converged)]


def _ih_identity_task(N: int, p: float, j: int, seed: int, quad: dict, tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, p)
    rng = _rng(seed, N, _pkey(p), j, 3)
    if j % 2 == 0:
        u, _ = _random_rn_function(ctx, rng)
        origin = "rn"
    else:
        v = fn.random_smooth_profile(int(rng.integers(2 ** 31)), 1.0)
        u = transplant_from_ball(ctx, v)
        origin = "ball"
    rows = []
    for name, res in (("energy_identity", dirichlet_energy_symmetric(ctx, u, spec)),
                      ("hardy_identity", hardy_side_symmetric(ctx, u, spec))):
        d = res.discrepancy
        rows.append(Row({"N": N, "p": p, "check": name, "sample": j, "origin": origin},
                        {"direct": res.value, "identity": res.identity, "rel_error": d},
                        d - 1e-3 * tol_scale, res.converged))
    return rows


def _claim2_task(N: int, p: float, j: int, seed: int, quad: dict, tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, p)
    rng = _rng(seed, N, _pkey(p), j, 4)
    w = fn.random_smooth_profile(int(rng.integers(2 ** 31)), float(rng.uniform(0.5, 3.0)))
    a, b = weighted_hardy_1d(ctx, w, spec)
    return [Row({"N": N, "p": p, "check": "weighted_1d_hardy", "sample": j},
                {"lhs": a.value, "rhs": b.value}, a.value - b.value - 1e-9 * tol_scale,
                a.converged and b.converged)]


def _ih_tasks(cfg):
    o = cfg.options
    out = []
    for N, p in cfg.params_grid["Np"]:
        N, p = int(N), float(p)
        for j in range(int(o.get("symmetric_samples", 25))):
            out.append((_ih_sample_task, dict(N=N, p=p, j=j, symmetric=True, seed=cfg.seed,
                                              quad=cfg.quadrature, tol_scale=cfg.tol_scale)))
        for j in range(int(o.get("non_symmetric_samples", 10))):
            out.append((_ih_sample_task, dict(N=N, p=p, j=j, symmetric=False, seed=cfg.seed,
                                              quad=cfg.quadrature, tol_scale=cfg.tol_scale)))
        for M in cfg.family_grid["M"]:
            for eps in cfg.family_grid["eps"]:
                out.append((_ih_sweep_task, dict(N=N, p=p, eps=float(eps), M=float(M), quad=cfg.quadrature)))
        for j in range(int(o.get("identity_samples", 4))):
            out.append((_ih_identity_task, dict(N=N, p=p, j=j, seed=cfg.seed, quad=cfg.quadrature,
                                                tol_scale=cfg.tol_scale)))
        for j in range(int(o.get("claim_samples", 10))):
            out.append((_claim2_task, dict(N=N, p=p, j=j, seed=cfg.seed, quad=cfg.quadrature,
                                           tol_scale=cfg.tol_scale)))
    return out


def richardson_limit(eps: list, q: list) -> float:
    """Value at eps = 0 of the quadratic through the last three points (eps halving)."""
    if len(eps) < 3:
        x, y = np.asarray(eps[-2:]), np.asarray(q[-2:])
        return float(y[-1] - x[-1] * (y[-1] - y[-2]) / (x[-1] - x[-2]))
    coef = np.polyfit(np.asarray(eps[-3:]), np.asarray(q[-3:]), 2)
    return float(coef[-1])


def _ih_finalize(cfg, rows):
    out = list(rows)
    for N, p in cfg.params_grid["Np"]:
        for M in cfg.family_grid["M"]:
            sweep = [r for r in rows if r.inputs.get("check") == "family_ih" and r.inputs["N"] == N
                     and r.inputs["p"] == float(p) and r.inputs["M"] == float(M)]
            sweep.sort(key=lambda r: -r.inputs["eps"])
            if not sweep:
                continue
            qs = [r.outputs["quotient"] for r in sweep]
            es = [r.inputs["eps"] for r in sweep]
            rise = max([b - a for a, b in zip(qs[:-1], qs[1:])] + [-math.inf])
            c = sweep[0].outputs["constant"]
            lim = richardson_limit(es, qs)
            gap = abs(lim - c) / c
            conv = all(r.converged for r in sweep)
            out.append(Row({"N": int(N), "p": float(p), "check": "family_ih_decreasing", "M": float(M)},
                           {"quotient": qs[-1], "constant": c, "max_increase": rise}, rise, conv))
            out.append(Row({"N": int(N), "p": float(p), "check": "family_ih_limit", "M": float(M)},
                           {"quotient": lim, "constant": c, "rel_error": gap}, gap - 0.1 * cfg.tol_scale, conv))
    return out


# ------------------------------------------------------------ limit-p-to-N

def _limit_task(N: int, ks: list, n_points: int, seed: int) -> List[Row]:
    rng = _rng(seed, N)
    r = rng.uniform(0.05, 2.0, n_points)
    y = rng.uniform(0.05, 2.5, n_points)
    crit = critical_hardy_constant(N) * V_N_weight(N, r, y) ** (N / 2.0)
    rows = []
    prev = None
    for k in ks:
        p = N - 2.0 ** (-k)
        ctx = PotentialContext.of(N, p)
        d = np.abs(hardy_constant(Params(N, p)) * hardy_weight(ctx, r, y) - crit)
        rise = -math.inf if prev is None else float(np.max(d - prev))
        rows.append(Row({"N": N, "k": int(k), "p": p},
                        {"max_discrepancy": float(np.max(d)), "mean_discrepancy": float(np.mean(d)),
                         "max_increase": rise}, rise if prev is not None else -1.0))
        prev = d
    return rows


def _limit_tasks(cfg):
    ks = [int(k) for k in cfg.family_grid["k"]]
    return [(_limit_task, dict(N=int(N), ks=ks, n_points=int(cfg.options.get("points", 20)), seed=cfg.seed))
            for N in cfg.params_grid["N"]]


# ------------------------------------------------------------ fp-properties

def _fp_task(N: int, p: float, s_grid: list, quad: dict, tol_scale: float) -> List[Row]:
    ctx = PotentialContext.of(N, p)
    spec = QuadratureSpec(**{"abs_tol": 1e-300, **quad})
    zero = p == 2.0 or p == N
    rows = []
    prev = None
    # levels in the natural unit of U: C(N,p), or omega^{-1/(N-1)} at p = N
    scale = ctx.omega ** (-1.0 / (N - 1.0)) if ctx.critical else ctx.c_np
    for s_rel in s_grid:
        s = float(s_rel) * scale
        F = superlevel_integral(ctx, s, spec)
        flux = superlevel_flux(ctx, s, spec)
        base = {"N": N, "p": p, "s": s}
        if zero:
            margin = max(abs(F.value), abs(flux.value)) - 1e-8 * tol_scale
            rows.append(Row({**base, "check": "vanishes"}, {"F": F.value, "F_flux": flux.value}, margin,
                            F.converged and flux.converged))
            continue
        rows.append(Row({**base, "check": "positive"}, {"F": F.value, "F_flux": flux.value}, -F.value,
                        F.converged and flux.converged))
        if prev is not None:
            rows.append(Row({**base, "check": "nonincreasing"}, {"F": F.value, "F_flux": flux.value},
                            F.value - prev, F.converged))
        prev = F.value
    return rows


def _fp_tasks(cfg):
    return [(_fp_task, dict(N=int(N), p=float(p), s_grid=list(cfg.family_grid["s"]), quad=cfg.quadrature,
                            tol_scale=cfg.tol_scale))
            for N, p in cfg.params_grid["Np"]]


# ------------------------------------------------------------ tm-scan

def _tm_task(N: int, factor: float, k: float, quad: dict) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, float(N))
    u = transplant_from_ball(ctx, fn.moser_function(N, k))
    alpha = factor * tm_threshold(N)
    val = fn.lhs(fn.TrudingerMoser(N, alpha), u, spec)
    energy = fn.rhs(fn.CriticalHardyHalf(N), u, spec)
    return [Row({"N": N, "alpha_factor": factor, "k": k, "check": "value"},
                {"tm": val.value, "energy": energy.value}, 0.0, val.converged and energy.converged)]


def _tm_tasks(cfg):
    return [(_tm_task, dict(N=int(N), factor=float(f), k=float(k), quad=cfg.quadrature))
            for N in cfg.params_grid["N"] for f in cfg.family_grid["alpha_factor"] for k in cfg.family_grid["k"]]


def _tm_finalize(cfg, rows):
    out = list(rows)
    for N in cfg.params_grid["N"]:
        for f in cfg.family_grid["alpha_factor"]:
            sel = [r for r in rows if r.inputs["N"] == N and r.inputs["alpha_factor"] == float(f)]
            vals = [r.outputs["tm"] for r in sel]
            conv = all(r.converged for r in sel)
            if float(f) <= 1.0:
                # bounded: never above twice the first value and no new maximum at the end of the grid
                m = max(vals[-1] - max(vals[:-1]), max(vals) - 2.0 * vals[0])
                out.append(Row({"N": int(N), "alpha_factor": float(f), "check": "bounded"},
                               {"tm": max(vals), "first_value": vals[0]}, m, conv))
            else:
                rise = min(b - a for a, b in zip(vals[:-1], vals[1:]))
                growth = vals[-1] / vals[0]
                m = max(2.0 - growth, -rise)
                out.append(Row({"N": int(N), "alpha_factor": float(f), "check": "unbounded_growth"},
                               {"tm": vals[-1], "first_value": vals[0], "growth": growth}, m, conv))
    return out


# ------------------------------------------------------------ no-weight-rn

def _no_weight_task(N: int, log_R: float, quad: dict, tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    R = math.exp(log_R)
    phi = fn.family_log_cutoff(R)
    kind = fn.WeightedCandidate(N, 2.0, lambda t: np.where(t < 1.0, 1.0, 0.0), 1.0)
    ev = fn.evaluate(kind, phi, spec)
    closed = fn.log_cutoff_energy(N, R)
    err = _rel(ev.rhs.value, closed)
    return [Row({"N": N, "log_R": log_R, "check": "energy"},
                {"energy": ev.rhs.value, "closed_form": closed, "quotient": ev.quotient, "rel_error": err},
                err - 1e-8 * tol_scale, ev.converged)]


def _no_weight_tasks(cfg):
    return [(_no_weight_task, dict(N=int(N), log_R=float(L), quad=cfg.quadrature, tol_scale=cfg.tol_scale))
            for N in cfg.params_grid["N"] for L in cfg.family_grid["log_R"]]


def _slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)), 1)[0])


def _no_weight_finalize(cfg, rows):
    out = list(rows)
    for N in cfg.params_grid["N"]:
        sel = [r for r in rows if r.inputs["N"] == N]
        sl = _slope([r.inputs["log_R"] for r in sel], [r.outputs["quotient"] for r in sel])
        target = 1.0 - N
        err = abs(sl - target) / abs(target)
        out.append(Row({"N": int(N), "check": "decay_slope"}, {"slope": sl, "expected_slope": target,
                                                               "rel_error": err},
                       err - 0.05 * cfg.tol_scale, all(r.converged for r in sel)))
    return out


# ------------------------------------------------------------ asym-counterexample

def _bubble_task(N: int, p: float, s: float, eps: float, quad: dict) -> List[Row]:
    spec = QuadratureSpec(**quad)
    b = fn.family_bubble(N, p, eps)
    e = fn.bubble_energy(b, spec)
    w = fn.bubble_weighted_side(b, s, spec)
    return [Row({"N": N, "p": p, "s": s, "eps": eps, "check": "bubble"},
                {"energy": e.value, "energy_closed_form": b.energy_closed_form(), "quotient": e.value / w.value},
                0.0, e.converged and w.converged)]


def _bubble_tasks(cfg):
    out = []
    for N, p, s in cfg.params_grid["Nps"]:
        for eps in sorted(set(cfg.family_grid["eps"]) | set(cfg.family_grid["energy_eps"]), reverse=True):
            out.append((_bubble_task, dict(N=int(N), p=float(p), s=float(s), eps=float(eps), quad=cfg.quadrature)))
    return out


def _bubble_finalize(cfg, rows):
    out = list(rows)
    for N, p, s in cfg.params_grid["Nps"]:
        sel = [r for r in rows if (r.inputs["N"], r.inputs["p"], r.inputs["s"]) == (N, float(p), float(s))]
        conv = all(r.converged for r in sel)
        en = [r for r in sel if r.inputs["eps"] in [float(e) for e in cfg.family_grid["energy_eps"]]]
        sl = _slope([r.inputs["eps"] for r in en], [r.outputs["energy"] for r in en])
        err = abs(sl - (N - p)) / (N - p)
        out.append(Row({"N": N, "p": float(p), "s": float(s), "check": "energy_slope"},
                       {"slope": sl, "expected_slope": N - p, "rel_error": err}, err - 0.01 * cfg.tol_scale, conv))
        qs = [r for r in sel if r.inputs["eps"] in [float(e) for e in cfg.family_grid["eps"]]]
        sl = _slope([r.inputs["eps"] for r in qs], [r.outputs["quotient"] for r in qs])
        target = (N - 1.0) * (p - s) / (N - s)
        err = abs(sl - target) / target
        out.append(Row({"N": N, "p": float(p), "s": float(s), "check": "quotient_slope"},
                       {"slope": sl, "expected_slope": target, "rel_error": err}, err - 0.1 * cfg.tol_scale, conv))
    return out


# ------------------------------------------------------------ bliss-limit

def _bliss_limit_task(N: int, qs: list, tol_scale: float) -> List[Row]:
    c = critical_hardy_constant(N)
    rows = []
    for q in qs:
        val = bliss_log_constant(N, N + q)
        rows.append(Row({"N": N, "q_minus_N": q, "check": "C_q"}, {"value": val, "limit": c,
                                                                  "abs_error": abs(val - c)}, 0.0))
    last = rows[-1]
    last.margin = last.outputs["abs_error"] - 0.01 * tol_scale
    return rows


def _sobolev_spot_task(tol_scale: float) -> List[Row]:
    val = sobolev_constant(Params(3, 2.0))
    ref = 3.0 * (math.pi / 2.0) ** (4.0 / 3.0)
    err = abs(val - ref) / ref
    return [Row({"N": 3, "check": "S_32"}, {"value": val, "limit": ref, "abs_error": err}, err - 1e-9 * tol_scale)]


def _bliss_sample_task(p: float, q: float, j: int, seed: int, quad: dict, tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    rng = _rng(seed, _pkey(p), _pkey(q), j)
    end = float(rng.uniform(1.0, 4.0))
    v = fn.random_smooth_profile(int(rng.integers(2 ** 31)), end, inner=float(rng.uniform(0.05, 0.5)))
    kind = fn.Bliss(p, q)
    ev = fn.evaluate(kind, v, spec)
    c = fn.best_constant(kind)
    return [Row({"p": p, "q": q, "check": "bliss_sample", "sample": j}, {"value": ev.quotient, "limit": c},
                c - ev.quotient - 1e-6 * tol_scale, ev.converged)]


def _bliss_tasks(cfg):
    out = [(_bliss_limit_task, dict(N=int(N), qs=[float(x) for x in cfg.family_grid["q_minus_N"]],
                                    tol_scale=cfg.tol_scale)) for N in cfg.params_grid["N"]]
    out.append((_sobolev_spot_task, dict(tol_scale=cfg.tol_scale)))
    for p, q in cfg.params_grid["pq"]:
        for j in range(int(cfg.options.get("samples", 10))):
            out.append((_bliss_sample_task, dict(p=float(p), q=float(q), j=j, seed=cfg.seed, quad=cfg.quadrature,
                                                 tol_scale=cfg.tol_scale)))
    return out


# ------------------------------------------------------------ transplant-isometries

def _moser_task(N: int, p: float, j: int, seed: int, quad: dict, tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    rng = _rng(seed, N, _pkey(p), j)
    R = float(rng.uniform(0.5, 2.0))
    u = fn.random_smooth_profile(int(rng.integers(2 ** 31)), R)
    v = moser_transform(N, u, R, p)
    a = radial_energy(N, p, u, R, spec)
    b = line_energy(p, v, spec)
    err = _rel(a.value, b.value)
    return [Row({"N": N, "p": p, "m": N, "check": "moser", "sample": j},
                {"original": a.value, "transformed": b.value, "rel_error": err}, err - 1e-4 * tol_scale,
                a.converged and b.converged)]


def _dimension_task(N: int, m: int, j: int, seed: int, quad: dict, tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    rng = _rng(seed, N, m, j)
    R = float(rng.uniform(0.5, 2.0))
    u = fn.random_smooth_profile(int(rng.integers(2 ** 31)), R)
    v = dimension_transform(N, m, R, u)
    a = radial_energy(N, float(N), u, R, spec)
    b = radial_energy(m, float(N), v, R, spec)
    err = _rel(a.value, b.value)
    return [Row({"N": N, "p": float(N), "m": m, "check": "dimension", "sample": j},
                {"original": a.value, "transformed": b.value, "rel_error": err}, err - 1e-4 * tol_scale,
                a.converged and b.converged)]


def _level_set_task(N: int, p: float, t: float, quad: dict, tol_scale: float) -> List[Row]:
    spec = QuadratureSpec(**quad)
    ctx = PotentialContext.of(N, p)
    res = level_set_energy_rn(ctx, t, spec)
    err = abs(res.value - t) / t
    return [Row({"N": N, "p": p, "m": N, "check": "level_set", "sample": t},
                {"original": t, "transformed": res.value, "rel_error": err}, err - 1e-6 * tol_scale, res.converged)]


def _isometry_tasks(cfg):
    n = int(cfg.options.get("samples", 3))
    out = []
    for N, p in cfg.params_grid["Np_moser"]:
        for j in range(n):
            out.append((_moser_task, dict(N=int(N), p=float(p), j=j, seed=cfg.seed, quad=cfg.quadrature,
                                          tol_scale=cfg.tol_scale)))
    for N, m in cfg.params_grid["Nm"]:
        for j in range(n):
            out.append((_dimension_task, dict(N=int(N), m=int(m), j=j, seed=cfg.seed, quad=cfg.quadrature,
                                              tol_scale=cfg.tol_scale)))
    for N, p in cfg.params_grid["Np_level"]:
        for t in cfg.family_grid["t"]:
            out.append((_level_set_task, dict(N=int(N), p=float(p), t=float(t), quad=cfg.quadrature,
                                              tol_scale=cfg.tol_scale)))
    return out


# ------------------------------------------------------------ determinism

def _determinism_task(target: str, seed: int, jobs: list) -> List[Row]:
    blobs = []
    for j in jobs:
        cfg = make_config({"experiment": target, "seed": seed})
        rep = run(cfg, jobs=int(j), progress=False)
        blobs.append((int(j), emit_csv(rep), emit_json(rep)))
    rows = []
    ref = blobs[0]
    for j, c, js in blobs[1:]:
        same = c == ref[1] and js == ref[2]
        rows.append(Row({"experiment_under_test": target, "jobs_a": ref[0], "jobs_b": j},
                        {"identical": same, "csv_bytes": len(c.encode())}, 0.0 if same else 1.0))
    return rows


def _determinism_tasks(cfg):
    return [(_determinism_task, dict(target=str(t), seed=cfg.seed, jobs=list(cfg.options.get("jobs", [1, 1, 8]))))
            for t in cfg.options.get("targets", ["vp-bound", "cayley-identities"])]


# ------------------------------------------------------------ registry

REGISTRY: Dict[str, Experiment] = {}


def _register(name, claim, tolerance, defaults, tasks, finalize=None):
    REGISTRY[name] = Experiment(name, claim, tolerance, defaults, tasks, finalize)


_register(
    "mobius-invariance",
    "Moebius pushforwards preserve the p-energy for p in {2, N}, and the L^{p*} norm and the Hardy integral "
    "int |f|^p/|z|^p for p < N",
    "1e-5 relative per sample",
    {"params_grid": {"N": [2, 3]}, "options": {"samples": 20, "maps": ["T", "S", "R", "J", "Cayley"]}},
    _mobius_tasks,
)
_register(
    "cayley-identities",
    "The Cayley-type map is an involution onto the ball with det B' = -(2/((1+y)^2+|x|^2))^N and equals "
    "its composition of elementary maps",
    "1e-10 absolute (determinants relative)",
    {"params_grid": {"N": [2, 3, 4]}, "options": {"points": 1000}},
    _cayley_tasks,
)
_register(
    "plaplacian-sign",
    "-Delta_p U_p is <= 0 for p < 2, >= 0 for 2 < p < N and 0 for p in {2, N}; "
    "closed form agrees with the finite-difference divergence",
    "sign margin 0; closed form vs finite differences 1e-4 relative",
    {"params_grid": {"Np": [[3, 1.5], [4, 2.0], [5, 3.0], [6, 5.0], [4, 4.0]]},
     "options": {"points": 10000, "fd_points": 200}},
    _plap_tasks,
)
_register(
    "weak-form",
    "int |grad U|^{p-2} grad U . grad phi - int (-Delta_p U) phi = phi(0, 1) for bumps phi",
    "1e-3 relative",
    {"params_grid": {"Np": [[3, 1.5], [3, 2.0], [5, 3.0], [4, 4.0]]}, "options": {"bumps": 5},
     "quadrature": {"rel_tol": 1e-7, "abs_tol": 1e-10}},
    _weak_form_tasks,
)
_register(
    "vp-bound",
    "V_p >= 1 on the half-space; V_2(0, 2) = 16/9 for N = 3",
    "1e-12",
    {"params_grid": {"Np": [[3, 2.0], [4, 2.5], [5, 3.0]]}, "options": {"points": 10000}},
    _vp_tasks,
)
_register(
    "critical-hardy",
    "Critical Hardy inequality on the half-space with constant ((N-1)/N)^N, sharp along concentrating "
    "pullbacks of ball functions",
    "quotient >= constant - 1e-6; pullback identity 1e-4 relative; sweep within 10%",
    {"params_grid": {"N": [2, 3]}, "family_grid": {"eps": [0.1, 0.01, 0.001], "sweep_N": [2]},
     "options": {"samples": 25, "dual_samples": 2}},
    _ch_tasks,
    _ch_finalize,
)
_register(
    "improved-hardy",
    "Improved Hardy inequality with weight V_p^{p/2} d_-^{-p} and constant ((N-p)/p)^p for p in [2, N), "
    "transplantation identities, sharpness along u_{eps,M}, and the F_p-weighted 1-D Hardy inequality",
    "quotient >= constant - 1e-6; identities 1e-3 relative; limit within 10%; 1-D margin 1e-9",
    {"params_grid": {"Np": [[4, 2.0], [5, 3.0]]}, "family_grid": {"eps": [0.4, 0.2, 0.1, 0.05], "M": [1.0]},
     "options": {"symmetric_samples": 25, "non_symmetric_samples": 10, "identity_samples": 4,
                 "claim_samples": 10}},
    _ih_tasks,
    _ih_finalize,
)
_register(
    "limit-p-to-N",
    "((N-p)/p)^p V_p^{p/2} d_-^{-p} tends to ((N-1)/N)^N V_N^{N/2} as p increases to N",
    "discrepancy monotone decreasing at every point",
    {"params_grid": {"N": [3]}, "family_grid": {"k": [2, 3, 4, 5, 6, 7]}, "options": {"points": 20}},
    _limit_tasks,
)
_register(
    "fp-properties",
    "F_p vanishes for p in {2, N}; F_p > 0 and nonincreasing in s for 2 < p < N",
    "|F| <= 1e-8 for p in {2, N}; sign and monotonicity margins 0 (s in units of C(N,p))",
    {"params_grid": {"Np": [[3, 2.0], [4, 4.0], [5, 3.0], [4, 2.5]]},
     "family_grid": {"s": [0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0]}},
    _fp_tasks,
)
_register(
    "tm-scan",
    "Trudinger-Moser functional on the half-space with measure 2^N d_+^{-2N}: bounded for alpha below "
    "N omega_{N-1}^{1/(N-1)}, unbounded above it (Moser sequence)",
    "bounded: max <= 2 x first value and no maximum at the end; above: growth >= 2 and monotone",
    {"params_grid": {"N": [2]}, "family_grid": {"alpha_factor": [0.9, 1.1], "k": [1, 2, 4, 8, 16]}},
    _tm_tasks,
    _tm_finalize,
)
_register(
    "no-weight-rn",
    "No weight g > 0 embeds radial W^{1,N}_0(R^N) into L^q(g): the log cutoff has energy "
    "omega_{N-1} (log R)^{1-N} -> 0",
    "energy 1e-8 relative; log-log slope within 5%",
    {"params_grid": {"N": [2, 3]}, "family_grid": {"log_R": [1.0, 2.0, 4.0, 8.0]}},
    _no_weight_tasks,
    _no_weight_finalize,
)
_register(
    "asym-counterexample",
    "Without the symmetry the improved Hardy-Sobolev quotient has infimum 0: bubbles at the boundary decay "
    "like eps^{(N-1)(p-s)/(N-s)}",
    "slope within 10% (energy slope N-p within 1%)",
    {"params_grid": {"Nps": [[3, 2.0, 1.0]]},
     "family_grid": {"eps": [0.04, 0.02, 0.01, 0.005], "energy_eps": [0.2, 0.1, 0.05]}},
    _bubble_tasks,
    _bubble_finalize,
)
_register(
    "bliss-limit",
    "C(q) of the logarithmic Bliss inequality tends to ((N-1)/N)^N as q decreases to N; "
    "S_{3,2} = 3 (pi/2)^{4/3}; the Bliss inequality holds with C(p, q)",
    "|C(N + 1/64) - limit| <= 0.01; S_{3,2} 1e-9 relative; quotient >= C(p,q)^p - 1e-6",
    {"params_grid": {"N": [2, 3], "pq": [[2.0, 4.0], [2.0, 6.0]]},
     "family_grid": {"q_minus_N": [1.0, 0.25, 0.0625, 0.015625]}, "options": {"samples": 10}},
    _bliss_tasks,
)
_register(
    "transplant-isometries",
    "Moser and dimension transforms preserve the energy; int_{G < t} |grad G|^p = t",
    "1e-4 relative (transforms); 1e-6 relative (level set)",
    {"params_grid": {"Np_moser": [[2, 2.0], [3, 3.0], [5, 3.0], [3, 2.0]], "Nm": [[2, 3], [2, 4], [3, 5]],
                     "Np_level": [[3, 2.0], [5, 3.0], [4, 2.5]]},
     "family_grid": {"t": [0.1, 1.0, 10.0]}, "options": {"samples": 3}},
    _isometry_tasks,
)
_register(
    "determinism",
    "Reports are byte-identical across repeated runs and across worker counts",
    "identical bytes",
    {"options": {"targets": ["vp-bound", "cayley-identities"], "jobs": [1, 1, 8]}, "seed": 42},
    _determinism_tasks,
)


# ------------------------------------------------------------------ running

def make_config(data: dict, **overrides) -> ExperimentConfig:
    """Merge a JSON-like dict and flag overrides onto the registry defaults."""
    data = dict(data or {})
    data.update({k: v for k, v in overrides.items() if v is not None})
    name = data.get("experiment")
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; known: {', '.join(sorted(REGISTRY))}")
    d = copy.deepcopy(REGISTRY[name].defaults)
    allowed = {"experiment", "params_grid", "family_grid", "quadrature", "seed", "output", "options", "tol_scale"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    for key in ("params_grid", "family_grid", "quadrature", "options"):
        merged = dict(d.get(key, {}))
        merged.update(data.get(key) or {})
        d[key] = merged
    for key in ("seed", "output", "tol_scale"):
        if key in data:
            d[key] = data[key]
    cfg = ExperimentConfig(name, d.get("params_grid", {}), d.get("family_grid", {}), d.get("quadrature", {}),
                           int(d.get("seed", 0)), d.get("output"), d.get("options", {}),
                           float(d.get("tol_scale", 1.0)))
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    for grid in (cfg.params_grid, cfg.family_grid):
        for k, v in grid.items():
            if not isinstance(v, list) or not v:
                raise ConfigError(f"grid {k!r} must be a nonempty list")
    if not cfg.tol_scale > 0.0:
        raise ConfigError("tol_scale must be positive")
    cfg.spec()
    try:
        for key in ("Np", "Np_moser", "Np_level"):
            for N, p in cfg.params_grid.get(key, []):
                Params(int(N), float(p))
        for N in cfg.params_grid.get("N", []):
            Params(int(N), 2.0)
        for N, p, s in cfg.params_grid.get("Nps", []):
            Params(int(N), float(p), s=float(s))
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid parameter grid: {exc}") from None


def _call(task):
    func, kwargs = task
    return func(**kwargs)


def run(cfg: ExperimentConfig, jobs: int = 1, progress: bool = True) -> ExperimentReport:
    exp = REGISTRY[cfg.experiment]
    t0 = time.time()
    tasks = exp.tasks(cfg)
    results: List[List[Row]] = []
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, rows in enumerate(pool.map(_call, tasks)):
                results.append(rows)
                if progress:
                    print(f"[{cfg.experiment}] {i + 1}/{len(tasks)}", file=sys.stderr)
    else:
        for i, task in enumerate(tasks):
            results.append(_call(task))
            if progress:
                print(f"[{cfg.experiment}] {i + 1}/{len(tasks)}", file=sys.stderr)
    rows = [r for chunk in results for r in chunk]
    if exp.finalize is not None:
        rows = exp.finalize(cfg, rows)
    worst = max([r.margin for r in rows], default=-math.inf)
    passed = worst <= 0.0 and all(r.converged for r in rows)
    return ExperimentReport(cfg.experiment, cfg.to_dict(), rows, passed, worst, time.time() - t0)


# ------------------------------------------------------------------ emitting

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def emit_csv(report: ExperimentReport) -> str:
    in_names = sorted({k for r in report.rows for k in r.inputs})
    out_names = sorted({k for r in report.rows for k in r.outputs})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["experiment", "row_index"] + in_names + out_names + ["margin", "converged"])
    for i, r in enumerate(report.rows):
        w.writerow([report.experiment, str(i)] + [_fmt(r.inputs.get(k)) for k in in_names]
                   + [_fmt(r.outputs.get(k)) for k in out_names] + [_fmt(r.margin), _fmt(r.converged)])
    return buf.getvalue()


def emit_json(report: ExperimentReport, include_runtime: bool = False) -> str:
    return json.dumps(report.to_dict(include_runtime), indent=2) + "\n"


def emit(report: ExperimentReport, fmt: str, path: str, include_runtime: bool = False) -> None:
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    text = emit_csv(report) if fmt == "csv" else emit_json(report, include_runtime)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_report(text: str) -> dict:
    return json.loads(text)
