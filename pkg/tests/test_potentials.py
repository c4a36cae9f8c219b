import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardyhalf.core_math import DomainError, PoleError, sphere_area
from hardyhalf.potentials import (
    HalfSpacePoint,
    PotentialContext,
    U,
    V_N_weight,
    V_p,
    X_ratio,
    grad_U,
    green_ball,
    green_ball_inverse,
    green_rn,
    green_rn_inverse,
    h_map,
    hardy_weight,
    level_radius,
    p_laplacian_U,
    psi2_and_G2,
)

# -div(|grad U|^{p-2} grad U) from tests/oracles/plaplacian_mpmath.py (40-digit mpmath)
PLAP_ORACLE = [
    ((5, 3.0, 0.2, 0.5), -0.015828310925040547),
    ((5, 3.0, 1.5, 2.0), -0.00013873478399776946),
    ((3, 1.5, 0.7, 1.4), 0.00062956499643102261),
    ((3, 1.5, 0.2, 0.5), 0.0016154802110929771),
    ((6, 5.0, 0.7, 1.4), -0.006221012394740356),
    ((6, 5.0, 0.2, 0.5), -0.059699159844829079),
    ((4, 2.5, 0.7, 1.4), -0.0022056793792372131),
]


@pytest.mark.parametrize("args,value", PLAP_ORACLE)
def test_p_laplacian_against_oracle(args, value):
    N, p, r, y = args
    assert p_laplacian_U(PotentialContext.of(N, p), r, y) == pytest.approx(value, rel=1e-11)


def test_p_laplacian_vanishes_for_two_and_n_and_on_axis():
    r, y = np.array([0.3, 1.2]), np.array([0.4, 2.0])
    assert np.all(p_laplacian_U(PotentialContext.of(4, 2.0), r, y) == 0.0)
    assert np.all(p_laplacian_U(PotentialContext.of(4, 4.0), r, y) == 0.0)
    assert p_laplacian_U(PotentialContext.of(5, 3.0), 0.0, 0.5) == 0.0


def test_u_from_definition():
    for N, p in [(3, 2.0), (5, 3.0), (3, 1.5)]:
        ctx = PotentialContext.of(N, p)
        C = (p - 1) / (N - p) * sphere_area(N) ** (-1 / (p - 1))
        k = (N - p) / (p - 1)
        r, y = 0.7, 0.4
        ref = C * ((r * r + (y - 1) ** 2) ** (-k / 2) - (r * r + (y + 1) ** 2) ** (-k / 2))
        assert U(ctx, r, y) == pytest.approx(ref, rel=1e-13)
    ctx = PotentialContext.of(2, 2.0)
    r, y = 0.7, 0.4
    ref = math.log(math.sqrt((r * r + (y + 1) ** 2) / (r * r + (y - 1) ** 2))) / (2 * math.pi)
    assert U(ctx, r, y) == pytest.approx(ref, rel=1e-13)


def test_u_accurate_near_boundary_and_pole():
    ctx = PotentialContext.of(5, 3.0)
    # U ~ 2 a C y d^{-2a-2} (4... ) -> linear in y at the boundary, no cancellation loss
    small = U(ctx, 0.5, 1e-12) / 1e-12
    assert small == pytest.approx(U(ctx, 0.5, 1e-9) / 1e-9, rel=1e-6)
    assert np.isfinite(U(ctx, 1e-150, 1.0))


@settings(max_examples=60)
@given(st.floats(0.01, 5.0), st.floats(0.01, 5.0), st.sampled_from([(3, 2.0), (5, 3.0), (3, 1.5), (2, 2.0)]))
def test_gradient_matches_finite_differences(r, y, Np):
    ctx = PotentialContext.of(*Np)
    if math.hypot(r, y - 1) < 0.05:
        return
    h = 1e-6 * (1 + r + y)
    ur, uy = grad_U(ctx, r, y)
    fr = (U(ctx, r + h, y) - U(ctx, r - h, y)) / (2 * h)
    fy = (U(ctx, r, y + h) - U(ctx, r, y - h)) / (2 * h)
    scale = math.hypot(ur, uy)
    assert abs(ur - fr) < 1e-5 * scale and abs(uy - fy) < 1e-5 * scale


@settings(max_examples=80)
@given(st.floats(-3, 1.5), st.floats(-3, 1.5), st.sampled_from([(3, 2.0), (4, 2.5), (5, 3.0), (6, 2.2)]))
def test_vp_at_least_one(lr, ly, Np):
    r, y = 10 ** lr, 10 ** ly
    if math.hypot(r, y - 1) < 1e-6:
        return
    assert V_p(PotentialContext.of(*Np), r, y) >= 1.0 - 1e-12


def test_v2_spot_value():
    assert V_p(PotentialContext.of(3, 2.0), 0.0, 2.0) == pytest.approx(16 / 9, abs=1e-12)


def test_hardy_weight_at_p_equal_n():
    ctx = PotentialContext.of(3, 3.0)
    assert hardy_weight(ctx, 0.5, 0.5) == pytest.approx(V_N_weight(3, 0.5, 0.5) ** 1.5)
    with pytest.raises(DomainError):
        V_p(ctx, 0.5, 0.5)


def test_x_ratio_in_unit_interval():
    r = np.linspace(0, 3, 7)
    x = X_ratio(r, np.full(7, 0.5))
    assert np.all((x >= 0) & (x < 1))
    assert X_ratio(0.0, 1.0) == 0.0


def test_domain_errors():
    ctx = PotentialContext.of(3, 2.0)
    with pytest.raises(DomainError):
        U(ctx, 0.1, 0.0)
    with pytest.raises(DomainError):
        U(ctx, -0.1, 1.0)
    with pytest.raises(PoleError):
        U(ctx, 0.0, 1.0)
    with pytest.raises(DomainError):
        HalfSpacePoint(0.0, -1.0)
    with pytest.raises(DomainError):
        PotentialContext.of(3, 3.0).c_np
    assert HalfSpacePoint(1.0, 2.0).d_plus_sq == 10.0


@pytest.mark.parametrize("Np", [(3, 2.0), (5, 3.0), (3, 3.0), (2, 2.0)])
def test_green_ball_roundtrip(Np):
    ctx = PotentialContext.of(*Np)
    t = np.array([0.01, 0.3, 0.9, 1.0])
    assert np.allclose(green_ball_inverse(ctx, green_ball(ctx, t)), t, rtol=1e-12)
    assert green_ball(ctx, 1.0) == 0.0


def test_green_rn_and_h_map():
    ctx = PotentialContext.of(5, 3.0)
    r = np.array([0.1, 1.0, 10.0])
    assert np.allclose(green_rn_inverse(ctx, green_rn(ctx, r)), r, rtol=1e-12)
    rr, yy = np.array([0.3, 2.0]), np.array([0.2, 1.7])
    assert np.allclose(green_rn(ctx, h_map(ctx, rr, yy)), U(ctx, rr, yy), rtol=1e-12)
    with pytest.raises(DomainError):
        green_rn(PotentialContext.of(3, 3.0), 1.0)


def test_psi2_reflection():
    psi, g = psi2_and_G2(3, 0.5, 0.5)
    assert g == pytest.approx(U(PotentialContext.of(3, 2.0), 0.5, 0.5), rel=1e-13)
    assert psi == pytest.approx(1 / math.sqrt(0.25 + 2.25))
    with pytest.raises(DomainError):
        psi2_and_G2(2, 0.5, 0.5)


@pytest.mark.parametrize("Np", [(3, 2.0), (5, 3.0), (2, 2.0)])
def test_level_radius_hits_level(Np):
    ctx = PotentialContext.of(*Np)
    theta = np.linspace(0.01, math.pi - 0.01, 9)
    for s in (0.01, 0.3, 2.0):
        rho = level_radius(ctx, theta, s)
        assert np.all(rho > 1e-6)
        vals = U(ctx, rho * np.sin(theta), 1 + rho * np.cos(theta))
        assert np.allclose(vals, s, rtol=1e-10)
