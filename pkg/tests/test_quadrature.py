import math

import numpy as np
import pytest

from hardyhalf.core_math import DomainError, ball_volume
from hardyhalf.potentials import PotentialContext, U
from hardyhalf.quadrature import (
    IntegralResult,
    QuadratureSpec,
    integrate_1d,
    integrate_about_pole,
    integrate_ball_nd,
    integrate_between_levels,
    integrate_halfspace_axisym,
    integrate_polar,
    superlevel_flux,
    superlevel_integral,
)


def test_smooth_and_piecewise():
    assert integrate_1d(np.sin, 0, math.pi).value == pytest.approx(2.0, rel=1e-13)
    f = lambda t: np.abs(t - 0.3)
    assert integrate_1d(f, 0, 1, points=(0.3,)).value == pytest.approx(0.045 + 0.245, rel=1e-13)


def test_infinite_interval():
    res = integrate_1d(lambda t: np.exp(-t), 0, math.inf)
    assert res.value == pytest.approx(1.0, rel=1e-10) and res.converged
    res = integrate_1d(lambda t: 1 / (1 + t) ** 3, 0, math.inf)
    assert res.value == pytest.approx(0.5, rel=1e-9)


@pytest.mark.parametrize("gamma", [-0.5, -0.9, 0.5])
def test_singular_left(gamma):
    res = integrate_1d(lambda t: t ** gamma, 0, 1, singular="left")
    assert res.value == pytest.approx(1 / (gamma + 1), rel=1e-8)
    assert res.converged


def test_singular_right_and_both():
    f = lambda t: (1 - t) ** -0.5
    assert integrate_1d(f, 0, 1, singular="right").value == pytest.approx(2.0, rel=1e-8)
    g = lambda t: (t * (1 - t)) ** -0.5
    assert integrate_1d(g, 0, 1, singular="both").value == pytest.approx(math.pi, rel=1e-8)


def test_singular_left_vanishing_near_endpoint():
    f = lambda t: np.where(t > 0.5, (t - 0.5) ** 2, 0.0) * t ** -1.5
    res = integrate_1d(f, 0, 1, singular="left", points=(0.5,))
    ref = integrate_1d(f, 0.5, 1).value
    assert res.converged and res.value == pytest.approx(ref, rel=1e-12)


def test_log_left():
    # int_0^{1/e} dt / (t log^2 t) = 1
    f = lambda t: 1 / (t * np.log(t) ** 2)
    assert integrate_1d(f, 0, math.exp(-1), log_left=True).value == pytest.approx(1.0, rel=1e-8)


def test_bad_interval():
    with pytest.raises(DomainError):
        integrate_1d(np.sin, 1, 0)
    with pytest.raises(DomainError):
        integrate_1d(np.sin, 0, math.inf, singular="right")


def test_result_arithmetic():
    a = IntegralResult(1.0, 0.1, 10, True)
    b = IntegralResult(2.0, 0.2, 5, False)
    c = a + b
    assert (c.value, c.evaluations, c.converged) == (3.0, 15, False)
    assert c.error_estimate == pytest.approx(0.3)
    assert a.scaled(-2).value == -2.0 and a.scaled(-2).error_estimate == pytest.approx(0.2)


@pytest.mark.parametrize("N", [2, 3])
def test_ball_rule_volume_and_moment(N):
    c = np.array([0.5, -1.0, 2.0][:N])
    v = integrate_ball_nd(N, lambda z: np.ones(z.shape[0]), c, 0.7)
    assert v.value == pytest.approx(ball_volume(N) * 0.7 ** N, rel=1e-12)
    m = integrate_ball_nd(N, lambda z: np.sum((z - c) ** 2, axis=1), c, 0.7)
    assert m.value == pytest.approx(ball_volume(N) * N / (N + 2) * 0.7 ** (N + 2), rel=1e-12)


def test_halfspace_integral_of_gaussian():
    # int over {y > 0} of exp(-|x|^2 - y^2) in R^3 = pi^{3/2} / 2
    f = lambda R, Y: np.exp(-R * R - Y * Y)
    res = integrate_halfspace_axisym(3, f)
    assert res.value == pytest.approx(math.pi ** 1.5 / 2, rel=1e-8)


def test_about_pole_with_singularity():
    # int over the unit ball about the pole of d^{-beta}: omega_{N-1} / (N - beta)
    N, beta = 3, 2.5
    f = lambda R, Y: (R * R + (Y - 1) ** 2) ** (-beta / 2)
    res = integrate_about_pole(N, f, beta=beta, radius=1.0)
    assert res.value == pytest.approx(4 * math.pi / (N - beta), rel=1e-7)


def test_whole_halfspace_about_pole():
    f = lambda R, Y: np.exp(-R * R - Y * Y)
    res = integrate_about_pole(3, f)
    assert res.value == pytest.approx(math.pi ** 1.5 / 2, rel=1e-8)


def test_between_levels_volume():
    # the superlevel set {U > s} for p = 2, N = 3 is the ball of Apollonius; compare volumes
    ctx = PotentialContext.of(3, 2.0)
    s = 0.2
    res = integrate_between_levels(ctx, lambda R, Y: np.ones_like(R), [s])
    # X = d_-^2/d_+^2 is constant on {U = s}: d_- = 1/(4 pi s + 1/d_+) has no closed form, so
    # compare with a brute-force polar integral of the indicator
    ind = lambda R, Y: (U(ctx, R, Y) > s).astype(float)
    ref = integrate_about_pole(3, ind, radius=1.0, spec=QuadratureSpec(rel_tol=1e-6))
    assert res.value == pytest.approx(ref.value, rel=1e-4)


# F_p(s) from tests/oracles/fp_flux_mpmath.py: level-set flux at 20 digits, independent of the package
FP_ORACLE = [((5, 3.0, 0.1), -0.05696295306837), ((5, 3.0, 1.0), -0.0005224866674282),
             ((4, 2.5, 0.01), -0.09488215491295)]


@pytest.mark.parametrize("args,value", FP_ORACLE)
def test_superlevel_integral_against_oracle(args, value):
    N, p, s = args
    ctx = PotentialContext.of(N, p)
    assert superlevel_integral(ctx, s).value == pytest.approx(value, rel=1e-10)
    assert superlevel_flux(ctx, s).value == pytest.approx(value, rel=1e-10)


@pytest.mark.parametrize("Np", [(3, 2.0), (4, 4.0)])
def test_flux_route_vanishes_for_two_and_n(Np):
    ctx = PotentialContext.of(*Np)
    for s in (0.01, 0.1, 1.0):
        assert superlevel_integral(ctx, s).value == 0.0
        assert abs(superlevel_flux(ctx, s).value) < 1e-10


def test_superlevel_requires_positive_level():
    with pytest.raises(DomainError):
        superlevel_integral(PotentialContext.of(5, 3.0), 0.0)


def test_spec_scaling():
    s = QuadratureSpec().scaled(10.0)
    assert s.rel_tol == pytest.approx(10 * QuadratureSpec().rel_tol)


def test_polar_annulus_area():
    # area element in N = 2 is 2 R... use N = 2: annulus 0.2 < d < 0.5 about the pole, weight 1
    res = integrate_polar(2, lambda R, Y: np.ones_like(R), center_y=1.0,
                          inner=lambda T: np.full(np.shape(T), 0.2), outer=lambda T: np.full(np.shape(T), 0.5))
    assert res.value == pytest.approx(math.pi * (0.25 - 0.04), rel=1e-12)
