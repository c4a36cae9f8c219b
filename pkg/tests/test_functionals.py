import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from hardyhalf import functionals as fn
from hardyhalf.core_math import DomainError, ball_volume, critical_hardy_constant, tm_threshold
from hardyhalf.potentials import PotentialContext
from hardyhalf.transplant import RadialProfile, transplant_from_ball, transplant_from_rn


def _tent():
    return RadialProfile(lambda t: np.where(t <= 1, t, 2 - t), lambda t: np.where(t <= 1, 1.0, -1.0), 2.0, (1.0,))


def test_bliss_tent_against_mpmath():
    ev = fn.evaluate(fn.Bliss(2.0, 4.0), _tent())
    ref = mp.quad(lambda t: t, [0, 1]) + mp.quad(lambda t: (2 - t) ** 4 / t ** 3, [1, 2])
    assert ev.lhs.value == pytest.approx(float(mp.sqrt(ref)), rel=1e-12)
    assert ev.rhs.value == pytest.approx(2.0, rel=1e-13)
    assert ev.quotient >= fn.best_constant(fn.Bliss(2.0, 4.0))


def test_log_cutoff_energy_two_pi():
    kind = fn.WeightedCandidate(2, 2.0, lambda t: (t < 1) * 1.0, 1.0)
    assert fn.rhs(kind, fn.family_log_cutoff(math.e)).value == pytest.approx(2 * math.pi, rel=1e-12)
    assert fn.log_cutoff_energy(2, math.e) == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("eps", [0.1, 0.01])
def test_concentration_quotient_closed_form(eps):
    N = 2
    u = transplant_from_ball(PotentialContext.of(N, N), fn.family_ch_concentration(N, eps))
    q = fn.rayleigh(fn.CriticalHardyHalf(N), u)
    c = (N - 1) / N
    J = 3 - 4 * math.log(2)
    assert q == pytest.approx(((c + eps) ** N / (N * eps) + 1) / (1 / (N * eps) + J), rel=1e-8)


@pytest.mark.parametrize("N", [2, 3])
def test_critical_hardy_routes_agree(N):
    ctx = PotentialContext.of(N, N)
    u = transplant_from_ball(ctx, fn.random_smooth_profile(1, 1.0, inner=0.2))
    kind = fn.CriticalHardyHalf(N)
    assert fn.lhs(kind, u, route="direct").value == pytest.approx(fn.lhs(kind, u).value, rel=1e-8)
    assert fn.rhs(kind, u, route="direct").value == pytest.approx(fn.rhs(kind, u).value, rel=1e-8)


@settings(max_examples=8, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10 ** 6), st.floats(0.05, 0.4), st.sampled_from([2, 3]))
def test_critical_hardy_quotient_above_constant(seed, inner, N):
    u = transplant_from_ball(PotentialContext.of(N, N), fn.random_smooth_profile(seed, 1.0, inner=inner))
    assert fn.rayleigh(fn.CriticalHardyHalf(N), u) >= critical_hardy_constant(N) - 1e-6


@settings(max_examples=6, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10 ** 6), st.sampled_from([(4, 2.0), (3, 2.0)]))
def test_improved_hardy_quotient_above_constant(seed, Np):
    ctx = PotentialContext.of(*Np)
    kind = fn.ImprovedHardyHalf(*Np)
    u = transplant_from_rn(ctx, fn.random_smooth_profile(seed, 1.5))
    assert fn.rayleigh(kind, u) >= fn.best_constant(kind) - 1e-6
    assert fn.rayleigh(kind, fn.random_product(u, seed)) >= fn.best_constant(kind) - 1e-6


def test_improved_hardy_routes_agree():
    ctx = PotentialContext.of(5, 3.0)
    u = transplant_from_rn(ctx, fn.random_smooth_profile(0, 1.5))
    kind = fn.ImprovedHardyHalf(5, 3.0)
    assert fn.lhs(kind, u, route="direct").value == pytest.approx(fn.lhs(kind, u).value, rel=1e-4)
    assert fn.rhs(kind, u, route="direct").value == pytest.approx(fn.rhs(kind, u).value, rel=1e-4)


@pytest.mark.parametrize("s", [0.0, 1.0])
def test_hardy_sobolev_routes_agree(s):
    ctx = PotentialContext.of(3, 2.0)
    u = transplant_from_rn(ctx, fn.random_smooth_profile(3, 1.0))
    kind = fn.HardySobolevImproved(3, s)
    assert fn.lhs(kind, u, route="direct").value == pytest.approx(fn.lhs(kind, u).value, rel=1e-8)
    assert fn.rayleigh(kind, u) >= fn.best_constant(kind)


# family_ih quotients at M = 1 (regression values, level-variable route)
IH_FAMILY = {(4, 2.0): [3.7995788027992261, 2.4196925705324559, 1.7148980801583915, 1.3587214000592223],
             (5, 3.0): [5.8295970512792952, 3.295570709416725, 1.8581225368809557, 1.0932675655419637]}


@pytest.mark.parametrize("Np", sorted(IH_FAMILY))
def test_family_ih_quotients(Np):
    ctx = PotentialContext.of(*Np)
    got = [fn.family_ih_quotient(ctx, e, 1.0).quotient for e in (0.4, 0.2, 0.1, 0.05)]
    assert np.allclose(got, IH_FAMILY[Np], rtol=1e-6)


def test_family_ih_eps_range():
    ctx = PotentialContext.of(4, 2.0)
    with pytest.raises(DomainError):
        fn.family_ih(ctx, fn.ih_eps_max(4, 2.0), 1.0)
    assert fn.ih_exponent(4, 2.0, fn.ih_eps_max(4, 2.0)) == pytest.approx(0.0)


@pytest.mark.parametrize("N", [2, 3])
def test_tm_measure_mass_is_unit_ball_volume(N):
    assert fn.tm_measure_mass(N).value == pytest.approx(ball_volume(N), rel=1e-9)


def test_tm_zero_function_and_moser_energy():
    assert fn.lhs(fn.TrudingerMoser(2, 1.0), 0).value == pytest.approx(math.pi, rel=1e-12)
    u = transplant_from_ball(PotentialContext.of(2, 2.0), fn.moser_function(2, 4.0))
    assert fn.rhs(fn.CriticalHardyHalf(2), u).value == pytest.approx(1.0, rel=1e-10)
    a = fn.lhs(fn.TrudingerMoser(2, tm_threshold(2)), u).value
    b = fn.lhs(fn.TrudingerMoser(2, tm_threshold(2)), u, route="direct").value
    assert b == pytest.approx(a, rel=1e-6)
    with pytest.raises(DomainError):
        fn.evaluate(fn.TrudingerMoser(2, 1.0), u)


def test_bubble_energy_closed_form():
    b = fn.family_bubble(3, 2.0, 0.1)
    assert fn.bubble_energy(b).value == pytest.approx(b.energy_closed_form(), rel=1e-10)
    with pytest.raises(DomainError):
        fn.family_bubble(3, 2.0, 0.5)


def test_undefined_quotient():
    zero = RadialProfile(lambda t: 0 * t, lambda t: 0 * t, 1.0)
    with pytest.raises(fn.UndefinedQuotientError):
        fn.rayleigh(fn.Bliss(2.0, 4.0), zero)


def test_random_profiles_are_seeded_and_vanish():
    a = fn.random_smooth_profile(9, 2.0, inner=0.3)
    b = fn.random_smooth_profile(9, 2.0, inner=0.3)
    t = np.linspace(0, 2, 11)
    assert np.array_equal(a(t), b(t))
    assert np.all(a(np.array([0.1, 0.29, 2.0])) == 0.0)


def test_kind_validation():
    with pytest.raises(DomainError):
        fn.ImprovedHardyHalf(3, 3.0)
    with pytest.raises(DomainError):
        fn.CriticalHardyHalf(1)
    with pytest.raises(DomainError):
        fn.lhs(fn.Bliss(2.0, 4.0), _tent(), route="sideways")
