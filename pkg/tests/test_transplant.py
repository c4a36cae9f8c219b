import numpy as np
import pytest

from hardyhalf import mobius as mb
from hardyhalf.functionals import random_smooth_profile
from hardyhalf.potentials import PotentialContext, X_ratio
from hardyhalf.quadrature import superlevel_integral
from hardyhalf.transplant import (
    InvalidProfileError,
    RadialProfile,
    dimension_transform,
    dirichlet_energy_symmetric,
    fp_table,
    hardy_side_symmetric,
    level_set_energy_rn,
    line_energy,
    moser_inverse,
    moser_transform,
    radial_energy,
    transplant_from_ball,
    transplant_from_rn,
    weighted_hardy_1d,
)


def test_profile_must_vanish_at_support_end():
    with pytest.raises(InvalidProfileError):
        RadialProfile(lambda t: 1 - t / 2, lambda t: -0.5 + 0 * t, 1.0)
    with pytest.raises(InvalidProfileError):
        RadialProfile(lambda t: 1 - t, lambda t: -1 + 0 * t, 1.0, (0.7, 0.3))


@pytest.mark.parametrize("N,p", [(2, 2.0), (3, 3.0), (3, 2.0), (5, 3.0)])
def test_moser_transform_is_an_isometry(N, p):
    u = random_smooth_profile(7, 1.3)
    v = moser_transform(N, u, 1.3, p)
    a = radial_energy(N, p, u, 1.3)
    b = line_energy(p, v)
    assert b.value == pytest.approx(a.value, rel=1e-6)


def test_moser_inverse_roundtrip():
    u = random_smooth_profile(3, 1.0)
    w = moser_inverse(3, moser_transform(3, u))
    t = np.linspace(0.05, 0.95, 7)
    assert np.allclose(w(t), u(t), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("N,m", [(2, 3), (3, 5)])
def test_dimension_transform_keeps_n_energy(N, m):
    u = random_smooth_profile(11, 1.0)
    v = dimension_transform(N, m, 1.0, u)
    assert radial_energy(m, float(N), v, 1.0).value == pytest.approx(
        radial_energy(N, float(N), u, 1.0).value, rel=1e-6)


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_level_set_energy(t):
    assert level_set_energy_rn(PotentialContext.of(5, 3.0), t).value == pytest.approx(t, rel=1e-8)


def test_ball_pullback_is_cayley_pullback_at_p_equal_n():
    ctx = PotentialContext.of(3, 3.0)
    v = random_smooth_profile(5, 1.0, inner=0.1)
    u = transplant_from_ball(ctx, v)
    rng = np.random.default_rng(0)
    z = np.column_stack([rng.uniform(-2, 2, (20, 2)), rng.uniform(0.05, 3, 20)])
    r, y = np.linalg.norm(z[:, :2], axis=1), z[:, 2]
    via_cayley = v(np.linalg.norm(mb.cayley(z), axis=1))
    assert np.allclose(u(r, y), via_cayley, atol=1e-12)
    assert np.allclose(np.sqrt(X_ratio(r, y)), np.linalg.norm(mb.cayley(z), axis=1), rtol=1e-12)


@pytest.mark.parametrize("N,p", [(3, 2.0), (5, 3.0)])
def test_energy_and_hardy_identities(N, p):
    ctx = PotentialContext.of(N, p)
    u = transplant_from_rn(ctx, random_smooth_profile(2, 1.5))
    e = dirichlet_energy_symmetric(ctx, u)
    h = hardy_side_symmetric(ctx, u)
    assert e.discrepancy < 1e-4 and h.discrepancy < 1e-4
    v = transplant_from_ball(ctx, random_smooth_profile(4, 1.0))
    assert dirichlet_energy_symmetric(ctx, v).discrepancy < 1e-4


def test_fp_table_interpolates_direct_values():
    F = fp_table(5, 3.0)
    ctx = PotentialContext.of(5, 3.0)
    for s in (0.003, 0.07, 0.9):
        # 64 log-spaced nodes with monotone cubic interpolation: about 4e-5 relative at worst
        assert F(np.array([s]))[0] == pytest.approx(superlevel_integral(ctx, s).value, rel=1e-4)
    assert fp_table(4, 2.0).zero and np.all(fp_table(4, 2.0)(np.array([0.1, 1.0])) == 0.0)


def test_fp_is_negative_for_p_between_two_and_n():
    F = fp_table(5, 3.0)
    s = np.geomspace(1e-3, 10.0, 9)
    vals = F(s)
    assert np.all(vals < 0) and np.all(np.diff(vals) > 0)


def test_weighted_1d_hardy_sides_are_negative_for_five_three():
    ctx = PotentialContext.of(5, 3.0)
    lhs, rhs = weighted_hardy_1d(ctx, random_smooth_profile(0, 2.0))
    assert lhs.value < 0 and rhs.value < 0
    assert lhs.value > rhs.value
