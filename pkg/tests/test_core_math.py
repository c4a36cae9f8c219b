import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardyhalf.core_math import (
    DomainError,
    Params,
    SingularMatrixError,
    ball_volume,
    bliss_constant,
    bliss_log_constant,
    critical_hardy_constant,
    gamma,
    hardy_constant,
    hardy_sobolev_constant,
    log_gamma,
    rank_one_det,
    rank_one_inverse,
    sobolev_constant,
    sphere_area,
    tm_threshold,
)


@given(st.floats(0.05, 60.0))
def test_gamma_matches_stdlib(x):
    assert gamma(x) == pytest.approx(math.gamma(x), rel=1e-13)
    assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-13, abs=1e-13)


def test_log_gamma_beyond_overflow():
    assert log_gamma(1e5) == pytest.approx(math.lgamma(1e5), rel=1e-14)


def test_gamma_rejects_nonpositive():
    with pytest.raises(DomainError):
        gamma(0.0)
    with pytest.raises(DomainError):
        log_gamma(-1.0)


def test_sphere_area_and_volume():
    assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-14)
    assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-14)
    assert sphere_area(4) == pytest.approx(2 * math.pi ** 2, rel=1e-14)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)


def test_params_validation():
    Params(3, 3.0)
    for bad in [(1, 1.5), (3, 1.0), (3, 3.5), (2.5, 2.0)]:
        with pytest.raises(DomainError):
            Params(*bad)
    with pytest.raises(DomainError):
        Params(3, 2.0, s=2.0)
    with pytest.raises(DomainError):
        Params(3, 2.0, q=2.0)
    assert Params(3, 2.0).sobolev_exponent == 6.0
    assert Params(3, 2.0, s=1.0).hardy_sobolev_exponent == 4.0
    with pytest.raises(DomainError):
        Params(3, 3.0).sobolev_exponent


def test_closed_form_constants():
    assert hardy_constant(Params(3, 2.0)) == pytest.approx(0.25)
    assert hardy_constant(Params(5, 3.0)) == pytest.approx(8 / 27)
    assert critical_hardy_constant(2) == 0.25
    assert tm_threshold(2) == pytest.approx(4 * math.pi)
    assert tm_threshold(3) == pytest.approx(3 * (4 * math.pi) ** 0.5)
    with pytest.raises(DomainError):
        hardy_constant(Params(3, 3.0))


def test_sobolev_constant_three_two():
    assert sobolev_constant(Params(3, 2.0)) == pytest.approx(3 * (math.pi / 2) ** (4 / 3), rel=1e-12)


# Values of the sharp Bliss constant obtained by evaluating the quotient of the
# extremal v(x) = x (1 + x^a)^{-1/a}, a = q/p - 1, with mpmath quadrature at 30 digits.
BLISS_ORACLE = {
    (2.0, 4.0): 0.816496580927726 ** 0.5,
    (2.0, 6.0): 1.01346288377381 ** 0.5,
    (3.0, 5.0): 0.769132389108231 ** (1 / 3),
    (1.5, 2.5): 0.582575008795788 ** (1 / 1.5),
}


@pytest.mark.parametrize("pq", sorted(BLISS_ORACLE))
def test_bliss_constant_against_extremal(pq):
    assert bliss_constant(*pq) == pytest.approx(BLISS_ORACLE[pq], rel=1e-13)


def test_bliss_constant_domain():
    with pytest.raises(DomainError):
        bliss_constant(2.0, 2.0)
    with pytest.raises(DomainError):
        bliss_constant(1.0, 3.0)


def test_hardy_sobolev_at_s_zero_is_sobolev():
    for N in (3, 4, 5):
        assert hardy_sobolev_constant(N, 0.0) == pytest.approx(sobolev_constant(Params(N, 2.0)), rel=1e-12)


def test_bliss_log_constant_converges_to_critical_hardy():
    for N in (2, 3):
        gaps = [abs(bliss_log_constant(N, N + 2.0 ** -j) - critical_hardy_constant(N)) for j in range(0, 12, 2)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-3


def test_bliss_log_constant_is_finite_close_to_n():
    assert math.isfinite(bliss_log_constant(3, 3.0 + 1e-6))
    with pytest.raises(DomainError):
        bliss_log_constant(3, 3.0)


@settings(max_examples=50)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=5).filter(lambda v: np.linalg.norm(v) > 0.1),
       st.floats(-5, 5).filter(lambda t: abs(t + 1.0) > 1e-3))
def test_rank_one_identities(v, t):
    v = np.asarray(v) / np.linalg.norm(v)
    A = np.eye(v.size) + t * np.outer(v, v)
    assert rank_one_det(v, t) == pytest.approx(np.linalg.det(A), rel=1e-9, abs=1e-9)
    assert np.allclose(rank_one_inverse(v, t) @ A, np.eye(v.size), atol=1e-8)


def test_rank_one_singular():
    with pytest.raises(SingularMatrixError):
        rank_one_inverse(np.array([1.0, 0.0]), -1.0)
    with pytest.raises(DomainError):
        rank_one_det(np.array([1.0, 1.0]), 1.0)


# C(q) of the logarithmic Bliss inequality evaluated with mpmath at 50 digits
BLISS_LOG_ORACLE = {(2, 1 / 64): 0.26298158373704797, (3, 1 / 64): 0.30768922394539908}


@pytest.mark.parametrize("key", sorted(BLISS_LOG_ORACLE))
def test_bliss_log_constant_high_precision(key):
    N, d = key
    assert bliss_log_constant(N, N + d) == pytest.approx(BLISS_LOG_ORACLE[key], rel=1e-13)


def test_bliss_log_gap_at_one_sixty_fourth_exceeds_one_percent():
    # the gap is a property of the closed form, not of rounding: it reaches 0.01 only near q - N = 2^-8
    assert bliss_log_constant(2, 2 + 1 / 64) - 0.25 > 0.0129
    assert bliss_log_constant(2, 2 + 2.0 ** -8) - 0.25 < 0.0036
