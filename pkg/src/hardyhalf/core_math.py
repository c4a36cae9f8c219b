"""Parameter records, the Gamma function and closed-form constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class PoleError(DomainError):
    """Raised when a map or potential is evaluated at its singular point."""


class SingularMatrixError(DomainError):
    """Raised when a requested inverse does not exist."""


@dataclass(frozen=True)
class Params:
    """Dimension N, exponent p and the optional Hardy-Sobolev / Bliss exponents."""

    N: int
    p: float
    s: Optional[float] = None
    q: Optional[float] = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2, got {self.N}")
        if not (1.0 < self.p <= self.N):
            raise DomainError(f"p must lie in (1, N], got p={self.p}, N={self.N}")
        if self.s is not None and not (0.0 <= self.s < self.p):
            raise DomainError(f"s must lie in [0, p), got {self.s}")
        if self.q is not None and not (self.q > self.p):
            raise DomainError(f"q must exceed p, got {self.q}")

    @property
    def critical(self) -> bool:
        return self.p == self.N

    @property
    def sobolev_exponent(self) -> float:
        """p* = Np/(N-p)."""
        if self.critical:
            raise DomainError("p* is undefined for p = N")
        return self.N * self.p / (self.N - self.p)

    @property
    def hardy_sobolev_exponent(self) -> float:
        """p*(s) = p(N-s)/(N-p)."""
        if self.critical:
            raise DomainError("p*(s) is undefined for p = N")
        s = 0.0 if self.s is None else self.s
        return self.p * (self.N - s) / (self.N - self.p)


# Lanczos approximation with g = 7 and nine terms.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_series(z: float) -> float:
    a = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        a += _LANCZOS_COEF[k] / (z + k)
    return a


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0; stays finite far beyond the overflow of gamma()."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the series in its accurate range
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_series(z))


def gamma(x: float) -> float:
    """Euler Gamma for real x > 0."""
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"gamma needs x > 0, got {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _lanczos_series(z)


def sphere_area(N: int) -> float:
    """Area of the unit sphere S^{N-1} in R^N."""
    if N < 1:
        raise DomainError(f"sphere_area needs N >= 1, got {N}")
    return 2.0 * math.pi ** (N / 2.0) / gamma(N / 2.0)


def ball_volume(N: int) -> float:
    return sphere_area(N) / N


def hardy_constant(params: Params) -> float:
    """((N-p)/p)^p, the subcritical Hardy constant."""
    N, p = params.N, params.p
    if p >= N:
        raise DomainError("hardy_constant needs p < N")
    return ((N - p) / p) ** p


def critical_hardy_constant(N: int) -> float:
    """((N-1)/N)^N, the constant of the logarithmic Hardy inequality."""
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    return ((N - 1.0) / N) ** N


def sobolev_constant(params: Params) -> float:
    """Best constant in the Sobolev inequality on R^N."""
    N, p = params.N, params.p
    if not (1.0 + 1e-9 <= p < N):
        raise DomainError(f"sobolev_constant needs 1 < p < N, got p={p}")
    ratio = gamma(N / p) * gamma(1.0 + N - N / p) / (gamma(1.0 + N / 2.0) * gamma(N))
    return math.pi ** (p / 2.0) * N * ((N - p) / (p - 1.0)) ** (p - 1.0) * ratio ** (p / N)


def _bliss_log_ratio(p: float, q: float) -> float:
    """log of Gamma(q/(q-p)) Gamma(p(q-1)/(q-p)) / Gamma(pq/(q-p))."""
    d = q - p
    return log_gamma(q / d) + log_gamma(p * (q - 1.0) / d) - log_gamma(p * q / d)


def bliss_constant(p: float, q: float) -> float:
    """Sharp constant C(p, q) of the one-dimensional Bliss inequality."""
    if not p > 1.0:
        raise DomainError(f"bliss_constant needs p > 1, got {p}")
    if not q - p >= 1e-9:
        raise DomainError(f"bliss_constant needs q > p, got p={p}, q={q}")
    expo = 1.0 / p - 1.0 / q
    return math.exp(expo * _bliss_log_ratio(p, q)) * (q * (p - 1.0) / p) ** (1.0 / q)


def bliss_log_constant(N: int, q: float) -> float:
    """Constant of the logarithmic Bliss inequality on the unit ball, q > N."""
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    if not q > N:
        raise DomainError(f"bliss_log_constant needs q > N, got q={q}")
    omega = sphere_area(N)
    expo = 1.0 - N / q
    # the Gamma arguments grow like N/(q-N); work in logs
    log_c = expo * math.log(omega) + expo * _bliss_log_ratio(N, q)
    return math.exp(log_c) * (q * (N - 1.0) / N) ** (N / q)


def hardy_sobolev_constant(N: int, s: float) -> float:
    """Best constant of int |grad u|^2 >= S (int |u|^q |x|^{-s})^{2/q}, q = 2(N-s)/(N-2).

    Obtained from the Bliss constant through the radial substitution
    t = r^{-(N-2)}/(N-2), which maps the radial problem onto the Bliss problem.
    """
    if N < 3:
        raise DomainError("hardy_sobolev_constant needs N >= 3")
    if not (0.0 <= s < 2.0):
        raise DomainError(f"s must lie in [0, 2), got {s}")
    q = 2.0 * (N - s) / (N - 2.0)
    omega = sphere_area(N)
    c = bliss_constant(2.0, q)
    k = (N - 2.0) ** (-(2.0 * N - 2.0 - s) / (N - 2.0))
    return c * c * omega ** (1.0 - 2.0 / q) * k ** (-2.0 / q)


def tm_threshold(N: int) -> float:
    """Sharp Trudinger-Moser exponent N omega_{N-1}^{1/(N-1)}."""
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")
    return N * sphere_area(N) ** (1.0 / (N - 1.0))


def _check_unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DomainError("expected a vector")
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-12:
        raise DomainError("expected a unit vector")
    return v


def rank_one_det(v, t: float) -> float:
    """det(I + t v v^T) for a unit vector v; the eigenvalues are 1 and 1 + t."""
    _check_unit(v)
    return 1.0 + t


def rank_one_inverse(v, t: float) -> np.ndarray:
    """(I + t v v^T)^{-1} = I - t/(1+t) v v^T."""
    v = _check_unit(v)
    if t == -1.0:
        raise SingularMatrixError("I + t v v^T is singular at t = -1")
    return np.eye(v.size) - (t / (t + 1.0)) * np.outer(v, v)
