"""Moebius maps of R^N, their differentials, the pushforward of functions and the Cayley-type map.

Points are arrays whose last axis has length N, so every routine accepts a single
point or a batch of points.  The last coordinate plays the role of the height y.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np

from .core_math import DomainError, PoleError

POLE_EPS = 1e-300


@dataclass(frozen=True)
class Translation:
    b: Tuple[float, ...]

    def apply(self, z):
        return z + np.asarray(self.b)

    def differential(self, z):
        n = z.shape[-1]
        return np.broadcast_to(np.eye(n), z.shape[:-1] + (n, n))

    def det(self, z):
        return np.ones(z.shape[:-1])

    def inverse(self):
        return Translation(tuple(-x for x in self.b))


@dataclass(frozen=True)
class Scaling:
    lam: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise DomainError("scaling factor must be positive")

    def apply(self, z):
        return self.lam * z

    def differential(self, z):
        n = z.shape[-1]
        return np.broadcast_to(self.lam * np.eye(n), z.shape[:-1] + (n, n))

    def det(self, z):
        return np.full(z.shape[:-1], self.lam ** z.shape[-1])

    def inverse(self):
        return Scaling(1.0 / self.lam)


@dataclass(frozen=True)
class Orthogonal:
    R: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        m = np.asarray(self.R, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("orthogonal map needs a square matrix")
        if np.max(np.abs(m.T @ m - np.eye(m.shape[0]))) > 1e-12:
            raise DomainError("matrix is not orthogonal within 1e-12")

    @classmethod
    def from_matrix(cls, m) -> "Orthogonal":
        return cls(tuple(tuple(float(x) for x in row) for row in np.asarray(m)))

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.R, dtype=float)

    def apply(self, z):
        return z @ self.matrix.T

    def differential(self, z):
        m = self.matrix
        return np.broadcast_to(m, z.shape[:-1] + m.shape)

    def det(self, z):
        return np.full(z.shape[:-1], np.linalg.det(self.matrix))

    def inverse(self):
        return Orthogonal.from_matrix(self.matrix.T)


@dataclass(frozen=True)
class Inversion:
    """Inversion in the unit sphere, z -> z/|z|^2."""

    @staticmethod
    def _norm2(z):
        n2 = np.sum(z * z, axis=-1)
        if np.any(np.sqrt(n2) < POLE_EPS):
            raise PoleError("inversion evaluated at the origin")
        return n2

    def apply(self, z):
        return z / self._norm2(z)[..., None]

    def differential(self, z):
        n2 = self._norm2(z)
        n = z.shape[-1]
        zh = z / np.sqrt(n2)[..., None]
        outer = zh[..., :, None] * zh[..., None, :]
        return (np.eye(n) - 2.0 * outer) / n2[..., None, None]

    def det(self, z):
        n2 = self._norm2(z)
        return -1.0 / n2 ** z.shape[-1]

    def inverse(self):
        return self


ElementaryMap = Union[Translation, Scaling, Orthogonal, Inversion]


@dataclass(frozen=True)
class MobiusMap:
    """Composition of elementary maps, applied left to right."""

    maps: Tuple[ElementaryMap, ...]
    N: int

    def __post_init__(self):
        for m in self.maps:
            if isinstance(m, Translation) and len(m.b) != self.N:
                raise DomainError("translation vector has the wrong dimension")
            if isinstance(m, Orthogonal) and len(m.R) != self.N:
                raise DomainError("orthogonal matrix has the wrong dimension")

    @classmethod
    def identity(cls, N: int) -> "MobiusMap":
        return cls((), N)

    def then(self, other: "MobiusMap") -> "MobiusMap":
        """The map z -> other(self(z))."""
        if other.N != self.N:
            raise DomainError("dimension mismatch")
        return MobiusMap(self.maps + other.maps, self.N)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(tuple(m.inverse() for m in reversed(self.maps)), self.N)

    def _stages(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.N:
            raise DomainError(f"expected points in R^{self.N}")
        for m in self.maps:
            yield m, z
            z = m.apply(z)


def apply(M: MobiusMap, z) -> np.ndarray:
    """Apply the stages in order.

    Intermediate stages may pass through the point at infinity (an inversion
    hit at the origin); only a final value at infinity is a pole of the map.
    """
    w = np.array(z, dtype=float)
    if w.shape[-1] != M.N:
        raise DomainError(f"expected points in R^{M.N}")
    at_inf = np.zeros(w.shape[:-1], dtype=bool)
    for m in M.maps:
        if isinstance(m, Inversion):
            n2 = np.sum(w * w, axis=-1)
            hits = (np.sqrt(n2) < POLE_EPS) & ~at_inf
            safe = np.where(hits | at_inf, 1.0, n2)
            w = np.where((hits | at_inf)[..., None], 0.0, w / safe[..., None])
            at_inf = hits
        else:
            w = np.where(at_inf[..., None], 0.0, m.apply(w))
    if np.any(at_inf):
        raise PoleError("point is mapped to infinity")
    return w


def jacobian_det(M: MobiusMap, z) -> np.ndarray:
    """Product of the stage determinants, each taken at its own stage input."""
    z = np.asarray(z, dtype=float)
    det = np.ones(z.shape[:-1])
    for m, w in M._stages(z):
        det = det * m.det(w)
    return det


def differential(M: MobiusMap, z) -> np.ndarray:
    """Chain-rule product of the stage differentials."""
    z = np.asarray(z, dtype=float)
    D = np.broadcast_to(np.eye(M.N), z.shape[:-1] + (M.N, M.N)).copy()
    for m, w in M._stages(z):
        D = m.differential(w) @ D
    return D


def pushforward(M: MobiusMap, f: Callable, p: float) -> Callable:
    """The function z -> |det M'(z)|^{(N-p)/(Np)} f(M(z))."""
    N = M.N
    expo = (N - p) / (N * p)

    def g(z):
        z = np.asarray(z, dtype=float)
        w = apply(M, z)
        if expo == 0.0:
            return f(w)
        return np.abs(jacobian_det(M, z)) ** expo * f(w)

    return g


def _split(z):
    z = np.asarray(z, dtype=float)
    return z[..., :-1], z[..., -1]


def cayley(z) -> np.ndarray:
    """The involution (x, y) -> (2x, 1 - |x|^2 - y^2) / ((1+y)^2 + |x|^2)."""
    x, y = _split(z)
    x2 = np.sum(x * x, axis=-1)
    den = (1.0 + y) ** 2 + x2
    if np.any(den < POLE_EPS):
        raise PoleError("Cayley map evaluated at (0, -1)")
    out = np.concatenate([2.0 * x, (1.0 - x2 - y * y)[..., None]], axis=-1)
    return out / den[..., None]


def cayley_as_composition(N: int) -> MobiusMap:
    """Cayley map written as T_{-e_N}, J, S_2, T_{e_N}, J, R in order of application."""
    if N < 2:
        raise DomainError("N must be >= 2")
    e = np.zeros(N)
    e[-1] = 1.0
    refl = np.eye(N)
    refl[-1, -1] = -1.0
    maps = (
        Translation(tuple(-e)),
        Inversion(),
        Scaling(2.0),
        Translation(tuple(e)),
        Inversion(),
        Orthogonal.from_matrix(refl),
    )
    return MobiusMap(maps, N)


def cayley_jacobian_det(z) -> np.ndarray:
    """Closed form -(2/((1+y)^2 + |x|^2))^N."""
    x, y = _split(z)
    N = np.asarray(z).shape[-1]
    den = (1.0 + y) ** 2 + np.sum(x * x, axis=-1)
    if np.any(den < POLE_EPS):
        raise PoleError("Cayley map evaluated at (0, -1)")
    return -((2.0 / den) ** N)


def random_orthogonal(N: int, rng: np.random.Generator) -> Orthogonal:
    q, r = np.linalg.qr(rng.standard_normal((N, N)))
    q = q * np.sign(np.diag(r))
    # re-orthonormalise once to stay inside the 1e-12 gate
    q, _ = np.linalg.qr(q)
    return Orthogonal.from_matrix(q)


def fd_gradient(f: Callable, z, h_scale: float = 1e-5) -> np.ndarray:
    """Central-difference gradient with step h = h_scale (1 + |z|)."""
    z = np.asarray(z, dtype=float)
    h = h_scale * (1.0 + np.linalg.norm(z, axis=-1))
    grad = np.empty_like(z)
    for k in range(z.shape[-1]):
        dz = np.zeros_like(z)
        dz[..., k] = h
        grad[..., k] = (f(z + dz) - f(z - dz)) / (2.0 * h)
    return grad
