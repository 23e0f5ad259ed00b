"""The typical fibre: a finite-dimensional complex Hilbert space.

State vectors and operators are plain numpy arrays (complex n-vectors and
n x n matrices). The scalar product is ``<u|v> = u^H G v`` for a Hermitian
positive-definite Gram matrix ``G``; it is conjugate-linear in ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ValidationError

__all__ = ["FibreSpace", "inner", "adjoint", "is_unitary", "is_hermitian", "norm"]


@dataclass(frozen=True, eq=False)
class FibreSpace:
    n: int
    gram: np.ndarray | None = field(default=None)

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValidationError(f"fibre dimension must be positive, got {self.n}")
        object.__setattr__(self, "n", n)
        if self.gram is None:
            G = np.eye(n, dtype=complex)
        else:
            G = np.asarray(self.gram, dtype=complex)
        if G.shape != (n, n):
            raise DimensionMismatch(f"gram matrix must be {n}x{n}, got {G.shape}")
        if np.linalg.norm(G - G.conj().T) > 1e-12 * max(1.0, np.linalg.norm(G)):
            raise ValidationError("gram matrix is not Hermitian")
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            raise ValidationError("gram matrix is not positive definite") from None
        G.setflags(write=False)
        object.__setattr__(self, "gram", G)

    @property
    def euclidean(self) -> bool:
        return bool(np.array_equal(self.gram, np.eye(self.n)))


def _vector(space: FibreSpace, u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (space.n,):
        raise DimensionMismatch(f"expected a vector of length {space.n}, got shape {u.shape}")
    return u


def _operator(space: FibreSpace, A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.shape != (space.n, space.n):
        raise DimensionMismatch(f"expected a {space.n}x{space.n} operator, got shape {A.shape}")
    return A


def inner(space: FibreSpace, u, v) -> complex:
    u = _vector(space, u)
    v = _vector(space, v)
    return complex(u.conj() @ (space.gram @ v))


def norm(space: FibreSpace, u) -> float:
    return float(np.sqrt(max(inner(space, u, u).real, 0.0)))


def adjoint(space: FibreSpace, A) -> np.ndarray:
    """Adjoint with respect to the Gram metric: ``G^-1 A^H G``."""
    A = _operator(space, A)
    if space.euclidean:
        return A.conj().T
    return np.linalg.solve(space.gram, A.conj().T @ space.gram)


def is_unitary(space: FibreSpace, A, tol: float = 1e-12) -> bool:
    A = _operator(space, A)
    return bool(np.linalg.norm(adjoint(space, A) @ A - np.eye(space.n)) <= tol)


def is_hermitian(space: FibreSpace, A, tol: float = 1e-12) -> bool:
    A = _operator(space, A)
    return bool(np.linalg.norm(adjoint(space, A) - A) <= tol)
