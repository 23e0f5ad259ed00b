"""Compatible Hilbert bundle generated by a trivializer field ``x -> L(x)``.

``L(x)`` is the matrix of the point-trivializing isomorphism from the fibre
over ``x`` (basis ``{e_i(x)}``) to the typical fibre. The fibre metric is
always induced from the typical fibre, ``<u|v>_x = <L u | L v>``, so every
bundle built here is compatible by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .base_grid import DifferenceScheme, as_coords, partial_derivative
from .errors import BasePointMismatch, DimensionMismatch, SingularTrivializer
from .fields import BundleMorphism, FibreMap, FibreVector, Section, point_key
from .hilbert import FibreSpace, adjoint

__all__ = [
    "Trivializer",
    "fibre_inner",
    "fibre_gram",
    "transport",
    "herm_conj_point_map",
    "herm_conj_fibre_map",
    "is_fibre_unitary",
    "herm_conj_morphism",
    "is_hermitian_morphism",
    "is_unitary_morphism",
    "transported_section",
]


@dataclass(frozen=True, eq=False)
class Trivializer:
    """Smooth field of invertible matrices ``L(x)``.

    ``L`` must be a pure function of the coordinates (it is called from
    several threads). ``dL(x, mu)``, when given, is the exact partial
    derivative and is used only as an independent reference.
    """

    space: FibreSpace
    L: Callable[[np.ndarray], np.ndarray]
    dL: Callable[[np.ndarray, int], np.ndarray] | None = None
    L_inv: Callable[[np.ndarray], np.ndarray] | None = None
    max_condition: float = 1e8
    name: str = "custom"

    @property
    def n(self) -> int:
        return self.space.n

    def matrix(self, x) -> np.ndarray:
        coords = as_coords(x)
        M = np.asarray(self.L(coords), dtype=complex)
        if M.shape != (self.n, self.n):
            raise DimensionMismatch(f"trivializer returned shape {M.shape}, expected {(self.n, self.n)}")
        if not np.all(np.isfinite(M)):
            raise SingularTrivializer(f"trivializer is not finite at {coords.tolist()}")
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > self.max_condition:
            raise SingularTrivializer(
                f"trivializer is singular at {coords.tolist()} (condition number {cond:.3g})"
            )
        return M

    def inverse(self, x) -> np.ndarray:
        if self.L_inv is not None:
            self.matrix(x)
            return np.asarray(self.L_inv(as_coords(x)), dtype=complex)
        return np.linalg.inv(self.matrix(x))

    def solve(self, x, B) -> np.ndarray:
        """``L(x)^-1 B`` without forming the inverse."""
        return np.linalg.solve(self.matrix(x), np.asarray(B, dtype=complex))

    def derivative(self, x, mu: int, scheme: DifferenceScheme | None = None) -> np.ndarray:
        """Exact ``dL/dx^mu`` if known, else a finite difference."""
        if self.dL is not None:
            return np.asarray(self.dL(as_coords(x), mu), dtype=complex)
        return partial_derivative(self.matrix, x, mu, scheme)

    def in_chart(self, change) -> "Trivializer":
        """The same trivializer as a function of primed coordinates."""
        return Trivializer(self.space, lambda xp: self.L(change.inverse(as_coords(xp))),
                           max_condition=self.max_condition, name=f"{self.name}@chart")

    def rebased(self, C: Callable[[np.ndarray], np.ndarray],
                dC: Callable[[np.ndarray, int], np.ndarray] | None = None) -> "Trivializer":
        """Trivializer for the fibre bases ``e'_i = C_i^j e_j``: ``L'(x) = L(x) C(x)``."""
        dL = None
        if self.dL is not None and dC is not None:
            def dL(x, mu):
                return self.dL(x, mu) @ C(x) + self.L(x) @ dC(x, mu)
        return Trivializer(self.space, lambda x: self.L(x) @ C(x), dL,
                           max_condition=self.max_condition, name=f"{self.name}*C")


def fibre_gram(triv: Trivializer, x) -> np.ndarray:
    """Gram matrix of the fibre metric over ``x`` in the basis ``{e_i(x)}``."""
    L = triv.matrix(x)
    return L.conj().T @ triv.space.gram @ L


def _components(u: FibreVector, n: int) -> np.ndarray:
    if u.components.shape != (n,):
        raise DimensionMismatch(f"fibre vector has {u.components.shape[0]} components, fibre has {n}")
    return u.components


def fibre_inner(triv: Trivializer, u: FibreVector, v: FibreVector) -> complex:
    if u.at != v.at:
        raise BasePointMismatch(f"vectors live over different points {u.at} and {v.at}")
    L = triv.matrix(u.at)
    a = L @ _components(u, triv.n)
    b = L @ _components(v, triv.n)
    return complex(a.conj() @ (triv.space.gram @ b))


def transport(triv: Trivializer, x, y) -> FibreMap:
    """Bundle transport from the fibre over ``x`` to the fibre over ``y``: ``L(y)^-1 L(x)``."""
    return FibreMap(point_key(x), point_key(y), triv.solve(y, triv.matrix(x)))


def herm_conj_point_map(triv: Trivializer, x, A_x) -> np.ndarray:
    """Conjugate of a map ``fibre_x -> F``; the result maps ``F -> fibre_x``."""
    A_x = np.asarray(A_x, dtype=complex)
    L_inv = triv.inverse(x)
    return L_inv @ adjoint(triv.space, A_x @ L_inv)


def herm_conj_fibre_map(triv: Trivializer, A: FibreMap) -> FibreMap:
    """Conjugate of ``A: fibre_y -> fibre_x``, a map ``fibre_x -> fibre_y``."""
    y, x = A.source, A.target
    L_x = triv.matrix(x)
    inner_op = L_x @ A.matrix @ triv.inverse(y)
    M = triv.solve(y, adjoint(triv.space, inner_op) @ L_x)
    return FibreMap(x, y, M)


def is_fibre_unitary(triv: Trivializer, A: FibreMap, tol: float = 1e-12) -> bool:
    """Whether ``A`` preserves the fibre scalar products (relative Frobenius ``tol``)."""
    G_src = fibre_gram(triv, A.source)
    G_tgt = fibre_gram(triv, A.target)
    pulled = A.matrix.conj().T @ G_tgt @ A.matrix
    scale = max(np.linalg.norm(G_src), np.linalg.norm(pulled))
    return bool(np.linalg.norm(pulled - G_src) <= tol * scale)


def _conj_at(triv: Trivializer, A_x: np.ndarray, x) -> np.ndarray:
    L = triv.matrix(x)
    op = L @ A_x @ np.linalg.inv(L)
    return np.linalg.solve(L, adjoint(triv.space, op) @ L)


def herm_conj_morphism(triv: Trivializer, A: BundleMorphism) -> BundleMorphism:
    return BundleMorphism(lambda x: _conj_at(triv, A(x), x))


def is_hermitian_morphism(triv: Trivializer, A: BundleMorphism, x, tol: float = 1e-12) -> bool:
    A_x = A(x)
    diff = _conj_at(triv, A_x, x) - A_x
    return bool(np.linalg.norm(diff) <= tol * max(1.0, np.linalg.norm(A_x)))


def is_unitary_morphism(triv: Trivializer, A: BundleMorphism, x, tol: float = 1e-12) -> bool:
    A_x = A(x)
    diff = _conj_at(triv, A_x, x) @ A_x - np.eye(triv.n)
    return bool(np.linalg.norm(diff) <= tol * np.sqrt(triv.n))


def transported_section(triv: Trivializer, x0, u0: FibreVector) -> Section:
    """Section ``y -> transport(x0, y) u0``; it takes the value ``u0`` exactly at ``x0``."""
    x0 = point_key(x0)
    if u0.at != x0:
        raise BasePointMismatch(f"seed vector lives over {u0.at}, not {x0}")
    seed = _components(u0, triv.n).copy()
    X0 = triv.matrix(x0) @ seed

    def Y(y):
        if point_key(y) == x0:
            return seed.copy()
        return triv.solve(y, X0)

    dY = None
    if triv.dL is not None:
        def dY(y, mu):
            return -triv.solve(y, triv.dL(as_coords(y), mu) @ triv.solve(y, X0))
    return Section(Y, dY)
