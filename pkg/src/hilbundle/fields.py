"""Evaluable objects living over the base: fibre vectors, fibre maps, sections, morphisms.

Everything here stores components in the implicit fibre bases ``{e_i(x)}``.
Sections and morphisms are closures of real base coordinates; they may carry
an exact partial derivative (``dY(x, mu)`` / ``dA(x, mu)``) used as an
independent reference by the verification suites.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .base_grid import as_coords
from .errors import BasePointMismatch, DimensionMismatch

__all__ = [
    "FibreVector",
    "FibreMap",
    "Section",
    "BundleMorphism",
    "SectionMorphism",
    "MorphismSection",
    "DirectionalField",
    "point_key",
]


def point_key(x) -> tuple[float, ...]:
    return tuple(float(v) for v in as_coords(x))


@dataclass(frozen=True, eq=False)
class FibreVector:
    at: tuple[float, ...]
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "at", point_key(self.at))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=complex))
        if self.components.ndim != 1:
            raise DimensionMismatch("fibre vector components must be one-dimensional")

    def __add__(self, other: "FibreVector") -> "FibreVector":
        if self.at != other.at:
            raise BasePointMismatch(f"cannot add vectors over {self.at} and {other.at}")
        return FibreVector(self.at, self.components + other.components)

    def __sub__(self, other: "FibreVector") -> "FibreVector":
        if self.at != other.at:
            raise BasePointMismatch(f"cannot subtract vectors over {self.at} and {other.at}")
        return FibreVector(self.at, self.components - other.components)

    def __mul__(self, scalar) -> "FibreVector":
        return FibreVector(self.at, scalar * self.components)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class FibreMap:
    """Linear map from the fibre over ``source`` to the fibre over ``target``."""

    source: tuple[float, ...]
    target: tuple[float, ...]
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "source", point_key(self.source))
        object.__setattr__(self, "target", point_key(self.target))
        M = np.asarray(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"fibre map matrix must be square, got {M.shape}")
        object.__setattr__(self, "matrix", M)

    def __call__(self, u: FibreVector) -> FibreVector:
        if u.at != self.source:
            raise BasePointMismatch(f"map starts at {self.source}, vector lives at {u.at}")
        return FibreVector(self.target, self.matrix @ u.components)

    def __matmul__(self, other: "FibreMap") -> "FibreMap":
        """Composition ``self o other``."""
        if other.target != self.source:
            raise BasePointMismatch(
                f"cannot compose: inner map ends at {other.target}, outer starts at {self.source}"
            )
        return FibreMap(other.source, self.target, self.matrix @ other.matrix)

    def inverse(self) -> "FibreMap":
        return FibreMap(self.target, self.source, np.linalg.inv(self.matrix))


@dataclass(frozen=True, eq=False)
class Section:
    Y: Callable[[np.ndarray], np.ndarray]
    dY: Callable[[np.ndarray, int], np.ndarray] | None = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.Y(as_coords(x)), dtype=complex)

    def at(self, x) -> FibreVector:
        return FibreVector(point_key(x), self(x))

    def in_chart(self, change) -> "Section":
        """The same section written as a function of primed coordinates."""
        return Section(lambda xp: self.Y(change.inverse(as_coords(xp))))


@dataclass(frozen=True, eq=False)
class BundleMorphism:
    """Fibre-preserving morphism, stored as its restriction matrices ``A_x``."""

    A: Callable[[np.ndarray], np.ndarray]
    dA: Callable[[np.ndarray, int], np.ndarray] | None = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.A(as_coords(x)), dtype=complex)

    def compose(self, other: "BundleMorphism") -> "BundleMorphism":
        """Pointwise ``self o other``."""
        dA = None
        if self.dA is not None and other.dA is not None:
            def dA(x, mu):
                return self.dA(x, mu) @ other(x) + self(x) @ other.dA(x, mu)
        return BundleMorphism(lambda x: self(x) @ other(x), dA)

    def in_chart(self, change) -> "BundleMorphism":
        return BundleMorphism(lambda xp: self.A(change.inverse(as_coords(xp))))

    @classmethod
    def identity(cls, n: int) -> "BundleMorphism":
        eye = np.eye(n, dtype=complex)
        zero = np.zeros((n, n), dtype=complex)
        return cls(lambda x: eye, lambda x, mu: zero)


@dataclass(frozen=True, eq=False)
class SectionMorphism:
    """The map ``X -> A o X`` on sections generated by a bundle morphism ``A``."""

    generator: BundleMorphism

    def __call__(self, section: Section) -> Section:
        A = self.generator
        dY = None
        if A.dA is not None and section.dY is not None:
            def dY(x, mu):
                return A.dA(x, mu) @ section(x) + A(x) @ section.dY(x, mu)
        return Section(lambda x: A(x) @ section(x), dY)

    def compose(self, other: "SectionMorphism") -> "SectionMorphism":
        return SectionMorphism(self.generator.compose(other.generator))


@dataclass(frozen=True, eq=False)
class MorphismSection:
    """A section of the bundle of fibre endomorphisms: ``x -> A|_{fibre_x}``.

    Holds the very same matrix field as the morphism it came from; only the
    role differs.
    """

    field: Callable[[np.ndarray], np.ndarray]
    dfield: Callable[[np.ndarray, int], np.ndarray] | None = None

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.field(as_coords(x)), dtype=complex)


@dataclass(frozen=True, eq=False)
class DirectionalField:
    """Tangent vector field ``V = V^mu d/dx^mu`` given by its components."""

    V: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.V(as_coords(x)), dtype=float)

    def in_chart(self, change) -> "DirectionalField":
        """Components ``V'^mu = (dx'^mu/dx^nu) V^nu`` as a function of primed coordinates."""
        def V_primed(xp):
            x = change.inverse(as_coords(xp))
            return change.jacobian_at(x) @ self(x)
        return DirectionalField(V_primed)
