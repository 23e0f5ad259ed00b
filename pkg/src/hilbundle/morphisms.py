"""Transport of fibre endomorphisms and the derivations it induces."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .base_grid import DifferenceScheme, as_coords, partial_derivative
from .bundle import Trivializer, transport
from .derivations import _conjugated_derivative, _require_generated
from .fields import BundleMorphism, MorphismSection, Section, SectionMorphism, point_key

__all__ = [
    "BundleMorphism",
    "SectionMorphism",
    "MorphismSection",
    "assoc_transport",
    "transported_morphism",
    "transported_from_morphism",
    "chi",
    "chi_inverse",
    "d_circ_mu",
    "breve_l",
]


def assoc_transport(triv: Trivializer, x, y, chi_x) -> np.ndarray:
    """Carry an endomorphism of the fibre over ``x`` to one over ``y``.

    ``transport(x, y) o chi_x o transport(y, x)``; defined for any square
    ``chi_x``, invertible or not.
    """
    chi_x = np.asarray(chi_x, dtype=complex)
    forward = transport(triv, x, y).matrix
    backward = transport(triv, y, x).matrix
    return forward @ chi_x @ backward


def transported_morphism(triv: Trivializer, x0, chi0) -> BundleMorphism:
    """Morphism ``y -> assoc_transport(x0, y, chi0)``; equal to ``chi0`` exactly at ``x0``."""
    key = point_key(x0)
    seed = np.array(chi0, dtype=complex)
    op = triv.matrix(key) @ seed @ np.linalg.inv(triv.matrix(key))

    def A(y):
        if point_key(y) == key:
            return seed.copy()
        L = triv.matrix(y)
        return np.linalg.solve(L, op @ L)

    dA = None
    if triv.dL is not None:
        def dA(y, mu):
            y = as_coords(y)
            L = triv.matrix(y)
            dL = np.asarray(triv.dL(y, mu), dtype=complex)
            A_y = np.linalg.solve(L, op @ L)
            # d(L^-1 op L) = -L^-1 dL A + L^-1 op dL
            return np.linalg.solve(L, op @ dL - dL @ A_y)
    return BundleMorphism(A, dA)


def transported_from_morphism(triv: Trivializer, x0, A: BundleMorphism) -> BundleMorphism:
    """The transported morphism that agrees with ``A`` over ``x0``."""
    return transported_morphism(triv, x0, A(x0))


def chi(A: BundleMorphism) -> MorphismSection:
    return MorphismSection(A.A, A.dA)


def chi_inverse(section: MorphismSection) -> BundleMorphism:
    return BundleMorphism(section.field, section.dfield)


def d_circ_mu(triv: Trivializer, A, x, mu: int, scheme: DifferenceScheme | None = None,
              form: str = "limit") -> np.ndarray:
    """Derivation induced on sections of the endomorphism bundle.

    ``form="limit"`` differences ``assoc_transport(x(eps), x, A(x(eps)))``;
    ``form="analytic"`` returns ``L^-1 d_mu(L A L^-1) L``.
    ``A`` may be a BundleMorphism or a MorphismSection.
    """
    field: Callable = A.A if isinstance(A, BundleMorphism) else A.field
    x = as_coords(x)
    if form == "analytic":
        return _conjugated_derivative(triv, field, x, mu, scheme)
    if form != "limit":
        raise ValueError(f"unknown form {form!r}")
    key = point_key(x)
    A_x = np.asarray(field(x), dtype=complex)

    def pulled_back(z):
        if point_key(z) == key:
            return A_x
        return assoc_transport(triv, z, x, field(z))

    return partial_derivative(pulled_back, x, mu, scheme)


def breve_l(triv: Trivializer, A_hat: SectionMorphism, x) -> Callable[[Section, object], np.ndarray]:
    """Map ``(Y, y) -> transport(y, x) A_y Y(y) - A_x transport(y, x) Y(y)``.

    The value is a vector in the fibre over ``x``; it vanishes at ``y = x``.
    """
    A = _require_generated(A_hat)
    x = as_coords(x)
    key = point_key(x)
    A_x = A(x)

    def apply(Y: Section, y) -> np.ndarray:
        if point_key(y) == key:
            return np.zeros(triv.n, dtype=complex)
        to_x = transport(triv, y, x).matrix
        Y_y = Y(y)
        return to_x @ (A(y) @ Y_y) - A_x @ (to_x @ Y_y)

    return apply
