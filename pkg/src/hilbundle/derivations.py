"""Derivations generated by the bundle transport.

``D_mu`` acts on sections, ``Dhat_mu`` on section morphisms generated by
bundle morphisms. Each operator is available in several independent forms
(limit quotient of transports, conjugated coordinate derivative, component
form with connection coefficients) so they can be cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .base_grid import CoordinateChange, DifferenceScheme, as_coords, partial_derivative
from .bundle import Trivializer, transport
from .errors import SingularBasisChange, UnsupportedMorphism
from .fields import (
    BundleMorphism,
    DirectionalField,
    FibreVector,
    Section,
    SectionMorphism,
    point_key,
)

__all__ = [
    "ConnectionCoefficients",
    "d_mu_limit",
    "d_mu_analytic",
    "d_mu_components",
    "d_mu_exact",
    "d_mu_in_chart",
    "gamma",
    "gamma_transform",
    "gamma_recomputed",
    "d_hat_mu",
    "d_hat_mu_apply",
    "d_hat_mu_matrix",
    "d_hat_mu_in_chart",
    "d_directional",
]


@dataclass(frozen=True, eq=False)
class ConnectionCoefficients:
    at: tuple[float, ...]
    mu: int
    matrix: np.ndarray


def d_mu_limit(triv: Trivializer, Y: Section, x, mu: int,
               scheme: DifferenceScheme | None = None) -> FibreVector:
    """Difference quotient of ``transport(x(eps), x) Y(x(eps))`` against ``Y(x)``."""
    x = as_coords(x)
    key = point_key(x)

    def pulled_back(z):
        if point_key(z) == key:
            return Y(x)
        return transport(triv, z, x).matrix @ Y(z)

    return FibreVector(key, partial_derivative(pulled_back, x, mu, scheme))


def d_mu_analytic(triv: Trivializer, Y: Section, x, mu: int,
                  scheme: DifferenceScheme | None = None) -> FibreVector:
    """``L(x)^-1 d_mu [L Y](x)``."""
    x = as_coords(x)
    dLY = partial_derivative(lambda z: triv.matrix(z) @ Y(z), x, mu, scheme)
    return FibreVector(point_key(x), triv.solve(x, dLY))


def d_mu_components(triv: Trivializer, Y: Section, x, mu: int,
                    scheme: DifferenceScheme | None = None) -> FibreVector:
    """``d_mu Y^i + Gamma^i_{j mu} Y^j``."""
    x = as_coords(x)
    dY = partial_derivative(Y, x, mu, scheme)
    G = gamma(triv, x, mu, scheme).matrix
    return FibreVector(point_key(x), dY + G @ Y(x))


def d_mu_exact(triv: Trivializer, Y: Section, x, mu: int) -> FibreVector:
    """Reference value from exact derivatives of ``L`` and ``Y`` (no differencing)."""
    if triv.dL is None or Y.dY is None:
        raise ValueError("exact reference needs both dL and dY")
    x = as_coords(x)
    value = np.asarray(Y.dY(x, mu), dtype=complex) + triv.solve(x, triv.dL(x, mu) @ Y(x))
    return FibreVector(point_key(x), value)


def gamma(triv: Trivializer, x, mu: int, scheme: DifferenceScheme | None = None,
          route: str = "trivializer") -> ConnectionCoefficients:
    """Connection coefficients ``Gamma_mu(x) = L(x)^-1 d_mu L(x)``.

    ``route`` selects how the derivative is taken: ``"trivializer"`` differences
    ``L`` (default), ``"transport"`` differences the transport matrix
    ``L(x)^-1 L(z)`` in its source point ``z`` at ``z = x``, ``"exact"`` uses
    the trivializer's analytic derivative.
    """
    x = as_coords(x)
    if route == "trivializer":
        M = triv.solve(x, partial_derivative(triv.matrix, x, mu, scheme))
    elif route == "transport":
        M = partial_derivative(lambda z: transport(triv, z, x).matrix, x, mu, scheme)
    elif route == "exact":
        if triv.dL is None:
            raise ValueError("trivializer has no exact derivative")
        M = triv.solve(x, triv.dL(x, mu))
    else:
        raise ValueError(f"unknown route {route!r}")
    return ConnectionCoefficients(point_key(x), mu, M)


def _checked_inverse(C: np.ndarray, max_condition: float = 1e8) -> np.ndarray:
    cond = np.linalg.cond(C)
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularBasisChange(f"basis change is singular (condition number {cond:.3g})")
    return np.linalg.inv(C)


def gamma_transform(gamma_field: Callable[[np.ndarray, int], np.ndarray],
                    C: Callable[[np.ndarray], np.ndarray], x, mu: int,
                    coord_change: CoordinateChange | None = None,
                    scheme: DifferenceScheme | None = None,
                    dC: Callable[[np.ndarray, int], np.ndarray] | None = None) -> np.ndarray:
    """Coefficients after ``e'_i = C_i^j e_j`` and ``x -> x'``.

    ``(C^-1 Gamma_nu C + C^-1 d_nu C) dx^nu/dx'^mu``, evaluated at the point
    with unprimed coordinates ``x``. ``gamma_field(x, nu)`` gives ``Gamma_nu(x)``.
    """
    x = as_coords(x)
    dim = x.size
    C_x = np.asarray(C(x), dtype=complex)
    C_inv = _checked_inverse(C_x)
    if coord_change is None:
        J = np.eye(dim)
    else:
        J = coord_change.jacobian_inverse_at(x, scheme)
    result = np.zeros_like(C_x)
    for nu in range(dim):
        if J[nu, mu] == 0:
            continue
        if dC is not None:
            dC_nu = np.asarray(dC(x, nu), dtype=complex)
        else:
            dC_nu = partial_derivative(C, x, nu, scheme)
        term = C_inv @ np.asarray(gamma_field(x, nu), dtype=complex) @ C_x + C_inv @ dC_nu
        result = result + term * J[nu, mu]
    return result


def gamma_recomputed(triv: Trivializer, C: Callable[[np.ndarray], np.ndarray], x, mu: int,
                     coord_change: CoordinateChange | None = None,
                     scheme: DifferenceScheme | None = None) -> np.ndarray:
    """Coefficients of ``L' = L C`` differenced directly in the primed chart."""
    x = as_coords(x)
    _checked_inverse(np.asarray(C(x), dtype=complex))
    rebased = triv.rebased(C)
    if coord_change is None:
        return gamma(rebased, x, mu, scheme).matrix
    primed = rebased.in_chart(coord_change)
    return gamma(primed, coord_change.forward(x), mu, scheme).matrix


def d_mu_in_chart(triv: Trivializer, Y: Section, change: CoordinateChange, x, mu: int,
                  scheme: DifferenceScheme | None = None) -> FibreVector:
    """``D'_mu Y`` computed entirely in the primed chart, tagged with unprimed ``x``."""
    x = as_coords(x)
    xp = np.asarray(change.forward(x), dtype=float)
    v = d_mu_analytic(triv.in_chart(change), Y.in_chart(change), xp, mu, scheme)
    return FibreVector(point_key(x), v.components)


def _require_generated(A_hat) -> BundleMorphism:
    if not isinstance(A_hat, SectionMorphism):
        raise UnsupportedMorphism(
            "Dhat is defined only on section morphisms generated by a bundle morphism, "
            f"got {type(A_hat).__name__}"
        )
    return A_hat.generator


def _conjugated_derivative(triv: Trivializer, A: Callable, x, mu: int,
                           scheme: DifferenceScheme | None) -> np.ndarray:
    x = as_coords(x)

    def conjugated(z):
        L = triv.matrix(z)
        return L @ np.asarray(A(z), dtype=complex) @ np.linalg.inv(L)

    L_x = triv.matrix(x)
    return np.linalg.solve(L_x, partial_derivative(conjugated, x, mu, scheme) @ L_x)


def d_hat_mu_matrix(triv: Trivializer, A: BundleMorphism, x, mu: int,
                    scheme: DifferenceScheme | None = None, form: str = "conjugated") -> np.ndarray:
    """Matrix of ``Dhat_mu Ahat`` at ``x``.

    ``form="conjugated"``: ``L^-1 d_mu(L A L^-1) L``.
    ``form="gamma"``: ``d_mu A + [Gamma_mu, A]``.
    """
    x = as_coords(x)
    if form == "conjugated":
        return _conjugated_derivative(triv, A, x, mu, scheme)
    if form == "gamma":
        G = gamma(triv, x, mu, scheme).matrix
        A_x = A(x)
        return partial_derivative(A, x, mu, scheme) + G @ A_x - A_x @ G
    raise ValueError(f"unknown form {form!r}")


def d_hat_mu(triv: Trivializer, A_hat: SectionMorphism, mu: int,
             scheme: DifferenceScheme | None = None) -> SectionMorphism:
    """``Dhat_mu Ahat`` as a section morphism, generated pointwise by the conjugated derivative."""
    A = _require_generated(A_hat)
    return SectionMorphism(BundleMorphism(lambda x: _conjugated_derivative(triv, A, x, mu, scheme)))


def d_hat_mu_apply(triv: Trivializer, A_hat: SectionMorphism, Y: Section, x, mu: int,
                   scheme: DifferenceScheme | None = None) -> FibreVector:
    """``(D_mu o Ahat - Ahat o D_mu)(Y)`` at ``x``, straight from the commutator."""
    A = _require_generated(A_hat)
    x = as_coords(x)
    first = d_mu_limit(triv, A_hat(Y), x, mu, scheme)
    second = A(x) @ d_mu_limit(triv, Y, x, mu, scheme).components
    return FibreVector(point_key(x), first.components - second)


def d_hat_mu_in_chart(triv: Trivializer, A_hat: SectionMorphism, change: CoordinateChange, x,
                      mu: int, scheme: DifferenceScheme | None = None) -> np.ndarray:
    A = _require_generated(A_hat)
    x = as_coords(x)
    xp = np.asarray(change.forward(x), dtype=float)
    return d_hat_mu_matrix(triv.in_chart(change), A.in_chart(change), xp, mu, scheme)


def d_directional(triv: Trivializer, target, V: DirectionalField, x,
                  scheme: DifferenceScheme | None = None):
    """``V^mu D_mu`` on a section (returns a FibreVector) or ``V^mu Dhat_mu`` on a
    section morphism (returns the matrix of the result at ``x``)."""
    x = as_coords(x)
    v = V(x)
    if isinstance(target, Section):
        total = np.zeros(triv.n, dtype=complex)
        for mu, c in enumerate(v):
            if c != 0:
                total = total + c * d_mu_analytic(triv, target, x, mu, scheme).components
        return FibreVector(point_key(x), total)
    A = _require_generated(target)
    total = np.zeros((triv.n, triv.n), dtype=complex)
    for mu, c in enumerate(v):
        if c != 0:
            total = total + c * d_hat_mu_matrix(triv, A, x, mu, scheme)
    return total
