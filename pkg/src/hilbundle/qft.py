"""Lifting Heisenberg-picture states, operators and fields onto the bundle.

State vectors stay fixed in the typical fibre while operators carry the
base dependence. Field smearing is a finite quadrature over a box of grid
points; the same rule is used on the conventional and the bundle side so
both can be compared to rounding accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .base_grid import CoordinateChart, as_coords
from .bundle import Trivializer
from .errors import DimensionMismatch, SupportOutOfGrid
from .fields import BundleMorphism, Section, SectionMorphism
from .morphisms import assoc_transport

__all__ = [
    "FieldComponents",
    "TestFunction",
    "QuadratureRule",
    "lift_state",
    "lift_operator",
    "lift_field",
    "smear_conventional",
    "smear_component",
    "smear_bundle",
    "smear_bundle_component",
    "apply_section_morphism",
]


@dataclass(frozen=True, eq=False)
class FieldComponents:
    """Non-smeared field: ``phi(i, y)`` is the operator of component ``i`` at ``y``."""

    n_comp: int
    n_fibre: int
    phi: Callable[[int, np.ndarray], np.ndarray]

    def __call__(self, i: int, y) -> np.ndarray:
        if not 0 <= i < self.n_comp:
            raise IndexError(f"field component {i} out of range 0..{self.n_comp - 1}")
        M = np.asarray(self.phi(i, as_coords(y)), dtype=complex)
        if M.shape != (self.n_fibre, self.n_fibre):
            raise DimensionMismatch(f"component {i} has shape {M.shape}, fibre is {self.n_fibre}")
        return M

    def component(self, i: int) -> Callable[[np.ndarray], np.ndarray]:
        return lambda y: self(i, y)


def _check_support(chart: CoordinateChart, lo: Sequence[int], hi: Sequence[int]):
    lo = tuple(int(v) for v in lo)
    hi = tuple(int(v) for v in hi)
    if len(lo) != chart.dim or len(hi) != chart.dim:
        raise SupportOutOfGrid(f"support box must have {chart.dim} indices per corner")
    for a, b, e in zip(lo, hi, chart.extents):
        if not (0 <= a < b < e):
            raise SupportOutOfGrid(f"support box {lo}..{hi} not inside grid extents {chart.extents}")
    return lo, hi


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Vector-valued test function ``f^i(y)``, forced to vanish outside its support box."""

    __test__ = False  # not a pytest class

    f: Callable[[int, np.ndarray], complex]
    chart: CoordinateChart
    support: tuple[tuple[int, ...], tuple[int, ...]]

    def __post_init__(self):
        object.__setattr__(self, "support", _check_support(self.chart, *self.support))

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.support
        return self.chart.coords(lo), self.chart.coords(hi)

    def __call__(self, i: int, y) -> complex:
        y = as_coords(y)
        lo, hi = self.box
        slack = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
        if np.any(y < lo - slack) or np.any(y > hi + slack):
            return 0j
        return complex(self.f(i, y))

    def scaled(self, alpha) -> "TestFunction":
        return TestFunction(lambda i, y: alpha * self.f(i, y), self.chart, self.support)

    def __add__(self, other: "TestFunction") -> "TestFunction":
        lo = tuple(min(a, b) for a, b in zip(self.support[0], other.support[0]))
        hi = tuple(max(a, b) for a, b in zip(self.support[1], other.support[1]))
        return TestFunction(lambda i, y: self(i, y) + other(i, y), self.chart, (lo, hi))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def trapezoid(cls, chart: CoordinateChart, support) -> "QuadratureRule":
        """Product trapezoid rule on the grid nodes of an index box."""
        lo, hi = _check_support(chart, *support)
        axes_pts, axes_w = [], []
        for mu in range(chart.dim):
            idx = np.arange(lo[mu], hi[mu] + 1)
            h = chart.spacing[mu]
            w = np.full(idx.size, h)
            w[0] = w[-1] = h / 2
            axes_pts.append(chart.origin[mu] + idx * h)
            axes_w.append(w)
        grids = np.meshgrid(*axes_pts, indexing="ij")
        wgrids = np.meshgrid(*axes_w, indexing="ij")
        points = np.stack([g.ravel() for g in grids], axis=1)
        weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
        return cls(points, weights)

    @classmethod
    def for_test_function(cls, f: TestFunction) -> "QuadratureRule":
        return cls.trapezoid(f.chart, f.support)

    @property
    def volume(self) -> float:
        return float(self.weights.sum())


def lift_state(triv: Trivializer, X0) -> Section:
    """Section ``x -> L(x)^-1 X0`` of a fixed state vector."""
    X0 = np.asarray(X0, dtype=complex)
    if X0.shape != (triv.n,):
        raise DimensionMismatch(f"state has shape {X0.shape}, fibre dimension is {triv.n}")
    dY = None
    if triv.dL is not None:
        def dY(x, mu):
            return -triv.solve(x, triv.dL(as_coords(x), mu) @ triv.solve(x, X0))
    return Section(lambda x: triv.solve(x, X0), dY)


def lift_operator(triv: Trivializer, A) -> BundleMorphism:
    """Morphism with restrictions ``L(x)^-1 A(x) L(x)``; ``A`` may be a matrix or a field."""
    field = A if callable(A) else (lambda x, M=np.asarray(A, dtype=complex): M)

    def A_x(x):
        M = np.asarray(field(x), dtype=complex)
        if M.shape != (triv.n, triv.n):
            raise DimensionMismatch(f"operator has shape {M.shape}, fibre dimension is {triv.n}")
        L = triv.matrix(x)
        return np.linalg.solve(L, M @ L)

    return BundleMorphism(A_x)


def lift_field(triv: Trivializer, fields: FieldComponents) -> list[BundleMorphism]:
    if fields.n_fibre != triv.n:
        raise DimensionMismatch(f"field acts on dimension {fields.n_fibre}, fibre is {triv.n}")
    return [lift_operator(triv, fields.component(i)) for i in range(fields.n_comp)]


def smear_conventional(fields: FieldComponents, f: TestFunction, quad: QuadratureRule) -> np.ndarray:
    """``sum_y w(y) sum_i f^i(y) phi_i(y)``."""
    total = np.zeros((fields.n_fibre, fields.n_fibre), dtype=complex)
    for y, w in zip(quad.points, quad.weights):
        for i in range(fields.n_comp):
            c = f(i, y)
            if c != 0:
                total += (w * c) * fields(i, y)
    return total


def smear_component(fields: FieldComponents, i: int, g: Callable, quad: QuadratureRule) -> np.ndarray:
    """One smeared component ``phi_i(g)`` for a scalar test function ``g(y)``."""
    total = np.zeros((fields.n_fibre, fields.n_fibre), dtype=complex)
    for y, w in zip(quad.points, quad.weights):
        c = complex(g(y))
        if c != 0:
            total += (w * c) * fields(i, y)
    return total


def smear_bundle(triv: Trivializer, lifted: Sequence[BundleMorphism], f: TestFunction,
                 quad: QuadratureRule, x) -> np.ndarray:
    """Smeared lifted field over the fibre at ``x``: every ``Phi_i(y)`` is carried to ``x``
    by the associated transport before being summed."""
    x = as_coords(x)
    total = np.zeros((triv.n, triv.n), dtype=complex)
    for y, w in zip(quad.points, quad.weights):
        for i, Phi in enumerate(lifted):
            c = f(i, y)
            if c != 0:
                total += (w * c) * assoc_transport(triv, y, x, Phi(y))
    return total


def smear_bundle_component(triv: Trivializer, Phi: BundleMorphism, g: Callable,
                           quad: QuadratureRule, x) -> np.ndarray:
    x = as_coords(x)
    total = np.zeros((triv.n, triv.n), dtype=complex)
    for y, w in zip(quad.points, quad.weights):
        c = complex(g(y))
        if c != 0:
            total += (w * c) * assoc_transport(triv, y, x, Phi(y))
    return total


def apply_section_morphism(A_hat: SectionMorphism, X: Section) -> Section:
    """``x -> A_x(X(x))``."""
    A = A_hat.generator

    def value(x):
        M = A(x)
        v = X(x)
        if M.shape[1] != v.shape[0]:
            raise DimensionMismatch(f"morphism of shape {M.shape} cannot act on vector of length {v.shape[0]}")
        return M @ v

    return Section(value)
