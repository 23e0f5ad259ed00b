"""Discretized base manifold: a single rectangular chart plus finite differences.

Fields over the base are evaluable closures of real coordinates, so grid
points are only used to choose where identities get tested. All derivative
evaluations in the package go through :func:`partial_derivative`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EpsilonTooSmall,
    EvaluationFailure,
    HilbundleError,
    SingularCoordinateChange,
    ValidationError,
)

__all__ = [
    "CoordinateChart",
    "GridPoint",
    "CoordinateChange",
    "DifferenceScheme",
    "as_coords",
    "displace",
    "partial_derivative",
    "richardson_extrapolate",
    "convergence_order",
]

MACHINE_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class GridPoint:
    index: tuple[int, ...]
    coords: tuple[float, ...]

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def as_coords(x) -> np.ndarray:
    """Coerce a GridPoint, scalar or sequence into a 1-D float coordinate array."""
    if isinstance(x, GridPoint):
        return x.x
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"base coordinates must be a vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class CoordinateChart:
    """Rectangular grid ``origin + index * spacing`` with ``extents`` points per axis."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    extents: tuple[int, ...]

    def __post_init__(self):
        origin = tuple(float(v) for v in np.atleast_1d(self.origin))
        spacing = tuple(float(v) for v in np.atleast_1d(self.spacing))
        extents = tuple(int(v) for v in np.atleast_1d(self.extents))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "extents", extents)
        if len(origin) < 1:
            raise ValidationError("chart dimension must be at least 1")
        if not (len(origin) == len(spacing) == len(extents)):
            raise ValidationError(
                "chart origin, spacing and extents must have the same length, got "
                f"{len(origin)}, {len(spacing)}, {len(extents)}"
            )
        if any(not math.isfinite(h) or h <= 0 for h in spacing):
            raise ValidationError(f"every grid spacing must be positive, got {spacing}")
        if any(e < 3 for e in extents):
            raise ValidationError(
                f"every extent must be >= 3 so central differences have interior points, got {extents}"
            )

    @property
    def dim(self) -> int:
        return len(self.origin)

    def coords(self, index: Sequence[int]) -> np.ndarray:
        index = tuple(int(i) for i in index)
        if len(index) != self.dim:
            raise ValueError(f"index {index} has wrong length for a {self.dim}-D chart")
        for i, e in zip(index, self.extents):
            if not 0 <= i < e:
                raise IndexError(f"grid index {index} outside extents {self.extents}")
        return np.asarray(self.origin) + np.asarray(index) * np.asarray(self.spacing)

    def point(self, index: Sequence[int]) -> GridPoint:
        c = self.coords(index)
        return GridPoint(tuple(int(i) for i in index), tuple(float(v) for v in c))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.origin)
        hi = lo + (np.asarray(self.extents) - 1) * np.asarray(self.spacing)
        return lo, hi

    def max_abs_coord(self) -> float:
        lo, hi = self.bounds()
        return float(np.max(np.maximum(np.abs(lo), np.abs(hi))))

    def sample_interior(self, rng: np.random.Generator, count: int) -> list[GridPoint]:
        """Draw ``count`` interior grid points uniformly (with replacement)."""
        points = []
        for _ in range(count):
            index = tuple(int(rng.integers(1, e - 1)) for e in self.extents)
            points.append(self.point(index))
        return points


@dataclass(frozen=True)
class DifferenceScheme:
    """Finite-difference realization of the one-parameter limits.

    ``epsilon=None`` selects the usual optimum ``eps_machine**(1/3)`` for
    central differences (``eps_machine**(1/2)`` for forward ones), scaled by
    ``max(1, |x^mu|)``. A user-supplied epsilon is used as given (sign
    included) once it passes the relative floor.
    """

    epsilon: float | None = None
    order: int = 2
    richardson_levels: int = 0
    floor: float = 1e-7

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValidationError(f"difference order must be 1 or 2, got {self.order}")
        if self.richardson_levels < 0:
            raise ValidationError("richardson_levels must be non-negative")
        if self.epsilon is not None and (self.epsilon == 0 or not math.isfinite(self.epsilon)):
            raise EpsilonTooSmall(f"epsilon must be a nonzero finite number, got {self.epsilon}")

    def step(self, x_mu: float = 0.0) -> float:
        scale = max(1.0, abs(float(x_mu)))
        if self.epsilon is None:
            return MACHINE_EPS ** (1.0 / (self.order + 1)) * scale
        if abs(self.epsilon) < self.floor * scale:
            raise EpsilonTooSmall(
                f"|epsilon|={abs(self.epsilon):.3g} below guard {self.floor * scale:.3g}"
            )
        return float(self.epsilon)

    @property
    def effective_order(self) -> int:
        """Truncation order after Richardson elimination."""
        return self.order * (self.richardson_levels + 1)

    def replace(self, **changes) -> "DifferenceScheme":
        fields = dict(epsilon=self.epsilon, order=self.order,
                      richardson_levels=self.richardson_levels, floor=self.floor)
        fields.update(changes)
        return DifferenceScheme(**fields)


DEFAULT_SCHEME = DifferenceScheme()


def displace(x, mu: int, eps: float) -> np.ndarray:
    """Coordinates of ``x`` moved by ``eps`` along axis ``mu``; may leave the grid."""
    coords = as_coords(x).copy()
    if not 0 <= mu < coords.size:
        raise IndexError(f"axis {mu} out of range for a {coords.size}-D base")
    coords[mu] += eps
    return coords


def _evaluate(f: Callable, coords: np.ndarray):
    try:
        value = np.asarray(f(coords))
    except HilbundleError:
        raise
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        raise EvaluationFailure(f"field evaluation failed at {coords.tolist()}: {exc}") from exc
    if not np.all(np.isfinite(value)):
        raise EvaluationFailure(f"field is not finite at {coords.tolist()}")
    return value


def richardson_extrapolate(values: Sequence[np.ndarray], p: int, r: float = 2.0) -> np.ndarray:
    """Neville-style elimination of error terms ``h^p, h^2p, ...``.

    ``values[k]`` is the approximation computed with step ``h / r**k``.
    """
    vals = [np.asarray(v) for v in values]
    n = len(vals)
    for j in range(1, n):
        factor = r ** (p * j)
        for k in range(n - 1, j - 1, -1):
            vals[k] = (factor * vals[k] - vals[k - 1]) / (factor - 1.0)
    return vals[-1]


def partial_derivative(f: Callable, x, mu: int, scheme: DifferenceScheme | None = None):
    """Finite-difference approximation of the partial derivative of ``f`` along ``mu``.

    Args:
        f: callable of base coordinates returning an array (scalar, vector or matrix).
        x: base point (GridPoint or coordinates).
        mu: axis index.
        scheme: difference scheme; the default is central with optimal step.

    Returns:
        Array of the same shape as ``f(x)``.

    Raises:
        EpsilonTooSmall: the step violates the scheme's floor.
        EvaluationFailure: ``f`` fails or is non-finite at a displaced point.
    """
    scheme = scheme or DEFAULT_SCHEME
    coords = as_coords(x)
    if not 0 <= mu < coords.size:
        raise IndexError(f"axis {mu} out of range for a {coords.size}-D base")
    h = scheme.step(coords[mu])

    if scheme.order == 2:
        def quotient(step):
            plus = _evaluate(f, displace(coords, mu, step))
            minus = _evaluate(f, displace(coords, mu, -step))
            return (plus - minus) / (2.0 * step)
    else:
        centre = _evaluate(f, coords)

        def quotient(step):
            return (_evaluate(f, displace(coords, mu, step)) - centre) / step

    if scheme.richardson_levels == 0:
        return quotient(h)
    values = [quotient(h / 2.0**k) for k in range(scheme.richardson_levels + 1)]
    return richardson_extrapolate(values, p=scheme.order)


def convergence_order(steps: Sequence[float], errors: Sequence[float]) -> tuple[float, np.ndarray]:
    """Least-squares slope of log(error) against log(step), plus pairwise orders.

    The pairwise orders are ``log(e_k / e_{k+1}) / log(h_k / h_{k+1})``; with
    step halving they are log2 error ratios.
    """
    steps = np.abs(np.asarray(steps, dtype=float))
    errors = np.asarray(errors, dtype=float)
    if steps.size < 2 or steps.size != errors.size:
        raise ValueError("need at least two (step, error) pairs of equal length")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive to measure an order")
    slope = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
    pairwise = np.log(errors[:-1] / errors[1:]) / np.log(steps[:-1] / steps[1:])
    return slope, pairwise


@dataclass(frozen=True)
class CoordinateChange:
    """A change of chart ``x -> x'``.

    ``jacobian_inverse(x)`` returns ``[dx^nu / dx'^mu]`` (row nu, column mu)
    at the point whose unprimed coordinates are ``x``. When it is not supplied
    it is obtained by differencing ``inverse`` in the primed chart.
    """

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian_inverse: Callable[[np.ndarray], np.ndarray] | None = None
    max_condition: float = 1e8

    def jacobian_inverse_at(self, x, scheme: DifferenceScheme | None = None) -> np.ndarray:
        coords = as_coords(x)
        if self.jacobian_inverse is not None:
            J = np.asarray(self.jacobian_inverse(coords), dtype=float)
        else:
            xp = np.asarray(self.forward(coords), dtype=float)
            J = np.column_stack([
                partial_derivative(self.inverse, xp, mu, scheme) for mu in range(xp.size)
            ])
        if J.shape != (coords.size, coords.size):
            raise SingularCoordinateChange(f"jacobian has shape {J.shape}")
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > self.max_condition:
            raise SingularCoordinateChange(
                f"coordinate change is singular at {coords.tolist()} (condition {cond:.3g})"
            )
        return J

    def jacobian_at(self, x, scheme: DifferenceScheme | None = None) -> np.ndarray:
        """``[dx'^mu / dx^nu]`` (row mu, column nu)."""
        return np.linalg.inv(self.jacobian_inverse_at(x, scheme))

    @classmethod
    def identity(cls) -> "CoordinateChange":
        return cls(
            forward=lambda x: np.array(x, dtype=float),
            inverse=lambda xp: np.array(xp, dtype=float),
            jacobian_inverse=lambda x: np.eye(np.size(x)),
        )

    @classmethod
    def linear(cls, matrix, offset=None) -> "CoordinateChange":
        """``x' = M x + b``."""
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        b = np.zeros(M.shape[0]) if offset is None else np.atleast_1d(np.asarray(offset, dtype=float))
        if np.linalg.cond(M) > 1e8:
            raise SingularCoordinateChange("linear coordinate change matrix is singular")
        M_inv = np.linalg.inv(M)
        return cls(
            forward=lambda x: M @ as_coords(x) + b,
            inverse=lambda xp: M_inv @ (as_coords(xp) - b),
            jacobian_inverse=lambda x: M_inv,
        )

    @classmethod
    def scale(cls, factors) -> "CoordinateChange":
        return cls.linear(np.diag(np.atleast_1d(np.asarray(factors, dtype=float))))

    @classmethod
    def exponential(cls, rates) -> "CoordinateChange":
        """Per-axis ``x'^mu = (exp(r_mu x^mu) - 1) / r_mu`` (identity where ``r_mu = 0``)."""
        r = np.atleast_1d(np.asarray(rates, dtype=float))
        safe = np.where(r == 0, 1.0, r)

        def forward(x):
            x = as_coords(x)
            return np.where(r == 0, x, np.expm1(r * x) / safe)

        def inverse(xp):
            xp = as_coords(xp)
            return np.where(r == 0, xp, np.log1p(r * xp) / safe)

        def jacobian_inverse(x):
            return np.diag(np.exp(-r * as_coords(x)))

        return cls(forward=forward, inverse=inverse, jacobian_inverse=jacobian_inverse)
