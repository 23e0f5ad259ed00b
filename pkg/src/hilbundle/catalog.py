"""Parametric families of trivializers, sections, morphisms, fields and test functions.

Every family is built from a plain ``params`` mapping (as read from a spec
file) and returns objects that carry exact derivatives, so the suites always
have a difference-free reference.

Numeric entries may be numbers or strings accepted by ``complex()``
(``"1+2j"``). Wherever a vector or matrix is expected, ``{"random": {...}}``
draws a seeded complex Gaussian instead.
"""

from __future__ import annotations

import dataclasses
from typing import Any, Callable, Mapping

import numpy as np
from scipy.linalg import expm, expm_frechet

from .base_grid import CoordinateChange, CoordinateChart, as_coords
from .bundle import Trivializer, transported_section
from .errors import SupportOutOfGrid, UnknownFamily, ValidationError
from .fields import BundleMorphism, FibreVector, Section
from .hilbert import FibreSpace
from .morphisms import transported_morphism
from .qft import FieldComponents, TestFunction

__all__ = [
    "complex_gaussian",
    "parse_array",
    "PolynomialField",
    "make_trivializer",
    "make_matrix_field",
    "make_section",
    "make_morphism",
    "make_coordinate_change",
    "make_field_components",
    "make_test_function",
    "TRIVIALIZER_FAMILIES",
    "SECTION_FAMILIES",
    "MORPHISM_FAMILIES",
    "COORDINATE_FAMILIES",
    "TEST_FUNCTION_FAMILIES",
]

TRIVIALIZER_FAMILIES = ("identity", "diagonal_phase", "exp_generator", "polynomial")
SECTION_FAMILIES = ("constant", "polynomial", "plane_wave", "transported", "lifted")
MORPHISM_FAMILIES = ("constant", "polynomial", "transported_from")
COORDINATE_FAMILIES = ("identity", "linear", "scale", "exponential")
TEST_FUNCTION_FAMILIES = ("indicator", "hat", "gaussian_truncated")


def complex_gaussian(rng: np.random.Generator, shape, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _scalar(value) -> complex:
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", ""))
        except ValueError:
            raise ValidationError(f"cannot parse {value!r} as a complex number") from None
    raise ValidationError(f"expected a number, got {value!r}")


def _random_array(spec: Mapping[str, Any], shape: tuple[int, ...]) -> np.ndarray:
    rng = np.random.default_rng(int(spec.get("seed", 0)))
    M = complex_gaussian(rng, shape, float(spec.get("scale", 1.0)))
    if spec.get("hermitian"):
        M = (M + M.conj().T) / 2
    if spec.get("unitary"):
        M, _ = np.linalg.qr(M)
    return M


def parse_array(value, shape: tuple[int, ...]) -> np.ndarray:
    """Read a complex array of the given shape from spec data."""
    if isinstance(value, Mapping):
        if "random" not in value:
            raise ValidationError(f"array mapping must contain 'random', got keys {sorted(value)}")
        return _random_array(value["random"] or {}, shape)
    if np.ndim(value) == 0 and len(shape) > 0:
        raise ValidationError(f"expected an array of shape {shape}, got scalar {value!r}")
    arr = np.vectorize(_scalar, otypes=[complex])(np.asarray(value, dtype=object))
    if arr.shape != shape:
        raise ValidationError(f"expected shape {shape}, got {arr.shape}")
    return arr


class PolynomialField:
    """``x -> sum_k coef_k * prod_mu (x^mu)**power_k[mu]`` with array coefficients."""

    def __init__(self, coefs, powers):
        self.coefs = [np.asarray(c, dtype=complex) for c in coefs]
        self.powers = [tuple(int(p) for p in pw) for pw in powers]
        if not self.coefs:
            raise ValidationError("polynomial needs at least one term")
        if any(p < 0 for pw in self.powers for p in pw):
            raise ValidationError("polynomial powers must be non-negative")
        self.dim = len(self.powers[0])
        if any(len(pw) != self.dim for pw in self.powers):
            raise ValidationError("all polynomial terms need one power per axis")
        self.shape = self.coefs[0].shape

    @classmethod
    def from_terms(cls, terms, shape: tuple[int, ...], dim: int) -> "PolynomialField":
        if not isinstance(terms, list) or not terms:
            raise ValidationError("polynomial 'terms' must be a non-empty list")
        coefs, powers = [], []
        for term in terms:
            power = list(term.get("power", [0] * dim))
            if len(power) != dim:
                raise ValidationError(f"term power {power} does not match base dimension {dim}")
            coefs.append(parse_array(term["coef"], shape))
            powers.append(power)
        return cls(coefs, powers)

    def __call__(self, x) -> np.ndarray:
        x = as_coords(x)
        out = np.zeros(self.shape, dtype=complex)
        for c, pw in zip(self.coefs, self.powers):
            out = out + c * np.prod(x ** np.asarray(pw))
        return out

    def derivative(self, x, mu: int) -> np.ndarray:
        x = as_coords(x)
        out = np.zeros(self.shape, dtype=complex)
        for c, pw in zip(self.coefs, self.powers):
            p = pw[mu]
            if p == 0:
                continue
            lowered = list(pw)
            lowered[mu] = p - 1
            out = out + c * p * np.prod(x ** np.asarray(lowered))
        return out


def _require(params: Mapping, key: str, family: str):
    if key not in params:
        raise ValidationError(f"family {family!r} requires parameter {key!r}")
    return params[key]


# trivializers ---------------------------------------------------------------

def _default_phases(n: int, dim: int) -> list[PolynomialField]:
    phases = []
    for k in range(n):
        coefs, powers = [], []
        for mu in range(dim):
            lin = [0] * dim
            lin[mu] = 1
            quad = [0] * dim
            quad[mu] = 2
            coefs += [0.7 * (k + 1) / (mu + 1), 0.3 * (k + 1)]
            powers += [lin, quad]
        phases.append(PolynomialField(coefs, powers))
    return phases


def _diagonal_phase(space: FibreSpace, dim: int, params: Mapping) -> Trivializer:
    n = space.n
    if "phases" in params:
        raw = params["phases"]
        if not isinstance(raw, list) or len(raw) != n:
            raise ValidationError(f"diagonal_phase needs one phase polynomial per fibre dimension ({n})")
        phases = [PolynomialField.from_terms(terms, (), dim) for terms in raw]
        for ph in phases:
            if any(abs(c.imag) > 0 for c in ph.coefs):
                raise ValidationError("phase polynomials must have real coefficients")
    else:
        phases = _default_phases(n, dim)

    def theta(x):
        return np.array([ph(x).real for ph in phases])

    def L(x):
        return np.diag(np.exp(1j * theta(x)))

    def dL(x, mu):
        d = np.array([ph.derivative(x, mu).real for ph in phases])
        return np.diag(1j * d * np.exp(1j * theta(x)))

    def L_inv(x):
        return np.diag(np.exp(-1j * theta(x)))

    return Trivializer(space, L, dL, L_inv, name="diagonal_phase")


def _exp_generator(space: FibreSpace, dim: int, params: Mapping) -> Trivializer:
    n = space.n
    if "generators" in params:
        raw = params["generators"]
        if not isinstance(raw, list) or len(raw) != dim:
            raise ValidationError(f"exp_generator needs one generator per base axis ({dim})")
        gens = [parse_array(g, (n, n)) for g in raw]
    else:
        rnd = params.get("random", {}) or {}
        rng = np.random.default_rng(int(rnd.get("seed", 0)))
        scale = float(rnd.get("scale", 0.3))
        gens = [complex_gaussian(rng, (n, n), scale / np.sqrt(n)) for _ in range(dim)]

    def exponent(x):
        x = as_coords(x)
        return sum(c * G for c, G in zip(x, gens))

    def L(x):
        return expm(exponent(x))

    def dL(x, mu):
        return expm_frechet(exponent(x), gens[mu], compute_expm=False)

    def L_inv(x):
        return expm(-exponent(x))

    return Trivializer(space, L, dL, L_inv, name="exp_generator")


def _polynomial_trivializer(space: FibreSpace, dim: int, params: Mapping) -> Trivializer:
    poly = PolynomialField.from_terms(_require(params, "terms", "polynomial"), (space.n, space.n), dim)
    return Trivializer(space, poly, poly.derivative, name="polynomial")


def make_trivializer(space: FibreSpace, dim: int, family: str, params: Mapping | None = None,
                     max_condition: float = 1e8) -> Trivializer:
    params = params or {}
    if family == "identity":
        eye = np.eye(space.n, dtype=complex)
        zero = np.zeros((space.n, space.n), dtype=complex)
        triv = Trivializer(space, lambda x: eye, lambda x, mu: zero, lambda x: eye, name="identity")
    elif family == "diagonal_phase":
        triv = _diagonal_phase(space, dim, params)
    elif family == "exp_generator":
        triv = _exp_generator(space, dim, params)
    elif family == "polynomial":
        triv = _polynomial_trivializer(space, dim, params)
    else:
        raise UnknownFamily(f"unknown trivializer family {family!r}; known: {', '.join(TRIVIALIZER_FAMILIES)}")
    return dataclasses.replace(triv, max_condition=float(max_condition))


def make_matrix_field(n: int, dim: int, family: str, params: Mapping | None = None
                      ) -> tuple[Callable, Callable]:
    """An (invertible or not) matrix field and its exact derivative, from the
    trivializer catalog; used for fibre basis changes."""
    space = FibreSpace(n)
    triv = make_trivializer(space, dim, family, params)
    return triv.L, triv.dL


# sections -------------------------------------------------------------------

def make_section(triv: Trivializer, dim: int, family: str, params: Mapping | None = None) -> Section:
    params = params or {}
    n = triv.n
    if family == "constant":
        v = parse_array(_require(params, "vector", family), (n,))
        zero = np.zeros(n, dtype=complex)
        return Section(lambda x: v, lambda x, mu: zero)
    if family == "polynomial":
        poly = PolynomialField.from_terms(_require(params, "terms", family), (n,), dim)
        return Section(poly, poly.derivative)
    if family == "plane_wave":
        amps = parse_array(_require(params, "amplitudes", family), (n,))
        k = np.asarray(_require(params, "wavevectors", family), dtype=float)
        if k.shape != (n, dim):
            raise ValidationError(f"plane_wave wavevectors must have shape {(n, dim)}, got {k.shape}")

        def Y(x):
            return amps * np.exp(1j * (k @ as_coords(x)))

        def dY(x, mu):
            return 1j * k[:, mu] * Y(x)

        return Section(Y, dY)
    if family == "transported":
        x0 = as_coords(_require(params, "x0", family))
        if x0.size != dim:
            raise ValidationError(f"x0 must have {dim} coordinates")
        u0 = parse_array(_require(params, "u0", family), (n,))
        return transported_section(triv, x0, FibreVector(x0, u0))
    if family == "lifted":
        X0 = parse_array(_require(params, "state", family), (n,))

        def dY(x, mu):
            return -triv.solve(x, triv.dL(as_coords(x), mu) @ triv.solve(x, X0))

        return Section(lambda x: triv.solve(x, X0), dY if triv.dL is not None else None)
    raise UnknownFamily(f"unknown section family {family!r}; known: {', '.join(SECTION_FAMILIES)}")


# morphisms ------------------------------------------------------------------

def make_morphism(triv: Trivializer, dim: int, family: str, params: Mapping | None = None) -> BundleMorphism:
    params = params or {}
    n = triv.n
    if family == "constant":
        M = parse_array(_require(params, "matrix", family), (n, n))
        zero = np.zeros((n, n), dtype=complex)
        return BundleMorphism(lambda x: M, lambda x, mu: zero)
    if family == "polynomial":
        poly = PolynomialField.from_terms(_require(params, "terms", family), (n, n), dim)
        return BundleMorphism(poly, poly.derivative)
    if family == "transported_from":
        x0 = as_coords(_require(params, "x0", family))
        if x0.size != dim:
            raise ValidationError(f"x0 must have {dim} coordinates")
        seed = parse_array(_require(params, "seed", family), (n, n))
        return transported_morphism(triv, x0, seed)
    raise UnknownFamily(f"unknown morphism family {family!r}; known: {', '.join(MORPHISM_FAMILIES)}")


# coordinate changes ---------------------------------------------------------

def make_coordinate_change(dim: int, family: str, params: Mapping | None = None) -> CoordinateChange:
    params = params or {}
    if family == "identity":
        return CoordinateChange.identity()
    if family == "linear":
        M = np.asarray(_require(params, "matrix", family), dtype=float)
        if M.shape != (dim, dim):
            raise ValidationError(f"linear coordinate change matrix must be {dim}x{dim}")
        return CoordinateChange.linear(M, params.get("offset"))
    if family == "scale":
        f = np.asarray(_require(params, "factors", family), dtype=float)
        if f.shape != (dim,) or np.any(f == 0):
            raise ValidationError(f"scale factors must be {dim} nonzero numbers")
        return CoordinateChange.scale(f)
    if family == "exponential":
        r = np.asarray(_require(params, "rates", family), dtype=float)
        if r.shape != (dim,):
            raise ValidationError(f"exponential rates must have {dim} entries")
        return CoordinateChange.exponential(r)
    raise UnknownFamily(f"unknown coordinate change family {family!r}; known: {', '.join(COORDINATE_FAMILIES)}")


# fields and test functions --------------------------------------------------

def make_field_components(n_fibre: int, dim: int, components: list) -> FieldComponents:
    """Field whose components are ``constant`` or ``polynomial`` operator fields."""
    if not isinstance(components, list) or not components:
        raise ValidationError("field needs a non-empty list of components")
    fields = []
    for comp in components:
        family = comp.get("family")
        params = comp.get("params", {}) or {}
        if family == "constant":
            M = parse_array(_require(params, "matrix", family), (n_fibre, n_fibre))
            fields.append(lambda y, M=M: M)
        elif family == "polynomial":
            fields.append(PolynomialField.from_terms(_require(params, "terms", family),
                                                     (n_fibre, n_fibre), dim))
        else:
            raise UnknownFamily(f"unknown field component family {family!r}; known: constant, polynomial")
    return FieldComponents(len(fields), n_fibre, lambda i, y: fields[i](y))


def make_test_function(chart: CoordinateChart, n_comp: int, family: str,
                       params: Mapping | None = None) -> TestFunction:
    params = params or {}
    support = _require(params, "support", family)
    lo, hi = support.get("lo"), support.get("hi")
    if lo is None or hi is None:
        raise ValidationError("support needs 'lo' and 'hi' index corners")
    weights = parse_array(params.get("weights", [1.0] * n_comp), (n_comp,))
    if not (_inside(chart, lo) and _inside(chart, hi)):
        raise SupportOutOfGrid(f"support box {lo}..{hi} not inside grid extents {chart.extents}")
    lo_c, hi_c = chart.coords(lo), chart.coords(hi)
    centre = np.asarray(params.get("center", (lo_c + hi_c) / 2), dtype=float)
    half = (hi_c - lo_c) / 2

    if family == "indicator":
        def profile(y):
            return 1.0
    elif family == "hat":
        def profile(y):
            return float(np.prod(np.clip(1.0 - np.abs(y - centre) / half, 0.0, None)))
    elif family == "gaussian_truncated":
        width = float(params.get("width", float(np.min(half)) / 2))
        if width <= 0:
            raise ValidationError("gaussian width must be positive")

        def profile(y):
            return float(np.exp(-np.sum((y - centre) ** 2) / (2 * width**2)))
    else:
        raise UnknownFamily(
            f"unknown test function family {family!r}; known: {', '.join(TEST_FUNCTION_FAMILIES)}"
        )
    return TestFunction(lambda i, y: weights[i] * profile(as_coords(y)), chart, (lo, hi))


def _inside(chart: CoordinateChart, index) -> bool:
    index = list(index)
    return len(index) == chart.dim and all(0 <= int(i) < e for i, e in zip(index, chart.extents))
