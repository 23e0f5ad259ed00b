"""BundleSpec files: a small YAML schema describing one bundle and its probes.

Minimal example::

    bundlespec: 1
    chart: {origin: [0.0], spacing: [0.1], extents: [11]}
    fibre: {n: 2}
    trivializer: {family: identity}

Everything else (sections, morphisms, field, test functions, coordinate and
basis changes, scheme, tolerances, sample counts, seed) has defaults. See
README.md for the full key list.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from . import catalog
from .base_grid import CoordinateChange, CoordinateChart, DifferenceScheme
from .bundle import Trivializer
from .errors import HilbundleError, ParseError, ValidationError
from .fields import BundleMorphism, Section
from .hilbert import FibreSpace
from .qft import FieldComponents, TestFunction

__all__ = ["SCHEMA_VERSION", "BundleSpec", "Bundle", "load_spec", "parse_spec"]

SCHEMA_VERSION = 1

TOP_LEVEL_KEYS = {
    "bundlespec", "name", "chart", "fibre", "trivializer", "sections", "morphisms",
    "fields", "test_functions", "coordinate_change", "basis_change", "scheme",
    "tolerances", "samples", "sample_overrides", "seed", "max_condition",
}


@dataclass
class BundleSpec:
    """Validated declarative description; :meth:`build` instantiates it."""

    chart: CoordinateChart
    n: int
    gram: np.ndarray | None
    trivializer: dict
    sections: dict[str, dict] = field(default_factory=dict)
    morphisms: dict[str, dict] = field(default_factory=dict)
    fields: list[dict] | None = None
    test_functions: dict[str, dict] = field(default_factory=dict)
    coordinate_change: dict | None = None
    basis_change: dict | None = None
    scheme: DifferenceScheme = field(default_factory=DifferenceScheme)
    tol_algebraic: float = 1e-12
    tol_fd: float = 1e-8
    samples: int = 25
    sample_overrides: dict[str, int] = field(default_factory=dict)
    seed: int = 0
    max_condition: float = 1e8
    name: str = "unnamed"
    source: str | None = None

    @property
    def dim(self) -> int:
        return self.chart.dim

    def build(self) -> "Bundle":
        return Bundle.from_spec(self)


@dataclass
class Bundle:
    """Instantiated objects of a spec, including the seeded default probes."""

    spec: BundleSpec
    space: FibreSpace
    triv: Trivializer
    sections: dict[str, Section]
    morphisms: dict[str, BundleMorphism]
    field: FieldComponents
    test_functions: dict[str, TestFunction]
    coordinate_change: CoordinateChange
    basis_change: tuple

    @classmethod
    def from_spec(cls, spec: BundleSpec) -> "Bundle":
        n, dim = spec.n, spec.dim
        space = FibreSpace(n, spec.gram)
        triv = catalog.make_trivializer(space, dim, spec.trivializer["family"],
                                        spec.trivializer.get("params"), spec.max_condition)
        sections = {name: catalog.make_section(triv, dim, d["family"], d.get("params"))
                    for name, d in spec.sections.items()}
        morphisms = {name: catalog.make_morphism(triv, dim, d["family"], d.get("params"))
                     for name, d in spec.morphisms.items()}
        for name, d in _default_sections(n, dim, spec.seed).items():
            sections.setdefault(name, catalog.make_section(triv, dim, d["family"], d["params"]))
        for name, d in _default_morphisms(n, dim, spec.seed).items():
            morphisms.setdefault(name, catalog.make_morphism(triv, dim, d["family"], d["params"]))
        components = spec.fields if spec.fields is not None else _default_field(n, dim, spec.seed)
        fieldc = catalog.make_field_components(n, dim, components)
        tf_defs = spec.test_functions or _default_test_functions(spec.chart, fieldc.n_comp)
        test_functions = {name: catalog.make_test_function(spec.chart, fieldc.n_comp, d["family"],
                                                           d.get("params"))
                          for name, d in tf_defs.items()}
        cc = spec.coordinate_change or {"family": "exponential", "params": {"rates": [0.3] * dim}}
        change = catalog.make_coordinate_change(dim, cc["family"], cc.get("params"))
        bc = spec.basis_change or {"family": "exp_generator",
                                   "params": {"random": {"seed": spec.seed + 1, "scale": 0.3}}}
        basis = catalog.make_matrix_field(n, dim, bc["family"], bc.get("params"))
        return cls(spec, space, triv, sections, morphisms, fieldc, test_functions, change, basis)


def _default_sections(n: int, dim: int, seed: int) -> dict[str, dict]:
    rng = np.random.default_rng([seed, 101])
    k = np.round(rng.uniform(-2.0, 2.0, size=(n, dim)), 3).tolist()
    return {
        "probe_plane_wave": {"family": "plane_wave", "params": {
            "amplitudes": {"random": {"seed": seed + 11}}, "wavevectors": k}},
        "probe_polynomial": {"family": "polynomial", "params": {"terms": [
            {"coef": {"random": {"seed": seed + 12}}, "power": [0] * dim},
            *({"coef": {"random": {"seed": seed + 13 + mu}}, "power": _unit(dim, mu, 3)}
              for mu in range(dim)),
        ]}},
    }


def _default_morphisms(n: int, dim: int, seed: int) -> dict[str, dict]:
    return {
        "probe_linear": {"family": "polynomial", "params": {"terms": [
            {"coef": {"random": {"seed": seed + 21}}, "power": [0] * dim},
            *({"coef": {"random": {"seed": seed + 22 + mu, "scale": 0.5}}, "power": _unit(dim, mu, 1)}
              for mu in range(dim)),
            *({"coef": {"random": {"seed": seed + 40 + mu, "scale": 0.3}}, "power": _unit(dim, mu, 3)}
              for mu in range(dim)),
        ]}},
    }


def _default_field(n: int, dim: int, seed: int) -> list[dict]:
    return [
        {"family": "constant", "params": {"matrix": {"random": {"seed": seed + 31, "hermitian": True}}}},
        {"family": "polynomial", "params": {"terms": [
            {"coef": {"random": {"seed": seed + 32}}, "power": [0] * dim},
            *({"coef": {"random": {"seed": seed + 33 + mu, "scale": 0.5}}, "power": _unit(dim, mu, 1)}
              for mu in range(dim)),
        ]}},
    ]


def _default_test_functions(chart: CoordinateChart, n_comp: int) -> dict[str, dict]:
    lo = [1 if e >= 4 else 0 for e in chart.extents]
    hi = [e - 2 if e >= 4 else e - 1 for e in chart.extents]
    weights = [str(complex(1.0, 0.5 * i)) for i in range(n_comp)]
    return {"probe_hat": {"family": "hat", "params": {"support": {"lo": lo, "hi": hi}, "weights": weights}}}


def _unit(dim: int, mu: int, power: int) -> list[int]:
    p = [0] * dim
    p[mu] = power
    return p


def _mapping(data, key: str) -> dict:
    value = data.get(key)
    if not isinstance(value, Mapping):
        raise ValidationError(f"'{key}' must be a mapping")
    return dict(value)


def _family_entry(value, where: str) -> dict:
    if not isinstance(value, Mapping) or "family" not in value:
        raise ValidationError(f"{where} must be a mapping with a 'family' key")
    params = value.get("params", {}) or {}
    if not isinstance(params, Mapping):
        raise ValidationError(f"{where}.params must be a mapping")
    return {"family": str(value["family"]), "params": dict(params)}


def _named_entries(data, key: str) -> dict[str, dict]:
    value = data.get(key) or {}
    if isinstance(value, list):
        entries = {}
        for i, item in enumerate(value):
            if not isinstance(item, Mapping) or "name" not in item:
                raise ValidationError(f"{key}[{i}] needs a 'name'")
            if item["name"] in entries:
                raise ValidationError(f"duplicate {key} name {item['name']!r}")
            entries[str(item["name"])] = _family_entry(item, f"{key}[{i}]")
        return entries
    if not isinstance(value, Mapping):
        raise ValidationError(f"'{key}' must be a mapping of name -> definition")
    return {str(name): _family_entry(d, f"{key}.{name}") for name, d in value.items()}


def _positive(value, what: str, cast=float):
    try:
        v = cast(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} must be a number, got {value!r}") from None
    if not v > 0:
        raise ValidationError(f"{what} must be positive, got {value!r}")
    return v


def parse_spec(data: Any, source: str | None = None) -> BundleSpec:
    """Validate an already-parsed document and resolve every family reference."""
    if not isinstance(data, Mapping):
        raise ValidationError("spec document must be a mapping")
    unknown = set(data) - TOP_LEVEL_KEYS
    if unknown:
        raise ValidationError(f"unknown top-level keys: {', '.join(sorted(unknown))}")
    version = data.get("bundlespec")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported or missing 'bundlespec' version {version!r} (expected {SCHEMA_VERSION})")
    for key in ("chart", "fibre", "trivializer"):
        if key not in data:
            raise ValidationError(f"missing required key '{key}'")

    c = _mapping(data, "chart")
    try:
        chart = CoordinateChart(tuple(c["origin"]), tuple(c["spacing"]), tuple(c["extents"]))
    except KeyError as exc:
        raise ValidationError(f"chart is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"invalid chart: {exc}") from None

    fb = _mapping(data, "fibre")
    n = int(_positive(fb.get("n"), "fibre.n", int))
    gram = None
    if fb.get("gram") is not None:
        gram = catalog.parse_array(fb["gram"], (n, n))

    trivializer = _family_entry(data["trivializer"], "trivializer")

    fields = None
    if data.get("fields") is not None:
        fdef = _mapping(data, "fields")
        comps = fdef.get("components")
        if not isinstance(comps, list) or not comps:
            raise ValidationError("fields.components must be a non-empty list")
        fields = [_family_entry(cdef, f"fields.components[{i}]") for i, cdef in enumerate(comps)]
        if "n_comp" in fdef and int(fdef["n_comp"]) != len(fields):
            raise ValidationError(f"fields.n_comp={fdef['n_comp']} but {len(fields)} components given")

    sc = dict(data.get("scheme") or {})
    unknown = set(sc) - {"epsilon", "order", "richardson_levels", "floor"}
    if unknown:
        raise ValidationError(f"unknown scheme keys: {', '.join(sorted(unknown))}")
    scheme = DifferenceScheme(
        epsilon=None if sc.get("epsilon") is None else float(sc["epsilon"]),
        order=int(sc.get("order", 2)),
        richardson_levels=int(sc.get("richardson_levels", 0)),
        floor=float(sc.get("floor", 1e-7)),
    )
    tol = dict(data.get("tolerances") or {})
    overrides = data.get("sample_overrides") or {}
    if not isinstance(overrides, Mapping):
        raise ValidationError("sample_overrides must map suite-id patterns to counts")

    spec = BundleSpec(
        chart=chart,
        n=n,
        gram=gram,
        trivializer=trivializer,
        sections=_named_entries(data, "sections"),
        morphisms=_named_entries(data, "morphisms"),
        fields=fields,
        test_functions=_named_entries(data, "test_functions"),
        coordinate_change=(_family_entry(data["coordinate_change"], "coordinate_change")
                           if data.get("coordinate_change") else None),
        basis_change=(_family_entry(data["basis_change"], "basis_change")
                      if data.get("basis_change") else None),
        scheme=scheme,
        tol_algebraic=_positive(tol.get("algebraic", 1e-12), "tolerances.algebraic"),
        tol_fd=_positive(tol.get("fd", 1e-8), "tolerances.fd"),
        samples=int(_positive(data.get("samples", 25), "samples", int)),
        sample_overrides={str(k): int(_positive(v, f"sample_overrides.{k}", int)) for k, v in overrides.items()},
        seed=int(data.get("seed", 0)),
        max_condition=_positive(data.get("max_condition", 1e8), "max_condition"),
        name=str(data.get("name", "unnamed")),
        source=source,
    )
    # resolve every family now so errors surface at load time
    try:
        spec.build()
    except HilbundleError:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise ValidationError(f"invalid spec parameters: {exc}") from None
    return spec


def load_spec(source) -> BundleSpec:
    """Load a spec from a path or a text stream."""
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        name = str(path)
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", None)
    else:
        raise TypeError("load_spec expects a path or a readable stream")
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ParseError(exc.problem or str(exc),
                         line=mark.line + 1 if mark else None,
                         column=mark.column + 1 if mark else None) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from None
    return parse_spec(data, source=name)
