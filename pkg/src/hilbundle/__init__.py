"""Hilbert-bundle calculus over a discretized base, with identity verification suites."""

from .base_grid import (
    CoordinateChange,
    CoordinateChart,
    DifferenceScheme,
    GridPoint,
    displace,
    partial_derivative,
)
from .bundle import (
    Trivializer,
    fibre_inner,
    herm_conj_fibre_map,
    herm_conj_morphism,
    herm_conj_point_map,
    is_fibre_unitary,
    transport,
    transported_section,
)
from .derivations import (
    d_directional,
    d_hat_mu,
    d_hat_mu_apply,
    d_mu_analytic,
    d_mu_limit,
    gamma,
    gamma_transform,
)
from .fields import BundleMorphism, FibreMap, FibreVector, Section, SectionMorphism
from .hilbert import FibreSpace, adjoint, inner, is_hermitian, is_unitary
from .morphisms import (
    assoc_transport,
    breve_l,
    chi,
    chi_inverse,
    d_circ_mu,
    transported_morphism,
)
from .qft import (
    FieldComponents,
    QuadratureRule,
    TestFunction,
    apply_section_morphism,
    lift_field,
    lift_operator,
    lift_state,
    smear_bundle,
    smear_conventional,
)

__version__ = "0.1.0"
