import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hilbundle.bundle import (
    Trivializer,
    fibre_gram,
    fibre_inner,
    herm_conj_fibre_map,
    herm_conj_morphism,
    herm_conj_point_map,
    is_fibre_unitary,
    is_hermitian_morphism,
    is_unitary_morphism,
    transport,
    transported_section,
)
from hilbundle.catalog import make_trivializer
from hilbundle.errors import BasePointMismatch, DimensionMismatch, SingularTrivializer
from hilbundle.fields import BundleMorphism, FibreMap, FibreVector
from hilbundle.hilbert import FibreSpace, adjoint, inner

from conftest import WEIGHTED_GRAM, cmat, cvec, phase_trivializer, random_point

seeds = st.integers(0, 2**32 - 1)


def rel(a, b):
    return np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(a), np.linalg.norm(b))


def fnorm(T, x, u):
    return np.sqrt(fibre_inner(T, FibreVector(x, u), FibreVector(x, u)).real)


def twisted():
    return make_trivializer(FibreSpace(3, WEIGHTED_GRAM), 2, "exp_generator", {"random": {"seed": 5, "scale": 0.5}})


def identity_triv(n=2):
    return make_trivializer(FibreSpace(n), 1, "identity")


class TestTrivializer:
    def test_singular_rejected(self):
        T = Trivializer(FibreSpace(2), lambda x: np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SingularTrivializer):
            T.matrix([0.0])

    def test_condition_bound(self):
        T = Trivializer(FibreSpace(2), lambda x: np.diag([1.0, 1e-6]), max_condition=1e5)
        with pytest.raises(SingularTrivializer):
            T.matrix([0.0])

    def test_non_finite_rejected(self):
        T = Trivializer(FibreSpace(2), lambda x: np.diag([1.0, np.inf]))
        with pytest.raises(SingularTrivializer):
            T.matrix([0.0])

    def test_shape_checked(self):
        T = Trivializer(FibreSpace(2), lambda x: np.eye(3))
        with pytest.raises(DimensionMismatch):
            T.matrix([0.0])

    def test_fd_derivative_fallback(self, phase_triv):
        plain = Trivializer(phase_triv.space, phase_triv.L)
        np.testing.assert_allclose(plain.derivative([0.4], 0), phase_triv.derivative([0.4], 0), atol=1e-9)


class TestFibreInner:
    def test_identity_trivializer_reduces_to_inner(self, rng):
        T = identity_triv()
        u, v = cvec(rng, 2), cvec(rng, 2)
        assert fibre_inner(T, FibreVector([0.3], u), FibreVector([0.3], v)) == pytest.approx(inner(T.space, u, v))

    def test_unitary_trivializer_preserves_components(self, phase_triv, rng):
        u, v = cvec(rng, 2), cvec(rng, 2)
        got = fibre_inner(phase_triv, FibreVector([1.3], u), FibreVector([1.3], v))
        assert got == pytest.approx(np.vdot(u, v), abs=1e-14)

    def test_roundtrip(self, rng):
        T = twisted()
        for _ in range(25):
            x = random_point(rng, 2)
            phi, psi = cvec(rng, 3), cvec(rng, 3)
            lhs = inner(T.space, phi, psi)
            rhs = fibre_inner(T, FibreVector(x, T.solve(x, phi)), FibreVector(x, T.solve(x, psi)))
            scale = np.sqrt(inner(T.space, phi, phi).real * inner(T.space, psi, psi).real)
            assert abs(lhs - rhs) <= 1e-12 * scale

    def test_base_point_mismatch(self, phase_triv):
        with pytest.raises(BasePointMismatch):
            fibre_inner(phase_triv, FibreVector([0.0], [1, 0]), FibreVector([0.1], [1, 0]))

    def test_wrong_length(self, phase_triv):
        with pytest.raises(DimensionMismatch):
            fibre_inner(phase_triv, FibreVector([0.0], [1, 0, 0]), FibreVector([0.0], [1, 0, 0]))

    def test_gram_matches(self, rng):
        T = twisted()
        x = random_point(rng, 2)
        u, v = cvec(rng, 3), cvec(rng, 3)
        assert fibre_inner(T, FibreVector(x, u), FibreVector(x, v)) == pytest.approx(u.conj() @ fibre_gram(T, x) @ v)


class TestTransport:
    def test_same_point_is_identity(self, rng):
        T = twisted()
        x = random_point(rng, 2)
        np.testing.assert_allclose(transport(T, x, x).matrix, np.eye(3), atol=1e-14)

    def test_constant_trivializer(self):
        M = np.array([[2, 1j], [0, 1]])
        T = Trivializer(FibreSpace(2), lambda x: M)
        np.testing.assert_allclose(transport(T, [0.1], [0.9]).matrix, np.eye(2), atol=1e-15)

    def test_phase_half_turn(self, phase_triv):
        np.testing.assert_allclose(transport(phase_triv, [0.0], [np.pi]).matrix, np.diag([1, -1]), atol=1e-15)

    def test_endpoints_recorded(self, phase_triv):
        l = transport(phase_triv, [0.0], [0.5])
        assert l.source == (0.0,) and l.target == (0.5,)
        assert l(FibreVector([0.0], [1, 1])).at == (0.5,)
        with pytest.raises(BasePointMismatch):
            l(FibreVector([0.5], [1, 1]))

    def test_singular_endpoint(self):
        T = Trivializer(FibreSpace(1), lambda x: np.array([[x[0]]]))
        with pytest.raises(SingularTrivializer):
            transport(T, [1.0], [0.0])


@given(seed=seeds)
def test_transport_axioms(seed):
    rng = np.random.default_rng(seed)
    T = twisted()
    x, y, z = (random_point(rng, 2) for _ in range(3))
    assert rel((transport(T, x, y) @ transport(T, z, x)).matrix, transport(T, z, y).matrix) <= 1e-12
    assert rel(transport(T, x, y).inverse().matrix, transport(T, y, x).matrix) <= 1e-12
    a, b, u, v = complex(rng.normal(), rng.normal()), 0.5 - 2j, cvec(rng, 3), cvec(rng, 3)
    l = transport(T, x, y)
    assert rel(l.matrix @ (a * u + b * v), a * (l.matrix @ u) + b * (l.matrix @ v)) <= 1e-12


@given(seed=seeds)
def test_transport_isometry_and_self_conjugacy(seed):
    rng = np.random.default_rng(seed)
    T = twisted()
    x, y = random_point(rng, 2), random_point(rng, 2)
    l = transport(T, x, y)
    u, v = cvec(rng, 3), cvec(rng, 3)
    lhs = fibre_inner(T, l(FibreVector(x, u)), l(FibreVector(x, v)))
    rhs = fibre_inner(T, FibreVector(x, u), FibreVector(x, v))
    scale = np.sqrt(fibre_inner(T, FibreVector(x, u), FibreVector(x, u)).real *
                    fibre_inner(T, FibreVector(x, v), FibreVector(x, v)).real)
    assert abs(lhs - rhs) <= 1e-12 * scale
    conj_back = herm_conj_fibre_map(T, transport(T, y, x))
    assert conj_back.source == l.source and conj_back.target == l.target
    assert rel(conj_back.matrix, l.matrix) <= 1e-12
    assert rel(l.matrix, np.linalg.inv(transport(T, y, x).matrix)) <= 1e-12


class TestPointConjugate:
    def test_trivializer_conjugate_is_inverse(self, rng):
        T = twisted()
        x = random_point(rng, 2)
        assert rel(herm_conj_point_map(T, x, T.matrix(x)), np.linalg.inv(T.matrix(x))) <= 1e-12

    def test_identity_trivializer_gives_conjugate_transpose(self, rng):
        A = cmat(rng, 2)
        np.testing.assert_allclose(herm_conj_point_map(identity_triv(), [0.0], A), A.conj().T)

    def test_pairing(self, rng):
        T = twisted()
        for _ in range(25):
            x, A = random_point(rng, 2), cmat(rng, 3)
            Ad = herm_conj_point_map(T, x, A)
            phi, chi = cvec(rng, 3), cvec(rng, 3)
            lhs = fibre_inner(T, FibreVector(x, Ad @ phi), FibreVector(x, chi))
            rhs = inner(T.space, phi, A @ chi)
            bound = fnorm(T, x, Ad @ phi) * fnorm(T, x, chi) + np.sqrt(inner(T.space, phi, phi).real) * \
                np.sqrt(inner(T.space, A @ chi, A @ chi).real)
            assert abs(lhs - rhs) <= 1e-12 * bound


class TestFibreMapConjugate:
    def test_formula(self, rng):
        T = twisted()
        x, y = random_point(rng, 2), random_point(rng, 2)
        A = FibreMap(y, x, cmat(rng, 3))
        Ad = herm_conj_fibre_map(T, A)
        assert (Ad.source, Ad.target) == (A.target, A.source)
        Lx, Ly = T.matrix(x), T.matrix(y)
        expected = np.linalg.inv(Ly) @ adjoint(T.space, Lx @ A.matrix @ np.linalg.inv(Ly)) @ Lx
        assert rel(Ad.matrix, expected) <= 1e-12

    def test_involution_and_anti_homomorphism(self, rng):
        T = twisted()
        a, b, c = (random_point(rng, 2) for _ in range(3))
        P, Q = FibreMap(a, b, cmat(rng, 3)), FibreMap(b, c, cmat(rng, 3))
        assert rel(herm_conj_fibre_map(T, herm_conj_fibre_map(T, P)).matrix, P.matrix) <= 1e-12
        lhs = herm_conj_fibre_map(T, Q @ P)
        rhs = herm_conj_fibre_map(T, P) @ herm_conj_fibre_map(T, Q)
        assert rel(lhs.matrix, rhs.matrix) <= 1e-12

    def test_composition_needs_matching_points(self):
        with pytest.raises(BasePointMismatch):
            FibreMap([0.0], [1.0], np.eye(2)) @ FibreMap([0.0], [0.5], np.eye(2))


class TestFibreUnitary:
    def test_transport_is_unitary(self, rng):
        T = twisted()
        x, y = random_point(rng, 2), random_point(rng, 2)
        assert is_fibre_unitary(T, transport(T, x, y))
        assert not is_fibre_unitary(T, FibreMap(x, y, 2 * transport(T, x, y).matrix))

    def test_rotated_transport_is_unitary(self, rng):
        T = twisted()
        x, y = random_point(rng, 2), random_point(rng, 2)
        # a rotation unitary for the fibre metric over y
        Q, _ = np.linalg.qr(cmat(rng, 3))
        Ly = T.matrix(y)
        U = np.linalg.cholesky(T.space.gram).conj().T
        R = np.linalg.solve(Ly, np.linalg.solve(U, Q @ U) @ Ly)
        A = FibreMap(x, y, R @ transport(T, x, y).matrix)
        assert is_fibre_unitary(T, A, 1e-12)
        u, v = cvec(rng, 3), cvec(rng, 3)
        lhs = fibre_inner(T, A(FibreVector(x, u)), A(FibreVector(x, v)))
        assert lhs == pytest.approx(fibre_inner(T, FibreVector(x, u), FibreVector(x, v)), rel=1e-12)


class TestMorphismConjugate:
    def test_identity(self, rng):
        T = twisted()
        x = random_point(rng, 2)
        I = BundleMorphism.identity(3)
        np.testing.assert_allclose(herm_conj_morphism(T, I)(x), np.eye(3), atol=1e-14)
        assert is_hermitian_morphism(T, I, x) and is_unitary_morphism(T, I, x)

    def test_unitary_morphism_is_isometric(self, rng):
        T = twisted()
        Q, _ = np.linalg.qr(cmat(rng, 3))
        U = np.linalg.cholesky(T.space.gram).conj().T
        V = np.linalg.solve(U, Q @ U)
        A = BundleMorphism(lambda x: T.solve(x, V @ T.matrix(x)))
        for _ in range(10):
            x = random_point(rng, 2)
            assert is_unitary_morphism(T, A, x, 1e-12)
            u, v = cvec(rng, 3), cvec(rng, 3)
            lhs = fibre_inner(T, FibreVector(x, A(x) @ u), FibreVector(x, A(x) @ v))
            rhs = fibre_inner(T, FibreVector(x, u), FibreVector(x, v))
            assert abs(lhs - rhs) <= 1e-12 * fnorm(T, x, u) * fnorm(T, x, v)

    def test_hermitian_morphism_pairing_symmetric(self, rng):
        T = twisted()
        K = cmat(rng, 3)
        H = (K + adjoint(T.space, K)) / 2
        A = BundleMorphism(lambda x: T.solve(x, H @ T.matrix(x)))
        x = random_point(rng, 2)
        assert is_hermitian_morphism(T, A, x, 1e-12)
        u, v = cvec(rng, 3), cvec(rng, 3)
        a = fibre_inner(T, FibreVector(x, u), FibreVector(x, A(x) @ v))
        b = fibre_inner(T, FibreVector(x, A(x) @ u), FibreVector(x, v))
        assert abs(a - b) <= 1e-12 * (abs(a) + abs(b))


class TestTransportedSection:
    def test_identity_gives_constant(self):
        Y = transported_section(identity_triv(), [0.2], FibreVector([0.2], [1, 2j]))
        np.testing.assert_array_equal(Y([0.9]), [1, 2j])

    def test_exact_at_seed(self, rng):
        T = twisted()
        x0, u0 = random_point(rng, 2), cvec(rng, 3)
        Y = transported_section(T, x0, FibreVector(x0, u0))
        np.testing.assert_array_equal(Y(x0), u0)

    def test_phase_example(self, phase_triv):
        Y = transported_section(phase_triv, [0.0], FibreVector([0.0], [1, 1]))
        for y in (0.3, -1.1, 2.0):
            np.testing.assert_allclose(Y([y]), [1, np.exp(-1j * y)], atol=1e-15)

    def test_seed_must_live_at_x0(self, phase_triv):
        with pytest.raises(BasePointMismatch):
            transported_section(phase_triv, [0.0], FibreVector([0.1], [1, 1]))

    def test_exact_derivative(self, rng):
        T = twisted()
        x0 = random_point(rng, 2)
        Y = transported_section(T, x0, FibreVector(x0, cvec(rng, 3)))
        from hilbundle.base_grid import partial_derivative
        x = random_point(rng, 2)
        np.testing.assert_allclose(Y.dY(x, 1), partial_derivative(Y, x, 1), atol=1e-9)
