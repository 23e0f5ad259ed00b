import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hilbundle.base_grid import (
    MACHINE_EPS,
    CoordinateChange,
    CoordinateChart,
    DifferenceScheme,
    convergence_order,
    displace,
    partial_derivative,
    richardson_extrapolate,
)
from hilbundle.errors import (
    EpsilonTooSmall,
    EvaluationFailure,
    SingularCoordinateChange,
    ValidationError,
)


class TestCoordinateChart:
    def test_coords_from_index(self):
        chart = CoordinateChart((0.5, -1.0), (0.1, 0.25), (5, 4))
        np.testing.assert_allclose(chart.coords((2, 3)), [0.7, -0.25])
        assert chart.point((2, 3)).index == (2, 3)
        assert chart.dim == 2

    def test_bounds(self):
        chart = CoordinateChart((0.0,), (0.1,), (11,))
        lo, hi = chart.bounds()
        assert lo[0] == 0.0 and hi[0] == pytest.approx(1.0)
        assert chart.max_abs_coord() == pytest.approx(1.0)

    @pytest.mark.parametrize("extents", [(2,), (0,), (3, 2)])
    def test_extent_below_three_rejected(self, extents):
        with pytest.raises(ValidationError):
            CoordinateChart((0.0,) * len(extents), (0.1,) * len(extents), extents)

    @pytest.mark.parametrize("spacing", [0.0, -0.1, float("nan")])
    def test_spacing_must_be_positive(self, spacing):
        with pytest.raises(ValidationError):
            CoordinateChart((0.0,), (spacing,), (5,))

    def test_empty_and_mismatched(self):
        with pytest.raises(ValidationError):
            CoordinateChart((), (), ())
        with pytest.raises(ValidationError):
            CoordinateChart((0.0, 0.0), (0.1,), (5, 5))

    def test_index_outside_grid(self):
        chart = CoordinateChart((0.0,), (0.1,), (5,))
        with pytest.raises(IndexError):
            chart.coords((5,))
        with pytest.raises(IndexError):
            chart.coords((-1,))

    def test_interior_samples(self, rng):
        chart = CoordinateChart((0.0, 0.0), (1.0, 1.0), (3, 6))
        for p in chart.sample_interior(rng, 50):
            assert p.index[0] == 1
            assert 1 <= p.index[1] <= 4


class TestDisplace:
    def test_examples(self):
        np.testing.assert_array_equal(displace([0.0], 0, 0.1), [0.1])
        np.testing.assert_array_equal(displace([1.0, 2.0], 1, -0.5), [1.0, 1.5])
        np.testing.assert_array_equal(displace([1.0, 2.0], 0, 0.0), [1.0, 2.0])

    def test_does_not_mutate_input(self):
        x = np.array([1.0, 2.0])
        displace(x, 0, 1.0)
        np.testing.assert_array_equal(x, [1.0, 2.0])

    def test_bad_axis(self):
        with pytest.raises(IndexError):
            displace([0.0], 1, 0.1)


class TestPartialDerivative:
    def test_constant_gives_zero(self):
        M = np.array([[1, 2j], [3, 4]])
        np.testing.assert_array_equal(partial_derivative(lambda x: M, [0.3], 0), np.zeros((2, 2)))

    def test_phase_matrix_at_origin(self):
        d = partial_derivative(lambda x: np.diag([1.0, np.exp(1j * x[0])]), [0.0], 0)
        np.testing.assert_allclose(d, np.diag([0.0, 1j]), atol=1e-9)

    def test_square(self):
        d = partial_derivative(lambda x: x[0] ** 2 * np.eye(2), [1.0], 0)
        np.testing.assert_allclose(d, 2 * np.eye(2), atol=1e-9)

    def test_picks_axis(self):
        f = lambda x: np.array([x[0] * x[1] ** 2])
        np.testing.assert_allclose(partial_derivative(f, [2.0, 3.0], 1), [12.0], atol=1e-8)
        np.testing.assert_allclose(partial_derivative(f, [2.0, 3.0], 0), [9.0], atol=1e-8)

    def test_forward_scheme_is_first_order(self):
        f = lambda x: np.exp(x)
        steps = 0.02 * 2.0 ** -np.arange(5)
        errors = [abs(partial_derivative(f, [0.3], 0, DifferenceScheme(epsilon=h, order=1))[0] - np.exp(0.3))
                  for h in steps]
        slope, _ = convergence_order(steps, errors)
        assert 0.9 < slope < 1.1

    def test_forward_default_step_accuracy(self):
        d = partial_derivative(np.sin, [0.4], 0, DifferenceScheme(order=1))
        assert abs(d[0] - np.cos(0.4)) < 1e-7

    def test_negative_epsilon_allowed(self):
        d = partial_derivative(lambda x: x ** 3, [1.0], 0, DifferenceScheme(epsilon=-1e-3, order=1))
        assert d[0] == pytest.approx(3.0, abs=1e-2)

    def test_epsilon_below_floor(self):
        with pytest.raises(EpsilonTooSmall):
            partial_derivative(np.sin, [0.0], 0, DifferenceScheme(epsilon=1e-9))
        with pytest.raises(EpsilonTooSmall):
            DifferenceScheme(epsilon=0.0)

    def test_floor_is_relative(self):
        with pytest.raises(EpsilonTooSmall):
            partial_derivative(np.sin, [1e3], 0, DifferenceScheme(epsilon=1e-5))

    def test_evaluation_failure(self):
        def f(x):
            if x[0] > 0.1:
                raise ValueError("undefined")
            return x
        with pytest.raises(EvaluationFailure):
            partial_derivative(f, [0.1], 0, DifferenceScheme(epsilon=1e-3))
        with pytest.raises(EvaluationFailure), np.errstate(invalid="ignore"):
            partial_derivative(lambda x: np.log(x - 0.1), [0.1], 0, DifferenceScheme(epsilon=1e-3))

    def test_richardson_reduces_truncation(self):
        f = lambda x: np.exp(2 * x)
        exact = 2 * np.exp(0.6)
        errs = [abs(partial_derivative(f, [0.3], 0, DifferenceScheme(epsilon=0.05, richardson_levels=k))[0] - exact)
                for k in range(3)]
        assert errs[0] > errs[1] > errs[2]
        assert DifferenceScheme(richardson_levels=2).effective_order == 6

    def test_richardson_extrapolate_exact_for_quadratic_error(self):
        # values with pure h^2 error: v(h) = 1 + c h^2
        vals = [1 + 3.0 * (0.1 / 2**k) ** 2 for k in range(2)]
        assert richardson_extrapolate(vals, p=2) == pytest.approx(1.0, abs=1e-14)


@given(
    k=st.floats(0.5, 3.0),
    x0=st.floats(-1.0, 1.0),
    phase=st.floats(0.0, 6.0),
)
def test_central_difference_order_two(k, x0, phase):
    f = lambda x: np.array([np.exp(1j * (k * x[0] + phase)), np.cos(k * x[0]) + x[0] ** 3])
    exact = np.array([1j * k * np.exp(1j * (k * x0 + phase)), -k * np.sin(k * x0) + 3 * x0**2])
    steps = 0.02 * 2.0 ** -np.arange(5)  # a factor 16
    errors = [np.linalg.norm(partial_derivative(f, [x0], 0, DifferenceScheme(epsilon=h)) - exact) for h in steps]
    slope, pairwise = convergence_order(steps, errors)
    assert 1.8 <= slope <= 2.2
    assert np.all((pairwise >= 1.8) & (pairwise <= 2.2))


@given(a=st.complex_numbers(max_magnitude=5), b=st.complex_numbers(max_magnitude=5), x0=st.floats(-1, 1))
def test_partial_derivative_linear(a, b, x0):
    f = lambda x: np.array([np.sin(x[0]), x[0] ** 2])
    g = lambda x: np.array([np.exp(x[0]), 1j * x[0]])
    lhs = partial_derivative(lambda x: a * f(x) + b * g(x), [x0], 0)
    rhs = a * partial_derivative(f, [x0], 0) + b * partial_derivative(g, [x0], 0)
    # differencing amplifies rounding of the summed values by about 1/h
    h = DifferenceScheme().step(x0)
    bound = 100 * MACHINE_EPS / h * (abs(a) + abs(b) + 1)
    assert np.linalg.norm(lhs - rhs) <= bound * max(1.0, np.linalg.norm(rhs))


def test_convergence_order_input_checks():
    with pytest.raises(ValueError):
        convergence_order([0.1], [1e-3])
    with pytest.raises(ValueError):
        convergence_order([0.1, 0.05], [1e-3, 0.0])


class TestCoordinateChange:
    def test_scale_jacobian(self):
        c = CoordinateChange.scale([2.0])
        np.testing.assert_allclose(c.forward(np.array([0.3])), [0.6])
        np.testing.assert_allclose(c.jacobian_inverse_at([0.3]), [[0.5]])
        np.testing.assert_allclose(c.jacobian_at([0.3]), [[2.0]])

    def test_exponential_analytic_matches_fd(self):
        c = CoordinateChange.exponential([0.4, -0.3])
        fd = CoordinateChange(c.forward, c.inverse)
        x = np.array([0.2, -0.7])
        np.testing.assert_allclose(c.inverse(c.forward(x)), x, atol=1e-14)
        np.testing.assert_allclose(fd.jacobian_inverse_at(x), c.jacobian_inverse_at(x), atol=1e-9)

    def test_zero_rate_is_identity(self):
        c = CoordinateChange.exponential([0.0])
        np.testing.assert_array_equal(c.forward(np.array([0.3])), [0.3])

    def test_singular(self):
        with pytest.raises(SingularCoordinateChange):
            CoordinateChange.linear([[1.0, 2.0], [2.0, 4.0]])
        squash = CoordinateChange(lambda x: x, lambda xp: xp * 0.0 + xp[0], lambda x: np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SingularCoordinateChange):
            squash.jacobian_inverse_at([0.0, 0.0])
