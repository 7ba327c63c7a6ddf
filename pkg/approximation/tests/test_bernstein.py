import numpy as np
from django.test import SimpleTestCase

from approximation.bernstein import (
    DegreeVector,
    Observable,
    bernstein_basis,
    bernstein_gradient,
    bernstein_matrix,
    bernstein_vector,
    conversion_matrix,
    eval_bernstein_operator,
    lattice_grid,
    monomial_matrix,
    monomial_to_bernstein_coefficients,
    monomial_vector,
    partial_bernstein_operator,
    solve_conversion,
    univariate_conversion_matrix,
)
from approximation.exceptions import CapabilityError, DomainError, ShapeError


class DegreeVectorTests(SimpleTestCase):
    def test_parse_repeats_single_value(self):
        self.assertEqual(DegreeVector.parse('10', 2).degrees, (10, 10))
        self.assertEqual(DegreeVector.parse('3,4').degrees, (3, 4))

    def test_parse_rejects_wrong_length(self):
        with self.assertRaises(ShapeError):
            DegreeVector.parse('3,4', 3)

    def test_rejects_zero_degree(self):
        with self.assertRaises(DomainError):
            DegreeVector((0,))

    def test_size_and_shape(self):
        degree = DegreeVector((2, 3))
        self.assertEqual(degree.size, 12)
        self.assertEqual(degree.shape, (3, 4))
        self.assertEqual(str(degree), '2,3')


class LatticeGridTests(SimpleTestCase):
    def test_last_axis_runs_fastest(self):
        grid = lattice_grid(DegreeVector((1, 2)))
        np.testing.assert_allclose(grid.points[:4], [[0, 0], [0, 0.5], [0, 1], [1, 0]])
        self.assertEqual(int(grid.flat_index((1, 2))), 5)
        np.testing.assert_array_equal(grid.multi_index(5), [1, 2])


class BasisTests(SimpleTestCase):
    def test_known_values(self):
        self.assertAlmostEqual(bernstein_basis(2, 1, 0.5), 0.5)
        self.assertEqual(bernstein_basis(0, 0, 0.3), 1.0)
        self.assertAlmostEqual(bernstein_basis(3, 3, 0.2), 0.008)

    def test_out_of_range_arguments(self):
        with self.assertRaises(DomainError):
            bernstein_basis(2, 3, 0.5)
        with self.assertRaises(DomainError):
            bernstein_basis(2, 1, 1.5)

    def test_partition_of_unity_and_positivity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            degree = DegreeVector(tuple(rng.integers(1, 8, size=rng.integers(1, 4))))
            points = rng.uniform(size=(10, degree.m))
            basis = bernstein_matrix(degree, points)
            np.testing.assert_allclose(basis.sum(axis=1), 1.0, atol=1e-12)
            self.assertTrue(np.all(basis >= 0))


class OperatorTests(SimpleTestCase):
    def test_linear_functions_are_reproduced(self):
        degree = DegreeVector((4, 3))
        grid = lattice_grid(degree)
        samples = 2 * grid.points[:, 0] - grid.points[:, 1] + 0.5
        points = np.random.default_rng(1).uniform(size=(25, 2))
        values = eval_bernstein_operator(samples, grid, points)
        np.testing.assert_allclose(values, 2 * points[:, 0] - points[:, 1] + 0.5, atol=1e-12)

    def test_second_moment(self):
        grid = lattice_grid(DegreeVector((5,)))
        value = eval_bernstein_operator(grid.points[:, 0] ** 2, grid, 0.3)
        self.assertAlmostEqual(value, 0.09 + 0.3 * 0.7 / 5, places=12)

    def test_points_outside_the_box(self):
        grid = lattice_grid(DegreeVector((3,)))
        with self.assertRaises(DomainError):
            eval_bernstein_operator(np.zeros(4), grid, 1.2)

    def test_sample_count_mismatch(self):
        grid = lattice_grid(DegreeVector((3,)))
        with self.assertRaises(ShapeError):
            eval_bernstein_operator(np.zeros(5), grid, 0.2)

    def test_partial_operator_composes_to_full_operator(self):
        degree = DegreeVector((3, 4))
        grid = lattice_grid(degree)
        samples = np.random.default_rng(2).normal(size=degree.size)
        reduced, remaining = partial_bernstein_operator(samples, grid, 0, 0.3)
        self.assertEqual(remaining.degree.degrees, (4,))
        self.assertAlmostEqual(
            eval_bernstein_operator(reduced, remaining, 0.6),
            eval_bernstein_operator(samples, grid, [0.3, 0.6]),
            places=12,
        )


class ConversionTests(SimpleTestCase):
    def test_univariate_matrix(self):
        np.testing.assert_array_equal(
            univariate_conversion_matrix(2), [[1, -2, 1], [0, 2, -2], [0, 0, 1]]
        )

    def test_conversion_maps_monomials_to_bernstein(self):
        rng = np.random.default_rng(3)
        for degree in (DegreeVector((3, 2)), DegreeVector((4,)), DegreeVector((2, 1, 3))):
            for x in rng.uniform(size=(5, degree.m)):
                np.testing.assert_allclose(
                    conversion_matrix(degree) @ monomial_vector(degree, x),
                    bernstein_vector(degree, x),
                    atol=1e-12,
                )

    def test_monomial_matrix_rows(self):
        degree = DegreeVector((1, 2))
        np.testing.assert_allclose(monomial_matrix(degree, [[2.0, 3.0]])[0], [1, 3, 9, 2, 6, 18])

    def test_solve_conversion_inverts_c(self):
        degree = DegreeVector((3, 3))
        rhs = np.random.default_rng(4).normal(size=(degree.size, 2))
        np.testing.assert_allclose(conversion_matrix(degree) @ solve_conversion(degree, rhs), rhs,
                                   atol=1e-10)
        np.testing.assert_allclose(
            conversion_matrix(degree).T @ solve_conversion(degree, rhs, transpose=True), rhs, atol=1e-10
        )

    def test_monomial_coefficients_to_bernstein(self):
        degree = DegreeVector((2, 3))
        monomial = np.random.default_rng(5).normal(size=degree.size)
        bernstein = monomial_to_bernstein_coefficients(degree, monomial)
        for x in np.random.default_rng(6).uniform(size=(5, 2)):
            self.assertAlmostEqual(bernstein @ bernstein_vector(degree, x),
                                   monomial @ monomial_vector(degree, x), places=10)


class GradientTests(SimpleTestCase):
    def test_gradient_matches_central_differences(self):
        degree = DegreeVector((4, 3))
        grid = lattice_grid(degree)
        coefficients = np.random.default_rng(7).normal(size=degree.size)
        x = np.array([0.4, 0.7])
        step = 1e-6
        numeric = [
            (eval_bernstein_operator(coefficients, grid, x + e) - eval_bernstein_operator(coefficients, grid, x - e))
            / (2 * step)
            for e in (np.array([step, 0.0]), np.array([0.0, step]))
        ]
        np.testing.assert_allclose(bernstein_gradient(coefficients, grid, x), numeric, atol=1e-6)


class ObservableTests(SimpleTestCase):
    def test_constant_and_coordinate(self):
        points = np.array([[0.1, 0.2], [0.3, 0.9]])
        np.testing.assert_array_equal(Observable.constant(2.0, 2)(points), [2.0, 2.0])
        np.testing.assert_array_equal(Observable.coordinate(1, 2)(points), [0.2, 0.9])
        np.testing.assert_array_equal(Observable.coordinate(1, 2).grad(points[0]), [0.0, 1.0])

    def test_missing_gradient(self):
        observable = Observable(func=lambda points: points[:, 0], dimension=1, label='x')
        with self.assertRaises(CapabilityError):
            observable.grad(0.5)

    def test_validate_rejects_wrong_gradient(self):
        observable = Observable(
            func=lambda points: points[:, 0] ** 2,
            dimension=1,
            gradient=lambda points: np.ones_like(points),
            label='x^2',
        )
        with self.assertRaises(DomainError):
            observable.validate()
