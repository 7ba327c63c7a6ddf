import numpy as np
from django.test import SimpleTestCase

from approximation.bernstein import DegreeVector, lattice_grid
from approximation.bounds import AnalyticModulus, bound_multivariate_full, estimate_image_modulus
from approximation.data_driven import (
    DataSet,
    affine_box_map,
    build_assignment,
    build_data_koopman,
    build_lattice_map,
    data_driven_bounds,
    data_driven_error,
    eval_S,
    eval_S_inverse,
    jittered_lattice_dataset,
    lattice_dataset,
    lattice_edges,
    lattice_map_from_vertices,
    lipschitz_of_S,
    uniform_dataset,
    verify_assignment,
)
from approximation.domain import Box
from approximation.exceptions import (
    AssignmentError,
    DegenerateSimplexError,
    DomainError,
    OutOfHullError,
    ShapeError,
)
from approximation.expressions import parse_observable
from approximation.koopman import MapOnBox, build_koopman_matrices, predict_trajectory


def squaring_map(dimension=2):
    return MapOnBox(func=lambda points: points ** 2, dimension=dimension, label='square')


class DataSetTests(SimpleTestCase):
    def test_duplicate_inputs(self):
        with self.assertRaises(DomainError):
            DataSet([[0.1, 0.2], [0.1, 0.2]], [[0.0, 0.0], [1.0, 1.0]])

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            DataSet([[0.1, 0.2]], [[0.0, 0.0, 0.0]])

    def test_degree_must_match_point_count(self):
        data = uniform_dataset(squaring_map(), 10)
        with self.assertRaises(ShapeError):
            data.check_degree(DegreeVector((2, 2)))

    def test_uniform_dataset_contains_corners(self):
        data = uniform_dataset(squaring_map(), 10, seed=1)
        np.testing.assert_array_equal(data.inputs[:4], [[0, 0], [0, 1], [1, 0], [1, 1]])
        np.testing.assert_allclose(data.outputs, data.inputs ** 2)

    def test_jitter_range(self):
        with self.assertRaises(DomainError):
            lattice_dataset(squaring_map(), DegreeVector((3, 3)), jitter=0.5)

    def test_jitter_keeps_boundary_on_the_faces(self):
        data = jittered_lattice_dataset(squaring_map(), DegreeVector((4, 4)), jitter=0.2, seed=2)
        on_face = np.any((data.inputs == 0.0) | (data.inputs == 1.0), axis=1)
        self.assertEqual(int(on_face.sum()), 16)


class AssignmentTests(SimpleTestCase):
    def test_lattice_edges(self):
        edges = lattice_edges(DegreeVector((1, 1)))
        self.assertEqual(sorted(map(tuple, edges.tolist())), [(0, 1), (0, 2), (1, 3), (2, 3)])

    def test_regular_lattice_gets_the_identity(self):
        degree = DegreeVector((3, 4))
        data = lattice_dataset(squaring_map(), degree, shuffle=False)
        np.testing.assert_array_equal(build_assignment(data, degree), np.arange(degree.size))

    def test_shuffled_jittered_data_is_recovered(self):
        degree = DegreeVector((5, 5))
        data = jittered_lattice_dataset(squaring_map(), degree, jitter=0.1, seed=4)
        assignment = build_assignment(data, degree)
        grid = lattice_grid(degree)
        self.assertLess(np.max(np.abs(data.inputs[assignment] - grid.points)), 0.1 / 5 + 1e-12)

    def test_univariate_assignment_sorts(self):
        degree = DegreeVector((4,))
        inputs = np.array([[0.5], [0.0], [1.0], [0.3], [0.8]])
        data = DataSet(inputs, inputs ** 2)
        np.testing.assert_array_equal(build_assignment(data, degree), [1, 3, 0, 4, 2])

    def test_non_monotone_univariate_assignment(self):
        degree = DegreeVector((2,))
        inputs = np.array([[0.0], [0.5], [1.0]])
        with self.assertRaises(AssignmentError):
            verify_assignment(DataSet(inputs, inputs), degree, [0, 2, 1])

    def test_crossing_edges_are_rejected(self):
        degree = DegreeVector((2, 2))
        data = lattice_dataset(squaring_map(), degree, shuffle=False)
        swapped = np.arange(9)
        swapped[[0, 4]] = [4, 0]
        with self.assertRaises(AssignmentError):
            verify_assignment(data, degree, swapped)

    def test_not_a_permutation(self):
        degree = DegreeVector((2,))
        inputs = np.array([[0.0], [0.5], [1.0]])
        with self.assertRaises(DomainError):
            verify_assignment(DataSet(inputs, inputs), degree, [0, 0, 1])

    def test_no_heuristic_in_three_dimensions(self):
        degree = DegreeVector((1, 1, 1))
        data = lattice_dataset(squaring_map(3), degree)
        with self.assertRaises(AssignmentError):
            build_assignment(data, degree)


class LatticeMapTests(SimpleTestCase):
    def test_round_trip_on_random_points(self):
        degree = DegreeVector((5, 5))
        data = jittered_lattice_dataset(squaring_map(), degree, jitter=0.1, seed=5)
        lattice_map = build_lattice_map(data, degree, build_assignment(data, degree))
        points = np.random.default_rng(6).uniform(size=(100, 2))
        np.testing.assert_allclose(eval_S_inverse(lattice_map, eval_S(lattice_map, points)), points,
                                   atol=1e-9)

    def test_lattice_vertices_land_on_the_data(self):
        degree = DegreeVector((3, 3))
        data = jittered_lattice_dataset(squaring_map(), degree, seed=7)
        assignment = build_assignment(data, degree)
        lattice_map = build_lattice_map(data, degree, assignment)
        np.testing.assert_allclose(eval_S(lattice_map, lattice_grid(degree).points),
                                   data.inputs[assignment], atol=1e-12)

    def test_univariate_round_trip(self):
        degree = DegreeVector((4,))
        inputs = np.array([[0.5], [0.0], [1.0], [0.3], [0.8]])
        data = DataSet(inputs, inputs ** 2)
        lattice_map = build_lattice_map(data, degree, build_assignment(data, degree))
        self.assertAlmostEqual(float(eval_S(lattice_map, 0.375)[0]), 0.4)
        self.assertAlmostEqual(float(eval_S_inverse(lattice_map, 0.4)[0]), 0.375)

    def test_affine_box_map(self):
        lattice_map = affine_box_map(Box((-3.0, -3.0), (3.0, 3.0)))
        np.testing.assert_allclose(eval_S(lattice_map, [0.5, 0.5]), [0.0, 0.0], atol=1e-12)
        lipschitz = lipschitz_of_S(lattice_map)
        self.assertAlmostEqual(lipschitz.full, 6.0)
        self.assertEqual(lipschitz.partial, (6.0, 6.0))

    def test_out_of_hull(self):
        lattice_map = affine_box_map(Box.unit(2))
        with self.assertRaises(OutOfHullError) as ctx:
            eval_S_inverse(lattice_map, [[0.5, 0.5], [2.0, 2.0]])
        self.assertEqual(ctx.exception.index, 1)
        np.testing.assert_allclose(eval_S_inverse(lattice_map, [2.0, 2.0], extrapolate=True), [2.0, 2.0])

    def test_marginal_point_is_clipped_onto_the_hull(self):
        lattice_map = affine_box_map(Box.unit(2))
        pulled_back = eval_S_inverse(lattice_map, [1.0 + 1e-8, 0.5])
        np.testing.assert_allclose(pulled_back, [1.0, 0.5], atol=1e-12)
        with self.assertRaises(OutOfHullError):
            eval_S_inverse(lattice_map, [1.0 + 1e-4, 0.5])

    def test_degenerate_simplex(self):
        degree = DegreeVector((1, 1))
        vertices = np.array([[0.0, 0.0], [0.5, 0.5], [1.0, 1.0], [1.5, 1.5]])
        with self.assertRaises(DegenerateSimplexError):
            lattice_map_from_vertices(degree, vertices, np.arange(4))

    def test_inverted_simplex(self):
        degree = DegreeVector((1, 2))
        vertices = lattice_grid(degree).points.copy()
        vertices[1] = [1.5, 0.5]
        with self.assertRaises(DegenerateSimplexError):
            lattice_map_from_vertices(degree, vertices, np.arange(degree.size))


class DataKoopmanTests(SimpleTestCase):
    def test_regular_lattice_reproduces_model_matrices(self):
        degree = DegreeVector((4, 4))
        data = lattice_dataset(squaring_map(), degree)
        lattice_map = build_lattice_map(data, degree, build_assignment(data, degree))
        from_data = build_data_koopman(data, degree, lattice_map)
        from_model = build_koopman_matrices(squaring_map(), degree)
        np.testing.assert_allclose(from_data.samples, from_model.samples, atol=1e-9)
        np.testing.assert_allclose(predict_trajectory(from_data, [0.6, 0.7], 2),
                                   predict_trajectory(from_model, [0.6, 0.7], 2), atol=1e-9)

    def test_outputs_outside_the_hull(self):
        degree = DegreeVector((2, 2))
        shifted = MapOnBox(func=lambda points: points + 0.5, dimension=2, confined=False)
        data = lattice_dataset(shifted, degree, shuffle=False)
        lattice_map = build_lattice_map(data, degree, np.arange(degree.size))
        with self.assertRaises(OutOfHullError):
            build_data_koopman(data, degree, lattice_map)

    def test_error_and_bounds_on_jittered_data(self):
        degree = DegreeVector((6, 6))
        square = squaring_map()
        data = jittered_lattice_dataset(square, degree, jitter=0.1, seed=8)
        lattice_map = build_lattice_map(data, degree, build_assignment(data, degree))
        observable = parse_observable('x1 + x2', 2)
        error = data_driven_error(observable, square, lattice_map, data, Box.unit(2).grid(10)).sup
        modulus = AnalyticModulus(lambda delta: np.sqrt(2) * delta)
        full, partial = data_driven_bounds(modulus, 2.0, lipschitz_of_S(lattice_map), degree)
        self.assertEqual((full.tag, partial.tag), ('DataFull', 'DataPartial'))
        self.assertLessEqual(error, full.value)
        self.assertLessEqual(error, partial.value)

    def test_bounds_hold_on_scattered_data_with_estimated_constants(self):
        degree = DegreeVector((6, 6))
        logistic_pair = MapOnBox(func=lambda points: points / (np.e + points * (np.e - 1)),
                                 dimension=2, label='logistic pair')
        data = lattice_dataset(logistic_pair, degree, jitter=0.2, seed=11,
                               warp=lambda points: points + 0.05 * np.sin(2 * np.pi * points))
        lattice_map = build_lattice_map(data, degree, build_assignment(data, degree))
        observable = parse_observable('x1^2/2 + x1*x2', 2)
        error = data_driven_error(observable, logistic_pair, lattice_map, data,
                                  Box.unit(2).grid(20)).sup
        modulus = estimate_image_modulus(observable, logistic_pair).inflated(1)
        full, partial = data_driven_bounds(modulus, 1 / np.e, lipschitz_of_S(lattice_map), degree)
        self.assertGreater(error, 0.0)
        self.assertLessEqual(error, full.value)
        self.assertLessEqual(error, partial.value)

    def test_affine_data_bounds_match_model_bounds(self):
        modulus = AnalyticModulus(lambda delta: delta)
        degree = DegreeVector((4, 4))
        full, _ = data_driven_bounds(modulus, 1.0, lipschitz_of_S(affine_box_map(Box.unit(2))), degree)
        self.assertAlmostEqual(full.value, bound_multivariate_full(modulus, 1.0, degree).value)
