import numpy as np
from django.test import SimpleTestCase

from approximation.exceptions import ExpressionError
from approximation.expressions import (
    parse_expression,
    parse_observable,
    parse_vector_field,
)


class ObservableParsingTests(SimpleTestCase):
    def test_value_and_gradient(self):
        observable = parse_observable('x1^2 + 3*x2', 2)
        self.assertAlmostEqual(observable([0.5, 1.0]), 3.25)
        np.testing.assert_allclose(observable.grad([0.5, 1.0]), [1.0, 3.0])
        self.assertEqual(observable.label, 'x1^2 + 3*x2')

    def test_python_power_operator(self):
        self.assertAlmostEqual(parse_observable('x1**3', 1)(0.5), 0.125)

    def test_constant_broadcasts(self):
        observable = parse_observable('2', 2)
        np.testing.assert_array_equal(observable(np.zeros((3, 2))), [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(observable.grad(np.zeros((3, 2))), np.zeros((3, 2)))

    def test_scientific_literals(self):
        self.assertAlmostEqual(parse_observable('2e-3*x1', 1)(1.0), 0.002)

    def test_gradient_passes_validation(self):
        self.assertLess(parse_observable('x1*x2 - x2^3/3', 2).gradient_mismatch(), 1e-5)


class RejectedExpressionTests(SimpleTestCase):
    def test_functions_are_not_allowed(self):
        with self.assertRaises(ExpressionError):
            parse_expression('exp(x1)', 1)

    def test_unknown_variable(self):
        with self.assertRaises(ExpressionError):
            parse_expression('x1 + x3', 2)

    def test_malformed(self):
        with self.assertRaises(ExpressionError):
            parse_expression('x1 +', 1)

    def test_empty(self):
        with self.assertRaises(ExpressionError):
            parse_expression('  ', 1)


class VectorFieldTests(SimpleTestCase):
    def test_components(self):
        field = parse_vector_field('x2; -x1', 2)
        np.testing.assert_allclose(field(np.array([[0.2, 0.3]])), [[0.3, -0.2]])

    def test_component_count(self):
        with self.assertRaises(ExpressionError):
            parse_vector_field(['x1'], 2)

