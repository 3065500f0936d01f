import unittest

import numpy as np
import sympy as sp

from src.errors import DomainError, MissingVariable, ParseError
from src.symexpr import Box, Oracle, equal_on_samples, evaluate, parse_expr, symbols_for

COORDS = ("x", "y", "z")
BOX = Box(COORDS, (-1.0, -1.0, -1.0), (1.0, 1.0, 1.0))


class TestParse(unittest.TestCase):

    def test_caret_is_power(self):
        x, y, _ = symbols_for(COORDS)
        self.assertEqual(sp.expand(parse_expr("x^2*y + 1", COORDS) - (x ** 2 * y + 1)), 0)

    def test_known_functions(self):
        e = parse_expr("sin(x) + exp(y)", COORDS)
        x, y, _ = symbols_for(COORDS)
        self.assertEqual(e, sp.sin(x) + sp.exp(y))

    def test_syntax_error_has_offset(self):
        with self.assertRaises(ParseError) as ctx:
            parse_expr("x + * y", COORDS)
        self.assertGreaterEqual(ctx.exception.offset, 0)
        self.assertLessEqual(ctx.exception.offset, len("x + * y"))

    def test_unknown_variable_points_at_name(self):
        with self.assertRaises(ParseError) as ctx:
            parse_expr("x + w", COORDS)
        self.assertEqual(ctx.exception.offset, 4)

    def test_unbalanced(self):
        with self.assertRaises(ParseError):
            parse_expr("(x + y", COORDS)


class TestEvaluate(unittest.TestCase):

    def test_vectorised_values(self):
        pts = np.array([[1.0, 2.0, 3.0], [0.5, -1.0, 0.0]])
        np.testing.assert_allclose(evaluate(parse_expr("x*y + z", COORDS), COORDS, pts), [5.0, -0.5])

    def test_constant_broadcasts(self):
        pts = np.zeros((4, 3))
        np.testing.assert_allclose(evaluate(sp.Integer(3), COORDS, pts), [3.0] * 4)

    def test_missing_variable(self):
        with self.assertRaises(MissingVariable):
            evaluate(sp.Symbol("w", real=True), COORDS, np.zeros((1, 3)))

    def test_domain_error_carries_witness(self):
        with self.assertRaises(DomainError) as ctx:
            evaluate(parse_expr("log(x)", COORDS), COORDS, np.array([[-0.5, 0.0, 0.0]]))
        self.assertAlmostEqual(ctx.exception.witness["x"], -0.5)


class TestOracle(unittest.TestCase):

    def test_points_are_reproducible(self):
        oracle = Oracle()
        np.testing.assert_array_equal(oracle.points(BOX), oracle.points(BOX))
        self.assertEqual(oracle.points(BOX).shape, (25, 3))

    def test_points_inside_box(self):
        pts = Oracle(samples=200).points(BOX)
        self.assertTrue(np.all(pts > -1.0) and np.all(pts < 1.0))

    def test_equal_expressions_pass(self):
        x, y, _ = symbols_for(COORDS)
        self.assertTrue(Oracle().compare((x + y) ** 2, x ** 2 + 2 * x * y + y ** 2, BOX).passed)

    def test_constant_offset_fails_with_residual_one(self):
        x = symbols_for(COORDS)[0]
        result = Oracle().compare(x, x + 1, BOX)
        self.assertFalse(result.passed)
        self.assertAlmostEqual(result.max_residual, 1.0)
        self.assertIsNotNone(result.witness)

    def test_relative_tolerance(self):
        big = sp.Integer(10) ** 12
        self.assertTrue(Oracle().compare(big, big + sp.Rational(1, 10), BOX).passed)

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            equal_on_samples(sp.S.Zero, sp.S.Zero, BOX, n=0)


if __name__ == "__main__":
    unittest.main()
