import unittest

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

from src.cartan import (
    Form,
    VectorField,
    check_appendix_identity,
    check_calculus,
    compare_forms,
    contract,
    exterior_d,
    flow_pullback,
    flow_pullback_check,
    form_matrix,
    homotopy_operator,
    interior,
    lie_derivative,
    pullback,
    vf_bracket,
    wedge,
)
from src.errors import DegreeError, DimensionMismatch, PreconditionFailed
from src.fixtures import F2_BOX, random_appendix_instance, random_field, random_form, volume_form
from src.symexpr import Box, Oracle, symbols_for

COORDS = ("x", "y", "z")


class TestForms(unittest.TestCase):

    def test_make_sorts_and_signs(self):
        a = Form.make(COORDS, 2, {(1, 0): 3})
        self.assertEqual(dict(a.terms), {(0, 1): -3})

    def test_repeated_index_vanishes(self):
        self.assertTrue(Form.make(COORDS, 2, {(1, 1): 5}).is_zero())

    def test_degree_above_dimension_is_zero(self):
        self.assertTrue(Form.make(("x", "y"), 3, {}).is_zero())

    def test_scalar_needs_function(self):
        with self.assertRaises(DegreeError):
            _ = Form.make(COORDS, 1, {(0,): 1}).scalar

    def test_unknown_coordinate_name(self):
        with self.assertRaises(DimensionMismatch):
            Form.from_names(COORDS, 1, {("w",): 1})

    def test_wedge_anticommutes_one_forms(self):
        dx, dy = Form.make(COORDS, 1, {(0,): 1}), Form.make(COORDS, 1, {(1,): 1})
        self.assertEqual(dict(wedge(dx, dy).terms), {(0, 1): 1})
        self.assertEqual(dict(wedge(dy, dx).terms), {(0, 1): -1})

    def test_form_matrix_antisymmetric(self):
        M = form_matrix(Form.from_names(COORDS, 2, {("x", "z"): 2}))
        self.assertEqual(M[0, 2], 2)
        self.assertEqual(M[2, 0], -2)


class TestInterior(unittest.TestCase):

    def test_first_slot_convention(self):
        X, Y, Z = (VectorField.partial(COORDS, c) for c in COORDS)
        vol = volume_form()
        self.assertEqual(contract(vol, X, Y, Z).scalar, 1)
        self.assertEqual(contract(vol, Y, X, Z).scalar, -1)

    def test_contraction_of_function_rejected(self):
        with self.assertRaises(DegreeError):
            interior(VectorField.partial(COORDS, "x"), Form.function(COORDS, 1))

    def test_mismatched_coordinates(self):
        with self.assertRaises(DimensionMismatch):
            interior(VectorField.partial(("x", "y"), "x"), volume_form())


class TestCalculus(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(7)
        self.oracle = Oracle()

    def test_random_instances(self):
        for k in range(8):
            a = random_form(COORDS, k % 4, self.rng)
            b = random_form(COORDS, 1, self.rng)
            X, Y = random_field(COORDS, self.rng), random_field(COORDS, self.rng)
            for name, result in check_calculus(a, b, X, Y, F2_BOX, self.oracle).items():
                self.assertTrue(result.passed, f"{name} failed on instance {k}: {result.max_residual}")

    def test_homotopy_operator_inverts_d(self):
        for degree in (1, 2):
            a = random_form(COORDS, degree, self.rng)
            lhs = exterior_d(homotopy_operator(a, F2_BOX.center)) + homotopy_operator(exterior_d(a), F2_BOX.center)
            self.assertTrue(compare_forms(lhs, a, F2_BOX, self.oracle).passed)

    def test_homotopy_of_exact_form(self):
        x, y, z = symbols_for(COORDS)
        a = exterior_d(Form.function(COORDS, x * y * z))
        self.assertTrue(compare_forms(exterior_d(homotopy_operator(a)), a, F2_BOX, self.oracle).passed)

    def test_bracket_of_partials_vanishes(self):
        X, Y = VectorField.partial(COORDS, "x"), VectorField.partial(COORDS, "y")
        self.assertTrue(vf_bracket(X, Y).is_zero())

    def test_lie_derivative_of_volume_is_divergence(self):
        x, y, z = symbols_for(COORDS)
        X = VectorField.make(COORDS, [x, y ** 2, 0])
        lhs = lie_derivative(X, volume_form())
        self.assertEqual(sp.expand(lhs.terms[(0, 1, 2)] - (1 + 2 * y)), 0)


class TestPullback(unittest.TestCase):

    def test_polynomial_map(self):
        target = ("x", "y")
        s, t = symbols_for(("s", "t"))
        a = Form.make(target, 1, {(1,): symbols_for(target)[0]})
        pulled = pullback(a, ("s", "t"), [s * t, s ** 2])
        self.assertEqual(sp.expand(pulled.terms[(0,)] - 2 * s ** 2 * t), 0)
        self.assertNotIn((1,), pulled.terms)

    def test_needs_one_expression_per_coordinate(self):
        with self.assertRaises(DimensionMismatch):
            pullback(volume_form(), ("s",), [1])


class TestFlow(unittest.TestCase):

    def test_rotation_against_variational_equations(self):
        coords = ("x", "y")
        x, y = symbols_for(coords)
        X = VectorField.make(coords, [-y, x])
        dx = Form.make(coords, 1, {(0,): 1})
        point, s = np.array([0.3, -0.2]), 0.1

        def rhs(_, state):
            p, J = state[:2], state[2:].reshape(2, 2)
            DX = np.array([[0.0, -1.0], [1.0, 0.0]])
            return np.concatenate([DX @ p, (DX @ J).ravel()])

        sol = solve_ivp(rhs, (0.0, s), np.concatenate([point, np.eye(2).ravel()]), rtol=1e-12, atol=1e-12)
        J = sol.y[2:, -1].reshape(2, 2)
        pulled = flow_pullback(X, dx, point, s)
        np.testing.assert_allclose([pulled[(0,)], pulled[(1,)]], J[0], atol=1e-6)

    def test_central_difference_matches_lie_derivative(self):
        rng = np.random.default_rng(3)
        X = random_field(COORDS, rng, 1)
        a = random_form(COORDS, 1, rng, 1)
        self.assertTrue(flow_pullback_check(X, a, F2_BOX, Oracle(samples=5)).passed)


class TestAppendixIdentity(unittest.TestCase):

    def test_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(3):
            instance = random_appendix_instance(rng, F2_BOX)
            self.assertTrue(check_appendix_identity(*instance, F2_BOX, Oracle()).passed)

    def test_wrong_potential_names_hypothesis(self):
        B = Form.from_names(COORDS, 2, {("y", "z"): symbols_for(COORDS)[0]})
        X = VectorField.partial(COORDS, "x")
        zero = Form.zero(COORDS, 1)
        with self.assertRaises(PreconditionFailed) as ctx:
            check_appendix_identity(B, X, X, X, zero, zero, zero, F2_BOX, Oracle())
        self.assertIn("L_X B = da", str(ctx.exception))

    def test_degrees_checked(self):
        with self.assertRaises(DegreeError):
            zero = Form.zero(COORDS, 1)
            X = VectorField.partial(COORDS, "x")
            check_appendix_identity(zero, X, X, X, zero, zero, zero, F2_BOX, Oracle())

    def test_needs_three_coordinates(self):
        with self.assertRaises(DimensionMismatch):
            random_appendix_instance(np.random.default_rng(0), Box(("x", "y"), (0.0, 0.0), (1.0, 1.0)))


if __name__ == "__main__":
    unittest.main()
