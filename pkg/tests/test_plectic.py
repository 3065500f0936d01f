import unittest

import numpy as np

from src.cartan import Form, VectorField
from src.errors import DegreeError, PreconditionFailed
from src.fixtures import COORDS, F2_BOX, random_functions, random_hamiltonian_pairs, volume_form
from src.lie2core import check_lie2_axioms
from src.plectic import (
    HamPair,
    PlecticManifold,
    PoissonLie2,
    hamiltonian_pair,
    plectic_bracket,
    plectic_d,
    plectic_jacobiator,
    validate_ham_pair,
)
from src.symexpr import Oracle, symbols_for

X, Y, Z = symbols_for(COORDS)


class TestPlecticManifold(unittest.TestCase):

    def test_needs_three_form(self):
        with self.assertRaises(DegreeError):
            PlecticManifold(F2_BOX, Form.zero(COORDS, 2))

    def test_volume_is_closed(self):
        self.assertTrue(PlecticManifold(F2_BOX, volume_form()).validate(Oracle()).passed)


class TestHamiltonianPairs(unittest.TestCase):

    def setUp(self):
        self.P = PlecticManifold(F2_BOX, volume_form())
        self.oracle = Oracle()

    def test_translation(self):
        h = hamiltonian_pair(self.P, VectorField.partial(COORDS, "x"), self.oracle, center=(0.0, 0.0, 0.0))
        self.assertTrue(validate_ham_pair(self.P, h, self.oracle).passed)

    def test_expanding_field_rejected(self):
        with self.assertRaises(PreconditionFailed) as ctx:
            hamiltonian_pair(self.P, VectorField.make(COORDS, [X, 0, 0]), self.oracle)
        self.assertEqual(ctx.exception.hypothesis, "L_xi chi = 0")

    def test_wrong_beta_fails_validation(self):
        h = HamPair(VectorField.partial(COORDS, "x"), Form.zero(COORDS, 1))
        self.assertFalse(validate_ham_pair(self.P, h, self.oracle).passed)

    def test_bracket_is_hamiltonian(self):
        pairs = random_hamiltonian_pairs(self.P, np.random.default_rng(2), self.oracle)
        self.assertEqual(len(pairs), 4)
        for h1, h2 in zip(pairs, pairs[1:]):
            self.assertTrue(validate_ham_pair(self.P, plectic_bracket(self.P, h1, h2), self.oracle).passed)

    def test_differential_is_exact_pair(self):
        h = plectic_d(X * Y * Z, COORDS)
        self.assertTrue(h.xi.is_zero())
        self.assertTrue(validate_ham_pair(self.P, h, self.oracle).passed)

    def test_jacobiator_of_coordinate_fields(self):
        pairs = [HamPair(VectorField.partial(COORDS, c), Form.zero(COORDS, 1)) for c in COORDS]
        self.assertEqual(plectic_jacobiator(self.P, *pairs), -1)

    def test_pair_arithmetic(self):
        h = HamPair(VectorField.partial(COORDS, "x"), Form.make(COORDS, 1, {(2,): Y}))
        twice = h + h
        self.assertEqual(twice.beta.terms[(2,)], 2 * Y)
        self.assertTrue((h - h).xi.is_zero())
        self.assertEqual((3 * h).xi.components[0], 3)


class TestPoissonLie2(unittest.TestCase):

    def test_axioms_on_random_pairs(self):
        rng = np.random.default_rng(9)
        oracle = Oracle(samples=10)
        P = PlecticManifold(F2_BOX, volume_form())
        L = PoissonLie2(P, oracle)
        pairs = random_hamiltonian_pairs(P, rng, oracle)
        report = check_lie2_axioms(L, pairs, random_functions(COORDS, rng))
        self.assertTrue(report.passed, report.to_text())

    def test_degenerate_form_is_allowed(self):
        chi = Form.make(COORDS, 3, {(0, 1, 2): X ** 2})
        P = PlecticManifold(F2_BOX, chi)
        self.assertTrue(P.validate(Oracle()).passed)
        h = hamiltonian_pair(P, VectorField.partial(COORDS, "y"), Oracle())
        self.assertTrue(validate_ham_pair(P, h, Oracle()).passed)


if __name__ == "__main__":
    unittest.main()
