import unittest

import numpy as np
import sympy as sp

from src.cartan import Form, exterior_d
from src.cech import CechForm, DeligneCocycle, Trivialization
from src.errors import CurvatureMismatch, NoHamiltonianField, NotInKernel, PreconditionFailed
from src.fixtures import (
    COORDS,
    F2_BOX,
    abelian_group,
    abelian_qham,
    f2_cocycle,
    f2_trivialization,
    kostant_plane,
    plectic_of,
    random_functions,
    random_hamiltonian_pairs,
    random_sections,
    translation_moment,
    trivial_symmetry,
    volume_form,
)
from src.gerbevf import AlgebroidSection
from src.lie2core import check_butterfly, check_morphism
from src.plectic import PlecticManifold
from src.quantomorph import (
    GerbeButterfly,
    GroupModel,
    QHamData,
    TrivialGerbeSymmetries,
    build_E,
    build_Q,
    check_kostant,
    check_kostant_bracket,
    check_square,
    example_quasi_iso,
    hamiltonian_field,
    kappa_kernel_witness,
    kostant_lift,
    lambda_kernel_witness,
    sigma_section_E,
    sigma_section_Q,
    two_iso_phi,
    validate_group_model,
    validate_qham,
)
from src.report import Status
from src.symexpr import Oracle, parse_expr, symbols_for


class _F2Samples:
    """Seeded sources, sections and functions on the two-chart gerbe."""

    def __init__(self, seed: int, oracle: Oracle) -> None:
        rng = np.random.default_rng(seed)
        self.c = f2_cocycle()
        self.t = f2_trivialization()
        self.P = plectic_of(self.c)
        self.trivial_P = PlecticManifold(F2_BOX, exterior_d(self.t.omega))
        self.pairs = random_hamiltonian_pairs(self.P, rng, oracle, 3)
        self.trivial = [trivial_symmetry(self.t.omega, h) for h in random_hamiltonian_pairs(self.trivial_P, rng, oracle, 3)]
        self.functions = random_functions(COORDS, rng)
        self.sections = random_sections(self.c, rng)

    def carrier(self, b, sources):
        elements = []
        for k, s in enumerate(sources):
            e = b.sigma_section(s) + b.lam(self.sections[k % 2])
            elements.append(e + b.kappa(self.functions[k % 2]) if k % 2 else e)
        return elements


class TestEButterfly(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.oracle = Oracle(samples=8)
        cls.s = _F2Samples(0, cls.oracle)
        cls.b = build_E(cls.s.c, cls.s.P, cls.oracle)

    def test_butterfly_conditions(self):
        report = check_butterfly(self.b, self.s.carrier(self.b, self.s.pairs), self.s.functions, self.s.sections)
        self.assertTrue(report.passed, report.to_text())
        self.assertIs(report.find("exact_at_carrier_sigma").status, Status.PASS)

    def test_sigma_section_is_a_section(self):
        for h in self.s.pairs:
            e = sigma_section_E(self.b, h)
            self.assertTrue(self.b.validate(e).passed)
            self.assertTrue(self.b.source.compare0(self.b.sigma(e), h).passed)

    def test_lambda_witness_subtracts_constant(self):
        u = self.s.sections[0]
        e = self.b.lam(u) + self.b.kappa(sp.Integer(2))
        found = lambda_kernel_witness(self.b, e)
        expected = AlgebroidSection(u.u - CechForm.functions(self.s.c.cover, 1, {(0,): 2, (1,): 2}))
        self.assertTrue(self.b.target.compare1(found.combined(), expected).passed)
        self.assertTrue(self.b.compare(self.b.lam(found.section) + self.b.kappa(found.constant), e).passed)

    def test_lambda_witness_returns_constant(self):
        found = lambda_kernel_witness(self.b, self.b.kappa(sp.Integer(2)))
        self.assertAlmostEqual(found.constant, 2.0)
        zero = AlgebroidSection(CechForm.zero(self.s.c.cover, 0, 1))
        self.assertTrue(self.b.target.compare1(found.section, zero).passed)

    def test_lambda_witness_outside_kernel(self):
        with self.assertRaises(NotInKernel):
            lambda_kernel_witness(self.b, sigma_section_E(self.b, self.s.pairs[0]))

    def test_kappa_witness(self):
        h = self.s.functions[0]
        self.assertTrue(self.oracle.compare(kappa_kernel_witness(self.b, self.b.kappa(h)), h, F2_BOX).passed)
        with self.assertRaises(NotInKernel):
            kappa_kernel_witness(self.b, sigma_section_E(self.b, self.s.pairs[0]))

    def test_curvature_mismatch(self):
        with self.assertRaises(CurvatureMismatch) as ctx:
            build_E(self.s.c, PlecticManifold(F2_BOX, volume_form() * 2), self.oracle)
        self.assertAlmostEqual(ctx.exception.residual, 1.0)

    def test_incomplete_butterfly_cannot_be_built(self):
        class NoSection(GerbeButterfly):
            def sigma(self, e):
                return e.v

            def _bracket_g(self, x, y):
                return x.g

        with self.assertRaises(TypeError):
            NoSection(self.s.c, self.b.source, self.oracle)


class TestQButterfly(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.oracle = Oracle(samples=8)
        cls.s = _F2Samples(1, cls.oracle)
        cls.b = build_Q(cls.s.c, cls.s.t, cls.oracle)

    def test_butterfly_conditions(self):
        report = check_butterfly(self.b, self.s.carrier(self.b, self.s.trivial), self.s.functions, self.s.sections)
        self.assertTrue(report.passed, report.to_text())

    def test_sigma_section_is_a_section(self):
        for x in self.s.trivial:
            e = sigma_section_Q(self.b, x)
            self.assertTrue(self.b.validate(e).passed)
            self.assertTrue(self.b.source.compare0(self.b.sigma(e), x).passed)

    def test_rho_section(self):
        v = sigma_section_Q(self.b, self.s.trivial[0]).v
        e = self.b.rho_section(v)
        self.assertTrue(self.b.validate(e).passed)

    def test_bad_trivialization_rejected(self):
        t = self.s.t
        wrong = Trivialization(t.psi, t.eta, t.omega + Form.from_names(COORDS, 2, {("x", "y"): 1}))
        with self.assertRaises(PreconditionFailed):
            build_Q(self.s.c, wrong, self.oracle)


class TestQuasiIsomorphism(unittest.TestCase):

    def setUp(self):
        self.oracle = Oracle(samples=8)
        self.s = _F2Samples(2, self.oracle)
        self.T = TrivialGerbeSymmetries(F2_BOX, self.s.t.omega, self.oracle)

    def test_sources_are_symmetries(self):
        for x in self.s.trivial:
            self.assertTrue(self.T.validate(x).passed)

    def test_morphism(self):
        report = check_morphism(example_quasi_iso(self.T), self.s.trivial, self.s.functions)
        self.assertTrue(report.passed, report.to_text())

    def test_printed_sign_fails(self):
        report = check_morphism(example_quasi_iso(self.T, printed_sign=True), self.s.trivial, self.s.functions)
        self.assertFalse(report.passed)
        self.assertIs(report.find("chain_map").status, Status.FAIL)


class TestSquare(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.oracle = Oracle(samples=6)
        cls.s = _F2Samples(3, cls.oracle)
        s = cls.s
        cls.bE = build_E(s.c, s.P, cls.oracle)
        cls.bQ = build_Q(s.c, s.t, cls.oracle)
        cls.bE_triv = build_E(DeligneCocycle.trivial(F2_BOX, s.t.omega), s.trivial_P, cls.oracle)
        cls.elements = s.carrier(cls.bQ, s.trivial)

    def test_phi_is_isomorphism(self):
        report = two_iso_phi(self.bE_triv, self.bQ, self.bE, self.elements, self.s.functions, self.s.sections)
        self.assertTrue(report.passed, report.to_text())

    def test_square_with_moment_map(self):
        report = check_square(self.bE_triv, self.bE, self.bQ, self.elements, self.s.functions, self.s.sections,
                              translation_moment(), abelian_group())
        self.assertTrue(report.passed, report.to_text())
        self.assertIs(report.find("square.triangle[0]").status, Status.PASS)

    def test_square_without_moment_map(self):
        report = check_square(self.bE_triv, self.bE, self.bQ, self.elements[:2], self.s.functions,
                              self.s.sections)
        self.assertIs(report.find("square.moment").status, Status.SKIP)

    def test_different_three_forms(self):
        doubled = build_E(DeligneCocycle.trivial(F2_BOX, self.s.t.omega * 2), PlecticManifold(F2_BOX, volume_form() * 2),
                          self.oracle)
        with self.assertRaises(PreconditionFailed) as ctx:
            check_square(doubled, self.bE, self.bQ, self.elements, self.s.functions, self.s.sections)
        self.assertEqual(ctx.exception.hypothesis, "d omega = chi")


class TestKostant(unittest.TestCase):

    def setUp(self):
        self.oracle = Oracle()
        self.omega, self.A, self.box = kostant_plane()

    def test_hamiltonian_field_sign(self):
        Xf = hamiltonian_field(self.omega, symbols_for(("x", "y"))[0])
        self.assertEqual(list(Xf.components), [0, 1])

    def test_lifts_preserve_connection(self):
        for f in ("x", "y", "x*y", "1", "x^2 - y"):
            expr = parse_expr(f, ("x", "y"))
            report = check_kostant(kostant_lift(self.omega, self.A, expr, self.box, self.oracle), self.oracle)
            self.assertTrue(report.passed, report.to_text())

    def test_bracket(self):
        x, y = symbols_for(("x", "y"))
        self.assertTrue(check_kostant_bracket(self.omega, self.A, x * y, x ** 2, self.box, self.oracle).passed)

    def test_string_functions_are_parsed(self):
        x, y = symbols_for(("x", "y"))
        lift = kostant_lift(self.omega, self.A, "x*y", self.box, self.oracle)
        self.assertEqual(lift.f, x * y)
        self.assertEqual([sp.expand(c) for c in lift.base.components], [-x, y])
        self.assertTrue(check_kostant(lift, self.oracle).passed)
        self.assertTrue(check_kostant_bracket(self.omega, self.A, "x*y", "x^2", self.box, self.oracle).passed)

    def test_lift_lives_on_circle_bundle(self):
        lift = kostant_lift(self.omega, self.A, 1, self.box, self.oracle)
        self.assertEqual(lift.box.coords, ("x", "y", "theta"))
        self.assertAlmostEqual(lift.box.upper[-1], 2 * np.pi)

    def test_wrong_primitive(self):
        with self.assertRaises(PreconditionFailed):
            kostant_lift(self.omega, self.A * 2, 1, self.box, self.oracle)

    def test_degenerate_form(self):
        with self.assertRaises(NoHamiltonianField):
            hamiltonian_field(Form.zero(("x", "y"), 2), symbols_for(("x", "y"))[0])


class TestQuasiHamiltonian(unittest.TestCase):

    def setUp(self):
        self.oracle = Oracle()

    def test_group_model(self):
        self.assertTrue(validate_group_model(abelian_group(), self.oracle).passed)

    def test_abelian_space(self):
        report = validate_qham(abelian_group(), abelian_qham(), self.oracle)
        self.assertTrue(report.passed, report.to_text())

    def test_flipped_form_breaks_moment_condition(self):
        report = validate_qham(abelian_group(), abelian_qham(flipped=True), self.oracle)
        result = report.find("moment[0]")
        self.assertIs(result.status, Status.FAIL)
        self.assertAlmostEqual(result.max_residual, 2.0)

    def test_degenerate_space(self):
        D = abelian_qham()
        flat = QHamData(D.box, Form.zero(D.box.coords, 2), D.phi, D.generators)
        report = validate_qham(abelian_group(), flat, self.oracle)
        self.assertIs(report.find("nondegeneracy").status, Status.FAIL)
        self.assertAlmostEqual(report.find("nondegeneracy").max_residual, 1.0)

    def test_generator_count(self):
        D = abelian_qham()
        with self.assertRaises(PreconditionFailed):
            validate_qham(abelian_group(), QHamData(D.box, D.omega, D.phi, D.generators * 2), self.oracle)

    def test_non_invariant_inner_product(self):
        G = abelian_group()
        bad = GroupModel(G.box, G.theta_L, G.theta_R, G.eta, np.array([[1.0]]), np.ones((1, 1, 1)))
        report = validate_group_model(bad, self.oracle)
        self.assertIs(report.find("inner_invariant").status, Status.FAIL)


if __name__ == "__main__":
    unittest.main()
