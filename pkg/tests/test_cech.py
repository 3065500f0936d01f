import unittest

import sympy as sp

from src.cartan import Form
from src.cech import (
    CechForm,
    Cover,
    DeligneCocycle,
    cech_delta,
    check_glue_roundtrip,
    compare_cech,
    glue,
    partition_of_unity,
    solve_coboundary,
    solve_constants,
    three_curvature,
    validate_cover,
    validate_deligne,
    validate_trivialization,
    worst,
)
from src.errors import DegreeError, DepthExceeded, DimensionMismatch, GluingMismatch, PreconditionFailed
from src.fixtures import (
    COORDS,
    F2_BOX,
    f2_cocycle,
    f2_cover,
    f2_trivialization,
    flat_cocycle,
    single_chart_cocycle,
    three_chart_cocycle,
    volume_form,
)
from src.report import Status
from src.symexpr import Box, Oracle, symbols_for

X, Y, Z = symbols_for(COORDS)


class TestCover(unittest.TestCase):

    def test_two_chart_nerve(self):
        cover = f2_cover()
        self.assertEqual(list(cover.nerve.edges), [(0, 1)])
        self.assertEqual(cover.overlaps(2), [(0, 1)])
        self.assertEqual(cover.overlaps(3), [])

    def test_three_chart_triple_overlap(self):
        cover = three_chart_cocycle().cover
        self.assertEqual(cover.overlaps(3), [(0, 1, 2)])
        self.assertEqual(cover.box((0, 1, 2)).lower[0], -0.5)
        self.assertEqual(cover.box((0, 1, 2)).upper[0], 0.5)

    def test_depth_limit(self):
        with self.assertRaises(DepthExceeded):
            f2_cover().overlaps(5)

    def test_covering_passes(self):
        self.assertIs(validate_cover(f2_cover()).status, Status.PASS)

    def test_gap_reports_witness(self):
        cover = Cover(F2_BOX, (Box(COORDS, (-2.0, -1.0, -1.0), (-0.5, 1.0, 1.0)),
                               Box(COORDS, (0.5, -1.0, -1.0), (2.0, 1.0, 1.0))))
        result = validate_cover(cover)
        self.assertIs(result.status, Status.FAIL)
        self.assertIsNotNone(result.witness)

    def test_chart_coordinates_must_match(self):
        with self.assertRaises(DimensionMismatch):
            Cover(F2_BOX, (Box(("x", "y"), (0.0, 0.0), (1.0, 1.0)),))


class TestCechForms(unittest.TestCase):

    def test_delta_of_functions(self):
        g = CechForm.functions(f2_cover(), 1, {(0,): X, (1,): Y})
        self.assertEqual(sp.expand(cech_delta(g).scalar((0, 1)) - (Y - X)), 0)

    def test_delta_squared_vanishes(self):
        cover = three_chart_cocycle().cover
        g = CechForm.functions(cover, 1, {(0,): X * Y, (1,): Z, (2,): X ** 2})
        self.assertTrue(all(f.is_zero() for f in (cech_delta(cech_delta(g)).part(i) for i in cover.overlaps(3))))
        h = CechForm.functions(cover, 2, {(0, 1): X, (0, 2): Y, (1, 2): Z})
        self.assertEqual(sp.expand(cech_delta(h).scalar((0, 1, 2)) - (Z - Y + X)), 0)

    def test_unknown_overlap_rejected(self):
        with self.assertRaises(DimensionMismatch):
            CechForm.functions(f2_cover(), 2, {(0, 2): X})

    def test_part_degree_checked(self):
        with self.assertRaises(DegreeError):
            CechForm.make(f2_cover(), 1, 1, {(0,): volume_form()})

    def test_cocycle_shapes_checked(self):
        cover = f2_cover()
        with self.assertRaises(DegreeError):
            DeligneCocycle(cover, CechForm.zero(cover, 0, 2), CechForm.zero(cover, 1, 2), CechForm.zero(cover, 2, 1))


class TestGluing(unittest.TestCase):

    def setUp(self):
        self.oracle = Oracle()

    def test_identical_parts_glue_to_themselves(self):
        B = Form.from_names(COORDS, 2, {("y", "z"): X})
        self.assertEqual(glue(CechForm.restrict(f2_cover(), B), self.oracle), B)

    def test_mismatch_names_overlap(self):
        zeta = CechForm.functions(f2_cover(), 1, {(0,): X, (1,): X + 1})
        with self.assertRaises(GluingMismatch) as ctx:
            glue(zeta, self.oracle)
        self.assertEqual(ctx.exception.overlap, (0, 1))
        self.assertAlmostEqual(ctx.exception.residual, 1.0)

    def test_piecewise_roundtrip(self):
        # Equal to x on chart 0 only.
        folded = X + sp.Abs(X - 1) - (1 - X)
        zeta = CechForm.functions(f2_cover(), 1, {(0,): folded, (1,): X})
        self.assertIs(check_glue_roundtrip(zeta, self.oracle).status, Status.PASS)

    def test_roundtrip_reports_mismatch(self):
        zeta = CechForm.functions(f2_cover(), 1, {(0,): X, (1,): Y})
        self.assertIs(check_glue_roundtrip(zeta, self.oracle).status, Status.FAIL)

    def test_partition_of_unity_sums_to_one(self):
        rho = partition_of_unity(f2_cover())
        self.assertTrue(self.oracle.compare(sp.Add(*rho), sp.S.One, F2_BOX).passed)
        outside = Box(COORDS, (1.2, -1.0, -1.0), (2.0, 1.0, 1.0))
        self.assertTrue(self.oracle.is_zero(rho[0], outside).passed)

    def test_solve_coboundary(self):
        cover = three_chart_cocycle().cover
        g = CechForm.functions(cover, 1, {(0,): X * Y, (1,): Z, (2,): X ** 2})
        h = cech_delta(g)
        solved = solve_coboundary(h, self.oracle)
        self.assertTrue(worst(compare_cech(cech_delta(solved), h, self.oracle)).passed)

    def test_solve_constants(self):
        self.assertEqual(solve_constants(f2_cover(), {(0, 1): 2.0}), {0: 0.0, 1: 2.0})

    def test_inconsistent_constants(self):
        cover = three_chart_cocycle().cover
        with self.assertRaises(GluingMismatch):
            solve_constants(cover, {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 5.0})


class TestDeligne(unittest.TestCase):

    def setUp(self):
        self.oracle = Oracle()

    def test_named_cocycles_validate(self):
        for cocycle in (f2_cocycle(), flat_cocycle(), single_chart_cocycle(), three_chart_cocycle()):
            report = validate_deligne(cocycle, self.oracle)
            self.assertTrue(report.passed, report.to_text())

    def test_broken_curving(self):
        report = validate_deligne(f2_cocycle(broken=True), self.oracle)
        result = report.find("curving[0,1]")
        self.assertIs(result.status, Status.FAIL)
        self.assertAlmostEqual(result.max_residual, 1.0)

    def test_three_curvature(self):
        H = three_curvature(f2_cocycle(), self.oracle)
        self.assertEqual(H, volume_form())
        self.assertTrue(three_curvature(flat_cocycle(), self.oracle).is_zero())

    def test_three_curvature_needs_curving_layer(self):
        with self.assertRaises(PreconditionFailed) as ctx:
            three_curvature(f2_cocycle(broken=True), self.oracle)
        self.assertEqual(ctx.exception.hypothesis, "delta B = dA")
        self.assertAlmostEqual(ctx.exception.residual, 1.0)

    def test_trivialization(self):
        report = validate_trivialization(f2_cocycle(), f2_trivialization(), self.oracle)
        self.assertTrue(report.passed, report.to_text())

    def test_trivialization_with_wrong_error_form(self):
        t = f2_trivialization()
        wrong = type(t)(t.psi, t.eta, t.omega + Form.from_names(COORDS, 2, {("x", "y"): 1}))
        report = validate_trivialization(f2_cocycle(), wrong, self.oracle)
        self.assertIs(report.find("error_form[0]").status, Status.FAIL)


if __name__ == "__main__":
    unittest.main()
