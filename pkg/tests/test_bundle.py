import json
import tempfile
import unittest
from pathlib import Path

import sympy as sp

from src.bundle import build_bundle, load_bundle, validate_schema
from src.cech import validate_deligne, validate_trivialization
from src.errors import ParseError, SchemaError
from src.fixtures import f2_cocycle, volume_form
from src.symexpr import Oracle

BUNDLES = Path(__file__).resolve().parents[1] / "bundles"


def _f2_data():
    return json.loads((BUNDLES / "f2.json").read_text())


class TestShippedBundles(unittest.TestCase):

    def test_every_bundle_loads(self):
        for path in sorted(BUNDLES.glob("*.json")):
            with self.subTest(bundle=path.name):
                bundle = load_bundle(path)
                self.assertEqual(bundle.name, path.stem)

    def test_f2_matches_fixture(self):
        bundle = load_bundle(BUNDLES / "f2.json")
        expected = f2_cocycle()
        self.assertEqual(bundle.cover, expected.cover)
        self.assertEqual(bundle.cocycle.B.part((1,)), expected.B.part((1,)))
        self.assertEqual(bundle.cocycle.A.part((0, 1)), expected.A.part((0, 1)))
        self.assertEqual(bundle.plectic.chi, volume_form())
        self.assertEqual(len(bundle.symmetries), 1)

    def test_f2_is_consistent(self):
        bundle = load_bundle(BUNDLES / "f2.json")
        oracle = Oracle()
        self.assertTrue(validate_deligne(bundle.cocycle, oracle).passed)
        self.assertTrue(validate_trivialization(bundle.cocycle, bundle.trivialization, oracle).passed)

    def test_optional_sections(self):
        bundle = load_bundle(BUNDLES / "abelian_qham.json")
        self.assertEqual(bundle.coords, ("q", "p"))
        self.assertEqual(bundle.group.rank, 1)
        self.assertEqual(bundle.qham.phi, (sp.Symbol("p", real=True),))
        self.assertEqual(len(bundle.moment.pairs), 1)
        self.assertIsNone(load_bundle(BUNDLES / "flat.json").group)

    def test_string_type_section(self):
        L = load_bundle(BUNDLES / "single_chart.json").findim
        self.assertEqual((L.n0, L.n1), (3, 1))
        self.assertTrue(L.validate_tensors().passed)


class TestSchemaErrors(unittest.TestCase):

    def test_missing_curving(self):
        data = _f2_data()
        del data["deligne"]["B"]
        with self.assertRaises(SchemaError) as ctx:
            build_bundle(data)
        self.assertEqual(ctx.exception.key, "deligne.B")

    def test_missing_manifold(self):
        data = _f2_data()
        del data["manifold"]
        with self.assertRaises(SchemaError) as ctx:
            validate_schema(data)
        self.assertEqual(ctx.exception.key, "manifold")

    def test_wrong_index_count(self):
        data = _f2_data()
        data["deligne"]["A"][0]["form"]["terms"][0]["indices"] = ["y", "z"]
        with self.assertRaises(SchemaError) as ctx:
            build_bundle(data)
        self.assertEqual(ctx.exception.key, "deligne.A.0.form.terms.0.indices")

    def test_unknown_coordinate(self):
        data = _f2_data()
        data["plectic_form"]["terms"][0]["indices"] = ["x", "y", "w"]
        with self.assertRaises(SchemaError) as ctx:
            build_bundle(data)
        self.assertIn("unknown coordinate 'w'", str(ctx.exception))

    def test_decreasing_overlap(self):
        data = _f2_data()
        data["deligne"]["A"][0]["overlap"] = [1, 0]
        with self.assertRaises(SchemaError) as ctx:
            build_bundle(data)
        self.assertEqual(ctx.exception.key, "deligne.A.0.overlap")

    def test_overlap_outside_nerve(self):
        data = _f2_data()
        data["cover"][1] = [[1.5, 2], [-1, 1], [-1, 1]]
        with self.assertRaises(SchemaError) as ctx:
            build_bundle(data)
        self.assertEqual(ctx.exception.key, "deligne.A")

    def test_findim_shapes(self):
        data = json.loads((BUNDLES / "single_chart.json").read_text())
        data["findim_lie2"]["jac"] = [[[0]]]
        with self.assertRaises(SchemaError) as ctx:
            build_bundle(data)
        self.assertEqual(ctx.exception.key, "findim_lie2")


class TestParseErrors(unittest.TestCase):

    def test_expression_offset(self):
        data = _f2_data()
        data["deligne"]["B"][1]["form"]["terms"][0]["coefficient"] = "x + * 1"
        with self.assertRaises(ParseError) as ctx:
            build_bundle(data)
        self.assertLessEqual(ctx.exception.offset, len("x + * 1"))
        self.assertIn("deligne.B.1.form.terms.0.coefficient", str(ctx.exception))

    def test_malformed_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "bad.json"
            path.write_text('{"manifold": ')
            with self.assertRaises(ParseError) as ctx:
                load_bundle(path)
            self.assertEqual(ctx.exception.offset, len('{"manifold": '))

    def test_name_defaults_to_file_stem(self):
        data = _f2_data()
        del data["name"]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "unnamed.json"
            path.write_text(json.dumps(data))
            self.assertEqual(load_bundle(path).name, "unnamed")


if __name__ == "__main__":
    unittest.main()
