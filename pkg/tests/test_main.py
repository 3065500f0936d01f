import io
import json
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

from main import EXIT_FAIL, EXIT_LOAD_ERROR, EXIT_OK, main
from src.suites import suite_names

BUNDLES = Path(__file__).resolve().parents[1] / "bundles"


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestCommandLine(unittest.TestCase):

    def test_passing_suite(self):
        code, out, _ = _run(str(BUNDLES / "f2.json"), "--suite", "deligne", "--samples", "5")
        self.assertEqual(code, EXIT_OK, out)
        self.assertIn("deligne.cocycle", out)

    def test_failing_suite(self):
        code, out, _ = _run(str(BUNDLES / "broken_curving.json"), "--suite", "deligne", "--samples", "5")
        self.assertEqual(code, EXIT_FAIL)
        self.assertIn("curving[0,1]", out)

    def test_missing_bundle(self):
        code, _, err = _run(str(BUNDLES / "no_such_bundle.json"))
        self.assertEqual(code, EXIT_LOAD_ERROR)
        self.assertIn("error", err)

    def test_unknown_suite(self):
        code, _, err = _run(str(BUNDLES / "f2.json"), "--suite", "everything")
        self.assertEqual(code, EXIT_LOAD_ERROR)
        self.assertIn("unknown suite", err)

    def test_list_suites(self):
        code, out, _ = _run("--list-suites")
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.split(), suite_names())

    def test_structured_records(self):
        code, out, _ = _run(str(BUNDLES / "f2.json"), "--suite", "deligne", "--samples", "5",
                            "--format", "structured", "--timings", "--seed", "0x10")
        self.assertEqual(code, EXIT_OK)
        records = [json.loads(line) for line in out.splitlines()]
        self.assertTrue(records)
        for record in records:
            self.assertEqual(set(record), {"check_id", "status", "max_residual", "witness", "detail", "wall_time"})
            self.assertIn(record["status"], ("pass", "skip"))

    def test_bundle_required(self):
        with redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as ctx:
            main([])
        self.assertEqual(ctx.exception.code, 2)


if __name__ == "__main__":
    unittest.main()
