import argparse
import logging
import sys

from src.bundle import load_bundle
from src.constants import DEFAULT_FORMAT, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_SUITE, DEFAULT_TOL
from src.errors import BundleError
from src.suites import run_suite, suite_names
from src.symexpr import Oracle

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_LOAD_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Verify gerbe symmetries, Lie 2-algebras and butterflies on a geometry bundle.")
    parser.add_argument("bundle", nargs="?", help="Path to a bundle JSON file (see bundles/)")
    parser.add_argument("--suite", type=str, default=DEFAULT_SUITE, help=f"Suite to run (default: {DEFAULT_SUITE})")
    parser.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help=f"Sample points per comparison (default: {DEFAULT_SAMPLES})")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL, help=f"Relative tolerance (default: {DEFAULT_TOL})")
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED, help=f"Sampling seed, decimal or 0x-hex (default: {DEFAULT_SEED:#x})")
    parser.add_argument("--format", type=str, default=DEFAULT_FORMAT, choices=["text", "structured"], help="Plain text summary or one JSON record per check")
    parser.add_argument("--log-level", type=str, default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level (default: WARNING)")
    parser.add_argument("--timings", action="store_true", help="Include wall time per check in the report")
    parser.add_argument("--list-suites", action="store_true", help="Print the suite names and exit")
    return parser


def main(argv=None) -> int:
    """
    Load a bundle, run the requested suite and print the report.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")

    if args.list_suites:
        print("\n".join(suite_names()))
        return EXIT_OK
    if args.bundle is None:
        parser.error("a bundle path is required")
    if args.suite not in suite_names():
        print(f"error: unknown suite '{args.suite}' (choose from {', '.join(suite_names())})", file=sys.stderr)
        return EXIT_LOAD_ERROR

    try:
        bundle = load_bundle(args.bundle)
    except (OSError, BundleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LOAD_ERROR

    oracle = Oracle(samples=args.samples, tol=args.tol, seed=args.seed)
    report = run_suite(bundle, args.suite, oracle)
    if args.format == "structured":
        print(report.to_records(args.timings))
    else:
        print(report.to_text(args.timings))
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
