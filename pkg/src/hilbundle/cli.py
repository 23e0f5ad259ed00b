"""``verify`` command line entry point.

Exit status: 0 when every selected suite passes, 1 when any fails,
2 when the bundle spec cannot be loaded or the report cannot be written.
"""

from __future__ import annotations

import argparse
import sys
import time

from .errors import HilbundleError, ParseError
from .report import emit_report
from .spec_io import load_spec
from .suites import ANCHOR_MANIFEST, THREADS_ENV, run_suites, select


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="verify",
        description="Run the identity suites against a bundle spec.",
        epilog=f"Set {THREADS_ENV} to control how many suites run concurrently.",
    )
    p.add_argument("spec", nargs="?", help="path to a BundleSpec YAML file")
    p.add_argument("--filter", metavar="PATTERN", help="glob on suite ids, comma separated (e.g. 'eq-2.2*')")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--seed", type=int, help="override the bundle spec seed")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    p.add_argument("--list-suites", action="store_true", help="print suite ids with anchors and the anchor manifest")
    return p


def _list_suites(pattern: str | None) -> None:
    for s in select(pattern):
        print(f"{s.id:44s} {s.anchor:10s} {s.kind}")
    print(f"anchor manifest ({len(ANCHOR_MANIFEST)}): {' '.join(ANCHOR_MANIFEST)}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_suites:
        _list_suites(args.filter)
        return 0
    if not args.spec:
        print("verify: a spec path is required", file=sys.stderr)
        return 2
    try:
        spec = load_spec(args.spec)
    except ParseError as exc:
        print(f"verify: {args.spec}: parse error: {exc}", file=sys.stderr)
        return 2
    except (HilbundleError, OSError) as exc:
        print(f"verify: {args.spec}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    reports = run_suites(spec, args.filter, seed=args.seed)
    meta = {
        "spec": spec.name,
        "seed": spec.seed if args.seed is None else args.seed,
        "elapsed": round(time.perf_counter() - start, 3),
    }
    try:
        emit_report(reports, args.format, stream=None if args.out else sys.stdout, path=args.out, meta=meta)
    except HilbundleError as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return 2
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
