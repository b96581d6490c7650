#!/usr/bin/env python3
"""End-to-end demo: generate the bundled replica tree, scan it, verify it.

Writes the fixture under --out (default ./out/replica), prints the text
compliance report and the measurement timeline, checks the scan against
the generation manifest, and exits with the scan gate code (2 = violations
found, which is the expected outcome for this tree).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from phiscan.fixtures import (
    generate_fixture,
    paper_replica_spec,
    render_manifest,
    verify_scan_against_manifest,
)
from phiscan.phi import INFORMATIONAL_VIOLATIONS
from phiscan.report import build_timeline, render_report, render_timeline
from phiscan.scanner import scan_evidence

CLOCK = "2020-01-01T00:00:00Z"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/replica", help="fixture output directory")
    parser.add_argument("--no-redact", action="store_true")
    args = parser.parse_args()

    out = Path(args.out)
    manifest = generate_fixture(paper_replica_spec(), out)
    Path(str(out) + ".manifest.json").write_bytes(render_manifest(manifest))
    print(f"generated fixture: {out} ({len(manifest.files)} files)", file=sys.stderr)

    result = scan_evidence(out, fixed_clock=CLOCK, redact=not args.no_redact)
    sys.stdout.write(render_report(result.report, "text").decode())
    print()
    print("MEASUREMENT TIMELINE")
    sys.stdout.write(render_timeline(build_timeline(list(result.records)), "text").decode())

    verdict = verify_scan_against_manifest(manifest, result.report)
    print(f"\nmanifest verification: {'pass' if verdict.ok else 'FAIL'}", file=sys.stderr)
    for mismatch in verdict.mismatches:
        print(f"  {mismatch}", file=sys.stderr)
    if not verdict.ok:
        return 1
    gating = [v for vs in result.report.violations.values()
              for v in vs if v.kind not in INFORMATIONAL_VIOLATIONS]
    return 2 if gating else 0


if __name__ == "__main__":
    sys.exit(main())
