#!/usr/bin/env python3
"""Regenerate the frozen golden reports under tests/golden/.

Only run this after an intentional, documented report-format change; the
golden acceptance test exists to catch accidental output drift. The CLI
invocations here must stay in lockstep with GOLDEN_RUNS in
tests/test_acceptance.py.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))

from test_acceptance import GOLDEN_RUNS  # noqa: E402

from uxcharge.cli import main  # noqa: E402

GOLDEN = pathlib.Path(__file__).resolve().parents[1] / "tests" / "golden"


def regenerate() -> None:
    for name, flags in GOLDEN_RUNS:
        scenario = GOLDEN / f"{name}.json"
        frozen = GOLDEN / f"{name}.report.json"
        code = main(["simulate", str(scenario), *flags, "-o", str(frozen)])
        if code != 0:
            raise SystemExit(f"simulate failed for {name} with exit code {code}")
        print(f"wrote {frozen}")


if __name__ == "__main__":
    regenerate()
