#!/usr/bin/env python3
"""Regenerate the golden report files under tests/golden/.

Runs the shipped mock batch through generate + evaluate in a scratch
directory, then renders every (table kind, format) combination into
tests/golden/.  The pipeline is deterministic, so these files only change
when the fixtures, the metrics, or the report layer change — and the test
suite treats any byte difference as a regression.

Run from the repository root::

    python scripts/regenerate_goldens.py
"""
from __future__ import annotations

import tempfile
from pathlib import Path

from lexglean import data_dir
from lexglean.cli import main as lexglean_main
from lexglean.reporting import FORMATS, TABLE_KINDS

EXTENSIONS = {"csv": "csv", "latex": "tex", "json": "json"}


def run(argv: list[str]) -> None:
    code = lexglean_main(argv)
    if code != 0:
        raise SystemExit(f"lexglean {' '.join(argv)} exited {code}")


def main() -> None:
    golden_dir = Path(__file__).resolve().parent.parent / "tests" / "golden"
    golden_dir.mkdir(parents=True, exist_ok=True)
    fixtures = data_dir() / "mock_fixtures.json"
    seeds = data_dir() / "seeds"

    with tempfile.TemporaryDirectory() as scratch:
        outputs = Path(scratch) / "outputs"
        results = Path(scratch) / "results"
        run(["generate", "--mock", str(fixtures), "--out", str(outputs)])
        run(
            [
                "evaluate",
                "--outputs", str(outputs),
                "--results", str(results),
                "--reference", f"hau={seeds / 'hau_Latn.txt'}",
                "--reference", f"fon={seeds / 'fon_Latn.txt'}",
            ]
        )
        for kind in TABLE_KINDS:
            for fmt in FORMATS:
                target = golden_dir / f"{kind}.{EXTENSIONS[fmt]}"
                run(
                    [
                        "report",
                        "--results", str(results),
                        "--kind", kind,
                        "--format", fmt,
                        "--out", str(target),
                    ]
                )
                print(f"wrote {target}")


if __name__ == "__main__":
    main()
