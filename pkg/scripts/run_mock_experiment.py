#!/usr/bin/env python3
"""End-to-end offline demo: generate, evaluate, filter, report on mock data.

Runs the full shipped batch (2 models x 2 languages x 150 prompts) against
the canned fixtures, scores it with the built-in language identifier,
exports the usable corpus, and renders one table of every kind into
``<workdir>/reports``.  No network access and no API keys involved.

Usage::

    python scripts/run_mock_experiment.py --workdir /tmp/lexglean-demo
"""
from __future__ import annotations

import argparse
from pathlib import Path

from lexglean import data_dir
from lexglean.cli import main as lexglean_main
from lexglean.reporting import TABLE_KINDS


def run(argv: list[str]) -> None:
    print(f"$ lexglean {' '.join(argv)}")
    code = lexglean_main(argv)
    if code != 0:
        raise SystemExit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", type=Path, default=Path("mock-experiment"))
    args = parser.parse_args()

    workdir = args.workdir
    fixtures = data_dir() / "mock_fixtures.json"
    hau_reference = data_dir() / "seeds" / "hau_Latn.txt"

    run(["generate", "--mock", str(fixtures), "--out", str(workdir / "outputs")])
    run(
        [
            "evaluate",
            "--outputs", str(workdir / "outputs"),
            "--results", str(workdir / "results"),
            "--reference", f"hau={hau_reference}",
        ]
    )
    run(
        [
            "filter",
            "--results", str(workdir / "results"),
            "--outputs", str(workdir / "outputs"),
            "--out", str(workdir / "corpus"),
        ]
    )
    for kind in TABLE_KINDS:
        run(
            [
                "report",
                "--results", str(workdir / "results"),
                "--kind", kind,
                "--format", "csv",
                "--out", str(workdir / "reports" / f"{kind}.csv"),
            ]
        )
    print(f"done; everything under {workdir}/")


if __name__ == "__main__":
    main()
