#!/usr/bin/env python3
"""Run every bundled experiment config into results/<name>/.

Equivalent to calling `milacsim experiment --config configs/<name>.toml
--out results/<name>` for each config; see docs/plotting.md for turning
the CSVs into figures.
"""

import sys
from pathlib import Path

from milacsim.cli import main

ROOT = Path(__file__).resolve().parents[1]


def run():
    status = 0
    for config in sorted((ROOT / "configs").glob("*.toml")):
        out = ROOT / "results" / config.stem
        print(f"== {config.name} -> {out}")
        status |= main(["experiment", "--config", str(config), "--out", str(out)])
    return status


if __name__ == "__main__":
    sys.exit(run())
