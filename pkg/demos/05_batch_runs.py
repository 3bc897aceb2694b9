"""
Batch runs from JSON scenarios
==============================

The same machinery is reachable from the command line.  This script drives
the bundled scenarios through the CLI entry point and summarizes the reports;
the shell equivalent is ``cgauge run --config configs/qed_verify.json``.
"""

import json
import tempfile
from pathlib import Path

from cgauge.cli import main

here = Path(__file__).resolve().parents[1] / "configs"
out = Path(tempfile.mkdtemp(prefix="cgauge-"))

for cfg in ("qed_verify.json", "quantum_n2.json", "classical_orbit.json"):
    code = main(["run", "--config", str(here / cfg), "--out", str(out)])
    report = json.loads((out / Path(cfg).stem / "report.json").read_text())
    print(f"-> {cfg}: exit {code}, passed {report['passed']}, artifacts {sorted(p.name for p in (out / Path(cfg).stem).iterdir())}\n")

code = main(["compare", "--config", str(here / "compare_darwin_literal.json"), "--out", str(out)])
print("compare exit status", code)
