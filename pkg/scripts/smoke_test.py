#!/usr/bin/env python3
"""
Smoke test for the gateforge command line.
- Validates the two-level NOT preset
- Runs a short optimization into a temporary directory
- Recomputes the residual profiles from the written field
- Runs the gradient check experiment
- Prints PASS/FAIL accordingly
"""
import json
import sys
import tempfile
from pathlib import Path

# Allow local imports
ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from gateforge.main import run_cli
from gateforge.settings import settings

MODEL = ROOT / "presets" / "not2.json"


def step(label: str, argv):
    code = run_cli(argv)
    if code != 0:
        print(f"FAIL: {label} exited with {code}")
        sys.exit(1)
    print(f"ok: {label}")


def main():
    with tempfile.TemporaryDirectory(prefix="gateforge_smoke_") as tmp:
        tmp = Path(tmp)
        settings.STORAGE_DIR = str(tmp / "storage")

        step("validate", ["-q", "validate", str(MODEL)])
        step("optimize", ["-q", "optimize", str(MODEL), "--max-iters", "5", "--seed", "0", "--out", str(tmp / "opt")])
        report = json.loads((tmp / "opt" / "report.json").read_text(encoding="utf-8"))
        print(f"Fidelity after {report['iterations']} iterations: {report['fidelity']:.6f}")

        step("residual", ["-q", "residual", str(MODEL), "--field", str(tmp / "opt" / "field.json"), "--out", str(tmp / "res")])
        step("experiment gradient_fd", ["-q", "experiment", "gradient_fd", "--out", str(tmp / "exp")])
        step("history", ["-q", "history", "--limit", "3"])

    print("PASS: command line pipeline completed")


if __name__ == "__main__":
    main()
