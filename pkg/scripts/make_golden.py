"""Regenerate the golden report fixture used by the integration tests.

Run from the repository root after an intentional pipeline behavior
change, then review the diff:

    python3 scripts/make_golden.py
"""

import json
import os

from loraskg import RunConfig, calibrated_config, run_pipeline
from loraskg.runner import build_report

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "golden", "report_small.json")


def main():
    config = RunConfig(sim=calibrated_config(n_samples=1280, seed=3))
    report = build_report(config, run_pipeline(config))
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as f:
        f.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"wrote {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
