"""Run the full pipeline on every built-in case and tabulate the results.

    python3 scripts/run_cases.py [--out results/cases]

Writes one artifact directory per case plus ``summary.csv``.
"""

import argparse
import csv
import time
from pathlib import Path

from tensionnet.pipeline import CASE_PIPELINES, PipelineConfig, run_pipeline

COLUMNS = ["case", "vertices", "edges", "crossings", "duplications", "scale", "iterations",
           "epsilon", "arcs", "paths", "z_hops", "filament_mm", "verify_score_percent",
           "verify_max_residual_N", "seconds"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/cases")
    args = ap.parse_args()
    out = Path(args.out)
    rows = []
    for case in sorted(CASE_PIPELINES):
        t0 = time.perf_counter()
        res = run_pipeline(PipelineConfig.for_case(case, out_dir=str(out / case)), echo=False)
        row = {"case": case, **res.summary, "seconds": round(time.perf_counter() - t0, 2)}
        rows.append({k: row.get(k, "") for k in COLUMNS})

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS)
        w.writeheader()
        w.writerows(rows)

    widths = [max(len(c), *(len(str(r[c])) for r in rows)) for c in COLUMNS]
    print("  ".join(c.rjust(n) for c, n in zip(COLUMNS, widths)))
    for r in rows:
        print("  ".join(str(r[c]).rjust(n) for c, n in zip(COLUMNS, widths)))
    print(f"-> {out / 'summary.csv'}")


if __name__ == "__main__":
    main()
