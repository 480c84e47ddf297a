"""How the spiderweb's scale factor and tension ratios move with the tension level.

    python3 scripts/web_sensitivity.py [--levels 0.01,0.02,0.03,0.04]

The web's absolute tension sets how much every thread is pre-stretched, and
with it how far relaxation must shrink the layout.
"""

import argparse
import tempfile

import numpy as np

from tensionnet.cases import role_tensions
from tensionnet.formfind import solve_form
from tensionnet.pipeline import PipelineConfig, run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="0.01,0.02,0.03,0.04")
    args = ap.parse_args()
    print(f"{'radial N':>9} {'scale':>8} {'sweeps':>7} {'anchor:frame:radial':>22} {'verify %':>9}")
    for level in (float(v) for v in args.levels.split(",")):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = PipelineConfig.for_case("spiderweb", out_dir=tmp, preview=False,
                                          case_params={"radial_tension": level})
            res = run_pipeline(cfg, echo=False)
        t = role_tensions(res.design, solve_form(res.design).tensions)
        ratio = np.array([t["anchor"], t["frame"], t["radial"]]) / t["radial"]
        s = res.summary
        print(f"{level:9.3f} {s['scale']:8.4f} {s['iterations']:7d} "
              f"{':'.join(f'{r:.2f}' for r in ratio):>22} {s['verify_score_percent']:9.4f}")


if __name__ == "__main__":
    main()
