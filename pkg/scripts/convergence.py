"""Relaxation error traces for a sweep of damping factors.

    python3 scripts/convergence.py [--case spiderweb] [--betas 0.1,0.3,0.5,0.7,1.0]

Relaxes the case's flattened network once per beta, writes every trace to
``convergence_<case>.csv`` and plots them on a log scale.
"""

import argparse
import csv
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tensionnet.netgraph import load_network
from tensionnet.pipeline import CASE_PIPELINES, PipelineConfig, run_pipeline
from tensionnet.relax import RelaxConfig, gauss_seidel_relax


def flattened(case: str):
    with tempfile.TemporaryDirectory() as tmp:
        cfg = PipelineConfig.for_case(case, out_dir=tmp, stages=("form", "flatten"), preview=False)
        run_pipeline(cfg, echo=False)
        return load_network(Path(tmp) / "flat.json")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", default="spiderweb", choices=sorted(CASE_PIPELINES))
    ap.add_argument("--betas", default="0.1,0.3,0.5,0.7,1.0")
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    betas = [float(b) for b in args.betas.split(",")]
    net = flattened(args.case)

    traces = {}
    for beta in betas:
        cfg = RelaxConfig(beta=beta)
        out = gauss_seidel_relax(net, config=cfg)
        h = np.array(cfg.epsilon_history)
        traces[beta] = h
        rises = int(np.sum(np.diff(h) > 0))
        print(f"beta {beta:4.2f}: {out.meta['relax']['iterations']:6d} sweeps, "
              f"eps {h[0]:.4g} -> {h[-1]:.4g}, increases {rises}")

    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    with open(dest / f"convergence_{args.case}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "iteration", "epsilon"])
        for beta, h in traces.items():
            w.writerows((beta, k, repr(float(e))) for k, e in enumerate(h))

    fig, ax = plt.subplots(figsize=(6, 4))
    for beta, h in traces.items():
        ax.semilogy(np.arange(len(h)), h, label=f"beta = {beta:g}")
    ax.set_xlabel("sweep")
    ax.set_ylabel("relaxation error")
    ax.set_title(args.case)
    ax.legend()
    fig.tight_layout()
    fig.savefig(dest / f"convergence_{args.case}.png", dpi=150)
    print(f"-> {dest / f'convergence_{args.case}.csv'}, {dest / f'convergence_{args.case}.png'}")


if __name__ == "__main__":
    main()
