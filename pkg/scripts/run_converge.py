"""Temporal convergence study: both mobilities, uniform and perturbed meshes.

Writes one table per (mesh, mobility) under OUT/<mode>_<mobility>/table.csv.

    python3 scripts/run_converge.py --out results/converge [--paper-scale]
"""

import argparse
from pathlib import Path

from acbdf2.config import defaults
from acbdf2.experiments import cmd_converge


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/converge")
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for mode in ("uniform", "perturbed"):
        for mobility in ("constant", "degenerate"):
            out = Path(args.out) / f"{mode}_{mobility}"
            print(f"== {mode} steps, {mobility} mobility")
            cfg = defaults("converge", args.paper_scale).update(
                {"mode": mode, "mobility": mobility, "seed": args.seed, "out": str(out)}
            )
            cmd_converge(cfg)


if __name__ == "__main__":
    main()
