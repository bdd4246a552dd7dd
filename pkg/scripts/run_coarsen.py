"""Coarsening from small random data with the energy-driven adaptive step controller.

    python3 scripts/run_coarsen.py --out results/coarsen [--paper-scale]
"""

import argparse

import numpy as np

from acbdf2.config import defaults
from acbdf2.experiments import cmd_coarsen


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/coarsen")
    ap.add_argument("--paper-scale", action="store_true")
    args = ap.parse_args()
    cfg = defaults("coarsen", args.paper_scale).update({"out": args.out})
    res = cmd_coarsen(cfg)
    tau_max = cfg.plan().adaptive.tau_max
    t, tau = res.series.array("t"), res.series.array("tau")
    late = t >= 0.5 * cfg.T
    print(f"tau_max {tau_max:.6g}; share of late steps within 0.1% of it: {np.mean(tau[late] >= 0.999 * tau_max):.1%}")


if __name__ == "__main__":
    main()
