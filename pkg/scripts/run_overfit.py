"""Overfit ganet_m_3 on 32 synthetic scenarios and report training-set metrics.

    python3 scripts/run_overfit.py --steps 1000 --out overfit.pt
"""
import argparse
import logging

import numpy as np

from ganet.experiments import overfit
from ganet.metrics import format_table


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--scenarios", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", default="ganet_m_3")
    p.add_argument("--out", help="save the trained checkpoint here")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    res = overfit(args.steps, args.scenarios, args.seed, args.variant)
    curve = res.loss_curve
    print(format_table({args.variant: res.report}))
    print(f"loss: first-100 mean {np.mean(curve[:100]):.3f}, last-100 mean {np.mean(curve[-100:]):.3f}")
    print(f"train+eval time {res.seconds:.0f}s")
    if args.out:
        res.checkpoint.save(args.out)


if __name__ == "__main__":
    main()
