"""Train lanegcn++-lite, ganet_1 and ganet_m_3 on curved/intersection scenes and
compare minFDE6 on a held-out set, per seed and averaged.

    python3 scripts/run_ablation.py --steps 1000 --train 512 --seeds 0,1,2
"""
import argparse
import json
import logging
import time

from ganet.experiments import CURVED_KINDS, ablate, synthetic_set
from ganet.metrics import format_table


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--variants", default="lanegcn++-lite,ganet_1,ganet_m_3")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--train", type=int, default=512, help="number of training scenarios")
    p.add_argument("--eval", type=int, default=128, help="number of held-out scenarios")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out", help="write all per-run reports as JSON")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    variants = args.variants.split(",")
    seeds = [int(s) for s in args.seeds.split(",")]
    t0 = time.perf_counter()
    tr = synthetic_set(CURVED_KINDS, args.train, 10_000, "train")
    ev = synthetic_set(CURVED_KINDS, args.eval, 90_000, "heldout")
    res = ablate(variants, tr, ev, args.steps, seeds)

    print("minFDE6 per seed")
    for s in seeds:
        print(f"  seed {s}: " + "  ".join(f"{v} {res.metric(v, s):.3f}" for v in variants))
    print(format_table(res.mean_reports()))
    print(f"total time {time.perf_counter() - t0:.0f}s")
    if args.out:
        runs = {f"{v}/seed{s}": r.to_dict() for (v, s), r in res.reports.items()}
        with open(args.out, "w") as f:
            json.dump({"steps": args.steps, "train": args.train, "runs": runs}, f, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
