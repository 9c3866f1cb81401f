"""Command-line entry point: gen-data, train, eval, visualize, ablate."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import MODEL_VARIANTS, ExperimentConfig, apply_overrides
from .metrics import format_table
from .synth import ScenarioFormatError

TEMPLATES = ("straight", "arc", "merge", "T-intersection", "crossroads")


def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in _csv(text)]


def _kv(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ganet", description="Goal-area conditioned motion forecasting on synthetic scenes.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate synthetic scenario files and a manifest")
    g.add_argument("--template", type=_csv, default=list(TEMPLATES),
                   help=f"comma-separated template kinds from {', '.join(TEMPLATES)}")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, default=Path("data"))
    g.add_argument("--val-fraction", type=float, default=0.0)

    def config_args(q):
        q.add_argument("--config", type=Path, help="experiment config JSON")
        q.add_argument("--variant", choices=MODEL_VARIANTS, help="model preset (replaces the config's model section)")
        q.add_argument("--manifest", type=Path)
        q.add_argument("--steps", type=int)
        q.add_argument("--batch-size", type=int)
        q.add_argument("--seed", type=int)
        q.add_argument("--set", type=_kv, action="append", default=[], metavar="KEY=VALUE",
                       help="dotted config override, e.g. model.backbone.d_hidden=32")

    t = sub.add_parser("train", help="train a model and write a checkpoint")
    config_args(t)
    t.add_argument("--out", type=Path, default=Path("checkpoint.pt"))
    t.add_argument("--resume", type=Path, help="checkpoint to continue")
    t.add_argument("--log-every", type=int, default=100)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a manifest split")
    e.add_argument("--checkpoint", type=Path, required=True)
    e.add_argument("--manifest", type=Path, help="defaults to the manifest stored in the checkpoint config")
    e.add_argument("--split", default="val")
    e.add_argument("--ks", type=_ints)
    e.add_argument("--out", type=Path, help="write the metric report JSON here")

    v = sub.add_parser("visualize", help="plot a checkpoint's forecast for one scenario file")
    v.add_argument("--checkpoint", type=Path, required=True)
    v.add_argument("--scenario", type=Path, required=True)
    v.add_argument("--out", type=Path, required=True)

    a = sub.add_parser("ablate", help="train and evaluate several variants, print a comparison table")
    a.add_argument("--variants", type=_csv, required=True)
    a.add_argument("--manifest", type=Path, required=True)
    a.add_argument("--steps", type=int)
    a.add_argument("--seeds", type=_ints, default=[0])
    a.add_argument("--config", type=Path, help="base config for loss and optimizer settings")
    a.add_argument("--set", type=_kv, action="append", default=[], metavar="KEY=VALUE")
    a.add_argument("--out", type=Path, help="write per-variant reports JSON here")
    return p


def _flag_overrides(args) -> dict:
    over = dict(args.set)
    for flag, key in (("manifest", "manifest"), ("steps", "optim.steps"),
                      ("batch_size", "optim.batch_size"), ("seed", "seed")):
        val = getattr(args, flag)
        if val is not None:
            over[key] = str(val) if flag == "manifest" else val
    return over


def resolve_config(args, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Config file (or ``base``, or defaults), then --variant, then flag overrides."""
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = base if base is not None else ExperimentConfig()
    if args.variant:
        cfg.model = ExperimentConfig.for_variant(args.variant).model
    over = _flag_overrides(args)
    return apply_overrides(cfg, over) if over else cfg


def cmd_gen_data(args) -> int:
    from .synth import generate_dataset

    bad = [k for k in args.template if k not in TEMPLATES]
    if bad:
        raise ValueError(f"unknown template {bad[0]!r}; choose from {', '.join(TEMPLATES)}")
    if args.count < 1:
        raise ValueError("--count must be >= 1")
    m = generate_dataset(args.out, args.template, args.count, args.seed, args.val_fraction)
    print(f"wrote {len(m.entries)} scenarios and {args.out / 'manifest.json'}")
    return 0


def cmd_train(args) -> int:
    from .train import Checkpoint, init_checkpoint, train

    resume = Checkpoint.load(args.resume) if args.resume else None
    cfg = resolve_config(args, resume.experiment if resume is not None else None)
    if resume is None and cfg.optim.steps == 0:
        ckpt = init_checkpoint(cfg)
    else:
        ckpt = train(cfg, resume=resume, log_every=args.log_every)
    if ckpt is resume and args.out == args.resume:
        print(f"{args.out}: already at step {ckpt.step}, unchanged")
        return 0
    ckpt.save(args.out)
    tail = f", final loss {ckpt.loss_curve[-1]:.4f}" if ckpt.loss_curve else ""
    print(f"wrote {args.out} (step {ckpt.step}{tail})")
    return 0


def cmd_eval(args) -> int:
    from .train import Checkpoint, evaluate, load_split, prepare

    ckpt = Checkpoint.load(args.checkpoint)
    cfg = ckpt.experiment
    manifest = args.manifest or cfg.manifest
    if manifest is None:
        raise ValueError("no manifest given and none stored in the checkpoint")
    data = prepare(load_split(manifest, args.split), cfg)
    rep = evaluate(ckpt, data, ks=args.ks)
    if args.out:
        args.out.write_text(rep.to_json())
    cols = [(n, k) for k in sorted(rep.ks, reverse=True) for n in ("minFDE", "minADE", "MR", "brier_minFDE")]
    print(format_table({cfg.model.variant: rep}, cols))
    return 0


def cmd_visualize(args) -> int:
    from .scene import normalize_scenario
    from .synth import load_scenario
    from .train import Checkpoint, prepare
    from .viz import visualize

    ckpt = Checkpoint.load(args.checkpoint)
    s = load_scenario(args.scenario)
    tensors = prepare([s], ckpt.experiment)[0]
    out = visualize(ckpt.build_model(), normalize_scenario(s), tensors, args.out)
    print(f"wrote {out}")
    return 0


def cmd_ablate(args) -> int:
    from .experiments import ablate
    from .train import load_split

    bad = [v for v in args.variants if v not in MODEL_VARIANTS]
    if bad:
        raise ValueError(f"unknown variant {bad[0]!r}; choose from {', '.join(MODEL_VARIANTS)}")
    base = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    steps = args.steps if args.steps is not None else base.optim.steps
    tr = load_split(args.manifest, "train")
    ev = load_split(args.manifest, "val")
    res = ablate(args.variants, tr, ev, steps, args.seeds, base, dict(args.set))
    rows = res.mean_reports()
    if args.out:
        body = {"seeds": res.seeds, "steps": steps,
                "runs": {f"{v}/seed{s}": r.to_dict() for (v, s), r in res.reports.items()}}
        args.out.write_text(json.dumps(body, indent=2, sort_keys=True))
    print(format_table(rows))
    return 0


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "eval": cmd_eval,
            "visualize": cmd_visualize, "ablate": cmd_ablate}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ValueError, OSError, ScenarioFormatError, KeyError) as e:
        print(f"ganet {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
