"""Command-line entry point: dataset generation, training, rendering,
fitting, gradient checking, and the sampling benchmark.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  Every command is
deterministic given its flags; omitted seeds mean 0, never wall clock.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys

import numpy as np

log = logging.getLogger(__name__)


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_dataset(args) -> int:
    from .synthscene.dataset import generate_dataset
    generate_dataset(args.count, args.width, args.height, args.seed, args.out,
                     force=args.force, id_dim=args.id_dim)
    print(f"wrote {args.count} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    from .training import TrainConfig, train
    raw = _load_json(args.config)
    if raw.get("version") != 1:
        raise ValueError("train config: expected \"version\": 1")
    config = TrainConfig.from_dict(raw)
    ckpt, metrics = train(config, resume_from=args.resume)
    print(f"checkpoint: {ckpt}")
    print(f"metrics: {metrics}")
    return 0


def cmd_render(args) -> int:
    from .generator import Generator
    from .synthscene import SceneLatents, write_depth, write_png
    gen = Generator.load(args.checkpoint)
    latents = SceneLatents.from_dict(_load_json(args.latents))
    image, alpha, d_mu, _ = gen.render(latents)
    write_png(args.out, image)
    print(f"rendered {args.out}")
    if args.depth:
        depth = np.where(alpha >= 0.5, d_mu, np.inf)
        write_depth(args.depth, depth)
        print(f"depth map {args.depth}")
    return 0


def cmd_fit(args) -> int:
    from .fitting import FitConfig, finetune_generator, fit_latents, init_latents
    from .generator import Generator
    from .synthscene import read_png, write_png
    gen = Generator.load(args.checkpoint)
    target = read_png(args.target)   # validate the input before touching out dir
    config = FitConfig(latent_steps=args.latent_steps,
                       finetune_steps=args.finetune_steps,
                       latent_lr=args.lr)
    base_hash = hashlib.sha256(open(args.checkpoint, "rb").read()).hexdigest()
    result = fit_latents(gen, target, config=config)
    tuned = None
    if args.finetune:
        result, tuned = finetune_generator(gen, target, result, config=config)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "latents.json"), "w", encoding="utf-8") as fh:
        json.dump(result.latents.to_dict(), fh, indent=1)
    write_png(os.path.join(args.out, "render.png"), result.image)
    with open(os.path.join(args.out, "trace.jsonl"), "w", encoding="utf-8") as fh:
        for rec in result.trace:
            fh.write(json.dumps(rec) + "\n")
    if tuned is not None:
        tuned.save(os.path.join(args.out, "finetuned.rfck"))
    after_hash = hashlib.sha256(open(args.checkpoint, "rb").read()).hexdigest()
    if base_hash != after_hash:
        raise RuntimeError("base checkpoint changed during fitting")
    print(f"fit bundle in {args.out} (best loss {result.best_loss:.6g})")
    return 0


def cmd_bench(args) -> int:
    from .benchmark import run_bench
    samplers = [t for t in args.samplers.split(",") if t.strip()]
    report = run_bench(args.scene, args.resolution, samplers)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1)
        fh.write("\n")
    for row in report["rows"]:
        tag = " (reference)" if row["reference"] else ""
        print(f"{row['sampler']:<22} evals {row['field_evals']:>10} "
              f"time {row['wall_time_per_image']:.3f}s "
              f"psnr {row['psnr_db']:6.2f} dB{tag}")
    return 0


def cmd_gradcheck(args) -> int:
    from .gradsuite import inject_fault, run_gradient_suite
    overrides = _load_json(args.config) if args.config else {}
    if args.inject_fault:
        inject_fault(args.inject_fault)
    results = run_gradient_suite(overrides)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name:<22} err {r.error:.3e} (tol {r.tolerance:.0e})")
    if failed:
        print(f"gradient check failed for: {', '.join(r.name for r in failed)}",
              file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="facerf",
                                description="depth-guided single-pass face "
                                            "radiance-field engine")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dataset", help="generate a labeled synthetic dataset")
    d.add_argument("--count", type=int, required=True)
    d.add_argument("--width", type=int, default=64)
    d.add_argument("--height", type=int, default=64)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.add_argument("--force", action="store_true")
    d.add_argument("--id-dim", type=int, default=64)
    d.set_defaults(func=cmd_dataset)

    t = sub.add_parser("train", help="train the generator on a dataset")
    t.add_argument("--config", required=True, help="JSON train config (version 1)")
    t.add_argument("--resume", default=None, help="checkpoint to resume from")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("render", help="render an image from latents")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--latents", required=True, help="JSON latents file")
    r.add_argument("--out", required=True, help="output PNG")
    r.add_argument("--depth", default=None, help="optional RFD1 depth output")
    r.set_defaults(func=cmd_render)

    f = sub.add_parser("fit", help="fit latents to a target image")
    f.add_argument("--checkpoint", required=True)
    f.add_argument("--target", required=True, help="target PNG")
    f.add_argument("--out", required=True, help="output bundle directory")
    f.add_argument("--finetune", action="store_true")
    f.add_argument("--latent-steps", type=int, default=300)
    f.add_argument("--finetune-steps", type=int, default=100)
    f.add_argument("--lr", type=float, default=0.03)
    f.set_defaults(func=cmd_fit)

    b = sub.add_parser("bench", help="benchmark sampling strategies on the "
                                     "oracle scene")
    b.add_argument("--scene", type=int, default=0, help="scene seed (0 = mean face)")
    b.add_argument("--resolution", type=int, default=64)
    b.add_argument("--samplers",
                   default="uniform:16,uniform:64,hierarchical:64+128,depth_guided:16")
    b.add_argument("--out", required=True, help="report JSON path")
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    g.add_argument("--config", default=None, help="JSON overrides (resolution, k)")
    g.add_argument("--inject-fault", default=None,
                   help="test fixture: corrupt one op's gradient rule")
    g.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
