"""Command-line entry point: corpus generation, training, inference,
reconstruction, and evaluation as subcommands.

Exit codes: 0 success, 2 usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .dataio import FileFormatError

THREADS_ENV = "SINODIFF_NUM_THREADS"

# --profile ci shrinks the experiment so the whole pipeline runs in minutes.
CI_PROFILE = {
    "n_train": 64,
    "n_eval": 8,
    "size": 32,
    "angles": 45,
    "bins": 47,
    "epochs": 3,
}
FULL_PROFILE = {
    "n_train": 512,
    "n_eval": 32,
    "size": 64,
    "angles": 90,
    "bins": 95,
    "epochs": 30,
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _pick(args, profile_key: str, flag_value):
    profile = CI_PROFILE if args.profile == "ci" else FULL_PROFILE
    return profile[profile_key] if flag_value is None else flag_value


def _setup_torch_threads():
    import torch

    n = os.environ.get(THREADS_ENV)
    if n:
        torch.set_num_threads(int(n))


def _cmd_generate_data(args, parser) -> int:
    from .pipeline import generate_corpus

    n_train = _pick(args, "n_train", args.n_train)
    n_eval = _pick(args, "n_eval", args.n_eval)
    size = _pick(args, "size", args.size)
    angles = _pick(args, "angles", args.angles)
    bins = _pick(args, "bins", args.bins)
    if bins < size:
        parser.error(f"--bins ({bins}) must be >= --size ({size})")
    manifest = generate_corpus(
        args.out,
        n_train=n_train,
        n_eval=n_eval,
        size=size,
        n_angles=angles,
        n_bins=bins,
        missing_fraction=args.missing_fraction,
        seed=args.seed,
    )
    print(
        f"wrote {manifest.n_train} train + {manifest.n_eval} eval samples to {args.out} "
        f"(geometry {angles}x{bins}, image {size}, norm_scale {manifest.norm_scale:.6g})"
    )
    return 0


def _cmd_train(args, parser) -> int:
    _setup_torch_threads()
    from .diffusion.training import TrainConfig
    from .pipeline import train_on_corpus

    cfg = TrainConfig(
        epochs=_pick(args, "epochs", args.epochs),
        batch_size=args.batch,
        learning_rate=args.lr,
        seed=args.seed,
        T=args.timesteps,
    )
    _, log = train_on_corpus(args.data, args.out, cfg)
    print(f"wrote checkpoint {args.out} ({len(log)} logged steps, final loss {log[-1][1]:.5f})")
    return 0


def _cmd_infer(args, parser) -> int:
    _setup_torch_threads()
    from .pipeline import infer_on_corpus

    written = infer_on_corpus(
        args.model,
        args.data,
        args.out,
        split=args.split,
        n_steps=args.steps,
        seed=args.seed,
    )
    print(f"wrote predictions for {len(written)} samples to {args.out}")
    return 0


def _cmd_reconstruct(args, parser) -> int:
    from .pipeline import reconstruct_file

    reconstruct_file(
        args.sino,
        args.out,
        mask_path=args.mask,
        n_iterations=args.iters,
        image_size=args.size,
        n_subsets=args.subsets,
    )
    out = Path(args.out)
    if out.suffix != ".sino":
        out = out.with_name(out.name + ".sino")
    print(f"wrote {out} and {out.with_suffix('.pgm')}")
    return 0


def _cmd_evaluate(args, parser) -> int:
    from .pipeline import evaluate_corpus

    report = evaluate_corpus(args.data, args.pred, args.out, n_iterations=args.iters)
    sys.stdout.write(report.summary())
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinodiff",
        description=(
            "Simulate limited-angle sinogram acquisition, train a diffusion model "
            "to fill the missing wedge, and evaluate MLEM reconstructions."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write a deterministic phantom/sinogram corpus")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--n-train", type=_positive_int, default=None, help="train samples (512)")
    p.add_argument("--n-eval", type=_nonneg_int, default=None, help="eval samples (32)")
    p.add_argument("--size", type=_positive_int, default=None, help="image side length (64)")
    p.add_argument("--angles", type=_positive_int, default=None, help="projection angles (90)")
    p.add_argument("--bins", type=_positive_int, default=None, help="radial bins (95)")
    p.add_argument("--missing-fraction", type=_fraction, default=0.3333,
                   help="fraction of angles removed by each wedge mask (default 0.3333)")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--profile", choices=["ci"], default=None, help="shrunken defaults for CI")
    p.set_defaults(func=_cmd_generate_data)

    p = sub.add_parser("train", help="train the conditional denoiser on a corpus")
    p.add_argument("--data", required=True, help="corpus directory (from generate-data)")
    p.add_argument("--out", required=True, help="checkpoint path (e.g. model.sdif)")
    p.add_argument("--epochs", type=_positive_int, default=None, help="training epochs (30)")
    p.add_argument("--batch", type=_positive_int, default=8)
    p.add_argument("--lr", type=_positive_float, default=2e-4)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--timesteps", type=_positive_int, default=1000, help="diffusion T")
    p.add_argument("--profile", choices=["ci"], default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("infer", help="inpaint missing wedges for a corpus split")
    p.add_argument("--model", required=True, help="checkpoint from train")
    p.add_argument("--data", required=True, help="corpus directory")
    p.add_argument("--out", required=True, help="output directory for predictions")
    p.add_argument("--split", choices=["train", "eval"], default="eval")
    p.add_argument("--steps", type=_positive_int, default=50, help="sampling steps (50)")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.set_defaults(func=_cmd_infer)

    p = sub.add_parser("reconstruct", help="MLEM-reconstruct one sinogram file")
    p.add_argument("--sino", required=True, help="input .sino file")
    p.add_argument("--mask", default=None, help="optional mask record; excludes missing rows")
    p.add_argument("--iters", type=_positive_int, default=50)
    p.add_argument("--subsets", type=_positive_int, default=1,
                   help="ordered subsets per iteration (1 = plain MLEM)")
    p.add_argument("--size", type=_positive_int, default=None,
                   help="reconstruction grid side (default: bin count)")
    p.add_argument("--out", required=True, help="output path; writes .sino and .pgm")
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score LA vs inpainted reconstructions")
    p.add_argument("--data", required=True, help="corpus directory")
    p.add_argument("--pred", required=True, help="prediction directory (from infer)")
    p.add_argument("--out", required=True, help="report CSV path")
    p.add_argument("--iters", type=_positive_int, default=50, help="MLEM iterations")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
