"""Command-line interface tying the pipeline together.

Exit codes: 0 success, 1 usage error, 2 numerical failure (blow-up,
singular initialization, failed gradient check), 3 I/O error.  Diagnostics
go to stderr; results go to stdout or files.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import dataset_io, metrics
from .dataset_io import (
    BlurTask,
    DiffuseTask,
    IdentityTask,
    ImageFormatError,
    ManifestError,
    NoiseTask,
    ScheduleFormatError,
    load_image,
    load_manifest,
    load_schedule,
    make_synthetic,
    save_image,
    save_schedule,
    synthetic_scenes,
)
from .fields import GridMismatchError, derivatives, pad as pad_field, time_steps
from .forward_solver import BlowUpError, CoefficientSchedule, evolve
from .invariants import INVARIANT_COUNT, compute_invariants
from .objective import gradient_check
from .trainer import InitializationError, TrainerConfig, train

GRADCHECK_TOLERANCE = 1e-3
# Coefficient magnitude of the seeded random schedule used by gradcheck.
GRADCHECK_AMPLITUDE = 0.1


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pdelearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="learn a coefficient schedule from a manifest")
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--out", required=True, help="output schedule JSON path")
    p_train.add_argument("--dt", type=float, default=None,
                         help="time step (default: manifest value, else 0.02)")
    p_train.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p_train.add_argument("--mu", type=float, default=1e-4)
    p_train.add_argument("--max-iters", type=int, default=200)
    p_train.add_argument("--rel-tol", type=float, default=1e-5)
    p_train.add_argument("--grad-tol", type=float, default=1e-6)
    p_train.add_argument("--bracket-max", type=float, default=1.0)
    p_train.add_argument("--golden-tol", type=float, default=1e-3)
    p_train.add_argument("--restart-period", type=int, default=25)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_train.add_argument("--log", default=None, help="also write the training log here")

    p_apply = sub.add_parser("apply", help="run a learned schedule on an image")
    p_apply.add_argument("--coeffs", required=True)
    p_apply.add_argument("--input", required=True)
    p_apply.add_argument("--output", required=True)
    p_apply.add_argument("--pad", type=int, default=2)
    p_apply.add_argument("--dump-trajectory", default=None,
                         help="directory for per-step state images")

    p_eval = sub.add_parser("eval", help="report metrics between two images")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--metric", choices=("psnr", "f"), default="psnr")
    p_eval.add_argument("--alpha", type=float, default=2.0)
    p_eval.add_argument("--tau", type=float, default=0.5)

    p_grad = sub.add_parser("gradcheck", help="verify the adjoint gradient")
    p_grad.add_argument("--manifest", required=True)
    p_grad.add_argument("--dt", type=float, default=0.01)
    p_grad.add_argument("--eps", type=float, default=1e-5)
    p_grad.add_argument("--entries", type=int, default=50)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    p_synth = sub.add_parser("synth", help="generate a synthetic training task")
    p_synth.add_argument("--task", choices=("blur", "diffuse", "noise", "identity"),
                         required=True)
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--sources", nargs="*", default=None,
                         help="source image files")
    p_synth.add_argument("--generate", type=int, default=None,
                         help="generate this many procedural source scenes")
    p_synth.add_argument("--size", type=int, default=64,
                         help="edge length of generated scenes")
    p_synth.add_argument("--sigma", type=float, default=1.0, help="blur sigma")
    p_synth.add_argument("--coefficient", type=float, default=0.5,
                         help="diffusion coefficient")
    p_synth.add_argument("--duration", type=float, default=1.0,
                         help="diffusion duration")
    p_synth.add_argument("--noise-sigma", type=float, default=15.0 / 255.0)
    p_synth.add_argument("--exchange", action="store_true",
                         help="swap input/target roles (inverse problem)")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--dt", type=float, default=0.02)
    p_synth.add_argument("--pad", type=int, default=2)

    p_inv = sub.add_parser("invariants", help="dump invariant maps of an image")
    p_inv.add_argument("--input", required=True)
    p_inv.add_argument("--out", required=True, help="output directory")
    p_inv.add_argument("--which", default="all",
                       help="invariant index 0..16, or 'all'")
    p_inv.add_argument("--pad", type=int, default=2)
    return parser


def _cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    pairs = manifest.load_pairs()
    dt = args.dt if args.dt is not None else (manifest.dt or 0.02)
    config = TrainerConfig(
        dt=dt,
        lam=args.lam,
        mu=args.mu,
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
        grad_tol=args.grad_tol,
        bracket_max=args.bracket_max,
        golden_tol=args.golden_tol,
        restart_period=args.restart_period,
        seed=args.seed,
        threads=args.threads,
    )
    log_file = open(args.log, "w") if args.log else None
    try:
        def emit(line):
            print(line)
            if log_file:
                log_file.write(line + "\n")

        report = train(pairs, config, log=emit)
        emit(f"termination: {report.termination}")
    finally:
        if log_file:
            log_file.close()
    save_schedule(report.schedule, args.out)
    return 0


def _cmd_apply(args) -> int:
    sched = load_schedule(args.coeffs)
    image = load_image(args.input, halo=args.pad)
    traj = evolve(image, sched)
    save_image(traj.final(), args.output)
    if args.dump_trajectory:
        dump_dir = Path(args.dump_trajectory)
        dump_dir.mkdir(parents=True, exist_ok=True)
        digits = max(3, len(str(traj.steps)))
        for i, state in enumerate(traj.u_states):
            save_image(state, dump_dir / f"state_{i:0{digits}d}.png")
    return 0


def _cmd_eval(args) -> int:
    pred = load_image(args.pred)
    truth = load_image(args.truth)
    if args.metric == "psnr":
        value = metrics.psnr(pred, truth)
        print(f"psnr {metrics.format_psnr(value)}")
    else:
        mask_pred = metrics.threshold(pred, args.tau)
        mask_truth = metrics.threshold(truth, args.tau)
        value = metrics.f_measure(mask_truth, mask_pred, args.alpha)
        print(f"f_measure {value:.4f}")
    return 0


def random_bounded_schedule(dt: float, seed: int,
                            amplitude: float = GRADCHECK_AMPLITUDE) -> CoefficientSchedule:
    """Seeded uniform schedule in [-amplitude, amplitude] for checks."""
    rng = np.random.default_rng(seed)
    n = time_steps(dt)
    return CoefficientSchedule(
        dt,
        rng.uniform(-amplitude, amplitude, size=(n, INVARIANT_COUNT)),
        rng.uniform(-amplitude, amplitude, size=(n, INVARIANT_COUNT)),
    )


def _cmd_gradcheck(args) -> int:
    manifest = load_manifest(args.manifest)
    pairs = manifest.load_pairs()
    sched = random_bounded_schedule(args.dt, args.seed)
    worst, _ = gradient_check(
        pairs,
        sched,
        lam=1e-4,
        mu=1e-4,
        n_entries=args.entries,
        eps=args.eps,
        seed=args.seed,
        threads=args.threads,
    )
    print(f"worst_relative_error {worst:.6e}")
    if worst <= GRADCHECK_TOLERANCE:
        print("gradcheck PASS")
        return 0
    print("gradcheck FAIL", file=sys.stderr)
    return 2


def _cmd_synth(args) -> int:
    if args.generate is not None:
        sources = synthetic_scenes(args.generate, args.size, args.size, args.seed)
    elif args.sources:
        sources = [load_image(p, halo=args.pad).interior_copy() for p in args.sources]
    else:
        raise UsageError("synth needs --sources or --generate")
    task = {
        "blur": lambda: BlurTask(args.sigma),
        "diffuse": lambda: DiffuseTask(args.coefficient, args.duration, args.dt),
        "noise": lambda: NoiseTask(args.noise_sigma),
        "identity": lambda: IdentityTask(),
    }[args.task]()
    manifest_path = make_synthetic(
        task,
        sources,
        args.out,
        exchange=args.exchange,
        seed=args.seed,
        dt=args.dt,
        pad=args.pad,
    )
    print(str(manifest_path))
    return 0


def _cmd_invariants(args) -> int:
    image = load_image(args.input, halo=args.pad)
    ch = derivatives(image)
    stack = compute_invariants(ch, ch)
    if args.which == "all":
        indices = range(INVARIANT_COUNT)
    else:
        try:
            indices = [int(args.which)]
        except ValueError:
            raise UsageError(f"--which must be an index or 'all', got {args.which!r}")
        if not 0 <= indices[0] < INVARIANT_COUNT:
            raise UsageError(f"invariant index out of range: {indices[0]}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    p = image.pad
    for j in indices:
        inner = stack.data[j, p:-p, p:-p]
        lo, hi = float(inner.min()), float(inner.max())
        # Min/max rescale for inspection; constant maps render mid-gray.
        scaled = np.full_like(inner, 0.5) if hi == lo else (inner - lo) / (hi - lo)
        save_image(pad_field(scaled, p), out_dir / f"inv_{j:02d}.png")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "apply": _cmd_apply,
    "eval": _cmd_eval,
    "gradcheck": _cmd_gradcheck,
    "synth": _cmd_synth,
    "invariants": _cmd_invariants,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (ImageFormatError, ScheduleFormatError, ManifestError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 3
    except (BlowUpError, InitializationError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2
    except (GridMismatchError, ValueError) as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
