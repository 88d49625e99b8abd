"""Command-line entry point.

Subcommands: train (fit the hybrid classifier and write a JSON run
artifact), eval (recompute metrics for an artifact on a training or holdout
slice), wigner (write a phase-space CSV), gates (unitarity report), and
appendix (discrete-variable readout demo).

Exit codes: 0 success, 2 bad flags, 3 data errors, 4 training divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, qubits
from .dataio import load_dataset, take_balanced, take_holdout
from .gates import gate_unitarity_report
from .qnn import (
    HybridModelConfig,
    TrainingDivergence,
    TrainingHistory,
    evaluate,
    train,
)
from .wigner import grid_to_csv, wigner_grid

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4

_LOSS_FLAGS = {"xent": "categorical_crossentropy", "mse": "mse"}
_MEASUREMENT_FLAGS = {"probability": "probability", "expectation": "expectation_x"}


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _workers(args) -> int:
    if getattr(args, "workers", None):
        return args.workers
    return os.cpu_count() or 1


def _cmd_train(args, argv) -> int:
    try:
        config = HybridModelConfig(
            modes=args.qumodes,
            cutoff=args.cutoff,
            layers=args.layers,
            classes=args.classes,
            samples=args.samples,
            epochs=args.epochs,
            measurement=_MEASUREMENT_FLAGS[args.measurement],
            loss=_LOSS_FLAGS[args.loss],
            lr=args.lr,
            seed=args.seed,
            batch_size=args.batch_size,
        )
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        dataset = load_dataset(args.mnist_dir)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))

    def show(row):
        print(f"epoch={row['epoch']} loss={row['loss']:.6f} acc={row['accuracy']:.4f}")

    try:
        history = train(config, dataset, workers=_workers(args), on_epoch=show)
    except TrainingDivergence as exc:
        return _fail(EXIT_DIVERGED, str(exc))
    except ValueError as exc:
        return _fail(EXIT_DATA, str(exc))
    artifact = {
        "tool": f"cvqnn {__version__}",
        "invocation": list(argv),
        "history": json.loads(history.to_json()),
    }
    Path(args.out).write_text(json.dumps(artifact, sort_keys=True, indent=2) + "\n")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_eval(args, argv) -> int:
    try:
        doc = json.loads(Path(args.artifact).read_text())
        history = TrainingHistory.from_json(json.dumps(doc["history"]))
        config = HybridModelConfig.from_dict(history.config)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return _fail(EXIT_DATA, f"unreadable artifact {args.artifact}: {exc}")
    try:
        dataset = load_dataset(args.mnist_dir)
        if args.slice == "train":
            subset = take_balanced(dataset, config.samples, config.classes, config.seed)
        else:
            subset = take_holdout(dataset, config.samples, config.classes, config.seed)
    except (OSError, ValueError) as exc:
        return _fail(EXIT_DATA, str(exc))
    try:
        loss, acc = evaluate(config, history.final_params, subset, workers=_workers(args))
    except TrainingDivergence as exc:
        return _fail(EXIT_DIVERGED, str(exc))
    print(f"acc={acc:.12f} loss={loss:.12f} slice={args.slice} count={len(subset)}")
    return EXIT_OK


def _cmd_wigner(args, argv) -> int:
    try:
        grid = wigner_grid(args.fock, args.range, args.points)
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    Path(args.out).write_text(grid_to_csv(grid))
    print(f"max_deviation={grid.max_closed_form_deviation:.6e}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_gates(args, argv) -> int:
    try:
        report = gate_unitarity_report(args.cutoff, trials=args.trials, seed=args.seed)
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    worst = 0.0
    for family, deviation in sorted(report["max_deviation"].items()):
        print(f"family={family} max_deviation={deviation:.3e}")
        worst = max(worst, deviation)
    passed = worst <= args.tolerance
    print(f"result={'pass' if passed else 'fail'} tolerance={args.tolerance:.0e}")
    return EXIT_OK if passed else EXIT_DATA


def _cmd_appendix(args, argv) -> int:
    rng = np.random.default_rng(args.seed)
    bits = rng.integers(0, 2, 16)
    t = rng.uniform(0.0, 2.0, 16)
    s = rng.integers(-3, 4, 16)
    readout = qubits.google_circuit_readout(bits, t, s)
    closed = qubits.google_readout_closed_form(s)
    fidelity = abs(np.vdot(closed, readout)) ** 2
    sim = qubits.google_circuit(bits, t, s)
    exact = qubits.google_expectation_closed_form(s)
    print(f"demo={args.demo} seed={args.seed}")
    print(f"phase_sum={int(np.sum(s))}")
    print(f"expectation_sim={sim:.12f}")
    print(f"expectation_closed={exact:.12f}")
    print(f"fidelity={fidelity:.15f}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvqnn",
        description="Photonic circuit simulator and hybrid classifier tools.",
    )
    parser.add_argument("--version", action="version", version=f"cvqnn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the hybrid classifier, write a run artifact")
    p.add_argument("--qumodes", type=int, default=2, help="qumode count m")
    p.add_argument("--cutoff", type=int, default=4, help="Fock cutoff n")
    p.add_argument("--layers", type=int, default=2, help="photonic layer count")
    p.add_argument("--samples", type=int, default=100, help="balanced training samples")
    p.add_argument("--classes", type=int, default=10, help="digit classes, 2..10")
    p.add_argument("--lr", type=float, default=0.05, help="learning rate")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--loss", choices=sorted(_LOSS_FLAGS), default="xent")
    p.add_argument(
        "--measurement", choices=sorted(_MEASUREMENT_FLAGS), default="probability"
    )
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--mnist-dir", required=True, help="directory with IDX files")
    p.add_argument("--out", default="run.json", help="artifact path")
    p.add_argument("--workers", type=int, default=None,
                   help="sample-level parallelism (default: available cores)")
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("eval", help="recompute metrics for a run artifact")
    p.add_argument("--artifact", required=True)
    p.add_argument("--mnist-dir", required=True)
    p.add_argument("--slice", choices=("train", "holdout"), default="holdout",
                   help="train reuses the training selection; holdout is its complement")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("wigner", help="write a Wigner phase-space CSV")
    p.add_argument("--fock", type=int, default=0, help="Fock level k")
    p.add_argument("--range", type=float, default=4.0, help="half-width of the grid")
    p.add_argument("--points", type=int, default=101, help="odd grid points per axis")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_wigner)

    p = sub.add_parser("gates", help="gate unitarity report")
    p.add_argument("--check", choices=("unitarity",), default="unitarity")
    p.add_argument("--cutoff", type=int, default=16)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(handler=_cmd_gates)

    p = sub.add_parser("appendix", help="discrete-variable readout demo")
    p.add_argument("--demo", choices=("google",), default="google")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_appendix)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    return args.handler(args, list(argv))


if __name__ == "__main__":
    sys.exit(main())
