"""Command-line front end.

Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 dimension guard.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .analysis import gate_report
from .compiler import GateSpec
from .grover import run_grover
from .integrator import DimensionError
from .propagator import write_trajectory_csv
from .verification import FAULTS, run_verification

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIMENSION = 0, 1, 2, 3

GATE_KINDS = ("rectangle", "parallelogram", "toffoli", "cnnot", "product-phase")

# values used when neither the command line nor a config file sets an option
DEFAULTS = {
    "l1": math.sqrt(math.pi / 2),
    "l2": math.sqrt(math.pi / 2),
    "mu": None,
    "theta": 0.9,
    "controls": 2,
    "K": 1,
    "omega": 1.0,
    "qubits": None,
    "osc": ["fock:0"],
    "cutoff": "auto",
    "out": None,
    "traj": None,
    "target": None,
    "iterations": "auto",
    "csv": None,
    "mode": "bus",
    "seed": 0,
    "cases": 50,
    "inject_fault": None,
}


class UsageError(ValueError):
    pass


def _cutoff(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cutoff must be 'auto' or an integer, got {text!r}")
    if value < 2:
        raise argparse.ArgumentTypeError("cutoff must be at least 2")
    return value


def _iterations(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"iterations must be 'auto' or an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("iterations must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oscbus", description="Oscillator-bus gate compiler and simulator.")
    parser.add_argument("--config", type=Path, help="JSON file with option values; command-line flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    gate = sub.add_parser("gate", help="compile and simulate a gate, write a report")
    gate.add_argument("kind", choices=GATE_KINDS)
    gate.add_argument("--l1", type=float, help="rectangle: first side impulse")
    gate.add_argument("--l2", type=float, help="rectangle: second side impulse")
    gate.add_argument("--mu", type=float, help="parallelogram / product-phase strength")
    gate.add_argument("--theta", type=float, help="parallelogram rotation angle")
    gate.add_argument("--controls", type=int, help="number of control qubits")
    gate.add_argument("--K", type=int, help="Toffoli period count")
    gate.add_argument("--omega", type=float, help="Toffoli pulse rate")
    gate.add_argument("--qubits", type=int, help="product-phase qubit count")
    gate.add_argument("--osc", action="append", help="oscillator input fock:k or thermal:nbar (repeatable)")
    gate.add_argument("--cutoff", type=_cutoff, help="Fock cutoff, 'auto' or an integer")
    gate.add_argument("--out", type=Path, help="report JSON path (default stdout)")
    gate.add_argument("--traj", type=Path, help="trajectory CSV path")

    grover = sub.add_parser("grover", help="run Grover search through the simulator")
    grover.add_argument("--qubits", type=int)
    grover.add_argument("--target", type=int)
    grover.add_argument("--iterations", type=_iterations)
    grover.add_argument("--osc", action="append")
    grover.add_argument("--mode", choices=("bus", "ideal"))
    grover.add_argument("--cutoff", type=_cutoff)
    grover.add_argument("--out", type=Path, help="summary JSON path (default stdout)")
    grover.add_argument("--csv", type=Path, help="per-iteration probability CSV path")

    verify = sub.add_parser("verify", help="randomized consistency and identity checks")
    verify.add_argument("--seed", type=int)
    verify.add_argument("--cases", type=int)
    verify.add_argument("--inject-fault", dest="inject_fault", choices=FAULTS, help="deliberately break the closed form")
    verify.add_argument("--out", type=Path)
    return parser


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    config = {}
    if args.config is not None:
        try:
            config = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
    for key, default in DEFAULTS.items():
        if not hasattr(args, key):
            continue
        if getattr(args, key) is None:
            setattr(args, key, config.get(key.replace("_", "-"), config.get(key, default)))
    return args


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text + "\n")
    else:
        path.write_text(text + "\n")


def _gate_spec(args) -> GateSpec:
    kind = args.kind
    if kind in ("cnnot", "parallelogram") and args.controls < 1:
        raise UsageError(f"--controls must be at least 1, got {args.controls}")
    if kind == "rectangle":
        return GateSpec(kind, {"l1": args.l1, "l2": args.l2})
    if kind == "parallelogram":
        return GateSpec(kind, {"mu": 0.7 if args.mu is None else args.mu, "theta": args.theta, "controls": args.controls})
    if kind == "toffoli":
        if args.K < 1:
            raise UsageError(f"--K must be at least 1, got {args.K}")
        return GateSpec(kind, {"K": args.K, "omega": args.omega})
    if kind == "cnnot":
        return GateSpec(kind, {"controls": args.controls})
    qubits = 2 if args.qubits is None else args.qubits
    if qubits < 1:
        raise UsageError("--qubits must be at least 1")
    return GateSpec(kind, {"mu": 0.3 if args.mu is None else args.mu, "qubits": qubits})


def cmd_gate(args) -> int:
    spec = _gate_spec(args)
    prog = spec.compile()
    report = gate_report(prog, spec.ideal(), args.osc, cutoff=args.cutoff)
    payload = {"gate": spec.kind, "params": dict(sorted(spec.params.items())), "report": report.to_dict()}
    _emit(json.dumps(payload, sort_keys=True, indent=2), args.out)
    if args.traj is not None:
        seqs = prog.sequences
        for i, seq in enumerate(seqs):
            path = args.traj if len(seqs) == 1 else args.traj.with_name(f"{args.traj.stem}_{i}{args.traj.suffix}")
            with open(path, "w", newline="") as fh:
                write_trajectory_csv(seq, fh)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_grover(args) -> int:
    if args.qubits is None or args.target is None:
        raise UsageError("grover needs --qubits and --target")
    if args.qubits < 1:
        raise UsageError("--qubits must be at least 1")
    if not 0 <= args.target < 2**args.qubits:
        raise UsageError(f"--target must lie in [0, {2**args.qubits - 1}]")
    if len(args.osc) != 1:
        raise UsageError("grover takes a single --osc input")
    result = run_grover(args.qubits, args.target, args.iterations, args.osc[0], mode=args.mode, cutoff=args.cutoff)
    _emit(result.to_json(), args.out)
    if args.csv is not None:
        with open(args.csv, "w", newline="") as fh:
            result.write_csv(fh)
    if result.report is not None and not result.report.passed:
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.cases < 1:
        raise UsageError(f"--cases must be at least 1, got {args.cases}")
    result = run_verification(args.seed, args.cases, args.inject_fault)
    _emit(json.dumps(result, sort_keys=True, indent=2), args.out)
    return EXIT_OK if result["passed"] else EXIT_FAIL


COMMANDS = {"gate": cmd_gate, "grover": cmd_grover, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        args = _resolve(args)
        return COMMANDS[args.command](args)
    except DimensionError as exc:
        print(f"oscbus: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except ValueError as exc:
        print(f"oscbus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
