"""Command-line interface of the experiment harness.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical
failures.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .circuits import Circuit, run_circuit
from .experiments import (
    ConfigError,
    ExperimentConfig,
    aux_qubits,
    crk_distance_stats,
    delta_m,
    entropy_map_run,
    hilbert_fraction,
    run_sweep,
)
from .mps import TruncationPolicy, product_state
from .output import write_entropy_map, write_histogram, write_meta, write_record, write_rows
from .sampling import NumericalFailureError, sample_histogram


def _chi_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad chi list {text!r}") from exc


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _marked_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _add_common(parser: argparse.ArgumentParser, reps_default: int = 10) -> None:
    parser.add_argument("--chi", type=_chi_list, required=True,
                        help="comma-separated bond dimension sweep, strictly increasing")
    parser.add_argument("--reps", type=int, default=reps_default)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=None,
                        help="run directory for results.csv and meta.json")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--method", choices=("zipup", "variational"),
                        default="variational")
    parser.add_argument("--sweeps", type=int, default=2,
                        help="variational passes per gate application")
    parser.add_argument("--weight-cutoff", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chisim",
        description="Bond-dimension-limited MPS simulation of Fourier, search "
                    "and counting circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qft-fidelity", help="Fourier round-trip fidelity sweep")
    _add_common(p)
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--depth-layers", type=int, default=20)
    p.add_argument("--full-chi-prep", action="store_true",
                   help="prepare the random input at full bond dimension")
    p.add_argument("--no-final-swaps", action="store_true")

    p = sub.add_parser("aqft-fidelity",
                       help="round trip closed by the approximate transform")
    _add_common(p)
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--cutoff-l", type=int, required=True,
                   help="largest retained rotation index")
    p.add_argument("--depth-layers", type=int, default=20)
    p.add_argument("--full-chi-prep", action="store_true")
    p.add_argument("--no-final-swaps", action="store_true")

    p = sub.add_parser("grover", help="search fidelity sweep")
    _add_common(p)
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--num-marked", type=int, default=1)
    p.add_argument("--marked", type=_marked_list, default=(),
                   help="explicit comma-separated marked bitstrings")

    p = sub.add_parser("counting", help="marked-item counting accuracy sweep")
    _add_common(p)
    p.add_argument("--qubits", type=int, required=True,
                   help="search register size")
    p.add_argument("--n-top", type=int, required=True)
    p.add_argument("--n-read", type=int, default=0,
                   help="measured readout qubits (default n_top - 2)")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--num-marked", type=int, default=1)
    p.add_argument("--marked", type=_marked_list, default=())
    p.add_argument("--cutoff-l", type=int, default=None,
                   help="use the approximate inverse transform with this cutoff")
    p.add_argument("--extraction", choices=("mean", "argmax"), default="mean",
                   help="randomized-mean or top-two-outcome phase extraction")
    p.set_defaults(method="zipup")

    p = sub.add_parser("entropy-map", help="per-layer bond entropies of one run")
    _add_common(p, reps_default=1)
    p.add_argument("--pipeline", choices=("qft", "grover", "counting"),
                   default="qft")
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--cutoff-l", type=int, default=None)
    p.add_argument("--num-marked", type=int, default=1)
    p.add_argument("--marked", type=_marked_list, default=())
    p.add_argument("--n-top", type=int, default=0)
    p.add_argument("--depth-layers", type=int, default=20)
    p.add_argument("--no-final-swaps", action="store_true")

    p = sub.add_parser("crk-distance",
                       help="state distance induced by controlled rotations")
    p.add_argument("--k", type=_int_list, default=tuple(range(1, 9)))
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--measure", choices=("haar", "angles"), default="haar")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("sample", help="sample a serialized circuit's output state")
    p.add_argument("--circuit", type=Path, required=True)
    p.add_argument("--chi", type=_chi_list, required=True)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--sites", type=int, default=None,
                   help="sample only this many leading qubits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("zipup", "variational"),
                   default="variational")
    p.add_argument("--sweeps", type=int, default=2)
    p.add_argument("--weight-cutoff", type=float, default=1e-12)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("utils", help="closed-form helper quantities")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--n-read", type=int, default=None)
    p.add_argument("--qubits", type=int, default=None)
    p.add_argument("--chi", type=int, default=None)

    return parser


def _sweep_config(args: argparse.Namespace) -> ExperimentConfig:
    kind = args.command
    return ExperimentConfig(
        kind=kind,
        n_qubits=args.qubits,
        chi_list=args.chi,
        reps=args.reps,
        seed=args.seed,
        num_marked=getattr(args, "num_marked", 1),
        marked=getattr(args, "marked", ()),
        cutoff_l=getattr(args, "cutoff_l", None),
        n_top=getattr(args, "n_top", 0),
        n_read=getattr(args, "n_read", 0),
        n_samples=getattr(args, "samples", 10000),
        draws=getattr(args, "draws", 1000),
        weight_cutoff=args.weight_cutoff,
        method=args.method,
        sweeps=args.sweeps,
        workers=args.workers,
        depth_layers=getattr(args, "depth_layers", 20),
        full_chi_prep=getattr(args, "full_chi_prep", False),
        no_final_swaps=getattr(args, "no_final_swaps", False),
        pipeline=getattr(args, "pipeline", "qft"),
        extraction=getattr(args, "extraction", "mean"),
    )


def _print_summary(record) -> None:
    print(f"experiment: {record.experiment}  (wall {record.wall_time:.2f}s)")
    print("chi  mean  std")
    for chi, (mean, std) in record.summary().items():
        print(f"{chi}  {mean:.6g}  {std:.3g}")


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _sweep_config(args)
    record = run_sweep(cfg)
    _print_summary(record)
    if args.out is not None:
        extras = {}
        if cfg.kind == "counting":
            extras["counting"] = {
                "n": 2**cfg.n_qubits,
                "m": cfg.num_marked if not cfg.marked else len(cfg.marked),
                "n_read": cfg.n_read if cfg.n_read else cfg.n_top - 2,
                "n_top": cfg.n_top,
            }
        write_record(args.out, record, fmt=args.format, extras=extras)
        print(f"wrote {args.out}")
    return 0


def _cmd_entropy_map(args: argparse.Namespace) -> int:
    cfg = _sweep_config(args)
    start = time.perf_counter()
    emap, extras = entropy_map_run(cfg)
    if args.out is not None:
        write_entropy_map(args.out, emap)
        from dataclasses import asdict

        write_meta(args.out, {
            "experiment": "entropy-map",
            "config": asdict(cfg),
            "wall_time_s": time.perf_counter() - start,
            **extras,
        })
        print(f"wrote {args.out}")
    else:
        arr = emap.to_array()
        print(f"{arr.shape[0]} layers x {arr.shape[1]} bonds, "
              f"max entropy {arr.max():.4f} nats")
    return 0


def _cmd_crk(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    rows = []
    for k in args.k:
        dist_max, mean, median = crk_distance_stats(k, args.samples, rng,
                                                    measure=args.measure)
        rows.append(("crk-distance-max", k, 0, dist_max))
        rows.append(("crk-distance-mean", k, 0, mean))
        rows.append(("crk-distance-median", k, 0, median))
        print(f"k={k}  max={dist_max:.6g}  mean={mean:.6g}  median={median:.6g}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        rows.sort(key=lambda row: (row[1], row[0]))
        if args.format == "csv":
            write_rows(out / "results.csv", rows)
        else:
            from .output import write_rows_json

            write_rows_json(out / "results.json", rows)
        write_meta(out, {
            "experiment": "crk-distance",
            "config": {"k": list(args.k), "samples": args.samples,
                       "measure": args.measure, "seed": args.seed},
        })
        print(f"wrote {args.out}")
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    circuit = Circuit.from_text(Path(args.circuit).read_text())
    policy = TruncationPolicy(args.chi[0], weight_cutoff=args.weight_cutoff,
                              method=args.method, sweeps=args.sweeps)
    state = product_state([0] * circuit.n_qubits)
    state, _ = run_circuit(state, circuit, policy)
    rng = np.random.default_rng(args.seed)
    hist = sample_histogram(state, args.samples, rng, sites=args.sites)
    if args.out is not None:
        write_histogram(args.out, hist)
        write_meta(args.out, {
            "experiment": "sample",
            "config": {"circuit": str(args.circuit), "chi": args.chi[0],
                       "samples": args.samples, "sites": args.sites,
                       "seed": args.seed, "method": args.method,
                       "weight_cutoff": args.weight_cutoff},
        })
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(hist.to_csv())
    return 0


def _cmd_utils(args: argparse.Namespace) -> int:
    import json

    out = {}
    if args.epsilon is not None:
        out["aux_qubits"] = aux_qubits(args.epsilon)
    if args.m is not None and args.n is not None and args.n_read is not None:
        out["delta_m"] = delta_m(args.m, args.n, args.n_read)
    if args.qubits is not None and args.chi is not None:
        out["hilbert_fraction"] = hilbert_fraction(args.qubits, args.chi)
    if not out:
        raise ConfigError(
            "nothing to compute; pass --epsilon, (--m --n --n-read), or "
            "(--qubits --chi)")
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("qft-fidelity", "aqft-fidelity", "grover", "counting"):
            return _cmd_sweep(args)
        if args.command == "entropy-map":
            return _cmd_entropy_map(args)
        if args.command == "crk-distance":
            return _cmd_crk(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "utils":
            return _cmd_utils(args)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
