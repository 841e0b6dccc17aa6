"""plots CLI: render figures from run directories.

    plots render --spec figure.json
    plots all --run-dir <dir> [--format png|svg]

`render` draws exactly the figure described by a spec file.  `all` looks at
a run directory's meta.json and renders every default figure that applies
to its experiment kind, next to the data files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .figures import FigureSpec, MissingColumnError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plots",
                                     description="Render figures from chisim runs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render one figure from a spec file")
    p.add_argument("--spec", type=Path, required=True)

    p = sub.add_parser("all", help="render the default figures of a run directory")
    p.add_argument("--run-dir", type=Path, required=True)
    p.add_argument("--format", choices=("png", "svg"), default="png")
    return parser


def default_specs(run_dir: Path, fmt: str) -> list[FigureSpec]:
    meta_path = run_dir / "meta.json"
    if not meta_path.exists():
        raise FileNotFoundError(f"{run_dir} has no meta.json")
    meta = json.loads(meta_path.read_text())
    experiment = meta.get("experiment", "")
    specs: list[FigureSpec] = []

    def add(kind: str, name: str, inputs: list[dict], **kw) -> None:
        specs.append(FigureSpec(kind=kind, inputs=inputs,
                                output=str(run_dir / f"{name}.{fmt}"), **kw))

    results = run_dir / "results.csv"
    if experiment in ("qft-fidelity", "aqft-fidelity", "grover") and results.exists():
        add("fidelity-curves", "fidelity", [{"path": str(results)}],
            title=experiment, xscale="log")
    if experiment == "counting" and results.exists():
        add("mhat-convergence", "mhat", [{"path": str(results)}],
            title="counting accuracy", xscale="log")
    if experiment == "crk-distance" and results.exists():
        add("crk-distance", "crk", [{"path": str(results)}],
            title="controlled-rotation distance")
    entropy = run_dir / "entropy_map.csv"
    if entropy.exists():
        add("entropy-heatmap", "entropy_map",
            [{"path": str(entropy),
              "phase_markers": meta.get("phase_markers")}],
            title=meta.get("pipeline", ""))
    histogram = run_dir / "histogram.csv"
    if histogram.exists():
        add("counting-histogram", "histogram", [{"path": str(histogram)}])
    if not specs:
        raise ValueError(f"nothing to render for experiment {experiment!r} "
                         f"in {run_dir}")
    return specs


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "render":
            path = render(FigureSpec.from_json(args.spec))
            print(f"wrote {path}")
            return 0
        if args.command == "all":
            for spec in default_specs(args.run_dir, args.format):
                path = render(spec)
                print(f"wrote {path}")
            return 0
    except MissingColumnError as exc:
        print(f"bad input data: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
