"""Figure builders over run-directory CSV files.

Every builder takes a :class:`FigureSpec`, reads the referenced delimited
files, and returns a matplotlib Figure; :func:`render` additionally writes
it to the spec's output path.  Inputs are never modified, and rendering is
deterministic: a fixed svg hash salt and stripped date metadata make
repeated svg exports byte-identical under fixed library versions.

Figure kinds:
    fidelity-curves     mean value vs chi with +-1 std ribbons, one line
                        per input results.csv
    required-chi        smallest swept chi reaching each target fidelity,
                        as a function of a per-input x value
    entropy-heatmap     layer x bond heatmap of entropy_map.csv with dashed
                        phase-marker lines
    counting-histogram  readout histogram with the true eigenphase bins
                        marked in red
    crk-distance        max/mean/median rotation distance vs k
    mhat-convergence    estimated/true marked-item ratio vs chi
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "simplots"

KINDS = ("fidelity-curves", "required-chi", "entropy-heatmap",
         "counting-histogram", "crk-distance", "mhat-convergence")


class MissingColumnError(ValueError):
    """A referenced CSV lacks a required column."""


@dataclass
class FigureSpec:
    """Declarative description of one figure."""

    kind: str
    inputs: list[dict]
    output: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    xscale: str = "linear"
    yscale: str = "linear"
    targets: tuple[float, ...] = (0.9, 0.99)
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, path: str | Path) -> "FigureSpec":
        payload = json.loads(Path(path).read_text())
        return cls.from_dict(payload, base=Path(path).parent)

    @classmethod
    def from_dict(cls, payload: dict, base: Path | None = None) -> "FigureSpec":
        payload = dict(payload)
        kind = payload.pop("kind")
        if kind not in KINDS:
            raise ValueError(f"unknown figure kind {kind!r}; expected one of {KINDS}")
        inputs = payload.pop("inputs")
        if isinstance(inputs, dict):
            inputs = [inputs]
        output = payload.pop("output")
        if base is not None:
            inputs = [{**item, "path": str(base / item["path"])} for item in inputs]
            output = str(base / output)
        known = {"title", "xlabel", "ylabel", "xscale", "yscale", "targets"}
        kwargs = {key: payload.pop(key) for key in list(payload) if key in known}
        if "targets" in kwargs:
            kwargs["targets"] = tuple(kwargs["targets"])
        return cls(kind=kind, inputs=inputs, output=output, extra=payload, **kwargs)


def read_csv_columns(path: str | Path, required: tuple[str, ...]) -> dict[str, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise MissingColumnError(
                    f"{path}: missing required column {column!r} "
                    f"(found {header})")
        rows = list(reader)
    return {column: [row[column] for row in rows] for column in header}


def load_sweep(path: str | Path) -> dict[int, tuple[float, float]]:
    """results.csv -> {chi: (mean, std)} aggregated over repetitions."""
    data = read_csv_columns(path, ("experiment", "chi", "rep", "value"))
    by_chi: dict[int, list[float]] = {}
    for chi, value in zip(data["chi"], data["value"]):
        by_chi.setdefault(int(chi), []).append(float(value))
    return {chi: (float(np.mean(vals)), float(np.std(vals)))
            for chi, vals in sorted(by_chi.items())}


def _new_axes(spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(5.0, 3.4), constrained_layout=True)
    if spec.title:
        ax.set_title(spec.title)
    ax.set_xscale(spec.xscale)
    ax.set_yscale(spec.yscale)
    return fig, ax


def _finish(ax, spec: FigureSpec, default_x: str, default_y: str) -> None:
    ax.set_xlabel(spec.xlabel or default_x)
    ax.set_ylabel(spec.ylabel or default_y)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)


def fidelity_curves(spec: FigureSpec):
    fig, ax = _new_axes(spec)
    for item in spec.inputs:
        sweep = load_sweep(item["path"])
        chis = np.array(sorted(sweep))
        means = np.array([sweep[c][0] for c in chis])
        stds = np.array([sweep[c][1] for c in chis])
        line, = ax.plot(chis, means, marker="o", ms=3, label=item.get("label"))
        ax.fill_between(chis, means - stds, means + stds,
                        color=line.get_color(), alpha=0.25, linewidth=0)
    if any(item.get("label") for item in spec.inputs):
        ax.legend(frameon=False)
    _finish(ax, spec, "bond dimension", "fidelity")
    return fig


def required_chi_curves(spec: FigureSpec):
    fig, ax = _new_axes(spec)
    xs, sweeps = [], []
    for index, item in enumerate(spec.inputs):
        xs.append(float(item.get("x", index)))
        sweeps.append(load_sweep(item["path"]))
    order = np.argsort(xs)
    for target in spec.targets:
        ys = []
        for i in order:
            reached = [chi for chi, (mean, _) in sweeps[i].items() if mean >= target]
            ys.append(min(reached) if reached else np.nan)
        ax.plot(np.array(xs)[order], ys, marker="s", ms=3, label=f"f >= {target}")
    ax.legend(frameon=False)
    _finish(ax, spec, "parameter", "required bond dimension")
    return fig


def entropy_heatmap(spec: FigureSpec):
    item = spec.inputs[0]
    data = read_csv_columns(item["path"], ("layer", "bond", "entropy"))
    layers = np.array([int(v) for v in data["layer"]])
    bonds = np.array([int(v) for v in data["bond"]])
    values = np.array([float(v) for v in data["entropy"]])
    n_layers, n_bonds = layers.max() + 1, bonds.max() + 1
    grid = np.zeros((n_layers, n_bonds))
    grid[layers, bonds] = values
    # shared scale across panels: the theoretical ceiling of the center bond
    n_qubits = n_bonds + 1
    vmax = (n_qubits // 2) * math.log(2.0)

    fig, ax = plt.subplots(figsize=(6.0, 3.2), constrained_layout=True)
    image = ax.imshow(grid.T, aspect="auto", origin="lower", cmap="magma",
                      vmin=0.0, vmax=vmax,
                      extent=(0, n_layers - 1, 0.5, n_bonds + 0.5))
    fig.colorbar(image, ax=ax, label="entropy (nats)")
    markers = item.get("phase_markers")
    if markers is None:
        meta_path = Path(item["path"]).parent / "meta.json"
        if meta_path.exists():
            markers = json.loads(meta_path.read_text()).get("phase_markers", [])
    for layer_index, name in markers or []:
        ax.axvline(layer_index, color="white", linestyle="--", linewidth=0.8)
        ax.text(layer_index, n_bonds + 0.4, str(name), color="black",
                fontsize=7, ha="left", va="bottom")
    if spec.title:
        ax.set_title(spec.title, pad=14)
    _finish(ax, spec, "gate layer", "bond")
    return fig


def counting_histogram(spec: FigureSpec):
    item = spec.inputs[0]
    data = read_csv_columns(item["path"], ("bitstring", "count", "frequency"))
    bits = data["bitstring"]
    n_read = len(bits[0]) if bits else int(spec.extra.get("n_read", 1))
    outcomes = np.arange(2**n_read)
    freq = np.zeros(2**n_read)
    for key, value in zip(bits, data["frequency"]):
        freq[int(key, 2)] = float(value)

    fig, ax = _new_axes(spec)
    ax.bar(outcomes, freq, width=0.9, color="#3f7fbf")
    for y_true in _true_phase_bins(spec, item, n_read):
        ax.axvline(y_true, color="red", linestyle="-", linewidth=1.2, alpha=0.8)
    _finish(ax, spec, "readout outcome", "frequency")
    return fig


def _true_phase_bins(spec: FigureSpec, item: dict, n_read: int) -> list[float]:
    """Positions 2^t * (2 alpha / 2 pi) and its mirror for the true count."""
    params = {**spec.extra, **item}
    n, m = params.get("n"), params.get("m")
    if n is None or m is None:
        meta_path = Path(item["path"]).parent / "meta.json"
        if meta_path.exists():
            info = json.loads(meta_path.read_text()).get("counting", {})
            n, m = info.get("n"), info.get("m")
    if n is None or m is None:
        return []
    alpha = math.asin(math.sqrt(float(m) / float(n)))
    y = 2**n_read * (2.0 * alpha) / (2.0 * math.pi)
    return [y, 2**n_read - y]


def crk_distance(spec: FigureSpec):
    fig, ax = _new_axes(spec)
    item = spec.inputs[0]
    data = read_csv_columns(item["path"], ("experiment", "chi", "rep", "value"))
    series: dict[str, dict[int, float]] = {}
    for experiment, k, value in zip(data["experiment"], data["chi"], data["value"]):
        series.setdefault(experiment, {})[int(k)] = float(value)
    for name in ("crk-distance-max", "crk-distance-mean", "crk-distance-median"):
        if name in series:
            ks = sorted(series[name])
            ax.plot(ks, [series[name][k] for k in ks], marker="o", ms=3,
                    label=name.rsplit("-", 1)[1])
    ax.set_yscale("log")
    ax.axhline(0.01, color="gray", linestyle=":", linewidth=0.8)
    ax.legend(frameon=False)
    _finish(ax, spec, "rotation index k", "distance")
    return fig


def mhat_convergence(spec: FigureSpec):
    fig, ax = _new_axes(spec)
    for item in spec.inputs:
        sweep = load_sweep(item["path"])
        chis = np.array(sorted(sweep))
        means = np.array([sweep[c][0] for c in chis])
        stds = np.array([sweep[c][1] for c in chis])
        line, = ax.plot(chis, means, marker="o", ms=3, label=item.get("label"))
        ax.fill_between(chis, means - stds, means + stds,
                        color=line.get_color(), alpha=0.25, linewidth=0)
    ax.axhline(1.0, color="#2255aa", linewidth=0.9)
    if any(item.get("label") for item in spec.inputs):
        ax.legend(frameon=False)
    _finish(ax, spec, "bond dimension", "estimated / true count")
    return fig


_BUILDERS = {
    "fidelity-curves": fidelity_curves,
    "required-chi": required_chi_curves,
    "entropy-heatmap": entropy_heatmap,
    "counting-histogram": counting_histogram,
    "crk-distance": crk_distance,
    "mhat-convergence": mhat_convergence,
}


def build_figure(spec: FigureSpec):
    return _BUILDERS[spec.kind](spec)


def render(spec: FigureSpec) -> Path:
    """Build the figure and write it to the spec's output path."""
    out = Path(spec.output)
    if out.suffix.lower() not in (".png", ".svg"):
        raise ValueError(f"output format must be png or svg, got {out.suffix!r}")
    fig = build_figure(spec)
    out.parent.mkdir(parents=True, exist_ok=True)
    metadata = {"Date": None} if out.suffix.lower() == ".svg" else None
    fig.savefig(out, dpi=150, metadata=metadata)
    plt.close(fig)
    return out
