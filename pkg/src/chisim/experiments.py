"""Experiment harness: bond-dimension sweeps with deterministic seeding.

Every sweep point (chi, repetition) is an independent job.  Repetition r
derives its randomness from ``base_seed + r`` so that the prepared circuit
or search problem is identical across the chi sweep, while sampling noise
within a job uses a stream keyed by (base_seed + r, chi).  Jobs may run in
worker processes; results are merged by (chi, repetition) key, so the
output files do not depend on scheduling order.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .circuits import (
    Circuit,
    EntropyMap,
    GroverProblem,
    build_aqft,
    build_counting_circuit,
    build_grover_circuit,
    build_qft,
    build_random_state_circuit,
    invert,
    optimal_iterations,
    random_problem,
    run_circuit,
)
from .mps import TruncationPolicy, amplitude, fidelity, product_state
from .sampling import Histogram, sample_histogram


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2 in the CLI)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one harness run; echoed verbatim into meta.json."""

    kind: str
    n_qubits: int
    chi_list: tuple[int, ...]
    reps: int = 10
    seed: int = 0
    num_marked: int = 1
    marked: tuple[str, ...] = ()
    cutoff_l: int | None = None
    n_top: int = 0
    n_read: int = 0
    n_samples: int = 10000
    draws: int = 1000
    weight_cutoff: float = 1e-12
    method: str = "variational"
    sweeps: int = 2
    workers: int = 1
    depth_layers: int = 20
    full_chi_prep: bool = False
    no_final_swaps: bool = False
    pipeline: str = "qft"
    extraction: str = "mean"

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not self.chi_list:
            raise ConfigError("at least one bond dimension is required")
        if any(b <= a for a, b in zip(self.chi_list, self.chi_list[1:])):
            raise ConfigError("the chi sweep list must be strictly increasing")
        if any(c < 1 for c in self.chi_list):
            raise ConfigError("bond dimensions must be >= 1")
        if self.method not in ("zipup", "variational"):
            raise ConfigError(f"unknown application method {self.method!r}")
        if self.extraction not in ("mean", "argmax"):
            raise ConfigError(f"unknown extraction mode {self.extraction!r}")

    def policy(self, chi: int) -> TruncationPolicy:
        return TruncationPolicy(chi, weight_cutoff=self.weight_cutoff,
                                method=self.method, sweeps=self.sweeps)

    def prep_policy(self, chi: int) -> TruncationPolicy:
        if self.full_chi_prep:
            chi = max(chi, 2 ** (self.n_qubits // 2))
        return self.policy(chi)


@dataclass
class RunRecord:
    """Per-(chi, repetition) results of one sweep."""

    experiment: str
    config: ExperimentConfig
    values: dict[tuple[int, int], float] = field(default_factory=dict)
    discarded: dict[tuple[int, int], float] = field(default_factory=dict)
    wall_time: float = 0.0

    def chis(self) -> list[int]:
        return sorted({chi for chi, _ in self.values})

    def values_at(self, chi: int) -> list[float]:
        return [v for (c, r), v in sorted(self.values.items()) if c == chi]

    def mean(self, chi: int) -> float:
        return float(np.mean(self.values_at(chi)))

    def std(self, chi: int) -> float:
        return float(np.std(self.values_at(chi)))

    def summary(self) -> dict[int, tuple[float, float]]:
        return {chi: (self.mean(chi), self.std(chi)) for chi in self.chis()}

    def rows(self) -> list[tuple[str, int, int, float]]:
        return [(self.experiment, chi, rep, self.values[(chi, rep)])
                for chi, rep in sorted(self.values)]


def required_chi(record: RunRecord, target_fidelity: float) -> int | None:
    """Smallest swept bond dimension whose mean value reaches the target."""
    chis = record.chis()
    if not chis:
        raise ValueError("record holds no sweep results")
    for chi in chis:
        if record.mean(chi) >= target_fidelity:
            return chi
    return None


# -- closed-form utilities -----------------------------------------------------


def aux_qubits(epsilon: float) -> int:
    """Unmeasured readout qubits needed for success probability 1 - epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    return math.ceil(math.log2(2.0 + 1.0 / (2.0 * epsilon)))


def delta_m(m: int, n: int, n_read: int) -> float:
    """Uncertainty of the marked-item count for an n_read-bit phase readout."""
    if m < 0 or n < 1 or n_read < 1:
        raise ValueError("need m >= 0, n >= 1, n_read >= 1")
    return (math.sqrt(2.0 * m * n) + n / 2 ** (n_read + 1)) / 2**n_read


def hilbert_fraction(n_qubits: int, chi: int) -> float:
    """Fraction of the 2^N-dimensional space an MPS of bond chi explores."""
    if n_qubits < 1 or chi < 1:
        raise ValueError("need n_qubits >= 1 and chi >= 1")
    return 2.0 * n_qubits * chi**2 / 2.0**n_qubits


def crk_distance_stats(k: int, n_samples: int, rng: np.random.Generator,
                       measure: str = "haar") -> tuple[float, float, float]:
    """Distance 1 - |<psi'|psi>|^2 between a two-qubit state and its image
    under a controlled phase rotation of index k.

    The distance depends on the state only through p = |c_11|^2 and equals
    2 p (1 - p) (1 - cos(2 pi / 2^k)); its maximum over all states,
    attained at p = 1/2, is sin^2(pi / 2^k) and is returned analytically.
    Mean and median are estimated over ``n_samples`` random states, drawn
    Haar-uniformly or uniformly in the hypersphere angles.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    omega = 2.0 * math.pi / 2**k
    dist_max = math.sin(math.pi / 2**k) ** 2
    if measure == "haar":
        z = rng.standard_normal((n_samples, 4)) + 1j * rng.standard_normal((n_samples, 4))
        p = np.abs(z[:, 3]) ** 2 / np.sum(np.abs(z) ** 2, axis=1)
    elif measure == "angles":
        phi1 = rng.uniform(0.0, math.pi, n_samples)
        phi2 = rng.uniform(0.0, math.pi, n_samples)
        phi3 = rng.uniform(0.0, 2.0 * math.pi, n_samples)
        p = (np.sin(phi1) * np.sin(phi2) * np.sin(phi3)) ** 2
    else:
        raise ValueError(f"unknown sampling measure {measure!r}")
    dist = 1.0 - (((1.0 - p) + p * math.cos(omega)) ** 2 + (p * math.sin(omega)) ** 2)
    return dist_max, float(np.mean(dist)), float(np.median(dist))


def _fold_to_count(ys: np.ndarray, n: int, n_read: int) -> np.ndarray:
    """Map readout outcomes y to marked-item estimates n sin^2(alpha)."""
    theta = 2.0 * np.pi * ys / 2**n_read
    folded = np.minimum(theta, 2.0 * np.pi - theta)  # = 2 * alpha
    # the half-angle identity keeps binary-fraction phases exact
    return 0.5 * n * (1.0 - np.cos(folded))


def estimate_m(hist: Histogram, n: int, n_read: int, draws: int,
               rng: np.random.Generator) -> float:
    """Marked-item estimate from a phase-readout histogram.

    ``draws`` outcomes y are drawn from the histogram proportionally to
    their counts; each maps to an angle theta = 2 pi y / 2^n_read, the +-
    eigenphase symmetry is folded via alpha = min(theta, 2 pi - theta) / 2,
    and the estimates n sin^2(alpha) are averaged.  The randomized mean
    degrades gracefully when low bond dimensions wash out the histogram
    peaks.
    """
    if hist.n_bits != n_read:
        raise ValueError(f"histogram covers {hist.n_bits} bits, expected {n_read}")
    if not hist.counts:
        raise ValueError("cannot estimate from an empty histogram")
    if draws < 1:
        raise ValueError("draws must be >= 1")
    keys = sorted(hist.counts)
    ys = np.array([int(key, 2) for key in keys], dtype=float)
    probs = np.array([hist.counts[key] for key in keys], dtype=float)
    probs /= probs.sum()
    picks = rng.choice(len(keys), size=draws, p=probs)
    return float(np.mean(_fold_to_count(ys[picks], n, n_read)))


def estimate_m_argmax(hist: Histogram, n: int, n_read: int) -> float:
    """Marked-item estimate from the two most probable readout outcomes.

    Effectively equivalent to :func:`estimate_m` once the histogram is
    clearly peaked at the eigenphase pair.
    """
    if hist.n_bits != n_read:
        raise ValueError(f"histogram covers {hist.n_bits} bits, expected {n_read}")
    if not hist.counts:
        raise ValueError("cannot estimate from an empty histogram")
    top = sorted(hist.counts, key=lambda key: (-hist.counts[key], key))[:2]
    ys = np.array([int(key, 2) for key in top], dtype=float)
    return float(np.mean(_fold_to_count(ys, n, n_read)))


# -- sweep jobs ------------------------------------------------------------------


def _fourier_roundtrip_job(cfg: ExperimentConfig, chi: int, rep: int) -> tuple[float, float]:
    n = cfg.n_qubits
    prep = build_random_state_circuit(n, cfg.depth_layers, seed=cfg.seed + rep)
    psi0, _ = run_circuit(product_state([0] * n), prep, cfg.prep_policy(chi))
    forward = build_qft(n, final_swaps=not cfg.no_final_swaps)
    if cfg.kind == "aqft-fidelity":
        cutoff = cfg.cutoff_l if cfg.cutoff_l is not None else n
        backward = invert(build_aqft(n, cutoff, final_swaps=not cfg.no_final_swaps))
    else:
        backward = invert(forward)
    policy = cfg.policy(chi)
    psi, _ = run_circuit(psi0, forward, policy)
    psi, _ = run_circuit(psi, backward, policy)
    return fidelity(psi, psi0), 1.0 - math.exp(psi.log_norm_discarded)


def _grover_problem(cfg: ExperimentConfig, rep: int) -> GroverProblem:
    if cfg.marked:
        return GroverProblem(cfg.n_qubits, cfg.marked)
    rng = np.random.default_rng(cfg.seed + rep)
    return random_problem(cfg.n_qubits, cfg.num_marked, rng)


def _grover_job(cfg: ExperimentConfig, chi: int, rep: int) -> tuple[float, float]:
    problem = _grover_problem(cfg, rep)
    iterations = optimal_iterations(problem.n, problem.m)
    circuit = build_grover_circuit(problem, iterations)
    state, _ = run_circuit(product_state([0] * problem.n_qubits), circuit,
                           cfg.policy(chi))
    value = sum(abs(amplitude(state, w)) ** 2 for w in problem.marked)
    return value, 1.0 - math.exp(state.log_norm_discarded)


def _counting_job(cfg: ExperimentConfig, chi: int, rep: int) -> tuple[float, float]:
    problem = _grover_problem(cfg, rep)
    n_read = cfg.n_read if cfg.n_read else cfg.n_top - 2
    circuit = build_counting_circuit(cfg.n_top, cfg.n_qubits, problem,
                                     aqft_cutoff=cfg.cutoff_l)
    state, _ = run_circuit(product_state([0] * circuit.n_qubits), circuit,
                           cfg.policy(chi))
    rng = np.random.default_rng([cfg.seed + rep, chi])
    hist = sample_histogram(state, cfg.n_samples, rng, sites=n_read)
    if cfg.extraction == "argmax":
        m_hat = estimate_m_argmax(hist, problem.n, n_read)
    else:
        m_hat = estimate_m(hist, problem.n, n_read, cfg.draws, rng)
    return m_hat / problem.m, 1.0 - math.exp(state.log_norm_discarded)


_JOBS = {
    "qft-fidelity": _fourier_roundtrip_job,
    "aqft-fidelity": _fourier_roundtrip_job,
    "grover": _grover_job,
    "counting": _counting_job,
}


def _job_entry(args: tuple[ExperimentConfig, int, int]) -> tuple[int, int, float, float]:
    cfg, chi, rep = args
    value, discarded = _JOBS[cfg.kind](cfg, chi, rep)
    return chi, rep, value, discarded


def run_sweep(cfg: ExperimentConfig) -> RunRecord:
    """Execute every (chi, repetition) job of the configured experiment."""
    if cfg.kind not in _JOBS:
        raise ConfigError(f"unknown experiment kind {cfg.kind!r}")
    _validate_kind(cfg)
    start = time.perf_counter()
    jobs = [(cfg, chi, rep) for chi in cfg.chi_list for rep in range(cfg.reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_job_entry, jobs))
    else:
        results = [_job_entry(job) for job in jobs]
    record = RunRecord(cfg.kind, cfg)
    for chi, rep, value, discarded in results:
        record.values[(chi, rep)] = value
        record.discarded[(chi, rep)] = discarded
    record.wall_time = time.perf_counter() - start
    return record


def qft_fidelity_sweep(cfg: ExperimentConfig) -> RunRecord:
    """Fourier round-trip fidelity per (chi, repetition)."""
    return run_sweep(cfg if cfg.kind == "qft-fidelity"
                     else replace(cfg, kind="qft-fidelity"))


def aqft_fidelity_sweep(cfg: ExperimentConfig) -> RunRecord:
    """Round trip closed by the inverse approximate transform at cutoff_l."""
    return run_sweep(cfg if cfg.kind == "aqft-fidelity"
                     else replace(cfg, kind="aqft-fidelity"))


def grover_sweep(cfg: ExperimentConfig) -> RunRecord:
    """Marked-subspace probability after the optimal iteration count."""
    return run_sweep(cfg if cfg.kind == "grover" else replace(cfg, kind="grover"))


def counting_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Estimated/true marked-item ratio per (chi, repetition)."""
    return run_sweep(cfg if cfg.kind == "counting" else replace(cfg, kind="counting"))


def _validate_kind(cfg: ExperimentConfig) -> None:
    if cfg.kind in ("qft-fidelity", "aqft-fidelity") and cfg.n_qubits < 2:
        raise ConfigError("fourier sweeps need at least 2 qubits")
    if cfg.kind == "aqft-fidelity" and cfg.cutoff_l is not None:
        if not 2 <= cfg.cutoff_l <= cfg.n_qubits:
            raise ConfigError(f"cutoff_l must lie in [2, {cfg.n_qubits}]")
    if cfg.kind in ("grover", "counting"):
        if not cfg.marked and not 1 <= cfg.num_marked < 2**cfg.n_qubits:
            raise ConfigError("num_marked must satisfy 1 <= m < 2^N")
    if cfg.kind == "counting":
        if cfg.n_top < 3:
            raise ConfigError("counting needs n_top >= 3")
        n_read = cfg.n_read if cfg.n_read else cfg.n_top - 2
        if not 1 <= n_read <= cfg.n_top:
            raise ConfigError("need 1 <= n_read <= n_top")
        if cfg.cutoff_l is not None and not 2 <= cfg.cutoff_l <= cfg.n_top:
            raise ConfigError(f"cutoff_l must lie in [2, {cfg.n_top}]")


# -- entropy-map pipelines ----------------------------------------------------------


def entropy_map_run(cfg: ExperimentConfig) -> tuple[EntropyMap, dict]:
    """Run one pipeline at a single bond dimension, recording the entropy
    profile after every gate layer."""
    if len(cfg.chi_list) != 1:
        raise ConfigError("entropy-map runs use exactly one bond dimension")
    chi = cfg.chi_list[0]
    extras: dict = {"chi": chi, "pipeline": cfg.pipeline}
    if cfg.pipeline == "qft":
        circuit = fourier_roundtrip_circuit(cfg)
    elif cfg.pipeline == "grover":
        problem = _grover_problem(cfg, 0)
        iterations = optimal_iterations(problem.n, problem.m)
        circuit = build_grover_circuit(problem, iterations)
        extras.update(m=problem.m, n=problem.n, iterations=iterations)
    elif cfg.pipeline == "counting":
        problem = _grover_problem(cfg, 0)
        circuit = build_counting_circuit(cfg.n_top, cfg.n_qubits, problem,
                                         aqft_cutoff=cfg.cutoff_l)
        extras.update(m=problem.m, n=problem.n, n_top=cfg.n_top)
    else:
        raise ConfigError(f"unknown entropy pipeline {cfg.pipeline!r}")
    state = product_state([0] * circuit.n_qubits)
    _, emap = run_circuit(state, circuit, cfg.policy(chi), record_entropy=True)
    extras["phase_markers"] = [[idx, name] for idx, name in emap.phase_markers]
    return emap, extras


def fourier_roundtrip_circuit(cfg: ExperimentConfig) -> Circuit:
    """Random preparation, Fourier transform and its inverse, with phase
    markers delimiting the three regions."""
    n = cfg.n_qubits
    c = Circuit(n)
    c.begin_phase("random prep")
    c.extend(build_random_state_circuit(n, cfg.depth_layers, seed=cfg.seed))
    c.begin_phase("QFT")
    c.extend(build_qft(n, final_swaps=not cfg.no_final_swaps))
    c.begin_phase("inverse QFT")
    if cfg.cutoff_l is not None:
        c.extend(invert(build_aqft(n, cfg.cutoff_l, final_swaps=not cfg.no_final_swaps)))
    else:
        c.extend(invert(build_qft(n, final_swaps=not cfg.no_final_swaps)))
    return c
