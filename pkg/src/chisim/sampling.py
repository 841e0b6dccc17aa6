"""Measurement sampling from an MPS without full contraction.

The outcome distribution factorizes into conditional probabilities
p(b_1) p(b_2 | b_1) ... which a right-canonical chain exposes one site at a
time: the diagonal of the local reduced density matrix gives the
conditional distribution, the drawn outcome is projected into the chain,
the remainder is re-weighted by 1/sqrt(p), and the sweep advances.
Stopping the sweep early yields exact marginals of the leading qubits, so
a prefix of the register can be sampled without touching the rest.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .mps import MPS, canonicalize


class NumericalFailureError(RuntimeError):
    """A conditional distribution failed to normalize within tolerance."""


@dataclass
class Histogram:
    """Counts of sampled bitstrings over ``n_bits`` qubits."""

    n_bits: int
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def frequency(self, key: str) -> float:
        return self.counts.get(key, 0) / self.total

    def add(self, key: str, count: int = 1) -> None:
        if len(key) != self.n_bits:
            raise ValueError(f"key {key!r} does not have {self.n_bits} bits")
        self.counts[key] = self.counts.get(key, 0) + count

    def to_csv(self) -> str:
        """CSV export with columns bitstring,count,frequency (sorted keys)."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bitstring", "count", "frequency"])
        total = self.total
        for key in sorted(self.counts):
            writer.writerow([key, self.counts[key], repr(self.counts[key] / total)])
        return buf.getvalue()


def _right_canonical(state: MPS) -> MPS:
    if state.ortho_center == 0:
        return state
    return canonicalize(state, 0)


def _check_conditional(total: float) -> None:
    if total < 1.0 - 1e-6:
        raise NumericalFailureError(
            f"conditional probabilities sum to {total}, state is not normalized")


def sample_path(state: MPS, rng: np.random.Generator,
                sites: int | None = None) -> tuple[str, list[float]]:
    """Draw one sample and return it with its conditional probabilities.

    The state is right-canonicalized internally if needed.
    """
    st = _right_canonical(state)
    n = st.n_qubits if sites is None else sites
    if not 1 <= n <= st.n_qubits:
        raise ValueError(f"cannot sample {n} of {st.n_qubits} qubits")
    vec = np.ones(1, dtype=complex)
    bits = []
    conds = []
    for i in range(n):
        t = st.tensors[i]
        w0 = vec @ t[:, 0, :]
        w1 = vec @ t[:, 1, :]
        p0 = float(np.real(np.vdot(w0, w0)))
        p1 = float(np.real(np.vdot(w1, w1)))
        _check_conditional(p0 + p1)
        if rng.random() < p0 / (p0 + p1):
            bits.append("0")
            conds.append(p0)
            vec = w0 / np.sqrt(p0)
        else:
            bits.append("1")
            conds.append(p1)
            vec = w1 / np.sqrt(p1)
    return "".join(bits), conds


def sample_one(state: MPS, rng: np.random.Generator) -> str:
    """Draw a single full-register sample."""
    bits, _ = sample_path(state, rng)
    return bits


def sample_histogram(state: MPS, n_samples: int, rng: np.random.Generator,
                     sites: int | None = None) -> Histogram:
    """Draw ``n_samples`` samples, vectorized across the batch.

    With ``sites`` set, the sweep stops after that many qubits and the
    histogram holds exact prefix marginals of the leading qubits.
    """
    st = _right_canonical(state)
    n = st.n_qubits if sites is None else sites
    if not 1 <= n <= st.n_qubits:
        raise ValueError(f"cannot sample {n} of {st.n_qubits} qubits")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")

    vecs = np.ones((n_samples, 1), dtype=complex)
    bits = np.empty((n_samples, n), dtype=np.uint8)
    for i in range(n):
        t = st.tensors[i]
        w0 = vecs @ t[:, 0, :]
        w1 = vecs @ t[:, 1, :]
        p0 = np.einsum("sk,sk->s", w0, w0.conj()).real
        p1 = np.einsum("sk,sk->s", w1, w1.conj()).real
        total = p0 + p1
        _check_conditional(float(total.min()))
        draw = (rng.random(n_samples) >= p0 / total).astype(np.uint8)
        bits[:, i] = draw
        chosen = np.where(draw[:, None] == 0, w0, w1)
        norm = np.where(draw == 0, p0, p1)
        vecs = chosen / np.sqrt(norm)[:, None]
    # accumulate by basis index, then format keys once per distinct outcome
    weights = (1 << np.arange(n - 1, -1, -1, dtype=np.int64))
    indices = bits.astype(np.int64) @ weights
    values, counts = np.unique(indices, return_counts=True)
    hist = Histogram(n)
    for value, count in zip(values, counts):
        hist.add(format(int(value), f"0{n}b"), int(count))
    return hist
