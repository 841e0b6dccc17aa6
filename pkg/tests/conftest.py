"""Shared dense oracles for the test suite.

Everything here evolves full statevectors or builds dense matrices straight
from gate definitions (Kronecker products, projector sums, permutation
matrices) so the checks stay independent of the tensor-network contraction
code they validate.
"""

from __future__ import annotations

import numpy as np
import pytest

from chisim import MPS, gates, inner
from chisim.circuits import Circuit, SingleQubitLayer
from chisim.mpo import GateSpec

I2 = np.eye(2, dtype=complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


def kron_all(ops) -> np.ndarray:
    out = np.array([[1.0]], dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def dense_controlled(n: int, controls, target: int, u: np.ndarray) -> np.ndarray:
    """Projector-sum form  I - P(controls) + P(controls) U(target)."""
    controls = set(controls)
    term1 = kron_all([I2] * n)
    term2 = kron_all([P1 if i in controls else I2 for i in range(n)])
    term3 = kron_all([P1 if i in controls else (u if i == target else I2)
                      for i in range(n)])
    return term1 - term2 + term3


def dense_swap(n: int, i: int, j: int) -> np.ndarray:
    dim = 2**n
    perm = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        bits = list(format(idx, f"0{n}b"))
        bits[i], bits[j] = bits[j], bits[i]
        perm[int("".join(bits), 2), idx] = 1.0
    return perm


def dense_gate(spec: GateSpec, n: int) -> np.ndarray:
    if spec.kind == "rk":
        u = gates.phase_rotation(spec.k, spec.dagger)
        return dense_controlled(n, spec.controls, spec.target, u)
    if spec.kind == "swap":
        return dense_swap(n, *spec.sites)
    if spec.kind == "mcz":
        return dense_controlled(n, spec.controls, spec.target, gates.PAULI_Z)
    if spec.kind == "cu":
        return dense_controlled(n, spec.controls, spec.target, spec.matrix)
    if spec.kind in ("h", "x", "z"):
        mat = {"h": gates.HADAMARD, "x": gates.PAULI_X, "z": gates.PAULI_Z}[spec.kind]
        return kron_all([mat if i == spec.target else I2 for i in range(n)])
    raise ValueError(spec.kind)


def circuit_dense(circuit: Circuit) -> np.ndarray:
    """Dense unitary of a circuit, built gate by gate from definitions."""
    n = circuit.n_qubits
    out = np.eye(2**n, dtype=complex)
    for layer in circuit.layers:
        if isinstance(layer, SingleQubitLayer):
            g = kron_all([layer.matrix if i == layer.site else I2 for i in range(n)])
        else:
            g = dense_gate(layer.spec, n)
        out = g @ out
    return out


def dense_entropy(vector: np.ndarray, left_qubits: int) -> float:
    """Entanglement entropy of the first ``left_qubits`` from the dense
    reduced density matrix."""
    mat = vector.reshape(2**left_qubits, -1)
    rho = mat @ mat.conj().T
    evals = np.linalg.eigvalsh(rho)
    evals = evals[evals > 1e-14]
    return float(-np.sum(evals * np.log(evals)))


def random_mps(n: int, chi: int, rng: np.random.Generator) -> MPS:
    """Normalized random MPS with bonds capped at ``chi``."""
    tensors = []
    left = 1
    for i in range(n):
        right = min(chi, 2 ** (i + 1), 2 ** (n - i - 1)) if i < n - 1 else 1
        tensors.append(rng.standard_normal((left, 2, right))
                       + 1j * rng.standard_normal((left, 2, right)))
        left = right
    state = MPS(tensors)
    tensors[0] = tensors[0] / np.sqrt(inner(state, state).real)
    return MPS(tensors)


def bell_pair() -> MPS:
    t0 = np.zeros((1, 2, 2), dtype=complex)
    t0[0, 0, 0] = t0[0, 1, 1] = 1.0 / np.sqrt(2)
    t1 = np.zeros((2, 2, 1), dtype=complex)
    t1[0, 0, 0] = t1[1, 1, 0] = 1.0
    return MPS([t0, t1])


def ghz(n: int) -> MPS:
    first = np.zeros((1, 2, 2), dtype=complex)
    first[0, 0, 0] = first[0, 1, 1] = 1.0
    mid = np.zeros((2, 2, 2), dtype=complex)
    mid[0, 0, 0] = mid[1, 1, 1] = 1.0
    last = np.zeros((2, 2, 1), dtype=complex)
    last[0, 0, 0] = last[1, 1, 0] = 1.0 / np.sqrt(2)
    return MPS([first] + [mid] * (n - 2) + [last])


def grover_statevector_fidelity(marked: tuple[str, ...], n_qubits: int,
                                iterations: int) -> float:
    """Dense Grover evolution: sign flips plus reflection about the mean."""
    n = 2**n_qubits
    vec = np.ones(n) / np.sqrt(n)
    idx = [int(w, 2) for w in marked]
    for _ in range(iterations):
        vec = vec.copy()
        vec[idx] *= -1.0
        vec = 2.0 * np.mean(vec) - vec  # (2|s><s| - 1) applied to vec
    return float(sum(abs(vec[i]) ** 2 for i in idx))


def qpe_outcome_distribution(n_top: int, phi: float) -> np.ndarray:
    """Ideal phase-estimation outcome distribution for eigenphase ``phi``."""
    y = np.arange(2**n_top)
    delta = phi - y / 2**n_top
    num = np.sin(np.pi * 2**n_top * delta)
    den = np.sin(np.pi * delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = (num / den) ** 2 / 4**n_top
    p[np.isclose(den, 0.0)] = 1.0
    return p / p.sum()


def counting_prefix_distribution(n_top: int, n_read: int, n: int, m: int) -> np.ndarray:
    """Exact readout-prefix distribution of the ideal counting circuit."""
    alpha = np.arcsin(np.sqrt(m / n))
    phi = 2.0 * alpha / (2.0 * np.pi)
    p_full = 0.5 * (qpe_outcome_distribution(n_top, phi)
                    + qpe_outcome_distribution(n_top, 1.0 - phi))
    prefix = np.zeros(2**n_read)
    shift = n_top - n_read
    np.add.at(prefix, np.arange(2**n_top) >> shift, p_full)
    return prefix


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
