"""Matrix-product-state representation of an N-qubit register.

An :class:`MPS` stores one rank-3 tensor per qubit with index order
``(left bond, physical, right bond)`` and boundary bond dimensions of one.
Qubit 0 is the most significant bit of the computational-basis index, so
``to_statevector`` of ``|01>`` is ``(0, 1, 0, 0)``.

All operations treat states as values: they never modify their inputs and
return new :class:`MPS` instances.  Tensors may be shared between
instances, so callers must not mutate them in place either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import entropy_from_singular_values, kept_fraction, svd_safe, truncation_rank

#: Largest register accepted by dense conversions unless overridden.
DENSE_QUBIT_LIMIT = 14


@dataclass(frozen=True)
class TruncationPolicy:
    """Bond-truncation rules applied whenever a multi-qubit gate acts.

    Attributes:
        chi_max: hard cap on every bond dimension (>= 1).
        weight_cutoff: after capping, additionally drop the largest tail of
            singular values whose squared sum stays below this fraction of
            the total.  Zero disables the extra drop.
        method: "zipup" for a single truncated contraction sweep, or
            "variational" to refine the zip-up result with alternating
            two-site optimization sweeps.
        sweeps: number of one-directional variational passes (two passes
            make a full round trip).  Ignored for "zipup".
        tolerance: stop sweeping early once the squared-overlap gain of a
            pass drops below this value.
    """

    chi_max: int
    weight_cutoff: float = 0.0
    method: str = "variational"
    sweeps: int = 2
    tolerance: float = 1e-10

    def __post_init__(self) -> None:
        if self.chi_max < 1:
            raise ValueError(f"chi_max must be >= 1, got {self.chi_max}")
        if self.weight_cutoff < 0:
            raise ValueError("weight_cutoff must be >= 0")
        if self.method not in ("zipup", "variational"):
            raise ValueError(f"unknown application method {self.method!r}")
        if self.method == "variational" and self.sweeps < 1:
            raise ValueError("variational method needs sweeps >= 1")


@dataclass
class EntropySnapshot:
    """Bond entropies (nats) recorded after ``layer_index`` circuit layers."""

    layer_index: int
    entropies: np.ndarray


class MPS:
    """Tensor train of per-qubit rank-3 tensors with open boundaries.

    Attributes:
        tensors: list of complex arrays of shape (chi_left, 2, chi_right).
        ortho_center: site index of the orthogonality center when a
            canonical form is known, else None.
        log_norm_discarded: running sum of log(retained squared norm) over
            all truncation events; a diagnostic, never used for fidelities.
    """

    def __init__(
        self,
        tensors: list[np.ndarray],
        ortho_center: int | None = None,
        log_norm_discarded: float = 0.0,
    ) -> None:
        if not tensors:
            raise ValueError("an MPS needs at least one site tensor")
        for i, t in enumerate(tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValueError(f"tensor {i} has shape {t.shape}, expected (chi, 2, chi')")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise ValueError("boundary bond dimensions must be 1")
        for i in range(len(tensors) - 1):
            if tensors[i].shape[2] != tensors[i + 1].shape[0]:
                raise ValueError(
                    f"bond mismatch between sites {i} and {i + 1}: "
                    f"{tensors[i].shape[2]} vs {tensors[i + 1].shape[0]}"
                )
        self.tensors = tensors
        self.ortho_center = ortho_center
        self.log_norm_discarded = log_norm_discarded

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> list[int]:
        """Internal bond dimensions, length N - 1."""
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dimensions, default=1)

    def norm(self) -> float:
        """Global 2-norm, computed exactly."""
        if self.ortho_center is not None:
            return float(np.linalg.norm(self.tensors[self.ortho_center]))
        return math.sqrt(abs(inner(self, self)))

    def copy(self) -> "MPS":
        return MPS(list(self.tensors), self.ortho_center, self.log_norm_discarded)


def product_state(bits) -> MPS:
    """Computational-basis product state for a bit sequence or bitstring."""
    if isinstance(bits, str):
        bits = [int(ch) for ch in bits]
    bits = list(bits)
    if not bits:
        raise ValueError("cannot build a zero-qubit state")
    tensors = []
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b!r}")
        t = np.zeros((1, 2, 1), dtype=complex)
        t[0, b, 0] = 1.0
        tensors.append(t)
    return MPS(tensors, ortho_center=0)


def apply_single_qubit_gate(state: MPS, gate: np.ndarray, site: int) -> MPS:
    """Contract a 2x2 matrix into the physical leg of one site tensor.

    Bond dimensions are untouched.  Unitarity is not required; a unitary
    gate preserves any canonical form, a non-unitary one invalidates it.
    """
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise ValueError(f"expected a 2x2 gate, got shape {gate.shape}")
    if not 0 <= site < state.n_qubits:
        raise ValueError(f"site {site} out of range for {state.n_qubits} qubits")
    tensors = list(state.tensors)
    tensors[site] = np.einsum("st,ltr->lsr", gate, tensors[site])
    center = state.ortho_center
    if center is not None and center != site:
        # isometries survive only unitary physical-leg rotations
        if not np.allclose(gate.conj().T @ gate, np.eye(2), atol=1e-12):
            center = None
    return MPS(tensors, center, state.log_norm_discarded)


def canonicalize(state: MPS, center: int) -> MPS:
    """Gauge the chain so sites left of ``center`` are left-isometric and
    sites right of it are right-isometric.  The represented state is
    unchanged; the norm collects in the center tensor."""
    n = state.n_qubits
    if not 0 <= center < n:
        raise ValueError(f"center {center} out of range for {n} qubits")
    tensors = list(state.tensors)
    for i in range(center):
        chi_l, d, chi_r = tensors[i].shape
        q, r = np.linalg.qr(tensors[i].reshape(chi_l * d, chi_r))
        tensors[i] = q.reshape(chi_l, d, -1)
        tensors[i + 1] = np.tensordot(r, tensors[i + 1], axes=(1, 0))
    for i in range(n - 1, center, -1):
        chi_l, d, chi_r = tensors[i].shape
        q, r = np.linalg.qr(tensors[i].reshape(chi_l, d * chi_r).conj().T)
        tensors[i] = q.conj().T.reshape(-1, d, chi_r)
        tensors[i - 1] = np.tensordot(tensors[i - 1], r.conj().T, axes=(2, 0))
    return MPS(tensors, ortho_center=center, log_norm_discarded=state.log_norm_discarded)


def compress(state: MPS, policy: TruncationPolicy) -> tuple[MPS, float]:
    """Truncate every bond to the policy and renormalize.

    Returns the compressed state and the discarded weight, i.e. one minus
    the squared-norm fraction retained before renormalization.
    """
    n = state.n_qubits
    st = canonicalize(state, n - 1)
    tensors = list(st.tensors)
    retained = 1.0
    for i in range(n - 1, 0, -1):
        chi_l, d, chi_r = tensors[i].shape
        u, s, vh = svd_safe(tensors[i].reshape(chi_l, d * chi_r))
        k = truncation_rank(s, policy.chi_max, policy.weight_cutoff)
        retained *= kept_fraction(s, k)
        tensors[i] = vh[:k].reshape(k, d, chi_r)
        tensors[i - 1] = np.tensordot(tensors[i - 1], u[:, :k] * s[:k], axes=(2, 0))
    nrm = np.linalg.norm(tensors[0])
    if nrm == 0.0:
        raise ValueError("cannot compress the zero state")
    tensors[0] = tensors[0] / nrm
    log_retained = math.log(retained) if retained > 0 else -math.inf
    out = MPS(tensors, ortho_center=0, log_norm_discarded=state.log_norm_discarded + log_retained)
    return out, 1.0 - retained


def entropy_profile(state: MPS) -> np.ndarray:
    """Von Neumann entropy (nats) across each of the N - 1 bonds.

    Requires a normalized state; the entropies are computed from the
    squared Schmidt coefficients obtained by an SVD sweep.
    """
    nrm = state.norm()
    if abs(nrm - 1.0) > 1e-6:
        raise ValueError(f"entropy_profile needs a normalized state, norm is {nrm}")
    n = state.n_qubits
    tensors = list(canonicalize(state, 0).tensors)
    out = np.zeros(n - 1)
    for i in range(n - 1):
        chi_l, d, chi_r = tensors[i].shape
        _, s, vh = svd_safe(tensors[i].reshape(chi_l * d, chi_r))
        out[i] = entropy_from_singular_values(s)
        tensors[i + 1] = np.tensordot(s[:, None] * vh, tensors[i + 1], axes=(1, 0))
    return out


def inner(a: MPS, b: MPS) -> complex:
    """Exact overlap <a|b> by transfer-matrix contraction, cost O(N chi^3)."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        tmp = np.tensordot(env, tb, axes=(1, 0))          # (pa, s, qb')
        env = np.tensordot(ta.conj(), tmp, axes=([0, 1], [0, 1]))  # (pa', qb')
    return complex(env[0, 0])


def fidelity(a: MPS, b: MPS) -> float:
    """Squared overlap |<a|b>|^2."""
    return abs(inner(a, b)) ** 2


def to_statevector(state: MPS, max_qubits: int = DENSE_QUBIT_LIMIT) -> np.ndarray:
    """Dense amplitude vector of length 2^N, qubit 0 as most significant bit.

    Refuses registers larger than ``max_qubits`` to avoid accidental
    exponential blow-ups.
    """
    n = state.n_qubits
    if n > max_qubits:
        raise ValueError(
            f"refusing dense conversion of {n} qubits (limit {max_qubits}); "
            "raise max_qubits explicitly if this is intended"
        )
    vec = np.ones((1, 1), dtype=complex)
    for t in state.tensors:
        vec = np.tensordot(vec, t, axes=(1, 0))  # (prefix, s, chi)
        vec = vec.reshape(vec.shape[0] * 2, vec.shape[2])
    return vec[:, 0]


def amplitude(state: MPS, bits) -> complex:
    """Single basis-state amplitude via a matrix-product evaluation."""
    if isinstance(bits, str):
        bits = [int(ch) for ch in bits]
    bits = list(bits)
    if len(bits) != state.n_qubits:
        raise ValueError(f"expected {state.n_qubits} bits, got {len(bits)}")
    vec = np.ones(1, dtype=complex)
    for t, b in zip(state.tensors, bits):
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b!r}")
        vec = vec @ t[:, b, :]
    return complex(vec[0])
