"""Quantum gates as matrix product operators and their application to an MPS.

Any gate acting on two or more qubits is represented as a tensor train of
rank-4 tensors with index order ``(left bond, physical out, physical in,
right bond)``.  Multi-controlled single-qubit gates use a three-channel
construction whose internal bond dimension is exactly 3 regardless of the
number of controls or their separation:

    channel 1 carries the identity on every site,
    channel 2 carries |1><1| on the controls (with an overall minus sign
        absorbed at the first non-trivial site) and identities elsewhere,
    channel 3 carries |1><1| on the controls and the gate on the target.

Summing the channels gives  I  -  P(controls)  +  P(controls) * U(target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gates
from .linalg import kept_fraction, svd_safe, truncation_rank
from .mps import MPS, TruncationPolicy

#: Largest register accepted by mpo_to_dense.
DENSE_MPO_LIMIT = 12


class MPO:
    """Tensor train of per-qubit rank-4 tensors, boundary bonds of one."""

    def __init__(self, tensors: list[np.ndarray]) -> None:
        if not tensors:
            raise ValueError("an MPO needs at least one site tensor")
        for i, t in enumerate(tensors):
            if t.ndim != 4 or t.shape[1] != 2 or t.shape[2] != 2:
                raise ValueError(f"tensor {i} has shape {t.shape}, expected (w, 2, 2, w')")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[3] != 1:
            raise ValueError("boundary bond dimensions must be 1")
        for i in range(len(tensors) - 1):
            if tensors[i].shape[3] != tensors[i + 1].shape[0]:
                raise ValueError(f"bond mismatch between sites {i} and {i + 1}")
        self.tensors = tensors

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> list[int]:
        return [t.shape[3] for t in self.tensors[:-1]]


@dataclass(eq=False)
class GateSpec:
    """Symbolic description of a gate that is applied as an MPO.

    Kinds and their fields:
        "h" | "x" | "z":  target (single site, bond-1 MPO)
        "rk":             control, target, k, dagger  (controlled phase_rotation)
        "swap":           sites (i, j)
        "cu":             controls, target, matrix    (multi-controlled 2x2 unitary)
        "mcz":            controls, target            (multi-controlled Z)
    """

    kind: str
    target: int | None = None
    controls: tuple[int, ...] = ()
    sites: tuple[int, ...] = ()
    k: int | None = None
    dagger: bool = False
    matrix: np.ndarray | None = None

    def label(self) -> str:
        if self.kind == "rk":
            return f"CR{self.k}" + ("†" if self.dagger else "")
        return self.kind.upper()


def identity_mpo(n_qubits: int) -> MPO:
    eye = gates.IDENTITY.reshape(1, 2, 2, 1)
    return MPO([eye.copy() for _ in range(n_qubits)])


def controlled_mpo(n_qubits: int, controls, target: int, u: np.ndarray) -> MPO:
    """Single-qubit gate ``u`` on ``target`` controlled by every qubit in
    ``controls``, as a bond-3 MPO.

    The bond dimension is exactly 3 between the first and last involved
    site and 1 outside, with spectator sites in between carrying the
    channel-diagonal identity block.
    """
    controls = tuple(sorted(set(controls)))
    if not controls:
        raise ValueError("controls must be non-empty; apply the gate directly instead")
    if target in controls:
        raise ValueError(f"target {target} overlaps a control")
    involved = sorted((*controls, target))
    if involved[0] < 0 or involved[-1] >= n_qubits:
        raise ValueError("control/target indices out of range")
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2x2 gate, got shape {u.shape}")

    first, last = involved[0], involved[-1]
    eye, proj = gates.IDENTITY, gates.PROJ_1

    def channel_ops(site: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if site in controls:
            return eye, proj, proj
        if site == target:
            return eye, eye, u
        return eye, eye, eye

    tensors = []
    for site in range(n_qubits):
        if site < first or site > last:
            tensors.append(eye.reshape(1, 2, 2, 1).copy())
            continue
        ops = channel_ops(site)
        if site == first:
            w = np.zeros((1, 2, 2, 3), dtype=complex)
            w[0, :, :, 0] = ops[0]
            w[0, :, :, 1] = -ops[1]  # minus sign of the projector channel
            w[0, :, :, 2] = ops[2]
        elif site == last:
            w = np.zeros((3, 2, 2, 1), dtype=complex)
            for c in range(3):
                w[c, :, :, 0] = ops[c]
        else:
            w = np.zeros((3, 2, 2, 3), dtype=complex)
            for c in range(3):
                w[c, :, :, c] = ops[c]
        tensors.append(w)
    return MPO(tensors)


def swap_mpo(n_qubits: int, i: int, j: int) -> MPO:
    """SWAP of qubits ``i`` and ``j`` from an operator-Schmidt split of the
    dense two-site gate, with channel-diagonal identities on the sites in
    between.  Internal bonds never exceed 4."""
    if i == j:
        raise ValueError("swap needs two distinct sites")
    i, j = min(i, j), max(i, j)
    if i < 0 or j >= n_qubits:
        raise ValueError("swap indices out of range")

    swap = np.zeros((2, 2, 2, 2), dtype=complex)  # (out_i, out_j, in_i, in_j)
    for a in range(2):
        for b in range(2):
            swap[b, a, a, b] = 1.0
    mat = swap.transpose(0, 2, 1, 3).reshape(4, 4)  # (out_i, in_i) x (out_j, in_j)
    u, s, vh = svd_safe(mat)
    k = int(np.count_nonzero(s > s[0] * 1e-14))
    root = np.sqrt(s[:k])  # split singular values symmetrically
    left = (u[:, :k] * root).reshape(2, 2, k)
    right = (root[:, None] * vh[:k]).reshape(k, 2, 2)

    eye = gates.IDENTITY
    tensors = []
    for site in range(n_qubits):
        if site == i:
            tensors.append(left.reshape(1, 2, 2, k))
        elif site == j:
            tensors.append(right.reshape(k, 2, 2, 1))
        elif i < site < j:
            w = np.zeros((k, 2, 2, k), dtype=complex)
            for c in range(k):
                w[c, :, :, c] = eye
            tensors.append(w)
        else:
            tensors.append(eye.reshape(1, 2, 2, 1).copy())
    return MPO(tensors)


def gate_mpo(spec: GateSpec, n_qubits: int) -> MPO:
    """Materialize a :class:`GateSpec` as an MPO on ``n_qubits`` sites."""
    if spec.kind in ("h", "x", "z"):
        mat = {"h": gates.HADAMARD, "x": gates.PAULI_X, "z": gates.PAULI_Z}[spec.kind]
        tensors = [gates.IDENTITY.reshape(1, 2, 2, 1).copy() for _ in range(n_qubits)]
        tensors[spec.target] = mat.reshape(1, 2, 2, 1).copy()
        return MPO(tensors)
    if spec.kind == "rk":
        u = gates.phase_rotation(spec.k, dagger=spec.dagger)
        return controlled_mpo(n_qubits, spec.controls, spec.target, u)
    if spec.kind == "swap":
        return swap_mpo(n_qubits, *spec.sites)
    if spec.kind == "cu":
        return controlled_mpo(n_qubits, spec.controls, spec.target, spec.matrix)
    if spec.kind == "mcz":
        return controlled_mpo(n_qubits, spec.controls, spec.target, gates.PAULI_Z)
    raise ValueError(f"unknown gate kind {spec.kind!r}")


def mpo_to_dense(op: MPO, max_qubits: int = DENSE_MPO_LIMIT) -> np.ndarray:
    """Full 2^N x 2^N matrix of the operator, qubit 0 as most significant bit."""
    n = op.n_qubits
    if n > max_qubits:
        raise ValueError(f"refusing dense conversion of {n} qubits (limit {max_qubits})")
    block = np.ones((1, 1, 1), dtype=complex)  # (out, in, bond)
    for w in op.tensors:
        block = np.tensordot(block, w, axes=(2, 0))  # (out, in, o, i, w')
        block = block.transpose(0, 2, 1, 3, 4)
        d = block.shape[0] * 2
        block = block.reshape(d, d, -1)
    return block[:, :, 0]


def apply_mpo(state: MPS, op: MPO, policy: TruncationPolicy) -> tuple[MPS, float]:
    """Apply an MPO to an MPS under a truncation policy.

    Returns the new, normalized state together with the discarded weight.
    For the variational method the discarded weight is estimated as
    ``1 - |<phi|O|psi>|^2``, which is exact for unitary operators acting on
    normalized states.
    """
    if state.n_qubits != op.n_qubits:
        raise ValueError(f"qubit count mismatch: {state.n_qubits} vs {op.n_qubits}")
    zipped, discarded = _zip_up(state, op, policy)
    if policy.method == "zipup":
        return zipped, discarded
    return _variational_fit(state, op, zipped, policy)


def _zip_up(state: MPS, op: MPO, policy: TruncationPolicy) -> tuple[MPS, float]:
    """Single left-to-right contraction sweep with on-the-fly truncation.

    The input is right-canonicalized first so that the local truncations
    are close to optimal; the output comes back left-canonical.
    """
    n = state.n_qubits
    st = state if state.ortho_center == 0 else _canonical_right(state)
    carry = np.ones((1, 1, 1), dtype=complex)  # (new bond, mps bond, mpo bond)
    tensors: list[np.ndarray] = []
    retained = 1.0
    for i in range(n):
        a = st.tensors[i]
        w = op.tensors[i]
        t = np.tensordot(carry, a, axes=(1, 0))            # (new, w, s, m')
        t = np.tensordot(t, w, axes=([1, 2], [0, 2]))      # (new, m', o, w')
        t = t.transpose(0, 2, 1, 3)                        # (new, o, m', w')
        nl, _, mr, wr = t.shape
        if i == n - 1:
            tensors.append(t.reshape(nl, 2, 1))
            break
        u, s, vh = svd_safe(t.reshape(nl * 2, mr * wr))
        k = truncation_rank(s, policy.chi_max, policy.weight_cutoff)
        retained *= kept_fraction(s, k)
        tensors.append(u[:, :k].reshape(nl, 2, k))
        carry = (s[:k, None] * vh[:k]).reshape(k, mr, wr)
    nrm = np.linalg.norm(tensors[-1])
    if nrm == 0.0:
        raise ValueError("operator annihilated the state")
    tensors[-1] = tensors[-1] / nrm
    log_retained = math.log(retained) if retained > 0 else -math.inf
    out = MPS(tensors, ortho_center=n - 1,
              log_norm_discarded=state.log_norm_discarded + log_retained)
    return out, 1.0 - retained


def _canonical_right(state: MPS) -> MPS:
    from .mps import canonicalize

    return canonicalize(state, 0)


def _env_update_right(r_env, phi_t, w_t, psi_t):
    """Grow a right environment (phi bond, mpo bond, mps bond) by one site."""
    t = np.tensordot(psi_t, r_env, axes=(2, 2))                 # (m, s, f', w')
    t = np.tensordot(w_t, t, axes=([2, 3], [1, 3]))             # (w, o, m, f')
    return np.tensordot(phi_t.conj(), t, axes=([1, 2], [1, 3]))  # (f, w, m)


def _env_update_left(l_env, phi_t, w_t, psi_t):
    """Grow a left environment (phi bond, mpo bond, mps bond) by one site."""
    t = np.tensordot(l_env, psi_t, axes=(2, 0))                 # (f, w, s, m')
    t = np.tensordot(t, w_t, axes=([1, 2], [0, 2]))             # (f, m', o, w')
    env = np.tensordot(phi_t.conj(), t, axes=([0, 1], [0, 2]))  # (f', m', w')
    return env.transpose(0, 2, 1)                               # (f', w', m')


def _two_site_block(l_env, w1, w2, a1, a2, r_env):
    """Environment of an open two-site block of <phi|O|psi>; this is the
    unnormalized optimizer of the local overlap."""
    t = np.tensordot(l_env, a1, axes=(2, 0))                    # (f, w, s, m')
    t = np.tensordot(t, w1, axes=([1, 2], [0, 2]))              # (f, m', o1, w')
    t2 = np.tensordot(a2, r_env, axes=(2, 2))                   # (m', t, f'', w'')
    t2 = np.tensordot(w2, t2, axes=([2, 3], [1, 3]))            # (w', o2, m', f'')
    return np.tensordot(t, t2, axes=([1, 3], [2, 0]))           # (f, o1, o2, f'')


def _variational_fit(
    state: MPS, op: MPO, start: MPS, policy: TruncationPolicy
) -> tuple[MPS, float]:
    """Alternating two-site sweeps maximizing |<phi|O|psi>|^2 over phi with
    capped bonds, starting from the zip-up result.

    The best iterate seen (including the start) is returned, so the fit
    never ends up worse than its initialization.
    """
    n = state.n_qubits
    if n == 1:
        return start, 0.0
    phi = list(start.tensors)
    psi = state.tensors
    w = op.tensors

    # start is left-canonical: left environments are valid as built
    l_envs = [np.ones((1, 1, 1), dtype=complex)]
    for i in range(n - 1):
        l_envs.append(_env_update_left(l_envs[i], phi[i], w[i], psi[i]))
    r_envs: list = [None] * (n + 1)
    r_envs[n] = np.ones((1, 1, 1), dtype=complex)
    r_envs[n - 1] = _env_update_right(r_envs[n], phi[n - 1], w[n - 1], psi[n - 1])

    # <phi|O|psi> for the normalized start (norm 1 by construction)
    best_ov = abs(complex(np.tensordot(
        l_envs[n - 1], r_envs[n - 1], axes=([0, 1, 2], [0, 1, 2]))))
    best = list(phi)
    best_center = n - 1
    prev_ov = best_ov

    direction = -1  # start sweeping right-to-left: the center sits at n - 1
    for _ in range(policy.sweeps):
        ov = prev_ov
        if direction < 0:
            for i in range(n - 2, -1, -1):
                block = _two_site_block(l_envs[i], w[i], w[i + 1], psi[i], psi[i + 1],
                                        r_envs[i + 2])
                fl, _, _, fr = block.shape
                u, s, vh = svd_safe(block.reshape(fl * 2, 2 * fr))
                k = truncation_rank(s, policy.chi_max, policy.weight_cutoff)
                ov = float(np.linalg.norm(s[:k]))
                phi[i + 1] = vh[:k].reshape(k, 2, fr)
                phi[i] = (u[:, :k] * s[:k]).reshape(fl, 2, k) / (ov if ov > 0 else 1.0)
                r_envs[i + 1] = _env_update_right(r_envs[i + 2], phi[i + 1], w[i + 1],
                                                  psi[i + 1])
            pass_center = 0
        else:
            for i in range(n - 1):
                block = _two_site_block(l_envs[i], w[i], w[i + 1], psi[i], psi[i + 1],
                                        r_envs[i + 2])
                fl, _, _, fr = block.shape
                u, s, vh = svd_safe(block.reshape(fl * 2, 2 * fr))
                k = truncation_rank(s, policy.chi_max, policy.weight_cutoff)
                ov = float(np.linalg.norm(s[:k]))
                phi[i] = u[:, :k].reshape(fl, 2, k)
                phi[i + 1] = (s[:k, None] * vh[:k]).reshape(k, 2, fr) / (ov if ov > 0 else 1.0)
                l_envs[i + 1] = _env_update_left(l_envs[i], phi[i], w[i], psi[i])
            pass_center = n - 1
        if ov > best_ov:
            best_ov = ov
            best = list(phi)
            best_center = pass_center
        gain = ov * ov - prev_ov * prev_ov
        prev_ov = ov
        direction = -direction
        if gain < policy.tolerance:
            break

    # under the unitary-gate assumption the overlap cannot exceed one;
    # clamp the ulp-level excess so the retained-norm log stays <= 0
    retained = min(1.0, best_ov * best_ov)
    out = MPS(best, ortho_center=best_center,
              log_norm_discarded=state.log_norm_discarded
              + (math.log(retained) if retained > 0 else -math.inf))
    return out, 1.0 - retained
