"""MPO gate construction and application against dense projector-sum oracles."""

import numpy as np
import pytest

import chisim as cs
from chisim import gates
from chisim.mpo import GateSpec, identity_mpo

from conftest import dense_controlled, dense_swap, random_mps


class TestControlledMpo:
    def test_five_qubit_multicontrol_example(self):
        # X on qubit 2 controlled by qubits {0, 3, 4}; qubit 1 is a spectator
        op = cs.controlled_mpo(5, {0, 3, 4}, 2, gates.PAULI_X)
        dense = cs.mpo_to_dense(op)
        oracle = dense_controlled(5, {0, 3, 4}, 2, gates.PAULI_X)
        assert np.abs(dense - oracle).max() < 1e-10
        assert op.bond_dimensions == [3, 3, 3, 3]

    def test_cnot_on_basis_state(self):
        op = cs.controlled_mpo(2, {0}, 1, gates.PAULI_X)
        out, _ = cs.apply_mpo(cs.product_state([1, 0]), op, cs.TruncationPolicy(4))
        assert abs(cs.amplitude(out, "11")) == pytest.approx(1.0, abs=1e-12)

    def test_controlled_rotation_phase(self):
        # CR_2 on |11> multiplies by e^{2 pi i / 4} = i
        op = cs.controlled_mpo(2, {0}, 1, gates.phase_rotation(2))
        out, _ = cs.apply_mpo(cs.product_state([1, 1]), op, cs.TruncationPolicy(4))
        assert abs(cs.amplitude(out, "11") - 1j) < 1e-12

    @pytest.mark.parametrize("trial", range(25))
    def test_random_cases_match_projector_sum(self, trial):
        rng = np.random.default_rng(5000 + trial)
        n = int(rng.integers(2, 9))
        size = int(rng.integers(2, n + 1))
        sites = rng.choice(n, size=size, replace=False)
        target = int(sites[0])
        controls = {int(s) for s in sites[1:]}
        u = gates.haar_unitary(rng)
        op = cs.controlled_mpo(n, controls, target, u)
        assert np.abs(cs.mpo_to_dense(op)
                      - dense_controlled(n, controls, target, u)).max() < 1e-10

    def test_bond_profile(self):
        op = cs.controlled_mpo(7, {2}, 5, gates.PAULI_Z)
        assert op.bond_dimensions == [1, 1, 3, 3, 3, 1]

    def test_bond_never_exceeds_three(self, rng):
        for _ in range(10):
            n = int(rng.integers(3, 9))
            sites = rng.choice(n, size=int(rng.integers(2, n + 1)), replace=False)
            op = cs.controlled_mpo(n, set(map(int, sites[1:])), int(sites[0]),
                                   gates.haar_unitary(rng))
            assert max(op.bond_dimensions) <= 3

    def test_separation_independence_on_basis_states(self):
        # control at one end, target at the other, all register sizes to 8
        for n in range(2, 9):
            op = cs.controlled_mpo(n, {0}, n - 1, gates.PAULI_X)
            oracle = dense_controlled(n, {0}, n - 1, gates.PAULI_X)
            for idx in (0, 2**(n - 1), 2**n - 1):
                bits = format(idx, f"0{n}b")
                out, _ = cs.apply_mpo(cs.product_state(bits), op,
                                      cs.TruncationPolicy(4))
                assert np.abs(cs.to_statevector(out) - oracle[:, idx]).max() < 1e-10

    def test_unitary_at_dense_scale(self, rng):
        for n in (4, 6, 8):
            sites = rng.choice(n, size=3, replace=False)
            op = cs.controlled_mpo(n, set(map(int, sites[1:])), int(sites[0]),
                                   gates.haar_unitary(rng))
            dense = cs.mpo_to_dense(op)
            assert np.abs(dense.conj().T @ dense - np.eye(2**n)).max() < 1e-10

    def test_empty_controls_rejected(self):
        with pytest.raises(ValueError):
            cs.controlled_mpo(3, set(), 1, gates.PAULI_X)

    def test_overlapping_indices_rejected(self):
        with pytest.raises(ValueError):
            cs.controlled_mpo(3, {1}, 1, gates.PAULI_X)


class TestSwapMpo:
    def test_adjacent_swap(self):
        op = cs.swap_mpo(2, 0, 1)
        out, _ = cs.apply_mpo(cs.product_state([1, 0]), op, cs.TruncationPolicy(4))
        assert abs(cs.amplitude(out, "01")) == pytest.approx(1.0, abs=1e-12)

    def test_distant_swap(self):
        op = cs.swap_mpo(3, 0, 2)
        out, _ = cs.apply_mpo(cs.product_state([1, 0, 0]), op, cs.TruncationPolicy(4))
        assert abs(cs.amplitude(out, "001")) == pytest.approx(1.0, abs=1e-12)

    def test_involution(self, rng):
        psi = random_mps(5, 4, rng)
        op = cs.swap_mpo(5, 1, 4)
        policy = cs.TruncationPolicy(64)
        once, _ = cs.apply_mpo(psi, op, policy)
        twice, _ = cs.apply_mpo(once, op, policy)
        assert cs.fidelity(twice, psi) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n,i,j", [(2, 0, 1), (4, 1, 3), (6, 0, 5), (8, 2, 7)])
    def test_matches_permutation_matrix(self, n, i, j):
        assert np.abs(cs.mpo_to_dense(cs.swap_mpo(n, i, j))
                      - dense_swap(n, i, j)).max() < 1e-12

    def test_same_site_rejected(self):
        with pytest.raises(ValueError):
            cs.swap_mpo(3, 1, 1)


class TestApplyMpo:
    def test_cnot_creates_bell(self):
        plus0 = cs.apply_single_qubit_gate(cs.product_state([0, 0]),
                                           gates.HADAMARD, 0)
        op = cs.controlled_mpo(2, {0}, 1, gates.PAULI_X)
        out, dw = cs.apply_mpo(plus0, op, cs.TruncationPolicy(2))
        assert cs.entropy_profile(out) == pytest.approx([np.log(2)], abs=1e-12)
        assert dw < 1e-12

    def test_cnot_truncated_to_product(self):
        plus0 = cs.apply_single_qubit_gate(cs.product_state([0, 0]),
                                           gates.HADAMARD, 0)
        op = cs.controlled_mpo(2, {0}, 1, gates.PAULI_X)
        bell, _ = cs.apply_mpo(plus0, op, cs.TruncationPolicy(2))
        out, dw = cs.apply_mpo(plus0, op, cs.TruncationPolicy(1))
        assert cs.fidelity(out, bell) == pytest.approx(0.5, abs=1e-12)
        assert dw == pytest.approx(0.5, abs=1e-6)

    @pytest.mark.parametrize("method", ["zipup", "variational"])
    def test_matches_dense_product(self, method, rng):
        psi = random_mps(3, 2, rng)
        op = cs.controlled_mpo(3, {0, 2}, 1, gates.PAULI_Z)
        policy = cs.TruncationPolicy(8, method=method)
        out, _ = cs.apply_mpo(psi, op, policy)
        expected = cs.mpo_to_dense(op) @ cs.to_statevector(psi)
        assert np.abs(cs.to_statevector(out) - expected).max() < 1e-10

    def test_norm_preserved_at_full_chi(self, rng):
        psi = random_mps(7, 5, rng)
        op = cs.swap_mpo(7, 0, 6)
        out, dw = cs.apply_mpo(psi, op, cs.TruncationPolicy(5 * 4))
        assert abs(out.norm() - 1.0) < 1e-10
        expected = dense_swap(7, 0, 6) @ cs.to_statevector(psi)
        assert abs(abs(np.vdot(cs.to_statevector(out), expected)) - 1.0) < 1e-10
        assert dw < 1e-10

    @pytest.mark.parametrize("chi", [2, 3, 4, 6])
    def test_variational_at_least_zipup(self, chi, rng):
        psi = random_mps(8, 6, rng)
        op = cs.swap_mpo(8, 0, 7)
        target = cs.mpo_to_dense(op, max_qubits=8) @ cs.to_statevector(psi)
        zipped, _ = cs.apply_mpo(psi, op, cs.TruncationPolicy(chi, method="zipup"))
        fitted, _ = cs.apply_mpo(psi, op, cs.TruncationPolicy(chi, sweeps=4))
        f_zip = abs(np.vdot(cs.to_statevector(zipped), target)) ** 2
        f_var = abs(np.vdot(cs.to_statevector(fitted), target)) ** 2
        assert f_var >= f_zip - 1e-12

    def test_mismatched_sizes_rejected(self, rng):
        with pytest.raises(ValueError):
            cs.apply_mpo(random_mps(4, 2, rng), cs.swap_mpo(5, 0, 4),
                         cs.TruncationPolicy(4))


class TestMpoToDense:
    def test_identity(self):
        assert np.array_equal(cs.mpo_to_dense(identity_mpo(3)), np.eye(8))

    def test_cnot_matrix(self):
        dense = cs.mpo_to_dense(cs.controlled_mpo(2, {0}, 1, gates.PAULI_X))
        expected = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                            dtype=complex)
        assert np.abs(dense - expected).max() < 1e-13

    def test_five_qubit_example_unitary(self):
        dense = cs.mpo_to_dense(cs.controlled_mpo(5, {0, 3, 4}, 2, gates.PAULI_X))
        assert np.abs(dense.conj().T @ dense - np.eye(32)).max() < 1e-12

    def test_limit_enforced(self):
        with pytest.raises(ValueError):
            cs.mpo_to_dense(identity_mpo(13))


class TestGateSpec:
    def test_single_qubit_kinds(self):
        for kind, mat in (("h", gates.HADAMARD), ("x", gates.PAULI_X),
                          ("z", gates.PAULI_Z)):
            op = cs.gate_mpo(GateSpec(kind, target=1), 3)
            expected = np.kron(np.kron(np.eye(2), mat), np.eye(2))
            assert np.abs(cs.mpo_to_dense(op) - expected).max() < 1e-13

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            cs.gate_mpo(GateSpec("toffoli", target=0), 3)
