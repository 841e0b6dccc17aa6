"""Circuit builders and a runner that executes circuits on an MPS.

A :class:`Circuit` is an ordered list of gate layers, one gate per layer,
plus named phase markers that delimit regions such as state preparation or
an inverse transform.  Single-qubit gates carry their 2x2 matrix directly;
everything acting on two or more qubits is described by a
:class:`~chisim.mpo.GateSpec` and applied as an MPO.

Serialization is a line-oriented text format with 1-based qubit numbers::

    QUBITS 4
    #phase prep
    H 1
    X 2
    Z 3
    U 1 <eight floats: re/im of the row-major 2x2 matrix>
    RK 2 CONTROL 3 TARGET 1
    RKDAG 2 CONTROL 3 TARGET 1
    SWAP 1 4
    MCZ CONTROLS 1,2 TARGET 3
    CU CONTROLS 1,2 TARGET 3 <eight floats>

Floats are written with ``repr`` so that a write/read round trip is
bit-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gates
from .mpo import GateSpec, apply_mpo, gate_mpo
from .mps import (
    MPS,
    EntropySnapshot,
    TruncationPolicy,
    amplitude,
    apply_single_qubit_gate,
    entropy_profile,
)


@dataclass(eq=False)
class SingleQubitLayer:
    site: int
    matrix: np.ndarray
    name: str = "U"


@dataclass(eq=False)
class MpoLayer:
    spec: GateSpec


Layer = SingleQubitLayer | MpoLayer


@dataclass
class EntropyMap:
    """Per-layer bond-entropy history of a circuit run.

    ``snapshots[k]`` holds the profile after ``k`` layers have been
    applied; row 0 is the initial state.
    """

    snapshots: list[EntropySnapshot] = field(default_factory=list)
    phase_markers: list[tuple[int, str]] = field(default_factory=list)

    def to_array(self) -> np.ndarray:
        return np.array([snap.entropies for snap in self.snapshots])


class Circuit:
    """Gate list on a fixed number of qubits with named phase regions."""

    def __init__(self, n_qubits: int) -> None:
        if n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        self.n_qubits = n_qubits
        self.layers: list[Layer] = []
        self.phase_markers: list[tuple[int, str]] = []

    # -- construction helpers -------------------------------------------------

    def _check_site(self, site: int) -> None:
        if not 0 <= site < self.n_qubits:
            raise ValueError(f"site {site} out of range for {self.n_qubits} qubits")

    def begin_phase(self, name: str) -> "Circuit":
        self.phase_markers.append((len(self.layers), name))
        return self

    def add_single(self, site: int, matrix: np.ndarray, name: str = "U") -> "Circuit":
        self._check_site(site)
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got {matrix.shape}")
        self.layers.append(SingleQubitLayer(site, matrix, name))
        return self

    def add_h(self, site: int) -> "Circuit":
        return self.add_single(site, gates.HADAMARD, "H")

    def add_x(self, site: int) -> "Circuit":
        return self.add_single(site, gates.PAULI_X, "X")

    def add_z(self, site: int) -> "Circuit":
        return self.add_single(site, gates.PAULI_Z, "Z")

    def add_spec(self, spec: GateSpec) -> "Circuit":
        for s in (*spec.controls, *spec.sites):
            self._check_site(s)
        if spec.target is not None:
            self._check_site(spec.target)
        self.layers.append(MpoLayer(spec))
        return self

    def add_crk(self, k: int, control: int, target: int, dagger: bool = False) -> "Circuit":
        if control == target:
            raise ValueError("control and target must differ")
        return self.add_spec(GateSpec("rk", target=target, controls=(control,), k=k,
                                      dagger=dagger))

    def add_swap(self, i: int, j: int) -> "Circuit":
        return self.add_spec(GateSpec("swap", sites=(i, j)))

    def add_mcz(self, controls, target: int) -> "Circuit":
        return self.add_spec(GateSpec("mcz", target=target, controls=tuple(controls)))

    def add_cu(self, controls, target: int, matrix: np.ndarray) -> "Circuit":
        return self.add_spec(GateSpec("cu", target=target, controls=tuple(controls),
                                      matrix=np.asarray(matrix, dtype=complex)))

    def add_cnot(self, control: int, target: int) -> "Circuit":
        return self.add_cu((control,), target, gates.PAULI_X)

    def extend(self, other: "Circuit", offset: int = 0, with_markers: bool = False) -> "Circuit":
        """Append another circuit's layers, shifting its sites by ``offset``."""
        if offset < 0 or offset + other.n_qubits > self.n_qubits:
            raise ValueError("embedded circuit does not fit")
        base = len(self.layers)
        if with_markers:
            self.phase_markers.extend((base + i, name) for i, name in other.phase_markers)
        for layer in other.layers:
            if isinstance(layer, SingleQubitLayer):
                self.add_single(layer.site + offset, layer.matrix, layer.name)
            else:
                sp = layer.spec
                self.add_spec(GateSpec(
                    sp.kind,
                    target=None if sp.target is None else sp.target + offset,
                    controls=tuple(c + offset for c in sp.controls),
                    sites=tuple(s + offset for s in sp.sites),
                    k=sp.k, dagger=sp.dagger, matrix=sp.matrix,
                ))
        return self

    # -- equality --------------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Circuit):
            return NotImplemented
        if self.n_qubits != other.n_qubits or self.phase_markers != other.phase_markers:
            return False
        if len(self.layers) != len(other.layers):
            return False
        return all(_layer_equal(a, b) for a, b in zip(self.layers, other.layers))

    def __len__(self) -> int:
        return len(self.layers)

    # -- serialization ----------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"QUBITS {self.n_qubits}"]
        markers = sorted(range(len(self.phase_markers)),
                         key=lambda i: self.phase_markers[i][0])
        mpos = 0
        for idx, layer in enumerate(self.layers):
            while mpos < len(markers) and self.phase_markers[markers[mpos]][0] == idx:
                lines.append(f"#phase {self.phase_markers[markers[mpos]][1]}")
                mpos += 1
            lines.append(_layer_to_line(layer))
        while mpos < len(markers):
            lines.append(f"#phase {self.phase_markers[markers[mpos]][1]}")
            mpos += 1
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        circuit: Circuit | None = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#phase"):
                if circuit is None:
                    raise ValueError("circuit file must start with a QUBITS line")
                circuit.begin_phase(line[len("#phase"):].strip())
                continue
            if line.startswith("#"):
                continue
            tokens = line.split()
            if circuit is None:
                if tokens[0] != "QUBITS":
                    raise ValueError("circuit file must start with a QUBITS line")
                circuit = cls(int(tokens[1]))
                continue
            _parse_gate_line(circuit, tokens)
        if circuit is None:
            raise ValueError("empty circuit file")
        return circuit


def _layer_equal(a: Layer, b: Layer) -> bool:
    if isinstance(a, SingleQubitLayer) and isinstance(b, SingleQubitLayer):
        return a.site == b.site and a.name == b.name and np.array_equal(a.matrix, b.matrix)
    if isinstance(a, MpoLayer) and isinstance(b, MpoLayer):
        sa, sb = a.spec, b.spec
        if (sa.kind, sa.target, sa.controls, sa.sites, sa.k, sa.dagger) != (
                sb.kind, sb.target, sb.controls, sb.sites, sb.k, sb.dagger):
            return False
        if (sa.matrix is None) != (sb.matrix is None):
            return False
        return sa.matrix is None or np.array_equal(sa.matrix, sb.matrix)
    return False


def _matrix_fields(matrix: np.ndarray) -> str:
    parts = []
    for entry in np.asarray(matrix, dtype=complex).reshape(-1):
        parts.append(repr(float(entry.real)))
        parts.append(repr(float(entry.imag)))
    return " ".join(parts)


def _parse_matrix(tokens: list[str]) -> np.ndarray:
    if len(tokens) != 8:
        raise ValueError(f"expected 8 floats for a 2x2 matrix, got {len(tokens)}")
    vals = [float(t) for t in tokens]
    return np.array([complex(vals[2 * i], vals[2 * i + 1]) for i in range(4)],
                    dtype=complex).reshape(2, 2)


def _layer_to_line(layer: Layer) -> str:
    if isinstance(layer, SingleQubitLayer):
        if layer.name in ("H", "X", "Z"):
            return f"{layer.name} {layer.site + 1}"
        return f"U {layer.site + 1} {_matrix_fields(layer.matrix)}"
    sp = layer.spec
    if sp.kind == "rk":
        op = "RKDAG" if sp.dagger else "RK"
        return f"{op} {sp.k} CONTROL {sp.controls[0] + 1} TARGET {sp.target + 1}"
    if sp.kind == "swap":
        return f"SWAP {sp.sites[0] + 1} {sp.sites[1] + 1}"
    if sp.kind == "mcz":
        ctrl = ",".join(str(c + 1) for c in sp.controls)
        return f"MCZ CONTROLS {ctrl} TARGET {sp.target + 1}"
    if sp.kind == "cu":
        ctrl = ",".join(str(c + 1) for c in sp.controls)
        return f"CU CONTROLS {ctrl} TARGET {sp.target + 1} {_matrix_fields(sp.matrix)}"
    if sp.kind in ("h", "x", "z"):
        return f"{sp.kind.upper()} {sp.target + 1}"
    raise ValueError(f"cannot serialize gate kind {sp.kind!r}")


def _parse_gate_line(circuit: Circuit, tokens: list[str]) -> None:
    op = tokens[0]
    if op in ("H", "X", "Z"):
        site = int(tokens[1]) - 1
        circuit.add_single(site, {"H": gates.HADAMARD, "X": gates.PAULI_X,
                                  "Z": gates.PAULI_Z}[op], op)
    elif op == "U":
        circuit.add_single(int(tokens[1]) - 1, _parse_matrix(tokens[2:]), "U")
    elif op in ("RK", "RKDAG"):
        if tokens[2] != "CONTROL" or tokens[4] != "TARGET":
            raise ValueError(f"malformed rotation line: {' '.join(tokens)}")
        circuit.add_crk(int(tokens[1]), int(tokens[3]) - 1, int(tokens[5]) - 1,
                        dagger=op == "RKDAG")
    elif op == "SWAP":
        circuit.add_swap(int(tokens[1]) - 1, int(tokens[2]) - 1)
    elif op == "MCZ":
        if tokens[1] != "CONTROLS" or tokens[3] != "TARGET":
            raise ValueError(f"malformed MCZ line: {' '.join(tokens)}")
        controls = tuple(int(c) - 1 for c in tokens[2].split(","))
        circuit.add_mcz(controls, int(tokens[4]) - 1)
    elif op == "CU":
        if tokens[1] != "CONTROLS" or tokens[3] != "TARGET":
            raise ValueError(f"malformed CU line: {' '.join(tokens)}")
        controls = tuple(int(c) - 1 for c in tokens[2].split(","))
        circuit.add_cu(controls, int(tokens[4]) - 1, _parse_matrix(tokens[5:]))
    else:
        raise ValueError(f"unknown gate {op!r}")


# -- transform builders ---------------------------------------------------------


def build_qft(n_qubits: int, final_swaps: bool = True) -> Circuit:
    """Fourier-transform circuit: per target qubit a Hadamard followed by
    controlled rotations from the qubits below, then a swap network that
    reverses the qubit order."""
    c = Circuit(n_qubits)
    for j in range(n_qubits):
        c.add_h(j)
        for k in range(2, n_qubits - j + 1):
            c.add_crk(k, control=j + k - 1, target=j)
    if final_swaps:
        for i in range(n_qubits // 2):
            c.add_swap(i, n_qubits - 1 - i)
    return c


def build_aqft(n_qubits: int, cutoff: int, final_swaps: bool = True) -> Circuit:
    """Approximate Fourier transform: rotations with k > cutoff are omitted.

    ``cutoff = n_qubits`` reproduces :func:`build_qft` gate for gate.
    """
    if cutoff < 2 or cutoff > n_qubits:
        raise ValueError(f"cutoff must satisfy 2 <= l <= {n_qubits}, got {cutoff}")
    c = Circuit(n_qubits)
    for j in range(n_qubits):
        c.add_h(j)
        for k in range(2, n_qubits - j + 1):
            if k <= cutoff:
                c.add_crk(k, control=j + k - 1, target=j)
    if final_swaps:
        for i in range(n_qubits // 2):
            c.add_swap(i, n_qubits - 1 - i)
    return c


def invert(circuit: Circuit) -> Circuit:
    """Reversed layer order with every gate conjugate-transposed."""
    inv = Circuit(circuit.n_qubits)
    for layer in reversed(circuit.layers):
        if isinstance(layer, SingleQubitLayer):
            inv.add_single(layer.site, layer.matrix.conj().T, layer.name)
        else:
            sp = layer.spec
            if sp.kind == "rk":
                inv.add_crk(sp.k, sp.controls[0], sp.target, dagger=not sp.dagger)
            elif sp.kind == "cu":
                inv.add_cu(sp.controls, sp.target, sp.matrix.conj().T)
            else:  # swap, mcz, h, x, z are self-inverse
                inv.add_spec(sp)
    total = len(circuit.layers)
    starts = [idx for idx, _ in circuit.phase_markers]
    ends = starts[1:] + [total]
    for (start, name), end in zip(reversed(circuit.phase_markers), reversed(ends)):
        inv.phase_markers.append((total - end, name))
    return inv


def build_random_state_circuit(n_qubits: int, depth_layers: int = 20,
                               seed: int = 0) -> Circuit:
    """Scrambling circuit of alternating random single-qubit unitaries and
    brickwork CNOT layers, deterministic for a given seed."""
    if n_qubits < 2:
        raise ValueError("random-state preparation needs at least 2 qubits")
    rng = np.random.default_rng(seed)
    c = Circuit(n_qubits)
    for layer in range(depth_layers):
        if layer % 2 == 0:
            for q in range(n_qubits):
                c.add_single(q, gates.haar_unitary(rng), "U")
        else:
            start = 0 if (layer // 2) % 2 == 0 else 1
            for a in range(start, n_qubits - 1, 2):
                c.add_cnot(a, a + 1)
    return c


# -- Grover / counting ------------------------------------------------------------


@dataclass(frozen=True)
class GroverProblem:
    """Search instance: which basis bitstrings of an N-qubit register are marked."""

    n_qubits: int
    marked: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if not self.marked:
            raise ValueError("at least one marked item is required")
        if len(set(self.marked)) != len(self.marked):
            raise ValueError("marked items must be distinct")
        if len(self.marked) >= 2**self.n_qubits:
            raise ValueError("cannot mark the whole database")
        for w in self.marked:
            if len(w) != self.n_qubits or any(ch not in "01" for ch in w):
                raise ValueError(f"bad marked bitstring {w!r}")

    @property
    def n(self) -> int:
        return 2**self.n_qubits

    @property
    def m(self) -> int:
        return len(self.marked)

    @property
    def alpha(self) -> float:
        """Rotation angle with sin(alpha) = sqrt(m/n)."""
        return math.asin(math.sqrt(self.m / self.n))


def random_problem(n_qubits: int, m: int, rng: np.random.Generator) -> GroverProblem:
    """Draw ``m`` distinct marked items uniformly at random."""
    picks = rng.choice(2**n_qubits, size=m, replace=False)
    marked = tuple(format(int(p), f"0{n_qubits}b") for p in picks)
    return GroverProblem(n_qubits, marked)


def optimal_iterations(n: int, m: int) -> int:
    """ceil(pi/4 * sqrt(n/m)) Grover iterations."""
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    return math.ceil(math.pi / 4.0 * math.sqrt(n / m))


def build_grover_oracle(problem: GroverProblem) -> Circuit:
    """Sign flip on every marked item: each one is mapped to |1...1> by X
    gates, phase-flipped by a multi-controlled Z, and mapped back."""
    c = Circuit(problem.n_qubits)
    for w in problem.marked:
        _append_marked_flip(c, w, control=None, offset=0)
    return c


def build_grover_diffuser(n_qubits: int) -> Circuit:
    """Reflection about the uniform superposition, as H / X conjugation of a
    multi-controlled Z (equal to 1 - 2|s><s| with no extra phase)."""
    c = Circuit(n_qubits)
    for q in range(n_qubits):
        c.add_h(q)
    _append_zero_flip(c, control=None, offset=0, width=n_qubits)
    for q in range(n_qubits):
        c.add_h(q)
    return c


def _append_marked_flip(c: Circuit, bits: str, control: int | None, offset: int) -> None:
    """Phase flip of one basis state of the register starting at ``offset``;
    with ``control`` set, the flip is conditioned on that qubit."""
    width = len(bits)
    flips = [offset + j for j, ch in enumerate(bits) if ch == "0"]
    for q in flips:
        c.add_x(q)
    target = offset + width - 1
    controls = tuple(range(offset, target))
    if control is not None:
        controls = (control, *controls)
    if controls:
        c.add_mcz(controls, target)
    else:
        c.add_z(target)
    for q in flips:
        c.add_x(q)


def _append_zero_flip(c: Circuit, control: int | None, offset: int, width: int) -> None:
    """Phase flip of |0...0> on the register starting at ``offset``."""
    _append_marked_flip(c, "0" * width, control, offset)


def grover_iteration(problem: GroverProblem) -> Circuit:
    """One Grover step: oracle followed by the diffuser."""
    c = Circuit(problem.n_qubits)
    c.extend(build_grover_oracle(problem))
    c.extend(build_grover_diffuser(problem.n_qubits))
    return c


def build_grover_circuit(problem: GroverProblem, iterations: int) -> Circuit:
    """Uniform-superposition preparation plus ``iterations`` Grover steps."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    c = Circuit(problem.n_qubits)
    c.begin_phase("prep")
    for q in range(problem.n_qubits):
        c.add_h(q)
    step = grover_iteration(problem)
    for r in range(iterations):
        c.begin_phase(f"iteration {r + 1}")
        c.extend(step)
    return c


def grover_fidelity(problem: GroverProblem, iterations: int,
                    policy: TruncationPolicy) -> float:
    """Probability of measuring any marked item after ``iterations`` Grover
    steps under the truncation policy.

    Each marked item is a product state, so its overlap is a single
    amplitude evaluation; the squared overlaps summed over the marked set
    give the weight of the marked subspace, which reaches one when the
    state is the even superposition of all marked items.
    """
    circuit = build_grover_circuit(problem, iterations)
    state = product_state_zeros(problem.n_qubits)
    state, _ = run_circuit(state, circuit, policy)
    return sum(abs(amplitude(state, w)) ** 2 for w in problem.marked)


def product_state_zeros(n_qubits: int) -> MPS:
    from .mps import product_state

    return product_state([0] * n_qubits)


def build_counting_circuit(n_top: int, n_bottom: int, problem: GroverProblem,
                           aqft_cutoff: int | None = None) -> Circuit:
    """Phase estimation of the Grover operator.

    Top qubit t controls 2**(n_top - 1 - t) sequential applications of the
    controlled Grover step, so the top register accumulates the eigenphases
    exp(+-2i*alpha); the inverse (approximate) Fourier transform then maps
    them to measurable bit patterns, most significant bit first.

    The single-qubit basis-change layers inside the oracle and diffuser are
    left uncontrolled (conjugation commutes with adding a control); only the
    multi-controlled Z gates acquire the top control.  A Z on the control
    qubit after each diffuser supplies the global phase that turns the
    circuit reflection 1 - 2|s><s| into 2|s><s| - 1, which is what the
    eigenphase readout assumes.
    """
    if problem.n_qubits != n_bottom:
        raise ValueError(f"problem acts on {problem.n_qubits} qubits, expected {n_bottom}")
    if n_top < 3:
        raise ValueError("the readout register needs at least 3 qubits")
    n = n_top + n_bottom
    c = Circuit(n)
    c.begin_phase("top register prep")
    for q in range(n_top):
        c.add_h(q)
    c.begin_phase("search register prep")
    for q in range(n_top, n):
        c.add_h(q)
    for t in range(n_top):
        power = 2 ** (n_top - 1 - t)
        c.begin_phase(f"controlled G^{power}")
        for _ in range(power):
            _append_controlled_grover(c, problem, control=t, offset=n_top)
    c.begin_phase("inverse QFT")
    if aqft_cutoff is None:
        c.extend(invert(build_qft(n_top)))
    else:
        c.extend(invert(build_aqft(n_top, aqft_cutoff)))
    return c


def _append_controlled_grover(c: Circuit, problem: GroverProblem, control: int,
                              offset: int) -> None:
    width = problem.n_qubits
    for w in problem.marked:
        _append_marked_flip(c, w, control=control, offset=offset)
    for q in range(offset, offset + width):
        c.add_h(q)
    _append_zero_flip(c, control=control, offset=offset, width=width)
    for q in range(offset, offset + width):
        c.add_h(q)
    c.add_z(control)  # controlled global phase of the reflection


# -- execution ---------------------------------------------------------------------


def run_circuit(state: MPS, circuit: Circuit, policy: TruncationPolicy,
                record_entropy: bool = False) -> tuple[MPS, EntropyMap | None]:
    """Apply every layer in order; single-qubit gates act exactly, MPO gates
    go through :func:`~chisim.mpo.apply_mpo` under the policy.

    With ``record_entropy`` an :class:`EntropyMap` is returned whose row k
    is the bond-entropy profile after k layers (row 0 is the input state).
    """
    if state.n_qubits != circuit.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, circuit needs "
                         f"{circuit.n_qubits}")
    emap = None
    if record_entropy:
        emap = EntropyMap(phase_markers=list(circuit.phase_markers))
        emap.snapshots.append(EntropySnapshot(0, entropy_profile(state)))
    for idx, layer in enumerate(circuit.layers):
        if isinstance(layer, SingleQubitLayer):
            state = apply_single_qubit_gate(state, layer.matrix, layer.site)
        else:
            state, _ = apply_mpo(state, gate_mpo(layer.spec, circuit.n_qubits), policy)
        if emap is not None:
            emap.snapshots.append(EntropySnapshot(idx + 1, entropy_profile(state)))
    return state, emap
