"""Shared helpers: random instances and brute-force matrix oracles.

The oracles build operators from Kronecker products of 2x2 matrices, an
independent route from the library's bit-manipulation kernels.
"""

import numpy as np
import pytest

from subspace_vqe import Circuit, Gate, PauliString, PauliSumOperator, StateVector

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_all(mats_by_qubit):
    """Operator with ``mats_by_qubit[k]`` on qubit k; qubit 0 is the least significant bit."""
    out = np.array([[1.0 + 0j]])
    for m in reversed(mats_by_qubit):
        out = np.kron(out, m)
    return out


def pauli_matrix(letters):
    return kron_all([PAULI[c] for c in letters])


def pauli_sum_matrix(op: PauliSumOperator):
    return sum(t.coefficient * pauli_matrix(t.letters) for t in op.terms)


def ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def single_qubit_full(q, k, m):
    mats = [I2] * q
    mats[k] = m
    return kron_all(mats)


def controlled_full(q, control, target, m):
    """|0><0|_c (x) I + |1><1|_c (x) m_t."""
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    a = [I2] * q
    a[control] = p0
    b = [I2] * q
    b[control] = p1
    b[target] = m
    return kron_all(a) + kron_all(b)


def gate_full(q, gate: Gate):
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    one = {
        "RY": lambda: ry(gate.angle),
        "RZ": lambda: rz(gate.angle),
        "H": lambda: h,
        "X": lambda: PAULI["X"],
        "SDG": lambda: np.diag([1, -1j]),
    }
    if gate.kind in one:
        return single_qubit_full(q, gate.qubits[0], one[gate.kind]())
    c, t = gate.qubits
    return controlled_full(q, c, t, PAULI["Z"] if gate.kind == "CZ" else PAULI["X"])


def random_gate(rng, q):
    kinds = ["RY", "RZ", "H", "X", "SDG"] + (["CZ", "CNOT"] if q > 1 else [])
    kind = kinds[rng.integers(len(kinds))]
    if kind in ("CZ", "CNOT"):
        a, b = rng.choice(q, size=2, replace=False)
        return Gate.cz(int(a), int(b)) if kind == "CZ" else Gate.cnot(int(a), int(b))
    k = int(rng.integers(q))
    if kind == "RY":
        return Gate.ry(k, rng.uniform(-4 * np.pi, 4 * np.pi))
    if kind == "RZ":
        return Gate.rz(k, rng.uniform(-4 * np.pi, 4 * np.pi))
    return {"H": Gate.h, "X": Gate.x, "SDG": Gate.sdg}[kind](k)


def random_circuit(rng, q, n_gates):
    return Circuit(q, [random_gate(rng, q) for _ in range(n_gates)])


def random_amplitudes(rng, q):
    v = rng.standard_normal(1 << q) + 1j * rng.standard_normal(1 << q)
    return v / np.linalg.norm(v)


def random_state(rng, q):
    return StateVector(q, random_amplitudes(rng, q))


def random_pauli_sum(rng, q, n_terms):
    terms = [
        PauliString(float(rng.standard_normal()), "".join(rng.choice(list("IXYZ"), size=q)))
        for _ in range(n_terms)
    ]
    return PauliSumOperator(q, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
