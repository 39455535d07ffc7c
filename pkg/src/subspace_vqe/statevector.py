"""Dense statevector simulation.

Conventions used throughout the package:

* qubit ``k`` is bit ``k`` of the amplitude index, so qubit 0 is the least
  significant bit; an ancilla, when present, is the highest-index qubit;
* ``Ry(t) = exp(-i t Y / 2)`` and ``Rz(t) = exp(-i t Z / 2)``;
* ``PauliString.letters[k]`` is the Pauli letter acting on qubit ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence, Union

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import DomainError, NumericalError

ONE_QUBIT_KINDS = frozenset({"RY", "RZ", "H", "X", "SDG"})
TWO_QUBIT_KINDS = frozenset({"CZ", "CNOT"})
PARAMETRIC_KINDS = frozenset({"RY", "RZ"})

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise DomainError(f"num_qubits must be >= 1, got {self.num_qubits}")
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise DomainError(
                f"expected {1 << self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())


def init_basis_state(num_qubits: int, index: int) -> StateVector:
    if num_qubits < 1:
        raise DomainError(f"num_qubits must be >= 1, got {num_qubits}")
    if not 0 <= index < (1 << num_qubits):
        raise DomainError(f"basis index {index} out of range for {num_qubits} qubits")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if kind in ONE_QUBIT_KINDS:
            arity = 1
        elif kind in TWO_QUBIT_KINDS:
            arity = 2
        else:
            raise DomainError(f"unsupported gate kind {self.kind!r}")
        if len(self.qubits) != arity:
            raise DomainError(f"{kind} acts on {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != arity or min(self.qubits) < 0:
            raise DomainError(f"invalid qubit indices {self.qubits} for {kind}")
        if kind in PARAMETRIC_KINDS:
            if self.angle is None or not np.isfinite(self.angle):
                raise DomainError(f"{kind} needs a finite angle, got {self.angle}")
            object.__setattr__(self, "angle", float(self.angle))

    @classmethod
    def ry(cls, qubit, angle):
        return cls("RY", (qubit,), angle)

    @classmethod
    def rz(cls, qubit, angle):
        return cls("RZ", (qubit,), angle)

    @classmethod
    def h(cls, qubit):
        return cls("H", (qubit,))

    @classmethod
    def x(cls, qubit):
        return cls("X", (qubit,))

    @classmethod
    def sdg(cls, qubit):
        return cls("SDG", (qubit,))

    @classmethod
    def cz(cls, a, b):
        return cls("CZ", (a, b))

    @classmethod
    def cnot(cls, control, target):
        return cls("CNOT", (control, target))


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=np.complex128)


_FIXED_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=np.complex128) * _INV_SQRT2,
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "SDG": np.array([[1, 0], [0, -1j]], dtype=np.complex128),
}


def gate_matrix(gate: Gate) -> np.ndarray:
    """Matrix of ``gate`` on its own qubits.

    Two-qubit gates use the local basis ``|q1 q0>`` where ``q0 = gate.qubits[0]``
    is the low bit, matching the global little-endian ordering.
    """
    if gate.kind == "RY":
        return ry_matrix(gate.angle)
    if gate.kind == "RZ":
        return rz_matrix(gate.angle)
    if gate.kind in _FIXED_1Q:
        return _FIXED_1Q[gate.kind].copy()
    if gate.kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(np.complex128)
    # CNOT with control = local bit 0, target = local bit 1
    m = np.zeros((4, 4), dtype=np.complex128)
    for i in range(4):
        j = i ^ 2 if i & 1 else i
        m[j, i] = 1
    return m


@dataclass(frozen=True)
class ControlledBlock:
    """Apply ``circuit`` only on the branch where ``control`` equals ``value``.

    ``circuit`` acts on the remaining qubits, numbered in order with the
    control removed (qubits above ``control`` shift down by one). With the
    control on the highest qubit this is the identity relabelling.
    """

    control: int
    value: int
    circuit: Circuit

    def __post_init__(self):
        if self.value not in (0, 1):
            raise DomainError(f"control value must be 0 or 1, got {self.value}")


Operation = Union[Gate, ControlledBlock]


@dataclass
class Circuit:
    num_qubits: int
    ops: list = field(default_factory=list)

    def append(self, op: Operation) -> Circuit:
        self.ops.append(op)
        return self

    def extend(self, ops: Sequence[Operation]) -> Circuit:
        self.ops.extend(ops)
        return self

    def __len__(self):
        return len(self.ops)


def _check_gate(gate: Gate, num_qubits: int):
    if max(gate.qubits) >= num_qubits:
        raise DomainError(f"gate {gate.kind}{gate.qubits} addresses a qubit >= {num_qubits}")


def _apply_gate_inplace(states: np.ndarray, gate: Gate):
    kind = gate.kind
    if kind == "CZ":
        _kernels.apply_cz(states, gate.qubits[0], gate.qubits[1])
    elif kind == "CNOT":
        _kernels.apply_cnot(states, gate.qubits[0], gate.qubits[1])
    else:
        m = gate_matrix(gate)
        _kernels.apply_1q(states, gate.qubits[0], m[0, 0], m[0, 1], m[1, 0], m[1, 1])


def _apply_ops_inplace(states: np.ndarray, num_qubits: int, ops: Sequence[Operation]):
    for op in ops:
        if isinstance(op, Gate):
            _check_gate(op, num_qubits)
            _apply_gate_inplace(states, op)
            continue
        c = op.control
        if not 0 <= c < num_qubits:
            raise DomainError(f"control qubit {c} out of range for {num_qubits} qubits")
        if op.circuit.num_qubits != num_qubits - 1:
            raise DomainError(
                f"controlled subcircuit has {op.circuit.num_qubits} qubits, "
                f"expected {num_qubits - 1}"
            )
        lo = 1 << c
        for row in states:
            branch = row.reshape(-1, 2, lo)[:, op.value, :]
            sub = np.ascontiguousarray(branch).reshape(1, -1)
            _apply_ops_inplace(sub, num_qubits - 1, op.circuit.ops)
            branch[...] = sub.reshape(branch.shape)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    _check_gate(gate, state.num_qubits)
    out = state.amplitudes.copy().reshape(1, -1)
    _apply_gate_inplace(out, gate)
    return StateVector(state.num_qubits, out[0])


def apply_circuit(state: StateVector, circuit: Circuit) -> StateVector:
    if circuit.num_qubits != state.num_qubits:
        raise DomainError(
            f"circuit has {circuit.num_qubits} qubits but state has {state.num_qubits}"
        )
    out = state.amplitudes.copy().reshape(1, -1)
    _apply_ops_inplace(out, state.num_qubits, circuit.ops)
    return StateVector(state.num_qubits, out[0])


def apply_circuit_batch(states: np.ndarray, circuit: Circuit) -> np.ndarray:
    """Apply ``circuit`` to every row of a ``(batch, 2**n)`` array (returns a copy)."""
    out = np.array(states, dtype=np.complex128, order="C", copy=True)
    if out.ndim != 2 or out.shape[1] != 1 << circuit.num_qubits:
        raise DomainError(f"batch shape {out.shape} does not match {circuit.num_qubits} qubits")
    _apply_ops_inplace(out, circuit.num_qubits, circuit.ops)
    return out


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return <a|b>."""
    if a.num_qubits != b.num_qubits:
        raise DomainError(f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


# ---------------------------------------------------------------- Pauli sums

_PAULI_LETTERS = frozenset("IXYZ")


@dataclass(frozen=True)
class PauliString:
    coefficient: float
    letters: str

    def __post_init__(self):
        letters = self.letters.upper()
        if not letters or not set(letters) <= _PAULI_LETTERS:
            raise DomainError(f"invalid Pauli letters {self.letters!r}")
        if isinstance(self.coefficient, complex) or not np.isfinite(self.coefficient):
            raise DomainError(f"Pauli coefficients must be finite reals, got {self.coefficient!r}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @classmethod
    def from_sparse(cls, num_qubits: int, ops: dict, coefficient: float = 1.0) -> PauliString:
        """Build from ``{qubit: letter}``; unlisted qubits get ``I``."""
        letters = ["I"] * num_qubits
        for q, letter in ops.items():
            if not 0 <= q < num_qubits:
                raise DomainError(f"qubit {q} out of range for {num_qubits} qubits")
            letters[q] = letter
        return cls(coefficient, "".join(letters))

    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    @property
    def flip_mask(self) -> int:
        return sum(1 << k for k, p in enumerate(self.letters) if p in "XY")

    @property
    def phase_mask(self) -> int:
        return sum(1 << k for k, p in enumerate(self.letters) if p in "YZ")

    @property
    def num_y(self) -> int:
        return self.letters.count("Y")

    def phases(self, indices: np.ndarray) -> np.ndarray:
        """phi(b) with P|b> = phi(b) |b ^ flip_mask>."""
        parity = np.bitwise_count(indices & self.phase_mask) & 1
        return (1j ** self.num_y) * (1 - 2 * parity.astype(np.float64))


class _CompiledPauliSum(NamedTuple):
    flips: np.ndarray
    consts: np.ndarray
    vec_index: np.ndarray
    vecs: np.ndarray


@dataclass
class PauliSumOperator:
    num_qubits: int
    terms: list

    def __post_init__(self):
        self.terms = list(self.terms)
        for t in self.terms:
            if t.num_qubits != self.num_qubits:
                raise DomainError(
                    f"term {t.letters} has {t.num_qubits} letters, expected {self.num_qubits}"
                )

    def __add__(self, other: PauliSumOperator) -> PauliSumOperator:
        if other.num_qubits != self.num_qubits:
            raise DomainError("cannot add operators on different qubit counts")
        return PauliSumOperator(self.num_qubits, self.terms + other.terms)

    def __len__(self):
        return len(self.terms)

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    @property
    def is_real(self) -> bool:
        """True when every term has an even number of Y letters."""
        return all(t.num_y % 2 == 0 for t in self.terms)

    @cached_property
    def compiled(self) -> _CompiledPauliSum:
        # group terms by bit-flip pattern; a group without Z/Y letters has a constant weight
        groups: dict[int, list] = {}
        for t in self.terms:
            groups.setdefault(t.flip_mask, []).append(t)
        idx = np.arange(self.dim, dtype=np.int64)
        flips, consts, vec_index, vecs = [], [], [], []
        for f in sorted(groups):
            members = groups[f]
            flips.append(f)
            if all(t.phase_mask == 0 for t in members):
                consts.append(sum(t.coefficient for t in members))
                vec_index.append(-1)
            else:
                w = np.zeros(self.dim, dtype=np.complex128)
                for t in members:
                    w += t.coefficient * t.phases(idx ^ f)
                consts.append(0.0)
                vec_index.append(len(vecs))
                vecs.append(w)
        if not vecs:
            vecs_arr = np.zeros((0, self.dim), dtype=np.complex128)
        else:
            vecs_arr = np.ascontiguousarray(vecs)
        return _CompiledPauliSum(
            np.asarray(flips, dtype=np.int64),
            np.asarray(consts, dtype=np.complex128),
            np.asarray(vec_index, dtype=np.int64),
            vecs_arr,
        )

    def _as_batch(self, vectors) -> np.ndarray:
        arr = np.ascontiguousarray(vectors, dtype=np.complex128)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.shape[1] != self.dim:
            raise DomainError(f"vector length {arr.shape[1]} does not match dimension {self.dim}")
        return arr

    def matvec(self, vectors) -> np.ndarray:
        """H applied to a vector or to every row of a batch."""
        arr = self._as_batch(vectors)
        out = np.empty_like(arr)
        c = self.compiled
        _kernels.pauli_matvec(arr, c.flips, c.consts, c.vec_index, c.vecs, out)
        return out[0] if np.ndim(vectors) == 1 else out

    def expectation_values(self, vectors) -> np.ndarray:
        """Complex <v|H|v> for every row (imaginary parts are rounding residue)."""
        arr = self._as_batch(vectors)
        c = self.compiled
        return _kernels.pauli_expectations(arr, c.flips, c.consts, c.vec_index, c.vecs)

    def to_sparse(self) -> sp.csr_matrix:
        """Assemble column by column: each term maps column b to row b ^ flip."""
        if not self.terms:
            return sp.csr_matrix((self.dim, self.dim), dtype=np.complex128)
        cols = np.arange(self.dim, dtype=np.int64)
        rows, vals = [], []
        for t in self.terms:
            rows.append(cols ^ t.flip_mask)
            vals.append(t.coefficient * t.phases(cols))
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.tile(cols, len(self.terms)))),
            shape=(self.dim, self.dim),
        ).tocsr()
        mat.sum_duplicates()
        if self.is_real:
            mat = mat.real.tocsr()
        return mat

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()


def expectation(state: StateVector, op: PauliSumOperator) -> float:
    if state.num_qubits != op.num_qubits:
        raise DomainError(f"state has {state.num_qubits} qubits, operator {op.num_qubits}")
    value = complex(op.expectation_values(state.amplitudes)[0])
    if abs(value.imag) > 1e-8:
        raise NumericalError(f"expectation has imaginary part {value.imag:.3e}")
    return value.real


def marginal_probability(state: StateVector, qubit: int, value: int = 0) -> float:
    """Probability of reading ``value`` on ``qubit``."""
    if not 0 <= qubit < state.num_qubits:
        raise DomainError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    probs = np.abs(state.amplitudes.reshape(-1, 2, 1 << qubit)[:, value, :]) ** 2
    return float(probs.sum())


class AncillaCounts(NamedTuple):
    m0: int
    m1: int


def sample_ancilla(state: StateVector, ancilla_index: int, shots: int, rng_seed) -> AncillaCounts:
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    p0 = min(1.0, max(0.0, marginal_probability(state, ancilla_index, 0)))
    rng = np.random.default_rng(rng_seed)
    m0 = int(rng.binomial(shots, p0))
    return AncillaCounts(m0, shots - m0)


def _measurement_groups(terms: Sequence[PauliString]) -> list:
    """Greedy qubit-wise-commuting grouping; each group shares one measurement basis."""
    groups: list = []
    for t in terms:
        for basis, members in groups:
            if all(b == "I" or p == "I" or b == p for b, p in zip(basis, t.letters)):
                basis[:] = [p if b == "I" else b for b, p in zip(basis, t.letters)]
                members.append(t)
                break
        else:
            groups.append((list(t.letters), [t]))
    return groups


def sample_expectation(state: StateVector, op: PauliSumOperator, shots: int, rng) -> float:
    """Shot estimate of <H>: one basis rotation and ``shots`` samples per term group."""
    if shots < 1:
        raise DomainError(f"shots must be >= 1, got {shots}")
    idx = np.arange(state.dim, dtype=np.int64)
    total = 0.0
    for basis, members in _measurement_groups(op.terms):
        rotated = state.amplitudes.copy().reshape(1, -1)
        for k, letter in enumerate(basis):
            if letter == "Y":
                _apply_gate_inplace(rotated, Gate.sdg(k))
            if letter in "XY":
                _apply_gate_inplace(rotated, Gate.h(k))
        probs = np.abs(rotated[0]) ** 2
        probs /= probs.sum()
        counts = rng.multinomial(shots, probs)
        for t in members:
            support = sum(1 << k for k, p in enumerate(t.letters) if p != "I")
            signs = 1 - 2 * (np.bitwise_count(idx & support) & 1).astype(np.float64)
            total += t.coefficient * float(signs @ counts) / shots
    return total
