"""Layered hardware-efficient ansatz and K-state subspace frames.

Circuit structure: ``num_layers`` rotation layers, each applying
``Rot = Rz(beta) Ry(alpha)`` (Ry first in time) to every qubit, separated by
``num_layers - 1`` entangling layers of CZ or CNOT on the entangler edges.

Parameter layout is layer-major, then qubit, then ``(alpha, beta)``:
``params[2 * (layer * q + qubit) + {0: alpha, 1: beta}]``. Soft frames
concatenate K such blocks, one per frame state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DomainError
from .statevector import (
    Circuit,
    Gate,
    PauliSumOperator,
    StateVector,
    apply_circuit,
    expectation,
    init_basis_state,
    inner_product,
)

FRAME_MODES = ("single", "hard_ortho", "soft_ortho")


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int
    num_layers: int
    entangler: str = "CZ"
    entangler_edges: tuple = ()

    def __post_init__(self):
        if self.num_qubits < 1 or self.num_layers < 1:
            raise DomainError(f"need num_qubits >= 1 and num_layers >= 1, got {self}")
        if self.entangler not in ("CZ", "CNOT"):
            raise DomainError(f"entangler must be CZ or CNOT, got {self.entangler!r}")
        edges = []
        for a, b in self.entangler_edges:
            a, b = int(a), int(b)
            if a == b or not (0 <= a < self.num_qubits and 0 <= b < self.num_qubits):
                raise DomainError(f"invalid entangler edge ({a}, {b})")
            edges.append((a, b))
        # fixed order keeps CNOT layers deterministic; CZ layers commute anyway
        edges.sort(key=lambda e: (min(e), max(e)))
        object.__setattr__(self, "entangler_edges", tuple(edges))

    @property
    def parameter_count(self) -> int:
        return 2 * self.num_qubits * self.num_layers

    @property
    def params_per_layer(self) -> int:
        return 2 * self.num_qubits


def _check_length(params, expected):
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (expected,):
        raise DomainError(f"expected {expected} parameters, got shape {params.shape}")
    return params


def build_ansatz_circuit(spec: AnsatzSpec, params) -> Circuit:
    params = _check_length(params, spec.parameter_count)
    q = spec.num_qubits
    circuit = Circuit(q)
    for layer in range(spec.num_layers):
        for k in range(q):
            base = 2 * (layer * q + k)
            circuit.append(Gate.ry(k, params[base]))
            circuit.append(Gate.rz(k, params[base + 1]))
        if layer < spec.num_layers - 1:
            for a, b in spec.entangler_edges:
                circuit.append(Gate(spec.entangler, (a, b)))
    return circuit


@dataclass(frozen=True)
class FrameSpec:
    mode: str
    K: int
    ansatz: AnsatzSpec
    beta: float = 0.0

    def __post_init__(self):
        if self.mode not in FRAME_MODES:
            raise DomainError(f"frame mode must be one of {FRAME_MODES}, got {self.mode!r}")
        if self.K < 1:
            raise DomainError(f"K must be >= 1, got {self.K}")
        if self.mode == "single" and self.K != 1:
            raise DomainError("single mode requires K = 1")
        if self.mode == "hard_ortho" and self.K > 1 << self.ansatz.num_qubits:
            raise DomainError(f"hard frame K={self.K} exceeds the Hilbert-space dimension")
        if self.mode == "soft_ortho" and not self.beta > 0:
            raise DomainError(f"soft frames need beta > 0, got {self.beta}")

    @property
    def parameter_count(self) -> int:
        n = self.ansatz.parameter_count
        return n * self.K if self.mode == "soft_ortho" else n


@dataclass
class Frame:
    spec: FrameSpec
    states: list

    @property
    def K(self) -> int:
        return len(self.states)

    def matrix(self) -> np.ndarray:
        """Frame states as rows of a ``(K, 2**q)`` array."""
        return np.array([s.amplitudes for s in self.states])


def member_params(spec: FrameSpec, params, p: int) -> np.ndarray:
    """Parameters steering frame state ``p``."""
    n = spec.ansatz.parameter_count
    if spec.mode == "soft_ortho":
        return params[p * n:(p + 1) * n]
    return params


def materialize_frame(spec: FrameSpec, params) -> Frame:
    params = _check_length(params, spec.parameter_count)
    q = spec.ansatz.num_qubits
    if spec.mode == "soft_ortho":
        states = [
            apply_circuit(init_basis_state(q, 0), build_ansatz_circuit(spec.ansatz, member_params(spec, params, p)))
            for p in range(spec.K)
        ]
    else:
        circuit = build_ansatz_circuit(spec.ansatz, params)
        states = [apply_circuit(init_basis_state(q, p), circuit) for p in range(spec.K)]
    return Frame(spec, states)


def hard_cost(frame: Frame, H: PauliSumOperator) -> float:
    return float(sum(expectation(s, H) for s in frame.states))


class SoftCost(NamedTuple):
    total: float
    energy_part: float
    penalty_part: float


def soft_cost(frame: Frame, H: PauliSumOperator, beta: float) -> SoftCost:
    energy = hard_cost(frame, H)
    penalty = 0.0
    for p in range(frame.K):
        for r in range(p + 1, frame.K):
            penalty += abs(inner_product(frame.states[r], frame.states[p])) ** 2
    return SoftCost(energy + beta * penalty, energy, penalty)


def pairwise_overlaps(frame: Frame) -> np.ndarray:
    """S[p, r] = <psi_p|psi_r>."""
    m = frame.matrix()
    return m.conj() @ m.T


# ------------------------------------------------------------ fast evaluation


def rotation_matrices(layer_params: np.ndarray) -> np.ndarray:
    """Stack of ``Rz(beta) @ Ry(alpha)`` per qubit from ``(alpha_0, beta_0, alpha_1, ...)``."""
    alpha = layer_params[0::2]
    beta = layer_params[1::2]
    c, s = np.cos(alpha / 2), np.sin(alpha / 2)
    em, ep = np.exp(-0.5j * beta), np.exp(0.5j * beta)
    mats = np.empty((len(alpha), 2, 2), dtype=np.complex128)
    mats[:, 0, 0] = em * c
    mats[:, 0, 1] = -em * s
    mats[:, 1, 0] = ep * s
    mats[:, 1, 1] = ep * c
    return mats


class CompiledAnsatz:
    """Layer-wise application of an :class:`AnsatzSpec` to batched amplitude arrays."""

    def __init__(self, spec: AnsatzSpec):
        self.spec = spec
        q = spec.num_qubits
        idx = np.arange(1 << q, dtype=np.int64)
        if spec.entangler == "CZ":
            # a CZ layer is diagonal: sign = (-1)^(number of edges with both bits set)
            parity = np.zeros(1 << q, dtype=np.int64)
            for a, b in spec.entangler_edges:
                parity += ((idx >> a) & 1) & ((idx >> b) & 1)
            self._cz_signs = (1 - 2 * (parity & 1)).astype(np.float64)
            self._perm = None
        else:
            # compose the CNOT layer into one gather: out = states[:, perm]
            perm = idx.copy()
            for c, t in spec.entangler_edges:
                src = np.where((idx >> c) & 1, idx ^ (1 << t), idx)
                perm = perm[src]
            self._cz_signs = None
            self._perm = perm

    def apply_rotation_layer(self, states: np.ndarray, layer: int, params: np.ndarray):
        n = self.spec.params_per_layer
        _kernels.apply_rotation_layer(states, rotation_matrices(params[layer * n:(layer + 1) * n]))

    def apply_entangler(self, states: np.ndarray) -> np.ndarray:
        if self._perm is None:
            states *= self._cz_signs
            return states
        return np.ascontiguousarray(states[:, self._perm])

    def run(self, states: np.ndarray, params: np.ndarray, start_layer: int = 0) -> np.ndarray:
        """Apply rotation layers ``start_layer..`` (and the entanglers after them) in place."""
        for layer in range(start_layer, self.spec.num_layers):
            self.apply_rotation_layer(states, layer, params)
            if layer < self.spec.num_layers - 1:
                states = self.apply_entangler(states)
        return states


class FrameCost(NamedTuple):
    """Cost decomposition of a frame; ``overlaps`` holds |S_pr|^2 for p < r."""

    total: float
    energy: float
    penalty: float
    member_energies: np.ndarray
    overlaps: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([[self.total, self.energy, self.penalty], self.member_energies, self.overlaps])

    @classmethod
    def from_vector(cls, vec: np.ndarray, K: int) -> FrameCost:
        return cls(float(vec[0]), float(vec[1]), float(vec[2]), vec[3:3 + K].copy(), vec[3 + K:].copy())


class _PrefixCache:
    """States before each rotation layer for one group of frame members."""

    def __init__(self, initial: np.ndarray):
        self.params = None
        self.entries = [initial]
        self.energies = None


class FrameEvaluator:
    """Cost evaluation for a frame with reuse of unchanged circuit prefixes.

    Hard and single frames propagate all K basis inputs together as one
    batch; soft frames keep one cache per member so that changing a
    parameter of state ``p`` only recomputes ``p`` from the touched layer on.
    """

    def __init__(self, spec: FrameSpec, H: PauliSumOperator):
        if H.num_qubits != spec.ansatz.num_qubits:
            raise DomainError("Hamiltonian and ansatz qubit counts differ")
        self.spec = spec
        self.H = H
        self.ansatz = CompiledAnsatz(spec.ansatz)
        self.n_member = spec.ansatz.parameter_count
        q = spec.ansatz.num_qubits
        self._iu = np.triu_indices(spec.K, k=1)
        if spec.mode == "soft_ortho":
            init = np.zeros((1, 1 << q), dtype=np.complex128)
            init[0, 0] = 1.0
            self._caches = [_PrefixCache(init) for _ in range(spec.K)]
        else:
            init = np.zeros((spec.K, 1 << q), dtype=np.complex128)
            init[np.arange(spec.K), np.arange(spec.K)] = 1.0
            self._caches = [_PrefixCache(init)]

    def _groups(self, params):
        """(cache, member parameter slice) per member group."""
        if self.spec.mode == "soft_ortho":
            return [(c, params[p * self.n_member:(p + 1) * self.n_member]) for p, c in enumerate(self._caches)]
        return [(self._caches[0], params)]

    def _prefix(self, cache: _PrefixCache, gparams: np.ndarray, layer: int) -> np.ndarray:
        """State(s) before rotation layer ``layer`` (``num_layers`` means the final state)."""
        per_layer = self.spec.ansatz.params_per_layer
        if cache.params is not None:
            diff = np.flatnonzero(cache.params != gparams)
            if diff.size:
                first_changed = int(diff[0]) // per_layer
                del cache.entries[first_changed + 1:]
                cache.energies = None
        cache.params = gparams.copy()
        while len(cache.entries) <= layer:
            ell = len(cache.entries) - 1
            states = cache.entries[ell].copy()
            self.ansatz.apply_rotation_layer(states, ell, gparams)
            if ell < self.spec.ansatz.num_layers - 1:
                states = self.ansatz.apply_entangler(states)
            cache.entries.append(states)
        return cache.entries[layer]

    def states(self, params) -> np.ndarray:
        """Frame states as rows of a ``(K, 2**q)`` array."""
        params = _check_length(params, self.spec.parameter_count)
        L = self.spec.ansatz.num_layers
        return np.concatenate([self._prefix(c, g, L) for c, g in self._groups(params)], axis=0)

    def _final_energies(self, cache, gparams):
        L = self.spec.ansatz.num_layers
        final = self._prefix(cache, gparams, L)
        if cache.energies is None:
            cache.energies = self.H.expectation_values(final).real
        return final, cache.energies

    def _assemble(self, states: np.ndarray, energies: np.ndarray) -> FrameCost:
        energy = float(energies.sum())
        if self.spec.K > 1:
            S = states.conj() @ states.T
            overlaps = np.abs(S[self._iu]) ** 2
        else:
            overlaps = np.zeros(0)
        penalty = float(overlaps.sum()) if self.spec.mode == "soft_ortho" else 0.0
        total = energy + self.spec.beta * penalty if self.spec.mode == "soft_ortho" else energy
        return FrameCost(total, energy, penalty, np.asarray(energies, dtype=np.float64), overlaps)

    def evaluate(self, params) -> FrameCost:
        params = _check_length(params, self.spec.parameter_count)
        parts = [self._final_energies(c, g) for c, g in self._groups(params)]
        states = np.concatenate([s for s, _ in parts], axis=0)
        energies = np.concatenate([e for _, e in parts])
        return self._assemble(states, energies)

    def evaluate_variants(self, params, j: int, values) -> list:
        """Costs with parameter ``j`` replaced by each of ``values``; other parameters fixed.

        The cached prefix states are left describing ``params`` itself.
        """
        params = _check_length(params, self.spec.parameter_count)
        L = self.spec.ansatz.num_layers
        if self.spec.mode == "soft_ortho":
            member, local = divmod(j, self.n_member)
        else:
            member, local = 0, j
        layer = local // self.spec.ansatz.params_per_layer
        groups = self._groups(params)
        fixed = [self._final_energies(c, g) if i != member else None for i, (c, g) in enumerate(groups)]
        cache, gparams = groups[member]
        start = self._prefix(cache, gparams, layer)
        results = []
        for v in values:
            trial = gparams.copy()
            trial[local] = v
            states = self.ansatz.run(start.copy(), trial, start_layer=layer)
            energies = self.H.expectation_values(states).real
            all_states = [s for s, _ in fixed[:member]] + [states] + [s for s, _ in fixed[member + 1:]]
            all_energies = [e for _, e in fixed[:member]] + [energies] + [e for _, e in fixed[member + 1:]]
            results.append(self._assemble(np.concatenate(all_states, axis=0), np.concatenate(all_energies)))
        return results
