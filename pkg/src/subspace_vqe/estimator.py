"""End-of-run estimation of the truncated Hamiltonian and its diagonalization.

Soft frames use the generalized Hadamard test: an ancilla (highest qubit)
in ``|+>`` open-controls ``U_p`` and controls ``U_q``, optionally gets ``S^dag``
(``b = 1``), then a final Hadamard. Then

    P(m=0 | b) = (1 + Re[(-i)^b S_pq]) / 2,   <Z_a (x) H>_b = Re[(-i)^b H_pq].

Hard frames prepare ``(|p> + i^b |q>)/sqrt(2)`` directly and measure <H>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSubspaceError, DomainError, InconsistentEstimateError
from .statevector import (
    Circuit,
    ControlledBlock,
    Gate,
    PauliString,
    PauliSumOperator,
    StateVector,
    apply_circuit,
    expectation,
    init_basis_state,
    marginal_probability,
    sample_ancilla,
    sample_expectation,
)

S_CUT = 1e-6
NEGATIVE_S_TOL = 1e-8


@dataclass(frozen=True)
class EstimationMode:
    kind: str = "analytic"
    shots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("analytic", "shots"):
            raise DomainError(f"estimation kind must be analytic or shots, got {self.kind!r}")
        if self.kind == "shots" and (self.shots is None or self.shots < 1):
            raise DomainError(f"shot mode needs shots >= 1, got {self.shots}")

    @classmethod
    def sampled(cls, shots: int, seed: int = 0) -> EstimationMode:
        return cls("shots", shots, seed)

    def rng(self, *key: int) -> np.random.Generator:
        """Independent stream per measurement setting ``key``."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=tuple(key)))


ANALYTIC = EstimationMode()


def hadamard_test_state(U_p: Circuit, U_q: Circuit, b: int) -> StateVector:
    if U_p.num_qubits != U_q.num_qubits:
        raise DomainError(f"U_p has {U_p.num_qubits} qubits, U_q {U_q.num_qubits}")
    if b not in (0, 1):
        raise DomainError(f"b must be 0 or 1, got {b}")
    q = U_p.num_qubits
    anc = q
    ops = [Gate.h(anc), ControlledBlock(anc, 0, U_p), ControlledBlock(anc, 1, U_q)]
    if b:
        ops.append(Gate.sdg(anc))
    ops.append(Gate.h(anc))
    return apply_circuit(init_basis_state(q + 1, 0), Circuit(q + 1, ops))


def _ancilla_zero_probability(state: StateVector, mode: EstimationMode, key) -> float:
    anc = state.num_qubits - 1
    if mode.kind == "analytic":
        return marginal_probability(state, anc, 0)
    counts = sample_ancilla(state, anc, mode.shots, np.random.SeedSequence(mode.seed, spawn_key=tuple(key)))
    return counts.m0 / mode.shots


def estimate_overlap_entry(U_p: Circuit, U_q: Circuit, mode: EstimationMode = ANALYTIC, key=()) -> complex:
    """S_pq from the two Hadamard-test variants: Re/Im = 2 P(m=0|b) - 1."""
    re = 2 * _ancilla_zero_probability(hadamard_test_state(U_p, U_q, 0), mode, (*key, 0)) - 1
    im = 2 * _ancilla_zero_probability(hadamard_test_state(U_p, U_q, 1), mode, (*key, 1)) - 1
    return complex(re, im)


def ancilla_hamiltonian(H: PauliSumOperator) -> PauliSumOperator:
    """Z on the ancilla (new highest qubit) tensored with every term of H."""
    return PauliSumOperator(H.num_qubits + 1, [PauliString(t.coefficient, t.letters + "Z") for t in H.terms])


def _measure(state: StateVector, H: PauliSumOperator, mode: EstimationMode, key) -> float:
    if mode.kind == "analytic":
        return expectation(state, H)
    return sample_expectation(state, H, mode.shots, mode.rng(*key))


def estimate_hamiltonian_entry(
    U_p: Circuit, U_q: Circuit, H: PauliSumOperator, mode: EstimationMode = ANALYTIC, key=()
) -> complex:
    if H.num_qubits != U_p.num_qubits:
        raise DomainError("Hamiltonian and circuits act on different qubit counts")
    H_anc = ancilla_hamiltonian(H)
    re = _measure(hadamard_test_state(U_p, U_q, 0), H_anc, mode, (*key, 0))
    im = _measure(hadamard_test_state(U_p, U_q, 1), H_anc, mode, (*key, 1))
    return complex(re, im)


@dataclass
class TruncatedProblem:
    H: np.ndarray
    S: np.ndarray
    min_s_eigenvalue: float = float("nan")
    retained_rank: int | None = None

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.complex128)
        self.S = np.asarray(self.S, dtype=np.complex128)
        if self.H.shape != self.S.shape or self.H.shape[0] != self.H.shape[1]:
            raise DomainError(f"H {self.H.shape} and S {self.S.shape} must be equal square shapes")
        self.min_s_eigenvalue = float(np.linalg.eigvalsh(self.S).min())

    @property
    def K(self) -> int:
        return self.H.shape[0]

    def to_dict(self) -> dict:
        return {
            "H_real": self.H.real.tolist(),
            "H_imag": self.H.imag.tolist(),
            "S_real": self.S.real.tolist(),
            "S_imag": self.S.imag.tolist(),
            "min_s_eigenvalue": self.min_s_eigenvalue,
            "retained_rank": self.retained_rank,
        }


def frame_problem(states: np.ndarray, H: PauliSumOperator) -> TruncatedProblem:
    """Exact H_trc and S from direct statevector access (monitoring only)."""
    states = np.ascontiguousarray(states, dtype=np.complex128)
    h_states = H.matvec(states)
    Hm = states.conj() @ h_states.T
    S = states.conj() @ states.T
    return TruncatedProblem((Hm + Hm.conj().T) / 2, (S + S.conj().T) / 2)


def estimate_soft_problem(circuits: list, H: PauliSumOperator, mode: EstimationMode = ANALYTIC) -> TruncatedProblem:
    """Assemble H_trc and S for states ``U_p|0>``.

    Diagonal energies are plain expectations; each pair p < q is measured once
    and mirrored into the lower triangle.
    """
    K = len(circuits)
    q = H.num_qubits
    Hm = np.zeros((K, K), dtype=np.complex128)
    S = np.eye(K, dtype=np.complex128)
    zero = init_basis_state(q, 0)
    for p in range(K):
        Hm[p, p] = _measure(apply_circuit(zero, circuits[p]), H, mode, (p, p, 2))
        for r in range(p + 1, K):
            S[p, r] = estimate_overlap_entry(circuits[p], circuits[r], mode, key=(p, r, 0))
            Hm[p, r] = estimate_hamiltonian_entry(circuits[p], circuits[r], H, mode, key=(p, r, 1))
            S[r, p] = np.conj(S[p, r])
            Hm[r, p] = np.conj(Hm[p, r])
    return TruncatedProblem(Hm, S)


def estimate_hard_offdiagonals(U: Circuit, K: int, H: PauliSumOperator, mode: EstimationMode = ANALYTIC) -> TruncatedProblem:
    """H_trc for the hard frame ``U|p>``, p < K, from superposition-state energies.

    With ``E_b = <H>`` on ``U (|p> + i^b |q>)/sqrt(2)`` and ``m = (H_pp + H_qq)/2``:
    ``Re H_pq = E_0 - m`` and ``Im H_pq = m - E_1``.
    """
    q = U.num_qubits
    if H.num_qubits != q:
        raise DomainError("Hamiltonian and circuit act on different qubit counts")
    if not 1 <= K <= 1 << q:
        raise DomainError(f"K={K} out of range for {q} qubits")
    Hm = np.zeros((K, K), dtype=np.complex128)
    for p in range(K):
        Hm[p, p] = _measure(apply_circuit(init_basis_state(q, p), U), H, mode, (p, p, 2))
    for p in range(K):
        for r in range(p + 1, K):
            mean = (Hm[p, p].real + Hm[r, r].real) / 2
            energies = []
            for b in (0, 1):
                amps = np.zeros(1 << q, dtype=np.complex128)
                amps[p] = 1 / np.sqrt(2)
                amps[r] = 1j**b / np.sqrt(2)
                energies.append(_measure(apply_circuit(StateVector(q, amps), U), H, mode, (p, r, b)))
            Hm[p, r] = complex(energies[0] - mean, mean - energies[1])
            Hm[r, p] = np.conj(Hm[p, r])
    return TruncatedProblem(Hm, np.eye(K, dtype=np.complex128))


@dataclass
class GroundSolution:
    lambda0: float
    coefficients: np.ndarray
    all_subspace_eigenvalues: np.ndarray
    retained_rank: int
    assembled_state: StateVector | None = None

    def to_dict(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "coefficients_real": self.coefficients.real.tolist(),
            "coefficients_imag": self.coefficients.imag.tolist(),
            "subspace_eigenvalues": self.all_subspace_eigenvalues.tolist(),
            "retained_rank": self.retained_rank,
        }


def solve_generalized(problem: TruncatedProblem, states=None, s_cut: float = S_CUT) -> GroundSolution:
    """Lowest root of ``H c = lambda S c`` by canonical orthogonalization.

    S modes with eigenvalue below ``s_cut`` times the largest are discarded.
    ``states`` (rows, or a list of StateVector) assemble ``sum_p c_p |psi_p>``.
    """
    s_vals, s_vecs = np.linalg.eigh(problem.S)
    if s_vals.min() < -NEGATIVE_S_TOL:
        raise InconsistentEstimateError(f"overlap matrix has eigenvalue {s_vals.min():.3e}")
    keep = s_vals > s_cut * max(s_vals.max(), 0.0)
    rank = int(keep.sum())
    if rank == 0:
        raise DegenerateSubspaceError("overlap matrix has no retained modes")
    X = s_vecs[:, keep] / np.sqrt(s_vals[keep])
    H_orth = X.conj().T @ problem.H @ X
    evals, evecs = np.linalg.eigh((H_orth + H_orth.conj().T) / 2)
    coeffs = X @ evecs[:, 0]
    problem.retained_rank = rank
    assembled = None
    if states is not None:
        if isinstance(states, (list, tuple)) and states and isinstance(states[0], StateVector):
            mat = np.array([s.amplitudes for s in states])
        else:
            mat = np.asarray(states)
        vec = coeffs @ mat
        nrm = np.linalg.norm(vec)
        assembled = StateVector(int(np.log2(mat.shape[1])), vec / nrm)
    return GroundSolution(float(evals[0]), coeffs, evals, rank, assembled)
