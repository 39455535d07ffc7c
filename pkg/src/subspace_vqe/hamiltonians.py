"""Ising-like benchmark Hamiltonians on square lattices and their exact spectra.

    H = - sum_{(i,j) in E} J_ij X_i X_j - h sum_i Z_i

Sites are numbered row-major (``site = r * cols + c``) and site ``i`` is
qubit ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import CapabilityError, ConfigError, DomainError, NumericalError
from .statevector import PauliString, PauliSumOperator, StateVector

DENSE_QUBIT_CAP = 12
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class LatticeGraph:
    rows: int
    cols: int
    periodic: bool
    edges: tuple

    @property
    def num_sites(self) -> int:
        return self.rows * self.cols


def build_lattice(rows: int, cols: int, periodic: bool = True) -> LatticeGraph:
    """Nearest-neighbour square lattice; wraparound bonds duplicating a pair are merged."""
    if rows < 2 or cols < 2:
        raise DomainError(f"lattice dimensions must be >= 2, got {rows}x{cols}")
    edges = set()
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if periodic:
                    rr, cc = rr % rows, cc % cols
                elif rr >= rows or cc >= cols:
                    continue
                j = rr * cols + cc
                if i != j:
                    edges.add((min(i, j), max(i, j)))
    return LatticeGraph(rows, cols, periodic, tuple(sorted(edges)))


def sample_ea_couplings(lattice: LatticeGraph, seed: int) -> dict:
    """Standard-normal couplings, one per edge in sorted edge order.

    The stream is fixed independently of numpy's distribution code: PCG64
    seeded through ``SeedSequence(seed)``, raw 64-bit outputs turned into
    53-bit uniforms ``u = (x >> 11) * 2**-53``, then the basic Box-Muller
    transform ``sqrt(-2 ln(1 - u1)) * (cos, sin)(2 pi u2)`` using both outputs.
    """
    normals = _box_muller(int(seed), len(lattice.edges))
    return {edge: float(v) for edge, v in zip(lattice.edges, normals)}


def _box_muller(seed: int, count: int) -> np.ndarray:
    bitgen = np.random.PCG64(np.random.SeedSequence(seed))
    n_pairs = (count + 1) // 2
    raw = bitgen.random_raw(2 * n_pairs).astype(np.uint64)
    u = (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    pairs = np.empty(2 * n_pairs)
    pairs[0::2] = radius * np.cos(2 * np.pi * u2)
    pairs[1::2] = radius * np.sin(2 * np.pi * u2)
    return pairs[:count]


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    lattice: LatticeGraph
    couplings: tuple
    h: float
    J: float | None = None
    disorder_seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("TFI", "EA"):
            raise DomainError(f"model kind must be TFI or EA, got {self.kind!r}")
        if len(self.couplings) != len(self.lattice.edges):
            raise DomainError(
                f"{len(self.couplings)} couplings for {len(self.lattice.edges)} edges"
            )

    @classmethod
    def tfi(cls, rows, cols, J=1.0, h=3.044, periodic=True) -> ModelSpec:
        lattice = build_lattice(rows, cols, periodic)
        return cls("TFI", lattice, tuple([float(J)] * len(lattice.edges)), float(h), J=float(J))

    @classmethod
    def ea(cls, rows, cols, seed, h=2.0, periodic=True) -> ModelSpec:
        lattice = build_lattice(rows, cols, periodic)
        couplings = sample_ea_couplings(lattice, seed)
        return cls(
            "EA", lattice, tuple(couplings[e] for e in lattice.edges), float(h), disorder_seed=int(seed)
        )

    @property
    def num_qubits(self) -> int:
        return self.lattice.num_sites

    def coupling_map(self) -> dict:
        return dict(zip(self.lattice.edges, self.couplings))

    def to_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "rows": self.lattice.rows,
            "cols": self.lattice.cols,
            "periodic": self.lattice.periodic,
            "h": self.h,
            "disorder_seed": self.disorder_seed,
        }
        if self.kind == "TFI":
            doc["J"] = self.J
        else:
            doc["couplings"] = [[i, j, J] for (i, j), J in zip(self.lattice.edges, self.couplings)]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> ModelSpec:
        """Inverse of :meth:`to_dict`.

        EA documents with an explicit ``couplings`` list use it verbatim;
        otherwise couplings are regenerated from ``disorder_seed``.
        """
        try:
            kind = doc["kind"]
            lattice = build_lattice(int(doc["rows"]), int(doc["cols"]), bool(doc.get("periodic", True)))
            h = float(doc["h"])
        except KeyError as exc:
            raise ConfigError(f"model document missing field {exc.args[0]!r}") from None
        seed = doc.get("disorder_seed")
        if kind == "TFI":
            J = float(doc.get("J", 1.0))
            return cls("TFI", lattice, tuple([J] * len(lattice.edges)), h, J=J, disorder_seed=seed)
        if kind != "EA":
            raise ConfigError(f"model kind must be TFI or EA, got {kind!r}")
        if doc.get("couplings") is not None:
            given = {(min(int(i), int(j)), max(int(i), int(j))): float(J) for i, j, J in doc["couplings"]}
            if set(given) != set(lattice.edges):
                raise ConfigError("EA couplings do not match the lattice edge set")
            return cls("EA", lattice, tuple(given[e] for e in lattice.edges), h, disorder_seed=seed)
        if seed is None:
            raise ConfigError("EA model needs either couplings or disorder_seed")
        return cls.ea(lattice.rows, lattice.cols, int(seed), h=h, periodic=lattice.periodic)


def build_hamiltonian(spec: ModelSpec) -> PauliSumOperator:
    q = spec.num_qubits
    terms = [
        PauliString.from_sparse(q, {i: "X", j: "X"}, -J)
        for (i, j), J in zip(spec.lattice.edges, spec.couplings)
    ]
    terms += [PauliString.from_sparse(q, {i: "Z"}, -spec.h) for i in range(q)]
    return PauliSumOperator(q, terms)


# ------------------------------------------------------------------ spectra


def degeneracy_groups(eigenvalues: np.ndarray) -> list:
    """Partition ascending eigenvalues; neighbours closer than 1e-8*max(1,|l|) share a group."""
    groups: list = []
    for k, lam in enumerate(eigenvalues):
        if groups and abs(lam - eigenvalues[k - 1]) < 1e-8 * max(1.0, abs(eigenvalues[k - 1])):
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    mode: str
    degeneracy_groups: list = field(default_factory=list)
    # extremal mode: how many of the stored pairs are lowest / highest
    k_low: int = 0
    k_high: int = 0

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        if not self.degeneracy_groups:
            self.degeneracy_groups = degeneracy_groups(self.eigenvalues)

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def group_energies(self) -> np.ndarray:
        return np.array([self.eigenvalues[g].mean() for g in self.degeneracy_groups])

    @property
    def group_floors(self) -> np.ndarray:
        """Lowest member of each group; a group lies above mu iff its floor does."""
        return np.array([self.eigenvalues[g[0]] for g in self.degeneracy_groups])

    def ground_vectors(self) -> np.ndarray:
        """Columns spanning the ground eigenspace."""
        if self.eigenvectors is None:
            raise CapabilityError("spectrum was computed without eigenvectors")
        return self.eigenvectors[:, self.degeneracy_groups[0]]

    def ground_degeneracy(self) -> int:
        return len(self.degeneracy_groups[0])

    def lowest_sum(self, k: int) -> float:
        if self.mode == "extremal_iterative" and k > self.k_low:
            raise CapabilityError(f"spectrum holds only {self.k_low} lowest eigenvalues, need {k}")
        return float(np.sum(self.eigenvalues[:k]))

    def highest_sum(self, k: int) -> float:
        if self.mode == "extremal_iterative" and k > self.k_high:
            raise CapabilityError(f"spectrum holds only {self.k_high} highest eigenvalues, need {k}")
        return float(np.sum(self.eigenvalues[-k:]))


def _residuals(H: PauliSumOperator, values, vectors) -> np.ndarray:
    hv = H.matvec(np.ascontiguousarray(vectors.T))
    return np.linalg.norm(hv - values[:, None] * vectors.T, axis=1)


def dense_spectrum(H: PauliSumOperator, max_qubits: int = DENSE_QUBIT_CAP) -> SpectrumResult:
    if H.num_qubits > max_qubits:
        raise CapabilityError(
            f"dense diagonalization is capped at {max_qubits} qubits (got {H.num_qubits}); "
            "use extremal_spectrum"
        )
    values, vectors = np.linalg.eigh(H.to_dense())
    return SpectrumResult(values, vectors, "full_dense", k_low=len(values), k_high=len(values))


def extremal_spectrum(
    H: PauliSumOperator, k_low: int, k_high: int = 0, tol: float = 1e-12, maxiter: int | None = None
) -> SpectrumResult:
    """Lowest ``k_low`` and highest ``k_high`` eigenpairs via implicitly restarted Lanczos."""
    if k_low < 1 or k_high < 0:
        raise DomainError(f"need k_low >= 1 and k_high >= 0, got {k_low}, {k_high}")
    dim = H.dim
    if k_low + k_high >= dim - 1:
        raise DomainError(f"requested {k_low + k_high} eigenpairs of a {dim}-dim operator")
    dtype = np.float64 if H.is_real else np.complex128

    def mv(x):
        y = H.matvec(np.asarray(x, dtype=np.complex128).ravel())
        return y.real if dtype is np.float64 else y

    op = spla.LinearOperator((dim, dim), matvec=mv, dtype=dtype)
    v0 = np.ones(dim, dtype=dtype) / np.sqrt(dim)
    vals, vecs = [], []
    for k, which in ((k_low, "SA"), (k_high, "LA")):
        if k == 0:
            continue
        try:
            w, v = spla.eigsh(op, k=k, which=which, tol=tol, v0=v0, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            raise NumericalError(f"Lanczos did not converge for {which}: {exc}") from None
        order = np.argsort(w)
        vals.append(w[order])
        vecs.append(v[:, order])
    values = np.concatenate(vals)
    vectors = np.concatenate(vecs, axis=1)
    res = _residuals(H, values, vectors)
    if np.any(res > RESIDUAL_TOL):
        raise NumericalError(f"eigenpair residuals too large: max {res.max():.2e}")
    return SpectrumResult(values, vectors, "extremal_iterative", k_low=k_low, k_high=k_high)


def group_weights(state: StateVector, spectrum: SpectrumResult) -> np.ndarray:
    """Weight of ``state`` on each degeneracy group."""
    if spectrum.eigenvectors is None:
        raise CapabilityError("spectral projector needs eigenvectors")
    if spectrum.mode != "full_dense":
        raise CapabilityError("spectral projector needs the full dense spectrum")
    amps = np.abs(spectrum.eigenvectors.conj().T @ state.amplitudes) ** 2
    return np.array([amps[g].sum() for g in spectrum.degeneracy_groups])


def spectral_projector_overlap(state: StateVector, spectrum: SpectrumResult, mu: float) -> float:
    """<state| P_{>mu} |state>, whole degeneracy groups included or excluded together.

    A group counts as above ``mu`` only when all its members are, so moving
    ``mu`` inside a group's rounding spread never changes the projector.
    """
    weights = group_weights(state, spectrum)
    return float(weights[spectrum.group_floors > mu].sum())
