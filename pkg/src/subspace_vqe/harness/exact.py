"""Exact-spectrum artifacts: ``spectrum.json`` plus ``eigenvectors.npy``.

Both files are written deterministically so that recomputing the same model
reproduces them byte for byte.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np

from ..hamiltonians import DENSE_QUBIT_CAP, ModelSpec, SpectrumResult, build_hamiltonian, dense_spectrum, extremal_spectrum
from .io import atomic_write_bytes, atomic_write_text

SPECTRUM_FILE = "spectrum.json"
VECTORS_FILE = "eigenvectors.npy"


def compute_spectrum(model: ModelSpec, k_low: int = 4, k_high: int = 2) -> SpectrumResult:
    """Dense up to the qubit cap, otherwise ``k_low`` lowest and ``k_high`` highest pairs."""
    H = build_hamiltonian(model)
    if model.num_qubits <= DENSE_QUBIT_CAP:
        return dense_spectrum(H)
    return extremal_spectrum(H, k_low, k_high)


def save_spectrum(spectrum: SpectrumResult, model: ModelSpec, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    doc = {
        "model": model.to_dict(),
        "mode": spectrum.mode,
        "num_eigenvalues": int(spectrum.eigenvalues.size),
        "k_low": spectrum.k_low,
        "k_high": spectrum.k_high,
        "eigenvalues": [float(v) for v in spectrum.eigenvalues],
        "degeneracy_groups": spectrum.degeneracy_groups,
        "ground_degeneracy": spectrum.ground_degeneracy(),
        "eigenvectors_file": VECTORS_FILE if spectrum.eigenvectors is not None else None,
    }
    atomic_write_text(directory / SPECTRUM_FILE, json.dumps(doc, indent=1) + "\n")
    if spectrum.eigenvectors is not None:
        vecs = spectrum.eigenvectors
        if np.all(vecs.imag == 0):
            vecs = vecs.real
        buf = _npy_bytes(np.ascontiguousarray(vecs))
        atomic_write_bytes(directory / VECTORS_FILE, buf)
    return directory / SPECTRUM_FILE


def _npy_bytes(arr: np.ndarray) -> bytes:
    out = io.BytesIO()
    np.save(out, arr, allow_pickle=False)
    return out.getvalue()


def load_spectrum(directory) -> SpectrumResult:
    directory = Path(directory)
    doc = json.loads((directory / SPECTRUM_FILE).read_text())
    vectors = None
    if doc.get("eigenvectors_file"):
        vectors = np.load(directory / doc["eigenvectors_file"], allow_pickle=False)
    return SpectrumResult(
        np.array(doc["eigenvalues"]),
        vectors,
        doc["mode"],
        [list(g) for g in doc["degeneracy_groups"]],
        k_low=doc["k_low"],
        k_high=doc["k_high"],
    )


def spectrum_matches(directory, model: ModelSpec) -> bool:
    path = Path(directory) / SPECTRUM_FILE
    if not path.exists():
        return False
    try:
        return json.loads(path.read_text())["model"] == json.loads(json.dumps(model.to_dict()))
    except (json.JSONDecodeError, KeyError):
        return False
