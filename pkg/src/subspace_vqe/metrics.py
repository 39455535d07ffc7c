"""Quality metrics: fidelities, normalized cost, cumulative infidelity, gain factors."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import CapabilityError, DegenerateSubspaceError, DomainError
from .estimator import S_CUT, GroundSolution
from .hamiltonians import SpectrumResult, group_weights
from .statevector import StateVector

CI_FLOOR = 1e-16
DEFAULT_RESAMPLES = 10_000


def _as_rows(frame) -> np.ndarray:
    if hasattr(frame, "states"):
        return np.array([s.amplitudes for s in frame.states])
    if isinstance(frame, (list, tuple)):
        return np.array([s.amplitudes if isinstance(s, StateVector) else s for s in frame])
    return np.atleast_2d(np.asarray(frame))


def _as_columns(ground) -> np.ndarray:
    """Ground state(s) as columns; several columns span a degenerate ground space."""
    if isinstance(ground, StateVector):
        return ground.amplitudes[:, None]
    g = np.asarray(ground)
    return g[:, None] if g.ndim == 1 else g


def orthonormal_basis(frame, s_cut: float = S_CUT) -> np.ndarray:
    """Columns spanning the frame, dropping directions whose Gram eigenvalue < s_cut * max."""
    rows = _as_rows(frame)
    u, s, _ = np.linalg.svd(rows.T, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DegenerateSubspaceError("frame spans the zero subspace")
    keep = s**2 > s_cut * s[0] ** 2
    return u[:, keep]


def subspace_fidelity(frame, ground) -> float:
    """||P_V phi_0||^2; for a degenerate ground space, the best overlap any ground vector attains."""
    Q = orthonormal_basis(frame)
    M = Q.conj().T @ _as_columns(ground)
    if M.shape[1] == 1:
        return float(np.vdot(M, M).real)
    return float(np.linalg.svd(M, compute_uv=False)[0] ** 2)


def htrc_fidelity(solution, ground) -> float:
    """|<Psi_0|phi_0>|^2, summed over the ground space when it is degenerate."""
    if isinstance(solution, GroundSolution):
        if solution.assembled_state is None:
            raise DomainError("ground solution carries no assembled state")
        psi = solution.assembled_state.amplitudes
    elif isinstance(solution, StateVector):
        psi = solution.amplitudes
    else:
        psi = np.asarray(solution)
    overlap = _as_columns(ground).conj().T @ psi
    return float(np.sum(np.abs(overlap) ** 2))


class FidelityPair(NamedTuple):
    f_sub: float
    f_trc: float

    @property
    def delta(self) -> float:
        return self.f_sub - self.f_trc


def normalized_cost(energy_part: float, spectrum: SpectrumResult, K: int) -> float:
    """(C - C_min) / (C_max - C_min) with C_min/C_max the sums of the K lowest/highest eigenvalues."""
    c_min = spectrum.lowest_sum(K)
    c_max = spectrum.highest_sum(K)
    if c_max == c_min:
        raise DomainError("normalized cost undefined: K lowest and highest eigenvalues coincide")
    return (energy_part - c_min) / (c_max - c_min)


class CIValue(NamedTuple):
    value: float
    clamped: bool


def _log_clamped(weight: float) -> CIValue:
    if weight < CI_FLOOR:
        return CIValue(float(np.log10(CI_FLOOR)), True)
    return CIValue(float(np.log10(weight)), False)


def cumulative_infidelity(psi0: StateVector, spectrum: SpectrumResult, mu: float) -> CIValue:
    """log10 <Psi_0| P_{>mu} |Psi_0>, clamped at ``CI_FLOOR``."""
    weights = group_weights(psi0, spectrum)
    return _log_clamped(float(weights[spectrum.group_floors > mu].sum()))


def ci_thresholds(spectrum: SpectrumResult) -> np.ndarray:
    """Midpoints between consecutive eigenvalue groups: one threshold per distinct CI value above E_0."""
    e = spectrum.group_energies
    return (e[:-1] + e[1:]) / 2


def ci_profile(psi0: StateVector, spectrum: SpectrumResult):
    """Pre-clamp weights above every threshold of :func:`ci_thresholds` and their clamped logs."""
    if spectrum.eigenvectors is None:
        raise CapabilityError("cumulative infidelity needs eigenvectors")
    weights = group_weights(psi0, spectrum)
    # weight strictly above threshold g = sum of groups g+1 .. end
    above = np.cumsum(weights[::-1])[::-1][1:]
    clamped = above < CI_FLOOR
    values = np.log10(np.where(clamped, CI_FLOOR, above))
    return above, values, clamped


def bootstrap_medians(samples, resamples: int = DEFAULT_RESAMPLES, seed: int = 0) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    return np.median(x[idx], axis=1)


def bootstrap_median_error(samples, resamples: int = DEFAULT_RESAMPLES, seed: int = 0):
    """(median, bootstrap standard error of the median)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 2:
        raise DomainError("bootstrap needs at least 2 samples")
    if resamples < 100:
        raise DomainError("bootstrap needs at least 100 resamples")
    return float(np.median(x)), float(np.std(bootstrap_medians(x, resamples, seed), ddof=1))


def bootstrap_median_upper(samples, level: float = 0.8, resamples: int = DEFAULT_RESAMPLES, seed: int = 0) -> float:
    """Upper bound for a median compatible with zero: the ``level`` quantile of bootstrap medians."""
    return float(np.quantile(bootstrap_medians(samples, resamples, seed), level))


class GainReport(NamedTuple):
    g_med: float
    g_med_err: float
    g_min: float

    @property
    def infinite(self) -> bool:
        return bool(np.isinf(self.g_med) or np.isinf(self.g_min))


def _ratio(num: float, den: float) -> float:
    if den == 0:
        return float("inf") if num > 0 else float("nan")
    return num / den


def gain_factors(vqe_fidelities, algo_fidelities, resamples: int = DEFAULT_RESAMPLES, seed: int = 0) -> GainReport:
    """Median and best-run infidelity ratios VQE / algorithm.

    The median ratio's error comes from bootstrapping both run sets jointly.
    A zero algorithm infidelity yields an infinite gain.
    """
    v = 1 - np.asarray(vqe_fidelities, dtype=np.float64)
    a = 1 - np.asarray(algo_fidelities, dtype=np.float64)
    if v.size == 0 or a.size == 0:
        raise DomainError("gain factors need non-empty fidelity arrays")
    g_med = _ratio(float(np.median(v)), float(np.median(a)))
    g_min = _ratio(float(v.min()), float(a.min()))
    if v.size < 2 or a.size < 2:
        return GainReport(g_med, float("nan"), g_min)
    rng = np.random.default_rng(seed)
    mv = np.median(v[rng.integers(0, v.size, size=(resamples, v.size))], axis=1)
    ma = np.median(a[rng.integers(0, a.size, size=(resamples, a.size))], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = mv / ma
    err = float(np.std(ratios, ddof=1)) if np.all(np.isfinite(ratios)) else float("nan")
    return GainReport(g_med, err, g_min)
