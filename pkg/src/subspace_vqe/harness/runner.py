"""One optimization run end to end: optimize, estimate H_trc, diagonalize, score.

Per-iteration monitoring reads the exact ground space directly from the
statevector. It runs behind the optimizer's callback hook and never feeds
back into the optimization path.
"""

from __future__ import annotations

import logging
import os
import tempfile
import time
from pathlib import Path

import numpy as np

from ..ansatz import FrameEvaluator, build_ansatz_circuit, member_params
from ..errors import NumericalError
from ..estimator import (
    estimate_hard_offdiagonals,
    estimate_soft_problem,
    frame_problem,
    solve_generalized,
)
from ..hamiltonians import SpectrumResult, build_hamiltonian
from ..metrics import ci_profile, ci_thresholds, htrc_fidelity, normalized_cost, subspace_fidelity
from ..optimizer import RunTrace, optimize
from .config import ExperimentConfig
from .exact import compute_spectrum
from .io import fmt, write_csv, write_json

log = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"
CI_FILE = "ci_grid.csv"
CI_COLUMNS = ("iter", "threshold_index", "mu", "weight_above", "ci", "clamped")


class Monitor:
    """Metric callback: fidelities, normalized cost and optionally the CI grid."""

    def __init__(self, H, spectrum: SpectrumResult, K: int, enable_ci: bool):
        self.H = H
        self.spectrum = spectrum
        self.ground = spectrum.ground_vectors()
        self.K = K
        self.enable_ci = enable_ci
        self.thresholds = ci_thresholds(spectrum) if enable_ci else None
        self.ci_rows: list = []

    def __call__(self, it, params, evaluator) -> dict:
        states = evaluator.states(params)
        problem = frame_problem(states, self.H)
        solution = solve_generalized(problem, states)
        energy = float(np.trace(problem.H).real)
        out = {
            "f_sub": subspace_fidelity(states, self.ground),
            "f_trc": htrc_fidelity(solution, self.ground),
            "norm_cost": normalized_cost(energy, self.spectrum, self.K),
        }
        if self.enable_ci:
            above, values, clamped = ci_profile(solution.assembled_state, self.spectrum)
            for g, mu in enumerate(self.thresholds):
                self.ci_rows.append((it, g, fmt(mu), fmt(above[g]), fmt(values[g]), int(clamped[g])))
        return out


def _write_trace(trace: RunTrace, path: Path) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".trace.", suffix=".tmp")
    os.close(fd)
    try:
        trace.write_csv(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def end_of_run_estimate(frame_spec, H, params, mode):
    """Truncated problem from circuit-level measurements on the final parameters."""
    ansatz = frame_spec.ansatz
    if frame_spec.mode == "hard_ortho":
        return estimate_hard_offdiagonals(build_ansatz_circuit(ansatz, params), frame_spec.K, H, mode)
    circuits = [build_ansatz_circuit(ansatz, member_params(frame_spec, params, p)) for p in range(frame_spec.K)]
    return estimate_soft_problem(circuits, H, mode)


def spectrum_request(K: int) -> tuple:
    """(k_low, k_high) an iterative spectrum needs: K highest for the normalized cost,
    K lowest plus headroom to resolve the ground degeneracy and the first gap."""
    return K + 2, K


def run_experiment(config: ExperimentConfig, run_index: int, out_dir, spectrum: SpectrumResult | None = None) -> dict:
    """Execute run ``run_index`` of ``config`` and persist its artifacts in ``out_dir``.

    On a numerical failure the partial trace and an error summary are written
    before the exception propagates.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    model = config.model.to_spec()
    H = build_hamiltonian(model)
    frame_spec = config.frame.to_spec(model)
    K = frame_spec.K
    if spectrum is None:
        spectrum = compute_spectrum(model, *spectrum_request(K))
    seed = config.run_seed(run_index)
    opt_config = config.optimizer.to_config(seed)
    monitor = Monitor(H, spectrum, K, config.metrics.enable_ci)

    summary = {
        "schema_version": config.schema_version,
        "run_index": run_index,
        "seed": seed,
        "group": {
            "model": config.model.tag,
            "method": config.frame.method,
            "K": K,
            "N_l": config.frame.num_layers,
        },
        "num_parameters": frame_spec.parameter_count,
        "config": config.model_dump(mode="json"),
        "model": model.to_dict(),
        "ground": {
            "energy": spectrum.ground_energy,
            "degeneracy": spectrum.ground_degeneracy(),
            "degenerate": spectrum.ground_degeneracy() > 1,
        },
    }

    try:
        trace = optimize(frame_spec, H, opt_config, [monitor], record_every=config.metrics.record_every)
    except NumericalError as exc:
        if exc.trace is not None:
            _write_trace(exc.trace, out_dir / TRACE_FILE)
        summary.update(status="error", error=str(exc), timing={"wall_seconds": time.perf_counter() - start})
        write_json(out_dir / SUMMARY_FILE, summary)
        raise

    _write_trace(trace, out_dir / TRACE_FILE)
    if config.metrics.enable_ci:
        write_csv(out_dir / CI_FILE, CI_COLUMNS, monitor.ci_rows)

    params = trace.final_params
    states = FrameEvaluator(frame_spec, H).states(params)
    mode = config.estimation.to_mode(seed)
    problem = end_of_run_estimate(frame_spec, H, params, mode)
    solution = solve_generalized(problem, states)
    last = trace.records[-1]
    f_sub = subspace_fidelity(states, monitor.ground)
    f_trc = htrc_fidelity(solution, monitor.ground)
    final = {
        "cost": last.cost,
        "energy": last.energy,
        "penalty": last.penalty,
        "pair_overlaps": [float(v) for v in last.overlaps],
        "max_pair_overlap": last.max_pair_overlap,
        "norm_cost": normalized_cost(last.energy, spectrum, K),
    }
    if spectrum.mode == "full_dense":
        above, _, _ = ci_profile(solution.assembled_state, spectrum)
        final["weight_above_E1"] = float(above[1]) if above.size > 1 else 0.0
    summary.update(
        status="ok",
        final=final,
        fidelity={"f_sub": f_sub, "f_trc": f_trc, "delta_f": f_sub - f_trc},
        estimation={
            "mode": config.estimation.model_dump(mode="json"),
            "problem": problem.to_dict(),
            "solution": solution.to_dict(),
        },
        final_params=[float(v) for v in params],
        timing={"wall_seconds": time.perf_counter() - start},
    )
    write_json(out_dir / SUMMARY_FILE, summary)
    log.info("%s run %d: F_trc=%.6f F_sub=%.6f", config.model.tag, run_index, f_trc, f_sub)
    return summary

