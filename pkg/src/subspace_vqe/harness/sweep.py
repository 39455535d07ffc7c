"""Parallel execution of a sweep manifest.

Each job owns ``<out>/<model>/<method>/K<K>/L<N_l>/run<r>/``. The spectrum of
every model is computed once into ``<out>/<model>/exact/`` and shared by its
jobs. With ``resume`` a job whose summary reports ``ok`` is skipped.
"""

from __future__ import annotations

import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import SubspaceVQEError
from .config import Job, SweepManifest
from .exact import compute_spectrum, load_spectrum, save_spectrum, spectrum_matches
from .io import write_json
from .report import write_report
from .runner import SUMMARY_FILE, run_experiment, spectrum_request

log = logging.getLogger(__name__)


@dataclass
class SweepOutcome:
    executed: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failed: list = field(default_factory=list)


def spectrum_dir(out_dir, model_tag: str) -> Path:
    return Path(out_dir) / model_tag / "exact"


def job_completed(out_dir, job: Job) -> bool:
    path = Path(out_dir) / job.path / SUMMARY_FILE
    if not path.exists():
        return False
    try:
        return json.loads(path.read_text()).get("status") == "ok"
    except json.JSONDecodeError:
        return False


def _execute(job_doc: dict, out_dir: str, spec_dir: str) -> tuple:
    """Worker entry point; never raises so one failure cannot take the pool down."""
    job = Job.model_validate(job_doc)
    run_dir = Path(out_dir) / job.path
    try:
        run_experiment(job.config, job.run_index, run_dir, load_spectrum(spec_dir))
        return job.path, None
    except SubspaceVQEError as exc:
        message = f"{type(exc).__name__}: {exc}"
    except Exception:  # noqa: BLE001 - isolate arbitrary worker crashes
        message = traceback.format_exc()
    summary_path = run_dir / SUMMARY_FILE
    doc = json.loads(summary_path.read_text()) if summary_path.exists() else {}
    doc.update(
        status="failed",
        error=message,
        run_index=job.run_index,
        group={
            "model": job.config.model.tag,
            "method": job.config.frame.method,
            "K": job.config.frame.K,
            "N_l": job.config.frame.num_layers,
        },
    )
    write_json(summary_path, doc)
    return job.path, message


def prepare_spectra(manifest: SweepManifest, out_dir) -> dict:
    """Spectrum directory per model tag, computing any that are missing or stale."""
    k_max = max(manifest.K_values) if any(m != "vqe" for m in manifest.methods) else 1
    k_low, k_high = spectrum_request(k_max)
    dirs = {}
    for model_cfg in manifest.models():
        model = model_cfg.to_spec()
        directory = spectrum_dir(out_dir, model_cfg.tag)
        if not spectrum_matches(directory, model):
            log.info("computing spectrum for %s", model_cfg.tag)
            save_spectrum(compute_spectrum(model, k_low, k_high), model, directory)
        dirs[model_cfg.tag] = directory
    return dirs


def run_sweep(manifest: SweepManifest, out_dir, jobs: int = 1, resume: bool = False) -> SweepOutcome:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_jobs = manifest.jobs()
    write_json(out_dir / "manifest.json", manifest.model_dump(mode="json"))
    write_json(
        out_dir / "jobs.json",
        [{"path": j.path, "run_index": j.run_index, "seed": j.config.run_seed(j.run_index)} for j in all_jobs],
    )
    spectra = prepare_spectra(manifest, out_dir)
    outcome = SweepOutcome()
    pending = []
    for job in all_jobs:
        if resume and job_completed(out_dir, job):
            outcome.skipped.append(job.path)
        else:
            pending.append(job)
    log.info("%d jobs pending, %d already complete", len(pending), len(outcome.skipped))

    args = [(j.model_dump(mode="json"), str(out_dir), str(spectra[j.config.model.tag])) for j in pending]
    if jobs <= 1 or len(pending) <= 1:
        results = [_execute(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, *zip(*args)))
    for path, error in results:
        if error is None:
            outcome.executed.append(path)
        else:
            log.warning("job %s failed: %s", path, error.splitlines()[-1] if error else "")
            outcome.failed.append(path)

    write_report(out_dir, out_dir / "aggregate")
    return outcome
