"""Command-line entry point: ``subspace-vqe {run,sweep,exact,report}``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 capability limit.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import CapabilityError, DomainError, NumericalError
from .config import load_experiment, load_manifest, load_model
from .exact import compute_spectrum, save_spectrum
from .report import write_report
from .runner import run_experiment, spectrum_request
from .sweep import run_sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_CAPABILITY = 0, 2, 3, 4

log = logging.getLogger("subspace_vqe")


def _cmd_run(args) -> int:
    config = load_experiment(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"base_seed": args.seed})
    out = Path(args.out or config.output_dir)
    model = config.model.to_spec()
    spectrum = compute_spectrum(model, *spectrum_request(config.frame.K))
    for r in range(config.runs):
        summary = run_experiment(config, r, out / f"run{r:03d}", spectrum)
        print(f"run {r}: F_trc={summary['fidelity']['f_trc']:.6f} F_sub={summary['fidelity']['f_sub']:.6f}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.seed is not None:
        manifest = manifest.model_copy(update={"base_seed": args.seed})
    outcome = run_sweep(manifest, args.out, jobs=args.jobs, resume=args.resume)
    print(f"executed {len(outcome.executed)}, skipped {len(outcome.skipped)}, failed {len(outcome.failed)}")
    return EXIT_NUMERICAL if outcome.failed else EXIT_OK


def _cmd_exact(args) -> int:
    model_cfg = load_model(args.config)
    doc = json.loads(Path(args.config).read_text())
    request = doc.get("spectrum", {}) if isinstance(doc, dict) else {}
    k_low = int(request.get("k_low", 4))
    k_high = int(request.get("k_high", 2))
    model = model_cfg.to_spec()
    spectrum = compute_spectrum(model, k_low, k_high)
    path = save_spectrum(spectrum, model, args.out)
    print(f"{spectrum.mode}: {spectrum.eigenvalues.size} eigenvalues, E0={spectrum.ground_energy:.12f} -> {path}")
    return EXIT_OK


def _cmd_report(args) -> int:
    out = write_report(args.sweep_dir, args.out)
    print(f"report written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subspace-vqe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every seeded repetition of one experiment config")
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
    p.add_argument("--seed", type=int, help="override base_seed")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="execute a sweep manifest and aggregate the results")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--resume", action="store_true", help="skip jobs with a completed summary")
    p.add_argument("--seed", type=int, help="override base_seed")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("exact", help="compute and store the exact spectrum of a model")
    p.add_argument("--config", required=True, type=Path, help="model, experiment or manifest JSON")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("report", help="aggregate tables and plot data from a results directory")
    p.add_argument("sweep_dir", type=Path)
    p.add_argument("--out", type=Path, help="destination (default: <sweep_dir>/report)")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY


if __name__ == "__main__":
    sys.exit(main())
