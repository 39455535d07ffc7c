import csv
import json

import numpy as np
import pytest

from subspace_vqe import ConfigError, NumericalError, gain_factors
from subspace_vqe.harness import cli, sweep
from subspace_vqe.harness.config import load_experiment, load_manifest
from subspace_vqe.harness.exact import compute_spectrum, load_spectrum, save_spectrum
from subspace_vqe.harness.report import NoDataError, collect_runs, write_report
from subspace_vqe.harness.runner import run_experiment

TINY_MODEL = {"kind": "TFI", "rows": 2, "cols": 2, "h": 3.044}


def experiment_doc(**overrides):
    doc = {
        "schema_version": 1,
        "model": TINY_MODEL,
        "frame": {"method": "soft_ortho", "K": 2, "num_layers": 2, "beta": 10.0},
        "optimizer": {"max_iterations": 30},
        "metrics": {"record_every": 5, "enable_ci": True},
        "runs": 1,
    }
    doc.update(overrides)
    return doc


def manifest_doc(**overrides):
    doc = {
        "schema_version": 1,
        "model": TINY_MODEL,
        "methods": ["vqe", "soft_ortho"],
        "K_values": [2],
        "num_layers": [2],
        "runs": 3,
        "optimizer": {"max_iterations": 40},
        "metrics": {"record_every": 4, "enable_ci": True},
    }
    doc.update(overrides)
    return doc


def dump(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_valid(self, tmp_path):
        cfg = load_experiment(dump(tmp_path, "c.json", experiment_doc()))
        assert cfg.run_seed(3) == cfg.base_seed + 3
        assert cfg.frame.to_spec(cfg.model.to_spec()).parameter_count == 32

    def test_errors_list_fields(self, tmp_path):
        bad = experiment_doc(runs=0, frame={"method": "soft_ortho", "K": 2, "num_layers": 2, "beta": -1.0})
        with pytest.raises(ConfigError) as info:
            load_experiment(dump(tmp_path, "c.json", bad))
        assert "runs" in str(info.value) and "beta" in str(info.value)

    def test_unknown_field(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment(dump(tmp_path, "c.json", experiment_doc(colour="red")))

    def test_shipped_configs_load(self):
        from pathlib import Path

        root = Path(__file__).resolve().parents[1] / "configs"
        assert load_experiment(root / "tfi3x3_soft_k2.json").frame.beta == 10.0
        assert load_experiment(root / "ea4x4_soft_k2.json").frame.beta == 2.5
        ea = load_manifest(root / "ea4x4_sweep.json")
        assert len(ea.models()) == 10
        assert len(ea.jobs()) == 10 * 3 * 8

    def test_disorder_axis_supplies_seed(self):
        doc = manifest_doc(model={"kind": "EA", "rows": 2, "cols": 2, "h": 2.0}, disorder_seeds=[3, 5])
        m = load_manifest(doc)
        assert [c.disorder_seed for c in m.models()] == [3, 5]
        assert {j.config.model.tag for j in m.jobs()} == {"ea2x2_seed3", "ea2x2_seed5"}

    def test_manifest_jobs_unique(self, tmp_path):
        m = load_manifest(dump(tmp_path, "m.json", manifest_doc(methods=["vqe", "hard_ortho"], K_values=[2, 3])))
        jobs = m.jobs()
        assert len(jobs) == 3 * (1 + 2)
        assert len({j.path for j in jobs}) == len(jobs)
        assert [j.path for j in jobs] == [j.path for j in m.jobs()]


class TestRun:
    def test_single_iteration(self, tmp_path):
        cfg = load_experiment(dump(tmp_path, "c.json", experiment_doc(optimizer={"max_iterations": 1})))
        summary = run_experiment(cfg, 0, tmp_path / "run")
        assert summary["status"] == "ok"
        assert len(read_rows(tmp_path / "run" / "trace.csv")) == 1

    def test_bit_identical(self, tmp_path):
        cfg = load_experiment(dump(tmp_path, "c.json", experiment_doc()))
        run_experiment(cfg, 0, tmp_path / "a")
        run_experiment(cfg, 0, tmp_path / "b")
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
        run_experiment(cfg, 1, tmp_path / "c")
        assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "c" / "trace.csv").read_bytes()

    def test_summary_contents(self, tmp_path):
        cfg = load_experiment(dump(tmp_path, "c.json", experiment_doc()))
        s = run_experiment(cfg, 0, tmp_path / "run")
        f = s["fidelity"]
        assert 0 <= f["f_trc"] <= f["f_sub"] + 1e-9 <= 1 + 1e-9
        assert f["delta_f"] == pytest.approx(f["f_sub"] - f["f_trc"])
        assert s["group"] == {"model": "tfi2x2", "method": "soft_ortho", "K": 2, "N_l": 2}
        assert len(s["final_params"]) == s["num_parameters"] == 32
        ci = read_rows(tmp_path / "run" / "ci_grid.csv")
        assert ci and set(ci[0]) == {"iter", "threshold_index", "mu", "weight_above", "ci", "clamped"}

    def test_cli_run(self, tmp_path, capsys):
        cfg = dump(tmp_path, "c.json", experiment_doc(runs=2))
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "run001" / "summary.json").exists()
        assert "F_trc" in capsys.readouterr().out


class TestExact:
    def test_tfi3x3_dense(self, tmp_path):
        path = dump(tmp_path, "m.json", {"kind": "TFI", "rows": 3, "cols": 3, "h": 3.044})
        assert cli.main(["exact", "--config", str(path), "--out", str(tmp_path / "e")]) == 0
        s = load_spectrum(tmp_path / "e")
        assert s.eigenvalues.size == 512 and s.mode == "full_dense"

    def test_byte_identical(self, tmp_path):
        from subspace_vqe import ModelSpec

        model = ModelSpec.tfi(2, 2)
        for d in ("a", "b"):
            save_spectrum(compute_spectrum(model), model, tmp_path / d)
        for name in ("spectrum.json", "eigenvectors.npy"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_round_trip(self, tmp_path):
        from subspace_vqe import ModelSpec

        model = ModelSpec.tfi(2, 2)
        s = compute_spectrum(model)
        save_spectrum(s, model, tmp_path)
        t = load_spectrum(tmp_path)
        np.testing.assert_array_equal(s.eigenvalues, t.eigenvalues)
        assert t.degeneracy_groups == s.degeneracy_groups


class TestSweep:
    @pytest.fixture(scope="class")
    @staticmethod
    def done(tmp_path_factory):
        out = tmp_path_factory.mktemp("sweep")
        manifest = load_manifest(manifest_doc())
        outcome = sweep.run_sweep(manifest, out, jobs=2)
        return manifest, out, outcome

    def test_counts(self, done):
        _, out, outcome = done
        assert len(outcome.executed) == 6 and not outcome.failed
        assert len(list(out.rglob("summary.json"))) == 6
        for name in ("fidelity.csv", "gain.csv", "delta_f.csv", "cost_series.csv", "fidelity_bands.csv", "ci_grid.csv"):
            assert (out / "aggregate" / name).exists()
        assert len(read_rows(out / "aggregate" / "fidelity.csv")) == 2

    def test_resume_executes_nothing(self, done):
        manifest, out, _ = done
        outcome = sweep.run_sweep(manifest, out, resume=True)
        assert not outcome.executed and len(outcome.skipped) == 6

    def test_interrupted_resume_matches(self, done, tmp_path):
        manifest, out, _ = done
        partial = tmp_path / "partial"
        sweep.run_sweep(manifest, partial)
        # wipe one finished job as if the sweep was killed before it ran
        victim = partial / manifest.jobs()[4].path
        for f in victim.iterdir():
            f.unlink()
        outcome = sweep.run_sweep(manifest, partial, resume=True)
        assert outcome.executed == [manifest.jobs()[4].path]
        for name in ("fidelity.csv", "gain.csv", "delta_f.csv", "cost_series.csv", "fidelity_bands.csv"):
            assert (partial / "aggregate" / name).read_bytes() == (out / "aggregate" / name).read_bytes()

    def test_deterministic_aggregates(self, done, tmp_path):
        manifest, out, _ = done
        sweep.run_sweep(manifest, tmp_path / "again", jobs=1)
        for name in ("fidelity.csv", "gain.csv", "cost_series.csv", "ci_grid.csv"):
            assert (tmp_path / "again" / "aggregate" / name).read_bytes() == (out / "aggregate" / name).read_bytes()

    def test_failed_job_isolated(self, tmp_path, monkeypatch):
        real = sweep.run_experiment

        def flaky(config, run_index, out_dir, spectrum=None):
            if config.frame.method == "soft_ortho" and run_index == 1:
                raise NumericalError("synthetic failure")
            return real(config, run_index, out_dir, spectrum)

        monkeypatch.setattr(sweep, "run_experiment", flaky)
        manifest = load_manifest(manifest_doc(optimizer={"max_iterations": 5}))
        outcome = sweep.run_sweep(manifest, tmp_path, jobs=1)
        assert len(outcome.failed) == 1 and len(outcome.executed) == 5
        rows = {r["method"]: r for r in read_rows(tmp_path / "aggregate" / "fidelity.csv")}
        assert rows["soft_ortho"]["n_runs"] == "2" and rows["soft_ortho"]["n_failed"] == "1"
        failed = json.loads((tmp_path / outcome.failed[0] / "summary.json").read_text())
        assert failed["status"] == "failed" and "synthetic" in failed["error"]
        # a resume retries only the failed job
        monkeypatch.setattr(sweep, "run_experiment", real)
        again = sweep.run_sweep(manifest, tmp_path, resume=True)
        assert again.executed == outcome.failed

    def test_cli_exit_code_on_failure(self, tmp_path, monkeypatch):
        def boom(*args, **kwargs):
            raise NumericalError("synthetic failure")

        monkeypatch.setattr(sweep, "run_experiment", boom)
        path = dump(tmp_path, "m.json", manifest_doc(runs=1, methods=["vqe"]))
        assert cli.main(["sweep", "--manifest", str(path), "--out", str(tmp_path / "o")]) == 3


class TestReport:
    @pytest.fixture(scope="class")
    @staticmethod
    def root(tmp_path_factory):
        out = tmp_path_factory.mktemp("rep")
        sweep.run_sweep(load_manifest(manifest_doc(runs=4)), out)
        return out

    def test_bands_ordered(self, root):
        rows = read_rows(root / "aggregate" / "fidelity_bands.csv")
        assert rows
        for r in rows:
            assert float(r["best"]) <= float(r["p25"]) <= float(r["p50"]) <= float(r["p75"])

    def test_gain_matches_metrics(self, root):
        groups = collect_runs(root)
        vqe = [r["fidelity"]["f_trc"] for r in groups[("tfi2x2", 1, 2, "vqe")]]
        soft = [r["fidelity"]["f_trc"] for r in groups[("tfi2x2", 2, 2, "soft_ortho")]]
        expected = gain_factors(vqe, soft)
        row = next(r for r in read_rows(root / "aggregate" / "gain.csv") if r["method"] == "soft_ortho")
        assert float(row["G_med"]) == expected.g_med
        assert float(row["G_med_err"]) == expected.g_med_err
        assert float(row["G_min"]) == expected.g_min

    def test_cli_report(self, root, tmp_path):
        assert cli.main(["report", str(root), "--out", str(tmp_path / "r")]) == 0
        assert (tmp_path / "r" / "fidelity.csv").read_bytes() == (root / "aggregate" / "fidelity.csv").read_bytes()

    def test_empty_dir(self, tmp_path):
        with pytest.raises(NoDataError):
            write_report(tmp_path)
        assert cli.main(["report", str(tmp_path)]) == 2


class TestCliExitCodes:
    def test_invalid_config(self, tmp_path):
        assert cli.main(["run", "--config", str(dump(tmp_path, "c.json", experiment_doc(runs=-1)))]) == 2

    def test_missing_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.json")]) == 2

    def test_bad_jobs(self, tmp_path):
        assert cli.main(["sweep", "--manifest", "x", "--out", str(tmp_path), "--jobs", "0"]) == 2

    def test_capability(self, tmp_path, monkeypatch):
        from subspace_vqe import CapabilityError

        def refuse(*args, **kwargs):
            raise CapabilityError("too large")

        monkeypatch.setattr(cli, "compute_spectrum", refuse)
        path = dump(tmp_path, "m.json", TINY_MODEL)
        assert cli.main(["exact", "--config", str(path), "--out", str(tmp_path / "e")]) == 4

    def test_numerical(self, tmp_path, monkeypatch):
        def diverge(*args, **kwargs):
            raise NumericalError("diverged")

        monkeypatch.setattr(cli, "run_experiment", diverge)
        assert cli.main(["run", "--config", str(dump(tmp_path, "c.json", experiment_doc()))]) == 3
