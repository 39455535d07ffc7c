"""Versioned experiment configurations and sweep manifests.

Every document carries ``schema_version``. Run ``r`` of a configuration uses
seed ``base_seed + r`` for parameter initialization and, in shot mode, for
the end-of-run estimator.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..ansatz import AnsatzSpec, FrameSpec
from ..errors import ConfigError, DomainError
from ..estimator import EstimationMode
from ..hamiltonians import ModelSpec
from ..optimizer import OptimizerConfig

SCHEMA_VERSION = 1
DEFAULT_BETA = {"TFI": 10.0, "EA": 2.5}
METHOD_MODES = {"vqe": "single", "hard_ortho": "hard_ortho", "soft_ortho": "soft_ortho"}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ModelConfig(_Strict):
    kind: Literal["TFI", "EA"]
    rows: int = Field(ge=2)
    cols: int = Field(ge=2)
    periodic: bool = True
    h: float
    J: float = 1.0
    disorder_seed: int | None = Field(default=None, ge=0)
    couplings: list[tuple[int, int, float]] | None = None

    @model_validator(mode="after")
    def _ea_needs_disorder(self):
        if self.kind == "EA" and self.disorder_seed is None and self.couplings is None:
            raise ValueError("EA model needs disorder_seed or couplings")
        return self

    def to_spec(self) -> ModelSpec:
        return ModelSpec.from_dict(self.model_dump())

    @property
    def tag(self) -> str:
        if self.kind == "EA" and self.disorder_seed is not None:
            return f"ea{self.rows}x{self.cols}_seed{self.disorder_seed}"
        return f"{self.kind.lower()}{self.rows}x{self.cols}"


class FrameConfig(_Strict):
    method: Literal["vqe", "hard_ortho", "soft_ortho"]
    K: int = Field(default=1, ge=1)
    num_layers: int = Field(ge=1)
    entangler: Literal["CZ", "CNOT"] = "CZ"
    beta: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _consistent(self):
        if self.method == "vqe" and self.K != 1:
            raise ValueError("vqe uses K = 1")
        if self.method != "vqe" and self.K < 2:
            raise ValueError(f"{self.method} needs K >= 2")
        if self.method == "soft_ortho" and not self.beta > 0:
            raise ValueError("soft_ortho needs beta > 0")
        return self

    def to_spec(self, model: ModelSpec) -> FrameSpec:
        ansatz = AnsatzSpec(model.num_qubits, self.num_layers, self.entangler, model.lattice.edges)
        beta = self.beta if self.method == "soft_ortho" else 0.0
        return FrameSpec(METHOD_MODES[self.method], self.K, ansatz, beta)


class OptimizerSection(_Strict):
    max_iterations: int = Field(default=1500, ge=1)
    init_range: float = Field(default=0.2 * math.pi, gt=0, le=math.pi)
    iteration_unit: Literal["parameter_update"] = "parameter_update"
    sweep_order: Literal["cyclic"] = "cyclic"

    def to_config(self, seed: int) -> OptimizerConfig:
        return OptimizerConfig(self.max_iterations, self.init_range, seed, self.iteration_unit, self.sweep_order)


class EstimationSection(_Strict):
    kind: Literal["analytic", "shots"] = "analytic"
    shots: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _shots_given(self):
        if self.kind == "shots" and self.shots is None:
            raise ValueError("shot estimation needs shots")
        return self

    def to_mode(self, seed: int) -> EstimationMode:
        return EstimationMode(self.kind, self.shots, seed)


class MetricsSection(_Strict):
    record_every: int = Field(default=1, ge=1)
    enable_ci: bool = False


class ExperimentConfig(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    model: ModelConfig
    frame: FrameConfig
    optimizer: OptimizerSection = OptimizerSection()
    estimation: EstimationSection = EstimationSection()
    metrics: MetricsSection = MetricsSection()
    runs: int = Field(default=1, ge=1)
    base_seed: int = Field(default=0, ge=0, lt=2**64)
    output_dir: str = "results"

    def run_seed(self, run_index: int) -> int:
        return self.base_seed + run_index


class SweepManifest(_Strict):
    """Cartesian grid over methods, K, N_l and disorder seeds.

    VQE ignores the K axis and is scheduled once per N_l. A missing ``beta``
    falls back to the per-model default (10 for TFI, 2.5 for EA).
    """

    schema_version: Literal[1] = SCHEMA_VERSION
    model: ModelConfig
    methods: list[Literal["vqe", "hard_ortho", "soft_ortho"]] = Field(min_length=1)
    K_values: list[int] = Field(default=[2], min_length=1)
    num_layers: list[int] = Field(min_length=1)
    disorder_seeds: list[int] | None = None
    beta: float | None = Field(default=None, gt=0)
    entangler: Literal["CZ", "CNOT"] = "CZ"
    runs: int = Field(ge=1)
    base_seed: int = Field(default=0, ge=0, lt=2**64)
    optimizer: OptimizerSection = OptimizerSection()
    estimation: EstimationSection = EstimationSection()
    metrics: MetricsSection = MetricsSection()

    @model_validator(mode="before")
    @classmethod
    def _seed_from_axis(cls, data):
        # the disorder axis overrides the model's own seed, so it need not repeat one
        if isinstance(data, dict) and data.get("disorder_seeds") and isinstance(data.get("model"), dict):
            model = data["model"]
            if model.get("disorder_seed") is None and model.get("couplings") is None:
                data = {**data, "model": {**model, "disorder_seed": data["disorder_seeds"][0]}}
        return data

    @model_validator(mode="after")
    def _axes(self):
        if any(k < 2 for k in self.K_values):
            raise ValueError("K_values must all be >= 2")
        if any(n < 1 for n in self.num_layers):
            raise ValueError("num_layers must all be >= 1")
        if self.disorder_seeds is not None and self.model.kind != "EA":
            raise ValueError("disorder_seeds only apply to EA models")
        for axis in ("K_values", "num_layers", "disorder_seeds", "methods"):
            values = getattr(self, axis)
            if values is not None and len(set(values)) != len(values):
                raise ValueError(f"{axis} contains duplicates")
        return self

    def models(self) -> list[ModelConfig]:
        if self.disorder_seeds is None:
            return [self.model]
        return [self.model.model_copy(update={"disorder_seed": s, "couplings": None}) for s in self.disorder_seeds]

    def jobs(self) -> list[Job]:
        beta = self.beta if self.beta is not None else DEFAULT_BETA[self.model.kind]
        jobs = []
        for model in self.models():
            for n_l in self.num_layers:
                for method in self.methods:
                    for K in [1] if method == "vqe" else self.K_values:
                        frame = FrameConfig(
                            method=method,
                            K=K,
                            num_layers=n_l,
                            entangler=self.entangler,
                            beta=beta if method == "soft_ortho" else 0.0,
                        )
                        config = ExperimentConfig(
                            model=model,
                            frame=frame,
                            optimizer=self.optimizer,
                            estimation=self.estimation,
                            metrics=self.metrics,
                            runs=self.runs,
                            base_seed=self.base_seed,
                        )
                        for r in range(self.runs):
                            jobs.append(Job(config=config, run_index=r))
        return jobs


class Job(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: ExperimentConfig
    run_index: int

    @property
    def group_path(self) -> str:
        f = self.config.frame
        return f"{self.config.model.tag}/{f.method}/K{f.K}/L{f.num_layers}"

    @property
    def path(self) -> str:
        return f"{self.group_path}/run{self.run_index:03d}"


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {where}: {err['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def _load(cls, source):
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except FileNotFoundError:
            raise ConfigError(f"configuration file not found: {source}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source} is not valid JSON: {exc}") from None
    else:
        doc = source
    try:
        return cls.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def load_experiment(source) -> ExperimentConfig:
    config = _load(ExperimentConfig, source)
    try:
        config.frame.to_spec(config.model.to_spec())
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return config


def load_manifest(source) -> SweepManifest:
    manifest = _load(SweepManifest, source)
    try:
        for m in manifest.models():
            m.to_spec()
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return manifest


def load_model(source) -> ModelConfig:
    """A bare model document, or the ``model`` section of a config or manifest."""
    if isinstance(source, (str, Path)):
        try:
            doc = json.loads(Path(source).read_text())
        except FileNotFoundError:
            raise ConfigError(f"configuration file not found: {source}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source} is not valid JSON: {exc}") from None
    else:
        doc = source
    if isinstance(doc, dict) and "model" in doc:
        doc = doc["model"]
    return _load(ModelConfig, doc)
