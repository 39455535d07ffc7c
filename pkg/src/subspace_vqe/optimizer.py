"""Sequential single-parameter (NFT) minimization of frame costs.

Each rotation angle enters the cost as ``a cos(t) + b sin(t) + c``. An update
samples the cost at ``t +/- pi/2``, reuses the known value at ``t``, and jumps
to the closed-form minimizer. One iteration is one such parameter update;
parameters are visited cyclically in layout order.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .ansatz import FrameCost, FrameEvaluator, FrameSpec
from .errors import DomainError, NumericalError
from .statevector import PauliSumOperator

TRACE_COLUMNS = ("iter", "cost", "energy", "penalty", "max_pair_overlap", "f_sub", "f_trc", "norm_cost")


@dataclass(frozen=True)
class OptimizerConfig:
    max_iterations: int = 1500
    init_range: float = 0.2 * math.pi
    rng_seed: int = 0
    iteration_unit: str = "parameter_update"
    sweep_order: str = "cyclic"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DomainError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0 < self.init_range <= math.pi:
            raise DomainError(f"init_range must lie in (0, pi], got {self.init_range}")
        if self.iteration_unit != "parameter_update":
            raise DomainError(f"unsupported iteration_unit {self.iteration_unit!r}")
        if self.sweep_order != "cyclic":
            raise DomainError(f"unsupported sweep_order {self.sweep_order!r}")


@dataclass
class IterationRecord:
    iteration: int
    cost: float
    energy: float
    penalty: float
    overlaps: np.ndarray
    wall_clock: float
    f_sub: float | None = None
    f_trc: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def max_pair_overlap(self) -> float:
        return float(self.overlaps.max()) if self.overlaps.size else 0.0


@dataclass
class RunTrace:
    frame_spec: FrameSpec
    config: OptimizerConfig
    initial_params: np.ndarray
    records: list = field(default_factory=list)
    final_params: np.ndarray | None = None
    status: str = "running"
    error: str | None = None

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    @property
    def final_cost(self) -> float:
        return self.records[-1].cost

    def write_csv(self, path):
        def fmt(v):
            return "" if v is None else repr(float(v))

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for r in self.records:
                writer.writerow(
                    [
                        r.iteration,
                        fmt(r.cost),
                        fmt(r.energy),
                        fmt(r.penalty),
                        fmt(r.max_pair_overlap),
                        fmt(r.f_sub),
                        fmt(r.f_trc),
                        fmt(r.extras.get("norm_cost")),
                    ]
                )


def init_parameters(count: int, config: OptimizerConfig) -> np.ndarray:
    if count < 1:
        raise DomainError(f"parameter count must be >= 1, got {count}")
    rng = np.random.default_rng(config.rng_seed)
    return rng.uniform(-config.init_range, config.init_range, size=count)


def wrap_angle(theta: float) -> float:
    """Map onto (-pi, pi]."""
    return theta - 2 * math.pi * math.ceil((theta - math.pi) / (2 * math.pi))


def fit_sinusoid(at_zero, at_plus, at_minus):
    """Coefficients of ``A cos(d) + B sin(d) + C`` from values at d = 0, +pi/2, -pi/2.

    Works element-wise on arrays.
    """
    C = (np.asarray(at_plus) + np.asarray(at_minus)) / 2
    B = (np.asarray(at_plus) - np.asarray(at_minus)) / 2
    A = np.asarray(at_zero) - C
    return A, B, C


def _minimizing_shift(A: float, B: float, C: float) -> float:
    if math.hypot(A, B) <= 1e-15 * (1.0 + abs(C)):
        return 0.0
    return math.atan2(-B, -A)


def nft_update(cost_fn: Callable, params, j: int, current: float | None = None):
    """One analytic line minimization along parameter ``j``.

    Returns ``(new_params, new_cost)``. Passing ``current`` (the cost at
    ``params``) saves one evaluation.
    """
    params = np.array(params, dtype=np.float64)
    theta = params[j]
    if current is None:
        current = cost_fn(params)
    shifted = params.copy()
    shifted[j] = theta + math.pi / 2
    z_plus = cost_fn(shifted)
    shifted[j] = theta - math.pi / 2
    z_minus = cost_fn(shifted)
    if not all(np.isfinite([current, z_plus, z_minus])):
        raise NumericalError(f"non-finite cost while updating parameter {j}")
    A, B, C = (float(x) for x in fit_sinusoid(current, z_plus, z_minus))
    delta = _minimizing_shift(A, B, C)
    params[j] = wrap_angle(theta + delta)
    return params, A * math.cos(delta) + B * math.sin(delta) + C


MetricCallback = Callable[[int, np.ndarray, FrameEvaluator], dict]


def optimize(
    frame_spec: FrameSpec,
    H: PauliSumOperator,
    config: OptimizerConfig,
    callbacks: Sequence[MetricCallback] = (),
    record_every: int = 1,
    initial_params=None,
    monotone_tol: float = 1e-9,
) -> RunTrace:
    """Run ``config.max_iterations`` cyclic NFT updates on the frame cost.

    Callbacks run on iterations where ``(iteration + 1) % record_every == 0``
    and on the last one; they return a dict whose ``f_sub``/``f_trc`` keys fill
    the record and whose other keys land in ``record.extras``. They never
    influence the optimization path.
    """
    if record_every < 1:
        raise DomainError(f"record_every must be >= 1, got {record_every}")
    evaluator = FrameEvaluator(frame_spec, H)
    n = frame_spec.parameter_count
    if initial_params is None:
        params = init_parameters(n, config)
    else:
        params = np.array(initial_params, dtype=np.float64)
        if params.shape != (n,):
            raise DomainError(f"expected {n} initial parameters, got shape {params.shape}")
    trace = RunTrace(frame_spec, config, params.copy())
    K = frame_spec.K
    current = evaluator.evaluate(params).as_vector()
    start = time.perf_counter()
    for it in range(config.max_iterations):
        j = it % n
        theta = params[j]
        plus, minus = (
            c.as_vector() for c in evaluator.evaluate_variants(params, j, (theta + math.pi / 2, theta - math.pi / 2))
        )
        if not (np.all(np.isfinite(plus)) and np.all(np.isfinite(minus))):
            trace.status, trace.error = "error", f"non-finite cost at iteration {it}"
            trace.final_params = params.copy()
            raise NumericalError(trace.error, trace=trace)
        # every logged component is itself sinusoidal in theta: one fit predicts them all
        A, B, C = fit_sinusoid(current, plus, minus)
        delta = _minimizing_shift(A[0], B[0], C[0])
        new = A * math.cos(delta) + B * math.sin(delta) + C
        if new[0] > current[0] + monotone_tol * max(1.0, abs(current[0])):
            trace.status, trace.error = "error", f"cost increased at iteration {it}"
            trace.final_params = params.copy()
            raise NumericalError(trace.error, trace=trace)
        params[j] = wrap_angle(theta + delta)
        current = new
        cost = FrameCost.from_vector(current, K)
        record = IterationRecord(
            it, cost.total, cost.energy, cost.penalty, cost.overlaps, time.perf_counter() - start
        )
        if callbacks and ((it + 1) % record_every == 0 or it == config.max_iterations - 1):
            for cb in callbacks:
                extra = dict(cb(it, params, evaluator) or {})
                record.f_sub = extra.pop("f_sub", record.f_sub)
                record.f_trc = extra.pop("f_trc", record.f_trc)
                record.extras.update(extra)
        trace.records.append(record)
    trace.final_params = params.copy()
    trace.status = "ok"
    return trace
