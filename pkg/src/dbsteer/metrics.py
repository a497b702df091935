"""Overlap, inconsistency, and cohort metrics plus the runtime benchmark.

The Dice-Sorensen coefficient uses the conventional factor-2 form
2|X & Y| / (|X| + |Y|) so identical masks score 1. Inconsistency averages
the missed-target and activated-constraint fractions; 0 is a perfect
activation profile and 0.5 is what an all-zero stimulation scores.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clouds import LabeledCloud, voxel_downsample
from .fields import ActivationMask, FieldModelConfig, build_transfer_matrix
from .leads import LeadInstance
from . import steering
from .steering import OptimizeOptions, StimulationProblem

# Voxel sweep bracketing the sizes where the MILP becomes impractical.
DEFAULT_BENCH_VOXELS_MM = (1.4, 1.2, 1.0, 0.95, 0.9, 0.85, 0.8)

BENCH_CSV_HEADER = ("voxel_mm", "n_t", "n_c", "method", "wall_time_s", "status", "beta", "objective")


def dice(x: ActivationMask, y: ActivationMask) -> float:
    """Overlap of two activation masks: 2|X & Y| / (|X| + |Y|)."""
    if len(x) != len(y):
        raise ValueError(f"mask lengths differ: {len(x)} vs {len(y)}")
    size = x.count + y.count
    if size == 0:
        raise ValueError("Dice coefficient undefined for two empty masks")
    intersection = int(np.count_nonzero(x.bits & y.bits))
    return 2.0 * intersection / size


def inconsistency(n_t_missed: int, n_t: int, n_c_activated: int, n_c: int) -> float:
    """Average of the missed-target and activated-constraint fractions."""
    if n_t <= 0 or n_c <= 0:
        raise ValueError("point counts must be positive")
    if not 0 <= n_t_missed <= n_t:
        raise ValueError(f"n_t_missed {n_t_missed} outside [0, {n_t}]")
    if not 0 <= n_c_activated <= n_c:
        raise ValueError(f"n_c_activated {n_c_activated} outside [0, {n_c}]")
    return 0.5 * (n_t_missed / n_t + n_c_activated / n_c)


@dataclass(frozen=True, eq=False)
class CohortMatrix:
    """Normalized current proportions, one column per lead."""

    values: np.ndarray
    lead_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"cohort matrix must be 2-D, got shape {values.shape}")
        if values.shape[1] != len(self.lead_ids):
            raise ValueError(
                f"{values.shape[1]} columns but {len(self.lead_ids)} lead ids"
            )
        if np.any(values < -1e-12) or np.any(values > 1 + 1e-12):
            raise ValueError("proportions must lie in [0, 1]")
        sums = values.sum(axis=0)
        ok = (np.abs(sums - 1.0) <= 1e-6) | (np.abs(sums) <= 1e-12)
        if not np.all(ok):
            bad = np.flatnonzero(~ok)
            raise ValueError(f"columns {bad.tolist()} neither sum to 1 nor are all-zero")
        object.__setattr__(self, "values", values)
        values.setflags(write=False)


def frobenius_diff(a: CohortMatrix, b: CohortMatrix) -> float:
    """Frobenius norm of the elementwise difference of two cohort matrices."""
    if a.values.shape != b.values.shape:
        raise ValueError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")
    if a.lead_ids != b.lead_ids:
        raise ValueError("lead ids do not match")
    return float(np.sqrt(np.sum((a.values - b.values) ** 2)))


def save_cohort_matrix(matrix: CohortMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["contact"] + list(matrix.lead_ids))
        for i, row in enumerate(matrix.values):
            writer.writerow([f"c{i}"] + [f"{v:.9g}" for v in row])


def load_cohort_matrix(path) -> CohortMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[0] != "contact":
            raise ValueError(f"{path}: expected 'contact,<lead ids...>' header")
        lead_ids = tuple(header[1:])
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(lead_ids) + 1:
                raise ValueError(f"{path}:{lineno}: ragged row")
            rows.append([float(v) for v in record[1:]])
    return CohortMatrix(values=np.array(rows), lead_ids=lead_ids)


@dataclass(frozen=True)
class BenchRecord:
    voxel_length_mm: float
    n_t: int
    n_c: int
    method: str
    wall_time_s: float
    status: str
    beta: float
    objective: float

    def __post_init__(self) -> None:
        if self.wall_time_s < 0:
            raise ValueError("wall time must be >= 0")


@dataclass(frozen=True)
class BenchProblemParams:
    e_th_t: float = 0.2
    e_th_c: float = 0.2
    i_max_contact_mA: float = 5.0
    i_max_total_mA: float = 8.0
    theta: float = 1.0


def bench_sweep_point(
    base_cloud: LabeledCloud,
    lead: LeadInstance,
    config: FieldModelConfig,
    voxel_length_mm: float,
    method: str,
    time_limit_s: float,
    params: BenchProblemParams,
) -> BenchRecord:
    """Downsample, build, and solve one sweep point; timing covers the solve."""
    cloud = voxel_downsample(base_cloud, voxel_length_mm)
    transfer = build_transfer_matrix(lead, config, cloud.points)
    problem = StimulationProblem(
        transfer=transfer, cloud=cloud,
        e_th_t=params.e_th_t, e_th_c=params.e_th_c,
        i_max_contact_mA=params.i_max_contact_mA,
        i_max_total_mA=params.i_max_total_mA, theta=params.theta,
    )
    # Only the MILP gets a time budget; the LP always terminates quickly at
    # these sizes and a timeout status for it would be meaningless.
    options = OptimizeOptions(time_limit_s=time_limit_s if method == steering.MILP else math.inf)
    started = time.perf_counter()
    report = steering.optimize(problem, method=method, options=options)
    wall = time.perf_counter() - started
    return BenchRecord(
        voxel_length_mm=voxel_length_mm,
        n_t=cloud.n_target,
        n_c=cloud.n_constraint,
        method=method,
        wall_time_s=wall,
        status=report.solver_stats.status,
        beta=report.beta,
        objective=report.objective,
    )


def run_benchmark(
    base_cloud: LabeledCloud,
    lead: LeadInstance,
    config: FieldModelConfig,
    voxel_lengths_mm: Sequence[float] = DEFAULT_BENCH_VOXELS_MM,
    methods: Sequence[str] = (steering.LP, steering.MILP),
    time_limit_s: float = 1500.0,
    params: BenchProblemParams | None = None,
) -> list[BenchRecord]:
    """Sweep voxel length x method and record runtimes, statuses, and betas."""
    if not voxel_lengths_mm or not methods:
        raise ValueError("voxel_lengths_mm and methods must be non-empty")
    params = params or BenchProblemParams()
    records = []
    for voxel in voxel_lengths_mm:
        for method in methods:
            records.append(
                bench_sweep_point(
                    base_cloud, lead, config, voxel, method, time_limit_s, params
                )
            )
    return records


def write_benchmark_csv(records: Sequence[BenchRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_CSV_HEADER)
        for r in records:
            writer.writerow([
                f"{r.voxel_length_mm:.9g}", r.n_t, r.n_c, r.method,
                f"{r.wall_time_s:.9g}", r.status, f"{r.beta:.9g}", f"{r.objective:.9g}",
            ])
