"""Command-line pipeline: generate, downsample, optimize, compare, bench.

Exit codes: 0 success/optimal, 2 infeasible, 3 time limit with incumbent,
4 configuration error. All numeric CSV output uses 9 significant digits so
repeated runs are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics, steering
from .branch_bound import FEASIBLE_TIME_LIMIT
from .clouds import LabeledCloud, generate_synthetic_stn, load_cloud, save_cloud, voxel_downsample
from .config import ConfigError, RunConfig, load_run_config, region_to_dict
from .fields import build_transfer_matrix, load_transfer_matrix
from .leads import builtin_model, place_lead
from .metrics import (
    BenchProblemParams,
    CohortMatrix,
    bench_sweep_point,
    load_cohort_matrix,
    write_benchmark_csv,
)
from .simplex import INFEASIBLE
from .steering import LP, MILP, OptimizationReport, OptimizeOptions, StimulationProblem

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_TIME_LIMIT = 3
EXIT_CONFIG = 4


def _lead_instance(config: RunConfig):
    model = builtin_model(config.lead.model_id)
    return place_lead(model, config.lead.tip, config.lead.axis, config.lead.roll_radians)


def _scenario_cloud(config: RunConfig, seed_override: int | None = None) -> LabeledCloud:
    scenario = config.scenario
    if scenario.synthetic is not None:
        seed = scenario.synthetic.seed if seed_override is None else seed_override
        cloud = generate_synthetic_stn(seed, scenario.synthetic.regions)
    elif scenario.cloud_csv is not None:
        cloud = load_cloud(scenario.cloud_csv)
    else:
        cloud = load_cloud(scenario.transfer_cloud_csv)
    if scenario.voxel_length_mm is not None:
        cloud = voxel_downsample(cloud, scenario.voxel_length_mm)
    return cloud


def _scenario_problem(config: RunConfig, theta: float, seed_override: int | None = None) -> StimulationProblem:
    cloud = _scenario_cloud(config, seed_override)
    if config.scenario.transfer_csv is not None:
        transfer = load_transfer_matrix(config.scenario.transfer_csv)
        if transfer.point_count != len(cloud):
            raise ConfigError(
                f"transfer has {transfer.point_count} rows but labels cloud has {len(cloud)}"
            )
    else:
        transfer = build_transfer_matrix(_lead_instance(config), config.field_model, cloud.points)
    p = config.problem
    return StimulationProblem(
        transfer=transfer, cloud=cloud, e_th_t=p.e_th_t, e_th_c=p.e_th_c,
        i_max_contact_mA=p.i_max_contact_mA, i_max_total_mA=p.i_max_total_mA,
        theta=theta,
    )


def _json_number(value):
    if value is None or not math.isfinite(value):
        return None
    return value


def _report_to_dict(report: OptimizationReport, n_t: int, n_c: int) -> dict:
    stats = report.solver_stats
    return {
        "method": report.method,
        "theta": report.theta,
        "status": stats.status,
        "beta": report.beta,
        "objective": _json_number(report.objective),
        "wall_time_s": stats.wall_time_s,
        "iterations": stats.iterations,
        "nodes": stats.nodes,
        "gap": _json_number(stats.gap),
        "currents_mA": report.distribution.u_mA.tolist(),
        "proportions": report.distribution.normalized.tolist(),
        "total_mA": report.distribution.total_mA,
        "exempted_constraint_ids": (
            sorted(report.exempted_constraint_ids)
            if report.exempted_constraint_ids is not None else None
        ),
        "n_target": n_t,
        "n_constraint": n_c,
        "input_digest": report.input_digest,
    }


def _write_currents_csv(report: OptimizationReport, labels, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("contact,current_mA,proportion\n")
        for label, u, p in zip(labels, report.distribution.u_mA, report.distribution.normalized):
            fh.write(f"{label},{u:.9g},{p:.9g}\n")


def _status_exit_code(status: str) -> int:
    if status == INFEASIBLE:
        return EXIT_INFEASIBLE
    if status == FEASIBLE_TIME_LIMIT:
        return EXIT_TIME_LIMIT
    return EXIT_OK


def cmd_generate(args) -> int:
    config = load_run_config(args.config)
    if config.scenario.synthetic is None:
        raise ConfigError("generate requires a synthetic scenario block")
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else config.scenario.synthetic.seed
    cloud = generate_synthetic_stn(seed, config.scenario.synthetic.regions)
    cloud_path = out / "cloud.csv"
    save_cloud(cloud, cloud_path)
    sidecar = {
        "seed": seed,
        "regions": [region_to_dict(r) for r in config.scenario.synthetic.regions],
        "n_target": cloud.n_target,
        "n_constraint": cloud.n_constraint,
        "overlap_reassigned": cloud.overlap_reassigned,
    }
    with open(out / "cloud.provenance.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {cloud_path} ({cloud.n_target} target, {cloud.n_constraint} constraint)")
    return EXIT_OK


def cmd_downsample(args) -> int:
    config = load_run_config(args.config)
    if config.scenario.transfer_csv is not None:
        raise ConfigError("downsample does not apply to a transfer scenario")
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cloud = _scenario_cloud(config, args.seed)
    voxels = args.voxel or [0.95]
    for voxel in voxels:
        reduced = voxel_downsample(cloud, voxel)
        path = out / f"cloud_voxel_{voxel:g}.csv"
        save_cloud(reduced, path)
        print(
            f"wrote {path} ({reduced.n_target} target, {reduced.n_constraint} constraint)"
        )
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = load_run_config(args.config)
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    method = args.method
    thetas = args.theta if args.theta is not None else list(config.problem.thetas)
    for theta in thetas:
        if not 0.0 <= theta <= 1.0:
            raise ConfigError(f"theta values must lie in [0, 1], got {theta}")
    if method == MILP:
        thetas = [1.0]  # the MILP formulation has no relaxation parameter

    options = OptimizeOptions(
        time_limit_s=config.solver.time_limit_s, gap_tol=config.solver.gap_tol
    )
    labels = builtin_model(config.lead.model_id).segment_labels
    exit_codes = []
    for theta in thetas:
        problem = _scenario_problem(config, theta, args.seed)
        report = steering.optimize(problem, method=method, options=options)
        suffix = f"_theta{theta:g}" if method == LP else ""
        report_path = out / f"report_{method}{suffix}.json"
        with open(report_path, "w") as fh:
            json.dump(
                _report_to_dict(report, problem.cloud.n_target, problem.cloud.n_constraint),
                fh, indent=2, sort_keys=True,
            )
            fh.write("\n")
        _write_currents_csv(report, labels, out / f"currents_{method}{suffix}.csv")
        code = _status_exit_code(report.solver_stats.status)
        exit_codes.append(code)
        print(
            f"{method}{f' theta={theta:g}' if method == LP else ''}: "
            f"status={report.solver_stats.status} beta={report.beta:.4f} "
            f"total={report.distribution.total_mA:.3f} mA -> {report_path}"
        )
    if EXIT_INFEASIBLE in exit_codes:
        return EXIT_INFEASIBLE
    if EXIT_TIME_LIMIT in exit_codes:
        return EXIT_TIME_LIMIT
    return EXIT_OK


def _load_comparison_input(path: str) -> CohortMatrix:
    p = Path(path)
    if p.suffix == ".json":
        with open(p) as fh:
            data = json.load(fh)
        column = np.asarray(data["proportions"], dtype=float)
        return CohortMatrix(values=column[:, None], lead_ids=("lead",))
    return load_cohort_matrix(p)


def cmd_compare(args) -> int:
    if len(args.inputs) < 2:
        raise ConfigError("compare needs at least two cohort matrices or reports")
    matrices = [(Path(p).stem, _load_comparison_input(p)) for p in args.inputs]
    pairs = []
    for i in range(len(matrices)):
        for j in range(i + 1, len(matrices)):
            name_a, a = matrices[i]
            name_b, b = matrices[j]
            pairs.append({"a": name_a, "b": name_b, "frobenius": metrics.frobenius_diff(a, b)})
    out = Path(args.out) if args.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "comparison.json", "w") as fh:
        json.dump(pairs, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "comparison.csv", "w", newline="") as fh:
        fh.write("a,b,frobenius\n")
        for row in pairs:
            fh.write(f"{row['a']},{row['b']},{row['frobenius']:.9g}\n")
    for row in pairs:
        print(f"{row['a']} vs {row['b']}: {row['frobenius']:.6g}")
    return EXIT_OK


def _bench_point(payload) -> metrics.BenchRecord:
    cloud, lead, field_config, voxel, method, time_limit, params = payload
    return bench_sweep_point(cloud, lead, field_config, voxel, method, time_limit, params)


def cmd_bench(args) -> int:
    config = load_run_config(args.config)
    if config.scenario.transfer_csv is not None:
        raise ConfigError("bench needs a synthetic or cloud scenario (it re-filters the cloud)")
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cloud = _scenario_cloud(config, args.seed)
    lead = _lead_instance(config)
    voxels = args.voxel or list(metrics.DEFAULT_BENCH_VOXELS_MM)
    methods = args.methods.split(",") if args.methods else [LP, MILP]
    for m in methods:
        if m not in (LP, MILP):
            raise ConfigError(f"unknown method {m!r} in --methods")
    params = BenchProblemParams(
        e_th_t=config.problem.e_th_t, e_th_c=config.problem.e_th_c,
        i_max_contact_mA=config.problem.i_max_contact_mA,
        i_max_total_mA=config.problem.i_max_total_mA,
        theta=config.problem.thetas[-1] if config.problem.thetas else 1.0,
    )
    jobs = max(1, args.jobs)
    work = [
        (cloud, lead, config.field_model, voxel, method, config.solver.time_limit_s, params)
        for voxel in voxels
        for method in methods
    ]
    if jobs == 1:
        records = [_bench_point(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_bench_point, work))
    path = out / "benchmark.csv"
    write_benchmark_csv(records, path)
    for r in records:
        print(
            f"voxel={r.voxel_length_mm:g} {r.method}: n={r.n_t + r.n_c} "
            f"wall={r.wall_time_s:.3f}s status={r.status}"
        )
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dbsteer",
        description="Optimize current distribution across directional DBS lead contacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="run configuration JSON")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p = sub.add_parser("generate", help="write a synthetic labeled cloud and its provenance")
    add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("downsample", help="voxel-filter the scenario cloud")
    add_common(p)
    p.add_argument("--voxel", type=float, nargs="+", default=None, help="voxel lengths in mm")
    p.set_defaults(func=cmd_downsample)

    p = sub.add_parser("optimize", help="solve the steering problem and write reports")
    add_common(p)
    p.add_argument("--method", choices=[LP, MILP], required=True)
    p.add_argument("--theta", type=float, nargs="+", default=None,
                   help="LP relaxation values (defaults to the config sweep)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", help="pairwise Frobenius distances between cohort matrices")
    p.add_argument("inputs", nargs="+", help="cohort CSVs or report JSONs")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="runtime sweep over voxel sizes and methods")
    add_common(p)
    p.add_argument("--voxel", type=float, nargs="+", default=None, help="voxel lengths in mm")
    p.add_argument("--methods", default=None, help="comma-separated subset of lp,milp")
    p.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
