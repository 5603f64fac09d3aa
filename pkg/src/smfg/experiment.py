"""Experiment orchestration: per-seed runs, CSV emission, population sweeps,
and operator health checks.

Per-seed CSV columns:
    time_index, rounds_elapsed, max_exploitability, mean_exploitability,
    mean_dist_to_mfne, mean_sq_dist_to_mfne, mean_policy_deviation,
    exploit_method, exploit_std_error
The aggregate CSV carries the per-checkpoint mean and std over seeds of every
numeric column (std uses ddof=1, 0.0 for a single seed). Sweep summaries:
    N, tau, epsilon, final_max_exploit_mean, final_max_exploit_std,
    final_mean_dist_mean, final_mean_dist_std, seeds
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ._rng import STREAM_ESTIMATE, STREAM_EXPLOIT, derive_generator
from .config import (
    ConfigError,
    ExperimentSpec,
    build_operator,
    resolve_checkpoints,
    resolve_schedule,
)
from .dynamics import GameConfig, Schedule, run_trpa_bandit, run_trpa_full
from .equilibrium import RegularizedSolution, solve_mfne
from .metrics import exploitability_report
from .payoffs import PayoffOperator, estimate_lipschitz, estimate_monotonicity
from .simplex import sample_uniform_points

SEED_COLUMNS = [
    "time_index",
    "rounds_elapsed",
    "max_exploitability",
    "mean_exploitability",
    "mean_dist_to_mfne",
    "mean_sq_dist_to_mfne",
    "mean_policy_deviation",
    "exploit_method",
    "exploit_std_error",
]

_AGG_NUMERIC = [
    "max_exploitability",
    "mean_exploitability",
    "mean_dist_to_mfne",
    "mean_sq_dist_to_mfne",
    "mean_policy_deviation",
]

SUMMARY_COLUMNS = [
    "N",
    "tau",
    "epsilon",
    "final_max_exploit_mean",
    "final_max_exploit_std",
    "final_mean_dist_mean",
    "final_mean_dist_std",
    "seeds",
]


@dataclass(frozen=True)
class RunResult:
    out_dir: Path
    schedule: Schedule
    solution: RegularizedSolution
    seed_paths: dict[int, Path]
    aggregate_path: Path
    aggregate_rows: list[dict]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # shortest-roundtrip, even for numpy scalars
    return str(value)


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _write_pi_star(path: Path, solution: RegularizedSolution):
    k = solution.pi_star.K
    columns = [f"pi_{a}" for a in range(1, k + 1)] + ["tau", "gap", "iterations"]
    row = {f"pi_{a}": float(solution.pi_star.weights[a - 1]) for a in range(1, k + 1)}
    row.update(tau=solution.tau, gap=solution.gap, iterations=solution.iterations)
    _write_csv(path, columns, [row])


def _exploit_hook(spec: ExperimentSpec, op: PayoffOperator, seed: int):
    def hook(time_index: int, rounds_elapsed: int, policies: np.ndarray) -> dict:
        rng = derive_generator(seed, STREAM_EXPLOIT, time_index)
        report = exploitability_report(
            op, policies, method=spec.exploit_method,
            mc_samples=spec.mc_samples, rng=rng,
        )
        return {
            "max_exploitability": report.max,
            "mean_exploitability": float(report.per_agent.mean()),
            "exploit_method": report.method,
            "exploit_std_error": report.std_error,
        }

    return hook


def _seed_rows(spec: ExperimentSpec, op, schedule, checkpoints, pi_star, seed: int):
    config = GameConfig(
        N=spec.n_players, K=spec.k_actions, operator=op,
        sigma=spec.sigma, noise_kind=spec.noise_kind, master_seed=seed,
    )
    runner = run_trpa_full if spec.algorithm == "trpa-full" else run_trpa_bandit
    trajectory = runner(
        config, schedule, checkpoints,
        pi_star=pi_star,
        record_policies=spec.record_policies,
        checkpoint_hook=_exploit_hook(spec, op, seed),
    )
    rows = []
    for rec in trajectory.records:
        rows.append({
            "time_index": rec.time_index,
            "rounds_elapsed": rec.rounds_elapsed,
            "max_exploitability": rec.extra["max_exploitability"],
            "mean_exploitability": rec.extra["mean_exploitability"],
            "mean_dist_to_mfne": rec.mean_dist_to_mfne,
            "mean_sq_dist_to_mfne": rec.mean_sq_dist_to_mfne,
            "mean_policy_deviation": rec.mean_policy_deviation,
            "exploit_method": rec.extra["exploit_method"],
            "exploit_std_error": rec.extra["exploit_std_error"],
        })
    return rows


def _aggregate(rows_by_seed: list[list[dict]]) -> list[dict]:
    n_checkpoints = len(rows_by_seed[0])
    out = []
    for idx in range(n_checkpoints):
        per_seed = [rows[idx] for rows in rows_by_seed]
        agg = {
            "time_index": per_seed[0]["time_index"],
            "rounds_elapsed": per_seed[0]["rounds_elapsed"],
        }
        for col in _AGG_NUMERIC:
            vals = np.array([row[col] for row in per_seed], dtype=np.float64)
            agg[f"{col}_mean"] = float(vals.mean())
            agg[f"{col}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        ses = np.array([row["exploit_std_error"] for row in per_seed], dtype=np.float64)
        agg["exploit_method"] = per_seed[0]["exploit_method"]
        agg["exploit_std_error_mean"] = float(ses.mean())
        agg["seeds"] = len(per_seed)
        out.append(agg)
    return out


def _aggregate_columns() -> list[str]:
    cols = ["time_index", "rounds_elapsed"]
    for col in _AGG_NUMERIC:
        cols += [f"{col}_mean", f"{col}_std"]
    cols += ["exploit_method", "exploit_std_error_mean", "seeds"]
    return cols


def _plot_aggregate(path: Path, rows: list[dict]):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None
    rounds = [max(r["rounds_elapsed"], 1) for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(rounds, [r["max_exploitability_mean"] for r in rows], marker="o")
    axes[0].set_xscale("log")
    axes[0].set_xlabel("rounds")
    axes[0].set_ylabel("max exploitability")
    axes[1].plot(rounds, [r["mean_dist_to_mfne_mean"] for r in rows], marker="o")
    axes[1].set_xscale("log")
    axes[1].set_xlabel("rounds")
    axes[1].set_ylabel("mean distance to equilibrium")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def run_experiment(spec: ExperimentSpec) -> RunResult:
    """Run every seed of the spec, writing one CSV per seed, the seed
    aggregate, and the reference regularized equilibrium alongside."""
    op = build_operator(spec)
    schedule = resolve_schedule(spec, op)
    checkpoints = resolve_checkpoints(spec, schedule)
    out_dir = Path(spec.outputs)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-probe"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise ConfigError("outputs", f"cannot write to {out_dir}: {exc}") from None

    solution = solve_mfne(
        op, schedule.tau, tol=spec.solver_tol, max_iter=spec.solver_max_iter
    )
    _write_pi_star(out_dir / "pi_star.csv", solution)

    def one(seed: int):
        return _seed_rows(spec, op, schedule, checkpoints, solution.pi_star, seed)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            rows_by_seed = list(pool.map(one, spec.seeds))
    else:
        rows_by_seed = [one(seed) for seed in spec.seeds]

    seed_paths = {}
    for seed, rows in zip(spec.seeds, rows_by_seed):
        path = out_dir / f"seed_{seed}.csv"
        _write_csv(path, SEED_COLUMNS, rows)
        seed_paths[seed] = path
    agg_rows = _aggregate(rows_by_seed)
    agg_path = out_dir / "aggregate.csv"
    _write_csv(agg_path, _aggregate_columns(), agg_rows)
    if spec.plot:
        _plot_aggregate(out_dir / "aggregate.png", agg_rows)
    return RunResult(
        out_dir=out_dir,
        schedule=schedule,
        solution=solution,
        seed_paths=seed_paths,
        aggregate_path=agg_path,
        aggregate_rows=agg_rows,
    )


def sweep_population(spec: ExperimentSpec, populations: list[int]) -> Path:
    """Run the spec once per population size with auto hyperparameters and
    summarize the final checkpoint of each run."""
    if not populations:
        raise ConfigError("Ns", "need at least one population size")
    base_out = Path(spec.outputs)
    rows = []
    for n in populations:
        operator = dict(spec.operator)
        if operator.get("N") == spec.n_players:
            operator["N"] = n
        sub = replace(
            spec,
            n_players=n,
            operator=operator,
            schedule_auto=True,
            outputs=str(base_out / f"N_{n}"),
        )
        result = run_experiment(sub)
        final = result.aggregate_rows[-1]
        rows.append({
            "N": n,
            "tau": result.schedule.tau,
            "epsilon": result.schedule.epsilon,
            "final_max_exploit_mean": final["max_exploitability_mean"],
            "final_max_exploit_std": final["max_exploitability_std"],
            "final_mean_dist_mean": final["mean_dist_to_mfne_mean"],
            "final_mean_dist_std": final["mean_dist_to_mfne_std"],
            "seeds": len(spec.seeds),
        })
    summary_path = base_out / "summary.csv"
    _write_csv(summary_path, SUMMARY_COLUMNS, rows)
    return summary_path


@dataclass(frozen=True)
class OperatorCheck:
    kind: str
    K: int
    lipschitz_estimate: float
    monotonicity_estimate: float
    declared_lipschitz: Optional[float]
    declared_monotonicity: Optional[float]
    declared_range: tuple[float, float]
    range_violations: int
    n_samples: int
    passed: bool
    notes: list[str]


def check_operator(
    op: PayoffOperator, n_samples: int = 10_000, rng: Optional[np.random.Generator] = None
) -> OperatorCheck:
    """Empirically verify an operator against its declared metadata: sampled
    Lipschitz and monotonicity constants plus declared-range violations."""
    if rng is None:
        rng = derive_generator(0, STREAM_ESTIMATE)
    lip_hat = estimate_lipschitz(op, n_samples, rng)
    mono_hat = estimate_monotonicity(op, n_samples, rng)
    lo, hi = op.declared_range
    points = sample_uniform_points(op.K, n_samples, rng)
    values = op.eval_many(points)
    violations = int(np.sum((values < lo - 1e-9) | (values > hi + 1e-9)))
    notes = []
    if violations:
        notes.append(f"{violations} sampled payoffs escape the declared range [{lo}, {hi}]")
    if mono_hat < -1e-9:
        notes.append(f"monotonicity violated on a sampled pair (estimate {mono_hat:.4g} < 0)")
    if op.monotonicity is not None and mono_hat < 0.9 * op.monotonicity - 1e-9:
        notes.append(
            f"sampled monotonicity {mono_hat:.4g} below declared {op.monotonicity:.4g}"
        )
    if op.lipschitz is not None and math.isfinite(op.lipschitz) and (
        lip_hat > op.lipschitz * (1.0 + 1e-6) + 1e-9
    ):
        notes.append(f"sampled Lipschitz {lip_hat:.4g} above declared {op.lipschitz:.4g}")
    return OperatorCheck(
        kind=op.kind,
        K=op.K,
        lipschitz_estimate=lip_hat,
        monotonicity_estimate=mono_hat,
        declared_lipschitz=op.lipschitz,
        declared_monotonicity=op.monotonicity,
        declared_range=op.declared_range,
        range_violations=violations,
        n_samples=n_samples,
        passed=not notes,
        notes=notes,
    )
