"""Command-line interface.

Subcommands:
    run CONFIG            simulate every seed and write per-seed/aggregate CSVs
    sweep CONFIG --Ns=... repeat a run across population sizes, summarize
    solve-mfne CONFIG     print the regularized equilibrium as CSV on stdout
    check-operator CONFIG empirical Lipschitz/monotonicity/range report

Any config key can be overridden with --key=value. Exit codes: 0 success,
2 configuration error, 3 non-convergence in solve-mfne.
"""

from __future__ import annotations

import argparse
import sys

from ._rng import STREAM_ESTIMATE, derive_generator
from .config import (
    ConfigError,
    build_operator,
    parse_config_file,
    spec_from_values,
)
from .dynamics import optimal_hyperparams
from .equilibrium import NonConvergenceError, solve_mfne
from .experiment import check_operator, run_experiment, sweep_population

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smfg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "solve-mfne", "check-operator"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to a dotted-key config file")
        p.add_argument("--seed", help="comma-separated master seeds (overrides 'seeds')")
        p.add_argument("--out", help="output directory (overrides 'outputs')")
        p.add_argument("--record-policies", action="store_true",
                       help="record full policy snapshots at checkpoints")
        p.add_argument("--workers", type=int, help="seeds run in parallel")
        p.add_argument("--plot", action="store_true", help="emit aggregate curve images")
        if name == "sweep":
            p.add_argument("--Ns", required=True,
                           help="comma-separated population sizes to sweep")
    return parser


def _apply_overrides(values: dict, args, leftovers) -> dict:
    for token in leftovers:
        if not token.startswith("--") or "=" not in token:
            raise ConfigError(token, "overrides must look like --key=value")
        key, value = token[2:].split("=", 1)
        values[key] = value
    if args.seed is not None:
        values["seeds"] = args.seed
    if args.out is not None:
        values["outputs"] = args.out
    if args.record_policies:
        values["record_policies"] = "true"
    if args.workers is not None:
        values["workers"] = str(args.workers)
    if args.plot:
        values["plot"] = "true"
    return values


def _resolved_tau(spec, op) -> float:
    if spec.tau is not None:
        return spec.tau
    if spec.schedule_auto:
        strongly = (op.monotonicity or 0.0) > 0.0
        return optimal_hyperparams(spec.n_players, strongly)[0]
    raise ConfigError("schedule.tau", "set schedule.tau or schedule.auto = true")


def _cmd_run(spec) -> int:
    result = run_experiment(spec)
    print(f"wrote {len(result.seed_paths)} seed file(s) and {result.aggregate_path}")
    return EXIT_OK


def _cmd_sweep(spec, ns_raw: str) -> int:
    try:
        populations = [int(tok) for tok in ns_raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError("Ns", f"cannot parse population list {ns_raw!r}") from None
    path = sweep_population(spec, populations)
    print(f"wrote {path}")
    return EXIT_OK


def _cmd_solve_mfne(spec) -> int:
    op = build_operator(spec)
    tau = _resolved_tau(spec, op)
    solution = solve_mfne(op, tau, tol=spec.solver_tol, max_iter=spec.solver_max_iter)
    k = solution.pi_star.K
    header = [f"pi_{a}" for a in range(1, k + 1)] + ["tau", "gap", "iterations"]
    row = [repr(float(w)) for w in solution.pi_star.weights]
    row += [repr(solution.tau), repr(solution.gap), str(solution.iterations)]
    print(",".join(header))
    print(",".join(row))
    return EXIT_OK


def _cmd_check_operator(spec) -> int:
    op = build_operator(spec)
    rng = derive_generator(spec.operator.get("seed", 0), STREAM_ESTIMATE)
    report = check_operator(op, rng=rng)
    print(f"operator: kind={report.kind} K={report.K}")
    print(f"lipschitz: estimate={report.lipschitz_estimate!r} "
          f"declared={report.declared_lipschitz!r}")
    print(f"monotonicity: estimate={report.monotonicity_estimate!r} "
          f"declared={report.declared_monotonicity!r}")
    print(f"declared_range: {report.declared_range} "
          f"violations={report.range_violations}/{report.n_samples}")
    for note in report.notes:
        print(f"note: {note}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args, leftovers = parser.parse_known_args(argv)
    try:
        values = parse_config_file(args.config)
        values = _apply_overrides(values, args, leftovers)
        relaxed = args.command in ("solve-mfne", "check-operator")
        spec = spec_from_values(values, relaxed=relaxed)
        if args.command == "run":
            return _cmd_run(spec)
        if args.command == "sweep":
            return _cmd_sweep(spec, args.Ns)
        if args.command == "solve-mfne":
            return _cmd_solve_mfne(spec)
        return _cmd_check_operator(spec)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
