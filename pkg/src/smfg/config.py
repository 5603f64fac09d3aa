"""Experiment configuration: a flat dotted-key text format plus CLI overrides.

Config files hold one ``key = value`` assignment per line (``#`` comments);
the same dotted keys can be overridden on the command line as ``--key=value``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ._rng import STREAM_OPERATOR, derive_generator
from .dynamics import Schedule, epoch_length, optimal_hyperparams
from .payoffs import (
    PayoffOperator,
    load_curve_table_csv,
    make_beach_bar,
    make_collision,
    make_constant,
    make_curve_table,
    make_kl,
    make_linear,
)
from .simplex import SimplexPoint

OPERATOR_KINDS = ("linear", "kl", "beach-bar", "collision", "curve-table", "constant")
ALGORITHMS = ("trpa-full", "trpa-bandit")


class ConfigError(ValueError):
    """A bad or missing configuration field; carries the field name."""

    def __init__(self, fieldname: str, message: str):
        super().__init__(f"{fieldname}: {message}")
        self.field = fieldname


def parse_config_file(path) -> dict[str, str]:
    """Read ``key = value`` lines into a flat dict of raw strings."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}", f"expected 'key = value', got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _get(values, key, cast, default=None, required=False):
    if key not in values:
        if required:
            raise ConfigError(key, "required field is missing")
        return default
    try:
        return cast(values[key])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot parse {values[key]!r}: {exc}") from None


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


@dataclass
class ExperimentSpec:
    """Everything needed to run one experiment: the game, the algorithm, the
    schedule (or 'auto' hyperparameters), seeds, checkpoints, and outputs."""

    n_players: int
    k_actions: int
    sigma: float
    noise_kind: str
    operator: dict
    algorithm: str
    schedule_auto: bool
    tau: Optional[float]
    epsilon: Optional[float]
    horizon: Optional[int]
    total_rounds: Optional[int]
    seeds: list[int]
    checkpoints: Optional[list[int]]  # None means the geometric default grid
    outputs: str
    record_policies: bool = False
    exploit_method: str = "monte-carlo"
    mc_samples: int = 2000
    solver_tol: float = 1e-10
    solver_max_iter: int = 200_000
    workers: int = 1
    plot: bool = False


def spec_from_values(values: dict[str, str], relaxed: bool = False) -> ExperimentSpec:
    """Validate a flat key/value mapping into an ExperimentSpec.

    ``relaxed`` drops the algorithm/horizon/tau requirements for subcommands
    that only need the game and operator (solve-mfne, check-operator).
    """
    known = {
        "game.N", "game.K", "game.sigma", "game.noise_kind",
        "operator.kind", "operator.seed", "operator.normalize", "operator.alpha",
        "operator.gamma", "operator.mu_ref", "operator.alphas", "operator.N",
        "operator.csv", "operator.values",
        "algorithm",
        "schedule.auto", "schedule.tau", "schedule.epsilon", "schedule.horizon",
        "schedule.total_rounds",
        "seeds", "checkpoints", "outputs", "record_policies", "workers", "plot",
        "metrics.exploit_method", "metrics.mc_samples",
        "solver.tol", "solver.max_iter",
    }
    for key in values:
        if key not in known:
            raise ConfigError(key, "unknown configuration key")

    n = _get(values, "game.N", int, required=True)
    k = _get(values, "game.K", int, required=True)
    if n < 2:
        raise ConfigError("game.N", "need at least 2 players")
    if k < 2:
        raise ConfigError("game.K", "need at least 2 actions")
    sigma = _get(values, "game.sigma", float, default=0.0)
    noise_kind = _get(values, "game.noise_kind", str, default="gaussian")
    if noise_kind not in ("gaussian", "uniform", "none"):
        raise ConfigError("game.noise_kind", f"unknown noise kind {noise_kind!r}")

    op_kind = _get(values, "operator.kind", str, required=True)
    if op_kind not in OPERATOR_KINDS:
        raise ConfigError("operator.kind", f"must be one of {OPERATOR_KINDS}")
    operator = {"kind": op_kind}
    operator["seed"] = _get(values, "operator.seed", int, default=0)
    operator["normalize"] = _get(values, "operator.normalize", _bool, default=True)
    operator["alpha"] = _get(values, "operator.alpha", float, default=1.0)
    operator["gamma"] = _get(values, "operator.gamma", float, default=0.1)
    operator["mu_ref"] = _get(values, "operator.mu_ref", _float_list, default=None)
    operator["alphas"] = _get(values, "operator.alphas", _float_list, default=None)
    operator["N"] = _get(values, "operator.N", int, default=n)
    operator["csv"] = _get(values, "operator.csv", str, default=None)
    operator["values"] = _get(values, "operator.values", _float_list, default=None)

    algorithm = _get(values, "algorithm", str, required=not relaxed, default="trpa-full")
    if algorithm not in ALGORITHMS:
        raise ConfigError("algorithm", f"must be one of {ALGORITHMS}")

    auto = _get(values, "schedule.auto", _bool, default=False)
    tau = _get(values, "schedule.tau", float, default=None)
    epsilon = _get(values, "schedule.epsilon", float, default=None)
    horizon = _get(values, "schedule.horizon", int, default=None)
    total_rounds = _get(values, "schedule.total_rounds", int, default=None)
    if not auto and not relaxed:
        if tau is None:
            raise ConfigError("schedule.tau", "required unless schedule.auto = true")
        if algorithm == "trpa-bandit" and epsilon is None:
            raise ConfigError("schedule.epsilon", "required for trpa-bandit unless auto")
    if horizon is None and total_rounds is None and not relaxed:
        raise ConfigError("schedule.horizon", "set schedule.horizon or schedule.total_rounds")

    seeds = _get(values, "seeds", _int_list, default=[0])
    if not seeds:
        raise ConfigError("seeds", "need at least one seed")

    checkpoints_raw = values.get("checkpoints", "geometric").strip()
    if checkpoints_raw == "geometric":
        checkpoints = None
    else:
        checkpoints = _get({"checkpoints": checkpoints_raw}, "checkpoints", _int_list)

    exploit_method = _get(values, "metrics.exploit_method", str, default="monte-carlo")
    if exploit_method not in ("monte-carlo", "exact-enumeration"):
        raise ConfigError("metrics.exploit_method", f"unknown method {exploit_method!r}")

    return ExperimentSpec(
        n_players=n,
        k_actions=k,
        sigma=sigma,
        noise_kind=noise_kind,
        operator=operator,
        algorithm=algorithm,
        schedule_auto=auto,
        tau=tau,
        epsilon=epsilon,
        horizon=horizon,
        total_rounds=total_rounds,
        seeds=seeds,
        checkpoints=checkpoints,
        outputs=_get(values, "outputs", str, default="out"),
        record_policies=_get(values, "record_policies", _bool, default=False),
        exploit_method=exploit_method,
        mc_samples=_get(values, "metrics.mc_samples", int, default=2000),
        solver_tol=_get(values, "solver.tol", float, default=1e-10),
        solver_max_iter=_get(values, "solver.max_iter", int, default=200_000),
        workers=_get(values, "workers", int, default=1),
        plot=_get(values, "plot", _bool, default=False),
    )


def build_operator(spec: ExperimentSpec) -> PayoffOperator:
    """Construct the payoff operator the spec describes."""
    op = spec.operator
    kind = op["kind"]
    k = spec.k_actions
    if kind == "linear":
        rng = derive_generator(op["seed"], STREAM_OPERATOR)
        return make_linear(k, rng, normalize=op["normalize"])
    if kind == "kl":
        mu_ref = op["mu_ref"]
        point = SimplexPoint(mu_ref) if mu_ref is not None else SimplexPoint.uniform(k)
        if point.K != k:
            raise ConfigError("operator.mu_ref", f"needs {k} entries")
        return make_kl(point, op["gamma"])
    if kind == "beach-bar":
        return make_beach_bar(k, op["alpha"])
    if kind == "collision":
        alphas = op["alphas"] if op["alphas"] is not None else [1.0] * k
        if len(alphas) != k:
            raise ConfigError("operator.alphas", f"needs {k} entries")
        return make_collision(alphas, op["N"])
    if kind == "curve-table":
        if not op["csv"]:
            raise ConfigError("operator.csv", "curve-table operators need a CSV path")
        table = make_curve_table(load_curve_table_csv(op["csv"]))
        if table.K != k:
            raise ConfigError("operator.csv", f"CSV defines K={table.K}, config says K={k}")
        return table
    if kind == "constant":
        vals = op["values"] if op["values"] is not None else [0.5] * k
        if len(vals) != k:
            raise ConfigError("operator.values", f"needs {k} entries")
        return make_constant(vals)
    raise ConfigError("operator.kind", f"unknown kind {kind!r}")


def resolve_schedule(spec: ExperimentSpec, op: PayoffOperator) -> Schedule:
    """Turn spec fields into a concrete Schedule; 'auto' uses the closed-form
    optimal hyperparameters, with the strongly-monotone variant whenever the
    operator's metadata certifies lambda > 0."""
    if spec.schedule_auto:
        strongly = (op.monotonicity or 0.0) > 0.0
        tau, epsilon = optimal_hyperparams(spec.n_players, strongly)
    else:
        tau, epsilon = spec.tau, spec.epsilon
    if spec.algorithm == "trpa-full":
        horizon = spec.horizon if spec.horizon is not None else spec.total_rounds
        return Schedule(tau=tau, horizon=horizon, epsilon=epsilon)
    if epsilon is None:
        raise ConfigError("schedule.epsilon", "required for trpa-bandit")
    if spec.horizon is not None:
        return Schedule(tau=tau, horizon=spec.horizon, epsilon=epsilon)
    # derive the epoch count from a total-round budget
    budget = spec.total_rounds
    if budget <= 0:
        return Schedule(tau=tau, horizon=0, epsilon=epsilon)
    spent = 0
    epochs = 0
    while True:
        t_h = epoch_length(epochs, epsilon)
        if spent + t_h > budget and epochs > 0:
            break
        spent += t_h
        epochs += 1
        if spent >= budget:
            break
    return Schedule(tau=tau, horizon=epochs, epsilon=epsilon)


def geometric_checkpoints(horizon: int) -> list[int]:
    """{0, 1, 2, 4, 8, ...} up to and including the horizon."""
    points = {0, horizon}
    step = 1
    while step < horizon:
        points.add(step)
        step *= 2
    return sorted(points)


def resolve_checkpoints(spec: ExperimentSpec, schedule: Schedule) -> list[int]:
    if spec.checkpoints is None:
        return geometric_checkpoints(schedule.horizon)
    cps = sorted(set(spec.checkpoints))
    if cps and (cps[0] < 0 or cps[-1] > schedule.horizon):
        raise ConfigError("checkpoints", f"must lie within [0, {schedule.horizon}]")
    return cps
