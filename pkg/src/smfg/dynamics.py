"""N-agent repeated-play engine: noise generation, round execution, and the
two independent-learning algorithms (full feedback and epoch-based bandit
feedback with probabilistic exploration).

Per-agent state lives columnwise in (N, K) arrays so rounds vectorize across
agents; agent i is row i everywhere. All randomness in a run comes from one
counter-based stream keyed by the master seed, drawn in a fixed per-round
order, so results are reproducible bit for bit regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels
from ._rng import STREAM_ROUNDS, derive_generator
from .payoffs import PayoffOperator
from .simplex import EmpiricalMeasure, SimplexPoint

NOISE_KINDS = ("gaussian", "uniform", "none")


@dataclass(frozen=True)
class GameConfig:
    """A playable game: population size, action count, payoff operator, and
    the reward-noise model."""

    N: int
    K: int
    operator: PayoffOperator
    sigma: float = 0.0
    noise_kind: str = "gaussian"
    master_seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need N >= 2 players")
        if self.K < 2:
            raise ValueError("need K >= 2 actions")
        if self.operator.K != self.K:
            raise ValueError(
                f"operator has K={self.operator.K} but config says K={self.K}"
            )
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")


@dataclass(frozen=True)
class Schedule:
    """Regularization tau, exploration epsilon (bandit only), and the horizon:
    rounds for full feedback, epochs for bandit feedback.

    Derived quantities: learning rate eta_t = (1/tau)/(t+2), strictly
    decreasing; epoch length T_h = ceil(ln(h+2)/epsilon), non-decreasing.
    """

    tau: float
    horizon: int
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.tau <= 0.0:
            raise ValueError("tau must be > 0")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")

    def learning_rate(self, t: int) -> float:
        return learning_rate(t, self.tau)

    def epoch_length(self, h: int) -> int:
        if self.epsilon is None:
            raise ValueError("epoch lengths need an exploration rate epsilon")
        return epoch_length(h, self.epsilon)


@dataclass(frozen=True)
class CheckpointRecord:
    """Aggregate state of the population at one logged time index."""

    time_index: int
    rounds_elapsed: int
    mean_policy: np.ndarray
    mean_policy_deviation: float
    mean_dist_to_mfne: Optional[float] = None
    mean_sq_dist_to_mfne: Optional[float] = None
    policies: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Trajectory:
    """Checkpoint records plus the final policy profile of all N agents."""

    records: list[CheckpointRecord]
    final_policies: np.ndarray
    algorithm: str

    def final_policy_points(self) -> list[SimplexPoint]:
        return [SimplexPoint(row) for row in self.final_policies]


def learning_rate(t: int, tau: float) -> float:
    """Decaying step size (1/tau)/(t+2)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if tau <= 0.0:
        raise ValueError("tau must be > 0")
    return (1.0 / tau) / (t + 2)


def epoch_length(h: int, epsilon: float) -> int:
    """Exploration-epoch length ceil(ln(h+2)/epsilon), at least 1.

    Natural log: the no-exploration probability per epoch must decay like
    1/(h+2), which forces exp(-epsilon*T_h) <= (h+2)^-1.
    """
    if h < 0:
        raise ValueError("h must be >= 0")
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return max(math.ceil(math.log(h + 2) / epsilon), 1)


def optimal_hyperparams(n: int, strongly_monotone: bool) -> tuple[float, float]:
    """The (tau, epsilon) pair minimizing the asymptotic exploitability bias
    for N players: (N^-1/4, N^-1/2), or (N^-1/3, N^-1/2) under strong
    monotonicity."""
    if n < 2:
        raise ValueError("need N >= 2")
    tau = n ** (-1.0 / 3.0) if strongly_monotone else n ** (-0.25)
    return tau, n ** (-0.5)


def _draw_noise(rng: np.random.Generator, config: GameConfig, shape) -> Optional[np.ndarray]:
    if config.sigma == 0.0 or config.noise_kind == "none":
        return None
    if config.noise_kind == "gaussian":
        return config.sigma * rng.standard_normal(shape)
    # zero-mean uniform with standard deviation sigma
    half_width = math.sqrt(3.0) * config.sigma
    return (2.0 * rng.random(shape) - 1.0) * half_width


def _policies_matrix(policies, k: int) -> np.ndarray:
    if isinstance(policies, np.ndarray):
        mat = np.array(policies, dtype=np.float64)
    else:
        mat = np.stack([np.asarray(p, dtype=np.float64) for p in policies])
    if mat.ndim != 2 or mat.shape[1] != k:
        raise ValueError(f"expected an (N, {k}) policy profile")
    return mat


def play_round(policies, config: GameConfig, rng: np.random.Generator):
    """One full-feedback round: sample actions, form the occupancy measure,
    and hand every agent its noisy payoff vector.

    Returns (actions, mu_hat, rewards): 1-indexed actions (N,), the
    EmpiricalMeasure, and per-agent reward rows (N, K). Bandit consumers read
    only rewards[i, actions[i]-1].
    """
    mat = _policies_matrix(policies, config.K)
    if mat.shape[0] != config.N:
        raise ValueError(f"expected {config.N} policies, got {mat.shape[0]}")
    uniforms = rng.random(config.N)
    noise = _draw_noise(rng, config, (config.N, config.K))
    actions0 = _kernels.sample_from_rows(mat, uniforms)
    counts = np.bincount(actions0, minlength=config.K)
    mu_hat = counts / config.N
    base = config.operator.eval_many(mu_hat[None, :])[0]
    if noise is None:
        rewards = np.broadcast_to(base, (config.N, config.K)).copy()
    else:
        rewards = base + noise
    return actions0 + 1, EmpiricalMeasure(counts), rewards


def importance_estimate(r: float, action: int, k: int) -> np.ndarray:
    """Payoff-vector estimate from a single uniform exploration of 1-indexed
    ``action``: K*r at that coordinate, 0 elsewhere."""
    if not 1 <= action <= k:
        raise ValueError(f"action {action} outside 1..{k}")
    out = np.zeros(k)
    out[action - 1] = k * r
    return out


def _checkpoint_set(checkpoints: Sequence[int], horizon: int) -> set[int]:
    cps = sorted(set(int(c) for c in checkpoints))
    if cps and (cps[0] < 0 or cps[-1] > horizon):
        raise ValueError(f"checkpoints must lie within [0, {horizon}]")
    return set(cps)


def _record(
    time_index: int,
    rounds_elapsed: int,
    policies: np.ndarray,
    pi_star,
    record_policies: bool,
    hook,
) -> CheckpointRecord:
    mean_policy = policies.mean(axis=0)
    devs = policies - mean_policy
    mean_dev = float(np.einsum("ij,ij->i", devs, devs).mean())
    mean_dist = mean_sq = None
    if pi_star is not None:
        diff = policies - np.asarray(pi_star, dtype=np.float64)
        sq = np.einsum("ij,ij->i", diff, diff)
        mean_dist = float(np.sqrt(sq).mean())
        mean_sq = float(sq.mean())
    extra = dict(hook(time_index, rounds_elapsed, policies)) if hook is not None else {}
    return CheckpointRecord(
        time_index=time_index,
        rounds_elapsed=rounds_elapsed,
        mean_policy=mean_policy,
        mean_policy_deviation=mean_dev,
        mean_dist_to_mfne=mean_dist,
        mean_sq_dist_to_mfne=mean_sq,
        policies=policies.copy() if record_policies else None,
        extra=extra,
    )


def run_trpa_full(
    config: GameConfig,
    schedule: Schedule,
    checkpoints: Sequence[int],
    pi_star=None,
    record_policies: bool = False,
    checkpoint_hook: Optional[Callable[[int, int, np.ndarray], dict]] = None,
) -> Trajectory:
    """Independent learning under full feedback.

    All agents start uniform; each round every agent applies the regularized
    projected-ascent step to its own noisy payoff vector with
    eta_t = (1/tau)/(t+2). Checkpoint t records the state after t rounds.
    """
    n, k = config.N, config.K
    horizon = schedule.horizon
    cps = _checkpoint_set(checkpoints, horizon)
    rng = derive_generator(config.master_seed, STREAM_ROUNDS)
    policies = np.full((n, k), 1.0 / k)
    records = []
    if 0 in cps:
        records.append(_record(0, 0, policies, pi_star, record_policies, checkpoint_hook))
    op = config.operator
    for t in range(horizon):
        uniforms = rng.random(n)
        noise = _draw_noise(rng, config, (n, k))
        actions = _kernels.sample_from_rows(policies, uniforms)
        counts = np.bincount(actions, minlength=k)
        base = op.eval_many((counts / n)[None, :])[0]
        if noise is None:
            rewards = np.broadcast_to(base, (n, k)).copy()
        else:
            rewards = base + noise
        policies = _kernels.trpa_update_rows(
            policies, rewards, schedule.learning_rate(t), schedule.tau
        )
        if (t + 1) in cps:
            records.append(
                _record(t + 1, t + 1, policies, pi_star, record_policies, checkpoint_hook)
            )
    return Trajectory(records=records, final_policies=policies, algorithm="trpa-full")


def run_exploration_epoch(
    policies: np.ndarray,
    config: GameConfig,
    epsilon: float,
    epoch_len: int,
    rng: np.random.Generator,
):
    """Play one bandit epoch with frozen policies.

    Each round every agent independently explores with probability epsilon
    (playing a uniform action and overwriting its payoff estimate with the
    importance-weighted observation — the last exploration wins) or plays its
    current policy. Returns (estimates (N, K), explored (N,)); agents that
    never explored keep a zero estimate.
    """
    n, k = config.N, config.K
    op = config.operator
    estimates = np.zeros((n, k))
    explored = np.zeros(n, dtype=bool)
    for _ in range(epoch_len):
        explore_uniforms = rng.random(n)
        action_uniforms = rng.random(n)
        noise = _draw_noise(rng, config, n)
        explore = explore_uniforms < epsilon
        a_policy = _kernels.sample_from_rows(policies, action_uniforms)
        a_uniform = _kernels.uniform_actions(action_uniforms, k)
        actions = np.where(explore, a_uniform, a_policy)
        counts = np.bincount(actions, minlength=k)
        base = op.eval_many((counts / n)[None, :])[0]
        observed = base[actions] if noise is None else base[actions] + noise
        idx = np.flatnonzero(explore)
        if idx.size:
            estimates[idx, :] = 0.0
            estimates[idx, actions[idx]] = k * observed[idx]
            explored[idx] = True
    return estimates, explored


def run_trpa_bandit(
    config: GameConfig,
    schedule: Schedule,
    checkpoints: Sequence[int],
    pi_star=None,
    record_policies: bool = False,
    checkpoint_hook: Optional[Callable[[int, int, np.ndarray], dict]] = None,
) -> Trajectory:
    """Independent learning under bandit feedback.

    Policies are frozen within each epoch h of T_h = ceil(ln(h+2)/epsilon)
    rounds; after the epoch every agent steps on its importance-weighted
    estimate (zero if it never explored) with eta_h = (1/tau)/(h+2).
    Checkpoint h records the state after h epoch updates; the policy of
    record for an epoch is the frozen policy, regardless of exploration.
    """
    if schedule.epsilon is None:
        raise ValueError("bandit schedule needs an exploration rate epsilon")
    n, k = config.N, config.K
    horizon = schedule.horizon
    cps = _checkpoint_set(checkpoints, horizon)
    rng = derive_generator(config.master_seed, STREAM_ROUNDS)
    policies = np.full((n, k), 1.0 / k)
    records = []
    rounds_elapsed = 0
    if 0 in cps:
        records.append(_record(0, 0, policies, pi_star, record_policies, checkpoint_hook))
    for h in range(horizon):
        t_h = schedule.epoch_length(h)
        estimates, _ = run_exploration_epoch(policies, config, schedule.epsilon, t_h, rng)
        rounds_elapsed += t_h
        policies = _kernels.trpa_update_rows(
            policies, estimates, schedule.learning_rate(h), schedule.tau
        )
        if (h + 1) in cps:
            records.append(
                _record(h + 1, rounds_elapsed, policies, pi_star, record_policies, checkpoint_hook)
            )
    return Trajectory(records=records, final_policies=policies, algorithm="trpa-bandit")
