"""Expected payoffs, exploitability (exact enumeration and Monte Carlo), and
population-level convergence diagnostics.

Agent indices are 0-based rows of the policy profile. Exploitability always
maximizes over pure deviations: the expected payoff is linear in the
deviating agent's own policy, so the best deviation sits at a vertex.

Monte-Carlo estimates use common random numbers: every deviation arm and the
undeviated term are evaluated on the same sampled opponent profiles, so the
differences (the quantity of interest) have low variance and the estimated
exploitability is non-negative by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .payoffs import PayoffOperator
from .simplex import SimplexPoint

EXACT = "exact-enumeration"
MONTE_CARLO = "monte-carlo"

_PRODUCT_BUDGET = 10 ** 6         # max K^(N-1) profiles for heterogeneous enumeration
_COMPOSITION_BUDGET = 5 * 10 ** 6  # max compositions for the symmetric path
_CHUNK = 1 << 16


class EnumerationBudgetError(RuntimeError):
    """Exact enumeration was requested beyond the feasible budget."""


@dataclass(frozen=True)
class ExploitabilityReport:
    """Per-agent exploitability estimates for one policy profile."""

    per_agent: np.ndarray
    max: float
    method: str
    mc_samples: Optional[int]
    std_error: float


@dataclass(frozen=True)
class PopulationMetrics:
    mean_policy: SimplexPoint
    per_agent_deviation: np.ndarray
    mean_deviation: float
    mean_dist_to_mfne: Optional[float]
    mean_sq_dist_to_mfne: Optional[float]


def _profile_matrix(policies) -> np.ndarray:
    if isinstance(policies, np.ndarray):
        mat = np.array(policies, dtype=np.float64)
    else:
        mat = np.stack([np.asarray(p, dtype=np.float64) for p in policies])
    if mat.ndim != 2:
        raise ValueError("expected an (N, K) policy profile")
    return mat


def _compositions(total: int, k: int) -> np.ndarray:
    """All count vectors of k non-negative integers summing to total."""
    if k == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, k - 1)
        block = np.empty((rest.shape[0], k), dtype=np.int64)
        block[:, 0] = first
        block[:, 1:] = rest
        blocks.append(block)
    return np.concatenate(blocks, axis=0)


def _multinomial_distribution(shared: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Count distribution of m i.i.d. draws from one policy."""
    k = shared.size
    n_comps = math.comb(m + k - 1, k - 1)
    if n_comps > _COMPOSITION_BUDGET:
        raise EnumerationBudgetError(
            f"{n_comps} compositions exceed the enumeration budget {_COMPOSITION_BUDGET}"
        )
    counts = _compositions(m, k)
    logp = np.full(k, -np.inf)
    pos = shared > 0.0
    logp[pos] = np.log(shared[pos])
    with np.errstate(invalid="ignore"):
        terms = np.where(counts > 0, counts * logp, 0.0)
    logw = gammaln(m + 1) - gammaln(counts + 1).sum(axis=1) + terms.sum(axis=1)
    probs = np.exp(logw)
    keep = probs > 0.0
    return counts[keep], probs[keep]


def _product_distribution(opponents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Count distribution of independent draws, one per opponent row."""
    m, k = opponents.shape
    if k ** m > _PRODUCT_BUDGET:
        raise EnumerationBudgetError(
            f"K^(N-1) = {k ** m} profiles exceed the enumeration budget {_PRODUCT_BUDGET}"
        )
    # fold opponents in one at a time, merging equal count vectors
    table: dict[tuple, float] = {tuple([0] * k): 1.0}
    for j in range(m):
        nxt: dict[tuple, float] = {}
        row = opponents[j]
        for counts, prob in table.items():
            for a in range(k):
                pa = row[a]
                if pa <= 0.0:
                    continue
                key = counts[:a] + (counts[a] + 1,) + counts[a + 1:]
                nxt[key] = nxt.get(key, 0.0) + prob * pa
        table = nxt
    counts = np.array(list(table.keys()), dtype=np.int64)
    probs = np.array(list(table.values()))
    return counts, probs


def _opponent_distribution(opponents: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m, k = opponents.shape
    if m == 0:
        return np.zeros((1, k), dtype=np.int64), np.ones(1)
    if np.all(opponents == opponents[0]):
        return _multinomial_distribution(opponents[0], m)
    return _product_distribution(opponents)


def _exact_arm_values(
    op: PayoffOperator, counts: np.ndarray, probs: np.ndarray, n_players: int
) -> np.ndarray:
    """D[a] = sum_c P(c) * F((c + e_a)/N)(a) over the opponent-count distribution."""
    k = counts.shape[1]
    eye = np.eye(k, dtype=np.int64)
    arms = np.zeros(k)
    for start in range(0, counts.shape[0], _CHUNK):
        c = counts[start:start + _CHUNK]
        p = probs[start:start + _CHUNK]
        for a in range(k):
            measures = (c + eye[a]) / n_players
            arms[a] += p @ op.eval_many(measures)[:, a]
    return arms


def _mc_arm_samples(
    op: PayoffOperator,
    opponents: np.ndarray,
    n_players: int,
    mc_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """G[s, a] = F((c_s + e_a)/N)(a) on mc_samples opponent draws (CRN)."""
    m, k = opponents.shape
    css = np.cumsum(opponents, axis=1)
    counts = np.zeros((mc_samples, k), dtype=np.int64)
    if m > 0:
        u = rng.random((mc_samples, m))
        acts = (u[:, :, None] >= css[None, :, :]).sum(axis=2)
        np.minimum(acts, k - 1, out=acts)
        np.add.at(counts, (np.arange(mc_samples)[:, None], acts), 1)
    eye = np.eye(k, dtype=np.int64)
    g = np.empty((mc_samples, k))
    for a in range(k):
        g[:, a] = op.eval_many((counts + eye[a]) / n_players)[:, a]
    return g


def _check_method(method: str):
    if method not in (EXACT, MONTE_CARLO):
        raise ValueError(f"method must be {EXACT!r} or {MONTE_CARLO!r}")


def _mc_rng(rng) -> np.random.Generator:
    if rng is None:
        raise ValueError("Monte-Carlo estimation needs an rng")
    return rng


def expected_payoff(
    op: PayoffOperator,
    policies,
    i: int,
    override=None,
    method: str = EXACT,
    mc_samples: int = 2000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Expected payoff of agent i when it plays ``override`` (default: its own
    policy) against the rest of the profile: E[F(mu_hat)(a_i)]."""
    _check_method(method)
    mat = _profile_matrix(policies)
    n = mat.shape[0]
    own = np.asarray(override if override is not None else mat[i], dtype=np.float64)
    opponents = np.delete(mat, i, axis=0)
    if method == EXACT:
        counts, probs = _opponent_distribution(opponents)
        return float(_exact_arm_values(op, counts, probs, n) @ own)
    g = _mc_arm_samples(op, opponents, n, mc_samples, _mc_rng(rng))
    return float((g @ own).mean())


def exploitability(
    op: PayoffOperator,
    policies,
    i: int,
    method: str = EXACT,
    mc_samples: int = 2000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Best gain agent i can get by deviating unilaterally; the maximum runs
    over the pure actions only (sufficient by linearity)."""
    _check_method(method)
    mat = _profile_matrix(policies)
    n = mat.shape[0]
    opponents = np.delete(mat, i, axis=0)
    if method == EXACT:
        counts, probs = _opponent_distribution(opponents)
        arms = _exact_arm_values(op, counts, probs, n)
    else:
        arms = _mc_arm_samples(op, opponents, n, mc_samples, _mc_rng(rng)).mean(axis=0)
    return float(arms.max() - arms @ mat[i])


def exploitability_with_std_error(
    op: PayoffOperator, policies, i: int, mc_samples: int, rng
) -> tuple[float, float]:
    """Monte-Carlo exploitability of agent i together with the standard error
    of the (best arm minus undeviated) difference under common random numbers."""
    mat = _profile_matrix(policies)
    g = _mc_arm_samples(op, np.delete(mat, i, axis=0), mat.shape[0], mc_samples, _mc_rng(rng))
    arms = g.mean(axis=0)
    best = int(arms.argmax())
    diffs = g[:, best] - g @ mat[i]
    se = float(diffs.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else 0.0
    return float(arms[best] - arms @ mat[i]), se


def _mc_report(
    op: PayoffOperator, mat: np.ndarray, mc_samples: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent exploitability estimates for the whole profile at once.

    One profile draw serves every agent: agent i's opponent counts are the
    profile counts minus its own action, so only K x K payoff lookups are
    needed per sample.
    """
    n, k = mat.shape
    css = np.cumsum(mat, axis=1)
    eye = np.eye(k, dtype=np.int64)
    delta = eye[None, :, :] - eye[:, None, :]  # delta[b, a] = e_a - e_b
    rows_idx = np.arange(n)
    diag = np.arange(k)
    s1 = np.zeros((n, k))
    s2 = np.zeros((n, k))
    for _ in range(mc_samples):
        u = rng.random(n)
        acts = (u[:, None] >= css).sum(axis=1)
        np.minimum(acts, k - 1, out=acts)
        counts = np.bincount(acts, minlength=k)
        present = np.flatnonzero(counts > 0)
        measures = (counts[None, None, :] + delta[present]) / n
        vals = op.eval_many(measures.reshape(-1, k)).reshape(len(present), k, k)
        g = np.empty((k, k))
        g[present] = vals[:, diag, diag]
        rows = g[acts]
        undeviated = np.einsum("ik,ik->i", rows, mat)
        d = rows - undeviated[:, None]
        s1 += d
        s2 += d * d
    mean_d = s1 / mc_samples
    per_agent = mean_d.max(axis=1)
    best = mean_d.argmax(axis=1)
    if mc_samples > 1:
        var = (s2 / mc_samples - mean_d * mean_d) * (mc_samples / (mc_samples - 1))
        se = np.sqrt(np.maximum(var[rows_idx, best], 0.0) / mc_samples)
    else:
        se = np.zeros(n)
    return per_agent, se


def exploitability_report(
    op: PayoffOperator,
    policies,
    method: str = MONTE_CARLO,
    mc_samples: int = 2000,
    rng: Optional[np.random.Generator] = None,
) -> ExploitabilityReport:
    """Exploitability of every agent in the profile; ``std_error`` refers to
    the maximizing agent's estimate (0 for exact enumeration)."""
    _check_method(method)
    mat = _profile_matrix(policies)
    n = mat.shape[0]
    if method == EXACT:
        if np.all(mat == mat[0]):
            value = exploitability(op, mat, 0, method=EXACT)
            per_agent = np.full(n, value)
        else:
            per_agent = np.array(
                [exploitability(op, mat, i, method=EXACT) for i in range(n)]
            )
        imax = int(per_agent.argmax())
        return ExploitabilityReport(per_agent, float(per_agent[imax]), EXACT, None, 0.0)
    per_agent, se = _mc_report(op, mat, mc_samples, _mc_rng(rng))
    imax = int(per_agent.argmax())
    return ExploitabilityReport(
        per_agent, float(per_agent[imax]), MONTE_CARLO, mc_samples, float(se[imax])
    )


def population_metrics(policies, pi_star=None) -> PopulationMetrics:
    """Mean policy, per-agent squared deviation from it, and (given a
    reference equilibrium) mean and mean-squared distances to it."""
    mat = _profile_matrix(policies)
    mean_policy = mat.mean(axis=0)
    devs = mat - mean_policy
    per_agent = np.einsum("ij,ij->i", devs, devs)
    mean_dist = mean_sq = None
    if pi_star is not None:
        diff = mat - np.asarray(pi_star, dtype=np.float64)
        sq = np.einsum("ij,ij->i", diff, diff)
        mean_dist = float(np.sqrt(sq).mean())
        mean_sq = float(sq.mean())
    return PopulationMetrics(
        mean_policy=SimplexPoint(mean_policy),
        per_agent_deviation=per_agent,
        mean_deviation=float(per_agent.mean()),
        mean_dist_to_mfne=mean_dist,
        mean_sq_dist_to_mfne=mean_sq,
    )
