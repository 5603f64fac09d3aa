"""Exact-oracle solution of the regularized mean-field equilibrium.

The regularized operator F - tau*I is (lambda + tau)-strongly monotone for
tau > 0, so its equilibrium is unique and the projected fixed-point iteration
converges at a known contraction rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import STREAM_ESTIMATE, derive_generator
from .payoffs import PayoffOperator, estimate_lipschitz, estimate_monotonicity
from .simplex import SimplexPoint

# Estimation fallback when an operator carries no exact constants.
_ESTIMATE_SAMPLES = 4000
_ESTIMATE_SAFETY = 1.5
_ESTIMATE_SEED = 1785619843


@dataclass(frozen=True)
class RegularizedSolution:
    pi_star: SimplexPoint
    tau: float
    gap: float
    iterations: int


class NonConvergenceError(RuntimeError):
    """Raised when the fixed-point iteration exhausts its budget; carries the
    last iterate and its gap."""

    def __init__(self, solution: RegularizedSolution, tol: float):
        super().__init__(
            f"no convergence after {solution.iterations} iterations: "
            f"gap {solution.gap:.3e} > tol {tol:.3e}"
        )
        self.solution = solution


def contraction_modulus(eta: float, tau: float, lipschitz: float, monotonicity: float) -> float:
    """Lipschitz constant of the regularized projected-ascent map:
    sqrt(1 - 2*(lambda + tau)*eta + eta^2*(L + tau)^2)."""
    rad = 1.0 - 2.0 * (monotonicity + tau) * eta + eta * eta * (lipschitz + tau) ** 2
    return math.sqrt(max(rad, 0.0))


def trpa_step(pi, f_at_pi, eta: float, tau: float) -> SimplexPoint:
    """One regularized projected-ascent step: project((1 - eta*tau)*pi + eta*f).

    The single primitive reused by both learning algorithms, with f replaced
    by observed or estimated rewards.
    """
    if eta < 0.0 or tau < 0.0:
        raise ValueError("eta and tau must be non-negative")
    p = np.asarray(pi, dtype=np.float64).ravel()
    f = np.asarray(f_at_pi, dtype=np.float64).ravel()
    if f.size != p.size:
        raise ValueError("payoff vector length must match policy length")
    out = _kernels.trpa_update_rows(p[None, :], f[None, :], eta, tau)[0]
    return SimplexPoint(out)


def mfne_gap(op: PayoffOperator, pi, tau: float) -> float:
    """How far pi is from solving the tau-regularized equilibrium condition:
    max_a G(a) - pi^T G with G = F(pi) - tau*pi. Zero exactly at the solution,
    and pi is a delta-equilibrium of the regularized operator for delta = gap.
    """
    p = np.asarray(pi, dtype=np.float64).ravel()
    g = op.eval_many(p[None, :])[0] - tau * p
    return max(float(g.max() - p @ g), 0.0)


def _solver_constants(op: PayoffOperator) -> tuple[float, float]:
    """(L, lambda) for the step size: exact metadata when present, otherwise
    sampled estimates with a 1.5x safety factor (inflate L, deflate lambda)."""
    lip, lam = op.lipschitz, op.monotonicity
    if lip is None or not math.isfinite(lip) or lam is None:
        rng = derive_generator(_ESTIMATE_SEED, STREAM_ESTIMATE)
        lip = _ESTIMATE_SAFETY * estimate_lipschitz(op, _ESTIMATE_SAMPLES, rng)
        lam = max(estimate_monotonicity(op, _ESTIMATE_SAMPLES, rng), 0.0) / _ESTIMATE_SAFETY
    lam = min(max(lam, 0.0), lip)
    return lip, lam


def solve_mfne(
    op: PayoffOperator,
    tau: float,
    eta=None,
    tol: float = 1e-10,
    max_iter: int = 200_000,
) -> RegularizedSolution:
    """Fixed-point iteration to the unique tau-regularized equilibrium.

    Starts from the uniform point with the constant step
    eta = (lambda + tau)/(L + tau)^2 that minimizes the contraction modulus
    (``eta`` may override with a constant or a callable of the iteration
    index). Stops when the gap falls below ``tol``.

    Raises NonConvergenceError after ``max_iter`` steps, carrying the last
    iterate.
    """
    if tau <= 0.0:
        raise ValueError("tau must be > 0 (the regularized solution is unique only then)")
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    if eta is None:
        lip, lam = _solver_constants(op)
        step = (lam + tau) / (lip + tau) ** 2

        def eta_at(_k):
            return step

    elif callable(eta):
        eta_at = eta
    else:
        step = float(eta)

        def eta_at(_k):
            return step

    pi = np.full(op.K, 1.0 / op.K)
    for k in range(max_iter + 1):
        f = op.eval_many(pi[None, :])[0]
        g = f - tau * pi
        gap = max(float(g.max() - pi @ g), 0.0)
        if gap <= tol:
            return RegularizedSolution(SimplexPoint(pi), tau, gap, k)
        if k == max_iter:
            break
        pi = _kernels.trpa_update_rows(pi[None, :], f[None, :], eta_at(k), tau)[0]
    raise NonConvergenceError(
        RegularizedSolution(SimplexPoint(pi), tau, gap, max_iter), tol
    )
