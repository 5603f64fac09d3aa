"""Closed-form guarantee bounds for the learning dynamics.

These are the explicit constants the test suite checks simulations against;
all take plain floats and return the bound value.
"""

import math


def policy_deviation_bound(t: int, tau: float, k: int, sigma: float) -> float:
    """Bound on the expected squared deviation of one agent's policy from the
    population mean after t full-feedback rounds with rates eta_t = (1/tau)/(t+2):
    (14 * tau^-2 * K * sigma^2 + 14) / (t + 2)."""
    return (14.0 * k * sigma * sigma / (tau * tau) + 14.0) / (t + 2.0)


def exploration_bias_bound(
    k: int, sigma: float, epsilon: float, epoch_len: int, lipschitz: float, n: int
) -> float:
    """Bound on the l2 bias of the epoch payoff estimate relative to the payoff
    at the exploration-mixed mean policy:
    K^(3/2) * sqrt(1 + sigma^2) * exp(-eps*T_h) + 2L/N + 2L/sqrt(N)."""
    return (
        k ** 1.5 * math.sqrt(1.0 + sigma * sigma) * math.exp(-epsilon * epoch_len)
        + 2.0 * lipschitz / n
        + 2.0 * lipschitz / math.sqrt(n)
    )


def symmetric_profile_exploitability_bound(tau: float, lipschitz: float, n: int) -> float:
    """Exploitability bound for all N agents playing the tau-regularized
    equilibrium: 2*tau + L*(2*sqrt(2) + 4)/N + 4L/sqrt(N)."""
    return 2.0 * tau + lipschitz * (2.0 * math.sqrt(2.0) + 4.0) / n + 4.0 * lipschitz / math.sqrt(n)


def no_exploration_probability(epsilon: float, epoch_len: int) -> float:
    """Probability an agent never explores during an epoch of T_h rounds."""
    return (1.0 - epsilon) ** epoch_len
