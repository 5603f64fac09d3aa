"""Counter-based random streams.

Every stream is a Philox generator keyed by (master_seed, stream id, extras).
Philox is counter-based, so streams derived this way are independent and the
draw sequence of a run never depends on thread scheduling or worker count.
"""

import numpy as np

# Stream ids; keep stable, they are part of the reproducibility contract.
STREAM_ROUNDS = 0       # game dynamics (actions, payoff noise)
STREAM_EXPLOIT = 1      # Monte-Carlo exploitability at checkpoints
STREAM_OPERATOR = 2     # operator sampling (e.g. random linear payoffs)
STREAM_ESTIMATE = 3     # Lipschitz/monotonicity estimation


def derive_generator(master_seed, *ids):
    """Generator for the stream (master_seed, *ids); same inputs, same stream."""
    seq = np.random.SeedSequence((int(master_seed),) + tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(seq))
