"""Pure-numpy implementations of the hot kernels.

These mirror the compiled kernels in ``_core.pyx`` operation for operation:
both cumulate sums left to right, evaluate the same threshold expressions,
and apply multiplies/adds in the same order, so the two backends produce
bit-identical results on the same inputs.
"""

import numpy as np

BACKEND = "numpy"


def project_rows(v):
    """Project each row of ``v`` onto the probability simplex.

    Rows already on the simplex (non-negative, sum within 1e-12 of 1) pass
    through unchanged, which makes the projection exactly idempotent.
    Otherwise, sort-and-threshold: per row, with u the coordinates sorted in
    descending order and css their running sum, the threshold index rho is the
    last j with u[j]*(j+1) > css[j]-1, and the projection is
    max(v - theta, 0) with theta = (css[rho]-1)/(rho+1).
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("expected a 2-d array of row vectors")
    m, k = v.shape
    # cumsum is sequential, matching the compiled kernel's accumulator bit for bit
    totals = np.cumsum(v, axis=1)[:, -1]
    on_simplex = np.all(v >= 0.0, axis=1) & (np.abs(totals - 1.0) <= 1e-12)
    u = np.sort(v, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1)
    ind = np.arange(1, k + 1, dtype=np.float64)
    cond = u * ind > (css - 1.0)
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    css_rho = np.take_along_axis(css, rho[:, None], axis=1)[:, 0]
    theta = (css_rho - 1.0) / (rho + 1.0)
    out = np.maximum(v - theta[:, None], 0.0)
    if np.any(on_simplex):
        out[on_simplex] = v[on_simplex]
    return out


def sample_from_rows(policies, uniforms):
    """Inverse-CDF sample one action per row: a = #{j : cumsum(p)[j] <= u}."""
    policies = np.asarray(policies, dtype=np.float64)
    uniforms = np.asarray(uniforms, dtype=np.float64)
    css = np.cumsum(policies, axis=1)
    actions = np.sum(css <= uniforms[:, None], axis=1).astype(np.int64)
    np.minimum(actions, policies.shape[1] - 1, out=actions)
    return actions


def uniform_actions(uniforms, k):
    """Map uniforms in [0,1) to actions {0..k-1} by truncation."""
    actions = (np.asarray(uniforms, dtype=np.float64) * k).astype(np.int64)
    np.minimum(actions, k - 1, out=actions)
    return actions


def trpa_update_rows(policies, rewards, eta, tau):
    """Row-wise regularized projected-ascent update.

    Each row becomes project((1 - eta*tau) * pi + eta * r).
    """
    alpha = 1.0 - eta * tau
    return project_rows(alpha * np.asarray(policies, dtype=np.float64)
                        + eta * np.asarray(rewards, dtype=np.float64))
