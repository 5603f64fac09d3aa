"""Payoff operators F mapping an occupancy measure over K actions to a payoff
per action, with exact or estimated Lipschitz (L) and strong-monotonicity (λ)
constants.

Sign convention: every constructor emits an operator that is monotone in the
payoff-maximization sense,

    (F(mu1) - F(mu2))^T (mu1 - mu2) <= -lambda * ||mu1 - mu2||^2,

so congestion (more occupancy) never raises a payoff. Potential-gradient
payoffs are negated on construction to satisfy this convention.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .simplex import SimplexPoint, sample_uniform_points

_RANGE_TOL = 1e-9


@dataclass(frozen=True)
class PayoffOperator:
    """A payoff map over the K-simplex; immutable and safe to share.

    ``lipschitz``/``monotonicity`` hold exact constants when the family has a
    closed form, else None (use the estimate_* functions). Instances are
    callable on a SimplexPoint (validated) and expose ``eval_many`` for raw
    row-batch evaluation.
    """

    kind: str
    K: int
    parameters: object
    declared_range: tuple[float, float]
    lipschitz: Optional[float]
    monotonicity: Optional[float]
    _fn: Callable[[np.ndarray], np.ndarray]

    def eval_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate on an (M, K) array of simplex rows; no validation."""
        out = self._fn(np.asarray(points, dtype=np.float64))
        return np.asarray(out, dtype=np.float64)

    def __call__(self, mu) -> np.ndarray:
        w = np.asarray(mu, dtype=np.float64).ravel()
        if w.size != self.K:
            raise ValueError(f"operator expects K={self.K}, got {w.size} entries")
        out = self.eval_many(w[None, :])[0]
        if out.shape != (self.K,) or not np.all(np.isfinite(out)):
            raise ValueError("operator produced a non-finite or misshaped payoff vector")
        lo, hi = self.declared_range
        if out.min() < lo - _RANGE_TOL or out.max() > hi + _RANGE_TOL:
            raise ValueError(
                f"payoff {out} escapes declared range [{lo}, {hi}] for kind={self.kind!r}"
            )
        return out


@dataclass(frozen=True)
class LinearParams:
    """mu -> (-S + X) mu + b, optionally rescaled by (scale, shift) into [0,1]."""

    S: np.ndarray
    X: np.ndarray
    b: np.ndarray
    scale: float = 1.0
    shift: float = 0.0


@dataclass(frozen=True)
class KlParams:
    mu_ref: SimplexPoint
    gamma: float


@dataclass(frozen=True)
class BeachBarParams:
    alpha: float
    x_bar: int


@dataclass(frozen=True)
class CollisionParams:
    alphas: np.ndarray
    N: int


@dataclass(frozen=True)
class CurveTableParams:
    """Per-action non-increasing piecewise-linear curves on [0, 1].

    ``curves[a]`` is an (m_a, 2) array of (occupancy, payoff) knots with
    occupancies strictly increasing from 0 to 1 and payoffs non-increasing.
    """

    curves: tuple[np.ndarray, ...]


def linear_from_params(S, X, b, normalize: bool = False) -> PayoffOperator:
    """Linear payoff mu -> (-S + X) mu + b.

    S must be symmetric positive semi-definite (checked to 1e-10) and X
    antisymmetric; the smallest eigenvalue of S is the exact strong-monotonicity
    constant, the largest singular value of (-S + X) the exact Lipschitz
    constant. With ``normalize``, outputs are affinely rescaled into [0,1]
    using the exact vertex range over the simplex.
    """
    S = np.asarray(S, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    k = b.size
    if S.shape != (k, k) or X.shape != (k, k):
        raise ValueError("S, X must be KxK matrices matching b")
    if np.max(np.abs(S - S.T)) > 1e-10:
        raise ValueError("S must be symmetric")
    if np.max(np.abs(X + X.T)) > 1e-10:
        raise ValueError("X must be antisymmetric")
    eigs = np.linalg.eigvalsh(S)
    if eigs[0] < -1e-10:
        raise ValueError("S must be positive semi-definite")
    M = -S + X
    # exact output range over the simplex: a linear form attains extrema at vertices
    per_row_lo = M.min(axis=1) + b
    per_row_hi = M.max(axis=1) + b
    lo, hi = float(per_row_lo.min()), float(per_row_hi.max())
    if normalize:
        if hi - lo < 1e-12:
            raise ValueError("cannot normalize a constant linear operator")
        scale = 1.0 / (hi - lo)
        shift = -lo * scale
        rng_lo, rng_hi = 0.0, 1.0
    else:
        scale, shift = 1.0, 0.0
        rng_lo, rng_hi = lo, hi
    sing_max = float(np.linalg.svd(M, compute_uv=False)[0])
    params = LinearParams(S=S, X=X, b=b, scale=scale, shift=shift)

    def fn(pts, M=M, b=b, scale=scale, shift=shift):
        return (pts @ M.T + b) * scale + shift

    return PayoffOperator(
        kind="linear",
        K=k,
        parameters=params,
        declared_range=(rng_lo, rng_hi),
        lipschitz=sing_max * scale,
        monotonicity=max(float(eigs[0]), 0.0) * scale,
        _fn=fn,
    )


def make_linear(k: int, rng: np.random.Generator, normalize: bool = True) -> PayoffOperator:
    """Random monotone linear payoff: S = A^T A + 1e-3 I (A standard normal),
    X = (U - U^T)/2 with U uniform on [0,1], b uniform on [0,1]."""
    if k < 2:
        raise ValueError("need K >= 2")
    A = rng.standard_normal((k, k))
    S = A.T @ A + 1e-3 * np.eye(k)
    S = (S + S.T) / 2.0
    U = rng.random((k, k))
    X = (U - U.T) / 2.0
    b = rng.random(k)
    return linear_from_params(S, X, b, normalize=normalize)


def make_kl(mu_ref: SimplexPoint, gamma: float) -> PayoffOperator:
    """Payoff from a KL-divergence potential against a reference distribution.

    The raw potential gradient is gamma*log((gamma*mu + (1-gamma)*mu_ref)/mu_ref)
    + gamma, which is ascending-monotone; the operator returned is its
    negation so the library-wide descending convention holds.
    """
    if not isinstance(mu_ref, SimplexPoint):
        mu_ref = SimplexPoint(mu_ref)
    m = np.asarray(mu_ref, dtype=np.float64)
    if np.any(m <= 0.0):
        raise ValueError("mu_ref must have strictly positive entries")
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    k = m.size

    def fn(pts, m=m, gamma=gamma):
        mix = gamma * pts + (1.0 - gamma) * m
        return -(gamma * np.log(mix / m) + gamma)

    # per-coordinate slope magnitude is gamma^2 / (gamma*x + (1-gamma)*mu_ref)
    lam = gamma * gamma / (gamma + (1.0 - gamma) * float(m.max()))
    lip = gamma * gamma / ((1.0 - gamma) * float(m.min())) if gamma < 1.0 else None
    lo = -gamma * math.log(gamma / float(m.min()) + (1.0 - gamma)) - gamma
    hi = (-gamma * math.log1p(-gamma) - gamma) if gamma < 1.0 else math.inf
    return PayoffOperator(
        kind="kl",
        K=k,
        parameters=KlParams(mu_ref=mu_ref, gamma=float(gamma)),
        declared_range=(lo, hi),
        lipschitz=lip,
        monotonicity=lam,
        _fn=fn,
    )


def make_beach_bar(k: int, alpha: float) -> PayoffOperator:
    """Beach-bar payoff: 1 - |a - x_bar|/K - alpha*log(1 + mu(a)), bar at
    x_bar = floor(K/2) (actions 1-indexed).

    Outputs can dip below 0 for large alpha at far locations; the declared
    range is widened accordingly and never clipped (clipping would destroy
    the Lipschitz constant).
    """
    if k < 2:
        raise ValueError("need K >= 2")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    x_bar = k // 2
    dist = np.abs(np.arange(1, k + 1) - x_bar) / k

    def fn(pts, dist=dist, alpha=alpha):
        return 1.0 - dist - alpha * np.log1p(pts)

    lo = 1.0 - float(dist.max()) - alpha * math.log(2.0)
    return PayoffOperator(
        kind="beach-bar",
        K=k,
        parameters=BeachBarParams(alpha=float(alpha), x_bar=x_bar),
        declared_range=(lo, 1.0),
        lipschitz=float(alpha),
        monotonicity=float(alpha) / 2.0,
        _fn=fn,
    )


def make_collision(alphas, n_players: int) -> PayoffOperator:
    """Multi-armed-bandit collision payoff with soft collisions.

    Per action a with collision-free payoff alpha_a, occupancy x pays alpha_a
    up to x = 1/N, ramps linearly as alpha_a * N * (2/N - x) in between, and 0
    from x = 2/N on.
    """
    a = np.asarray(alphas, dtype=np.float64).ravel()
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise ValueError("alphas must lie in [0, 1]")
    if n_players < 2:
        raise ValueError("need N >= 2")
    k = a.size
    n = int(n_players)

    def fn(pts, a=a, n=n):
        ramp = a * n * (2.0 / n - pts)
        out = np.where(pts <= 1.0 / n, a, np.where(pts >= 2.0 / n, 0.0, ramp))
        return np.ascontiguousarray(out)

    return PayoffOperator(
        kind="collision",
        K=k,
        parameters=CollisionParams(alphas=a, N=n),
        declared_range=(0.0, float(a.max())),
        lipschitz=float(a.max()) * n,
        monotonicity=0.0,
        _fn=fn,
    )


def make_curve_table(params: CurveTableParams) -> PayoffOperator:
    """Payoff from per-action non-increasing piecewise-linear curves,
    interpolated linearly between knots."""
    curves = []
    for idx, knots in enumerate(params.curves):
        arr = np.asarray(knots, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ValueError(f"curve {idx + 1}: need at least two (occupancy, payoff) knots")
        occ, pay = arr[:, 0], arr[:, 1]
        if occ[0] != 0.0 or occ[-1] != 1.0:
            raise ValueError(f"curve {idx + 1}: occupancies must start at 0 and end at 1")
        if np.any(np.diff(occ) <= 0.0):
            raise ValueError(f"curve {idx + 1}: occupancies must be strictly increasing")
        if np.any(np.diff(pay) > 0.0):
            raise ValueError(f"curve {idx + 1}: payoffs must be non-increasing")
        curves.append((occ.copy(), pay.copy()))
    k = len(curves)
    if k < 1:
        raise ValueError("need at least one curve")

    slopes = np.concatenate(
        [np.diff(pay) / np.diff(occ) for occ, pay in curves]
    )
    lip = float(np.max(np.abs(slopes))) if slopes.size else 0.0
    lam = float(np.min(-slopes)) if slopes.size else 0.0
    lo = float(min(pay.min() for _, pay in curves))
    hi = float(max(pay.max() for _, pay in curves))

    def fn(pts, curves=curves):
        out = np.empty_like(pts)
        for a, (occ, pay) in enumerate(curves):
            out[:, a] = np.interp(pts[:, a], occ, pay)
        return out

    return PayoffOperator(
        kind="curve-table",
        K=k,
        parameters=params,
        declared_range=(lo, hi),
        lipschitz=lip,
        monotonicity=lam,
        _fn=fn,
    )


def load_curve_table_csv(path) -> CurveTableParams:
    """Read curve knots from CSV with header ``action,occupancy,payoff``,
    rows sorted by (action, occupancy)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["action", "occupancy", "payoff"]:
            raise ValueError("curve CSV must start with header 'action,occupancy,payoff'")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValueError(f"curve CSV line {lineno}: expected 3 columns")
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2])))
            except ValueError as exc:
                raise ValueError(f"curve CSV line {lineno}: {exc}") from None
    if not rows:
        raise ValueError("curve CSV has no data rows")
    if rows != sorted(rows, key=lambda r: (r[0], r[1])):
        raise ValueError("curve CSV rows must be sorted by (action, occupancy)")
    actions = sorted({r[0] for r in rows})
    if actions != list(range(1, len(actions) + 1)):
        raise ValueError(f"curve CSV actions must be exactly 1..K, got {actions}")
    curves = []
    for a in actions:
        knots = [(occ, pay) for act, occ, pay in rows if act == a]
        curves.append(np.asarray(knots, dtype=np.float64))
    return CurveTableParams(curves=tuple(curves))


def make_constant(values) -> PayoffOperator:
    """Payoff independent of the occupancy measure."""
    c = np.asarray(values, dtype=np.float64).ravel()

    def fn(pts, c=c):
        return np.broadcast_to(c, pts.shape).copy()

    return PayoffOperator(
        kind="constant",
        K=c.size,
        parameters=c,
        declared_range=(float(c.min()), float(c.max())),
        lipschitz=0.0,
        monotonicity=0.0,
        _fn=fn,
    )


def custom_operator(
    fn: Callable[[np.ndarray], np.ndarray],
    k: int,
    declared_range: tuple[float, float],
    lipschitz: Optional[float] = None,
    monotonicity: Optional[float] = None,
    kind: str = "custom",
) -> PayoffOperator:
    """Wrap a per-point payoff function (K,) -> (K,) as an operator."""

    def many(pts, fn=fn):
        return np.stack([np.asarray(fn(row), dtype=np.float64) for row in pts])

    return PayoffOperator(
        kind=kind,
        K=k,
        parameters=None,
        declared_range=declared_range,
        lipschitz=lipschitz,
        monotonicity=monotonicity,
        _fn=many,
    )


def estimate_lipschitz(op: PayoffOperator, n_samples: int, rng: np.random.Generator) -> float:
    """Largest sampled ratio ||F(mu1)-F(mu2)|| / ||mu1-mu2||; a lower bound on L."""
    if n_samples < 2:
        raise ValueError("need n_samples >= 2")
    x1 = sample_uniform_points(op.K, n_samples, rng)
    x2 = sample_uniform_points(op.K, n_samples, rng)
    df = op.eval_many(x1) - op.eval_many(x2)
    dm = x1 - x2
    den = np.linalg.norm(dm, axis=1)
    keep = den > 1e-12
    if not np.any(keep):
        return 0.0
    ratios = np.linalg.norm(df[keep], axis=1) / den[keep]
    return float(ratios.max())


def estimate_monotonicity(op: PayoffOperator, n_samples: int, rng: np.random.Generator) -> float:
    """Smallest sampled value of -(F(mu1)-F(mu2))^T(mu1-mu2) / ||mu1-mu2||^2.

    Non-negative certifies no sampled monotonicity violation; the value is an
    upper bound on the true strong-monotonicity constant.
    """
    if n_samples < 2:
        raise ValueError("need n_samples >= 2")
    x1 = sample_uniform_points(op.K, n_samples, rng)
    x2 = sample_uniform_points(op.K, n_samples, rng)
    df = op.eval_many(x1) - op.eval_many(x2)
    dm = x1 - x2
    den = np.einsum("ij,ij->i", dm, dm)
    keep = den > 1e-24
    if not np.any(keep):
        return 0.0
    vals = -np.einsum("ij,ij->i", df[keep], dm[keep]) / den[keep]
    return float(vals.min())
