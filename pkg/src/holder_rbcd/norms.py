"""Block-weighted (alpha, q)-norms, their duals and equivalence constants.

For block constants ``L_1..L_m`` the norm is

    ||x||_{alpha,q} = ( sum_i L_i^alpha ||P_i x||^q )^(1/q).

The dual of ``||.||_{alpha,p}`` is ``||.||_{beta,q}`` with ``q = p/(p-1)``
and ``beta = -alpha/(p-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .blocks import BlockPartition


@dataclass(frozen=True)
class WeightedNormSpec:
    alpha: float
    q: float
    weights: tuple[float, ...]
    partition: BlockPartition

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not np.isfinite(self.q) or self.q < 1:
            raise ValueError(f"q must be a finite real >= 1, got {self.q}")
        if len(self.weights) != self.partition.m:
            raise ValueError(
                f"need one weight per block: got {len(self.weights)} for m={self.partition.m}"
            )
        if any(not w > 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")

    @property
    def block_factors(self) -> np.ndarray:
        """``L_i^alpha`` for every block."""
        return np.power(np.asarray(self.weights), self.alpha)

    def dual(self) -> "WeightedNormSpec":
        beta, q = dual_exponent(self.alpha, self.q)
        return WeightedNormSpec(beta, q, self.weights, self.partition)


def norm_from_block_norms(block_norms, weights, alpha: float, q: float) -> np.ndarray:
    """Weighted norm given precomputed ``||P_i x||`` along the last axis."""
    n = np.asarray(block_norms, dtype=float)
    w = np.power(np.asarray(weights, dtype=float), alpha)
    if q == 2.0:
        return np.sqrt(np.square(n) @ w)
    if q == 1.0:
        return n @ w
    return np.power(np.power(n, q) @ w, 1.0 / q)


def weighted_norm(spec: WeightedNormSpec, x) -> float | np.ndarray:
    """Evaluate ``||x||_{alpha,q}``; vectorised over leading axes of ``x``."""
    n = spec.partition.block_norms(x)
    out = norm_from_block_norms(n, spec.weights, spec.alpha, spec.q)
    return float(out) if np.ndim(out) == 0 else out


def dual_exponent(alpha: float, p: float) -> tuple[float, float]:
    """Exponents ``(beta, q)`` of the norm dual to ``||.||_{alpha,p}``."""
    if not p > 1:
        raise ValueError(f"p must exceed 1 for a finite conjugate exponent, got {p}")
    if not np.isfinite(p):
        raise ValueError("p must be finite")
    q = p / (p - 1.0)
    beta = -alpha / (p - 1.0)
    return beta, q


def printed_dual_exponent(alpha: float, p: float) -> tuple[float, float]:
    """The ``beta = -alpha*p/q`` variant; agrees with :func:`dual_exponent` only at p=2."""
    if not p > 1:
        raise ValueError(f"p must exceed 1 for a finite conjugate exponent, got {p}")
    q = p / (p - 1.0)
    return -alpha * p / q, q


def extremal_direction(spec: WeightedNormSpec, y) -> np.ndarray:
    """Unit vector (in ``spec``'s norm) maximising ``<x, y>``.

    Each block of the maximiser points along ``P_i y`` with length
    proportional to ``(||P_i y|| / L_i^alpha)^(1/(p-1))``.  Rows of ``y`` that
    are zero map to zero.
    """
    y = spec.partition._check_vector(y)
    p = spec.q
    if not p > 1:
        raise ValueError("extremal direction requires p > 1")
    n = spec.partition.block_norms(y)
    t = np.power(n / spec.block_factors, 1.0 / (p - 1.0))
    scale = np.divide(t, n, out=np.zeros_like(t), where=n > 0)
    x = y * (scale @ spec.partition.indicator)
    nx = np.asarray(weighted_norm(spec, x))
    return x / np.where(nx > 0, nx, 1.0)[..., None]


def cauchy_schwarz_partner(spec: WeightedNormSpec, x) -> np.ndarray:
    """``sum_i L_i^alpha ||P_i x||^(p-2) P_i x``: the ``y`` attaining equality for ``x``."""
    x = spec.partition._check_vector(x)
    n = spec.partition.block_norms(x)
    coef = spec.block_factors * np.power(n, spec.q - 2.0, out=np.zeros_like(n), where=n > 0)
    return x * (coef @ spec.partition.indicator)


def dual_norm_oracle(spec: WeightedNormSpec, y, samples: int = 64, rng=None) -> float:
    """Lower bound on ``max{<x,y> : ||x||_{alpha,p} <= 1}``.

    Starts from the closed-form maximiser and tries ``samples`` random
    perturbations of it; every candidate is rescaled onto the unit sphere,
    so the result never exceeds the true dual norm.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    y = spec.partition._check_vector(y)
    if y.ndim != 1:
        raise ValueError("dual_norm_oracle takes a single vector")
    rng = np.random.default_rng(rng)
    x0 = extremal_direction(spec, y)
    if not np.any(x0):
        return 0.0
    best = float(x0 @ y)
    scale = 1e-3 * np.linalg.norm(x0)
    for _ in range(samples):
        x = x0 + scale * rng.standard_normal(y.shape)
        nx = weighted_norm(spec, x)
        if nx > 0:
            best = max(best, float(x @ y) / nx)
    return best


def equivalence_constants(alpha: float, p: float, beta: float, weights: Sequence[float]) -> tuple[float, float]:
    """``(upper, lower)`` with ``lower*||x||_{beta,2} <= ||x||_{alpha,p} <= upper*||x||_{beta,2}``."""
    if p < 2:
        raise ValueError(f"norm equivalence constants need p >= 2, got {p}")
    w = np.asarray(weights, dtype=float)
    powers = np.power(w, alpha / p - beta / 2.0)
    m = len(w)
    return float(powers.max()), float(m ** (1.0 / p - 0.5) * powers.min())


@dataclass
class NormSweep:
    """Worst cases of the norm inequalities over a batch of random vectors."""

    trials: int
    worst_ratio: float
    extremal_residual: float
    upper_margin: float | None = None
    lower_margin: float | None = None

    @property
    def sandwich_ok(self) -> bool | None:
        if self.upper_margin is None:
            return None
        return self.upper_margin >= 0 and self.lower_margin >= 0


def property_sweep(alpha: float, p: float, weights, trials: int, seed: int = 0,
                   block_sizes: Sequence[int] | None = None, beta: float = 0.0) -> NormSweep:
    """Check Cauchy-Schwarz, the extremal equality case and (for p >= 2) the
    equivalence sandwich on ``trials`` Gaussian pairs.

    ``worst_ratio`` is ``max |<x,y>| / (||x|| ||y||_*)``; the residual is the
    largest relative gap between ``<x*, y>`` and ``||y||_*`` at the
    closed-form maximiser; sandwich margins are relative and must be >= 0.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    w = np.asarray(weights, dtype=float)
    sizes = [1] * len(w) if block_sizes is None else list(block_sizes)
    part = BlockPartition.contiguous(sizes)
    spec = WeightedNormSpec(alpha, p, tuple(w), part)
    dual = spec.dual()
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((trials, part.dim))
    Y = rng.standard_normal((trials, part.dim))
    nx = weighted_norm(spec, X)
    ny = weighted_norm(dual, Y)
    ratio = np.abs(np.sum(X * Y, axis=1)) / (nx * ny)
    xs = extremal_direction(spec, Y)
    resid = np.abs(np.sum(xs * Y, axis=1) - ny) / ny
    up = lo = None
    if p >= 2:
        cu, cl = equivalence_constants(alpha, p, beta, w)
        e = weighted_norm(WeightedNormSpec(beta, 2.0, tuple(w), part), X)
        up = float(np.min((cu * e - nx) / nx))
        lo = float(np.min((nx - cl * e) / nx))
    return NormSweep(trials, float(ratio.max()), float(resid.max()), up, lo)
