"""Test objectives with analytically known Holder constants.

Every built-in family is coordinate-separable,

    f(x) = sum_j  c_j/(1+gamma) |x_j|^(1+gamma) + mu/2 x_j^2 + a_j (1 - cos(b x_j)),

so ``x* = 0``, ``f* = 0`` and all constants follow from scalar inequalities:

* ``t -> sign(t)|t|^gamma`` is gamma-Holder with constant ``2^(1-gamma)``;
* ``s`` coordinates of gamma-Holder maps stack into a block map with an
  extra factor ``s^((1-gamma)/2)``;
* a Lipschitz term is gamma-Holder only on bounded sets: on a ball of radius
  ``r`` its constant picks up ``(2r)^(1-gamma)``;
* ``a b sin(b t)`` is bounded by ``a b`` and ``a b^2``-Lipschitz, hence
  gamma-Holder with constant ``(a b^2)^gamma (2 a b)^(1-gamma)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .blocks import BlockPartition


class ConvexityClass(str, enum.Enum):
    NONCONVEX = "nonconvex"
    CONVEX = "convex"
    STRONGLY_CONVEX = "strongly_convex"


@dataclass(frozen=True)
class HolderProfile:
    """Smoothness and convexity constants of an objective.

    ``block_moduli`` are Euclidean strong convexity moduli per block, i.e.
    ``f(y) >= f(x) + <grad f(x), y-x> + 1/2 sum_i mu_i ||P_i (y-x)||^2``.
    The modulus with respect to ``||.||_{1-alpha,2}`` then depends on alpha
    and is returned by :meth:`strong_convexity`.
    """

    gamma: float
    block_constants: tuple[float, ...]
    global_constant: float | None = None
    block_moduli: tuple[float, ...] | None = None
    validity_radius: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "block_constants", tuple(float(v) for v in self.block_constants))
        if self.block_moduli is not None:
            object.__setattr__(self, "block_moduli", tuple(float(v) for v in self.block_moduli))
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.block_constants or any(not v > 0 for v in self.block_constants):
            raise ValueError("block constants must be positive")
        if self.global_constant is not None and not self.global_constant > 0:
            raise ValueError("global constant must be positive")
        if self.block_moduli is not None:
            if len(self.block_moduli) != len(self.block_constants):
                raise ValueError("need one strong convexity modulus per block")
            if any(not v > 0 for v in self.block_moduli):
                raise ValueError("strong convexity moduli must be positive")
            if self.gamma < 1 and self.validity_radius is None:
                raise ValueError("strongly convex profiles with gamma < 1 need a validity radius")

    @property
    def m(self) -> int:
        return len(self.block_constants)

    @property
    def nu(self) -> float:
        return (1.0 + self.gamma) / self.gamma

    @property
    def locally_valid(self) -> bool:
        return self.validity_radius is not None

    def s_alpha(self, alpha: float) -> float:
        return float(np.sum(np.power(self.block_constants, alpha)))

    def strong_convexity(self, alpha: float) -> float | None:
        """Largest sigma such that f is sigma-strongly convex in ``||.||_{1-alpha,2}``."""
        if self.block_moduli is None:
            return None
        L = np.asarray(self.block_constants)
        return float(np.min(np.asarray(self.block_moduli) / np.power(L, 1.0 - alpha)))


@dataclass(frozen=True, eq=False)
class ObjectiveModel:
    """Separable test objective with declared constants and known optimum."""

    name: str
    partition: BlockPartition
    profile: HolderProfile
    convexity: ConvexityClass
    power_coef: np.ndarray
    quad_coef: np.ndarray
    wave_amp: np.ndarray
    wave_freq: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.partition.dim

    @property
    def gamma(self) -> float:
        return self.profile.gamma

    @property
    def optimum_value(self) -> float:
        return 0.0

    @property
    def optimum_point(self) -> np.ndarray:
        return np.zeros(self.dim)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"expected trailing dimension {self.dim}, got shape {x.shape}")
        return x

    def value(self, x) -> float | np.ndarray:
        x = self._check(x)
        g = self.gamma
        ax = np.abs(x)
        terms = self.power_coef / (1.0 + g) * np.power(ax, 1.0 + g) + 0.5 * self.quad_coef * x * x
        if np.any(self.wave_amp):
            terms = terms + self.wave_amp * (1.0 - np.cos(self.wave_freq * x))
        out = terms.sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def gradient(self, x) -> np.ndarray:
        x = self._check(x)
        g = self.gamma
        if g == 1.0:
            grad = (self.power_coef + self.quad_coef) * x
        else:
            grad = self.power_coef * np.sign(x) * np.power(np.abs(x), g) + self.quad_coef * x
        if np.any(self.wave_amp):
            grad = grad + self.wave_amp * self.wave_freq * np.sin(self.wave_freq * x)
        return grad

    def block_value(self, x, i: int) -> float | np.ndarray:
        """Sum of the coordinate terms of block ``i``.

        The families are separable, so a step on block ``i`` changes ``f`` by
        exactly the change in this quantity; computing it this way avoids
        cancellation against the other blocks' terms.
        """
        return self.value(self.partition.project(i, x))

    def block_gradient(self, x, i: int) -> np.ndarray:
        """``P_i grad f(x)``."""
        return self.partition.project(i, self.gradient(x))

    def growth_terms(self) -> tuple[np.ndarray, float, np.ndarray, bool]:
        """Per-coordinate lower model ``f(y) - f* >= sum_j a_j|y_j|^p + b_j y_j^2``.

        Returns ``(a, p, b, exact)``; ``exact`` is True when the model is the
        objective itself (no oscillating term).
        """
        g = self.gamma
        a = self.power_coef / (1.0 + g)
        b = 0.5 * self.quad_coef
        return a, 1.0 + g, b, not np.any(self.wave_amp)


def _as_coords(values, dim: int, what: str) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(values, dtype=float), (dim,)).copy()
    if np.any(~np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")
    return arr


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    return gamma


def _check_partition(dim: int, partition: BlockPartition | None) -> BlockPartition:
    if partition is None:
        return BlockPartition.singletons(dim)
    if partition.dim != dim:
        raise ValueError(f"partition covers {partition.dim} coordinates, expected {dim}")
    return partition


def scalar_holder_constant(c: float, gamma: float) -> float:
    """Holder constant of ``t -> c sign(t)|t|^gamma``."""
    return 2.0 ** (1.0 - gamma) * c


def wave_holder_constant(amp: float, freq: float, gamma: float) -> float:
    """Holder constant of ``t -> amp*freq*sin(freq*t)``."""
    if amp == 0 or freq == 0:
        return 0.0
    return (amp * freq**2) ** gamma * (2.0 * amp * freq) ** (1.0 - gamma)


def _block_constants(partition, gamma, coord_holder, quad_coef, radius):
    """Block constants from per-coordinate Holder constants plus a Lipschitz part."""
    consts = []
    for b in partition.blocks:
        idx = list(b)
        s = len(idx)
        c = s ** ((1.0 - gamma) / 2.0) * float(np.max(coord_holder[idx]))
        q = float(np.max(quad_coef[idx]))
        if q > 0:
            c += q if gamma == 1.0 else q * (2.0 * radius) ** (1.0 - gamma)
        consts.append(c)
    d = partition.dim
    glob = d ** ((1.0 - gamma) / 2.0) * float(np.max(coord_holder))
    q = float(np.max(quad_coef))
    if q > 0:
        glob += q if gamma == 1.0 else q * (2.0 * radius) ** (1.0 - gamma)
    return tuple(consts), glob


def make_power_objective(dim: int, partition: BlockPartition | None, c, gamma: float) -> ObjectiveModel:
    """``f(x) = 1/(1+gamma) sum_j c_j |x_j|^(1+gamma)``; convex, minimiser 0."""
    gamma = _check_gamma(gamma)
    partition = _check_partition(dim, partition)
    c = _as_coords(c, dim, "c")
    if np.any(c <= 0):
        raise ValueError("power coefficients must be positive")
    L, glob = _block_constants(partition, gamma, scalar_holder_constant(1.0, gamma) * c, np.zeros(dim), None)
    moduli = None
    convexity = ConvexityClass.CONVEX
    if gamma == 1.0:
        moduli = tuple(float(np.min(c[list(b)])) for b in partition.blocks)
        convexity = ConvexityClass.STRONGLY_CONVEX
    profile = HolderProfile(gamma, L, glob, moduli)
    zeros = np.zeros(dim)
    return ObjectiveModel(
        "power", partition, profile, convexity, c, zeros, zeros, zeros,
        {"c": c.tolist(), "gamma": gamma},
    )


def make_quadratic_objective(dim: int, partition: BlockPartition | None, diag) -> ObjectiveModel:
    """``f(x) = 1/2 sum_j d_j x_j^2`` with ``L_i = max_{j in block i} d_j``."""
    partition = _check_partition(dim, partition)
    d = _as_coords(diag, dim, "diag")
    if np.any(d <= 0):
        raise ValueError("diagonal weights must be positive")
    model = make_power_objective(dim, partition, d, 1.0)
    return ObjectiveModel(
        "quadratic", partition, model.profile, ConvexityClass.STRONGLY_CONVEX,
        d, model.quad_coef, model.wave_amp, model.wave_freq, {"diag": d.tolist()},
    )


def make_regularized_power_objective(
    dim: int,
    partition: BlockPartition | None,
    c,
    gamma: float,
    mu: float,
    x0=None,
    radius: float | None = None,
) -> ObjectiveModel:
    """Power objective plus ``mu/2 ||x||^2``.

    The quadratic term is not gamma-Holder globally, so block constants are
    certified on the Euclidean ball of ``radius``.  Passing ``x0`` instead
    picks ``radius = 2 sqrt(2 f(x0)/mu)``: the sublevel set of ``x0`` lies in
    the ball of half that radius and a single block step from inside it can
    at most double the iterate's norm, so every segment the method
    traverses stays in the certified ball.
    """
    gamma = _check_gamma(gamma)
    if not gamma < 1:
        raise ValueError("regularized power family needs gamma < 1; use the quadratic family for gamma = 1")
    partition = _check_partition(dim, partition)
    c = _as_coords(c, dim, "c")
    if np.any(c < 0):
        raise ValueError("power coefficients must be nonnegative")
    mu = float(mu)
    if not mu > 0:
        raise ValueError("mu must be positive")
    mu_vec = np.full(dim, mu)
    if radius is None:
        if x0 is None:
            raise ValueError("need x0 or radius to certify local constants")
        x0 = np.asarray(x0, dtype=float)
        f0 = float(np.sum(c / (1.0 + gamma) * np.abs(x0) ** (1.0 + gamma) + 0.5 * mu * x0 * x0))
        radius = 2.0 * math.sqrt(2.0 * f0 / mu)
    radius = float(radius)
    if not radius > 0:
        raise ValueError("validity radius must be positive")
    L, glob = _block_constants(partition, gamma, scalar_holder_constant(1.0, gamma) * c, mu_vec, radius)
    profile = HolderProfile(gamma, L, glob, tuple(mu for _ in partition.blocks), radius)
    zeros = np.zeros(dim)
    return ObjectiveModel(
        "regularized_power", partition, profile, ConvexityClass.STRONGLY_CONVEX,
        c, mu_vec, zeros, zeros,
        {"c": c.tolist(), "gamma": gamma, "mu": mu, "radius": radius},
    )


def make_nonconvex_objective(
    dim: int,
    partition: BlockPartition | None,
    c,
    gamma: float,
    amplitude=1.0,
    frequency=1.0,
) -> ObjectiveModel:
    """Power objective plus ``a(1 - cos(b x_j))`` per coordinate.

    The added term is nonnegative and vanishes at 0, so ``f* = 0`` is still
    attained at the origin, while its curvature ``a b^2 cos(b t)`` makes the
    sum nonconvex once ``a b^2`` dominates the power term's curvature.
    """
    gamma = _check_gamma(gamma)
    partition = _check_partition(dim, partition)
    c = _as_coords(c, dim, "c")
    a = _as_coords(amplitude, dim, "amplitude")
    b = _as_coords(frequency, dim, "frequency")
    if np.any(c <= 0) or np.any(a < 0) or np.any(b < 0):
        raise ValueError("need c > 0 and nonnegative amplitude/frequency")
    coord = scalar_holder_constant(1.0, gamma) * c + np.array(
        [wave_holder_constant(ai, bi, gamma) for ai, bi in zip(a, b)]
    )
    L, glob = _block_constants(partition, gamma, coord, np.zeros(dim), None)
    return ObjectiveModel(
        "nonconvex", partition, HolderProfile(gamma, L, glob), ConvexityClass.NONCONVEX,
        c, np.zeros(dim), a, b,
        {"c": c.tolist(), "gamma": gamma, "amplitude": a.tolist(), "frequency": b.tolist()},
    )


FAMILIES = {
    "power": make_power_objective,
    "quadratic": make_quadratic_objective,
    "regularized_power": make_regularized_power_objective,
    "nonconvex": make_nonconvex_objective,
}


def build_objective(family: str, partition: BlockPartition, params: dict, x0=None) -> ObjectiveModel:
    """Construct a family by name, as done from experiment config files."""
    try:
        factory = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown objective family {family!r}; choose from {sorted(FAMILIES)}") from None
    kwargs = dict(params)
    if family == "regularized_power" and "radius" not in kwargs:
        kwargs["x0"] = x0
    return factory(partition.dim, partition, **kwargs)


def verify_block_holder(model: ObjectiveModel, i: int, trials: int, seed: int = 0) -> float:
    """Worst observed ``||grad f(x + P_i u) - grad f(x)|| / ||P_i u||^gamma``.

    Half of the samples reflect block ``i`` through the origin
    (``u = -2 P_i x`` up to a small jitter), where sign changes make the
    power term's ratio approach its constant.  For locally valid models both
    points are kept inside the certified ball.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    part = model.partition
    part._check_index(i)
    rng = np.random.default_rng(seed)
    radius = model.profile.validity_radius
    idx = list(part.blocks[i])
    worst = 0.0
    for t in range(trials):
        scale = 10.0 ** rng.uniform(-3, 1)
        x = scale * rng.standard_normal(model.dim)
        u = np.zeros(model.dim)
        if t % 2:
            u[idx] = -2.0 * x[idx] * (1.0 + 1e-3 * rng.standard_normal(len(idx)))
        else:
            u[idx] = scale * rng.standard_normal(len(idx))
        if radius is not None:
            shrink = max(np.linalg.norm(x), np.linalg.norm(x + u)) / radius
            if shrink > 1:
                x, u = x / shrink, u / shrink
        nu = np.linalg.norm(u)
        if nu == 0:
            continue
        diff = np.linalg.norm(model.gradient(x + u) - model.gradient(x))
        worst = max(worst, diff / nu**model.gamma)
    return worst
