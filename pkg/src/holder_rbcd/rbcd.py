"""Randomized block coordinate descent with Holder-adapted step sizes.

At iteration ``k`` a block ``i`` is drawn with probability
``L_i^alpha / S_alpha`` and only that block moves:

    x+ = x - ||grad_i f(x)||^(nu-2) / L_i^(nu-1) * grad_i f(x).

Randomness: trajectory ``j`` of an experiment seeded with ``seed`` draws
from ``PCG64(SeedSequence(seed, spawn_key=(j,)))``.  Block indices for the
whole run are drawn up front, so traces do not depend on anything but
``(seed, j)`` and are reproducible across platforms and execution order.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .norms import norm_from_block_norms
from .objectives import HolderProfile, ObjectiveModel

CSV_COLUMNS = ("k", "block", "f", "block_grad_norm", "step_len")


class NumericalError(RuntimeError):
    """A non-finite value showed up during a run."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration


@dataclass(frozen=True)
class SolverConfig:
    alpha: float
    max_iters: int
    seed: int = 0
    record_full_iterates: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0,1], got {self.alpha}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class IterationRecord:
    """State at iterate ``k`` and the move made from it.

    ``block``, ``block_grad_norm`` and ``step_len`` are ``None`` on the
    terminal record.  ``grad_norm`` is ``||grad f(x^k)||_{1+alpha-nu, nu}``.
    """

    k: int
    f: float
    grad_norm: float
    block: int | None = None
    block_grad_norm: float | None = None
    step_len: float | None = None
    x: list[float] | None = None


@dataclass
class RunTrace:
    records: list[IterationRecord]
    x_final: np.ndarray
    config: SolverConfig
    model_id: str
    trajectory: int = 0

    @property
    def f_values(self) -> np.ndarray:
        return np.array([r.f for r in self.records])

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.records])

    @property
    def blocks(self) -> list[int]:
        return [r.block for r in self.records if r.block is not None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            w.writerow([
                r.k,
                "" if r.block is None else r.block,
                repr(r.f),
                "" if r.block_grad_norm is None else repr(r.block_grad_norm),
                "" if r.step_len is None else repr(r.step_len),
            ])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "model": self.model_id,
            "trajectory": self.trajectory,
            "config": asdict(self.config),
            "x_final": [float(v) for v in self.x_final],
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=False)

    @classmethod
    def from_dict(cls, data: dict) -> "RunTrace":
        return cls(
            [IterationRecord(**r) for r in data["records"]],
            np.asarray(data["x_final"], dtype=float),
            SolverConfig(**data["config"]),
            data["model"],
            data.get("trajectory", 0),
        )


def sampling_distribution(profile: HolderProfile | Sequence[float], alpha: float) -> np.ndarray:
    """Block probabilities ``L_i^alpha / sum_j L_j^alpha``."""
    L = profile.block_constants if isinstance(profile, HolderProfile) else profile
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        raise ValueError("need at least one block constant")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0,1], got {alpha}")
    w = np.power(L, alpha)
    return w / w.sum()


def trajectory_rng(seed: int, trajectory: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(trajectory),))))


def _step_batch(model: ObjectiveModel, X: np.ndarray, G: np.ndarray, i: int) -> np.ndarray:
    """Apply the block-``i`` update to every row of ``X`` given gradients ``G``."""
    idx = list(model.partition.blocks[i])
    nu = model.profile.nu
    L = model.profile.block_constants[i]
    gi = G[..., idx]
    n = np.sqrt(np.sum(gi * gi, axis=-1))
    if nu == 2.0:
        t = np.full_like(n, 1.0 / L)
    else:
        # zero block gradient means no move; avoid 0**(nu-2) * 0 edge cases
        t = np.power(n, nu - 2.0, out=np.zeros_like(n), where=n > 0) / L ** (nu - 1.0)
    out = X.copy()
    out[..., idx] = X[..., idx] - t[..., None] * gi
    return out


def rbcd_step(model: ObjectiveModel, x, i: int) -> np.ndarray:
    """One update of block ``i`` from ``x``; returns ``x`` unchanged if ``grad_i f(x) = 0``."""
    x = model._check(x)
    model.partition._check_index(i)
    if x.ndim != 1:
        raise ValueError("rbcd_step takes a single vector")
    return _step_batch(model, x, model.gradient(x), i)


def guaranteed_block_decrease(model: ObjectiveModel, x, i: int) -> float:
    """Guaranteed decrease ``||grad_i f(x)||^nu / (nu L_i^(nu-1))`` of a block step."""
    nu = model.profile.nu
    L = model.profile.block_constants[i]
    n = float(np.linalg.norm(model.block_gradient(x, i)))
    return n**nu / (nu * L ** (nu - 1.0))


def run(model: ObjectiveModel, config: SolverConfig, x0, trajectory: int = 0) -> RunTrace:
    """Run ``config.max_iters`` iterations from ``x0``."""
    x = model._check(x0).astype(float).copy()
    if x.ndim != 1:
        raise ValueError("x0 must be a single vector")
    prof = model.profile
    p = sampling_distribution(prof, config.alpha)
    rng = trajectory_rng(config.seed, trajectory)
    draws = rng.choice(prof.m, size=config.max_iters, p=p)
    part = model.partition
    weight_exp = 1.0 + config.alpha - prof.nu
    records: list[IterationRecord] = []
    for k in range(config.max_iters + 1):
        f = model.value(x)
        g = model.gradient(x)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            raise NumericalError("non-finite objective or gradient", k)
        bn = part.block_norms(g)
        rec = IterationRecord(
            k=k,
            f=f,
            grad_norm=float(norm_from_block_norms(bn, prof.block_constants, weight_exp, prof.nu)),
            x=[float(v) for v in x] if config.record_full_iterates else None,
        )
        records.append(rec)
        if k == config.max_iters:
            break
        i = int(draws[k])
        x_new = _step_batch(model, x, g, i)
        if not np.all(np.isfinite(x_new)):
            raise NumericalError("non-finite iterate", k + 1)
        rec.block = i
        rec.block_grad_norm = float(bn[i])
        rec.step_len = float(np.linalg.norm(x_new - x))
        x = x_new
    return RunTrace(records, x, config, model.name, trajectory)


def run_many(model: ObjectiveModel, config: SolverConfig, x0, trajectories: int) -> list[RunTrace]:
    """Independent trajectories ``0..trajectories-1`` sharing ``config.seed``."""
    return [run(model, config, x0, j) for j in range(trajectories)]
