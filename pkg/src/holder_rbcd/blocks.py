"""Coordinate block partitions of R^d and their orthogonal projections."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class BlockPartition:
    """Ordered split of the coordinates ``0..dim-1`` into ``m`` disjoint blocks.

    Block order matters: block ``i`` is paired with the ``i``-th smoothness
    constant everywhere else in the package, so two partitions with the same
    blocks in a different order compare unequal.
    """

    blocks: tuple[tuple[int, ...], ...]
    dim: int
    _indicator: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, blocks: Iterable[Iterable[int]], dim: int | None = None):
        blocks = tuple(tuple(int(j) for j in b) for b in blocks)
        if not blocks:
            raise ValueError("a partition needs at least one block")
        if any(len(b) == 0 for b in blocks):
            raise ValueError("every block must be nonempty")
        flat = [j for b in blocks for j in b]
        if dim is None:
            dim = len(flat)
        dim = int(dim)
        if dim < 1:
            raise ValueError("dim must be positive")
        if len(set(flat)) != len(flat):
            raise ValueError("blocks must be pairwise disjoint")
        if sorted(flat) != list(range(dim)):
            raise ValueError(f"blocks must cover exactly the coordinates 0..{dim - 1}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "dim", dim)
        ind = np.zeros((len(blocks), dim))
        for i, b in enumerate(blocks):
            ind[i, list(b)] = 1.0
        ind.setflags(write=False)
        object.__setattr__(self, "_indicator", ind)

    @classmethod
    def singletons(cls, dim: int) -> "BlockPartition":
        return cls([[j] for j in range(dim)], dim)

    @classmethod
    def contiguous(cls, sizes: Sequence[int]) -> "BlockPartition":
        blocks, start = [], 0
        for s in sizes:
            blocks.append(list(range(start, start + s)))
            start += s
        return cls(blocks, start)

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def indicator(self) -> np.ndarray:
        """``(m, dim)`` 0/1 matrix whose row ``i`` marks block ``i``."""
        return self._indicator

    def _check_index(self, i: int) -> int:
        if not isinstance(i, (int, np.integer)) or not 0 <= i < self.m:
            raise IndexError(f"block index {i} out of range for m={self.m}")
        return int(i)

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"expected trailing dimension {self.dim}, got shape {x.shape}")
        return x

    def project(self, i: int, x) -> np.ndarray:
        """Return ``P_i x``: block ``i`` copied, every other coordinate zero."""
        i = self._check_index(i)
        x = self._check_vector(x)
        out = np.zeros_like(x)
        idx = list(self.blocks[i])
        out[..., idx] = x[..., idx]
        return out

    def reconstruct(self, x) -> np.ndarray:
        """Sum of all block projections; equals ``x`` exactly."""
        x = self._check_vector(x)
        out = np.zeros_like(x)
        for i in range(self.m):
            idx = list(self.blocks[i])
            out[..., idx] += x[..., idx]
        return out

    def block_norms(self, x) -> np.ndarray:
        """Euclidean norms ``||P_i x||`` for every block, over leading axes."""
        x = self._check_vector(x)
        return np.sqrt(np.square(x) @ self._indicator.T)

    def to_list(self) -> list[list[int]]:
        return [list(b) for b in self.blocks]

    @classmethod
    def from_list(cls, blocks: Sequence[Sequence[int]], dim: int | None = None) -> "BlockPartition":
        return cls(blocks, dim)
