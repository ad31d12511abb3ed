"""Uniform-grid spatial hash; exact pair queries within a radius.

The index snapshots the positions it was built from and maps integer cell
coordinates to particle-index lists (dense array over the occupied bounding
box when compact, sparse packed keys otherwise; both emit the same pair
set).  Correctness requires cell_size >= query radius so a one-ring lookup
covers everything.  Queries are exact, never approximate: the emitted pair
set equals the brute-force all-pairs filter for any input, with a closed
boundary (distance == radius is included).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

#: switch to sparse hashing once the occupied box exceeds this many cells
DENSE_CELL_BUDGET = 1 << 22


class ContractViolation(ValueError):
    """A query was made outside the index's validity envelope."""


@dataclass
class PairSet:
    """All pairs (i, j) with i < j and distance <= radius, lexicographic in
    (i, j).  `unit` rows are (x_i - x_j)/D; zero where D == 0."""

    i: np.ndarray
    j: np.ndarray
    distance: np.ndarray
    unit: np.ndarray

    def __len__(self) -> int:
        return len(self.i)

    def __iter__(self):
        for k in range(len(self.i)):
            yield int(self.i[k]), int(self.j[k]), float(self.distance[k]), self.unit[k]

    def index_pairs(self) -> set[tuple[int, int]]:
        return set(zip(self.i.tolist(), self.j.tolist()))


class NeighborIndex:
    """Immutable index over a snapshot of one positions array."""

    def __init__(self, positions, cell_size, dense, coords, order, starts, grid_meta):
        self.positions = positions
        self.cell_size = cell_size
        self._dense = dense
        self._coords = coords
        self._order = order
        self._starts = starts
        self._grid_meta = grid_meta  # (cmin, shape) dense | uniq_keys sparse

    @classmethod
    def build(cls, positions: np.ndarray, cell_size: float, mode: str = "auto") -> "NeighborIndex":
        if cell_size <= 0:
            raise ValueError(f"cell_size must be > 0, got {cell_size}")
        positions = np.array(positions, dtype=np.float64)  # snapshot
        if positions.ndim != 2 or positions.shape[1] not in (2, 3):
            raise ValueError(f"positions must be (n, 2) or (n, 3), got {positions.shape}")
        if not np.all(np.isfinite(positions)):
            bad = int(np.argwhere(~np.isfinite(positions))[0][0])
            raise ValueError(f"non-finite position at particle {bad}")
        n = len(positions)
        if n == 0:
            empty = np.empty(0, dtype=np.int64)
            return cls(positions, float(cell_size), True, np.empty((0, 3), dtype=np.int64),
                       empty, np.zeros(1, dtype=np.int64),
                       (np.zeros(3, dtype=np.int64), np.ones(3, dtype=np.int64)))
        coords = _kernels.cell_coords(positions, float(cell_size))
        cmin, cmax = _kernels.coord_bounds(coords)
        shape = cmax - cmin + 1
        ncells = int(shape[0]) * int(shape[1]) * int(shape[2])
        # dense tables cost O(ncells) per build; not worth it for clouds
        # much sparser than ~1 particle per 32 cells
        use_dense = 0 < ncells <= max(4096, min(DENSE_CELL_BUDGET, 32 * n))
        if mode == "dense":
            use_dense = True
        elif mode == "sparse":
            use_dense = False
        if use_dense:
            ids = _kernels.dense_cell_ids(coords, cmin, shape)
            order, starts = _kernels.counting_sort_cells(ids, ncells)
            return cls(positions, float(cell_size), True, coords, order, starts, (cmin, shape))
        keys = _kernels.pack_keys(coords)
        order = np.argsort(keys, kind="stable").astype(np.int64)
        uniq_keys, first = np.unique(keys[order], return_index=True)
        starts = np.concatenate([first, [n]]).astype(np.int64)
        return cls(positions, float(cell_size), False, coords, order, starts, uniq_keys)

    def pairs_within(self, radius: float) -> PairSet:
        if radius > self.cell_size:
            raise ContractViolation(
                f"query radius {radius} exceeds cell_size {self.cell_size}"
            )
        n = len(self.positions)
        dim = self.positions.shape[1] if n else 2
        if n < 2:
            return _empty_pairs(dim)
        if self._dense:
            cmin, shape = self._grid_meta
            raw = _kernels.pairs_dense(
                self.positions, self._coords, self._order, self._starts,
                cmin, shape, float(radius),
            )
        else:
            raw = _kernels.pairs_sparse(
                self.positions, self._coords, self._order, self._starts,
                self._grid_meta, float(radius),
            )
        return PairSet(*raw)


def brute_force_pairs(positions: np.ndarray, radius: float) -> PairSet:
    """All-pairs O(n^2) oracle with the same distance arithmetic."""
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    return PairSet(*_kernels.brute_pairs(positions, float(radius)))


def _empty_pairs(dim: int) -> PairSet:
    return PairSet(
        np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64),
        np.empty(0), np.empty((0, dim)),
    )
