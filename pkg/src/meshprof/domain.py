"""Discrete grid sample space: domains, cuboids of grid cells, and seeded sampling.

The sample space is a finite axis-aligned grid.  A cuboid is a box of whole
grid cells; no subdivision ever goes below one cell.  All types are immutable
values and safe to share between threads; random streams are always passed in
explicitly.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfDomainError, UnsplittableCuboidError


@dataclass(frozen=True)
class GridDomain:
    """An axis-aligned grid of cells covering a world-coordinate box.

    ``extents[a]`` counts cells along axis ``a``; cell index ``i`` maps to the
    world coordinate of its center, ``origin[a] + (i + 0.5) * cell_size[a]``.
    Origin defaults to zero and cells to unit size.
    """

    extents: tuple[int, ...]
    origin: tuple[float, ...] | None = None
    cell_size: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * len(self.extents))
        if self.cell_size is None:
            object.__setattr__(self, "cell_size", (1.0,) * len(self.extents))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "cell_size", tuple(float(c) for c in self.cell_size))
        d = len(self.extents)
        if d < 1:
            raise ValueError("domain needs at least one axis")
        if len(self.origin) != d or len(self.cell_size) != d:
            raise ValueError("extents, origin and cell_size must have equal length")
        if any(e < 1 for e in self.extents):
            raise ValueError(f"extents must be >= 1, got {self.extents}")
        if any(c <= 0 for c in self.cell_size):
            raise ValueError(f"cell sizes must be > 0, got {self.cell_size}")

    @property
    def ndim(self) -> int:
        return len(self.extents)

    @property
    def cell_count(self) -> int:
        return math.prod(self.extents)

    def root_cuboid(self) -> GridCuboid:
        return GridCuboid((0,) * self.ndim, self.extents)

    def contains_index(self, index: tuple[int, ...]) -> bool:
        return len(index) == self.ndim and all(
            0 <= i < e for i, e in zip(index, self.extents)
        )

    def world(self, index: tuple[int, ...]) -> tuple[float, ...]:
        """World coordinate of the center of cell ``index``."""
        return tuple(
            o + (i + 0.5) * c for i, o, c in zip(index, self.origin, self.cell_size)
        )

    def point(self, index: tuple[int, ...]) -> GridPoint:
        index = tuple(int(i) for i in index)
        if not self.contains_index(index):
            raise OutOfDomainError(f"cell index {index} outside extents {self.extents}")
        return GridPoint(index, self.world(index))

    def linear_index(self, index: tuple[int, ...]) -> int:
        """Row-major (C-order) linear index of a cell."""
        lin = 0
        for i, e in zip(index, self.extents):
            lin = lin * e + i
        return lin

    def point_from_linear(self, lin: int) -> GridPoint:
        index = []
        for e in reversed(self.extents):
            index.append(lin % e)
            lin //= e
        return self.point(tuple(reversed(index)))

    def sample_points(self, cuboid: GridCuboid, k: int, rng: np.random.Generator) -> list[GridPoint]:
        """Draw ``min(k, cell_count)`` distinct grid points uniformly from ``cuboid``.

        Sampling is without replacement; asking for at least ``cell_count``
        points returns every cell exactly once (in row-major order, since the
        draw is then exhaustive and order carries no information).  The same
        seed yields the same points on every run.
        """
        lin = sample_cell_indices(cuboid, k, rng)
        sizes = cuboid.extents()
        local = np.unravel_index(lin, sizes)
        return [
            self.point(tuple(int(lo + x[j]) for lo, x in zip(cuboid.lo, local)))
            for j in range(len(lin))
        ]

    def to_json(self) -> str:
        return json.dumps(
            {
                "extents": list(self.extents),
                "origin": list(self.origin),
                "cell_size": list(self.cell_size),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> GridDomain:
        doc = json.loads(text)
        return cls(tuple(doc["extents"]), tuple(doc["origin"]), tuple(doc["cell_size"]))


@dataclass(frozen=True)
class GridCuboid:
    """A box of grid cells: ``lo`` inclusive, ``hi`` exclusive, per axis."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(i) for i in self.lo))
        object.__setattr__(self, "hi", tuple(int(i) for i in self.hi))
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have equal length")
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty cuboid: lo={self.lo} hi={self.hi}")

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def extents(self) -> tuple[int, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @property
    def cell_count(self) -> int:
        return math.prod(self.extents())

    @property
    def grid_diameter(self) -> float:
        """Euclidean length of the extent vector, in grid cells."""
        return math.sqrt(sum((h - l) ** 2 for l, h in zip(self.lo, self.hi)))

    def contains_index(self, index: tuple[int, ...]) -> bool:
        return all(l <= i < h for i, l, h in zip(index, self.lo, self.hi))

    def contains_cuboid(self, other: GridCuboid) -> bool:
        return all(sl <= ol and oh <= sh for sl, sh, ol, oh in
                   zip(self.lo, self.hi, other.lo, other.hi))

    def iter_cells(self):
        """Yield every cell index in the box, row-major."""
        return itertools.product(*(range(l, h) for l, h in zip(self.lo, self.hi)))

    def split_axes(self) -> tuple[int, ...]:
        """Axes that take part in a split (extent >= 2), in axis order."""
        return tuple(a for a, (l, h) in enumerate(zip(self.lo, self.hi)) if h - l >= 2)

    def split_points(self) -> dict[int, int]:
        """Cut position per splittable axis: ``lo + extent // 2``."""
        return {a: self.lo[a] + (self.hi[a] - self.lo[a]) // 2 for a in self.split_axes()}

    def split(self) -> list[GridCuboid]:
        """Cut the box in half along every axis of extent >= 2.

        Axes of extent 1 are left alone, so a box with ``n`` splittable axes
        yields ``2**n`` children.  Children are ordered lexicographically by
        (low half = 0, high half = 1) per axis, first axis most significant.
        The children partition the parent exactly, also on odd extents where
        the low half gets ``extent // 2`` cells.
        """
        axes = self.split_axes()
        if not axes:
            raise UnsplittableCuboidError(f"cannot split single-cell cuboid {self.lo}")
        cuts = self.split_points()
        children = []
        for bits in itertools.product((0, 1), repeat=len(axes)):
            lo = list(self.lo)
            hi = list(self.hi)
            for a, bit in zip(axes, bits):
                if bit == 0:
                    hi[a] = cuts[a]
                else:
                    lo[a] = cuts[a]
            children.append(GridCuboid(tuple(lo), tuple(hi)))
        return children

    def child_index(self, index: tuple[int, ...]) -> int:
        """Position within ``split()`` of the child holding cell ``index``."""
        cuts = self.split_points()
        pos = 0
        for a in self.split_axes():
            pos = pos * 2 + (1 if index[a] >= cuts[a] else 0)
        return pos


@dataclass(frozen=True)
class GridPoint:
    """One grid cell, identified by its index; carries its world coordinate.

    Equality and hashing use the index only, so points are usable as cache
    keys regardless of floating-point coordinates.
    """

    index: tuple[int, ...]
    world: tuple[float, ...] = field(compare=False)


def sample_cell_indices(cuboid: GridCuboid, k: int, rng: np.random.Generator) -> np.ndarray:
    """Row-major cell offsets (within the cuboid) of a without-replacement draw.

    Low-level counterpart of :meth:`GridDomain.sample_points`; the builder uses
    it to avoid materializing points for cached queries.
    """
    if k < 1:
        raise ValueError(f"sample size must be >= 1, got {k}")
    n = cuboid.cell_count
    if k >= n:
        return np.arange(n, dtype=np.int64)
    return rng.choice(n, size=k, replace=False)
