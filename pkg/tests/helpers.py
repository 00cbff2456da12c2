"""Shared test utilities: random tree construction and dense oracles."""

from __future__ import annotations

import numpy as np

from meshprof.domain import GridCuboid, GridDomain
from meshprof.mesh import Branch, Leaf, Subdivision


def random_subdivision(rng: np.random.Generator, domain: GridDomain,
                       arity: int = 1, split_prob: float = 0.55,
                       max_depth: int = 6, value_scale: float = 10.0) -> Subdivision:
    """A structurally valid random tree with random constant leaf values."""

    def make(box: GridCuboid, depth: int):
        splittable = box.cell_count > 1
        if splittable and depth < max_depth and rng.random() < split_prob:
            return Branch(box, tuple(make(b, depth + 1) for b in box.split()))
        value = tuple(float(v) for v in rng.normal(0.0, value_scale, size=arity))
        return Leaf(box, value, 1, value, value)

    return Subdivision(domain, arity, make(domain.root_cuboid(), 0))


def dense_eval(sub: Subdivision) -> np.ndarray:
    """Evaluate every grid cell by leaf iteration, independent of to_dense."""
    from meshprof.mesh import leaves

    shape = sub.domain.extents + ((sub.value_arity,) if sub.value_arity > 1 else ())
    out = np.full(shape, np.nan)
    for box, value, _ in leaves(sub):
        block = tuple(slice(l, h) for l, h in zip(box.lo, box.hi))
        out[block] = value if sub.value_arity > 1 else value[0]
    return out
