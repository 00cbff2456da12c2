"""The hierarchical subdivision tree: constant-valued leaves over grid cuboids.

A subdivision stores one piecewise-constant approximation of a profiled
quantity.  Leaves tile the domain; every internal node's children are exactly
the canonical split of its box, so lookup is a walk from the root choosing the
one child that contains the query cell.  Instances are immutable and safe to
evaluate from many threads at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from .domain import GridCuboid, GridDomain, GridPoint
from .errors import MeshFormatError, OutOfDomainError


@dataclass(frozen=True)
class Leaf:
    """A constant piece: the mean of the samples that produced it.

    ``lo_seen``/``hi_seen`` are the componentwise extremes of those samples;
    ``saturated`` marks single-cell leaves that were forced by the grid floor
    rather than by the spread test passing.  Derived leaves (from combining
    trees) carry ``samples == 0``; ``degenerate`` flags a ratio leaf whose
    denominator was zero.
    """

    box: GridCuboid
    value: tuple[float, ...]
    samples: int
    lo_seen: tuple[float, ...]
    hi_seen: tuple[float, ...]
    saturated: bool = False
    degenerate: bool = False


@dataclass(frozen=True)
class Branch:
    box: GridCuboid
    children: tuple["Node", ...]


Node = Union[Leaf, Branch]


@dataclass(frozen=True)
class Subdivision:
    """A piecewise-constant approximation over a grid domain.

    ``value_arity`` is the number of components each leaf value carries
    (1 for scalar profiles, 4 for per-side directional profiles in 2D).
    ``metadata`` echoes the build configuration and sample statistics.
    """

    domain: GridDomain
    value_arity: int
    root: Node
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.value_arity < 1:
            raise ValueError("value arity must be >= 1")
        if self.root.box != self.domain.root_cuboid():
            raise ValueError("root box must cover the whole domain")


def constant(domain: GridDomain, value: tuple[float, ...]) -> Subdivision:
    """A single-leaf subdivision holding ``value`` everywhere."""
    value = tuple(float(v) for v in value)
    leaf = Leaf(domain.root_cuboid(), value, 0, value, value)
    return Subdivision(domain, len(value), leaf)


def descend(sub: Subdivision, p: GridPoint) -> tuple[Leaf, int]:
    """Leaf containing ``p`` plus the number of descent steps taken."""
    if not sub.domain.contains_index(p.index):
        raise OutOfDomainError(f"point {p.index} outside domain {sub.domain.extents}")
    node = sub.root
    steps = 0
    while isinstance(node, Branch):
        node = node.children[node.box.child_index(p.index)]
        steps += 1
    return node, steps


def evaluate(sub: Subdivision, p: GridPoint) -> tuple[float, ...]:
    """Constant value of the leaf whose box contains ``p``."""
    leaf, _ = descend(sub, p)
    return leaf.value


def leaves(sub: Subdivision) -> Iterator[tuple[GridCuboid, tuple[float, ...], int]]:
    """Yield (box, value, depth) for each leaf, depth-first in split order."""
    for leaf, depth in iter_leaf_nodes(sub):
        yield leaf.box, leaf.value, depth


def iter_leaf_nodes(sub: Subdivision) -> Iterator[tuple[Leaf, int]]:
    stack: list[tuple[Node, int]] = [(sub.root, 0)]
    while stack:
        node, depth = stack.pop()
        if isinstance(node, Leaf):
            yield node, depth
        else:
            stack.extend((c, depth + 1) for c in reversed(node.children))


def leaf_count(sub: Subdivision) -> int:
    return sum(1 for _ in iter_leaf_nodes(sub))


def depth(sub: Subdivision) -> int:
    return max(d for _, d in iter_leaf_nodes(sub))


def min_max(sub: Subdivision) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Componentwise extremes of the leaf values (the best/worst case pieces)."""
    lo = [math.inf] * sub.value_arity
    hi = [-math.inf] * sub.value_arity
    for _, value, _ in leaves(sub):
        for j, v in enumerate(value):
            lo[j] = min(lo[j], v)
            hi[j] = max(hi[j], v)
    return tuple(lo), tuple(hi)


def to_dense(sub: Subdivision, max_cells: int = 10**6) -> np.ndarray:
    """Materialize the subdivision on the full grid.

    Returns an array of shape ``extents`` for scalar trees and
    ``extents + (arity,)`` otherwise.  Guarded: refuses domains larger than
    ``max_cells`` cells.
    """
    n = sub.domain.cell_count
    if n > max_cells:
        raise ValueError(f"domain has {n} cells, dense guard is {max_cells}")
    shape = sub.domain.extents + (sub.value_arity,)
    out = np.empty(shape, dtype=np.float64)
    for box, value, _ in leaves(sub):
        sl = tuple(slice(l, h) for l, h in zip(box.lo, box.hi))
        out[sl] = value
    if sub.value_arity == 1:
        return out[..., 0]
    return out


# -- JSON serialization ---------------------------------------------------
#
# Layout:  {"domain": {...}, "value_arity": m, "metadata": {...}, "root": node}
# node:    {"box": {"lo": [...], "hi": [...]}, "children": [node, ...]}
#     or   {"box": ..., "value": [...], "samples": n,
#           "lo_seen": [...], "hi_seen": [...]}   (+ "saturated"/"degenerate": true)
#
# Floats go through repr-based JSON encoding, which round-trips bit-exactly.


def _node_to_doc(node: Node) -> dict:
    box = {"lo": list(node.box.lo), "hi": list(node.box.hi)}
    if isinstance(node, Branch):
        return {"box": box, "children": [_node_to_doc(c) for c in node.children]}
    doc = {
        "box": box,
        "value": list(node.value),
        "samples": node.samples,
        "lo_seen": list(node.lo_seen),
        "hi_seen": list(node.hi_seen),
    }
    if node.saturated:
        doc["saturated"] = True
    if node.degenerate:
        doc["degenerate"] = True
    return doc


def serialize(sub: Subdivision) -> str:
    doc = {
        "domain": {
            "extents": list(sub.domain.extents),
            "origin": list(sub.domain.origin),
            "cell_size": list(sub.domain.cell_size),
        },
        "value_arity": sub.value_arity,
        "metadata": sub.metadata,
        "root": _node_to_doc(sub.root),
    }
    return json.dumps(doc, indent=2)


def _expect(doc, key: str, types, path: str):
    if not isinstance(doc, dict):
        raise MeshFormatError(path, f"expected object, got {type(doc).__name__}")
    if key not in doc:
        raise MeshFormatError(f"{path}.{key}", "missing")
    value = doc[key]
    if not isinstance(value, types):
        raise MeshFormatError(f"{path}.{key}", f"unexpected type {type(value).__name__}")
    return value


def _floats(doc, key: str, arity: int, path: str) -> tuple[float, ...]:
    raw = _expect(doc, key, list, path)
    if len(raw) != arity:
        raise MeshFormatError(f"{path}.{key}", f"expected {arity} components, got {len(raw)}")
    out = []
    for i, v in enumerate(raw):
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise MeshFormatError(f"{path}.{key}[{i}]", "not a finite number")
        out.append(float(v))
    return tuple(out)


def _node_from_doc(doc, box: GridCuboid, arity: int, path: str) -> Node:
    got = _expect(doc, "box", dict, path)
    lo = _expect(got, "lo", list, f"{path}.box")
    hi = _expect(got, "hi", list, f"{path}.box")
    if tuple(lo) != box.lo or tuple(hi) != box.hi:
        raise MeshFormatError(f"{path}.box", f"expected lo={box.lo} hi={box.hi}, got lo={tuple(lo)} hi={tuple(hi)}")
    if "children" in doc:
        expected = box.split()
        raw = _expect(doc, "children", list, path)
        if len(raw) != len(expected):
            raise MeshFormatError(
                f"{path}.children",
                f"expected {len(expected)} children for this box, got {len(raw)}",
            )
        children = tuple(
            _node_from_doc(c, b, arity, f"{path}.children[{i}]")
            for i, (c, b) in enumerate(zip(raw, expected))
        )
        return Branch(box, children)
    value = _floats(doc, "value", arity, path)
    samples = _expect(doc, "samples", int, path)
    lo_seen = _floats(doc, "lo_seen", arity, path)
    hi_seen = _floats(doc, "hi_seen", arity, path)
    saturated = bool(doc.get("saturated", False))
    degenerate = bool(doc.get("degenerate", False))
    return Leaf(box, value, samples, lo_seen, hi_seen, saturated, degenerate)


def deserialize(text: str) -> Subdivision:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise MeshFormatError("$", f"invalid JSON: {e}") from e
    dom_doc = _expect(doc, "domain", dict, "$")
    try:
        domain = GridDomain(
            tuple(_expect(dom_doc, "extents", list, "$.domain")),
            tuple(_expect(dom_doc, "origin", list, "$.domain")),
            tuple(_expect(dom_doc, "cell_size", list, "$.domain")),
        )
    except (TypeError, ValueError) as e:
        raise MeshFormatError("$.domain", str(e)) from e
    arity = _expect(doc, "value_arity", int, "$")
    if arity < 1:
        raise MeshFormatError("$.value_arity", f"must be >= 1, got {arity}")
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise MeshFormatError("$.metadata", "expected object")
    root = _node_from_doc(_expect(doc, "root", dict, "$"), domain.root_cuboid(), arity, "$.root")
    return Subdivision(domain, arity, root, metadata)
