"""Algebra over subdivisions: differences, averages, costs, and selection.

Everything here consumes finished subdivisions and produces either derived
subdivisions (pointwise combination, cost composition, per-cell selection
labels) or plain numbers (weighted averages, best parameters, error
statistics).  Derived trees live on the common refinement of their inputs,
computed by descending all input trees simultaneously — the canonical split
rule guarantees that boxes at equal depth coincide, so refinement is a walk,
not a geometric intersection problem.

All operations are pure; inputs are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .builder import ProfileFunction
from .domain import GridDomain, GridPoint
from .mesh import Branch, Leaf, Node, Subdivision, evaluate, leaves, to_dense

_SIDE_COUNT = 4           # value components of a directional subdivision
_SECTOR_DEG = 90.0        # angular width of one side's sector


# -- Distributions over grid cells ----------------------------------------


@dataclass(frozen=True)
class Uniform:
    """Every grid cell carries the same weight."""


@dataclass(frozen=True)
class WeightTable:
    """Piecewise-constant cell weights given on a (usually coarser) grid.

    A cell of the target domain gets the weight of the table cell its center
    falls into.  Weights must be nonnegative with at least one positive
    entry; normalization happens at use time.
    """

    domain: GridDomain
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != self.domain.cell_count:
            raise ValueError(
                f"{len(self.weights)} weights for {self.domain.cell_count} table cells")
        if any(w < 0 for w in self.weights) or not any(w > 0 for w in self.weights):
            raise ValueError("weights must be nonnegative and not all zero")

    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64).reshape(self.domain.extents)


Distribution = Uniform | WeightTable


def _check_table_covers(table: WeightTable, domain: GridDomain) -> None:
    if table.domain.ndim != domain.ndim:
        raise ValueError("weight table dimensionality differs from the domain")
    for a in range(domain.ndim):
        first = domain.origin[a] + 0.5 * domain.cell_size[a]
        last = domain.origin[a] + (domain.extents[a] - 0.5) * domain.cell_size[a]
        t_lo = table.domain.origin[a]
        t_hi = t_lo + table.domain.extents[a] * table.domain.cell_size[a]
        if first < t_lo or last >= t_hi:
            raise ValueError(
                f"weight table does not cover the domain along axis {a}")


def _center_count(lo: int, hi: int, origin: float, cell: float,
                  t_lo: float, t_hi: float) -> int:
    """How many cell centers with index in [lo, hi) fall into world [t_lo, t_hi)."""
    a = (t_lo - origin) / cell - 0.5
    b = (t_hi - origin) / cell - 0.5
    return max(0, min(hi, math.ceil(b)) - max(lo, math.ceil(a)))


def _leaf_mass(box, dist: Distribution, domain: GridDomain) -> float:
    if isinstance(dist, Uniform):
        return float(box.cell_count)
    table = dist.domain
    w = dist.array()
    ranges = []
    counts = []
    for a in range(domain.ndim):
        lo_w = domain.origin[a] + (box.lo[a] + 0.5) * domain.cell_size[a]
        hi_w = domain.origin[a] + (box.hi[a] - 0.5) * domain.cell_size[a]
        j_lo = max(0, int((lo_w - table.origin[a]) // table.cell_size[a]))
        j_hi = min(table.extents[a] - 1, int((hi_w - table.origin[a]) // table.cell_size[a]))
        if j_hi < j_lo:
            return 0.0
        ranges.append((j_lo, j_hi))
        counts.append(np.array([
            _center_count(box.lo[a], box.hi[a], domain.origin[a], domain.cell_size[a],
                          table.origin[a] + j * table.cell_size[a],
                          table.origin[a] + (j + 1) * table.cell_size[a])
            for j in range(j_lo, j_hi + 1)
        ], dtype=np.float64))
    block = w[tuple(slice(j_lo, j_hi + 1) for j_lo, j_hi in ranges)]
    return float((block * reduce(np.multiply.outer, counts)).sum())


def weighted_average(sub: Subdivision, dist: Distribution = Uniform()) -> tuple[float, ...]:
    """Average of the subdivision under a cell-weight distribution.

    Under ``Uniform`` this is exactly the mean of ``evaluate`` over all grid
    cells; a ``WeightTable`` reweights cells by the table cell containing
    them.  Raises on a distribution with zero total mass over the domain.
    """
    if isinstance(dist, WeightTable):
        _check_table_covers(dist, sub.domain)
    total = _leaf_mass(sub.domain.root_cuboid(), dist, sub.domain)
    if total <= 0.0:
        raise ValueError("distribution has zero total mass over the domain")
    acc = np.zeros(sub.value_arity, dtype=np.float64)
    for box, value, _depth in leaves(sub):
        mass = _leaf_mass(box, dist, sub.domain)
        if mass:
            acc += np.asarray(value) * mass
    return tuple(float(v) for v in acc / total)


# -- Pointwise combination on the common refinement ------------------------


_BINARY_OPS = ("subtract", "add", "min", "max", "ratio")


def _derived_leaf(box, value: tuple[float, ...], degenerate: bool = False) -> Leaf:
    return Leaf(box, value, 0, value, value, degenerate=degenerate)


def _as_children(node: Node, box) -> tuple[Node, ...]:
    if isinstance(node, Branch):
        return node.children
    return tuple(_derived_leaf(b, node.value) for b in box.split())


def _merge(nodes: Sequence[Node],
           make_leaf: Callable[[object, Sequence[tuple[float, ...]]], Leaf]) -> Node:
    if all(isinstance(n, Leaf) for n in nodes):
        return make_leaf(nodes[0].box, [n.value for n in nodes])
    box = nodes[0].box
    child_sets = [_as_children(n, box) for n in nodes]
    return Branch(box, tuple(_merge(group, make_leaf) for group in zip(*child_sets)))


def _require_same_domain(subs: Sequence[Subdivision]) -> GridDomain:
    domain = subs[0].domain
    for s in subs[1:]:
        if s.domain != domain:
            raise ValueError("subdivisions live on different grid domains")
    return domain


def combine(a: Subdivision, b: Subdivision, op: str) -> Subdivision:
    """Componentwise op of two subdivisions on their common refinement.

    ``op`` is one of subtract, add, min, max, ratio.  The result is exact:
    at every grid point it equals the op applied to the two evaluations.
    Ratio leaves whose denominator is zero get value 0 and the degenerate
    flag.
    """
    domain = _require_same_domain([a, b])
    if a.value_arity != b.value_arity:
        raise ValueError(f"value arity mismatch: {a.value_arity} vs {b.value_arity}")
    if op not in _BINARY_OPS:
        raise ValueError(f"unknown op {op!r}; expected one of {_BINARY_OPS}")

    def make_leaf(box, values):
        va, vb = values
        if op == "ratio":
            out, bad = [], False
            for x, y in zip(va, vb):
                if y == 0.0:
                    out.append(0.0)
                    bad = True
                else:
                    out.append(x / y)
            return _derived_leaf(box, tuple(out), degenerate=bad)
        fn = {
            "subtract": lambda x, y: x - y,
            "add": lambda x, y: x + y,
            "min": min,
            "max": max,
        }[op]
        return _derived_leaf(box, tuple(fn(x, y) for x, y in zip(va, vb)))

    root = _merge([a.root, b.root], make_leaf)
    return Subdivision(domain, a.value_arity, root, {"derived": f"combine:{op}"})


def reduce_components(sub: Subdivision, how: str = "max") -> Subdivision:
    """Fold an m-vector subdivision to a scalar one (max/min/mean/sum).

    All four folds are monotone in each component, so the per-leaf sample
    bounds fold along with the value and stay valid.
    """
    folds = {"max": max, "min": min, "mean": lambda v: sum(v) / len(v), "sum": sum}
    if how not in folds:
        raise ValueError(f"unknown reduction {how!r}")
    g = folds[how]

    def walk(node: Node) -> Node:
        if isinstance(node, Branch):
            return Branch(node.box, tuple(walk(c) for c in node.children))
        return Leaf(node.box, (float(g(node.value)),), node.samples,
                    (float(g(node.lo_seen)),), (float(g(node.hi_seen)),),
                    node.saturated, node.degenerate)

    return Subdivision(sub.domain, 1, walk(sub.root),
                       {"derived": f"reduce:{how}"})


# -- Cost models ----------------------------------------------------------


@dataclass(frozen=True)
class UnitCost:
    name: str
    per_unit: float
    units: str = "ms"

    def __post_init__(self):
        if self.per_unit < 0:
            raise ValueError(f"unit cost {self.name} must be >= 0")


@dataclass(frozen=True)
class CostModel:
    """Per-operation unit costs plus the rule for combining them.

    ``sequential`` sums the per-operation costs; ``parallel`` takes their
    maximum (the slowest stream dominates).
    """

    unit_costs: tuple[UnitCost, ...]
    combinator: str = "sequential"

    def __post_init__(self):
        object.__setattr__(self, "unit_costs", tuple(self.unit_costs))
        if not self.unit_costs:
            raise ValueError("cost model needs at least one unit cost")
        names = [u.name for u in self.unit_costs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate unit cost names in {names}")
        if self.combinator not in ("sequential", "parallel"):
            raise ValueError(f"unknown combinator {self.combinator!r}")

    def apply(self, counts: Sequence[float]) -> float:
        terms = [u.per_unit * c for u, c in zip(self.unit_costs, counts)]
        return sum(terms) if self.combinator == "sequential" else max(terms)

    def describe(self) -> dict:
        return {
            "combinator": self.combinator,
            "unit_costs": [[u.name, u.per_unit, u.units] for u in self.unit_costs],
        }


def cost_estimate(counts: Sequence[Subdivision], model: CostModel) -> Subdivision:
    """Compose per-operation count subdivisions into one cost subdivision.

    Takes one scalar count tree per unit cost, in model order, and returns
    their common refinement with leaf value t_1*f_1 + ... (sequential) or
    max_i t_i*f_i (parallel).
    """
    if len(counts) != len(model.unit_costs):
        raise ValueError(
            f"{len(counts)} count subdivisions for {len(model.unit_costs)} unit costs")
    domain = _require_same_domain(counts)
    for s in counts:
        if s.value_arity != 1:
            raise ValueError("count subdivisions must be scalar")

    def make_leaf(box, values):
        return _derived_leaf(box, (model.apply([v[0] for v in values]),))

    root = _merge([s.root for s in counts], make_leaf)
    return Subdivision(domain, 1, root,
                       {"derived": "cost_estimate", "model": model.describe()})


# -- Selection ------------------------------------------------------------


def _selection_key(value: tuple[float, ...], view) -> float:
    if view is None:
        if len(value) != 1:
            raise ValueError(
                "selection over vector subdivisions needs a view (direction, fov)")
        return value[0]
    direction, fov = view
    w = view_weights(direction, fov)
    if len(value) != len(w):
        raise ValueError(f"view selection needs {len(w)} components, got {len(value)}")
    return sum(wi * vi for wi, vi in zip(w, value))


def _argmin(keys: Sequence[float]) -> int:
    best = 0
    for i in range(1, len(keys)):
        if keys[i] < keys[best]:
            best = i
    return best


def select(candidates: Sequence[Subdivision], p: GridPoint,
           view: tuple[float, float] | None = None) -> tuple[int, tuple[float, ...]]:
    """Pick the candidate predicting the smallest value at ``p``.

    Scalar candidates compare directly; 4-component directional candidates
    compare through ``evaluate_view`` with the given (direction, fov).  Ties
    go to the lowest index.  Returns (index, winning value vector).
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    _require_same_domain(candidates)
    values = [evaluate(c, p) for c in candidates]
    best = _argmin([_selection_key(v, view) for v in values])
    return best, values[best]


def selection_map(candidates: Sequence[Subdivision],
                  view: tuple[float, float] | None = None) -> Subdivision:
    """Label every region with the index of its winning candidate.

    The result is a scalar subdivision over the common refinement whose leaf
    values are candidate indices (as floats); ties go to the lowest index.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    domain = _require_same_domain(candidates)
    arity = candidates[0].value_arity
    for c in candidates:
        if c.value_arity != arity:
            raise ValueError("candidates must share one value arity")

    def make_leaf(box, values):
        best = _argmin([_selection_key(v, view) for v in values])
        return _derived_leaf(box, (float(best),))

    root = _merge([c.root for c in candidates], make_leaf)
    return Subdivision(domain, 1, root,
                       {"derived": "selection_map", "candidates": len(candidates)})


# -- Parameter optimization -----------------------------------------------


def parameter_sweep(builds: Sequence[tuple[float, Subdivision]],
                    dist: Distribution = Uniform()) -> tuple[float, list[tuple[float, tuple[float, ...]]]]:
    """Average each parameter's subdivision and return the winner plus the table.

    ``builds`` pairs a parameter value with the subdivision built under it.
    The winner minimizes the weighted average; exact ties go to the smaller
    parameter value.
    """
    if not builds:
        raise ValueError("need at least one (parameter, subdivision) pair")
    table = [(param, weighted_average(sub, dist)) for param, sub in builds]
    ordered = sorted(table, key=lambda row: row[0])
    best_param, best_avg = ordered[0]
    for param, avg in ordered[1:]:
        if avg < best_avg:
            best_param, best_avg = param, avg
    return best_param, table


def parameter_profile(sub: Subdivision, parameter_axis: int,
                      max_cells: int = 10 ** 6) -> np.ndarray:
    """Best parameter cell index per input cell, from a scalar subdivision.

    The domain is read as (input axes x parameter axis); for every
    combination of input cells the returned array holds the index along
    ``parameter_axis`` minimizing the subdivision's value.  Ties go to the
    lowest parameter index.
    """
    if sub.value_arity != 1:
        raise ValueError("parameter_profile needs a scalar subdivision")
    if sub.domain.ndim < 2:
        raise ValueError("domain needs at least one input axis and one parameter axis")
    if not 0 <= parameter_axis < sub.domain.ndim:
        raise ValueError(f"no axis {parameter_axis} in a {sub.domain.ndim}-d domain")
    dense = to_dense(sub, max_cells)
    return np.argmin(dense, axis=parameter_axis)


# -- Direction-dependent evaluation ---------------------------------------


def view_weights(direction_deg: float, fov_deg: float) -> tuple[float, ...]:
    """Angular overlap of a view cone with the four side sectors, as fractions.

    Side k's sector spans [90k - 45, 90k + 45) degrees (east, north, west,
    south).  The cone is [direction - fov/2, direction + fov/2); each weight
    is the fraction of the cone falling in that sector, so the weights are
    nonnegative and sum to 1.
    """
    if not 0.0 < fov_deg <= 360.0:
        raise ValueError(f"fov must lie in (0, 360], got {fov_deg}")
    direction = float(direction_deg) % 360.0
    lo = direction - fov_deg / 2.0
    hi = direction + fov_deg / 2.0
    overlaps = []
    for k in range(_SIDE_COUNT):
        s_lo = _SECTOR_DEG * k - _SECTOR_DEG / 2.0
        overlap = 0.0
        for shift in (-360.0, 0.0, 360.0):
            a = max(lo, s_lo + shift)
            b = min(hi, s_lo + shift + _SECTOR_DEG)
            if b > a:
                overlap += b - a
        overlaps.append(overlap)
    # Normalizing by the summed overlap rather than the nominal fov keeps
    # the weights summing to exactly 1 even when boundary clipping rounds
    # the individual pieces.
    total = sum(overlaps)
    return tuple(o / total for o in overlaps)


def evaluate_view(sub: Subdivision, p: GridPoint, direction_deg: float,
                  fov_deg: float) -> float:
    """Blend a 4-component directional subdivision over a view cone at ``p``."""
    if sub.value_arity != _SIDE_COUNT:
        raise ValueError(
            f"view evaluation needs {_SIDE_COUNT} components, got {sub.value_arity}")
    value = evaluate(sub, p)
    w = view_weights(direction_deg, fov_deg)
    return float(sum(wi * vi for wi, vi in zip(w, value)))


# -- Error against the ground truth ---------------------------------------


@dataclass(frozen=True)
class ErrorStats:
    cells: int
    mean_abs: float
    max_abs: float

    def row(self) -> dict:
        return {"cells": self.cells, "mean_abs_error": self.mean_abs,
                "max_abs_error": self.max_abs}


def error_vs_oracle(sub: Subdivision, f: ProfileFunction,
                    max_cells: int = 10 ** 6) -> ErrorStats:
    """Exhaustive |subdivision - f| statistics over every grid cell.

    Queries ``f`` once per cell, so the domain is guarded to ``max_cells``.
    For vector values the absolute error is taken per component and pooled.
    """
    domain = sub.domain
    if domain.cell_count > max_cells:
        raise ValueError(
            f"domain has {domain.cell_count} cells, over the exhaustive guard {max_cells}")
    if f.arity != sub.value_arity:
        raise ValueError(f"oracle arity {f.arity} != subdivision arity {sub.value_arity}")
    dense = to_dense(sub, max_cells)
    if sub.value_arity == 1:
        dense = dense[..., np.newaxis]
    total = 0.0
    worst = 0.0
    for index in np.ndindex(*domain.extents):
        truth = f.query(domain.point(index))
        err = np.abs(dense[index] - np.asarray(truth, dtype=np.float64))
        total += float(err.sum())
        worst = max(worst, float(err.max()))
    n = domain.cell_count * sub.value_arity
    return ErrorStats(domain.cell_count, total / n, worst)
