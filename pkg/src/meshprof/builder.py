"""Adaptive construction of subdivisions from blackbox profile functions.

The builder samples a cuboid, checks the spread of the observed values against
the splitting threshold, and either emits a constant leaf (the sample mean) or
cuts the cuboid in half along every splittable axis and recurses.  Sample
counts come from a pluggable policy; every queried point goes through a
memoizing cache so refinement never pays twice for the same grid cell.

Each cuboid draws from its own random stream derived from (seed, box), so a
subtree's construction is reproducible in isolation and independent of build
order; that is what makes concurrent sibling builds deterministic.
"""

from __future__ import annotations

import math
import random
import threading
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain import GridCuboid, GridDomain, GridPoint, sample_cell_indices
from .errors import NonDeterministicProfileError, ProfileQueryError
from .mesh import Branch, Leaf, Node, Subdivision

# Subtrees at depth < this may build concurrently when jobs > 1.
_PARALLEL_DEPTH = 2


@dataclass(frozen=True)
class ProfileFunction:
    """A blackbox, per-point measurable quantity of some algorithm.

    ``query`` maps a grid point to an m-component value vector.  ``pure``
    declares that repeated queries at one point return identical vectors
    (spot-checked during builds); ``thread_safe`` permits concurrent queries.
    """

    arity: int
    query: Callable[[GridPoint], tuple[float, ...]]
    pure: bool = True
    thread_safe: bool = True
    name: str = ""


def profile_from_world(fn: Callable[..., float], name: str = "") -> ProfileFunction:
    """Wrap a scalar function of world coordinates, e.g. ``lambda x, y: x + y``."""
    return ProfileFunction(1, lambda p: (float(fn(*p.world)),), name=name)


def median_of_repeats(f: ProfileFunction, repeats: int = 5) -> ProfileFunction:
    """Query ``f`` several times per point and keep the componentwise median.

    Intended for noisy measurements such as wall-clock timings; the result is
    steadier but still not pure, so it stays exempt from purity spot-checks.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")

    def query(p: GridPoint) -> tuple[float, ...]:
        rounds = np.array([f.query(p) for _ in range(repeats)], dtype=np.float64)
        return tuple(float(v) for v in np.median(rounds, axis=0))

    return ProfileFunction(f.arity, query, pure=False, thread_safe=f.thread_safe,
                           name=f"median{repeats}({f.name})" if f.name else "")


# -- Sample-size policies -------------------------------------------------


@dataclass(frozen=True)
class DiameterSampling:
    """k proportional to the cuboid's diameter in grid cells."""

    factor: float = 0.5

    def token(self) -> str:
        return f"diam:{self.factor:g}"


@dataclass(frozen=True)
class SupNormSampling:
    """Volume-proportional k with log^2 oversampling; targets worst-case error.

    ``c`` is the (hinted) Lipschitz constant of the profiled quantity with
    respect to world coordinates.
    """

    c: float

    def token(self) -> str:
        return f"sup:c={self.c:g}"


@dataclass(frozen=True)
class RmsSampling:
    """Diameter-proportional k with log^2 oversampling; targets RMS error."""

    c: float

    def token(self) -> str:
        return f"rms:c={self.c:g}"


@dataclass(frozen=True)
class FixedSampling:
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("fixed sample size must be >= 2")

    def token(self) -> str:
        return f"fixed:{self.k}"


SamplePolicy = DiameterSampling | SupNormSampling | RmsSampling | FixedSampling


@dataclass(frozen=True)
class BuildConfig:
    """Knobs of one build: threshold, sampling policy, seed, and modes.

    ``threshold`` has one positive component per value component; a cuboid
    becomes a leaf only if every component's spread stays within it.
    ``spread_mode`` selects the leaf test: ``"range"`` compares max - min
    against the threshold, ``"mean_dev"`` compares each sample's deviation
    from the componentwise mean.  ``oversample_exponent`` is the power on the
    log factor of the sup-norm/RMS policies.
    """

    threshold: tuple[float, ...]
    policy: SamplePolicy = DiameterSampling()
    oversample_exponent: float = 2.0
    seed: int = 0
    min_samples: int = 2
    spread_mode: str = "range"
    purity_check_rate: float = 0.01
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "threshold", tuple(float(t) for t in self.threshold))
        if not self.threshold or any(t <= 0 for t in self.threshold):
            raise ValueError(f"thresholds must be > 0, got {self.threshold}")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.spread_mode not in ("range", "mean_dev"):
            raise ValueError(f"unknown spread mode {self.spread_mode!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def echo(self) -> dict:
        return {
            "threshold": list(self.threshold),
            "policy": self.policy.token(),
            "oversample_exponent": self.oversample_exponent,
            "seed": self.seed,
            "min_samples": self.min_samples,
            "spread_mode": self.spread_mode,
        }


def _oversample(k_prime: float, exponent: float) -> float:
    # Clamp to >= e so the log factor never goes through zero or negative.
    k_prime = max(k_prime, math.e)
    return k_prime * math.log(k_prime) ** exponent


def sample_size(policy: SamplePolicy, cuboid: GridCuboid, config: BuildConfig,
                domain: GridDomain) -> int:
    """Number of points to draw in ``cuboid``, clamped to [min_samples, cells]."""
    n = cuboid.cell_count
    if isinstance(policy, FixedSampling):
        raw = policy.k
    elif isinstance(policy, DiameterSampling):
        raw = math.ceil(policy.factor * cuboid.grid_diameter)
    elif isinstance(policy, SupNormSampling):
        h = max(domain.cell_size)
        s = min(config.threshold)
        k_prime = n * (policy.c * h / s) ** domain.ndim
        raw = math.ceil(_oversample(k_prime, config.oversample_exponent))
    elif isinstance(policy, RmsSampling):
        h = max(domain.cell_size)
        s = min(config.threshold)
        g = cuboid.grid_diameter
        k_prime = math.sqrt(g) + policy.c * g * h / s
        raw = math.ceil(_oversample(k_prime, config.oversample_exponent))
    else:
        raise TypeError(f"unknown policy {policy!r}")
    return min(max(raw, config.min_samples), n)


# -- Leaf tests -----------------------------------------------------------


def spread_test(values: Sequence[Sequence[float]], threshold: Sequence[float]) -> bool:
    """True iff every component's range (max - min) stays within the threshold."""
    arr = _value_matrix(values, threshold)
    spread = arr.max(axis=0) - arr.min(axis=0)
    return bool(np.all(spread <= np.asarray(threshold, dtype=np.float64)))


def mean_deviation_test(values: Sequence[Sequence[float]], threshold: Sequence[float]) -> bool:
    """True iff no sample deviates from the componentwise mean by more than the threshold."""
    arr = _value_matrix(values, threshold)
    dev = np.abs(arr - arr.mean(axis=0)).max(axis=0)
    return bool(np.all(dev <= np.asarray(threshold, dtype=np.float64)))


def _value_matrix(values, threshold) -> np.ndarray:
    if len(values) < 1:
        raise ValueError("need at least one value")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != len(threshold):
        raise ValueError(
            f"value arity {arr.shape[1] if arr.ndim == 2 else '?'} does not match "
            f"threshold arity {len(threshold)}"
        )
    return arr


# -- Query cache ----------------------------------------------------------


class QueryCache:
    """Memoizes profile queries by grid cell and counts traffic.

    First write wins under concurrency, so one consistent value is stored per
    point even when two threads race to compute it.  A small fraction of cache
    hits re-queries the profile and compares, to catch quantities that were
    declared pure but are not.
    """

    def __init__(self, f: ProfileFunction, domain: GridDomain, config: BuildConfig,
                 use_cache: bool = True, preload: dict | None = None):
        self._f = f
        self._domain = domain
        self._use_cache = use_cache
        self._check_rate = config.purity_check_rate if f.pure else 0.0
        self._check_rng = random.Random(config.seed ^ 0x5EEDCAFE)
        self._lock = threading.Lock()
        self.store: dict[int, tuple[float, ...]] = {}
        self.total_requests = 0
        if preload:
            self.store.update(preload)

    @property
    def distinct_queries(self) -> int:
        return len(self.store)

    def _run_query(self, lin: int) -> tuple[float, ...]:
        point = self._domain.point_from_linear(lin)
        try:
            raw = self._f.query(point)
        except ProfileQueryError:
            raise
        except Exception as e:
            raise ProfileQueryError(point, str(e)) from e
        value = tuple(float(v) for v in raw)
        if len(value) != self._f.arity:
            raise ProfileQueryError(
                point, f"expected {self._f.arity} components, got {len(value)}")
        if not all(math.isfinite(v) for v in value):
            raise ProfileQueryError(point, f"non-finite value {value}")
        return value

    def query_linear(self, lin: int) -> tuple[float, ...]:
        with self._lock:
            self.total_requests += 1
            cached = self.store.get(lin) if self._use_cache else None
            check = cached is not None and self._check_rate > 0 \
                and self._check_rng.random() < self._check_rate
        if cached is not None and not check:
            return cached
        value = self._run_query(lin)
        if cached is not None:
            if value != cached:
                raise NonDeterministicProfileError(
                    f"profile declared pure but point {self._domain.point_from_linear(lin).index} "
                    f"returned {value} after {cached}")
            return cached
        with self._lock:
            prior = self.store.get(lin)
            if prior is not None and self._use_cache:
                return prior
            self.store[lin] = value
        return value

    def query_many(self, lins: np.ndarray) -> np.ndarray:
        return np.array([self.query_linear(int(l)) for l in lins], dtype=np.float64)

    def sorted_rows(self) -> list[tuple[tuple[int, ...], tuple[float, ...]]]:
        """Distinct queries as (index, value), ordered by linear index."""
        return [
            (self._domain.point_from_linear(lin).index, value)
            for lin, value in sorted(self.store.items())
        ]


# -- Build ----------------------------------------------------------------


@dataclass(frozen=True)
class BuildReport:
    distinct_queries: int
    total_requests: int
    leaf_count: int
    depth: int
    saturated_leaves: int
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "distinct_queries": self.distinct_queries,
            "total_requests": self.total_requests,
            "leaf_count": self.leaf_count,
            "depth": self.depth,
            "saturated_leaves": self.saturated_leaves,
            "wall_time_s": self.wall_time_s,
        }


class _BuildState:
    def __init__(self, f: ProfileFunction, domain: GridDomain, config: BuildConfig,
                 cache: QueryCache, executor: ThreadPoolExecutor | None):
        self.f = f
        self.domain = domain
        self.config = config
        self.cache = cache
        self.executor = executor
        self.threshold = np.asarray(config.threshold, dtype=np.float64)
        self.strides = _strides(domain.extents)
        self.seed = config.seed & 0xFFFFFFFFFFFFFFFF


def _strides(extents: tuple[int, ...]) -> np.ndarray:
    strides = [1] * len(extents)
    for a in range(len(extents) - 2, -1, -1):
        strides[a] = strides[a + 1] * extents[a + 1]
    return np.asarray(strides, dtype=np.int64)


def _box_rng(seed: int, box: GridCuboid) -> np.random.Generator:
    entropy = (seed, *box.lo, *box.hi)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _linear_indices(state: _BuildState, box: GridCuboid, offsets: np.ndarray) -> np.ndarray:
    local = np.unravel_index(offsets, box.extents())
    lin = np.zeros(len(offsets), dtype=np.int64)
    for a, coords in enumerate(local):
        lin += (coords + box.lo[a]) * state.strides[a]
    return lin


def _passes(state: _BuildState, values: np.ndarray) -> bool:
    if state.config.spread_mode == "range":
        spread = values.max(axis=0) - values.min(axis=0)
    else:
        spread = np.abs(values - values.mean(axis=0)).max(axis=0)
    return bool(np.all(spread <= state.threshold))


def _leaf_or_split(state: _BuildState, box: GridCuboid, depth: int):
    """Sample the box; return a finished Leaf or the child boxes to recurse on."""
    if box.cell_count == 1:
        lin = int(np.dot(np.asarray(box.lo, dtype=np.int64), state.strides))
        value = state.cache.query_linear(lin)
        # Reached the grid floor: the value is exact, but when a parent split
        # forced us here the spread above was still over threshold.
        return Leaf(box, value, 1, value, value, saturated=depth > 0)

    k = sample_size(state.config.policy, box, state.config, state.domain)
    rng = _box_rng(state.seed, box)
    offsets = sample_cell_indices(box, k, rng)
    values = state.cache.query_many(_linear_indices(state, box, offsets))

    if _passes(state, values):
        return Leaf(
            box,
            tuple(float(v) for v in values.mean(axis=0)),
            k,
            tuple(float(v) for v in values.min(axis=0)),
            tuple(float(v) for v in values.max(axis=0)),
        )
    return box.split()


def _build_box(state: _BuildState, box: GridCuboid, depth: int) -> Node:
    out = _leaf_or_split(state, box, depth)
    if isinstance(out, Leaf):
        return out
    return Branch(box, tuple(_build_box(state, child, depth + 1) for child in out))


def _build_concurrent(state: _BuildState, box: GridCuboid, depth: int):
    """Expand the top levels in the coordinating thread, farming out subtrees.

    Only this thread ever submits work; the pooled tasks run the plain
    sequential recursion, so the pool cannot starve on nested waits.  The
    whole frontier is submitted before any result is awaited.
    """
    out = _leaf_or_split(state, box, depth)
    if isinstance(out, Leaf):
        return out
    if depth + 1 < _PARALLEL_DEPTH:
        children = tuple(_build_concurrent(state, child, depth + 1) for child in out)
    else:
        children = tuple(
            state.executor.submit(_build_box, state, child, depth + 1)
            for child in out
        )
    return (box, children)


def _await_tree(pending) -> Node:
    if isinstance(pending, Leaf):
        return pending
    if isinstance(pending, Future):
        return pending.result()
    box, children = pending
    return Branch(box, tuple(_await_tree(child) for child in children))


def build(f: ProfileFunction, domain: GridDomain, config: BuildConfig, *,
          use_cache: bool = True, sample_log=None,
          preload: dict | None = None) -> tuple[Subdivision, BuildReport]:
    """Approximate ``f`` over ``domain`` by an adaptive subdivision.

    Returns the subdivision plus a report with query counts, tree shape, and
    wall time.  ``sample_log`` may be a writable text file; every distinct
    query is appended as a CSV row (cell indices, then value components),
    ordered by cell.  ``preload`` seeds the cache with known values, keyed by
    row-major linear cell index (used for resuming external profiling runs).
    """
    if f.arity != len(config.threshold):
        raise ValueError(
            f"profile arity {f.arity} does not match threshold arity {len(config.threshold)}")
    started = time.perf_counter()
    cache = QueryCache(f, domain, config, use_cache=use_cache, preload=preload)
    executor = None
    if config.jobs > 1 and f.thread_safe:
        executor = ThreadPoolExecutor(max_workers=config.jobs)
    try:
        state = _BuildState(f, domain, config, cache, executor)
        if executor is not None:
            root = _await_tree(_build_concurrent(state, domain.root_cuboid(), 0))
        else:
            root = _build_box(state, domain.root_cuboid(), 0)
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    wall = time.perf_counter() - started

    n_leaves = 0
    max_depth = 0
    saturated = 0
    stack: list[tuple[Node, int]] = [(root, 0)]
    while stack:
        node, d = stack.pop()
        if isinstance(node, Leaf):
            n_leaves += 1
            max_depth = max(max_depth, d)
            saturated += node.saturated
        else:
            stack.extend((c, d + 1) for c in node.children)

    report = BuildReport(cache.distinct_queries, cache.total_requests,
                         n_leaves, max_depth, saturated, wall)
    metadata = {
        "profile": f.name,
        "config": config.echo(),
        "stats": {
            "distinct_queries": report.distinct_queries,
            "total_requests": report.total_requests,
            "leaf_count": report.leaf_count,
            "depth": report.depth,
            "saturated_leaves": report.saturated_leaves,
        },
    }
    sub = Subdivision(domain, f.arity, root, metadata)
    if sample_log is not None:
        for index, value in cache.sorted_rows():
            row = list(map(str, index)) + [repr(v) for v in value]
            sample_log.write(",".join(row) + "\n")
    return sub, report


def estimate_lipschitz(f: ProfileFunction, domain: GridDomain, pilot: int = 256,
                       seed: int = 0) -> float:
    """Estimate a Lipschitz constant from finite differences of adjacent cells.

    Draws ``pilot`` random adjacent grid-point pairs and returns the largest
    observed |df| / |dx|.  A convenience for the sup-norm/RMS policies when no
    constant is known; treat the result as a hint, not a bound.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(pilot):
        index = tuple(int(rng.integers(0, e)) for e in domain.extents)
        axis = int(rng.integers(0, domain.ndim))
        step = 1 if index[axis] + 1 < domain.extents[axis] else -1
        if domain.extents[axis] == 1:
            continue
        other = list(index)
        other[axis] += step
        a = f.query(domain.point(index))
        b = f.query(domain.point(tuple(other)))
        dist = domain.cell_size[axis]
        diff = max(abs(x - y) for x, y in zip(a, b))
        best = max(best, diff / dist)
    return best
