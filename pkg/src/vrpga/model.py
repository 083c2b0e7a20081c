"""Problem instance, routes, solutions and the objective functions.

Nodes are addressed by dense integer indices: 0 is always the depot and the
deliveries are ``1..n``. The original node labels from the input file are kept
in :attr:`Instance.labels` for output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

DEPOT = 0

# Above this size the full matrix is not materialized.
MATRIX_LIMIT = 10_000

# Relative band around a route-length limit inside which fast incremental
# sums are re-checked with an exactly rounded sum.
_BOUNDARY_RTOL = 1e-9


class InstanceError(ValueError):
    """Raised when an instance is malformed or cannot be served."""


@dataclass(frozen=True)
class MaxRouteLength:
    limit: float


@dataclass(frozen=True)
class Capacity:
    capacity: int | float
    demands: tuple  # indexed by node; demands[0] == 0


class _LazyEuclidean:
    """Row-cached Euclidean distances for instances too big for a matrix."""

    def __init__(self, coords: np.ndarray, rounded: bool):
        self._coords = coords
        self._rounded = rounded
        self._row = lru_cache(maxsize=4096)(self._compute_row)

    def _compute_row(self, u: int) -> list:
        d = np.hypot(*(self._coords - self._coords[u]).T)
        if self._rounded:
            return np.floor(d + 0.5).astype(np.int64).tolist()
        return d.tolist()

    def __getitem__(self, u: int) -> list:
        return self._row(u)

    def __len__(self) -> int:
        return len(self._coords)


def euclidean_matrix(coords, rounded: bool = False):
    """Distance oracle for planar points.

    ``rounded`` applies the CVRPLib ``nint`` convention and yields integers.
    """
    pts = np.asarray(coords, dtype=float)
    if len(pts) > MATRIX_LIMIT:
        return _LazyEuclidean(pts, rounded)
    diff = pts[:, None, :] - pts[None, :, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    if rounded:
        return np.floor(d + 0.5).astype(np.int64).tolist()
    return d.tolist()


class Instance:
    """An immutable routing instance.

    Exactly one constraint is active: :class:`MaxRouteLength` (PostVRP) or
    :class:`Capacity` (CVRP).
    """

    def __init__(
        self,
        name: str,
        dist,
        constraint: MaxRouteLength | Capacity,
        coords: Sequence[tuple[float, float]] | None = None,
        labels: Sequence | None = None,
        k_max: int | None = None,
    ):
        self.name = name
        self.dist = dist
        self.constraint = constraint
        self.coords = None if coords is None else tuple(tuple(map(float, c)) for c in coords)
        size = len(dist)
        if size < 2:
            raise InstanceError("instance has no deliveries")
        self.n = size - 1
        self.deliveries = tuple(range(1, size))
        self.labels = tuple(labels) if labels is not None else tuple(range(size))
        self.k_max = k_max
        if len(self.labels) != size or len(set(self.labels)) != size:
            raise InstanceError("node labels must be unique, one per node")
        if self.coords is not None and len(self.coords) != size:
            raise InstanceError("coordinate count does not match node count")

        if isinstance(constraint, MaxRouteLength):
            self.max_length = constraint.limit
            self.capacity = None
            self.demands = None
        elif isinstance(constraint, Capacity):
            self.max_length = None
            self.capacity = constraint.capacity
            self.demands = tuple(constraint.demands)
            if len(self.demands) != size:
                raise InstanceError("demand count does not match node count")
        else:
            raise TypeError(f"unknown constraint {constraint!r}")

        self.integral = isinstance(dist[0][1], (int, np.integer))
        self.symmetric = self._check_metric()
        self._validate()

    @property
    def depot(self) -> int:
        return DEPOT

    @property
    def depot_label(self):
        return self.labels[DEPOT]

    def distance(self, u: int, v: int):
        """w(u, v) with bounds checking."""
        self._check_node(u)
        self._check_node(v)
        return self.dist[u][v]

    def _check_node(self, u) -> None:
        if not isinstance(u, (int, np.integer)) or not 0 <= u <= self.n:
            raise InstanceError(f"unknown node {u!r}")

    def _check_metric(self) -> bool:
        if isinstance(self.dist, _LazyEuclidean):
            return True
        m = np.asarray(self.dist, dtype=float)
        if m.shape != (self.n + 1, self.n + 1):
            raise InstanceError(f"distance matrix must be square, got {m.shape}")
        if np.any(np.diag(m) != 0):
            raise InstanceError("metric(u, u) must be 0")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise InstanceError("distances must be finite and nonnegative")
        return bool(np.array_equal(m, m.T))

    def _validate(self) -> None:
        D = self.dist
        row0 = D[DEPOT]
        for d in self.deliveries:
            if row0[d] == 0 or D[d][DEPOT] == 0:
                raise InstanceError(f"delivery {self.labels[d]} coincides with the depot")
            if self.max_length is not None:
                if route_length((d,), self) > self.max_length:
                    raise InstanceError(
                        f"unservable instance: delivery {self.labels[d]} needs "
                        f"{route_length((d,), self)} > RMAX {self.max_length}"
                    )
            elif self.demands[d] > self.capacity:
                raise InstanceError(
                    f"unservable instance: demand of {self.labels[d]} exceeds capacity"
                )
            elif self.demands[d] <= 0:
                raise InstanceError(f"delivery {self.labels[d]} has nonpositive demand")
        if self.demands is not None and self.demands[DEPOT] != 0:
            raise InstanceError("depot demand must be 0")

    def __repr__(self) -> str:
        kind = "RMAX" if self.max_length is not None else "Q"
        limit = self.max_length if self.max_length is not None else self.capacity
        return f"Instance({self.name!r}, n={self.n}, {kind}={limit})"


def route_length(stops: Sequence[int], inst: Instance):
    """Depot-to-depot length of a route; 0 for an empty route.

    Float metrics use an exactly rounded sum so the value does not depend on
    traversal direction or summation order.
    """
    if not stops:
        return 0
    D = inst.dist
    prev = DEPOT
    legs = []
    for s in stops:
        legs.append(D[prev][s])
        prev = s
    legs.append(D[prev][DEPOT])
    if inst.integral:
        return sum(legs)
    return math.fsum(legs)


def checked_route_length(stops: Sequence[int], inst: Instance):
    for s in stops:
        if s == DEPOT:
            raise InstanceError("the depot is not a valid route stop")
        inst._check_node(s)
    return route_length(stops, inst)


def route_load(stops: Iterable[int], inst: Instance):
    if inst.demands is None:
        return 0
    q = inst.demands
    return sum(q[s] for s in stops)


def within_length(fast_value: float, stops: Sequence[int], inst: Instance) -> bool:
    """``route_length(stops) <= RMAX`` using a cheap estimate when it is decisive."""
    limit = inst.max_length
    if inst.integral:
        return fast_value <= limit
    band = _BOUNDARY_RTOL * max(abs(limit), 1.0)
    if fast_value < limit - band:
        return True
    if fast_value > limit + band:
        return False
    return route_length(stops, inst) <= limit


@dataclass(frozen=True)
class Route:
    stops: tuple
    length: float
    load: float = 0

    @classmethod
    def build(cls, stops: Iterable[int], inst: Instance) -> "Route":
        stops = tuple(stops)
        return cls(stops, route_length(stops, inst), route_load(stops, inst))

    def __len__(self) -> int:
        return len(self.stops)


def is_feasible(route: Route, inst: Instance) -> bool:
    """Inclusive limit check for the instance's active constraint."""
    if not route.stops:
        raise ValueError("empty routes are never stored")
    if inst.max_length is not None:
        return route.length <= inst.max_length
    return route.load <= inst.capacity


@dataclass(frozen=True, order=True)
class Objectives:
    """(f2, f1) ordering is the fitness; f3 is carried along but never compared."""

    f2: int
    f1: float
    f3: float = field(compare=False)

    @property
    def key(self) -> tuple:
        return (self.f2, self.f1)


def route_length_stdev(lengths: Sequence[float]) -> float:
    k = len(lengths)
    if k < 2:
        return 0.0
    mean = math.fsum(lengths) / k
    return math.sqrt(math.fsum((x - mean) ** 2 for x in lengths) / (k - 1))


class Solution:
    """Ordered list of nonempty routes covering every delivery once."""

    __slots__ = ("routes", "_objectives")

    def __init__(self, routes: Iterable[Route]):
        self.routes = list(routes)
        self._objectives = None

    @classmethod
    def from_stops(cls, routes: Iterable[Sequence[int]], inst: Instance) -> "Solution":
        return cls(Route.build(r, inst) for r in routes if len(r))

    def objectives(self, inst: Instance) -> Objectives:
        if self._objectives is None:
            self._objectives = compute_objectives(self, inst)
        return self._objectives

    def flatten(self) -> tuple:
        return tuple(s for r in self.routes for s in r.stops)

    def stops(self) -> list:
        return [r.stops for r in self.routes]

    def __len__(self) -> int:
        return len(self.routes)

    def __eq__(self, other) -> bool:
        return isinstance(other, Solution) and self.stops() == other.stops()

    def __repr__(self) -> str:
        return f"Solution({self.stops()})"


def _walk_length(sol: Solution, inst: Instance) -> float:
    # one exactly rounded sum over every leg, not a sum of rounded route lengths
    D = inst.dist
    legs = []
    for r in sol.routes:
        prev = DEPOT
        for s in r.stops:
            legs.append(D[prev][s])
            prev = s
        legs.append(D[prev][DEPOT])
    return math.fsum(legs)


def compute_objectives(sol: Solution, inst: Instance) -> Objectives:
    lengths = [r.length for r in sol.routes]
    obj = Objectives(
        f2=len(lengths),
        f1=sum(lengths) if inst.integral else _walk_length(sol, inst),
        f3=route_length_stdev(lengths),
    )
    sol._objectives = obj
    return obj


def compare_fitness(a: Objectives, b: Objectives) -> int:
    """-1 if ``a`` is fitter, 1 if ``b`` is, 0 on a tie."""
    ka, kb = a.key, b.key
    return (ka > kb) - (ka < kb)


def check_solution(sol: Solution, inst: Instance) -> list[str]:
    """Invariant violations of ``sol`` (empty list when valid)."""
    problems = []
    seen = []
    for i, r in enumerate(sol.routes):
        if not r.stops:
            problems.append(f"route {i} is empty")
            continue
        seen.extend(r.stops)
        if r.length != route_length(r.stops, inst):
            problems.append(f"route {i} has stale length")
        if inst.demands is not None and r.load != route_load(r.stops, inst):
            problems.append(f"route {i} has stale load")
        if not is_feasible(r, inst):
            problems.append(f"route {i} is infeasible")
    if sorted(seen) != list(inst.deliveries):
        problems.append("routes do not partition the deliveries")
    if inst.k_max is not None and len(sol.routes) > inst.k_max:
        problems.append(f"{len(sol.routes)} routes exceed k_max={inst.k_max}")
    return problems


def is_permutation(genes: Sequence[int], inst: Instance) -> bool:
    return len(genes) == inst.n and sorted(genes) == list(inst.deliveries)
