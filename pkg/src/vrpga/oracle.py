"""Exhaustive solver for tiny instances, used as ground truth in tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .constructive import demarcate
from .model import Instance, Objectives, Route, Solution, route_length


@dataclass
class ExactResult:
    best: Solution
    objectives: Objectives
    explored: int


def _best_orders(inst: Instance) -> tuple[dict, int]:
    """Shortest visiting order for every feasible subset of deliveries.

    Ties in length go to the lexicographically smallest order.
    """
    best: dict[frozenset, tuple] = {}
    explored = 0
    items = inst.deliveries
    for size in range(1, len(items) + 1):
        for subset in itertools.combinations(items, size):
            if inst.capacity is not None and \
                    sum(inst.demands[d] for d in subset) > inst.capacity:
                continue
            chosen = None
            for order in itertools.permutations(subset):
                explored += 1
                length = route_length(order, inst)
                if chosen is None or length < chosen[0]:
                    chosen = (length, order)
            if inst.max_length is None or chosen[0] <= inst.max_length:
                best[frozenset(subset)] = chosen
    return best, explored


def _partitions(items: tuple):
    """Set partitions of ``items``; each block is a sorted tuple, blocks ordered
    by their smallest element."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for size in range(len(rest) + 1):
        for others in itertools.combinations(rest, size):
            block = (first, *others)
            remaining = tuple(x for x in rest if x not in others)
            for tail in _partitions(remaining):
                yield [block, *tail]


def brute_force(inst: Instance, limit_n: int = 8) -> ExactResult:
    """Global optimum over every partition of the deliveries into feasible
    routes, each visited in its shortest order.

    Fitness is (vehicle count, total length); remaining ties go to the
    lexicographically smallest list of routes.
    """
    if inst.n > limit_n:
        raise ValueError(f"brute force refused: n={inst.n} exceeds limit {limit_n}")
    orders, explored = _best_orders(inst)
    best_key = None
    best_routes = None
    for blocks in _partitions(inst.deliveries):
        try:
            chosen = [orders[frozenset(b)] for b in blocks]
        except KeyError:
            continue  # some block cannot form a feasible route
        routes = [order for _, order in chosen]
        sol = Solution(Route(order, length, 0) for length, order in chosen)
        key = (len(routes), sol.objectives(inst).f1, routes)
        if best_key is None or key < best_key:
            best_key, best_routes = key, routes
    sol = Solution(Route.build(r, inst) for r in best_routes)
    return ExactResult(sol, sol.objectives(inst), explored)


def brute_force_decoded(inst: Instance, limit_n: int = 8) -> ExactResult:
    """Best fitness reachable by decoding some permutation with the greedy
    demarcation (a restriction of :func:`brute_force`'s search space)."""
    if inst.n > limit_n:
        raise ValueError(f"brute force refused: n={inst.n} exceeds limit {limit_n}")
    best = None
    explored = 0
    for perm in itertools.permutations(inst.deliveries):
        explored += 1
        sol = demarcate(perm, inst)
        key = (sol.objectives(inst).key, sol.stops())
        if best is None or key < best[0]:
            best = (key, sol)
    sol = best[1]
    return ExactResult(sol, sol.objectives(inst), explored)
