"""Intra-route 2-opt and inter-route String Exchange."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import (
    DEPOT,
    Instance,
    Route,
    Solution,
    is_feasible,
    route_length,
)


def _best_move_symmetric(tour: list[int], D) -> tuple[int, int, float] | None:
    # tour is depot, r1..rm, depot; edge i joins tour[i] and tour[i+1].
    last = len(tour) - 2
    best = None
    best_delta = 0
    for i in range(last - 1):
        a, b = tour[i], tour[i + 1]
        Da, Db = D[a], D[b]
        dab = Da[b]
        for j in range(i + 2, last + 1):
            if i == 0 and j == last:
                continue  # both edges touch the depot: reversal is a no-op
            c, d = tour[j], tour[j + 1]
            delta = Da[c] + Db[d] - dab - D[c][d]
            if delta < best_delta:
                best_delta, best = delta, (i, j)
    return None if best is None else (*best, best_delta)


def _best_move_asymmetric(tour: list[int], D) -> tuple[int, int, float] | None:
    last = len(tour) - 2
    best = None
    best_delta = 0
    for i in range(last - 1):
        a, b = tour[i], tour[i + 1]
        for j in range(i + 2, last + 1):
            if i == 0 and j == last:
                continue
            c, d = tour[j], tour[j + 1]
            # reversing b..c flips every inner edge
            inner_old = sum(D[tour[k]][tour[k + 1]] for k in range(i + 1, j))
            inner_new = sum(D[tour[k + 1]][tour[k]] for k in range(i + 1, j))
            delta = D[a][c] + D[b][d] + inner_new - D[a][b] - D[c][d] - inner_old
            if delta < best_delta:
                best_delta, best = delta, (i, j)
    return None if best is None else (*best, best_delta)


def two_opt_route(route: Route, inst: Instance) -> Route:
    """Best-improvement 2-opt until no reversal shortens the route.

    Ties between equally good moves go to the lowest ``(i, j)``.
    """
    if len(route.stops) < 3:
        return route
    D = inst.dist
    finder = _best_move_symmetric if inst.symmetric else _best_move_asymmetric
    tour = [DEPOT, *route.stops, DEPOT]
    length = route.length
    changed = False
    while True:
        move = finder(tour, D)
        if move is None:
            break
        i, j, _ = move
        trial = tour[: i + 1] + tour[i + 1 : j + 1][::-1] + tour[j + 1 :]
        trial_length = route_length(trial[1:-1], inst)
        if not trial_length < length:
            break  # rounding ate the gain; stop rather than cycle
        tour, length, changed = trial, trial_length, True
    if not changed:
        return route
    return Route(tuple(tour[1:-1]), length, route.load)


def two_opt_solution(sol: Solution, inst: Instance) -> Solution:
    """2-opt every route independently. Route count and order are preserved."""
    return Solution(two_opt_route(r, inst) for r in sol.routes)


@dataclass(frozen=True)
class StringExchangeConfig:
    n0: int = 3
    x: int = 30000
    rng_seed: int = 0

    def __post_init__(self):
        if self.n0 < 1:
            raise ValueError(f"n0 must be >= 1, got {self.n0}")
        if self.x < 1:
            raise ValueError(f"x must be >= 1, got {self.x}")


def string_exchange(sol: Solution, inst: Instance, cfg: StringExchangeConfig | None = None,
                    rng: random.Random | None = None) -> Solution:
    """Randomized segment swaps between pairs of routes.

    For segment length ``n = n0, ..., 1`` the move is tried ``x`` times: two
    distinct random routes each give up a random contiguous segment of
    ``min(n, len(route))`` stops and receive the other's. A swap is kept only
    if both routes stay feasible and the solution gets strictly fitter.
    """
    cfg = cfg or StringExchangeConfig()
    if len(sol.routes) < 2:
        return sol
    rng = rng or random.Random(cfg.rng_seed)
    routes = list(sol.routes)
    capacity = inst.capacity
    for n in range(cfg.n0, 0, -1):
        for _ in range(cfg.x):
            k = len(routes)
            if k < 2:
                break
            p, q = rng.sample(range(k), 2)
            r1, r2 = routes[p].stops, routes[q].stops
            a, b = min(n, len(r1)), min(n, len(r2))
            i = rng.randrange(len(r1) - a + 1)
            j = rng.randrange(len(r2) - b + 1)
            new1 = r1[:i] + r2[j : j + b] + r1[i + a :]
            new2 = r2[:j] + r1[i : i + a] + r2[j + b :]
            if capacity is not None:
                q1 = routes[p].load - sum(inst.demands[s] for s in r1[i : i + a]) \
                    + sum(inst.demands[s] for s in r2[j : j + b])
                q2 = routes[p].load + routes[q].load - q1
                if q1 > capacity or q2 > capacity:
                    continue
            else:
                q1 = q2 = 0
            l1 = route_length(new1, inst)
            l2 = route_length(new2, inst)
            cand = [Route(new1, l1, q1), Route(new2, l2, q2)]
            if not all(is_feasible(r, inst) for r in cand if r.stops):
                continue
            trial = _replace(routes, p, q, cand)
            if len(trial) < k or _shorter(l1 + l2, routes[p].length + routes[q].length,
                                          routes, trial, inst):
                routes = trial
    return Solution(routes)


def _shorter(new: float, old: float, routes, trial, inst: Instance) -> bool:
    if new >= old:
        return False
    if inst.integral or old - new > 1e-9 * max(old, 1.0):
        return True
    # within rounding noise: decide on the real objective
    return Solution(trial).objectives(inst).f1 < Solution(routes).objectives(inst).f1


def _replace(routes: list[Route], p: int, q: int, cand: list[Route]) -> list[Route]:
    """Swap in the two rebuilt routes, dropping any that came out empty."""
    out = list(routes)
    out[p], out[q] = cand
    return [r for r in out if r.stops]
