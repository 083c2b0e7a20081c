"""Constructive heuristics: the greedy route demarcation decoder, parallel
Clarke-Wright savings and the sweep algorithm."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .model import DEPOT, Instance, InstanceError, Route, Solution, route_length
from .local_search import two_opt_route

_RTOL = 1e-9


class UnsupportedOperation(InstanceError):
    pass


class Saving(NamedTuple):
    u: int
    v: int
    value: float


def _band(inst: Instance) -> tuple[float, float]:
    """Interval around RMAX where fast sums must be confirmed exactly."""
    limit = inst.max_length
    if inst.integral:
        return limit, limit
    eps = _RTOL * max(abs(limit), 1.0)
    return limit - eps, limit + eps


def _length_fits(fast: float, stops, inst: Instance, lo: float, hi: float) -> bool:
    if fast <= lo:
        return True
    if fast > hi:
        return False
    return route_length(stops, inst) <= inst.max_length


def demarcate(genes: Sequence[int], inst: Instance) -> Solution:
    """Split a giant tour into routes with a left-to-right greedy scan.

    Each delivery is appended to the open route while the route stays
    feasible; otherwise the route is closed and a new one starts with it.
    """
    routes: list[list[int]] = []
    if inst.capacity is not None:
        Q, q = inst.capacity, inst.demands
        cur: list[int] = []
        load = 0
        for g in genes:
            if cur and load + q[g] <= Q:
                cur.append(g)
                load += q[g]
                continue
            if q[g] > Q:
                raise InstanceError(f"delivery {inst.labels[g]} cannot be served")
            if cur:
                routes.append(cur)
            cur, load = [g], q[g]
        if cur:
            routes.append(cur)
        return Solution.from_stops(routes, inst)

    D = inst.dist
    lo, hi = _band(inst)
    cur = []
    length = 0.0
    last = DEPOT
    for g in genes:
        if cur:
            cand = length - D[last][DEPOT] + D[last][g] + D[g][DEPOT]
            if cand <= lo or (cand <= hi and _length_fits(cand, cur + [g], inst, lo, hi)):
                cur.append(g)
                length, last = cand, g
                continue
            routes.append(cur)
        length = D[DEPOT][g] + D[g][DEPOT]
        if not _length_fits(length, [g], inst, lo, hi):
            raise InstanceError(f"delivery {inst.labels[g]} cannot be served")
        cur, last = [g], g
    if cur:
        routes.append(cur)
    return Solution.from_stops(routes, inst)


def compute_savings(inst: Instance) -> list[Saving]:
    """All pairwise savings, largest first; ties by ``(u, v)`` ascending.

    Symmetric metrics yield one entry per unordered pair ``u < v``. Asymmetric
    ones yield ordered pairs where ``value = w(u, depot) + w(depot, v) - w(u, v)``
    is the gain of visiting ``v`` right after ``u``.
    """
    n = inst.n
    if n < 2:
        return []
    D = np.asarray([inst.dist[u] for u in range(n + 1)])
    to_depot = D[1:, 0]
    from_depot = D[0, 1:]
    inner = D[1:, 1:]
    s = to_depot[:, None] + from_depot[None, :] - inner
    if inst.symmetric:
        iu, iv = np.triu_indices(n, k=1)
    else:
        iu, iv = np.nonzero(~np.eye(n, dtype=bool))
    vals = s[iu, iv]
    order = np.lexsort((iv, iu, -vals))
    us = (iu[order] + 1).tolist()
    vs = (iv[order] + 1).tolist()
    values = vals[order].tolist()
    return [Saving(u, v, val) for u, v, val in zip(us, vs, values)]


def cws_parallel(inst: Instance, skip_negative: bool = True) -> Solution:
    """Parallel Clarke-Wright savings.

    Starts from one out-and-back route per delivery and walks the savings
    list once, joining two routes at their ends whenever the joined route is
    feasible. Negative savings are skipped by default so the result is never
    longer than the star solution (rounded metrics can break the triangle
    inequality).
    """
    D = inst.dist
    routes: dict[int, list[int]] = {d: [d] for d in inst.deliveries}
    owner = {d: d for d in inst.deliveries}
    if inst.capacity is not None:
        loads = {d: inst.demands[d] for d in inst.deliveries}
    else:
        lengths = {d: D[DEPOT][d] + D[d][DEPOT] for d in inst.deliveries}
        lo, hi = _band(inst)

    for u, v, value in compute_savings(inst):
        if skip_negative and value < 0:
            break
        ru, rv = owner[u], owner[v]
        if ru == rv:
            continue
        A, B = routes[ru], routes[rv]
        if A[-1] == u and B[0] == v:
            merged = A + B
        elif not inst.symmetric:
            continue
        elif A[0] == u and B[-1] == v:
            merged = B + A
        elif A[-1] == u and B[-1] == v:
            merged = A + B[::-1]
        elif A[0] == u and B[0] == v:
            merged = A[::-1] + B
        else:
            continue

        if inst.capacity is not None:
            load = loads[ru] + loads[rv]
            if load > inst.capacity:
                continue
            loads[ru] = load
            del loads[rv]
        else:
            fast = lengths[ru] + lengths[rv] - value
            if not _length_fits(fast, merged, inst, lo, hi):
                continue
            lengths[ru] = fast
            del lengths[rv]
        routes[ru] = merged
        del routes[rv]
        for d in B:
            owner[d] = ru

    return Solution(Route.build(routes[k], inst) for k in sorted(routes))


def star_solution(inst: Instance) -> Solution:
    return Solution.from_stops([[d] for d in inst.deliveries], inst)


def sweep_order(inst: Instance) -> list[int]:
    """Deliveries by polar angle about the depot, starting east, counter-clockwise.

    Ties are broken by distance from the depot, then by index.
    """
    if inst.coords is None:
        raise UnsupportedOperation("sweep needs planar coordinates")
    x0, y0 = inst.coords[DEPOT]
    keyed = []
    for d in inst.deliveries:
        dx, dy = inst.coords[d][0] - x0, inst.coords[d][1] - y0
        angle = math.atan2(dy, dx)
        if angle < 0:
            angle += 2 * math.pi
        keyed.append((angle, math.hypot(dx, dy), d))
    keyed.sort()
    return [d for _, _, d in keyed]


def sweep(inst: Instance) -> Solution:
    """Cluster by sweeping a ray around the depot, then 2-opt each cluster.

    Under a route-length limit a cluster accepts the next delivery when its
    2-opt-improved order stays within RMAX, not just the raw angle order.
    """
    order = sweep_order(inst)
    if inst.capacity is not None:
        return Solution(two_opt_route(r, inst) for r in demarcate(order, inst).routes)
    routes = []
    current = None
    for d in order:
        if current is not None:
            trial = Route.build(current.stops + (d,), inst)
            if trial.length > inst.max_length:
                trial = two_opt_route(trial, inst)
            if trial.length <= inst.max_length:
                current = trial
                continue
            routes.append(two_opt_route(current, inst))
        current = Route.build((d,), inst)
    routes.append(two_opt_route(current, inst))
    return Solution(routes)
