import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import KINDS, random_instance
from test_constructive import no_improving_reversal
from vrpga.constructive import demarcate
from vrpga.local_search import (
    StringExchangeConfig,
    string_exchange,
    two_opt_route,
    two_opt_solution,
)
from vrpga.model import (
    Capacity,
    Instance,
    MaxRouteLength,
    Route,
    Solution,
    check_solution,
    compare_fitness,
    euclidean_matrix,
    route_length,
)

# depot, a, b, c, d around a convex pentagon
PENTAGON = [(0, 0), (0, 10), (5, 15), (10, 15), (15, 10)]


@pytest.fixture
def pentagon():
    return Instance("pent", euclidean_matrix(PENTAGON), MaxRouteLength(100.0), coords=PENTAGON)


def test_short_routes_unchanged(pentagon):
    for stops in [(1,), (2, 3)]:
        r = Route.build(stops, pentagon)
        assert two_opt_route(r, pentagon) is r


def test_crossing_route_uncrossed(pentagon):
    crossed = Route.build((1, 3, 2, 4), pentagon)
    out = two_opt_route(crossed, pentagon)
    assert out.stops == (1, 2, 3, 4)
    assert out.length < crossed.length
    # the pentagon order is the best of all 24 orders
    best = min(route_length(p, pentagon) for p in itertools.permutations((1, 2, 3, 4)))
    assert out.length == best


def test_convex_order_unchanged(pentagon):
    r = Route.build((1, 2, 3, 4), pentagon)
    assert two_opt_route(r, pentagon) is r


def test_two_opt_solution_examples(pentagon):
    singles = Solution.from_stops([(1,), (2,), (3,), (4,)], pentagon)
    assert two_opt_solution(singles, pentagon) == singles
    sol = Solution.from_stops([(1, 3, 2, 4)], pentagon)
    once = two_opt_solution(sol, pentagon)
    assert once.objectives(pentagon).f1 < sol.objectives(pentagon).f1
    assert two_opt_solution(once, pentagon) == once


def test_two_opt_asymmetric_counts_reversed_inner_edges():
    # going 1 -> 2 costs 1, coming back costs 9
    D = [[0, 1, 5, 1], [1, 0, 1, 9], [5, 9, 0, 1], [1, 1, 9, 0]]
    inst = Instance("asym", D, MaxRouteLength(100))
    r = Route.build((2, 1, 3), inst)
    out = two_opt_route(r, inst)
    assert out.length == route_length(out.stops, inst) < r.length
    assert no_improving_reversal(out.stops, inst)


def east_north():
    # east pair at x = 10, 11 and north pair at y = 10, 11; one vehicle slot each
    pts = [(0, 0), (10, 0), (11, 0), (0, 10), (0, 11)]
    return Instance("en", euclidean_matrix(pts, rounded=True), Capacity(2, (0, 1, 1, 1, 1)),
                    coords=pts)


def test_single_route_unchanged():
    inst = east_north()
    inst2 = Instance("big", inst.dist, Capacity(4, inst.demands))
    sol = Solution.from_stops([(1, 2, 3, 4)], inst2)
    assert string_exchange(sol, inst2, StringExchangeConfig(n0=1, x=100)) is sol


def test_string_exchange_untangles_routes():
    inst = east_north()
    sol = Solution.from_stops([(1, 4), (3, 2)], inst)
    # every one-stop swap, enumerated by hand
    swaps = []
    for i, j in itertools.product(range(2), range(2)):
        r1, r2 = list(sol.routes[0].stops), list(sol.routes[1].stops)
        r1[i], r2[j] = r2[j], r1[i]
        swaps.append(Solution.from_stops([r1, r2], inst).objectives(inst).f1)
    best = min(swaps)
    assert best == 44 < sol.objectives(inst).f1
    out = string_exchange(sol, inst, StringExchangeConfig(n0=1, x=200))
    assert out.objectives(inst).f1 == best
    assert sorted(map(set, out.stops()), key=min) == [{1, 2}, {3, 4}]


@pytest.mark.parametrize("n0, x", [(3, 0), (0, 5)])
def test_config_rejects_nonpositive(n0, x):
    with pytest.raises(ValueError):
        StringExchangeConfig(n0=n0, x=x)


def test_string_exchange_can_drop_a_route():
    # route (2) fits into the first route once it swaps with it
    pts = [(0, 0), (10, 0), (11, 0)]
    inst = Instance("drop", euclidean_matrix(pts, rounded=True), Capacity(2, (0, 1, 1)))
    sol = Solution.from_stops([(1,), (2,)], inst)
    assert string_exchange(sol, inst, StringExchangeConfig(n0=3, x=10)).stops() == [(1,), (2,)]


def test_string_exchange_deterministic():
    inst = random_instance(random.Random(11), 12, "length")
    sol = demarcate(list(inst.deliveries), inst)
    cfg = StringExchangeConfig(x=300, rng_seed=5)
    assert string_exchange(sol, inst, cfg) == string_exchange(sol, inst, cfg)


instances = st.builds(
    lambda seed, n, kind: random_instance(random.Random(seed), n, kind),
    st.integers(0, 2**32), st.integers(1, 9), st.sampled_from(KINDS),
)


@settings(max_examples=60, deadline=None)
@given(instances, st.randoms(use_true_random=False))
def test_two_opt_properties(inst, rnd):
    genes = list(inst.deliveries)
    rnd.shuffle(genes)
    sol = demarcate(genes, inst)
    out = two_opt_solution(sol, inst)
    assert check_solution(out, inst) == []
    assert len(out.routes) == len(sol.routes)
    for before, after in zip(sol.routes, out.routes):
        assert set(before.stops) == set(after.stops)
        assert after.length <= before.length
        assert no_improving_reversal(after.stops, inst)
        if len(after.stops) <= 6:
            best = min(route_length(p, inst) for p in itertools.permutations(after.stops))
            assert after.length >= best


@settings(max_examples=60, deadline=None)
@given(instances, st.randoms(use_true_random=False), st.integers(0, 2**32))
def test_string_exchange_properties(inst, rnd, seed):
    genes = list(inst.deliveries)
    rnd.shuffle(genes)
    sol = demarcate(genes, inst)
    out = string_exchange(sol, inst, StringExchangeConfig(x=50, rng_seed=seed))
    assert check_solution(out, inst) == []
    assert compare_fitness(out.objectives(inst), sol.objectives(inst)) <= 0
