import random
from pathlib import Path

import pytest

from vrpga.instance_io import load_instance
from vrpga.model import Capacity, Instance, MaxRouteLength, euclidean_matrix, route_length

DATA = Path(__file__).parent / "data"

KINDS = ("capacity", "length", "asymmetric")


def random_instance(rng: random.Random, n: int, kind: str = "capacity",
                    name: str = "rand") -> Instance:
    """Small random instance of one of three flavours.

    capacity: integer grid, rounded Euclidean, random demands and Q.
    length: float coordinates, RMAX between 1x and 2.5x the farthest out-and-back.
    asymmetric: random integer matrix, RMAX as above.
    """
    if kind == "capacity":
        depot = (50, 50)
        pts = [depot]
        while len(pts) <= n:
            p = (rng.randint(0, 100), rng.randint(0, 100))
            if p != depot:
                pts.append(p)
        demands = [0] + [rng.randint(1, 30) for _ in range(n)]
        q = rng.randint(max(demands), 3 * max(demands))
        return Instance(name, euclidean_matrix(pts, rounded=True),
                        Capacity(q, tuple(demands)), coords=pts)
    if kind == "length":
        pts = [(50.0, 50.0)] + [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]
        dist = euclidean_matrix(pts)
    elif kind == "asymmetric":
        pts = None
        dist = [[0 if u == v else rng.randint(1, 50) for v in range(n + 1)]
                for u in range(n + 1)]
    else:
        raise ValueError(kind)
    probe = Instance(name, dist, MaxRouteLength(float("inf")), coords=pts)
    need = max(route_length((d,), probe) for d in probe.deliveries)
    rmax = max(need, need * rng.uniform(1.0, 2.5))
    return Instance(name, dist, MaxRouteLength(rmax), coords=pts)


class Pick:
    """Stand-in RNG whose ``choice`` returns preset indices in turn."""

    def __init__(self, *indices):
        self.indices = list(indices)

    def choice(self, seq):
        return seq[self.indices.pop(0)]


@pytest.fixture
def thirteen():
    return load_instance(DATA / "thirteen.postvrp")


@pytest.fixture
def grid5():
    return load_instance(DATA / "grid5.vrp")


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
