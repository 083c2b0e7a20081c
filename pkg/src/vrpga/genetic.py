"""Genetic algorithm over giant-tour chromosomes.

An :class:`Individual` pairs a chromosome (a permutation of the deliveries,
no depot, no route breaks) with its routed form. Crossover children and
mutants are routed by :func:`~vrpga.constructive.demarcate`; BCR children
and 2-opt/String Exchange results keep the routes those operators built, so
the route breaks of an individual always coincide with its chromosome order
(``solution.flatten() == chrom``) but are not always the greedy ones.
"""

from __future__ import annotations

import itertools
import logging
import random
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Sequence

from .constructive import demarcate
from .local_search import StringExchangeConfig, string_exchange, two_opt_solution
from .model import (
    DEPOT,
    Instance,
    Objectives,
    Solution,
    check_solution,
    compute_objectives,
    is_permutation,
    route_length,
)

log = logging.getLogger(__name__)

CROSSOVERS = ("BCR", "OX")


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    max_generations: int = 100
    crossover_rate: float = 0.95
    mutation_rate: float = 0.10
    candidate_pool_size: int = 50
    crossover_operator: str = "BCR"
    local_search_per_generation: bool = True
    stall_generations: int = 20
    rng_seed: int = 0
    se_n0: int = 3
    se_x: int = 30000
    final_string_exchange: bool = True

    def __post_init__(self):
        op = self.crossover_operator.upper()
        if op not in CROSSOVERS:
            raise ValueError(f"crossover_operator must be one of {CROSSOVERS}, got {op!r}")
        object.__setattr__(self, "crossover_operator", op)
        if self.population_size < 1 or self.candidate_pool_size < 1:
            raise ValueError("population and candidate pool sizes must be positive")
        if self.max_generations < 0 or self.stall_generations < 1:
            raise ValueError("max_generations must be >= 0 and stall_generations >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be a probability, got {p}")
        StringExchangeConfig(self.se_n0, self.se_x)

    def replace(self, **changes) -> "GaConfig":
        return GaConfig(**{**asdict(self), **changes})

    @classmethod
    def from_mapping(cls, values: dict) -> "GaConfig":
        """Build from string values such as a ``key=value`` config file provides."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ValueError(f"unknown GaConfig field {key!r}")
            kwargs[key] = _coerce(raw, types[key])
        return cls(**kwargs)


def _coerce(raw, typename: str):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if typename == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on", "enable", "enabled"):
            return True
        if low in ("0", "false", "no", "off", "disable", "disabled"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typename == "int":
        return int(raw)
    if typename == "float":
        return float(raw)
    return raw


class Individual:
    __slots__ = ("chrom", "solution", "objectives", "polished")

    def __init__(self, chrom: tuple, solution: Solution, inst: Instance, polished: bool = False):
        self.chrom = chrom
        self.solution = solution
        self.objectives: Objectives = solution.objectives(inst)
        self.polished = polished

    @classmethod
    def decode(cls, genes: Sequence[int], inst: Instance) -> "Individual":
        genes = tuple(genes)
        return cls(genes, demarcate(genes, inst), inst)

    @classmethod
    def from_solution(cls, sol: Solution, inst: Instance, polished: bool = False) -> "Individual":
        return cls(sol.flatten(), sol, inst, polished)

    @property
    def key(self) -> tuple:
        return self.objectives.key

    def __repr__(self) -> str:
        o = self.objectives
        return f"Individual(k={o.f2}, length={o.f1}, chrom={list(self.chrom)})"


@dataclass(frozen=True)
class GenerationLog:
    generation: int
    best_f1: float
    best_f2: int
    best_f3: float
    mean_f1: float
    elapsed: float


def init_population(inst: Instance, cfg: GaConfig, rng: random.Random) -> list[Individual]:
    """``population_size`` uniformly random permutations, decoded."""
    pop = []
    for _ in range(cfg.population_size):
        genes = list(inst.deliveries)
        rng.shuffle(genes)
        pop.append(Individual.decode(genes, inst))
    return pop


def tournament_select(population: Sequence[Individual], cfg: GaConfig,
                      rng: random.Random) -> list[Individual]:
    """Binary tournaments with replacement until the candidate pool is full."""
    pool = []
    size = len(population)
    for _ in range(cfg.candidate_pool_size):
        a = population[rng.randrange(size)]
        b = population[rng.randrange(size)]
        pool.append(b if b.key < a.key else a)
    return pool


# -- crossover ------------------------------------------------------------------

def _cheapest_insertion(routes: list[list[int]], lengths: list, loads: list,
                        d: int, inst: Instance) -> tuple[int, int] | None:
    """(route, position) of the feasible insertion with the smallest added length."""
    D = inst.dist
    Dd = D[d]
    limit = inst.max_length
    if limit is not None:
        band = 0 if inst.integral else 1e-9 * max(abs(limit), 1.0)
    best = None
    best_delta = None
    for ri, stops in enumerate(routes):
        if limit is None and loads[ri] + inst.demands[d] > inst.capacity:
            continue
        prev = DEPOT
        for pos in range(len(stops) + 1):
            nxt = stops[pos] if pos < len(stops) else DEPOT
            delta = D[prev][d] + Dd[nxt] - D[prev][nxt]
            prev = nxt
            if best_delta is not None and delta >= best_delta:
                continue
            if limit is not None:
                total = lengths[ri] + delta
                if total > limit + band:
                    continue
                if total > limit - band and \
                        route_length(stops[:pos] + [d] + stops[pos:], inst) > limit:
                    continue
            best_delta, best = delta, (ri, pos)
    return best


def reinsert(sol: Solution, removed: Sequence[int], inst: Instance) -> Solution:
    """Insert each delivery of ``removed`` in turn at its cheapest feasible
    position over all routes, opening a new route when none is feasible."""
    routes = [list(r.stops) for r in sol.routes]
    lengths = [r.length for r in sol.routes]
    loads = [r.load for r in sol.routes]
    D = inst.dist
    for d in removed:
        spot = _cheapest_insertion(routes, lengths, loads, d, inst)
        if spot is None:
            routes.append([d])
            lengths.append(D[DEPOT][d] + D[d][DEPOT])
            loads.append(inst.demands[d] if inst.demands else 0)
            continue
        ri, pos = spot
        routes[ri].insert(pos, d)
        lengths[ri] = route_length(routes[ri], inst)
        if inst.demands:
            loads[ri] += inst.demands[d]
    return Solution.from_stops(routes, inst)


def _bcr_child(genes: Sequence[int], removed: Sequence[int], inst: Instance) -> Individual:
    gone = set(removed)
    reduced = [g for g in genes if g not in gone]
    base = demarcate(reduced, inst) if reduced else Solution([])
    return Individual.from_solution(reinsert(base, removed, inst), inst)


def bcr_crossover(parent_a: Individual, parent_b: Individual, inst: Instance,
                  rng: random.Random) -> tuple[Individual, Individual]:
    """Best Cost Route crossover.

    A random route is drawn from each parent; its deliveries are removed from
    the other parent, which is re-demarcated, and then reinserted one by one
    (in route order) at the cheapest feasible position.
    """
    route_a = rng.choice(parent_a.solution.routes).stops
    route_b = rng.choice(parent_b.solution.routes).stops
    return (_bcr_child(parent_a.chrom, route_b, inst),
            _bcr_child(parent_b.chrom, route_a, inst))


def _ox_fill(template: Sequence[int], keep: Sequence[int], filler: Sequence[int]) -> list[int]:
    keep_at = set(keep)
    it = iter(filler)
    return [template[i] if i in keep_at else next(it) for i in range(len(template))]


def ox_crossover(parent_a: Individual, parent_b: Individual, inst: Instance,
                 rng: random.Random) -> tuple[Individual, Individual]:
    """Order-based crossover on whole routes.

    Parent A's randomly chosen route keeps its positions; the remaining slots
    take parent B's other deliveries in order (first child) or in reverse
    order (second child).
    """
    route = set(rng.choice(parent_a.solution.routes).stops)
    keep = [i for i, g in enumerate(parent_a.chrom) if g in route]
    filler = [g for g in parent_b.chrom if g not in route]
    first = _ox_fill(parent_a.chrom, keep, filler)
    second = _ox_fill(parent_a.chrom, keep, filler[::-1])
    return Individual.decode(first, inst), Individual.decode(second, inst)


_CROSSOVER_FUNCS: dict[str, Callable] = {"BCR": bcr_crossover, "OX": ox_crossover}


# -- mutation ---------------------------------------------------------------------

def mutate(ind: Individual, inst: Instance, rng: random.Random) -> Individual:
    """Try the five non-identity rearrangements of three random genes and keep
    the fittest. The result can be worse than ``ind``."""
    n = len(ind.chrom)
    if n < 3:
        return ind
    pos = sorted(rng.sample(range(n), 3))
    values = tuple(ind.chrom[p] for p in pos)
    best = None
    for perm in itertools.permutations(values):
        if perm == values:
            continue
        genes = list(ind.chrom)
        for p, g in zip(pos, perm):
            genes[p] = g
        cand = Individual.decode(genes, inst)
        if best is None or cand.key < best.key:
            best = cand
    return best


def polish(ind: Individual, inst: Instance) -> Individual:
    """2-opt every route of ``ind``; a no-op for already polished individuals.

    The shortened routes may leave room for the greedy demarcation to pack the
    same order into fewer or cheaper routes; that re-split is adopted whenever
    it is fitter and then 2-opted again, until neither step helps.
    """
    if ind.polished:
        return ind
    sol = two_opt_solution(ind.solution, inst)
    key = sol.objectives(inst).key
    while True:
        resplit = demarcate(sol.flatten(), inst)
        if not resplit.objectives(inst).key < key:
            break
        sol = two_opt_solution(resplit, inst)
        key = sol.objectives(inst).key
    return Individual.from_solution(sol, inst, polished=True)


# -- main loop --------------------------------------------------------------------

def _log_row(gen: int, pop: Sequence[Individual], t0: float) -> GenerationLog:
    best = pop[0].objectives
    mean = sum(ind.objectives.f1 for ind in pop) / len(pop)
    return GenerationLog(gen, best.f1, best.f2, best.f3, mean, time.perf_counter() - t0)


def evolve(inst: Instance, cfg: GaConfig,
           on_generation: Callable[[GenerationLog], None] | None = None
           ) -> tuple[Individual, list[GenerationLog]]:
    """Run the GA and return the final best individual with one log row per
    generation (row 0 is the initial population).

    The best individual of the last generation is finally improved with
    String Exchange; that result is what gets returned.
    """
    rng = random.Random(cfg.rng_seed)
    crossover = _CROSSOVER_FUNCS[cfg.crossover_operator]
    t0 = time.perf_counter()

    pop = init_population(inst, cfg, rng)
    if cfg.local_search_per_generation:
        pop = [polish(ind, inst) for ind in pop]
    pop.sort(key=lambda ind: ind.key)
    logs = [_log_row(0, pop, t0)]
    if on_generation:
        on_generation(logs[-1])

    best_key = pop[0].key
    stall = 0
    for gen in range(1, cfg.max_generations + 1):
        pool = tournament_select(pop, cfg, rng)
        rng.shuffle(pool)
        offspring = []
        for i in range(0, len(pool) - 1, 2):
            a, b = pool[i], pool[i + 1]
            if rng.random() < cfg.crossover_rate:
                offspring.extend(crossover(a, b, inst, rng))
            else:
                offspring.extend((a, b))
        if len(pool) % 2:
            offspring.append(pool[-1])
        offspring = [mutate(c, inst, rng) if rng.random() < cfg.mutation_rate else c
                     for c in offspring]

        merged = pop + offspring
        if cfg.local_search_per_generation:
            merged = [polish(ind, inst) for ind in merged]
        merged.sort(key=lambda ind: ind.key)  # stable: incumbents win ties
        pop = merged[: cfg.population_size]

        logs.append(_log_row(gen, pop, t0))
        if on_generation:
            on_generation(logs[-1])
        if pop[0].key < best_key:
            best_key, stall = pop[0].key, 0
        else:
            stall += 1
            if stall >= cfg.stall_generations:
                log.debug("stopping after %d stalled generations", stall)
                break

    best = pop[0]
    if cfg.final_string_exchange:
        se = StringExchangeConfig(cfg.se_n0, cfg.se_x, rng.getrandbits(64))
        improved = string_exchange(best.solution, inst, se)
        best = Individual.from_solution(improved, inst)
    return best, logs


def check_individual(ind: Individual, inst: Instance) -> list[str]:
    """Consistency problems between an individual's chromosome, routes and fitness."""
    problems = []
    if not is_permutation(ind.chrom, inst):
        problems.append("chromosome is not a permutation of the deliveries")
    if ind.solution.flatten() != tuple(ind.chrom):
        problems.append("routes do not follow the chromosome order")
    problems += check_solution(ind.solution, inst)
    fresh = compute_objectives(Solution(ind.solution.routes), inst)
    if fresh.key != ind.key:
        problems.append("cached fitness is stale")
    return problems
