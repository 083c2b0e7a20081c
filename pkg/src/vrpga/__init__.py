"""Genetic algorithm, constructive heuristics and local search for the
route-length-limited VRP (PostVRP) and the capacitated VRP."""

from .constructive import compute_savings, cws_parallel, demarcate, sweep
from .genetic import GaConfig, GenerationLog, Individual, evolve
from .instance_io import load_instance, parse_cvrplib, parse_instance_name, parse_postvrp
from .local_search import StringExchangeConfig, string_exchange, two_opt_route, two_opt_solution
from .model import (
    Capacity,
    Instance,
    InstanceError,
    MaxRouteLength,
    Objectives,
    Route,
    Solution,
    compare_fitness,
    compute_objectives,
    euclidean_matrix,
    is_feasible,
    route_length,
)
from .oracle import brute_force

__version__ = "0.1.0"
