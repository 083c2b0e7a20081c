"""Benchmark harness: seeded GA runs over instances and configurations,
per-generation CSV logs, the best-(k, length) summary and the k-gap report.

Run CSV columns::

    generation,best_f1,best_f2,best_f3,mean_f1[,elapsed]

One row per generation (0 is the initial population) plus a last row whose
``generation`` is ``final`` holding the String Exchange result. ``elapsed``
is only written when timing is requested, which keeps reruns byte-identical.

Summary CSV columns::

    instance,best_k,best_length,config_winner,total_time
"""

from __future__ import annotations

import csv
import logging
import os
import random
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .constructive import cws_parallel, demarcate, sweep
from .genetic import GaConfig, GenerationLog, evolve
from .instance_io import load_instance, name_k
from .model import Instance, Objectives, Solution

log = logging.getLogger(__name__)

# letter -> (label, crossover, local search each generation)
CONFIGURATIONS = {
    "a": ("bcr-ls", "BCR", True),
    "b": ("bcr-nols", "BCR", False),
    "c": ("ox-ls", "OX", True),
    "d": ("ox-nols", "OX", False),
}

RUN_COLUMNS = ["generation", "best_f1", "best_f2", "best_f3", "mean_f1"]
SUMMARY_COLUMNS = ["instance", "best_k", "best_length", "config_winner", "total_time"]


_CONFIG_ALIASES = {
    "bcrls": "a", "bcrnols": "b", "oxls": "c", "oxnols": "d", "obls": "c", "obnols": "d",
}


def parse_config_name(name: str) -> str:
    """Map ``bcr-ls``, ``OX_NOLS``, ``bcr+ls``, ``a`` ... to a configuration letter."""
    key = "".join(ch for ch in name.lower() if ch.isalnum())
    if key in CONFIGURATIONS:
        return key
    try:
        return _CONFIG_ALIASES[key]
    except KeyError:
        raise ValueError(f"unknown configuration {name!r}; use one of "
                         + ", ".join(label for label, _, _ in CONFIGURATIONS.values())) from None


def config_for(letter: str, base: GaConfig) -> GaConfig:
    _, op, ls = CONFIGURATIONS[letter]
    return base.replace(crossover_operator=op, local_search_per_generation=ls)


def run_seed(base_seed: int, instance: str, letter: str, run: int) -> int:
    """Per-run seed derived only from the task identity, never from scheduling."""
    ss = np.random.SeedSequence(
        [base_seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(instance.encode()), ord(letter), run]
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _fmt(x) -> str:
    return str(x)


def write_run_csv(path, logs: Sequence[GenerationLog], final: Objectives,
                  timing: bool = False, elapsed: float | None = None) -> None:
    cols = RUN_COLUMNS + (["elapsed"] if timing else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in logs:
            values = [row.generation, row.best_f1, row.best_f2, row.best_f3, row.mean_f1]
            if timing:
                values.append(row.elapsed)
            w.writerow([_fmt(v) for v in values])
        values = ["final", final.f1, final.f2, final.f3, ""]
        if timing:
            values.append("" if elapsed is None else elapsed)
        w.writerow([_fmt(v) for v in values])


def read_run_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_solution(path, sol: Solution, inst: Instance) -> None:
    """Plain-text routes (original node labels) with an objectives footer."""
    Path(path).write_text(format_solution(sol, inst))


def format_solution(sol: Solution, inst: Instance) -> str:
    lines = [
        f"route {i}: " + " ".join(str(inst.labels[s]) for s in r.stops)
        for i, r in enumerate(sol.routes, start=1)
    ]
    obj = sol.objectives(inst)
    lines += [f"f1 {obj.f1}", f"f2 {obj.f2}", f"f3 {obj.f3}", ""]
    return "\n".join(lines)


# -- runs ------------------------------------------------------------------------

@dataclass
class RunResult:
    instance: str
    letter: str
    run: int
    seed: int
    objectives: Objectives
    logs: list
    elapsed: float
    solution_text: str = ""


@lru_cache(maxsize=8)
def _cached_instance(path: str) -> Instance:
    return load_instance(path)


def _run_task(path: str, letter: str, run: int, seed: int, base: GaConfig) -> RunResult:
    inst = _cached_instance(path)
    cfg = config_for(letter, base).replace(rng_seed=seed)
    t0 = time.perf_counter()
    best, logs = evolve(inst, cfg)
    elapsed = time.perf_counter() - t0
    return RunResult(inst.name, letter, run, seed, best.objectives, logs, elapsed,
                     format_solution(best.solution, inst))


@dataclass
class ExperimentSpec:
    instances: list = field(default_factory=list)
    configurations: list = field(default_factory=lambda: list(CONFIGURATIONS))
    runs_per_config: int = 10
    seed: int = 0
    output_dir: Path = Path("results")
    base_config: GaConfig = field(default_factory=GaConfig)
    threads: int | None = None
    timing: bool = False

    def __post_init__(self):
        if self.runs_per_config < 1:
            raise ValueError("runs_per_config must be >= 1")
        self.configurations = [parse_config_name(c) for c in self.configurations]
        unknown = set(self.configurations) - set(CONFIGURATIONS)
        if unknown:
            raise ValueError(f"unknown configurations {sorted(unknown)}")
        self.output_dir = Path(self.output_dir)


@dataclass
class ResultRow:
    instance: str
    best_k: int
    best_length: float
    config_winner: str
    total_time: float

    def as_csv(self) -> list[str]:
        return [self.instance, str(self.best_k), _fmt(self.best_length),
                self.config_winner, f"{self.total_time:.3f}"]


def summarize(results: Iterable[RunResult]) -> list[ResultRow]:
    """Best (k, length) per instance and every configuration that reached it."""
    by_instance: dict[str, list[RunResult]] = {}
    for r in results:
        by_instance.setdefault(r.instance, []).append(r)
    rows = []
    for name, runs in by_instance.items():
        best = min(r.objectives.key for r in runs)
        winners = sorted({r.letter for r in runs if r.objectives.key == best})
        rows.append(ResultRow(name, best[0], best[1], ";".join(winners),
                              sum(r.elapsed for r in runs)))
    return rows


def run_experiment(spec: ExperimentSpec) -> tuple[list[ResultRow], dict[str, str]]:
    """Execute every (instance, configuration, run) and write the CSV outputs.

    Returns the summary rows and a mapping of failed instance paths to errors.
    """
    out = spec.output_dir
    runs_dir = out / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    failures: dict[str, str] = {}
    tasks = []
    for path in spec.instances:
        path = str(path)
        try:
            inst = _cached_instance(path)
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", path, exc)
            failures[path] = str(exc)
            continue
        for letter in spec.configurations:
            for run in range(spec.runs_per_config):
                seed = run_seed(spec.seed, inst.name, letter, run)
                tasks.append((path, letter, run, seed, spec.base_config))

    workers = spec.threads or os.cpu_count() or 1
    if workers <= 1 or len(tasks) <= 1:
        outcomes = [_guarded(_run_task, task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_guarded, _run_task, task) for task in tasks]
            outcomes = [f.result() for f in futures]
    results = []
    for task, (result, error) in zip(tasks, outcomes):
        if error is not None:
            failures.setdefault(task[0], error)
        else:
            results.append((task[0], result))
    results = [r for path, r in results if path not in failures]

    for r in results:
        stem = f"{r.instance}__{CONFIGURATIONS[r.letter][0]}__run{r.run:02d}"
        write_run_csv(runs_dir / f"{stem}.csv", r.logs, r.objectives,
                      timing=spec.timing, elapsed=r.elapsed)
        (runs_dir / f"{stem}.sol").write_text(r.solution_text)

    rows = summarize(results)
    write_summary(out / "summary.csv", rows)
    if failures:
        with open(out / "failures.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["instance", "error"])
            w.writerows(sorted(failures.items()))
    return rows, failures


def _guarded(fn, task):
    try:
        return fn(*task), None
    except Exception as exc:  # noqa: BLE001 - recorded per instance, others continue
        return None, f"{type(exc).__name__}: {exc}"


def write_summary(path, rows: Sequence[ResultRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in rows:
            w.writerow(row.as_csv())


def read_summary(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        return [
            ResultRow(r["instance"], int(r["best_k"]), float(r["best_length"]),
                      r["config_winner"], float(r["total_time"] or 0))
            for r in csv.DictReader(fh)
        ]


# -- k gap against name-encoded optima ----------------------------------------------

@dataclass
class GapRow:
    instance: str
    best_k: int
    k_opt: int

    @property
    def ratio(self) -> float:
        return self.best_k / self.k_opt


@dataclass
class GapReport:
    rows: list
    skipped: list
    within: float = 1.10

    @property
    def exact(self) -> int:
        return sum(r.best_k == r.k_opt for r in self.rows)

    @property
    def within_bound(self) -> int:
        # integer form of best_k / k_opt <= 1.10, immune to float rounding
        return sum(100 * r.best_k <= round(100 * self.within) * r.k_opt for r in self.rows)

    def lines(self) -> list[str]:
        out = ["instance,best_k,k_opt,ratio"]
        out += [f"{r.instance},{r.best_k},{r.k_opt},{r.ratio:.4f}" for r in self.rows]
        return out


def compare_to_optimum(rows: Iterable[ResultRow], within: float = 1.10) -> GapReport:
    """Compare each instance's best k with the optimum encoded in its name."""
    kept, skipped = [], []
    for row in rows:
        k_opt = name_k(row.instance)
        if k_opt is None:
            log.warning("no k in instance name %r, skipped", row.instance)
            skipped.append(row.instance)
            continue
        kept.append(GapRow(row.instance, row.best_k, k_opt))
    return GapReport(kept, skipped, within)


# -- constructive baselines -----------------------------------------------------------

BASELINES = ("cws", "sweep", "random")


def baseline(inst: Instance, which: str, seed: int = 0) -> Solution:
    which = which.lower()
    if which == "cws":
        return cws_parallel(inst)
    if which == "sweep":
        return sweep(inst)
    if which in ("random", "random+demarcate"):
        genes = list(inst.deliveries)
        random.Random(seed).shuffle(genes)
        return demarcate(genes, inst)
    raise ValueError(f"unknown baseline {which!r}; choose from {BASELINES}")
