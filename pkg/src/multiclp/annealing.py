"""Simulated annealing over multi-CLP designs.

Classic Metropolis annealing: downhill moves are always taken, uphill moves of
height dh pass with probability exp(-dh / T). The temperature cools by alpha
after every Metropolis call while the per-call move budget grows by beta, and
the run stops once the cumulative move count reaches max_time. dh is measured
in raw design cycles.
"""

import math
import random
import time as _time
from dataclasses import dataclass, field

from .arch import Architecture, Platform, Precision
from .design import Evaluator, Solution, neighbor, random_solution


@dataclass
class SaParams:
    t0: float = 25_000.0
    alpha: float = 0.99
    beta: float = 1.005
    m0: int = 10
    max_time: int = 1000
    seed: int = 0
    tile_moves: bool = False

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        if self.beta <= 1:
            raise ValueError("beta must be > 1")
        if self.t0 <= 0:
            raise ValueError("t0 must be positive")
        if self.m0 < 1 or self.max_time < 0:
            raise ValueError("m0 must be >= 1 and max_time >= 0")


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    current_cost: int
    best_cost: int
    temperature: float = None   # None on tabu-search traces


@dataclass
class SearchResult:
    best: Solution
    best_cost: int
    best_key: tuple
    trace: list = field(default_factory=list)
    evaluations: int = 0
    runtime_s: float = 0.0
    seed: int = 0


def accept_uphill(delta, temperature: float, rng) -> bool:
    """Metropolis criterion for a non-improving move of height delta >= 0."""
    if temperature <= 0:
        return False
    exponent = -delta / temperature
    if exponent < -745:   # exp underflows to 0 anyway
        return False
    return rng.random() < math.exp(exponent)


def metropolis(sol: Solution, evaluator: Evaluator, temperature: float, steps: int,
               rng, best: tuple, trace: list, time_offset: int,
               tile_moves: bool = False):
    """Anneal for `steps` moves at one temperature; returns (state, best)."""
    best_key, best_sol = best
    cur_cycles = evaluator.evaluate(sol).cycles
    for i in range(steps):
        cand, move = neighbor(sol, evaluator, rng, tile_moves=tile_moves)
        cand_ev = evaluator.evaluate(cand)
        delta = cand_ev.cycles - cur_cycles
        if delta < 0 or accept_uphill(delta, temperature, rng):
            sol = cand
            cur_cycles = cand_ev.cycles
            if cand_ev.cost_key < best_key:
                best_key, best_sol = cand_ev.cost_key, cand
        trace.append(
            TraceRecord(time_offset + i + 1, cur_cycles, best_key[0], temperature)
        )
    return sol, (best_key, best_sol)


def sa_run(arch: Architecture, platform: Platform, precision: Precision,
           params: SaParams = None, evaluator: Evaluator = None) -> SearchResult:
    """One seeded annealing run; identical params and seed replay bit-identically."""
    params = params or SaParams()
    if evaluator is None:
        evaluator = Evaluator(arch, platform, precision)
    rng = random.Random(params.seed)
    started = _time.perf_counter()

    sol = random_solution(arch, platform, precision, rng, evaluator)
    if params.tile_moves:
        sol = evaluator.with_tilings(sol)
    best = (evaluator.evaluate(sol).cost_key, sol)

    trace = []
    temperature = params.t0
    budget = float(params.m0)
    elapsed = 0
    while elapsed < params.max_time:
        steps = max(1, int(round(budget)))
        sol, best = metropolis(
            sol, evaluator, temperature, steps, rng, best, trace, elapsed,
            tile_moves=params.tile_moves,
        )
        elapsed += steps
        temperature *= params.alpha
        budget *= params.beta

    best_key, best_sol = best
    return SearchResult(
        best=evaluator.with_tilings(best_sol),
        best_cost=best_key[0],
        best_key=best_key,
        trace=trace,
        evaluations=len(trace),
        runtime_s=_time.perf_counter() - started,
        seed=params.seed,
    )
