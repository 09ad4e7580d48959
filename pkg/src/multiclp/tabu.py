"""Tabu search over multi-CLP designs.

Each iteration samples a candidate list of feasible neighbors, takes the best
one whose move attribute is not tabu (or that beats the aspiration level, the
best cost seen so far), and records the accepted move's attribute in a FIFO
tabu list. Reassignment moves and dimension mutations keep separate lists.
The iteration counter advances only on accepted moves, so a global cap on
neighbor evaluations guards against stalling.
"""

import random
import time as _time
from collections import deque
from dataclasses import dataclass

from .arch import Architecture, Platform, Precision
from .annealing import SearchResult, TraceRecord
from .design import Evaluator, Solution, neighbor, random_solution


@dataclass
class TsParams:
    candidate_list_size: int = 20
    tabu_tenure: int = 7
    max_time: int = 1000
    seed: int = 0
    max_evals: int = None     # default: 5 * candidate_list_size * max_time
    stall_rounds: int = 3     # resample rounds before accepting a tabu move anyway
    tile_moves: bool = False

    def __post_init__(self):
        if self.candidate_list_size < 1:
            raise ValueError("candidate_list_size must be >= 1")
        if self.tabu_tenure < 0:
            raise ValueError("tabu_tenure must be >= 0")
        if self.max_evals is None:
            self.max_evals = 5 * self.candidate_list_size * max(1, self.max_time)


def ts_run(arch: Architecture, platform: Platform, precision: Precision,
           params: TsParams = None, evaluator: Evaluator = None) -> SearchResult:
    """One seeded tabu-search run; deterministic for identical params."""
    params = params or TsParams()
    if evaluator is None:
        evaluator = Evaluator(arch, platform, precision)
    rng = random.Random(params.seed)
    started = _time.perf_counter()

    sol = random_solution(arch, platform, precision, rng, evaluator)
    if params.tile_moves:
        sol = evaluator.with_tilings(sol)
    best_key = evaluator.evaluate(sol).cost_key
    best_sol = sol
    aspiration = best_key[0]

    reassign_tl = deque(maxlen=params.tabu_tenure)
    mutate_tl = deque(maxlen=params.tabu_tenure)

    trace = []
    evals = 0
    iteration = 0
    stall = 0
    while iteration < params.max_time and evals < params.max_evals:
        candidates = []
        for _ in range(params.candidate_list_size):
            cand, move = neighbor(sol, evaluator, rng, tile_moves=params.tile_moves)
            evals += 1
            if move is not None:
                candidates.append((evaluator.evaluate(cand).cost_key, cand, move))
        if not candidates:
            stall += 1
            if stall > params.stall_rounds:
                break
            continue
        candidates.sort(key=lambda item: item[0])

        def is_tabu(move):
            tl = reassign_tl if move.kind == "reassign" else mutate_tl
            return move.attr in tl

        admissible = [
            item for item in candidates
            if not is_tabu(item[2]) or item[0][0] < aspiration
        ]
        if admissible:
            chosen = admissible[0]
            stall = 0
        elif stall < params.stall_rounds:
            stall += 1
            continue
        else:
            chosen = candidates[0]
            stall = 0

        key, cand, move = chosen
        tl = reassign_tl if move.kind == "reassign" else mutate_tl
        tl.append(move.attr)
        sol = cand
        if key[0] < aspiration:
            aspiration = key[0]
        if key < best_key:
            best_key, best_sol = key, cand
        iteration += 1
        trace.append(TraceRecord(iteration, key[0], best_key[0], None))

    return SearchResult(
        best=evaluator.with_tilings(best_sol),
        best_cost=best_key[0],
        best_key=best_key,
        trace=trace,
        evaluations=evals,
        runtime_s=_time.perf_counter() - started,
        seed=params.seed,
    )
