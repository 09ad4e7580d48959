"""Candidate multi-CLP designs: encoding, evaluation, and neighborhood moves.

A solution fixes (i) up to L CLP slots with their <Tn, Tm>, (ii) the
assignment of every CONV layer to exactly one slot, and (iii) optionally a
pinned tiling per layer. Slots with no assigned layers cost nothing and keep
their dimensions so a later reassignment can activate them.

Search sees designs through an Evaluator, which optimizes tilings on demand
(unless the solution pins them), checks the DSP/BRAM constraints, and ranks
designs by (cycles, peak required bandwidth, BRAM), exactly and
deterministically.
"""

import math
import random
from dataclasses import dataclass, replace
from fractions import Fraction

from .arch import Architecture, Platform, Precision
from . import cost, tiling
from .tiling import NoFeasibleTilingError, Tiling


class InfeasiblePlatformError(RuntimeError):
    """The platform cannot host even a single minimal 1x1 CLP."""


@dataclass(frozen=True)
class ClpConfig:
    tn: int
    tm: int

    def __post_init__(self):
        if self.tn < 1 or self.tm < 1:
            raise ValueError("unrolling factors must be >= 1")


@dataclass(frozen=True)
class Solution:
    clps: tuple                  # one ClpConfig per slot
    assignment: tuple            # layer id -> slot index
    tilings: tuple = None        # optional pinned Tiling per layer

    def active_slots(self) -> tuple:
        return tuple(sorted(set(self.assignment)))

    def num_active(self) -> int:
        return len(set(self.assignment))

    def key(self) -> tuple:
        return (self.clps, self.assignment, self.tilings)


@dataclass(frozen=True)
class Move:
    """One neighborhood step; kind is 'reassign', 'tn', 'tm', 'tr' or 'tc'."""

    kind: str
    target: int     # layer id for reassign/tr/tc, slot index for tn/tm
    value: int      # new slot for reassign, new factor otherwise

    @property
    def attr(self) -> tuple:
        """Tabu attribute: (layer, slot) for reassigns, (slot, value) for mutations."""
        return (self.target, self.value)


@dataclass(frozen=True)
class Evaluation:
    cycles: int
    peak_bw: Fraction            # bytes per cycle, exact
    bram: int
    dsp: int
    tilings: tuple
    feasible: bool
    violation: str = None

    @property
    def cost_key(self) -> tuple:
        """Lexicographic order: cycles, then bandwidth need, then BRAM."""
        return (self.cycles, self.peak_bw, self.bram)


_INFEASIBLE_KEY = (float("inf"), Fraction(0), 0)


class Evaluator:
    """Caches cost evaluations of solutions for one (arch, platform, precision)."""

    def __init__(self, arch: Architecture, platform: Platform, precision: Precision,
                 max_cache: int = 200_000):
        self.arch = arch
        self.platform = platform
        self.precision = precision
        self.tile_cache = {}
        self._evals = {}
        self._layer_stats = {}
        self._max_cache = max_cache

    def evaluate(self, sol: Solution) -> Evaluation:
        key = sol.key()
        hit = self._evals.get(key)
        if hit is not None:
            return hit
        result = self._evaluate(sol)
        if len(self._evals) >= self._max_cache:
            self._evals.clear()
        self._evals[key] = result
        return result

    def _layer_metrics(self, layer, clp, tile):
        """(compute cycles, traffic elements) for one placed, tiled layer."""
        key = (layer.shape, clp.tn, clp.tm, tile.tr, tile.tc)
        hit = self._layer_stats.get(key)
        if hit is None:
            hit = (
                cost.comp_cycles(layer, clp),
                cost.traffic_elements(layer, clp, tile),
            )
            self._layer_stats[key] = hit
        return hit

    def _evaluate(self, sol: Solution) -> Evaluation:
        dsp = cost.dsp_usage(sol, self.precision)
        if dsp > self.platform.dsp_max:
            return Evaluation(0, Fraction(0), 0, dsp, None, False,
                              f"DSP {dsp} > {self.platform.dsp_max}")
        if sol.tilings is None:
            try:
                tilings, usage = tiling.optimize_design_tilings(
                    sol, self.arch, self.platform, self.precision, self.tile_cache
                )
            except NoFeasibleTilingError as exc:
                return Evaluation(0, Fraction(0), 0, dsp, None, False, str(exc))
            bram = sum(usage.values())
        else:
            tilings = sol.tilings
            bram = cost.bram_usage(sol, self.arch, self.precision)
        if bram > self.platform.bram_max:
            return Evaluation(0, Fraction(0), bram, dsp, tilings, False,
                              f"BRAM {bram} > {self.platform.bram_max}")

        data_bytes = self.precision.data_bytes
        per_cycle = self.platform.bytes_per_cycle
        clp_totals = {}
        peak = Fraction(0)
        for i, g in enumerate(sol.assignment):
            comp, traffic = self._layer_metrics(
                self.arch.layers[i], sol.clps[g], tilings[i]
            )
            transfer = math.ceil(traffic * data_bytes / per_cycle)
            clp_totals[g] = clp_totals.get(g, 0) + max(comp, transfer)
            bw = Fraction(traffic * data_bytes, comp)
            if bw > peak:
                peak = bw
        return Evaluation(max(clp_totals.values()), peak, bram, dsp, tilings, True)

    def cost_key(self, sol: Solution) -> tuple:
        ev = self.evaluate(sol)
        return ev.cost_key if ev.feasible else _INFEASIBLE_KEY

    def is_feasible(self, sol: Solution):
        """(feasible, violation detail or None)."""
        ev = self.evaluate(sol)
        return ev.feasible, ev.violation

    def with_tilings(self, sol: Solution) -> Solution:
        """The same solution with its optimized tilings materialized."""
        ev = self.evaluate(sol)
        if not ev.feasible:
            raise ValueError(f"infeasible solution: {ev.violation}")
        return replace(sol, tilings=ev.tilings)

    def report(self, sol: Solution) -> cost.CostReport:
        return cost.performance_metrics(
            self.with_tilings(sol), self.arch, self.platform, self.precision
        )

    def mac_budget(self) -> int:
        return self.platform.dsp_max // cost.dsp_per_mac(self.precision)


def _check_platform_admits_minimal(evaluator: Evaluator):
    arch = evaluator.arch
    minimal = Solution(
        clps=tuple(ClpConfig(1, 1) for _ in arch.layers),
        assignment=tuple(0 for _ in arch.layers),
    )
    ev = evaluator.evaluate(minimal)
    if not ev.feasible:
        raise InfeasiblePlatformError(
            f"platform {evaluator.platform.name!r} cannot fit a minimal design: {ev.violation}"
        )


def random_solution(arch: Architecture, platform: Platform, precision: Precision,
                    rng, evaluator: Evaluator = None, max_attempts: int = 1000) -> Solution:
    """Draw a uniform-ish feasible starting design; deterministic for a seeded rng."""
    if isinstance(rng, int):
        rng = random.Random(rng)
    if evaluator is None:
        evaluator = Evaluator(arch, platform, precision)
    _check_platform_admits_minimal(evaluator)

    num_layers = len(arch.layers)
    macs = evaluator.mac_budget()
    max_n, max_m = arch.max_n, arch.max_m
    for _ in range(max_attempts):
        assignment = tuple(rng.randrange(num_layers) for _ in range(num_layers))
        active = sorted(set(assignment))
        remaining = macs
        slots = {}
        ok = True
        for pos, g in enumerate(active):
            # keep one MAC in reserve per CLP still waiting for its draw
            avail = remaining - (len(active) - pos - 1)
            if avail < 1:
                ok = False
                break
            tn = rng.randint(1, min(max_n, avail))
            tm = rng.randint(1, min(max_m, avail // tn))
            slots[g] = ClpConfig(tn, tm)
            remaining -= tn * tm
        if not ok:
            continue
        clps = tuple(
            slots.get(g, ClpConfig(rng.randint(1, max_n), rng.randint(1, max_m)))
            for g in range(num_layers)
        )
        sol = Solution(clps=clps, assignment=assignment)
        if evaluator.evaluate(sol).feasible:
            return sol
    raise InfeasiblePlatformError(
        f"could not draw a feasible random design on {platform.name!r} "
        f"after {max_attempts} attempts"
    )


def apply_move(sol: Solution, move: Move) -> Solution:
    if move.kind == "reassign":
        assignment = list(sol.assignment)
        assignment[move.target] = move.value
        return replace(sol, assignment=tuple(assignment))
    if move.kind in ("tn", "tm"):
        clps = list(sol.clps)
        current = clps[move.target]
        clps[move.target] = (
            ClpConfig(move.value, current.tm)
            if move.kind == "tn"
            else ClpConfig(current.tn, move.value)
        )
        return replace(sol, clps=tuple(clps))
    if move.kind in ("tr", "tc"):
        if sol.tilings is None:
            raise ValueError("tile moves require a solution with pinned tilings")
        tilings = list(sol.tilings)
        current = tilings[move.target]
        tilings[move.target] = (
            Tiling(move.value, current.tc)
            if move.kind == "tr"
            else Tiling(current.tr, move.value)
        )
        return replace(sol, tilings=tuple(tilings))
    raise ValueError(f"unknown move kind {move.kind!r}")


def _draw_move(sol: Solution, arch: Architecture, rng, tile_moves: bool) -> Move:
    # 80% mutate a CLP dimension, 20% reassign a layer
    if rng.random() < 0.8 or len(sol.clps) < 2:
        kinds = ["tn", "tm"]
        if tile_moves:
            kinds += ["tr", "tc"]
        kind = rng.choice(kinds)
        if kind in ("tn", "tm"):
            slot = rng.choice(sol.active_slots())
            bound = arch.max_n if kind == "tn" else arch.max_m
            return Move(kind, slot, rng.randint(1, bound))
        layer = rng.randrange(len(arch.layers))
        bound = arch.layers[layer].rows if kind == "tr" else arch.layers[layer].cols
        return Move(kind, layer, rng.randint(1, bound))
    layer = rng.randrange(len(arch.layers))
    current = sol.assignment[layer]
    target = rng.randrange(len(sol.clps) - 1)
    if target >= current:
        target += 1
    return Move("reassign", layer, target)


def _is_identity(sol: Solution, move: Move) -> bool:
    if move.kind == "tn":
        return sol.clps[move.target].tn == move.value
    if move.kind == "tm":
        return sol.clps[move.target].tm == move.value
    if move.kind == "tr":
        return sol.tilings[move.target].tr == move.value
    if move.kind == "tc":
        return sol.tilings[move.target].tc == move.value
    return False


def neighbor(sol: Solution, evaluator: Evaluator, rng, max_tries: int = 64,
             tile_moves: bool = False):
    """One feasible move away from sol; (sol, None) after max_tries rejections."""
    for _ in range(max_tries):
        move = _draw_move(sol, evaluator.arch, rng, tile_moves)
        if _is_identity(sol, move):
            continue
        candidate = apply_move(sol, move)
        if evaluator.evaluate(candidate).feasible:
            return candidate, move
    return sol, None
