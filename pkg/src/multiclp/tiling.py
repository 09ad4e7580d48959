"""Bandwidth-minimizing tile-size selection under BRAM budgets.

For a fixed CLP <Tn, Tm> and layer, the tile shape <Tr, Tc> only changes the
off-chip traffic (hence the bandwidth needed to stay compute bound) and the
buffer footprints (hence BRAM). Each layer wants the tiling with the lowest
required bandwidth; the BRAM budget couples the layers sharing a CLP because
bank depth is sized by the largest footprint in the CLP's schedule.

Only Tr values of the form ceil(R/i) matter: within a fixed refill count,
growing the tile further only inflates footprints and traffic. That keeps the
candidate grid near 4*sqrt(R*C) points per layer.

The per-CLP solver minimizes the peak required bandwidth first, then lets every
layer individually drop to its lowest-bandwidth candidate that still fits.
The feasibility frontier (smallest BRAM need as the allowed peak grows) is
precomputed once per CLP configuration and reused across budget queries.
Ties break toward smaller Tr*Tc, then smaller Tr.
"""

from dataclasses import dataclass

from .arch import Architecture, LayerConfig, Platform, Precision
from . import cost
from .cost import ceil_div


class NoFeasibleTilingError(RuntimeError):
    """Even minimal 1x1 tiles do not fit the BRAM budget."""


@dataclass(frozen=True)
class Tiling:
    tr: int
    tc: int


@dataclass(frozen=True)
class _Candidate:
    tr: int
    tc: int
    traffic: int      # off-chip elements for the whole layer
    if_fp: int        # IF bank footprint, elements
    area: int         # tr * tc == OF bank footprint
    bw: float         # traffic elements per compute cycle


_AXIS_CACHE = {}


def _axis_candidates(extent: int) -> list:
    # minimal tile length for each achievable refill count
    cands = _AXIS_CACHE.get(extent)
    if cands is None:
        cands = sorted({ceil_div(extent, i) for i in range(1, extent + 1)})
        _AXIS_CACHE[extent] = cands
    return cands


def _single_tile(layer: LayerConfig, clp) -> _Candidate:
    n, m, r, c, k, s = layer.shape
    n_t = ceil_div(n, clp.tn)
    m_t = ceil_div(m, clp.tm)
    if_fp = (k + s * (r - 1)) * (k + s * (c - 1))
    traffic = (
        n_t * m_t * (clp.tn * if_fp + clp.tn * clp.tm * k * k)
        + m_t * clp.tm * r * c
    )
    cycles = n_t * m_t * r * c * k * k
    return _Candidate(r, c, traffic, if_fp, r * c, traffic / cycles)


def tile_candidates(layer: LayerConfig, clp, cache: dict = None) -> list:
    """Non-dominated (Tr, Tc) options sorted by (bandwidth, area, tr, tc)."""
    key = ("cand", layer.shape, clp.tn, clp.tm)
    if cache is not None and key in cache:
        return cache[key]

    n, m, r, c, k, s = layer.shape
    tn, tm = clp.tn, clp.tm
    n_t = ceil_div(n, tn)
    m_t = ceil_div(m, tm)
    cycles = n_t * m_t * r * c * k * k
    w_per_refill = tn * tm * k * k
    nm = n_t * m_t

    tcs = _axis_candidates(c)
    tc_exts = [k + s * (tc - 1) for tc in tcs]
    tc_counts = [ceil_div(c, tc) for tc in tcs]
    raw = []
    for tr in _axis_candidates(r):
        rows_ext = k + s * (tr - 1)
        r_t = ceil_div(r, tr)
        for tc, col_ext, c_t in zip(tcs, tc_exts, tc_counts):
            spatial = r_t * c_t
            if_fp = rows_ext * col_ext
            area = tr * tc
            traffic = nm * spatial * (tn * if_fp + w_per_refill) \
                + m_t * spatial * tm * area
            raw.append((traffic, area, tr, tc, if_fp))
    raw.sort()

    # drop candidates beaten on traffic, both footprints, and Tr at once;
    # the sort makes every earlier entry's traffic <= the current one's
    kept = []
    out = []
    min_if = min_area = min_tr = 1 << 60
    for traffic, area, tr, tc, if_fp in raw:
        if if_fp >= min_if and area >= min_area and tr >= min_tr:
            if any(p_if <= if_fp and p_area <= area and p_tr <= tr
                   for p_if, p_area, p_tr in kept):
                continue
        kept.append((if_fp, area, tr))
        if if_fp < min_if:
            min_if = if_fp
        if area < min_area:
            min_area = area
        if tr < min_tr:
            min_tr = tr
        out.append(_Candidate(tr, tc, traffic, if_fp, area, traffic / cycles))

    if cache is not None:
        cache[key] = out
    return out


class _ClpPlan:
    """Tiling solver for one (CLP, layer list, precision), reusable across budgets."""

    def __init__(self, clp, layers, precision: Precision, cache: dict = None):
        self.clp = clp
        self.addr = cost.bram_addr_depth(precision)
        self.layers = list(layers)
        self._cache = cache
        self.w_fp = max(layer.kernel**2 for layer in layers)
        if all(l.kernel >= l.stride for l in layers):
            # stride <= kernel makes the single whole-layer tile the strict
            # traffic minimum, so the bandwidth-optimal pick needs no sweep
            self.best = [_single_tile(l, clp) for l in layers]
        else:
            self.best = [cl[0] for cl in self.cands]
        self.best_bram = self.bram_for(self.best)
        self._frontier = None   # built lazily; unconstrained designs never need it

    @property
    def cands(self) -> list:
        cands = getattr(self, "_cands", None)
        if cands is None:
            cands = [tile_candidates(l, self.clp, self._cache) for l in self.layers]
            self._cands = cands
        return cands

    def bram_for(self, choice) -> int:
        # double buffering sizes every bank for twice the largest footprint
        clp, addr = self.clp, self.addr
        return (
            ceil_div(2 * max(c.if_fp for c in choice), addr) * clp.tn
            + ceil_div(2 * self.w_fp, addr) * clp.tn * clp.tm
            + ceil_div(2 * max(c.area for c in choice), addr) * clp.tm
        )

    @property
    def frontier(self) -> list:
        """(bram, choices) pairs with strictly decreasing BRAM need.

        Sweeps the allowed bandwidth peak upward; at each peak every layer
        takes its area-minimal candidate within the peak, and each new BRAM
        low is recorded. The last entry is the all-1x1 floor.
        """
        if self._frontier is not None:
            return self._frontier
        events = sorted(
            ((c.bw, li, c) for li, cl in enumerate(self.cands) for c in cl),
            key=lambda e: (e[0], e[1], e[2].area, e[2].tr, e[2].tc),
        )
        picks = [None] * len(self.cands)
        missing = len(self.cands)
        frontier = []
        low = None
        i = 0
        while i < len(events):
            peak = events[i][0]
            while i < len(events) and events[i][0] == peak:
                _, li, cand = events[i]
                i += 1
                cur = picks[li]
                if cur is None:
                    missing -= 1
                    picks[li] = cand
                elif (cand.area, cand.tr, cand.tc) < (cur.area, cur.tr, cur.tc):
                    picks[li] = cand
            if missing:
                continue
            bram = self.bram_for(picks)
            if low is None or bram < low:
                frontier.append((bram, tuple(picks)))
                low = bram
        self._frontier = frontier
        return frontier

    @property
    def floor_bram(self) -> int:
        return self.frontier[-1][0]

    def solve(self, budget: int):
        """(tilings, bram) fitting the budget, or NoFeasibleTilingError."""
        if self.best_bram <= budget:
            return [Tiling(c.tr, c.tc) for c in self.best], self.best_bram

        choice = None
        for bram, picks in self.frontier:
            if bram <= budget:
                choice = list(picks)
                break
        if choice is None:
            raise NoFeasibleTilingError(
                f"CLP <{self.clp.tn},{self.clp.tm}> needs {self.floor_bram} "
                f"BRAMs even at 1x1 tiles, budget is {budget}"
            )

        # let each layer claim remaining slack, lowest bandwidth first
        for _ in range(8):
            changed = False
            for i, cl in enumerate(self.cands):
                cur = choice[i]
                for cand in cl:
                    if cand is cur:
                        break
                    if cand.if_fp <= cur.if_fp and cand.area <= cur.area:
                        choice[i] = cand      # no footprint grows: fits for sure
                        changed = True
                        break
                    choice[i] = cand
                    if self.bram_for(choice) <= budget:
                        changed = True
                        break
                    choice[i] = cur
            if not changed:
                break
        return [Tiling(c.tr, c.tc) for c in choice], self.bram_for(choice)


def _plan(clp, layers, precision, cache) -> _ClpPlan:
    if cache is None:
        return _ClpPlan(clp, layers, precision, None)
    key = ("plan", clp.tn, clp.tm, tuple(l.shape for l in layers), precision)
    plan = cache.get(key)
    if plan is None:
        plan = _ClpPlan(clp, layers, precision, cache)
        cache[key] = plan
    return plan


def optimize_clp_tilings(clp, layers, bram_budget: int, precision: Precision,
                         cache: dict = None) -> list:
    """Choose one tiling per layer of a CLP, fitting bram_budget BRAM18Ks.

    Returns tilings in the order the layers were given. Raises
    NoFeasibleTilingError when even all-minimal tiles exceed the budget.
    """
    if not layers:
        return []
    tilings, _ = _plan(clp, layers, precision, cache).solve(bram_budget)
    return tilings


def optimize_design_tilings(sol, arch: Architecture, platform: Platform,
                            precision: Precision, cache: dict = None):
    """Tile every layer of a design within the platform BRAM budget.

    Each CLP is first tiled unconstrained; if the design total fits, done.
    Otherwise CLPs are re-tiled greedily against the remaining global budget
    (reserving every pending CLP's minimal footprint), followed by one
    refinement pass with the final slack. CLPs are processed in the canonical
    order of their first assigned layer so that the result does not depend on
    slot numbering.

    Returns (tilings, per-CLP BRAM usage keyed by slot).
    """
    if cache is None:
        cache = {}
    schedules = cost.schedules_by_clp(sol)
    order = sorted(schedules, key=lambda g: schedules[g][0])
    budget = platform.bram_max

    plans = {
        g: _plan(sol.clps[g], [arch.layers[i] for i in schedules[g]], precision, cache)
        for g in order
    }

    chosen = {}
    usage = {}

    def solve(g, share):
        key = ("solved", sol.clps[g].tn, sol.clps[g].tm,
               tuple(arch.layers[i].shape for i in schedules[g]), share, precision)
        hit = cache.get(key)
        if hit is None:
            hit = plans[g].solve(share)
            cache[key] = hit
        chosen[g], usage[g] = hit

    if sum(plans[g].best_bram for g in order) <= budget:
        for g in order:
            tilings, bram = plans[g].solve(budget)   # fast path, no frontier
            chosen[g], usage[g] = tilings, bram
    else:
        floors = {g: plans[g].floor_bram for g in order}
        if sum(floors.values()) > budget:
            raise NoFeasibleTilingError(
                f"minimal tilings need {sum(floors.values())} BRAMs, budget is {budget}"
            )
        for pos, g in enumerate(order):
            reserve = sum(floors[h] for h in order[pos + 1:])
            spent = sum(usage[h] for h in order[:pos])
            solve(g, budget - spent - reserve)
        for g in order:
            others = sum(usage[h] for h in order if h != g)
            solve(g, budget - others)

    tilings = [None] * len(arch.layers)
    for g, layer_ids in schedules.items():
        for layer_id, tiling in zip(layer_ids, chosen[g]):
            tilings[layer_id] = tiling
    return tuple(tilings), usage
