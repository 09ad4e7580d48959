"""Ground-truth machinery: exhaustive enumeration and a loop-nest simulator.

exhaustive_search enumerates every layer-to-CLP partition and every <Tn, Tm>
combination inside the DSP budget, inner-optimizing tilings exactly like the
heuristic searches, and returns the global optimum under the same
(cycles, bandwidth, BRAM) order. It is only usable on toy instances and
refuses to start when the space outgrows a configurable cap.

simulate_clp executes the tiled CONV schedule abstractly: it walks the
r/c/m/n tile loops, charges K^2 x (effective tile rows x cols) cycles per
compute stage, and tallies buffer refills and off-chip traffic. It validates
the closed-form cycle and access-count formulas without reusing them.
"""

from dataclasses import dataclass

from .arch import Architecture, LayerConfig, Platform, Precision
from . import cost
from .cost import BufferKind
from .design import ClpConfig, Evaluator, Solution


class SearchSpaceTooLarge(RuntimeError):
    """The instance exceeds the enumeration cap; use the heuristics instead."""


@dataclass(frozen=True)
class OracleBounds:
    max_tn: int = None    # defaults to the architecture's largest N
    max_tm: int = None    # defaults to the largest M
    cap: int = 10_000_000


@dataclass
class OracleResult:
    best: Solution
    best_key: tuple
    evaluated: int


def _set_partitions(items):
    """All partitions of items into non-empty groups, each group sorted."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in _set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [[first] + partial[i]] + partial[i + 1:]
        yield [[first]] + partial


def _bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for value in row:
            nxt.append(nxt[-1] + value)
        row = nxt
    return row[0]


def _estimate_space(num_layers: int, max_tn: int, max_tm: int, cap: int) -> int:
    bell = _bell_number(num_layers)
    if bell > cap:
        return bell
    total = 0
    for part in _set_partitions(list(range(num_layers))):
        total += (max_tn * max_tm) ** len(part)
        if total > cap:
            break
    return total


def exhaustive_search(arch: Architecture, platform: Platform, precision: Precision,
                      bounds: OracleBounds = None,
                      evaluator: Evaluator = None) -> OracleResult:
    """Globally optimal design by full enumeration; result is order-invariant."""
    bounds = bounds or OracleBounds()
    max_tn = bounds.max_tn or arch.max_n
    max_tm = bounds.max_tm or arch.max_m
    num_layers = len(arch.layers)

    estimate = _estimate_space(num_layers, max_tn, max_tm, bounds.cap)
    if estimate > bounds.cap:
        raise SearchSpaceTooLarge(
            f"about {estimate} designs for L={num_layers}, cap is {bounds.cap}"
        )

    if evaluator is None:
        evaluator = Evaluator(arch, platform, precision)
    mac_budget = evaluator.mac_budget()

    best_key = None
    best_tie = None
    best_sol = None
    evaluated = 0

    for part in _set_partitions(list(range(num_layers))):
        groups = sorted(part, key=lambda g: g[0])
        assignment = [0] * num_layers
        for slot, group in enumerate(groups):
            for layer_id in group:
                assignment[layer_id] = slot
        assignment = tuple(assignment)
        num_groups = len(groups)

        def combos(slot, remaining, chosen):
            nonlocal best_key, best_tie, best_sol, evaluated
            if slot == num_groups:
                clps = tuple(chosen) + tuple(
                    ClpConfig(1, 1) for _ in range(num_layers - num_groups)
                )
                sol = Solution(clps=clps, assignment=assignment)
                evaluated += 1
                if evaluated > bounds.cap:
                    raise SearchSpaceTooLarge(
                        f"enumeration passed the cap of {bounds.cap} designs"
                    )
                ev = evaluator.evaluate(sol)
                if not ev.feasible:
                    return
                tie = (tuple((c.tn, c.tm) for c in clps), assignment)
                if (
                    best_key is None
                    or ev.cost_key < best_key
                    or (ev.cost_key == best_key and tie < best_tie)
                ):
                    best_key, best_tie, best_sol = ev.cost_key, tie, sol
                return
            # keep one MAC for each CLP still to be dimensioned
            reserve = num_groups - slot - 1
            for tn in range(1, min(max_tn, remaining - reserve) + 1):
                for tm in range(1, min(max_tm, (remaining - reserve) // tn) + 1):
                    chosen.append(ClpConfig(tn, tm))
                    combos(slot + 1, remaining - tn * tm, chosen)
                    chosen.pop()

        combos(0, mac_budget, [])

    if best_sol is None:
        raise SearchSpaceTooLarge("no feasible design in the enumerated space")
    return OracleResult(
        best=evaluator.with_tilings(best_sol),
        best_key=best_key,
        evaluated=evaluated,
    )


_SIM_LIMIT = 16


@dataclass(frozen=True)
class SimResult:
    compute_stages: int
    cycles: int
    refills: dict               # BufferKind -> whole-buffer loads (OF: write-outs)
    traffic_elements: int
    traffic_bytes: int


def simulate_clp(layer: LayerConfig, clp, tiling,
                 precision: Precision = Precision.FP32) -> SimResult:
    """Walk the tiled CONV loop nest and count stages, cycles, and transfers."""
    n, m, r, c, k, s = layer.shape
    if max(n, m) > _SIM_LIMIT or max(r, c) > _SIM_LIMIT:
        raise ValueError(
            f"instance too large to simulate (dims must be <= {_SIM_LIMIT})"
        )
    tn, tm = clp.tn, clp.tm
    tr, tc = tiling.tr, tiling.tc

    n_tiles = len(range(0, n, tn))
    m_tiles = len(range(0, m, tm))
    stages_per_spatial = m_tiles * n_tiles

    stages = 0
    cycles = 0
    input_refills = 0
    weight_refills = 0
    output_writes = 0
    for r0 in range(0, r, tr):
        rt_eff = min(tr, r - r0)
        for c0 in range(0, c, tc):
            ct_eff = min(tc, c - c0)
            # each (m, n) tile pair is one compute stage with one IF and one
            # W refill; the unrolled MAC grid finishes a stage in
            # K^2 x effective-tile cycles regardless of partial n/m tiles
            stages += stages_per_spatial
            input_refills += stages_per_spatial
            weight_refills += stages_per_spatial
            cycles += k * k * rt_eff * ct_eff * stages_per_spatial
            output_writes += m_tiles

    if_fp = (k + s * (tr - 1)) * (k + s * (tc - 1))
    elements = (
        input_refills * tn * if_fp
        + weight_refills * tn * tm * k * k
        + output_writes * tm * tr * tc
    )
    return SimResult(
        compute_stages=stages,
        cycles=cycles,
        refills={
            BufferKind.IF: input_refills,
            BufferKind.W: weight_refills,
            BufferKind.OF: output_writes,
        },
        traffic_elements=elements,
        traffic_bytes=elements * precision.data_bytes,
    )
