"""Analytical cost and performance model for multi-CLP accelerators.

A CLP (convolutional layer processor) is a Tn x Tm grid of MAC units fed by
on-chip buffers. Every quantity here is a closed-form function of the layer
shape <N, M, R, C, K, S>, the CLP unrolling factors <Tn, Tm>, the per-layer
tiling factors <Tr, Tc>, the data precision, and the platform budgets:

  - compute cycles per layer and the matching ops/cycle roof,
  - DSP slices for the MAC grid,
  - BRAM18K blocks for the double-buffered IF/W/OF banks,
  - off-chip traffic, computation-to-communication ratio, and the roofline
    attainable performance,
  - whole-design cycles, arithmetic utilization and throughput.

All functions are pure; design-level aggregates take a solution object with
`clps`, `assignment` and `tilings` fields (see multiclp.design).
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .arch import Architecture, LayerConfig, Platform, Precision


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class BufferKind(Enum):
    IF = "if"
    W = "w"
    OF = "of"


# DSP slices per multiplier+adder pair and BRAM18K addressable depth, per format
_DSP_PER_MAC = {Precision.FP32: 5, Precision.FXP16: 1}
_BRAM_DEPTH = {Precision.FP32: 512, Precision.FXP16: 1024}


def dsp_per_mac(precision: Precision) -> int:
    """DSP slices needed for one multiplier plus one adder."""
    try:
        return _DSP_PER_MAC[precision]
    except (KeyError, TypeError):
        raise ValueError(f"no DSP cost table entry for {precision!r}") from None


def bram_addr_depth(precision: Precision) -> int:
    """Words per BRAM18K when configured for this data width."""
    try:
        return _BRAM_DEPTH[precision]
    except (KeyError, TypeError):
        raise ValueError(f"no BRAM depth table entry for {precision!r}") from None


# ---------------------------------------------------------------------------
# per-layer compute model
# ---------------------------------------------------------------------------

def comp_cycles(layer: LayerConfig, clp) -> int:
    """Cycles to run one CONV layer on a Tn x Tm CLP: ceil(N/Tn)*ceil(M/Tm)*R*C*K^2."""
    return (
        ceil_div(layer.n_in, clp.tn)
        * ceil_div(layer.m_out, clp.tm)
        * layer.rows
        * layer.cols
        * layer.kernel**2
    )


def comp_perf(layer: LayerConfig, clp) -> float:
    """Computational roof in ops/cycle: 2NM / (ceil(N/Tn)*ceil(M/Tm))."""
    return 2 * layer.n_in * layer.m_out / (
        ceil_div(layer.n_in, clp.tn) * ceil_div(layer.m_out, clp.tm)
    )


def layer_utilization(layer: LayerConfig, clp) -> float:
    """Fraction of the MAC grid doing useful work on this layer, in (0, 1]."""
    return (layer.n_in / clp.tn) * (layer.m_out / clp.tm) / (
        ceil_div(layer.n_in, clp.tn) * ceil_div(layer.m_out, clp.tm)
    )


# ---------------------------------------------------------------------------
# DSP usage
# ---------------------------------------------------------------------------

def clp_dsp_usage(clp, precision: Precision) -> int:
    return dsp_per_mac(precision) * clp.tn * clp.tm


def dsp_usage(sol, precision: Precision) -> int:
    """Total DSP slices; CLP slots with no assigned layers consume none."""
    active = set(sol.assignment)
    return sum(clp_dsp_usage(sol.clps[g], precision) for g in active)


# ---------------------------------------------------------------------------
# BRAM usage
# ---------------------------------------------------------------------------

def mfp(kind: BufferKind, layer: LayerConfig, tiling) -> int:
    """Memory footprint of one tile on a single bank, in elements."""
    if kind is BufferKind.IF:
        return (layer.kernel + layer.stride * (tiling.tr - 1)) * (
            layer.kernel + layer.stride * (tiling.tc - 1)
        )
    if kind is BufferKind.W:
        return layer.kernel**2
    return tiling.tr * tiling.tc


def bank_count(kind: BufferKind, clp) -> int:
    """Banks per buffer: IF feeds Tn channels, W feeds every MAC, OF drains Tm."""
    if kind is BufferKind.IF:
        return clp.tn
    if kind is BufferKind.W:
        return clp.tn * clp.tm
    return clp.tm


def min_bank_depth(kind: BufferKind, schedule) -> int:
    """Smallest double-buffered bank depth covering every consecutive tile pair.

    `schedule` is the CLP's processing sequence of (layer, tiling) pairs; the
    successor of the last layer wraps to the first (next episode).
    """
    schedule = list(schedule)
    if not schedule:
        raise ValueError("CLP schedule is empty")
    footprints = [mfp(kind, layer, tiling) for layer, tiling in schedule]
    depth = 0
    for i, fp in enumerate(footprints):
        succ = footprints[(i + 1) % len(footprints)]
        depth = max(depth, fp + succ, 2 * fp)
    return depth


def clp_bram_usage(clp, schedule, precision: Precision) -> int:
    """BRAM18K count for one CLP's three buffers."""
    addr = bram_addr_depth(precision)
    total = 0
    for kind in BufferKind:
        depth = min_bank_depth(kind, schedule)
        total += ceil_div(depth, addr) * bank_count(kind, clp)
    return total


def bram_usage(sol, arch: Architecture, precision: Precision) -> int:
    """Total BRAM18K across CLPs; empty slots contribute zero."""
    total = 0
    for g, layer_ids in schedules_by_clp(sol).items():
        schedule = [(arch.layers[i], sol.tilings[i]) for i in layer_ids]
        total += clp_bram_usage(sol.clps[g], schedule, precision)
    return total


# ---------------------------------------------------------------------------
# off-chip traffic and roofline
# ---------------------------------------------------------------------------

def access_counts(layer: LayerConfig, clp, tiling) -> dict:
    """Whole buffer refills per kind; each ratio is rounded up to a full refill."""
    n_t = ceil_div(layer.n_in, clp.tn)
    m_t = ceil_div(layer.m_out, clp.tm)
    r_t = ceil_div(layer.rows, tiling.tr)
    c_t = ceil_div(layer.cols, tiling.tc)
    spatial = r_t * c_t
    return {
        BufferKind.IF: n_t * m_t * spatial,
        BufferKind.W: n_t * m_t * spatial,
        BufferKind.OF: m_t * spatial,
    }


def traffic_elements(layer: LayerConfig, clp, tiling) -> int:
    """Total off-chip elements moved for one layer: sum of refills x banks x footprint."""
    alpha = access_counts(layer, clp, tiling)
    return sum(
        alpha[kind] * bank_count(kind, clp) * mfp(kind, layer, tiling)
        for kind in BufferKind
    )


def traffic_bytes(layer: LayerConfig, clp, tiling, precision: Precision) -> int:
    return traffic_elements(layer, clp, tiling) * precision.data_bytes


def ctc(layer: LayerConfig, clp, tiling, precision: Precision) -> float:
    """Computation-to-communication ratio in ops per off-chip byte."""
    return layer.flops / traffic_bytes(layer, clp, tiling, precision)


def min_bw_bytes_per_cycle(layer, clp, tiling, precision: Precision) -> Fraction:
    """Exact bandwidth (bytes/cycle) needed to keep this layer compute bound.

    comp_perf / ctc collapses to traffic_bytes / comp_cycles, which stays
    rational; the exact form gives deterministic comparisons in the tiling
    optimizer and in cost tie-breaking.
    """
    return Fraction(traffic_bytes(layer, clp, tiling, precision), comp_cycles(layer, clp))


def min_bw(layer, clp, tiling, platform: Platform, precision: Precision) -> float:
    """Minimum off-chip bandwidth in GB/s to reach the layer's compute roof."""
    per_cycle = min_bw_bytes_per_cycle(layer, clp, tiling, precision)
    return float(per_cycle) * platform.freq_mhz / 1000.0


def attainable_perf(layer, clp, tiling, platform: Platform, precision: Precision) -> float:
    """Roofline ops/cycle: min(compute roof, CTC x platform bytes/cycle)."""
    return min(
        comp_perf(layer, clp),
        ctc(layer, clp, tiling, precision) * platform.bytes_per_cycle,
    )


def transfer_cycles(layer, clp, tiling, platform: Platform, precision: Precision) -> int:
    return math.ceil(
        traffic_bytes(layer, clp, tiling, precision) / platform.bytes_per_cycle
    )


def layer_cycles(layer, clp, tiling, platform: Platform, precision: Precision) -> int:
    """Effective cycles: double buffering overlaps the streams, the slower one gates."""
    return max(
        comp_cycles(layer, clp),
        transfer_cycles(layer, clp, tiling, platform, precision),
    )


# ---------------------------------------------------------------------------
# design-level aggregates
# ---------------------------------------------------------------------------

def schedules_by_clp(sol) -> dict:
    """Map active CLP slot -> layer ids it processes, in network order."""
    schedules = {}
    for layer_id, g in enumerate(sol.assignment):
        schedules.setdefault(g, []).append(layer_id)
    return {g: tuple(ids) for g, ids in sorted(schedules.items())}


def _require_tilings(sol):
    if sol.tilings is None:
        raise ValueError("solution has no tilings; evaluate/optimize it first")


def clp_cycles(sol, arch: Architecture, platform: Platform, precision: Precision) -> dict:
    """Per active CLP, the cycles to finish its whole layer sequence."""
    _require_tilings(sol)
    totals = {}
    for g, layer_ids in schedules_by_clp(sol).items():
        clp = sol.clps[g]
        totals[g] = sum(
            layer_cycles(arch.layers[i], clp, sol.tilings[i], platform, precision)
            for i in layer_ids
        )
    return totals


def design_cycles(sol, arch: Architecture, platform: Platform, precision: Precision) -> int:
    """Episode length: the slowest CLP bounds the whole design."""
    return max(clp_cycles(sol, arch, platform, precision).values())


def arithmetic_utilization(sol, arch, platform, precision) -> float:
    """Cycle-weighted MAC utilization across the design's active CLPs."""
    _require_tilings(sol)
    per_clp = clp_cycles(sol, arch, platform, precision)
    weighted = 0.0
    for g, layer_ids in schedules_by_clp(sol).items():
        clp = sol.clps[g]
        for i in layer_ids:
            layer = arch.layers[i]
            weighted += layer_utilization(layer, clp) * layer_cycles(
                layer, clp, sol.tilings[i], platform, precision
            )
    return weighted / (len(per_clp) * max(per_clp.values()))


@dataclass(frozen=True)
class LayerCost:
    layer_id: int
    name: str
    clp: int
    comp_cycles: int
    transfer_cycles: int
    cycles: int
    utilization: float
    ctc: float
    min_bw_gbs: float


@dataclass(frozen=True)
class ClpCost:
    index: int
    tn: int
    tm: int
    layer_ids: tuple
    cycles: int
    dsp: int
    bram: int
    peak_min_bw_gbs: float


@dataclass(frozen=True)
class CostReport:
    """Full evaluation of one design on one platform."""

    cycles: int
    dsp: int
    bram: int
    utilization: float
    throughput_img_s: float
    perf_gops: float
    perf_unit: str
    exec_time_ms: float
    peak_min_bw_gbs: float
    per_clp: tuple = field(default_factory=tuple)
    per_layer: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "dsp": self.dsp,
            "bram": self.bram,
            "utilization": self.utilization,
            "throughput_img_s": self.throughput_img_s,
            "perf_gops": self.perf_gops,
            "perf_unit": self.perf_unit,
            "exec_time_ms": self.exec_time_ms,
            "peak_min_bw_gbs": self.peak_min_bw_gbs,
            "per_clp": [vars(c) | {"layer_ids": list(c.layer_ids)} for c in self.per_clp],
            "per_layer": [vars(l) for l in self.per_layer],
        }


def performance_metrics(sol, arch: Architecture, platform: Platform,
                        precision: Precision) -> CostReport:
    """Assemble the per-layer, per-CLP and whole-design cost breakdown."""
    _require_tilings(sol)
    schedules = schedules_by_clp(sol)
    per_layer = []
    per_clp = []
    for g, layer_ids in schedules.items():
        clp = sol.clps[g]
        schedule = [(arch.layers[i], sol.tilings[i]) for i in layer_ids]
        clp_total = 0
        clp_peak_bw = 0.0
        for i in layer_ids:
            layer = arch.layers[i]
            tiling = sol.tilings[i]
            comp = comp_cycles(layer, clp)
            xfer = transfer_cycles(layer, clp, tiling, platform, precision)
            bw = min_bw(layer, clp, tiling, platform, precision)
            clp_total += max(comp, xfer)
            clp_peak_bw = max(clp_peak_bw, bw)
            per_layer.append(
                LayerCost(
                    layer_id=i,
                    name=layer.name,
                    clp=g,
                    comp_cycles=comp,
                    transfer_cycles=xfer,
                    cycles=max(comp, xfer),
                    utilization=layer_utilization(layer, clp),
                    ctc=ctc(layer, clp, tiling, precision),
                    min_bw_gbs=bw,
                )
            )
        per_clp.append(
            ClpCost(
                index=g,
                tn=clp.tn,
                tm=clp.tm,
                layer_ids=layer_ids,
                cycles=clp_total,
                dsp=clp_dsp_usage(clp, precision),
                bram=clp_bram_usage(clp, schedule, precision),
                peak_min_bw_gbs=clp_peak_bw,
            )
        )
    total_cycles = max(c.cycles for c in per_clp)
    freq_hz = platform.freq_mhz * 1e6
    seconds = total_cycles / freq_hz
    return CostReport(
        cycles=total_cycles,
        dsp=sum(c.dsp for c in per_clp),
        bram=sum(c.bram for c in per_clp),
        utilization=arithmetic_utilization(sol, arch, platform, precision),
        throughput_img_s=freq_hz / total_cycles,
        perf_gops=arch.total_flops / seconds / 1e9,
        perf_unit="GFLOP/s" if precision is Precision.FP32 else "GOP/s",
        exec_time_ms=seconds * 1e3,
        peak_min_bw_gbs=max(c.peak_min_bw_gbs for c in per_clp),
        per_clp=tuple(per_clp),
        per_layer=tuple(per_layer),
    )
