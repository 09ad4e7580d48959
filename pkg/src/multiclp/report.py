"""Design serialization and report rendering (JSON, CSV, text table, figures)."""

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .arch import Architecture, ConfigError, resolve_architecture
from .cost import CostReport
from .design import ClpConfig, Solution
from .tiling import Tiling


def solution_to_dict(sol: Solution, arch: Architecture) -> dict:
    data = {
        "arch": arch.name,
        "clps": [{"tn": c.tn, "tm": c.tm} for c in sol.clps],
        "assignment": {
            arch.layers[i].name: g for i, g in enumerate(sol.assignment)
        },
    }
    if sol.tilings is not None:
        data["tilings"] = {
            arch.layers[i].name: [t.tr, t.tc] for i, t in enumerate(sol.tilings)
        }
    return data


def solution_from_dict(data: dict, arch: Architecture) -> Solution:
    if "clps" not in data or "assignment" not in data:
        raise ConfigError("design file needs 'clps' and 'assignment'")
    clps = [ClpConfig(entry["tn"], entry["tm"]) for entry in data["clps"]]
    assignment = [None] * len(arch.layers)
    for name, slot in data["assignment"].items():
        layer = arch.layer_by_name(str(name))
        if not 0 <= slot < len(clps):
            raise ConfigError(f"layer {name!r} assigned to unknown CLP {slot}")
        assignment[layer.id] = slot
    if any(slot is None for slot in assignment):
        missing = [l.name for l, s in zip(arch.layers, assignment) if s is None]
        raise ConfigError(f"design leaves layers unassigned: {missing}")
    # inactive slots still need legal dimensions; pad if the file omits slots
    while len(clps) < max(assignment) + 1:
        clps.append(ClpConfig(1, 1))
    tilings = None
    if "tilings" in data:
        tilings = [None] * len(arch.layers)
        for name, (tr, tc) in data["tilings"].items():
            layer = arch.layer_by_name(str(name))
            tilings[layer.id] = Tiling(tr, tc)
        if any(t is None for t in tilings):
            raise ConfigError("design pins tilings for only some layers")
        tilings = tuple(tilings)
    return Solution(clps=tuple(clps), assignment=tuple(assignment), tilings=tilings)


def load_design(path, arch: Architecture = None):
    """Read a design file; returns (solution, architecture)."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if "design" in data:      # accept full report files too
        data = data["design"]
    if arch is None:
        if "arch" not in data:
            raise ConfigError(f"{path}: design names no architecture; pass --arch")
        arch = resolve_architecture(data["arch"])
    return solution_from_dict(data, arch), arch


def summary_table(rep: CostReport, arch: Architecture) -> str:
    """Per-CLP breakdown in the usual accelerator-comparison layout."""
    rows = []
    for clp in rep.per_clp:
        names = ", ".join(arch.layers[i].name for i in clp.layer_ids)
        rows.append(
            (f"CLP{clp.index}", str(clp.tn), str(clp.tm), names,
             f"{clp.cycles:,}", str(clp.dsp), str(clp.bram))
        )
    header = ("CLP", "Tn", "Tm", "layers", "cycles", "DSPs", "BRAMs")
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(header, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    lines.append("")
    lines.append(
        f"design: {rep.cycles:,} cycles = {rep.exec_time_ms:.2f} ms | "
        f"{rep.dsp} DSPs | {rep.bram} BRAMs | "
        f"util {rep.utilization * 100:.1f}% | "
        f"{rep.throughput_img_s:.2f} img/s | {rep.perf_gops:.2f} {rep.perf_unit} | "
        f"peak BW {rep.peak_min_bw_gbs:.2f} GB/s"
    )
    return "\n".join(lines)


def write_report_json(path, payload: dict, timestamp: bool = True):
    if timestamp:
        payload = dict(payload)
        payload["timestamp"] = datetime.now(timezone.utc).isoformat()
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_summary_csv(path, rep: CostReport, arch: Architecture):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["clp", "tn", "tm", "layers", "cycles", "dsp", "bram", "peak_min_bw_gbs"]
        )
        for clp in rep.per_clp:
            names = " ".join(arch.layers[i].name for i in clp.layer_ids)
            writer.writerow(
                [clp.index, clp.tn, clp.tm, names, clp.cycles, clp.dsp, clp.bram,
                 f"{clp.peak_min_bw_gbs:.6f}"]
            )


def write_trace_csv(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["iter", "current_cost", "best_cost", "temperature"])
        for rec in trace:
            temp = "" if rec.temperature is None else f"{rec.temperature:.6f}"
            writer.writerow([rec.iteration, rec.current_cost, rec.best_cost, temp])


def render_convergence(path, traces, freq_mhz: float, title: str):
    """Cost-vs-iteration curves for one or more runs; cost shown as time in ms."""
    fig, ax = plt.subplots(figsize=(7, 4))
    scale = 1.0 / (freq_mhz * 1e3)    # cycles -> ms
    for label, trace in traces:
        if not trace:
            continue
        iters = [rec.iteration for rec in trace]
        ax.plot(iters, [rec.current_cost * scale for rec in trace],
                linewidth=0.7, alpha=0.5)
        ax.plot(iters, [rec.best_cost * scale for rec in trace],
                linewidth=1.6, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("execution time (ms)")
    ax.set_title(title)
    if len(traces) <= 12:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_clp_cycles(path, rep: CostReport, title: str):
    """Per-CLP episode length; the tallest bar is the design bottleneck."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    labels = [f"CLP{c.index}\n<{c.tn},{c.tm}>" for c in rep.per_clp]
    values = [c.cycles / 1e3 for c in rep.per_clp]
    bars = ax.bar(labels, values, color="#4878a8")
    bottleneck = max(range(len(values)), key=values.__getitem__)
    bars[bottleneck].set_color("#c44e52")
    ax.set_ylabel("cycles (x1000)")
    ax.set_title(title)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
