"""CNN architecture and FPGA platform descriptions.

Architectures are lists of CONV layer shapes <N, M, R, C, K, S> in processing
order. Platforms carry the resource budgets (DSP slices, BRAM18K blocks,
off-chip bandwidth, clock) that constrain a design. Both are loaded from small
JSON files; a handful of well-known networks and boards ship as bundles.
"""

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path


class ConfigError(ValueError):
    """A description file is malformed or violates a basic invariant."""


class Precision(Enum):
    """Numeric format used for both feature maps and weights."""

    FP32 = 32
    FXP16 = 16

    @property
    def width_bits(self) -> int:
        return self.value

    @property
    def data_bytes(self) -> int:
        return self.value // 8

    @classmethod
    def from_name(cls, name: str) -> "Precision":
        key = name.strip().lower()
        if key in ("fp32", "float32", "32"):
            return cls.FP32
        if key in ("fxp16", "fixed16", "int16", "16"):
            return cls.FXP16
        raise ConfigError(f"unknown precision {name!r} (expected fp32 or fxp16)")


@dataclass(frozen=True)
class LayerConfig:
    """One CONV layer: N input FMs, M output FMs, R x C output, K x K kernel, stride S."""

    id: int
    name: str
    n_in: int
    m_out: int
    rows: int
    cols: int
    kernel: int
    stride: int

    def __post_init__(self):
        for field in ("n_in", "m_out", "rows", "cols", "kernel", "stride"):
            value = getattr(self, field)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(
                    f"layer {self.name!r}: {field} must be a positive integer, got {value!r}"
                )

    @property
    def shape(self) -> tuple:
        """Shape key (N, M, R, C, K, S); identical shapes share cost-model caches."""
        return (self.n_in, self.m_out, self.rows, self.cols, self.kernel, self.stride)

    @property
    def macs(self) -> int:
        return self.n_in * self.m_out * self.rows * self.cols * self.kernel**2

    @property
    def flops(self) -> int:
        # one multiply + one accumulate per MAC
        return 2 * self.macs


@dataclass(frozen=True)
class Architecture:
    name: str
    layers: tuple

    def __post_init__(self):
        if not self.layers:
            raise ConfigError(f"architecture {self.name!r} has no layers")
        for i, layer in enumerate(self.layers):
            if layer.id != i:
                raise ConfigError(
                    f"architecture {self.name!r}: layer ids must be dense 0..L-1"
                )

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def max_n(self) -> int:
        return max(l.n_in for l in self.layers)

    @property
    def max_m(self) -> int:
        return max(l.m_out for l in self.layers)

    @property
    def total_flops(self) -> int:
        return sum(l.flops for l in self.layers)

    def layer_by_name(self, name: str) -> LayerConfig:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(f"no layer named {name!r} in {self.name}")


@dataclass(frozen=True)
class Platform:
    """FPGA board budgets; util_cap is the fraction of resources the tools may use."""

    name: str
    dsp_total: int
    bram_total: int
    bandwidth_gbs: float
    freq_mhz: float
    util_cap: float = 0.8

    def __post_init__(self):
        if self.dsp_total < 1 or self.bram_total < 1:
            raise ConfigError(f"platform {self.name!r}: resource counts must be positive")
        if self.bandwidth_gbs <= 0 or self.freq_mhz <= 0:
            raise ConfigError(f"platform {self.name!r}: bandwidth and frequency must be positive")
        if not 0 < self.util_cap <= 1:
            raise ConfigError(f"platform {self.name!r}: util_cap must be in (0, 1]")

    @property
    def dsp_max(self) -> int:
        return math.floor(self.util_cap * self.dsp_total)

    @property
    def bram_max(self) -> int:
        return math.floor(self.util_cap * self.bram_total)

    @property
    def bytes_per_cycle(self) -> float:
        """Off-chip bytes deliverable per clock cycle."""
        return self.bandwidth_gbs * 1e9 / (self.freq_mhz * 1e6)


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise ConfigError(f"{context}: missing field {key!r}")
    return obj[key]


def architecture_from_dict(data: dict) -> Architecture:
    name = _require(data, "name", "architecture")
    raw_layers = _require(data, "layers", f"architecture {name!r}")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ConfigError(f"architecture {name!r}: 'layers' must be a non-empty list")
    layers = []
    for i, entry in enumerate(raw_layers):
        ctx = f"architecture {name!r}, layer {i}"
        layers.append(
            LayerConfig(
                id=i,
                name=str(_require(entry, "name", ctx)),
                n_in=_require(entry, "n", ctx),
                m_out=_require(entry, "m", ctx),
                rows=_require(entry, "r", ctx),
                cols=_require(entry, "c", ctx),
                kernel=_require(entry, "k", ctx),
                stride=_require(entry, "s", ctx),
            )
        )
    names = [l.name for l in layers]
    if len(set(names)) != len(names):
        raise ConfigError(f"architecture {name!r}: layer names must be unique")
    return Architecture(name=name, layers=tuple(layers))


def architecture_to_dict(arch: Architecture) -> dict:
    return {
        "name": arch.name,
        "layers": [
            {
                "name": l.name,
                "n": l.n_in,
                "m": l.m_out,
                "r": l.rows,
                "c": l.cols,
                "k": l.kernel,
                "s": l.stride,
            }
            for l in arch.layers
        ],
    }


def platform_from_dict(data: dict) -> Platform:
    name = _require(data, "name", "platform")
    ctx = f"platform {name!r}"
    return Platform(
        name=name,
        dsp_total=_require(data, "dsp", ctx),
        bram_total=_require(data, "bram18k", ctx),
        bandwidth_gbs=_require(data, "bw_gbs", ctx),
        freq_mhz=_require(data, "freq_mhz", ctx),
        util_cap=data.get("util_cap", 0.8),
    )


def platform_to_dict(platform: Platform) -> dict:
    return {
        "name": platform.name,
        "dsp": platform.dsp_total,
        "bram18k": platform.bram_total,
        "bw_gbs": platform.bandwidth_gbs,
        "freq_mhz": platform.freq_mhz,
        "util_cap": platform.util_cap,
    }


def _load_json(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def load_architecture(path) -> Architecture:
    return architecture_from_dict(_load_json(path))


def load_platform(path) -> Platform:
    return platform_from_dict(_load_json(path))


def _bundle_dir():
    return resources.files("multiclp") / "bundles"


def bundled_names(kind: str = "architecture") -> list:
    """Names of bundled descriptions; kind is 'architecture' or 'platform'."""
    known = {"architecture": _ARCH_BUNDLES, "platform": _PLATFORM_BUNDLES}
    return sorted(known[kind])


_ARCH_BUNDLES = {"alexnet", "squeezenet11", "vggnet", "googlenet", "tiny2"}
_PLATFORM_BUNDLES = {"vc707", "vc709"}


def resolve_architecture(name_or_path) -> Architecture:
    """Accept a bundled name (e.g. 'alexnet') or a path to a JSON file."""
    key = str(name_or_path).lower()
    if key in _ARCH_BUNDLES:
        with resources.as_file(_bundle_dir() / f"{key}.json") as path:
            return load_architecture(path)
    return load_architecture(name_or_path)


def resolve_platform(name_or_path) -> Platform:
    key = str(name_or_path).lower()
    if key in _PLATFORM_BUNDLES:
        with resources.as_file(_bundle_dir() / f"{key}.json") as path:
            return load_platform(path)
    return load_platform(name_or_path)


def bundled_design_path(name: str):
    """Path object for a bundled design file (searchable reference points)."""
    return _bundle_dir() / "designs" / f"{name}.json"
