"""Reconfigurable PE-array description: geometry, PE resources, per-operator
module states and the tunable cost/energy constants."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigurationError
from .ir import CGI, DGI, GEMM, GP, MICROOP_KINDS, SORT

# Module state vocabularies.
ON, OFF = "on", "off"
HORIZONTAL, FULL = "horizontally-on", "fully-on"
SYSTOLIC, PIPELINE = "systolic", "pipeline"


@dataclass(frozen=True)
class ArrayGeometry:
    rows: int = 16
    cols: int = 16
    clock_hz: float = 1e9
    sram_bytes: int = 262144
    dram_bytes_per_s: float = 59.7e9
    dram_latency_cycles: int = 64

    @property
    def pes(self) -> int:
        return self.rows * self.cols

    @property
    def dram_bytes_per_cycle(self) -> float:
        return self.dram_bytes_per_s / self.clock_hz

    def issues(self) -> list[str]:
        out = []
        if self.rows < 1 or self.cols < 1:
            out.append(f"geometry: array {self.rows}x{self.cols} must be at least 1x1")
        if not self.clock_hz > 0:
            out.append("geometry: clock must be positive")
        if not self.dram_bytes_per_s > 0:
            out.append("geometry: DRAM bandwidth must be positive")
        if self.sram_bytes < 1:
            out.append("geometry: SRAM size must be positive")
        if self.dram_latency_cycles < 0:
            out.append("geometry: DRAM latency cannot be negative")
        return out

    def scaled(self, pe_scale: int = 1, sram_scale: int = 1) -> "ArrayGeometry":
        """Grow the array by adding columns and the buffer by multiplying bytes."""
        return replace(self, cols=self.cols * int(pe_scale),
                       sram_bytes=self.sram_bytes * int(sram_scale))


@dataclass(frozen=True)
class PEResources:
    ff_cells: int = 4
    ff_entries: int = 512
    ff_bits: int = 16
    int16_macs: int = 4
    bf16_macs: int = 4
    sfus: int = 4
    ps_bytes: int = 2048

    @property
    def ff_bytes(self) -> int:
        return self.ff_cells * self.ff_entries * self.ff_bits // 8

    def issues(self) -> list[str]:
        out = []
        for f in fields(self):
            if getattr(self, f.name) < 1:
                out.append(f"pe: {f.name} must be at least 1")
        return out


@dataclass(frozen=True)
class CostConstants:
    """Per-event cycle costs used by the mapper and simulator."""

    reconfig_control_cycles: int = 100
    ff_fill_bytes_per_cycle: int = 8        # per PE, SRAM to FF pad
    gemm_buffer_stages: int = 1             # extra stage per systolic wave
    hash_cycles_per_corner: int = 2         # 3 mul + 2 xor + mask on 4 INT16 units
    linear_cycles_per_corner: int = 1
    raster_cycles_per_test: int = 3
    splat_cycles_per_test: int = 2
    splat_cycles_per_primitive: int = 15
    sort_cycles_per_compare: float = 0.25   # 4 comparators per PE
    staging_buffers: int = 2                # double-buffered SRAM staging

    def issues(self) -> list[str]:
        return [f"costs: {f.name} cannot be negative" for f in fields(self)
                if getattr(self, f.name) < 0]


@dataclass(frozen=True)
class EnergyConstants:
    """Joules per event.  Parametric placeholders, not calibrated to silicon."""

    int16_mac: float = 0.2e-12
    bf16_mac: float = 0.6e-12
    sfu_op: float = 1.0e-12
    compare: float = 0.1e-12
    sram_access: float = 5.0e-12
    dram_byte: float = 80.0e-12

    def issues(self) -> list[str]:
        return [f"energy: {f.name} cannot be negative" for f in fields(self)
                if getattr(self, f.name) < 0]


@dataclass(frozen=True)
class ArchConfig:
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)
    pe: PEResources = field(default_factory=PEResources)
    costs: CostConstants = field(default_factory=CostConstants)
    energy: EnergyConstants = field(default_factory=EnergyConstants)

    def issues(self) -> list[str]:
        return (self.geometry.issues() + self.pe.issues() + self.costs.issues()
                + self.energy.issues())

    def scaled(self, pe_scale: int = 1, sram_scale: int = 1) -> "ArchConfig":
        return replace(self, geometry=self.geometry.scaled(pe_scale, sram_scale))


# ---------------------------------------------------------------------------
# Module states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetworkState:
    input_paths: str       # on | off
    reduction_paths: str   # off | horizontally-on | fully-on
    mode: str              # systolic | pipeline

    def issues(self) -> list[str]:
        if self.mode == SYSTOLIC and self.reduction_paths != OFF:
            return ["network: systolic mode requires the reduction network off"]
        return []


@dataclass(frozen=True)
class PEState:
    controller: str
    ff_role: str
    alu_mode: str
    ps_role: str


@dataclass(frozen=True)
class ArrayConfiguration:
    kind: str
    geometry: ArrayGeometry
    network: NetworkState
    pe: PEState
    resources: PEResources = field(default_factory=PEResources)


MODULE_COLUMNS = ("Input Data Paths&Routers", "Reduction Data Paths&Routers", "PE Controller",
                  "FF Scratch Pad", "ALU", "PS Scratch Pad")

# Module states per micro-operator, one entry per column above.
MODULE_STATES = {
    GP: (OFF, OFF, "rasterization-control", "geometry-representation", "vector", "z-buffer"),
    CGI: (ON, HORIZONTAL, "grid-control", "grid-features", "index-function", OFF),
    DGI: (ON, FULL, "grid-control", "grid-features", "index-function", OFF),
    SORT: (OFF, OFF, "sorting-control", "sorting-elements", "comparator", OFF),
    GEMM: (ON, OFF, "gemm-control", "model-weights", "adder-tree", "output-features"),
}

_LABELS = {
    ON: "On", OFF: "Off", HORIZONTAL: "Horizontally On", FULL: "Fully On",
    "rasterization-control": "Rasterization Control", "grid-control": "Grid Control",
    "sorting-control": "Sorting Control", "gemm-control": "GEMM Control",
    "geometry-representation": "Geometry Representation", "grid-features": "Grid Features",
    "sorting-elements": "Sorting Elements", "model-weights": "Model Weights",
    "vector": "Vector Mode", "index-function": "Index Function", "comparator": "Comparator",
    "adder-tree": "Adder Tree Mode", "z-buffer": "Z-Buffer", "output-features": "Output Features",
}


def state_label(value: str) -> str:
    return _LABELS[value]


def configure_array(kind: str, geometry: ArrayGeometry | None = None,
                    resources: PEResources | None = None) -> ArrayConfiguration:
    """Module states that let the array execute micro-operator ``kind``."""
    if kind not in MODULE_STATES:
        raise ConfigurationError(f"unknown micro-operator {kind!r}; expected one of {MICROOP_KINDS}")
    geometry = geometry or ArrayGeometry()
    bad = geometry.issues()
    if bad:
        raise ConfigurationError("; ".join(bad))
    inp, red, ctl, ff, alu, ps = MODULE_STATES[kind]
    mode = SYSTOLIC if kind == GEMM else PIPELINE
    return ArrayConfiguration(kind, geometry, NetworkState(inp, red, mode),
                              PEState(ctl, ff, alu, ps), resources or PEResources())


def module_row(config: ArrayConfiguration) -> tuple[str, ...]:
    """The configuration projected onto the six module columns, as labels."""
    n, p = config.network, config.pe
    return tuple(state_label(v) for v in (n.input_paths, n.reduction_paths, p.controller,
                                          p.ff_role, p.alu_mode, p.ps_role))


def configuration_issues(config: ArrayConfiguration) -> list[str]:
    out = config.network.issues()
    expected = MODULE_STATES.get(config.kind)
    if expected is None:
        return out + [f"configuration: unknown kind {config.kind!r}"]
    n, p = config.network, config.pe
    actual = (n.input_paths, n.reduction_paths, p.controller, p.ff_role, p.alu_mode, p.ps_role)
    for col, want, got in zip(MODULE_COLUMNS, expected, actual):
        if want != got:
            out.append(f"configuration: {col} is {got!r}, {config.kind} needs {want!r}")
    want_mode = SYSTOLIC if config.kind == GEMM else PIPELINE
    if n.mode != want_mode:
        out.append(f"configuration: array mode {n.mode!r}, {config.kind} needs {want_mode!r}")
    return out


@dataclass(frozen=True)
class CapacityCheck:
    fits: bool
    tiles: int
    capacity: int


def ff_capacity_check(config: ArrayConfiguration, resident_bytes_per_pe: int) -> CapacityCheck:
    """Whether a per-PE resident set fits the FF pad, else how many reload tiles."""
    if resident_bytes_per_pe < 0:
        raise ConfigurationError("resident bytes cannot be negative")
    cap = config.resources.ff_bytes
    if resident_bytes_per_pe <= cap:
        return CapacityCheck(True, 1, cap)
    return CapacityCheck(False, math.ceil(resident_bytes_per_pe / cap), cap)


def peak_macs_per_cycle(geometry: ArrayGeometry | None = None,
                        resources: PEResources | None = None) -> int:
    """BF16 multiply-accumulates the whole array can retire per cycle."""
    geometry = geometry or ArrayGeometry()
    resources = resources or PEResources()
    return geometry.pes * resources.bf16_macs


PEAK_MACS_PER_CYCLE = peak_macs_per_cycle()


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

_SECTIONS = {"geometry": ArrayGeometry, "pe": PEResources, "costs": CostConstants,
             "energy": EnergyConstants}


def config_to_dict(cfg: ArchConfig) -> dict:
    return {"format": "rendersim-arch", "version": 1,
            **{name: asdict(getattr(cfg, name)) for name in _SECTIONS}}


def config_from_dict(doc: dict, base: ArchConfig | None = None) -> ArchConfig:
    """Overlay ``doc`` on ``base``; unknown sections or keys are errors."""
    cfg = base or ArchConfig()
    parts = {}
    for key, value in doc.items():
        if key in ("format", "version"):
            continue
        if key not in _SECTIONS:
            raise ConfigurationError(f"unknown config section {key!r}")
        if not isinstance(value, dict):
            raise ConfigurationError(f"config section {key!r} must be a mapping")
        cls = _SECTIONS[key]
        names = {f.name: f.type for f in fields(cls)}
        for k in value:
            if k not in names:
                raise ConfigurationError(f"unknown key {key}.{k}")
        cur = asdict(getattr(cfg, key))
        cur.update(value)
        try:
            parts[key] = cls(**{k: _coerce(cls, k, v) for k, v in cur.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad value in section {key!r}: {exc}") from None
    out = replace(cfg, **parts)
    bad = out.issues()
    if bad:
        raise ConfigurationError("; ".join(bad))
    return out


def _coerce(cls, name, value):
    default = getattr(cls(), name)
    if isinstance(default, bool) or not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ValueError(f"{name} must be a number")
    return int(value) if isinstance(default, int) and float(value).is_integer() else float(value)


def load_config(path) -> ArchConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"config {path} must hold a JSON object")
    return config_from_dict(doc)


def dumps_config(cfg: ArchConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"
