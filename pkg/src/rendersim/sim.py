"""Cycle-level cost model.

A frame is processed in *phases*: the frame's pixels (or rows, for a bare
operator graph) are cut into batches small enough that every intermediate
tensor of a batch, double-buffered, fits the global SRAM.  Within a phase the
nodes run back to back, so intermediates never leave the chip.  Each node is
charged ``max(compute, memory)`` summed over phases, and the array pays a
reconfiguration whenever consecutive nodes differ in micro-operator kind.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .arch import ArchConfig, ArrayGeometry, EnergyConstants, configure_array
from .errors import ConfigurationError
from .ir import BYTES_PER_VALUE, PipelineGraph
from .mapper import MappingPlan, map_microop, plan_traffic

CSV_SCHEMA = "rendersim-cost/1"
SWEEP_SCHEMA = "rendersim-sweep/1"


@dataclass(frozen=True)
class NodeCost:
    name: str
    kind: str
    role: str
    compute_cycles: int
    memory_cycles: int
    cycles: int
    bound: str
    dram_bytes: int
    sram_accesses: int
    utilization: float
    compute_lower_bound: float
    memory_lower_bound: float
    phases: int
    ff_tiles: int


@dataclass(frozen=True)
class ReconfigCharge:
    src: str
    dst: str
    count: int
    cycles_each: int

    @property
    def cycles(self) -> int:
        return self.count * self.cycles_each


@dataclass(frozen=True)
class CostReport:
    graph_kind: str
    geometry: ArrayGeometry
    nodes: tuple[NodeCost, ...]
    reconfigurations: tuple[ReconfigCharge, ...]
    phases: int
    batch: int
    tally: dict = field(default_factory=dict)

    @property
    def compute_cycles(self) -> int:
        return sum(n.compute_cycles for n in self.nodes)

    @property
    def memory_cycles(self) -> int:
        return sum(n.memory_cycles for n in self.nodes)

    @property
    def reconfiguration_cycles(self) -> int:
        return sum(r.cycles for r in self.reconfigurations)

    @property
    def reconfiguration_count(self) -> int:
        return sum(r.count for r in self.reconfigurations)

    @property
    def total_cycles(self) -> int:
        return sum(n.cycles for n in self.nodes) + self.reconfiguration_cycles

    @property
    def dram_bytes(self) -> int:
        return sum(n.dram_bytes for n in self.nodes)

    @property
    def sram_accesses(self) -> int:
        return sum(n.sram_accesses for n in self.nodes)

    @property
    def utilization(self) -> float:
        if not self.total_cycles:
            return 0.0
        work = sum(n.compute_lower_bound for n in self.nodes)
        return min(1.0, work / self.total_cycles)

    @property
    def fps(self) -> Optional[float]:
        """Frames per second, or None for an empty frame."""
        if self.total_cycles == 0:
            return None
        return self.geometry.clock_hz / self.total_cycles

    @property
    def bound(self) -> str:
        return "compute" if self.compute_cycles >= self.memory_cycles else "memory"


def roofline_bound(plan: MappingPlan, dram_bytes: float, geometry: ArrayGeometry):
    """Ideal ``(compute, memory)`` cycle bounds, without fill/drain or latency."""
    if plan.empty:
        return 0.0, 0.0
    return plan.ideal_pe_cycles / geometry.pes, dram_bytes / geometry.dram_bytes_per_cycle


def _frame_units(graph: PipelineGraph) -> int:
    if graph.pixels:
        return graph.pixels
    return max((n.workload.items for n in graph.nodes), default=0)


def _staging_bytes(graph: PipelineGraph, units: int, buffers: int) -> float:
    """SRAM bytes per frame unit needed while the busiest node runs."""
    worst = 0.0
    for node in graph.nodes:
        w = node.workload
        b = sum(p.rows * p.width for p in w.inputs) + w.out_rows * w.out_width
        worst = max(worst, b * BYTES_PER_VALUE / units)
    return worst * buffers


def phase_split(graph: PipelineGraph, cfg: ArchConfig) -> tuple[int, int]:
    """``(phases, units per phase)`` for the frame."""
    units = _frame_units(graph)
    if units == 0:
        return 0, 0
    per_unit = _staging_bytes(graph, units, cfg.costs.staging_buffers)
    batch = units if per_unit == 0 else max(1, int(cfg.geometry.sram_bytes // per_unit))
    batch = min(batch, units)
    return math.ceil(units / batch), batch


def simulate(graph: PipelineGraph, cfg: ArchConfig | ArrayGeometry | None = None) -> CostReport:
    """Estimate one frame of ``graph`` on the configured array."""
    if isinstance(cfg, ArrayGeometry):
        cfg = ArchConfig(geometry=cfg)
    cfg = cfg or ArchConfig()
    bad = cfg.issues()
    if bad:
        raise ConfigurationError("; ".join(bad))
    g = cfg.geometry
    bpc = g.dram_bytes_per_cycle
    phases, batch = phase_split(graph, cfg)
    plans = [map_microop(n, configure_array(n.kind, g, cfg.pe), cfg.costs) for n in graph.nodes]
    kinds = [n.kind for n in graph.nodes]
    switching = len(set(kinds)) > 1
    aggregate_ff = g.pes * cfg.pe.ff_bytes
    overflow = sum(p.resident_bytes for p in plans) > aggregate_ff
    reload = phases if (switching or overflow) else (1 if phases else 0)
    fed = {e.dst: set() for e in graph.edges}
    for e in graph.edges:
        fed[e.dst].add(e.port)
    consumed = {e.src for e in graph.edges}

    nodes = []
    tally = dict(int16_ops=0.0, bf16_macs=0.0, sfu_ops=0.0, compares=0.0,
                 sram_accesses=0, dram_bytes=0)
    for i, (node, plan) in enumerate(zip(graph.nodes, plans)):
        traffic = plan_traffic(plan, node)
        if plan.empty:
            nodes.append(NodeCost(node.name, node.kind, node.role, 0, 0, 0, "compute", 0, 0,
                                  0.0, 0.0, 0.0, phases, 0))
            continue
        ports = fed.get(i, set())
        stream = sum(b for k, b in enumerate(traffic.input_bytes) if k not in ports)
        if i not in consumed:
            stream += traffic.output_bytes
        dram = traffic.resident_bytes * reload + stream
        memory = dram / bpc + (g.dram_latency_cycles * phases if dram else 0)
        compute = math.ceil(plan.critical_cycles) + plan.fill_per_pass * plan.passes * phases
        cycles = math.ceil(max(compute, memory))
        c_lb, m_lb = roofline_bound(plan, dram, g)
        staged = sum(p.rows * p.width for p in node.workload.inputs) + (
            node.workload.out_rows * node.workload.out_width)
        sram = staged + traffic.resident_bytes * reload // BYTES_PER_VALUE
        util = min(1.0, c_lb / cycles) if cycles else 0.0
        nodes.append(NodeCost(node.name, node.kind, node.role, int(compute), math.ceil(memory),
                              cycles, "compute" if compute >= memory else "memory", int(dram),
                              int(sram), util, c_lb, m_lb, phases, plan.ff_tiles))
        for k in ("int16_ops", "bf16_macs", "sfu_ops", "compares"):
            tally[k] += getattr(plan.tally, k)
        tally["sram_accesses"] += int(sram)
        tally["dram_bytes"] += int(dram)

    charges = []
    fill_bpc = cfg.costs.ff_fill_bytes_per_cycle
    for i in range(len(plans) - 1):
        a, b = graph.nodes[i], graph.nodes[i + 1]
        if a.kind != b.kind and phases:
            charges.append(ReconfigCharge(a.name, b.name, phases,
                                          _reconfig_cycles(plans[i + 1], fill_bpc, cfg)))
    if len(plans) > 1 and phases > 1 and kinds[-1] != kinds[0]:
        a, b = graph.nodes[-1], graph.nodes[0]
        charges.append(ReconfigCharge(a.name, b.name, phases - 1,
                                      _reconfig_cycles(plans[0], fill_bpc, cfg)))
    return CostReport(graph.kind, g, tuple(nodes), tuple(charges), phases, batch, tally)


def _reconfig_cycles(plan: MappingPlan, fill_bpc: int, cfg: ArchConfig) -> int:
    """FF reload of the incoming operator plus the fixed control cost."""
    lanes = max(plan.active_pes, 1) * fill_bpc
    return math.ceil(plan.resident_bytes / lanes) + cfg.costs.reconfig_control_cycles


# ---------------------------------------------------------------------------
# Scaling sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    pe_scale: int
    sram_scale: int
    cycles: int
    fps: float
    speedup: float

    @property
    def area_units(self) -> int:
        return self.pe_scale + self.sram_scale

    @property
    def speed_per_area(self) -> float:
        return self.speedup / self.area_units


def sweep_scaling(graph: PipelineGraph, base: ArchConfig | None = None,
                  pe_scales: Sequence[int] = (1, 2, 4),
                  sram_scales: Sequence[int] = (1, 2, 4)) -> list[SweepCell]:
    """Speed of every (PE scale, SRAM scale) cell relative to (1, 1)."""
    base = base or ArchConfig()
    ref = simulate(graph, base).total_cycles
    if ref == 0:
        raise ConfigurationError("sweep workload renders an empty frame")
    cells = []
    for s in sram_scales:
        for p in pe_scales:
            r = simulate(graph, base.scaled(p, s))
            cells.append(SweepCell(int(p), int(s), r.total_cycles, r.fps, ref / r.total_cycles))
    return cells


def sweep_table(cells: Sequence[SweepCell]) -> dict[tuple[int, int], float]:
    return {(c.pe_scale, c.sram_scale): c.speedup for c in cells}


# ---------------------------------------------------------------------------
# Energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyReport:
    """Per-event energy.  Parametric: the constants are placeholders."""

    label: str
    terms: dict

    @property
    def total_joules(self) -> float:
        return float(sum(self.terms.values()))


_ENERGY_KEYS = (("int16_ops", "int16_mac"), ("bf16_macs", "bf16_mac"), ("sfu_ops", "sfu_op"),
                ("compares", "compare"), ("sram_accesses", "sram_access"),
                ("dram_bytes", "dram_byte"))


def estimate_energy(tally: dict, constants: EnergyConstants | None = None) -> EnergyReport:
    constants = constants or EnergyConstants()
    bad = constants.issues()
    if bad:
        raise ConfigurationError("; ".join(bad))
    terms = {}
    for t, c in _ENERGY_KEYS:
        terms[t] = float(tally.get(t, 0)) * getattr(constants, c)
    return EnergyReport("parametric, not calibrated", terms)


# ---------------------------------------------------------------------------
# Emitters
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(round(x, 9))
    return str(x)


COST_FIELDS = ("node", "kind", "role", "compute_cycles", "memory_cycles", "reconfig_cycles",
               "cycles", "bound", "dram_bytes", "sram_accesses", "utilization",
               "compute_lower_bound", "memory_lower_bound")


def report_csv(report: CostReport) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {CSV_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COST_FIELDS)
    incoming = {}
    for r in report.reconfigurations:
        incoming[r.dst] = incoming.get(r.dst, 0) + r.cycles
    for n in report.nodes:
        w.writerow([n.name, n.kind, n.role, n.compute_cycles, n.memory_cycles,
                    incoming.get(n.name, 0), n.cycles, n.bound, n.dram_bytes, n.sram_accesses,
                    _fmt(n.utilization), _fmt(n.compute_lower_bound),
                    _fmt(n.memory_lower_bound)])
    w.writerow(["TOTAL", "", report.graph_kind, report.compute_cycles, report.memory_cycles,
                report.reconfiguration_cycles, report.total_cycles, report.bound,
                report.dram_bytes, report.sram_accesses, _fmt(report.utilization),
                _fmt(sum(n.compute_lower_bound for n in report.nodes)),
                _fmt(sum(n.memory_lower_bound for n in report.nodes))])
    return buf.getvalue()


def report_to_dict(report: CostReport, energy: EnergyReport | None = None) -> dict:
    d = {
        "format": "rendersim-cost", "version": 1,
        "graph_kind": report.graph_kind,
        "geometry": asdict(report.geometry),
        "phases": report.phases, "units_per_phase": report.batch,
        "nodes": [asdict(n) for n in report.nodes],
        "reconfigurations": [dict(asdict(r), cycles=r.cycles) for r in report.reconfigurations],
        "totals": {
            "compute_cycles": report.compute_cycles, "memory_cycles": report.memory_cycles,
            "reconfiguration_cycles": report.reconfiguration_cycles,
            "reconfiguration_count": report.reconfiguration_count,
            "total_cycles": report.total_cycles, "dram_bytes": report.dram_bytes,
            "sram_accesses": report.sram_accesses, "utilization": report.utilization,
            "bound": report.bound, "fps": report.fps,
        },
        "tally": report.tally,
    }
    if energy is not None:
        d["energy"] = {"label": energy.label, "joules": energy.terms,
                       "total_joules": energy.total_joules}
    return d


def dumps_report(report: CostReport, energy: EnergyReport | None = None) -> str:
    return json.dumps(report_to_dict(report, energy), indent=2, sort_keys=True) + "\n"


SWEEP_FIELDS = ("pe_scale", "sram_scale", "cycles", "fps", "relative_speed", "speed_per_area")


def sweep_csv(cells: Sequence[SweepCell]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {SWEEP_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for c in cells:
        w.writerow([c.pe_scale, c.sram_scale, c.cycles, _fmt(c.fps), _fmt(c.speedup),
                    _fmt(c.speed_per_area)])
    return buf.getvalue()
