"""Assign each micro-operator's work units to PEs and PE lines.

Work units are numbered ``0 .. unit_count - 1``; each PE receives a set of
strided ranges ``(start, stop, step)``.  The plan also carries the per-PE
cycle load the simulator turns into time.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .arch import ArrayConfiguration, CostConstants, ff_capacity_check
from .errors import ContractViolation
from .ir import BYTES_PER_VALUE, CGI, DGI, GEMM, GP, SORT, MicroOpNode
from .microops import merge_comparisons

INDEX_LIMIT = 1 << 16  # unsigned 16-bit index arithmetic

REDUCTION_NONE = "none"
REDUCTION_LINE = "per-line adder tree"
REDUCTION_LINE_COLUMN = "line-then-column"


@dataclass(frozen=True)
class Assignment:
    pe: int                                  # row * cols + col
    units: tuple[tuple[int, int, int], ...]  # strided ranges
    cycles: float                            # busy cycles for this PE

    def unit_ids(self) -> np.ndarray:
        parts = [np.arange(a, b, s) for a, b, s in self.units]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    @property
    def count(self) -> int:
        return sum(len(range(a, b, s)) for a, b, s in self.units)


@dataclass(frozen=True)
class TilePhase:
    index: int
    resident_bytes_per_pe: int


@dataclass(frozen=True)
class OpTally:
    int16_ops: float = 0.0
    bf16_macs: float = 0.0
    sfu_ops: float = 0.0
    compares: float = 0.0


@dataclass(frozen=True)
class MappingPlan:
    node: str
    kind: str
    unit: str
    unit_count: int
    rows: int
    cols: int
    assignments: tuple[Assignment, ...]
    schedule: tuple[TilePhase, ...]
    reduction: str
    passes: int = 1              # waves or time-multiplexed line passes
    fill_per_pass: int = 0       # pipeline fill/drain cycles per pass
    ideal_pe_cycles: float = 0.0 # total work in single-PE cycles
    resident_bytes: int = 0      # whole-array resident operand bytes
    tally: OpTally = field(default_factory=OpTally)
    info: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return self.unit_count == 0

    @property
    def pes(self) -> int:
        return self.rows * self.cols

    @property
    def active_pes(self) -> int:
        return sum(1 for a in self.assignments if a.count)

    @property
    def active_lines(self) -> int:
        return len({a.pe // self.cols for a in self.assignments if a.count})

    @property
    def critical_cycles(self) -> float:
        return max((a.cycles for a in self.assignments), default=0.0)

    @property
    def ff_tiles(self) -> int:
        return len(self.schedule)

    @property
    def resident_bytes_per_pe(self) -> int:
        return max((t.resident_bytes_per_pe for t in self.schedule), default=0)

    def counts(self) -> np.ndarray:
        out = np.zeros(self.pes, dtype=np.int64)
        for a in self.assignments:
            out[a.pe] = a.count
        return out


def _check_index(name: str, value: int):
    if value > INDEX_LIMIT:
        raise ContractViolation(f"{name} = {value} exceeds the 16-bit index range ({INDEX_LIMIT})")


def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    """Split ``range(n)`` into ``parts`` contiguous near-equal chunks."""
    q, r = divmod(n, parts)
    out, start = [], 0
    for i in range(parts):
        stop = start + q + (1 if i < r else 0)
        out.append((start, stop))
        start = stop
    return out


def _schedule(config: ArrayConfiguration, per_pe: int) -> tuple[TilePhase, ...]:
    chk = ff_capacity_check(config, per_pe)
    if chk.fits:
        return (TilePhase(0, per_pe),)
    tiles = []
    left = per_pe
    for i in range(chk.tiles):
        tiles.append(TilePhase(i, min(left, chk.capacity)))
        left -= chk.capacity
    return tuple(tiles)


# ---------------------------------------------------------------------------
# Per-kind mappings
# ---------------------------------------------------------------------------


def _map_geometric(node, config, costs):
    p = node.workload.params
    g = config.geometry
    width, height = int(p["width"]), int(p["height"])
    pixels = width * height
    _check_index("viewport width", width)
    _check_index("viewport height", height)
    n_prim = int(p.get("primitives", 0))
    tests = float(p.get("tests", 0))
    if node.role == "splatting":
        per_test, setup = costs.splat_cycles_per_test, costs.splat_cycles_per_primitive
        setup_total = float(p.get("visible", n_prim)) * setup
    else:
        per_test, setup_total = costs.raster_cycles_per_test, 0.0
    xs, ys = _chunks(width, g.cols), _chunks(height, g.rows)
    out = []
    for r, (y0, y1) in enumerate(ys):
        for c, (x0, x1) in enumerate(xs):
            units = tuple((y * width + x0, y * width + x1, 1) for y in range(y0, y1) if x1 > x0)
            area = (y1 - y0) * (x1 - x0)
            share = area / pixels if pixels else 0.0
            # bounding-box reject sweeps every primitive; setup is shared out
            cyc = (n_prim + tests * share * per_test + setup_total / g.pes) if area else 0.0
            out.append(Assignment(r * g.cols + c, units, cyc))
    ideal = n_prim * g.pes + tests * per_test + setup_total
    prim_bytes = n_prim * node.workload.inputs[0].width * BYTES_PER_VALUE
    tally = OpTally(int16_ops=tests * 4 + n_prim * g.pes, bf16_macs=tests * 6 + setup_total,
                    sfu_ops=tests if node.role == "splatting" else 0.0)
    return dict(unit="pixel", unit_count=pixels, assignments=out,
                per_pe=prim_bytes, resident=prim_bytes, reduction=REDUCTION_NONE,
                passes=1, fill=g.rows, ideal=ideal, tally=tally,
                info=dict(region=[math.ceil(width / g.cols), math.ceil(height / g.rows)]))


def _line_groups(cols: int, corners: int) -> list[list[int]]:
    """Split a line's columns into groups that each evaluate whole points."""
    if cols >= corners:
        return [list(range(i * corners, (i + 1) * corners)) for i in range(cols // corners)]
    return [list(range(cols))]


def _map_combined(node, config, costs):
    p = node.workload.params
    g = config.geometry
    n = node.workload.inputs[0].rows
    if node.role == "texture":
        levels, corners = 1, int(p.get("corners", 4))
        h, w, c = p["texture"]
        _check_index("texture width", w)
        _check_index("texture height", h)
        table_bytes = [h * w * c * BYTES_PER_VALUE]
        cpc = costs.linear_cycles_per_corner
        feat = c
    else:
        levels, corners = int(p["levels"]), int(p.get("corners", 8))
        for r in p.get("resolutions", []):
            _check_index("grid resolution", r)
        _check_index("hash table size", p["table_size"])
        table_bytes = [p["table_size"] * p["features"] * BYTES_PER_VALUE] * levels
        cpc = costs.hash_cycles_per_corner
        feat = p["features"]
    groups = _line_groups(g.cols, corners)
    out = {}
    for level in range(levels):
        line = level % g.rows
        chunks = _chunks(n, len(groups))
        for grp, (s0, s1) in zip(groups, chunks):
            for slot, col in enumerate(grp):
                mine = [k for k in range(corners) if k % len(grp) == slot]
                pe = line * g.cols + col
                units, cyc = out.get(pe, ((), 0.0))
                base = level * n * corners
                units = units + tuple((base + s0 * corners + k, base + s1 * corners + k, corners)
                                      for k in mine if s1 > s0)
                out[pe] = (units, cyc + (s1 - s0) * len(mine) * cpc)
    assignments = [Assignment(pe, *out.get(pe, ((), 0.0))) for pe in range(g.pes)]
    per_line = [0] * g.rows
    for level in range(levels):
        per_line[level % g.rows] += table_bytes[level]
    per_pe = math.ceil(max(per_line) / g.cols)
    lookups = float(n) * levels * corners
    tally = OpTally(int16_ops=lookups * 6, bf16_macs=lookups * (feat + 2))
    return dict(unit="level-point-corner", unit_count=levels * n * corners,
                assignments=assignments, per_pe=per_pe, resident=sum(table_bytes),
                reduction=REDUCTION_LINE, passes=math.ceil(levels / g.rows),
                fill=max(1, math.ceil(math.log2(max(len(groups[0]), 2)))) + 1,
                ideal=lookups * cpc, tally=tally,
                info=dict(levels=levels, line_of_level=[l % g.rows for l in range(levels)],
                          lanes_per_line=len(groups)))


def _map_decomposed(node, config, costs):
    p = node.workload.params
    g = config.geometry
    n = node.workload.inputs[0].rows
    planes, corners = int(p["planes"]), int(p.get("corners", 4))
    _check_index("plane resolution", p["resolution"])
    cpc = costs.linear_cycles_per_corner
    chunks = _chunks(n, g.cols)
    out = {}
    for plane in range(planes):
        line = plane % g.rows
        for col, (s0, s1) in enumerate(chunks):
            pe = line * g.cols + col
            units, cyc = out.get(pe, ((), 0.0))
            if s1 > s0:
                units = units + ((plane * n + s0, plane * n + s1, 1),)
            out[pe] = (units, cyc + (s1 - s0) * corners * cpc)
    assignments = [Assignment(pe, *out.get(pe, ((), 0.0))) for pe in range(g.pes)]
    plane_bytes = p["resolution"] ** 2 * p["features"] * BYTES_PER_VALUE
    per_line = [0] * g.rows
    for plane in range(planes):
        per_line[plane % g.rows] += plane_bytes
    lookups = float(n) * planes * corners
    tally = OpTally(int16_ops=lookups * 2, bf16_macs=lookups * (p["features"] + 1)
                    + n * planes * p["features"])
    return dict(unit="plane-point", unit_count=planes * n, assignments=assignments,
                per_pe=math.ceil(max(per_line) / g.cols), resident=planes * plane_bytes,
                reduction=REDUCTION_LINE_COLUMN, passes=math.ceil(planes / g.rows),
                fill=g.rows + 1, ideal=lookups * cpc, tally=tally,
                info=dict(planes=planes, line_of_plane=[q % g.rows for q in range(planes)]))


def _map_sorting(node, config, costs):
    p = node.workload.params
    g = config.geometry
    sizes = [int(s) for s in p.get("patch_sizes", [])]
    for s in sizes:
        _check_index("patch element count", s)
    load = {}
    for i, s in enumerate(sizes):
        pe = i % g.pes
        units, cyc = load.get(pe, ((), 0.0))
        load[pe] = (units + ((i, i + 1, 1),), cyc + merge_comparisons(s) * costs.sort_cycles_per_compare)
    assignments = [Assignment(pe, *load.get(pe, ((), 0.0))) for pe in range(g.pes)]
    comparisons = float(sum(merge_comparisons(s) for s in sizes))
    per_pe = max(sizes, default=0) * 2 * BYTES_PER_VALUE  # key + payload index
    return dict(unit="patch", unit_count=len(sizes), assignments=assignments, per_pe=per_pe,
                resident=0, reduction=REDUCTION_NONE, passes=1, fill=0,
                ideal=comparisons * costs.sort_cycles_per_compare,
                tally=OpTally(compares=comparisons),
                info=dict(patches=len(sizes), largest_patch=max(sizes, default=0)))


def _map_gemm(node, config, costs):
    p = node.workload.params
    g = config.geometry
    res = config.resources
    slots = g.pes * res.bf16_macs
    rows = node.workload.inputs[0].rows
    fill = g.rows + g.cols + costs.gemm_buffer_stages
    if "layers" in p and not p.get("per_item_weights"):
        weights = sum(k * n for k, n in p["layers"])
        if p.get("tiles"):
            weights_total = weights * p["tiles"]
        else:
            weights_total = weights
        macs = float(rows) * weights
        if weights <= slots:
            copies = max(1, min(slots // weights, rows))
            waves = 1
            critical = math.ceil(rows / copies)
        else:
            copies = 1
            waves = math.ceil(weights / slots)
            critical = waves * rows
        units = rows * waves
        chunks = _chunks(rows, copies)
        # Replicas split the streamed rows; each replica spans weights/4 PEs.
        span = max(1, math.ceil(min(weights, slots) / res.bf16_macs))
        assignments = []
        for pe in range(g.pes):
            replica = pe // span
            if replica < copies:
                s0, s1 = chunks[replica]
                if pe % span == 0 and s1 > s0:
                    unit_ranges = tuple((w * rows + s0, w * rows + s1, 1) for w in range(waves))
                else:
                    unit_ranges = ()
                assignments.append(Assignment(pe, unit_ranges, float(critical) if s1 > s0 else 0.0))
            else:
                assignments.append(Assignment(pe, (), 0.0))
        resident = weights_total * BYTES_PER_VALUE
        per_pe = math.ceil(weights_total * copies * BYTES_PER_VALUE / g.pes)
        return dict(unit="wave-row", unit_count=units, assignments=assignments, per_pe=per_pe,
                    resident=resident, reduction=REDUCTION_NONE, passes=waves, fill=fill,
                    ideal=macs / res.bf16_macs, tally=OpTally(bf16_macs=macs),
                    info=dict(weights=weights, copies=copies, waves=waves,
                              lanes=min(slots, copies * weights)))
    # Streaming GEMM-class steps (ray casting, blending, per-item SH products).
    items = node.workload.items
    if p.get("per_item_weights"):
        nb = p["bases"]
        macs = float(items) * nb * 3
        sfu = float(items) * 4
        resident = p["weight_values"] * BYTES_PER_VALUE
    else:
        macs = float(p.get("macs", 0))
        sfu = float(p.get("sfu_ops", 0))
        resident = 0
    chunks = _chunks(items, g.pes)
    per = max(macs / res.bf16_macs, sfu / res.sfus) / max(items, 1)
    assignments = [Assignment(pe, ((s0, s1, 1),) if s1 > s0 else (), (s1 - s0) * per)
                   for pe, (s0, s1) in enumerate(chunks)]
    waves = max(1, math.ceil(macs / slots / max(items, 1))) if p.get("per_item_weights") else 1
    return dict(unit="row", unit_count=items, assignments=assignments,
                per_pe=math.ceil(resident / g.pes), resident=resident,
                reduction=REDUCTION_NONE, passes=1, fill=fill,
                ideal=max(macs / res.bf16_macs, sfu / res.sfus),
                tally=OpTally(bf16_macs=macs, sfu_ops=sfu), info=dict(waves=waves))


_MAPPERS = {GP: _map_geometric, CGI: _map_combined, DGI: _map_decomposed, SORT: _map_sorting,
            GEMM: _map_gemm}


def _workload_rows(node: MicroOpNode) -> int:
    if node.kind == SORT:
        return len(node.workload.params.get("patch_sizes", []))
    if node.kind == GP:
        return node.workload.items
    return node.workload.inputs[0].rows if node.workload.inputs else node.workload.items


def map_microop(node: MicroOpNode, config: ArrayConfiguration,
                costs: CostConstants | None = None) -> MappingPlan:
    """Fixed per-operator mapping of ``node`` onto the configured array."""
    if node.kind != config.kind:
        raise ContractViolation(f"node {node.name} is {node.kind}, array configured for {config.kind}")
    costs = costs or CostConstants()
    g = config.geometry
    if _workload_rows(node) == 0:
        return MappingPlan(node.name, node.kind, "none", 0, g.rows, g.cols, (), (), REDUCTION_NONE)
    m = _MAPPERS[node.kind](node, config, costs)
    return MappingPlan(node.name, node.kind, m["unit"], int(m["unit_count"]), g.rows, g.cols,
                       tuple(m["assignments"]), _schedule(config, int(m["per_pe"])),
                       m["reduction"], int(m["passes"]), int(m["fill"]), float(m["ideal"]),
                       int(m["resident"]), m["tally"], m["info"])


@dataclass(frozen=True)
class Traffic:
    """Standalone DRAM/SRAM traffic of one node.

    Every resident operand is fetched once per FF tile; every input port is
    read once and the output written once.
    """

    resident_bytes: int
    input_bytes: tuple[int, ...]
    output_bytes: int
    sram_accesses: int
    ff_reloads: int

    @property
    def dram_bytes(self) -> int:
        return self.resident_bytes + sum(self.input_bytes) + self.output_bytes


def plan_traffic(plan: MappingPlan, node: MicroOpNode) -> Traffic:
    if plan.empty:
        return Traffic(0, tuple(0 for _ in node.workload.inputs), 0, 0, 0)
    w = node.workload
    ins = tuple(prt.rows * prt.width * BYTES_PER_VALUE for prt in w.inputs)
    if w.params.get("generated"):
        ins = tuple(0 for _ in ins)
    out = w.out_rows * w.out_width * BYTES_PER_VALUE
    words = (plan.resident_bytes + sum(ins) + out) // BYTES_PER_VALUE
    return Traffic(plan.resident_bytes, ins, out, int(words), plan.ff_tiles - 1)


def plan_to_dict(plan: MappingPlan) -> dict:
    d = asdict(plan)
    d["assignments"] = [[a.pe, [list(u) for u in a.units], a.cycles] for a in plan.assignments]
    d["schedule"] = [[t.index, t.resident_bytes_per_pe] for t in plan.schedule]
    return d


def dumps_plan(plan: MappingPlan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2, sort_keys=True) + "\n"
