"""How one 16x16 PE array is reconfigured and loaded for each operator.

Run: python3 demos/04_array_and_mapping.py
"""

from rendersim.arch import (MODULE_COLUMNS, PEAK_MACS_PER_CYCLE, configure_array,
                            ff_capacity_check, module_row)
from rendersim.ir import MICROOP_KINDS, SHORT_NAMES, compile_pipeline
from rendersim.mapper import map_microop
from rendersim.scene import default_camera, default_sampling, generate_synthetic_scene

# Module states per operator.
print(f"{'':8s}" + " | ".join(c.split("&")[0][:14] for c in MODULE_COLUMNS))
for kind in MICROOP_KINDS:
    cfg = configure_array(kind)
    print(f"{SHORT_NAMES[kind]:8s}" + " | ".join(s[:14] for s in module_row(cfg))
          + f"   [{cfg.network.mode}]")

print(f"\npeak: {PEAK_MACS_PER_CYCLE} BF16 MACs per cycle")
for nbytes in (4096, 4097, 20000):
    chk = ff_capacity_check(configure_array(MICROOP_KINDS[1]), nbytes)
    print(f"resident {nbytes:5d} B/PE -> fits={chk.fits}, tiles={chk.tiles}")

# Map the medium hash-grid graph and look at where the work lands.
scale = "medium"
graph = compile_pipeline("hash-grid", generate_synthetic_scene("hash-grid", 0, scale),
                         default_camera(scale), default_sampling(scale))
print()
for node in graph.nodes:
    plan = map_microop(node, configure_array(node.kind))
    busy = sum(1 for a in plan.assignments if a.cycles > 0)
    print(f"{node.name:10s} {plan.unit_count:>9d} {plan.unit}s, {busy:3d} busy PEs, "
          f"critical path {plan.critical_cycles:,.0f} cycles, reduction: {plan.reduction}")
    if "line_of_level" in plan.info:
        print(f"{'':10s} level -> PE line: {plan.info['line_of_level']}")

# Per-line load of the hash indexer: one level per line, 14 of 16 lines busy.
plan = map_microop(graph.nodes[1], configure_array(graph.nodes[1].kind))
print("\nunits per PE line:", plan.counts().reshape(16, 16).sum(axis=1).tolist())
