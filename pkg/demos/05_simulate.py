"""Frame cost of every pipeline, with the roofline bounds beside it.

Run: python3 demos/05_simulate.py
"""

from rendersim.ir import compile_pipeline, gemm_graph
from rendersim.scene import PIPELINE_KINDS, default_camera, default_sampling, generate_synthetic_scene
from rendersim.sim import estimate_energy, report_csv, simulate

scale = "medium"
print(f"{'pipeline':10s} {'cycles':>12s} {'fps':>8s} {'phases':>6s} {'reconf':>6s}  bound")
for kind in PIPELINE_KINDS:
    graph = compile_pipeline(kind, generate_synthetic_scene(kind, 0, scale),
                             default_camera(scale), default_sampling(scale))
    r = simulate(graph)
    print(f"{kind:10s} {r.total_cycles:12,d} {r.fps:8.1f} {r.phases:6d} "
          f"{r.reconfiguration_count:6d}  {r.bound}")

# One dense layer, 1024 rows through a 64x64 weight matrix.  The weights are
# fetched once; streaming the rows in and out is what costs time.
r = simulate(gemm_graph(1024, 64, 64))
n = r.nodes[0]
print(f"\nGEMM 1024x64x64: {n.cycles} cycles, {n.bound}-bound "
      f"(compute >= {n.compute_lower_bound:.0f}, memory >= {n.memory_lower_bound:.1f})")
print(report_csv(r))

e = estimate_energy(r.tally)
print(f"energy ({e.label}): {e.total_joules * 1e6:.2f} uJ, "
      f"of which DRAM {e.terms['dram_bytes'] / e.total_joules:.0%}")
