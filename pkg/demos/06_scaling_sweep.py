"""Where to spend area: more PEs, more SRAM, or both.

Run: python3 demos/06_scaling_sweep.py
"""

from rendersim.ir import compile_pipeline
from rendersim.scene import default_camera, default_sampling, generate_synthetic_scene
from rendersim.sim import sweep_scaling

scale = "medium"
graph = compile_pipeline("hash-grid", generate_synthetic_scene("hash-grid", 0, scale),
                         default_camera(scale), default_sampling(scale))
cells = {(c.pe_scale, c.sram_scale): c for c in sweep_scaling(graph)}

print("speed relative to the 1x/1x array")
print("SRAM\\PE    1x      2x      4x")
for s in (1, 2, 4):
    print(f"  {s}x   " + " ".join(f"{cells[(p, s)].speedup:7.2f}" for p in (1, 2, 4)))

# Scaling only one resource barely helps: more PEs run out of staging space
# and more SRAM has no extra compute to feed.  Growing both together pays.
print("\nspeed per unit of area (PE scale + SRAM scale)")
for s in (1, 2, 4):
    print(f"  {s}x   " + " ".join(f"{cells[(p, s)].speed_per_area:7.3f}" for p in (1, 2, 4)))
