"""The five micro-operators as plain numpy kernels.

Run: python3 demos/02_kernels.py
"""

import numpy as np

from rendersim import microops as mo
from rendersim.scene import default_camera, generate_synthetic_scene

cam = default_camera("tiny")

# Geometric processing, mesh flavour: a z-buffer over clip-space triangles.
mesh = generate_synthetic_scene("mesh", 0).mesh
frags = mo.rasterize_meshes(mo.space_convert(mesh, cam), mesh.triangles, (cam.width, cam.height))
print("triangle id per pixel (. = empty):")
for row in frags.index:
    print(" ".join("." if t < 0 else format(t, "x") for t in row))

# Combined grid indexing: eight hashed corners per level, trilinear weights.
hg = generate_synthetic_scene("hash-grid", 0).hash_grid
p = np.array([0.31, 0.52, 0.77])
print("\nhash-grid features at", p, "->", np.round(mo.combined_grid_index(hg, p), 4))

# Decomposed grid indexing: three planes, bilinear each, then aggregate.
lr = generate_synthetic_scene("low-rank", 0).low_rank
print("tri-plane features ->", np.round(mo.decomposed_grid_index(lr, p), 4))

# Sorting: a stable bottom-up merge sort, the comparator ALU's algorithm.
keys = [0.4, 0.1, 0.4, 0.0, 0.3]
print("\npatch_sort", keys, "->", mo.patch_sort(keys).tolist(),
      f"({mo.merge_comparisons(len(keys))} comparisons worst case)")

# GEMM: accumulated in ascending K, so a scalar triple loop matches bit for bit.
x = np.arange(6.0).reshape(2, 3)
w = np.ones((3, 2))
print("gemm ->", mo.gemm(x, w, bias=[0.5, -20.0], activation="relu").tolist())

# Blending: front to back; what is not absorbed is left as transmittance.
rgb, t = mo.volume_blend([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [0.5, 0.5, 0.5])
print("blend ->", rgb.round(4).tolist(), "residual T =", t)
