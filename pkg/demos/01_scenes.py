"""Synthetic scenes: what each pipeline consumes.

Run: python3 demos/01_scenes.py
"""

import dataclasses
import tempfile

import numpy as np

from rendersim.scene import (PIPELINE_KINDS, assets_equal, generate_synthetic_scene, load_scene,
                             save_scene, validate_scene)

# Every scene is a pure function of (kind, seed, scale).  Tiny scenes are
# 16x16 pixels; medium is the workload the simulator is calibrated on.
for kind in PIPELINE_KINDS:
    a = generate_synthetic_scene(kind, seed=0, scale="tiny")
    parts = [name for name in ("mesh", "texture", "mesh_mlp", "low_rank", "hash_grid",
                               "field_mlp", "gaussians") if getattr(a, name) is not None]
    if a.mlp_tiles:
        parts.append(f"{len(a.mlp_tiles)} MLP tiles")
    print(f"{kind:10s} -> {', '.join(parts)}")

# The hash grid at medium scale: 14 levels, 2^11 entries, 2 features each.
hg = generate_synthetic_scene("hash-grid", 0, "medium").hash_grid
print("\nmedium hash grid resolutions:", hg.resolutions)
print("tables:", hg.tables.shape, hg.tables.dtype)

# Validation reports one line per broken invariant.  Flip an opacity out of
# range and see it flagged.
g = generate_synthetic_scene("gaussian", 1)
bad_opacity = np.array(g.gaussians.opacities)
bad_opacity[0] = 1.7
broken = dataclasses.replace(g, gaussians=dataclasses.replace(g.gaussians, opacities=bad_opacity))
print("\nvalidate(original):", validate_scene(g) or "ok")
print("validate(broken):  ", validate_scene(broken))

# Scenes serialise to a JSON manifest plus one little-endian blob per tensor.
with tempfile.TemporaryDirectory() as d:
    save_scene(g, d)
    back = load_scene(d)
    print("\nround trip bit-identical:", assets_equal(g, back))
