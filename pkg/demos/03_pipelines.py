"""Compile each pipeline to a micro-operator graph and render it.

The graph executor and the scalar per-pixel oracle are separate code paths;
with early termination off they agree to rounding.

Run: python3 demos/03_pipelines.py [output-dir]
"""

import dataclasses
import sys
from pathlib import Path

import numpy as np

from rendersim.images import write_ppm
from rendersim.ir import SHORT_NAMES, compile_pipeline, dumps_graph, execute_graph
from rendersim.reference import render_reference
from rendersim.scene import PIPELINE_KINDS, default_camera, default_sampling, generate_synthetic_scene

out = Path(sys.argv[1]) if len(sys.argv) > 1 else None
cam = default_camera("tiny")
sampling = dataclasses.replace(default_sampling("tiny"), early_termination=False)

for kind in PIPELINE_KINDS:
    assets = generate_synthetic_scene(kind, seed=5)
    graph = compile_pipeline(kind, assets, cam, sampling)
    image = execute_graph(graph, assets, cam)
    oracle = render_reference(kind, assets, cam, sampling)
    chain = " -> ".join(f"{SHORT_NAMES[n.kind]}({n.role})" for n in graph.nodes)
    print(f"{kind:10s} {chain}")
    print(f"{'':10s} max |graph - oracle| = {np.max(np.abs(image - oracle)):.1e}")
    if out:
        write_ppm(out / f"{kind}.ppm", image)

# The whole graph is plain JSON; here is the start of the Gaussian one.
g = compile_pipeline("gaussian", generate_synthetic_scene("gaussian", 5), cam, sampling)
print("\n" + "\n".join(dumps_graph(g).splitlines()[:14]) + "\n  ...")
