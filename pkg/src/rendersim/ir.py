"""Micro-operator graphs: the indexing/reduction template, the pipeline
compiler, graph validation and functional execution."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import microops as mo
from .errors import CompileError
from .scene import (PIPELINE_KINDS, Camera, SamplingConfig, SceneAssets, canonical_kind)

GP = "GeometricProcessing"
CGI = "CombinedGridIndexing"
DGI = "DecomposedGridIndexing"
SORT = "Sorting"
GEMM = "GEMM"
MICROOP_KINDS = (GP, CGI, DGI, SORT, GEMM)
SHORT_NAMES = {GP: "GP", CGI: "CGI", DGI: "DGI", SORT: "Sorting", GEMM: "GEMM"}

ITEMS = ("mesh", "gaussian", "features", "sorting-keys", "scalars")
DIMENSIONS = ("1D", "2D", "3D")
FUNCTIONS = ("automatic-counter", "random-hash", "linear-indexing")
ACCESS = ("continuous", "discrete", "continuous-or-discrete")

BYTES_PER_VALUE = 2  # 16-bit operands on chip and in DRAM


@dataclass(frozen=True)
class TemplateRow:
    """One row of the indexing/reduction template."""

    items: tuple[str, ...]
    dimensions: tuple[str, ...]
    functions: tuple[str, ...]
    access: tuple[str, ...]
    label: tuple[str, str, str, str]  # human-readable cells


TEMPLATE = {
    GP: TemplateRow(("mesh", "gaussian"), ("1D",), ("automatic-counter",), ("continuous",),
                    ("Mesh/Gaussian", "1D", "Automatic Counter", "Continuous")),
    CGI: TemplateRow(("features",), ("1D", "2D", "3D"), ("random-hash", "linear-indexing"),
                     ("discrete",),
                     ("Features", "1D/2D/3D", "Random Hash/Linear Indexing", "Discrete")),
    DGI: TemplateRow(("features",), ("2D", "3D"), ("linear-indexing",), ("discrete",),
                     ("Features", "2D/3D", "Linear Indexing", "Discrete")),
    SORT: TemplateRow(("sorting-keys",), ("1D",), ("automatic-counter",), ("continuous",),
                      ("Sorting Keys", "1D", "Automatic Counter", "Continuous")),
    GEMM: TemplateRow(("scalars",), ("1D", "2D"), ("automatic-counter",),
                      ("continuous", "discrete", "continuous-or-discrete"),
                      ("Scalars", "1D/2D", "Automatic Counter", "Continuous/Discrete")),
}


@dataclass(frozen=True)
class IndexingTask:
    item: str
    dimension: str
    function: str


@dataclass(frozen=True)
class ReductionTask:
    access: str


@dataclass(frozen=True)
class Port:
    rows: int
    width: int


@dataclass(frozen=True)
class Workload:
    """Sizes the cost model needs.

    ``items`` counts the node's work units; ``inputs`` are input ports (ports
    without an incoming edge are read from DRAM unless ``params['generated']``);
    ``params`` holds role-specific statistics and must stay JSON-serialisable.
    """

    items: int
    inputs: tuple[Port, ...]
    out_rows: int
    out_width: int
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MicroOpNode:
    name: str
    kind: str
    role: str
    indexing: IndexingTask
    reduction: ReductionTask
    workload: Workload


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    port: int
    rows: int
    width: int


@dataclass(frozen=True)
class PipelineGraph:
    kind: str
    nodes: tuple[MicroOpNode, ...]
    edges: tuple[Edge, ...]
    viewport: tuple[int, int] = (0, 0)

    @property
    def pixels(self) -> int:
        return self.viewport[0] * self.viewport[1]

    def in_edges(self, i: int) -> list[Edge]:
        return [e for e in self.edges if e.dst == i]

    def out_edges(self, i: int) -> list[Edge]:
        return [e for e in self.edges if e.src == i]

    def kinds(self) -> list[str]:
        return [n.kind for n in self.nodes]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def template_issues(node: MicroOpNode) -> list[str]:
    row = TEMPLATE.get(node.kind)
    if row is None:
        return [f"node {node.name}: unknown micro-operator kind {node.kind!r}"]
    ix, rd = node.indexing, node.reduction
    out = []
    for what, value, allowed in (("item", ix.item, row.items),
                                 ("dimension", ix.dimension, row.dimensions),
                                 ("function", ix.function, row.functions),
                                 ("access pattern", rd.access, row.access)):
        if value not in allowed:
            out.append(f"node {node.name}: {what} {value!r} is not in the {node.kind} "
                       f"template row {allowed}")
    return out


def _cycle_issues(n: int, edges) -> list[str]:
    succ = {i: [] for i in range(n)}
    indeg = {i: 0 for i in range(n)}
    for e in edges:
        if 0 <= e.src < n and 0 <= e.dst < n:
            succ[e.src].append(e.dst)
            indeg[e.dst] += 1
    ready = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while ready:
        i = ready.pop()
        seen += 1
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
    return [] if seen == n else ["graph: dependency cycle detected"]


def validate_graph(graph: PipelineGraph) -> list[str]:
    """Every violated node/edge invariant as a readable line."""
    out = []
    if graph.kind not in PIPELINE_KINDS + ("custom",):
        out.append(f"graph: unknown pipeline kind {graph.kind!r}")
    n = len(graph.nodes)
    for node in graph.nodes:
        out.extend(template_issues(node))
        w = node.workload
        if w.items <= 0:
            out.append(f"node {node.name}: workload count must be positive (got {w.items})")
        if w.out_width <= 0 or w.out_rows < 0:
            out.append(f"node {node.name}: bad output shape ({w.out_rows}, {w.out_width})")
    for e in graph.edges:
        if not (0 <= e.src < n and 0 <= e.dst < n):
            out.append(f"edge {e.src}->{e.dst}: endpoint out of range")
            continue
        if e.src == e.dst:
            out.append(f"edge {e.src}->{e.dst}: self loop")
        prod, cons = graph.nodes[e.src], graph.nodes[e.dst]
        if e.width != prod.workload.out_width or e.rows != prod.workload.out_rows:
            out.append(f"edge {prod.name}->{cons.name}: carries ({e.rows}, {e.width}) but producer "
                       f"emits ({prod.workload.out_rows}, {prod.workload.out_width})")
        if not 0 <= e.port < len(cons.workload.inputs):
            out.append(f"edge {prod.name}->{cons.name}: no input port {e.port}")
            continue
        p = cons.workload.inputs[e.port]
        if p.width != e.width or p.rows != e.rows:
            out.append(f"edge {prod.name}->{cons.name}: producer width {e.width} does not match "
                       f"consumer input width {p.width} (rows {e.rows} vs {p.rows})")
    out.extend(_cycle_issues(n, graph.edges))
    return out


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def _node(name, kind, role, item, dim, fn, access, items, inputs, out_rows, out_width, **params):
    return MicroOpNode(name, kind, role, IndexingTask(item, dim, fn), ReductionTask(access),
                       Workload(int(items), tuple(Port(int(r), int(w)) for r, w in inputs),
                                int(out_rows), int(out_width), params))


def _chain(nodes) -> tuple[Edge, ...]:
    edges = []
    for i in range(len(nodes) - 1):
        a = nodes[i].workload
        edges.append(Edge(i, i + 1, 0, a.out_rows, a.out_width))
    return tuple(edges)


def _mlp_params(mlp) -> dict:
    return dict(layers=[list(s) for s in mlp.shapes], weight_values=int(mlp.param_count))


def _raster_stats(assets: SceneAssets, camera: Camera):
    """Covered pixels and bounding-box pixel/triangle tests of the rasteriser."""
    mesh = assets.mesh
    cv = mo.space_convert(mesh, camera)
    ok = mo.drawable_triangles(cv, mesh.triangles)
    sx, sy, _ = mo.screen_coords(np.where(cv.clip[:, 3:4] > 0, cv.clip, 1.0),
                                 camera.width, camera.height)
    tests = 0
    tris = mesh.triangles.astype(np.int64)
    for t in np.flatnonzero(ok):
        xs, ys = sx[tris[t]], sy[tris[t]]
        x0 = max(int(math.floor(xs.min() - 0.5)) - 1, 0)
        x1 = min(int(math.ceil(xs.max() - 0.5)) + 1, camera.width - 1)
        y0 = max(int(math.floor(ys.min() - 0.5)) - 1, 0)
        y1 = min(int(math.ceil(ys.max() - 0.5)) + 1, camera.height - 1)
        if x0 <= x1 and y0 <= y1:
            tests += (x1 - x0 + 1) * (y1 - y0 + 1)
    frags = mo.rasterize_meshes(cv, mesh.triangles, (camera.width, camera.height))
    covered = int(np.count_nonzero(frags.index != mo.NONE))
    return covered, tests, int(ok.sum())


def _splat_stats(assets: SceneAssets, camera: Camera, sampling: SamplingConfig):
    g = assets.gaussians
    proj = mo.project_gaussians(g, camera)
    tests = 0
    for i in np.flatnonzero(proj.visible):
        r = 3.0 * np.sqrt(np.diag(proj.cov2d[i]))
        cx, cy = proj.center[i]
        x0, x1 = max(int(cx - r[0]), 0), min(int(cx + r[0]), camera.width - 1)
        y0, y1 = max(int(cy - r[1]), 0), min(int(cy + r[1]), camera.height - 1)
        if x0 <= x1 and y0 <= y1:
            tests += (x1 - x0 + 1) * (y1 - y0 + 1)
    cands = mo.splat_gaussians(g, camera, sampling.splat_threshold)
    pid = np.repeat(np.arange(camera.width * camera.height), cands.counts)
    patch = mo.patch_of_pixel(camera.width, camera.height, sampling.patch_size)[pid]
    per_patch = []
    for p in np.unique(patch):
        per_patch.append(int(np.unique(cands.gaussian[patch == p]).size))
    return len(cands), tests, int(proj.visible.sum()), per_patch


def _require(assets: SceneAssets, *names):
    for n in names:
        v = getattr(assets, n)
        if v is None or (isinstance(v, tuple) and not v):
            raise CompileError(f"pipeline needs the {n!r} representation but the assets lack it")


def _ray_cast_node(pixels, samples, width_out):
    return _node("ray-cast", GEMM, "ray-cast", "scalars", "2D", "automatic-counter", "continuous",
                 pixels, [(pixels, 2)], pixels * samples, width_out,
                 generated=True, rays=pixels, samples=samples,
                 macs=pixels * 9 + pixels * samples * 3, sfu_ops=pixels * 2)


def _field_nodes(rays, samples, feat_width, mlp, delta: float, et: bool):
    rows = rays * samples
    return [
        _node("mlp", GEMM, "mlp", "scalars", "2D", "automatic-counter", "continuous",
              rows, [(rows, feat_width)], rows, 4, **_mlp_params(mlp)),
        _node("blending", GEMM, "blending", "scalars", "1D", "automatic-counter", "continuous",
              rows, [(rows, 4)], rays, 3, rays=rays, samples=samples, delta=delta,
              early_termination=et, macs=rows * 8, sfu_ops=rows * 4),
    ]


def compile_pipeline(kind: str, assets: SceneAssets, camera: Camera,
                     sampling: Optional[SamplingConfig] = None) -> PipelineGraph:
    """Lower one rendering pipeline into a micro-operator graph."""
    kind = canonical_kind(kind)
    sampling = sampling or SamplingConfig()
    bad = camera.issues()
    if bad:
        raise CompileError("; ".join(bad))
    w, h = camera.width, camera.height
    npix = w * h
    s = sampling.samples_per_ray
    et = bool(sampling.early_termination)
    delta = (camera.far - camera.near) / s
    if kind == "mesh":
        _require(assets, "mesh", "texture", "mesh_mlp")
        covered, tests, drawable = _raster_stats(assets, camera)
        c = assets.texture.channels
        t = assets.mesh.triangles.shape[0]
        tex = assets.texture
        nodes = [
            _node("rasterization", GP, "rasterization", "mesh", "1D", "automatic-counter",
                  "continuous", npix, [(t, 15)], covered, 2, primitives=t, drawable=drawable,
                  tests=tests, covered=covered, width=w, height=h),
            _node("texture", CGI, "texture", "features", "2D", "linear-indexing", "discrete",
                  covered, [(covered, 2)], covered, c, corners=4, resident_values=int(tex.data.size),
                  texture=[tex.height, tex.width, c], filter="bilinear"),
            _node("mlp", GEMM, "mlp", "scalars", "2D", "automatic-counter", "continuous",
                  covered, [(covered, c)], covered, 3, **_mlp_params(assets.mesh_mlp)),
        ]
    elif kind == "mlp":
        _require(assets, "mlp_tiles")
        g = assets.tile_grid
        if len(assets.mlp_tiles) != g ** 3:
            raise CompileError(f"expected {g ** 3} MLP tiles, found {len(assets.mlp_tiles)}")
        rows = npix * s
        first = assets.mlp_tiles[0]
        nodes = [
            _ray_cast_node(npix, s, 6),
            _node("mlp", GEMM, "mlp", "scalars", "2D", "automatic-counter", "discrete",
                  rows, [(rows, 6)], rows, 4, tile_grid=g, tiles=g ** 3,
                  layers=[list(x) for x in first.shapes],
                  weight_values=int(sum(m.param_count for m in assets.mlp_tiles))),
            _field_nodes(npix, s, 6, first, delta, et)[1],
        ]
    elif kind in ("low-rank", "hash-grid"):
        rows = npix * s
        if kind == "low-rank":
            _require(assets, "low_rank", "field_mlp")
            lr = assets.low_rank
            f = lr.feature_width
            index = _node("plane-index", DGI, "plane-index", "features", "2D", "linear-indexing",
                          "discrete", rows, [(rows, 3)], rows, f, planes=len(lr.planes),
                          resolution=lr.planes[0].resolution, features=f, corners=4,
                          aggregation=lr.aggregation,
                          resident_values=int(sum(p.data.size for p in lr.planes)))
        else:
            _require(assets, "hash_grid", "field_mlp")
            hg = assets.hash_grid
            f = hg.levels * hg.feature_width
            index = _node("hash-index", CGI, "hash-index", "features", "3D", "random-hash",
                          "discrete", rows, [(rows, 3)], rows, f, levels=hg.levels,
                          table_size=hg.table_size, features=hg.feature_width, corners=8,
                          resolutions=list(hg.resolutions), resident_values=int(hg.tables.size))
        if assets.field_mlp.in_width != f:
            raise CompileError(f"field MLP expects width {assets.field_mlp.in_width}, "
                               f"grid provides {f}")
        nodes = [_ray_cast_node(npix, s, 3), index,
                 *_field_nodes(npix, s, f, assets.field_mlp, delta, et)]
    elif kind == "gaussian":
        _require(assets, "gaussians")
        gs = assets.gaussians
        n = len(gs)
        cands, tests, visible, per_patch = _splat_stats(assets, camera, sampling)
        comparisons = sum(mo.merge_comparisons(k) for k in per_patch)
        k = gs.colors.shape[1]
        nb = k // 3
        nodes = [
            _node("splatting", GP, "splatting", "gaussian", "1D", "automatic-counter",
                  "continuous", npix, [(n, 10)], cands, 3, primitives=n, visible=visible,
                  tests=tests, candidates=cands, threshold=sampling.splat_threshold,
                  width=w, height=h),
            _node("sorting", SORT, "sorting", "sorting-keys", "1D", "automatic-counter",
                  "continuous", max(cands, 1), [(cands, 3)], cands, 3, patch=sampling.patch_size,
                  patches=len(per_patch), patch_sizes=per_patch, comparisons=comparisons),
            _node("sh-color", GEMM, "sh-color", "scalars", "1D", "automatic-counter",
                  "continuous", n, [(n, 3 + k)], n, 3, bases=nb, sh_degree=gs.sh_degree,
                  layers=[[nb, 3]], weight_values=n * k, per_item_weights=True),
            _node("blending", GEMM, "blending", "scalars", "1D", "automatic-counter",
                  "continuous", max(cands, 1), [(cands, 3), (n, 3)], npix, 3, rays=npix,
                  samples_total=cands, early_termination=et, macs=cands * 8,
                  sfu_ops=cands),
        ]
        edges = (Edge(0, 1, 0, cands, 3), Edge(1, 3, 0, cands, 3), Edge(2, 3, 1, n, 3))
        return PipelineGraph(kind, tuple(nodes), edges, (w, h))
    else:  # hybrid
        _require(assets, "mesh", "hash_grid", "field_mlp")
        covered, tests, drawable = _raster_stats(assets, camera)
        hs = sampling.hybrid_samples
        hg = assets.hash_grid
        f = hg.levels * hg.feature_width
        if assets.field_mlp.in_width != f:
            raise CompileError(f"field MLP expects width {assets.field_mlp.in_width}, "
                               f"grid provides {f}")
        rows = covered * hs
        t = assets.mesh.triangles.shape[0]
        band_delta = 2.0 * sampling.hybrid_band / hs
        nodes = [
            _node("rasterization", GP, "rasterization", "mesh", "1D", "automatic-counter",
                  "continuous", npix, [(t, 15)], rows, 3, primitives=t, drawable=drawable,
                  tests=tests, covered=covered, band=sampling.hybrid_band, samples=hs,
                  width=w, height=h),
            _node("hash-index", CGI, "hash-index", "features", "3D", "random-hash", "discrete",
                  max(rows, 1), [(rows, 3)], rows, f, levels=hg.levels, table_size=hg.table_size,
                  features=hg.feature_width, corners=8, resolutions=list(hg.resolutions),
                  resident_values=int(hg.tables.size)),
            *_field_nodes(covered, hs, f, assets.field_mlp, band_delta, et),
        ]
        nodes[2] = replace(nodes[2], workload=replace(nodes[2].workload, items=max(rows, 1)))
        nodes[3] = replace(nodes[3], workload=replace(
            nodes[3].workload, items=max(rows, 1), out_rows=npix,
            params={**nodes[3].workload.params, "pixels": npix}))
        edges = _chain(nodes)
        edges = edges[:2] + (Edge(2, 3, 0, rows, 4),)
        return PipelineGraph(kind, tuple(nodes), edges, (w, h))
    for i, n in enumerate(nodes):
        if n.workload.items <= 0:
            nodes[i] = replace(n, workload=replace(n.workload, items=1))
    return PipelineGraph(kind, tuple(nodes), _chain(nodes), (w, h))


def gemm_graph(m: int, k: int, n: int) -> PipelineGraph:
    """A single dense layer, ``(m, k) x (k, n)``, as a standalone graph."""
    node = _node("gemm", GEMM, "mlp", "scalars", "2D", "automatic-counter", "continuous",
                 m, [(m, k)], m, n, layers=[[k, n]], weight_values=k * n, bias=False)
    return PipelineGraph("custom", (node,), (), (0, 0))


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass
class RenderResult:
    image: np.ndarray           # (H, W, 3)
    transmittance: np.ndarray   # (H, W) residual; 1 where nothing was hit


def _blend_field(raw, rays, samples, delta, et):
    rgb, sigma = mo.field_outputs(raw)
    return mo.volume_blend(rgb.reshape(rays, samples, 3), densities=sigma.reshape(rays, samples),
                           deltas=delta, early_termination=et)


def _route_tiles(assets: SceneAssets, x: np.ndarray) -> np.ndarray:
    """Evaluate each sample with the MLP of the grid cell containing it."""
    g = assets.tile_grid
    cell = np.clip(np.floor(x[:, :3] * g).astype(np.int64), 0, g - 1)
    tile = (cell[:, 0] * g + cell[:, 1]) * g + cell[:, 2]
    out = np.zeros((x.shape[0], 4))
    for t in np.unique(tile):
        sel = tile == t
        out[sel] = mo.mlp_forward(assets.mlp_tiles[t], x[sel])
    return out


def hybrid_band_samples(camera: Camera, mesh, frags: mo.FragmentBuffer, samples: int,
                        band: float):
    """Midpoint samples in ``[t_hit - band, t_hit + band]`` along covered pixel rays.

    Returns ``(pixel_ids, positions (P*S, 3))``.
    """
    verts = mesh.vertices.astype(np.float64)[mesh.triangles.astype(np.int64)]
    pix, hit = mo.interpolate_fragments(frags, mesh.triangles, verts)
    xy = np.stack([pix % camera.width, pix // camera.width], axis=1)
    dirs = mo.pixel_directions(camera, xy)
    t_hit = np.einsum("ij,ij->i", hit - camera.position, dirs)
    offs = -band + (np.arange(samples) + 0.5) * (2.0 * band / samples)
    t = t_hit[:, None] + offs[None, :]
    pos = camera.position + t[:, :, None] * dirs[:, None, :]
    return pix, pos.reshape(-1, 3)


def execute_graph(graph: PipelineGraph, assets: SceneAssets, camera: Camera,
                  *, full: bool = False):
    """Run every node in order through the reference kernels.

    Returns the ``(H, W, 3)`` image, or a :class:`RenderResult` when
    ``full`` is set.
    """
    w, h = camera.width, camera.height
    if graph.viewport != (w, h):
        raise CompileError(f"graph compiled for viewport {graph.viewport}, camera is {(w, h)}")
    image = np.zeros((h * w, 3))
    trans = np.ones(h * w)
    env: dict = {}
    for node in graph.nodes:
        p = node.workload.params
        role = node.role
        if role == "rasterization":
            cv = mo.space_convert(assets.mesh, camera)
            frags = mo.rasterize_meshes(cv, assets.mesh.triangles, (w, h))
            if graph.kind == "mesh":
                env["pixels"], env["x"] = mo.interpolate_fragments(frags, assets.mesh.triangles,
                                                                   assets.mesh.uvs)
            else:
                env["pixels"], env["x"] = hybrid_band_samples(camera, assets.mesh, frags,
                                                              p["samples"], p["band"])
        elif role == "ray-cast":
            batch = mo.ray_cast(camera, mo.all_pixels(w, h), p["samples"])
            env["pixels"] = np.arange(w * h)
            env["x"] = (np.concatenate([batch.positions, batch.directions], axis=1)
                        if node.workload.out_width == 6 else batch.positions)
        elif role == "texture":
            env["x"] = mo.texture_index(assets.texture, env["x"], p["filter"])
        elif role == "hash-index":
            env["x"] = mo.combined_grid_index(assets.hash_grid, env["x"])
        elif role == "plane-index":
            env["x"] = mo.decomposed_grid_index(assets.low_rank, env["x"])
        elif role == "mlp":
            if graph.kind == "mlp":
                env["x"] = _route_tiles(assets, env["x"])
            else:
                mlp = assets.mesh_mlp if graph.kind == "mesh" else assets.field_mlp
                env["x"] = mo.mlp_forward(mlp, env["x"])
        elif role == "splatting":
            env["cands"] = mo.splat_gaussians(assets.gaussians, camera, p["threshold"])
        elif role == "sorting":
            env["cands"] = mo.sort_candidates(env["cands"], p["patch"])
        elif role == "sh-color":
            env["colors"] = mo.gaussian_colors(assets.gaussians, camera)
        elif role == "blending":
            et = p["early_termination"]
            if graph.kind == "gaussian":
                rgb, tr = mo.blend_candidates(env["cands"], env["colors"], et)
                image, trans = rgb.reshape(-1, 3), tr.reshape(-1)
            else:
                pix = env["pixels"]
                if pix.size:
                    rgb, tr = _blend_field(env["x"], pix.size, p["samples"], p["delta"], et)
                    image[pix], trans[pix] = rgb, tr
        else:
            raise CompileError(f"node {node.name}: no executor for role {role!r}")
    if graph.kind == "mesh":
        image[env["pixels"]] = env["x"]
        trans[env["pixels"]] = 0.0
    result = RenderResult(image.reshape(h, w, 3), trans.reshape(h, w))
    return result if full else result.image


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def graph_to_dict(graph: PipelineGraph) -> dict:
    return {
        "format": "rendersim-graph",
        "version": 1,
        "kind": graph.kind,
        "viewport": list(graph.viewport),
        "nodes": [{
            "name": n.name, "kind": n.kind, "role": n.role,
            "indexing": asdict(n.indexing), "reduction": asdict(n.reduction),
            "workload": {"items": n.workload.items,
                         "inputs": [[p.rows, p.width] for p in n.workload.inputs],
                         "out_rows": n.workload.out_rows, "out_width": n.workload.out_width,
                         "params": n.workload.params},
        } for n in graph.nodes],
        "edges": [[e.src, e.dst, e.port, e.rows, e.width] for e in graph.edges],
    }


def graph_from_dict(doc: dict) -> PipelineGraph:
    nodes = []
    for d in doc["nodes"]:
        wl = d["workload"]
        nodes.append(MicroOpNode(
            d["name"], d["kind"], d["role"], IndexingTask(**d["indexing"]),
            ReductionTask(**d["reduction"]),
            Workload(wl["items"], tuple(Port(r, w) for r, w in wl["inputs"]), wl["out_rows"],
                     wl["out_width"], dict(wl["params"]))))
    edges = tuple(Edge(*e) for e in doc["edges"])
    return PipelineGraph(doc["kind"], tuple(nodes), edges, tuple(doc["viewport"]))


def dumps_graph(graph: PipelineGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n"


def loads_graph(text: str) -> PipelineGraph:
    return graph_from_dict(json.loads(text))
