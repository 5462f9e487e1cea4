"""Functional reference kernels for the five micro-operators.

Arithmetic is float64 throughout.  Quantised arithmetic belongs to the cost
model, not here, so these kernels double as oracles for the simulator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation
from .scene import (Camera, GaussianSet, HashGridRep, LowRankGridRep, MeshSet, MlpParams,
                    SampleBatch, TextureMap)

NONE = -1
TRANSMITTANCE_FLOOR = 1e-4
SPLAT_THRESHOLD = 1.0 / 255.0
SPLAT_EPS = 1e-6

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199

CUBE_CORNERS = tuple(itertools.product((0, 1), repeat=3))
SQUARE_CORNERS = tuple(itertools.product((0, 1), repeat=2))


# ---------------------------------------------------------------------------
# Geometric processing: rasterisation
# ---------------------------------------------------------------------------


class ClipVertices(NamedTuple):
    clip: np.ndarray        # (V, 4)
    degenerate: np.ndarray  # (V,) vertex sits on the camera origin


@dataclass(frozen=True)
class FragmentBuffer:
    index: np.ndarray  # (H, W) triangle index or NONE
    depth: np.ndarray  # (H, W) NDC depth, +inf where empty
    bary: np.ndarray   # (H, W, 3) perspective-correct barycentrics

    @property
    def shape(self) -> tuple[int, int]:
        return self.index.shape


def space_convert(mesh, camera: Camera) -> ClipVertices:
    """Project world-space vertices to homogeneous clip space.

    ``mesh`` may be a :class:`MeshSet` or a ``(V, 3)`` array.
    """
    verts = mesh.vertices if isinstance(mesh, MeshSet) else mesh
    view = camera.world_to_view(np.asarray(verts, dtype=np.float64).reshape(-1, 3))
    hom = np.concatenate([view, np.ones((view.shape[0], 1))], axis=1)
    clip = hom @ camera.projection_matrix().T
    degenerate = np.all(view == 0.0, axis=1)
    return ClipVertices(clip, degenerate)


def screen_coords(clip: np.ndarray, width: int, height: int):
    """Return ``(sx, sy, ndc_z)`` for clip vertices; pixel centres sit at +0.5."""
    w = clip[:, 3]
    ndc = clip[:, :3] / w[:, None]
    sx = (ndc[:, 0] + 1.0) * 0.5 * width
    sy = (1.0 - ndc[:, 1]) * 0.5 * height
    return sx, sy, ndc[:, 2]


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def triangle_coverage(xs, ys, zs, ws, px, py):
    """Coverage of one screen triangle at pixel centres ``(px, py)``.

    Returns ``(inside, ndc_depth, perspective_bary)``; shared by the z-buffer
    kernel and the brute-force oracle so both see identical arithmetic.
    """
    area = _edge(xs[0], ys[0], xs[1], ys[1], xs[2], ys[2])
    e0 = _edge(xs[1], ys[1], xs[2], ys[2], px, py) / area
    e1 = _edge(xs[2], ys[2], xs[0], ys[0], px, py) / area
    e2 = _edge(xs[0], ys[0], xs[1], ys[1], px, py) / area
    z = e0 * zs[0] + e1 * zs[1] + e2 * zs[2]
    inside = (e0 >= 0.0) & (e1 >= 0.0) & (e2 >= 0.0) & (z >= -1.0) & (z <= 1.0)
    q0, q1, q2 = e0 / ws[0], e1 / ws[1], e2 / ws[2]
    qs = q0 + q1 + q2
    bary = np.stack([q0 / qs, q1 / qs, q2 / qs], axis=-1)
    return inside, z, bary


def drawable_triangles(clip_vertices: ClipVertices, triangles) -> np.ndarray:
    """Mask of triangles the rasteriser will consider.

    Triangles touching a degenerate vertex or with any vertex at or behind the
    camera plane are dropped (no clipping); zero-area triangles too.
    """
    clip, degen = clip_vertices
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if tris.size == 0:
        return np.zeros(0, dtype=bool)
    w = clip[:, 3]
    ok = ~np.any(degen[tris], axis=1) & np.all(w[tris] > 0.0, axis=1)
    sx, sy, _ = screen_coords(np.where(w[:, None] > 0.0, clip, 1.0), 1, 1)
    xs, ys = sx[tris], sy[tris]
    area = _edge(xs[:, 0], ys[:, 0], xs[:, 1], ys[:, 1], xs[:, 2], ys[:, 2])
    return ok & (area != 0.0)


def rasterize_meshes(clip_vertices: ClipVertices, triangles, viewport) -> FragmentBuffer:
    """Z-buffer rasterisation; the nearest triangle wins, lower index on ties."""
    width, height = int(viewport[0]), int(viewport[1])
    clip = clip_vertices.clip
    tris = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    index = np.full((height, width), NONE, dtype=np.int64)
    depth = np.full((height, width), np.inf)
    bary = np.zeros((height, width, 3))
    if tris.shape[0] == 0:
        return FragmentBuffer(index, depth, bary)
    ok = drawable_triangles(clip_vertices, tris)
    sx, sy, sz = screen_coords(np.where(clip[:, 3:4] > 0.0, clip, 1.0), width, height)
    w = clip[:, 3]
    for t in np.flatnonzero(ok):
        v = tris[t]
        xs, ys = sx[v], sy[v]
        x0 = max(int(math.floor(xs.min() - 0.5)) - 1, 0)
        x1 = min(int(math.ceil(xs.max() - 0.5)) + 1, width - 1)
        y0 = max(int(math.floor(ys.min() - 0.5)) - 1, 0)
        y1 = min(int(math.ceil(ys.max() - 0.5)) + 1, height - 1)
        if x0 > x1 or y0 > y1:
            continue
        py, px = np.mgrid[y0:y1 + 1, x0:x1 + 1].astype(np.float64)
        inside, z, b = triangle_coverage(xs, ys, sz[v], w[v], px + 0.5, py + 0.5)
        cur = depth[y0:y1 + 1, x0:x1 + 1]
        win = inside & (z < cur)
        cur[win] = z[win]
        index[y0:y1 + 1, x0:x1 + 1][win] = t
        bary[y0:y1 + 1, x0:x1 + 1][win] = b[win]
    return FragmentBuffer(index, depth, bary)


def interpolate_fragments(frags: FragmentBuffer, triangles, attributes) -> tuple[np.ndarray, np.ndarray]:
    """Interpolate per-corner attributes ``(T, 3, D)`` at covered pixels.

    Returns ``(pixel_ids, values)`` for covered pixels in row-major order.
    """
    flat = frags.index.reshape(-1)
    pix = np.flatnonzero(flat != NONE)
    tri = flat[pix]
    b = frags.bary.reshape(-1, 3)[pix]
    attrs = np.asarray(attributes, dtype=np.float64)[tri]
    vals = b[:, 0, None] * attrs[:, 0] + b[:, 1, None] * attrs[:, 1] + b[:, 2, None] * attrs[:, 2]
    return pix, vals


# ---------------------------------------------------------------------------
# Combined / decomposed grid indexing
# ---------------------------------------------------------------------------


def bilinear_weights(fx, fy) -> np.ndarray:
    """Weights for the four corners in :data:`SQUARE_CORNERS` order."""
    fx = np.asarray(fx, dtype=np.float64)
    fy = np.asarray(fy, dtype=np.float64)
    return np.stack([(fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
                     for dx, dy in SQUARE_CORNERS], axis=-1)


def trilinear_weights(f) -> np.ndarray:
    """Weights for the eight corners in :data:`CUBE_CORNERS` order."""
    f = np.asarray(f, dtype=np.float64)
    cols = []
    for c in CUBE_CORNERS:
        w = np.ones(f.shape[:-1])
        for axis, d in enumerate(c):
            w = w * (f[..., axis] if d else 1.0 - f[..., axis])
        cols.append(w)
    return np.stack(cols, axis=-1)


def texture_index(texture: TextureMap, uv, mode: str = "bilinear") -> np.ndarray:
    """Sample ``texture`` at ``uv`` (shape ``(..., 2)``), clamp-to-edge.

    Texel ``(i, j)`` has its centre at ``((i + 0.5) / W, (j + 0.5) / H)``.
    """
    data = texture.data.astype(np.float64)
    h, w, _ = data.shape
    uv = np.clip(np.asarray(uv, dtype=np.float64), 0.0, 1.0)
    if mode == "nearest":
        xi = np.minimum(np.floor(uv[..., 0] * w).astype(np.int64), w - 1)
        yi = np.minimum(np.floor(uv[..., 1] * h).astype(np.int64), h - 1)
        return data[yi, xi]
    if mode != "bilinear":
        raise ContractViolation(f"unknown texture filter {mode!r}")
    x = uv[..., 0] * w - 0.5
    y = uv[..., 1] * h - 0.5
    x0 = np.floor(x)
    y0 = np.floor(y)
    wts = bilinear_weights(x - x0, y - y0)
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    out = 0.0
    for k, (dx, dy) in enumerate(SQUARE_CORNERS):
        xi = np.clip(x0 + dx, 0, w - 1)
        yi = np.clip(y0 + dy, 0, h - 1)
        out = out + wts[..., k, None] * data[yi, xi]
    return out


def hash_vertices(coords, constants, table_size: int) -> np.ndarray:
    """XOR-of-products spatial hash of integer vertex coordinates ``(..., 3)``."""
    c = np.asarray(coords).astype(np.uint64)
    k = np.asarray(constants, dtype=np.uint64)
    h = (c[..., 0] * k[0]) ^ (c[..., 1] * k[1]) ^ (c[..., 2] * k[2])
    return (h & np.uint64(table_size - 1)).astype(np.int64)


def grid_cell(points, resolution: int):
    """Lower cell corner and fractional offset for a grid of ``resolution``
    vertices per axis over the unit interval."""
    x = np.clip(np.asarray(points, dtype=np.float64), 0.0, 1.0) * (resolution - 1)
    c0 = np.minimum(np.floor(x), resolution - 2)
    return c0.astype(np.int64), x - c0


def combined_grid_index(grid: HashGridRep, points) -> np.ndarray:
    """Multi-level hashed trilinear lookup; output is level-concatenated
    ``(N, L * F)`` (or ``(L * F,)`` for a single point)."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    tables = grid.tables.astype(np.float64)
    feats = []
    for level, res in enumerate(grid.resolutions):
        c0, f = grid_cell(pts, res)
        wts = trilinear_weights(f)
        acc = np.zeros((pts.shape[0], grid.feature_width))
        for k, corner in enumerate(CUBE_CORNERS):
            idx = hash_vertices(c0 + np.asarray(corner), grid.hash_constants, grid.table_size)
            acc = acc + wts[:, k, None] * tables[level, idx]
        feats.append(acc)
    out = np.concatenate(feats, axis=1)
    return out[0] if single else out


def decomposed_grid_index(grid: LowRankGridRep, points) -> np.ndarray:
    """Bilinear lookup on each plane, then sum or elementwise product."""
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = pts.reshape(-1, 3)
    agg = None
    for plane in grid.planes:
        data = plane.data.astype(np.float64)
        r = plane.resolution
        a, b = plane.axes
        ca, fa = grid_cell(pts[:, a], r)
        cb, fb = grid_cell(pts[:, b], r)
        wts = bilinear_weights(fa, fb)
        val = 0.0
        for k, (da, db) in enumerate(SQUARE_CORNERS):
            val = val + wts[:, k, None] * data[ca + da, cb + db]
        if agg is None:
            agg = val
        elif grid.aggregation == "sum":
            agg = agg + val
        else:
            agg = agg * val
    return agg[0] if single else agg


# ---------------------------------------------------------------------------
# Ray casting (a GEMM-class step)
# ---------------------------------------------------------------------------


def pixel_directions(camera: Camera, pixels) -> np.ndarray:
    """Unit world-space directions through pixel centres ``(N, 2)`` as (x, y)."""
    px = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    tan = math.tan(0.5 * camera.fov_y)
    dx = (2.0 * (px[:, 0] + 0.5) / camera.width - 1.0) * tan * camera.aspect
    dy = (1.0 - 2.0 * (px[:, 1] + 0.5) / camera.height) * tan
    d = np.stack([dx, dy, -np.ones_like(dx)], axis=1)
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d @ camera.rotation.T


def ray_cast(camera: Camera, pixels, samples: int) -> SampleBatch:
    """Uniform-midpoint samples along each pixel-centre ray on ``[near, far]``.

    Rows are ray-major: ray ``i`` occupies rows ``i*S .. i*S + S - 1``.
    """
    if samples < 1:
        raise ContractViolation("need at least one sample per ray")
    px = np.asarray(pixels, dtype=np.int64).reshape(-1, 2)
    if px.size and (px[:, 0].min() < 0 or px[:, 1].min() < 0
                    or px[:, 0].max() >= camera.width or px[:, 1].max() >= camera.height):
        raise ContractViolation("pixel outside viewport")
    dirs = pixel_directions(camera, px)
    delta = (camera.far - camera.near) / samples
    t = camera.near + (np.arange(samples) + 0.5) * delta
    n = px.shape[0]
    pos = camera.position[None, None, :] + t[None, :, None] * dirs[:, None, :]
    ray_ids = np.repeat(px[:, 1] * camera.width + px[:, 0], samples)
    return SampleBatch(pos.reshape(-1, 3), np.repeat(dirs, samples, axis=0),
                       np.full(n * samples, delta), ray_ids, np.tile(t, n))


def all_pixels(width: int, height: int) -> np.ndarray:
    ys, xs = np.mgrid[0:height, 0:width]
    return np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1)


# ---------------------------------------------------------------------------
# Geometric processing: Gaussian splatting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SplatCandidateList:
    """Per-pixel candidate lists in CSR layout.

    Pixel ``p`` (row-major) owns entries ``offsets[p]:offsets[p+1]``.
    """

    width: int
    height: int
    offsets: np.ndarray
    gaussian: np.ndarray
    alpha: np.ndarray
    depth: np.ndarray
    regularized: int = 0

    def pixel(self, p: int):
        s = slice(self.offsets[p], self.offsets[p + 1])
        return self.gaussian[s], self.alpha[s], self.depth[s]

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)

    def __len__(self) -> int:
        return int(self.gaussian.shape[0])


class ProjectedGaussians(NamedTuple):
    center: np.ndarray   # (N, 2) pixel coordinates
    cov2d: np.ndarray    # (N, 2, 2)
    depth: np.ndarray    # (N,)
    visible: np.ndarray  # (N,) in front of the near plane and before far
    regularized: np.ndarray  # (N,) singular footprint bumped by SPLAT_EPS


def project_gaussians(gaussians: GaussianSet, camera: Camera) -> ProjectedGaussians:
    """Affine (local Jacobian) projection of 3D covariances to the image."""
    n = len(gaussians)
    view = camera.world_to_view(gaussians.means.astype(np.float64))
    depth = -view[:, 2]
    visible = (depth > camera.near) & (depth < camera.far)
    d = np.where(visible, depth, 1.0)
    f = camera.focal_px
    cx, cy = 0.5 * camera.width, 0.5 * camera.height
    center = np.stack([cx + f * view[:, 0] / d, cy - f * view[:, 1] / d], axis=1)
    jac = np.zeros((n, 2, 3))
    jac[:, 0, 0] = f / d
    jac[:, 0, 2] = f * view[:, 0] / d ** 2
    jac[:, 1, 1] = -f / d
    jac[:, 1, 2] = -f * view[:, 1] / d ** 2
    m = jac @ camera.rotation.T
    cov = m @ gaussians.covariances.astype(np.float64) @ np.transpose(m, (0, 2, 1))
    cov = 0.5 * (cov + np.transpose(cov, (0, 2, 1)))
    det = cov[:, 0, 0] * cov[:, 1, 1] - cov[:, 0, 1] * cov[:, 1, 0]
    singular = visible & (det <= 1e-12)
    cov[singular] += SPLAT_EPS * np.eye(2)
    return ProjectedGaussians(center, cov, depth, visible, singular)


def splat_gaussians(gaussians: GaussianSet, camera: Camera,
                    threshold: float = SPLAT_THRESHOLD) -> SplatCandidateList:
    """Per-pixel alpha of every Gaussian; keeps ``alpha > threshold``.

    Lists come out ordered by Gaussian index (unsorted by depth).
    """
    if not 0.0 < threshold < 1.0:
        raise ContractViolation("splat threshold must lie in (0, 1)")
    w, h = camera.width, camera.height
    proj = project_gaussians(gaussians, camera)
    pix = all_pixels(w, h).astype(np.float64) + 0.5
    ids, pids, alphas, depths = [], [], [], []
    opac = gaussians.opacities.astype(np.float64)
    for g in np.flatnonzero(proj.visible):
        inv = np.linalg.inv(proj.cov2d[g])
        dx = pix - proj.center[g]
        q = (inv[0, 0] * dx[:, 0] * dx[:, 0] + (inv[0, 1] + inv[1, 0]) * dx[:, 0] * dx[:, 1]
             + inv[1, 1] * dx[:, 1] * dx[:, 1])
        a = opac[g] * np.exp(-0.5 * q)
        keep = np.flatnonzero(a > threshold)
        if keep.size:
            ids.append(np.full(keep.size, g))
            pids.append(keep)
            alphas.append(a[keep])
            depths.append(np.full(keep.size, proj.depth[g]))
    if ids:
        gid, pid = np.concatenate(ids), np.concatenate(pids)
        alpha, depth = np.concatenate(alphas), np.concatenate(depths)
        order = np.argsort(pid, kind="stable")
        gid, pid, alpha, depth = gid[order], pid[order], alpha[order], depth[order]
    else:
        gid = pid = np.zeros(0, dtype=np.int64)
        alpha = depth = np.zeros(0)
    offsets = np.zeros(w * h + 1, dtype=np.int64)
    np.cumsum(np.bincount(pid, minlength=w * h), out=offsets[1:])
    return SplatCandidateList(w, h, offsets, gid.astype(np.int64), alpha, depth,
                              int(proj.regularized.sum()))


# ---------------------------------------------------------------------------
# Sorting
# ---------------------------------------------------------------------------


def patch_sort(keys) -> np.ndarray:
    """Stable ascending merge sort; returns the permutation.

    Bottom-up: runs of width 1, 2, 4, ... are merged pairwise, the way the
    comparator ALU walks the FF pad.
    """
    k = [float(x) for x in np.asarray(keys, dtype=np.float64).reshape(-1)]
    n = len(k)
    perm = list(range(n))
    width = 1
    while width < n:
        merged = []
        for lo in range(0, n, 2 * width):
            left = perm[lo:lo + width]
            right = perm[lo + width:lo + 2 * width]
            i = j = 0
            while i < len(left) and j < len(right):
                if k[right[j]] < k[left[i]]:
                    merged.append(right[j])
                    j += 1
                else:
                    merged.append(left[i])
                    i += 1
            merged.extend(left[i:])
            merged.extend(right[j:])
        perm = merged
        width *= 2
    return np.asarray(perm, dtype=np.int64)


def merge_comparisons(n: int) -> int:
    """Worst-case comparator operations of the bottom-up merge sort."""
    total, width = 0, 1
    while width < n:
        for lo in range(0, n, 2 * width):
            a = min(width, max(n - lo, 0))
            b = min(width, max(n - lo - width, 0))
            if a and b:
                total += a + b - 1
        width *= 2
    return total


def patch_of_pixel(width: int, height: int, patch: int) -> np.ndarray:
    """Row-major patch id for every pixel."""
    ys, xs = np.mgrid[0:height, 0:width]
    per_row = -(-width // patch)
    return ((ys // patch) * per_row + xs // patch).reshape(-1)


def sort_candidates(cands: SplatCandidateList, patch: int = 16) -> SplatCandidateList:
    """Depth-order every pixel's list using one merge sort per patch.

    All Gaussians touching a patch are sorted once by depth; each pixel then
    inherits that order.  Equal depths keep ascending Gaussian index.
    """
    w, h = cands.width, cands.height
    pid = np.repeat(np.arange(w * h), cands.counts)
    patch_ids = patch_of_pixel(w, h, patch)[pid]
    rank = np.zeros(len(cands), dtype=np.int64)
    for p in np.unique(patch_ids):
        sel = patch_ids == p
        members = np.unique(cands.gaussian[sel])
        member_depth = np.zeros(members.size)
        member_depth[np.searchsorted(members, cands.gaussian[sel])] = cands.depth[sel]
        order = patch_sort(member_depth)
        r = np.empty(members.size, dtype=np.int64)
        r[order] = np.arange(members.size)
        rank[sel] = r[np.searchsorted(members, cands.gaussian[sel])]
    order = np.lexsort((rank, pid))
    return SplatCandidateList(w, h, cands.offsets, cands.gaussian[order], cands.alpha[order],
                              cands.depth[order], cands.regularized)


# ---------------------------------------------------------------------------
# GEMM and the steps folded into it
# ---------------------------------------------------------------------------


def activate(x: np.ndarray, activation: str) -> np.ndarray:
    if activation == "linear":
        return x
    if activation == "relu":
        return np.maximum(x, 0.0)
    if activation == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x))
    raise ContractViolation(f"unknown activation {activation!r}")


def gemm(inputs, weights, bias=None, activation: str = "linear") -> np.ndarray:
    """``activation(inputs @ weights + bias)`` accumulated in ascending K.

    The fixed accumulation order makes results reproducible against a naive
    triple loop bit for bit.
    """
    x = np.asarray(inputs, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ContractViolation(f"gemm shapes do not chain: {x.shape} x {w.shape}")
    acc = np.zeros((x.shape[0], w.shape[1]))
    for k in range(w.shape[0]):
        acc += x[:, k, None] * w[k]
    if bias is not None:
        b = np.asarray(bias, dtype=np.float64).reshape(-1)
        if b.shape[0] != w.shape[1]:
            raise ContractViolation(f"bias length {b.shape[0]} != output width {w.shape[1]}")
        acc += b
    return activate(acc, activation)


def mlp_forward(mlp: MlpParams, x) -> np.ndarray:
    h = np.asarray(x, dtype=np.float64)
    for layer in mlp.layers:
        h = gemm(h, layer.weight, layer.bias, layer.activation)
    return h


def field_outputs(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a radiance-field MLP output into ``(rgb, density)``."""
    return activate(raw[:, :3], "sigmoid"), np.maximum(raw[:, 3], 0.0)


def sh_basis(directions, degree: int) -> np.ndarray:
    d = np.asarray(directions, dtype=np.float64).reshape(-1, 3)
    if degree == 0:
        return np.ones((d.shape[0], 1))
    return np.stack([np.full(d.shape[0], SH_C0), -SH_C1 * d[:, 1], SH_C1 * d[:, 2],
                     -SH_C1 * d[:, 0]], axis=1)


def gaussian_colors(gaussians: GaussianSet, camera: Camera) -> np.ndarray:
    """View-dependent RGB per Gaussian as one vector-matrix product each."""
    n = len(gaussians)
    deg = gaussians.sh_degree
    dirs = gaussians.means.astype(np.float64) - camera.position
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = dirs / np.where(norms > 0.0, norms, 1.0)
    basis = sh_basis(dirs, deg)
    nb = basis.shape[1]
    coeffs = gaussians.colors.astype(np.float64).reshape(n, nb, 3)
    out = np.zeros((n, 3))
    for g in range(n):
        out[g] = gemm(basis[g:g + 1], coeffs[g])[0]
    if deg > 0:
        out = np.maximum(out + 0.5, 0.0)
    return out


def volume_blend(colors, alphas=None, *, densities=None, deltas=None,
                 early_termination: bool = True, floor: float = TRANSMITTANCE_FLOOR):
    """Front-to-back compositing.

    Pass either ``alphas`` or ``densities`` with ``deltas``.  Inputs are
    ``(S, 3)`` for one ray or ``(R, S, 3)`` for a batch; returns
    ``(rgb, residual_transmittance)``.
    """
    c = np.asarray(colors, dtype=np.float64)
    single = c.ndim == 2
    if single:
        c = c[None]
    if alphas is None:
        if densities is None or deltas is None:
            raise ContractViolation("volume_blend needs alphas or densities + deltas")
        sigma = np.asarray(densities, dtype=np.float64).reshape(c.shape[:2])
        if np.any(sigma < 0.0):
            raise ContractViolation("negative density")
        delta = np.broadcast_to(np.asarray(deltas, dtype=np.float64), sigma.shape)
        a = 1.0 - np.exp(-sigma * delta)
    else:
        a = np.asarray(alphas, dtype=np.float64).reshape(c.shape[:2])
        if np.any(a < 0.0) or np.any(a > 1.0):
            raise ContractViolation("alpha outside [0, 1]")
    rays, samples = a.shape
    trans = np.ones(rays)
    rgb = np.zeros((rays, 3))
    for i in range(samples):
        active = trans >= floor if early_termination else np.ones(rays, dtype=bool)
        wgt = np.where(active, a[:, i] * trans, 0.0)
        rgb += wgt[:, None] * c[:, i]
        trans = np.where(active, trans * (1.0 - a[:, i]), trans)
    if single:
        return rgb[0], float(trans[0])
    return rgb, trans


def blend_candidates(cands: SplatCandidateList, colors: np.ndarray,
                     early_termination: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Composite depth-sorted splat lists into an ``(H, W, 3)`` image."""
    counts = cands.counts
    npix = counts.shape[0]
    depth = int(counts.max()) if npix else 0
    c = np.zeros((npix, depth, 3))
    a = np.zeros((npix, depth))
    pid = np.repeat(np.arange(npix), counts)
    slot = np.arange(len(cands)) - cands.offsets[pid]
    c[pid, slot] = colors[cands.gaussian]
    a[pid, slot] = cands.alpha
    rgb, trans = volume_blend(c, a, early_termination=early_termination)
    return rgb.reshape(cands.height, cands.width, 3), trans.reshape(cands.height, cands.width)
