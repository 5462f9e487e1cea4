"""Monolithic per-pixel renderers that bypass the graph layer.

Each function renders one pipeline kind with plain scalar loops so it can
serve as an independent oracle for :func:`rendersim.ir.execute_graph`.
They are slow by design; use tiny scenes.
"""

from __future__ import annotations

import math

import numpy as np

from .scene import Camera, SamplingConfig, SceneAssets, canonical_kind

_FLOOR = 1e-4


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def _mlp(mlp, x) -> list[float]:
    h = [float(v) for v in x]
    for layer in mlp.layers:
        w = layer.weight.astype(np.float64)
        out = []
        for j in range(w.shape[1]):
            acc = 0.0
            for k in range(w.shape[0]):
                acc += h[k] * w[k, j]
            acc += float(layer.bias[j])
            if layer.activation == "relu":
                acc = max(acc, 0.0)
            elif layer.activation == "sigmoid":
                acc = _sigmoid(acc)
            out.append(acc)
        h = out
    return h


def _ray(camera: Camera, x: int, y: int) -> np.ndarray:
    tan = math.tan(0.5 * camera.fov_y)
    d = np.array([(2.0 * (x + 0.5) / camera.width - 1.0) * tan * camera.aspect,
                  (1.0 - 2.0 * (y + 0.5) / camera.height) * tan, -1.0])
    d = d / math.sqrt(float(d @ d))
    return camera.rotation @ d


def _composite(colors, alphas, early_termination: bool):
    out = [0.0, 0.0, 0.0]
    t = 1.0
    for c, a in zip(colors, alphas):
        if early_termination and t < _FLOOR:
            break
        for ch in range(3):
            out[ch] += c[ch] * a * t
        t *= 1.0 - a
    return out, t


def _field_shade(raw):
    rgb = [_sigmoid(v) for v in raw[:3]]
    return rgb, max(raw[3], 0.0)


# -- rasterisation ----------------------------------------------------------


def _clip(camera: Camera, v) -> tuple[np.ndarray, bool]:
    view = camera.rotation.T @ (np.asarray(v, dtype=np.float64) - camera.position)
    f = 1.0 / math.tan(0.5 * camera.fov_y)
    n, fa = camera.near, camera.far
    clip = np.array([f / camera.aspect * view[0], f * view[1],
                     (fa + n) / (n - fa) * view[2] + 2.0 * fa * n / (n - fa), -view[2]])
    return clip, bool(np.all(view == 0.0))


def _edge(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _nearest_hits(mesh, camera: Camera):
    """Per pixel ``(triangle, perspective barycentrics)`` or None."""
    w, h = camera.width, camera.height
    screen = []
    for tri in mesh.triangles:
        pts = [_clip(camera, mesh.vertices[i]) for i in tri]
        if any(d or c[3] <= 0.0 for c, d in pts):
            screen.append(None)
            continue
        sv = []
        for c, _ in pts:
            sv.append(((c[0] / c[3] + 1.0) * 0.5 * w, (1.0 - c[1] / c[3]) * 0.5 * h,
                       c[2] / c[3], c[3]))
        if _edge(sv[0][0], sv[0][1], sv[1][0], sv[1][1], sv[2][0], sv[2][1]) == 0.0:
            screen.append(None)
            continue
        screen.append(sv)
    hits = {}
    for y in range(h):
        for x in range(w):
            px, py = x + 0.5, y + 0.5
            best, best_z = None, math.inf
            for t, sv in enumerate(screen):
                if sv is None:
                    continue
                (x0, y0, z0, w0), (x1, y1, z1, w1), (x2, y2, z2, w2) = sv
                area = _edge(x0, y0, x1, y1, x2, y2)
                e0 = _edge(x1, y1, x2, y2, px, py) / area
                e1 = _edge(x2, y2, x0, y0, px, py) / area
                e2 = _edge(x0, y0, x1, y1, px, py) / area
                z = e0 * z0 + e1 * z1 + e2 * z2
                if min(e0, e1, e2) < 0.0 or not -1.0 <= z <= 1.0 or not z < best_z:
                    continue
                q = (e0 / w0, e1 / w1, e2 / w2)
                s = q[0] + q[1] + q[2]
                best, best_z = (t, (q[0] / s, q[1] / s, q[2] / s)), z
            if best is not None:
                hits[(x, y)] = best
    return hits


def _bilinear(texture, u: float, v: float) -> list[float]:
    data = texture.data
    h, w, c = data.shape
    u = min(max(u, 0.0), 1.0)
    v = min(max(v, 0.0), 1.0)
    fx, fy = u * w - 0.5, v * h - 0.5
    ix, iy = math.floor(fx), math.floor(fy)
    ax, ay = fx - ix, fy - iy
    out = [0.0] * c
    for dy, wy in ((0, 1.0 - ay), (1, ay)):
        for dx, wx in ((0, 1.0 - ax), (1, ax)):
            xi = min(max(ix + dx, 0), w - 1)
            yi = min(max(iy + dy, 0), h - 1)
            for ch in range(c):
                out[ch] += wx * wy * float(data[yi, xi, ch])
    return out


def render_mesh(assets: SceneAssets, camera: Camera, sampling: SamplingConfig) -> np.ndarray:
    img = np.zeros((camera.height, camera.width, 3))
    for (x, y), (t, b) in _nearest_hits(assets.mesh, camera).items():
        uv = assets.mesh.uvs[t].astype(np.float64)
        u = b[0] * uv[0, 0] + b[1] * uv[1, 0] + b[2] * uv[2, 0]
        v = b[0] * uv[0, 1] + b[1] * uv[1, 1] + b[2] * uv[2, 1]
        img[y, x] = _mlp(assets.mesh_mlp, _bilinear(assets.texture, u, v))
    return img


# -- grid lookups -----------------------------------------------------------


def _hash_features(grid, p) -> list[float]:
    out = []
    c0, c1, c2 = grid.hash_constants
    size = grid.table_size
    for level, n in enumerate(grid.resolutions):
        base, frac = [], []
        for a in range(3):
            x = min(max(float(p[a]), 0.0), 1.0) * (n - 1)
            i = min(math.floor(x), n - 2)
            base.append(i)
            frac.append(x - i)
        acc = [0.0] * grid.feature_width
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    wgt = ((frac[0] if dx else 1.0 - frac[0]) * (frac[1] if dy else 1.0 - frac[1])
                           * (frac[2] if dz else 1.0 - frac[2]))
                    hsh = (((base[0] + dx) * c0) ^ ((base[1] + dy) * c1) ^ ((base[2] + dz) * c2))
                    idx = (hsh % (1 << 64)) % size
                    for f in range(grid.feature_width):
                        acc[f] += wgt * float(grid.tables[level, idx, f])
        out.extend(acc)
    return out


def _plane_features(grid, p) -> list[float]:
    agg = None
    for plane in grid.planes:
        r = plane.resolution
        a, b = plane.axes
        xa = min(max(float(p[a]), 0.0), 1.0) * (r - 1)
        xb = min(max(float(p[b]), 0.0), 1.0) * (r - 1)
        i, j = min(math.floor(xa), r - 2), min(math.floor(xb), r - 2)
        fa, fb = xa - i, xb - j
        val = [0.0] * plane.data.shape[2]
        for da, wa in ((0, 1.0 - fa), (1, fa)):
            for db, wb in ((0, 1.0 - fb), (1, fb)):
                for f in range(len(val)):
                    val[f] += wa * wb * float(plane.data[i + da, j + db, f])
        if agg is None:
            agg = val
        elif grid.aggregation == "sum":
            agg = [x + y for x, y in zip(agg, val)]
        else:
            agg = [x * y for x, y in zip(agg, val)]
    return agg


def _march(assets, camera, sampling, features) -> np.ndarray:
    img = np.zeros((camera.height, camera.width, 3))
    s = sampling.samples_per_ray
    delta = (camera.far - camera.near) / s
    for y in range(camera.height):
        for x in range(camera.width):
            d = _ray(camera, x, y)
            cols, alphas = [], []
            for k in range(s):
                t = camera.near + (k + 0.5) * delta
                rgb, sigma = _field_shade(features(camera.position + t * d, d))
                cols.append(rgb)
                alphas.append(1.0 - math.exp(-sigma * delta))
            img[y, x] = _composite(cols, alphas, sampling.early_termination)[0]
    return img


def render_mlp(assets: SceneAssets, camera: Camera, sampling: SamplingConfig) -> np.ndarray:
    g = assets.tile_grid

    def field(p, d):
        c = [min(max(math.floor(float(p[a]) * g), 0), g - 1) for a in range(3)]
        tile = assets.mlp_tiles[(c[0] * g + c[1]) * g + c[2]]
        return _mlp(tile, list(p) + list(d))

    return _march(assets, camera, sampling, field)


def render_low_rank(assets: SceneAssets, camera: Camera, sampling: SamplingConfig) -> np.ndarray:
    return _march(assets, camera, sampling,
                  lambda p, d: _mlp(assets.field_mlp, _plane_features(assets.low_rank, p)))


def render_hash_grid(assets: SceneAssets, camera: Camera, sampling: SamplingConfig) -> np.ndarray:
    return _march(assets, camera, sampling,
                  lambda p, d: _mlp(assets.field_mlp, _hash_features(assets.hash_grid, p)))


# -- Gaussians --------------------------------------------------------------


def _gaussian_color(gs, i: int, camera: Camera) -> list[float]:
    coeffs = gs.colors[i].astype(np.float64)
    if coeffs.size == 3:
        return [float(c) for c in coeffs]
    d = gs.means[i].astype(np.float64) - camera.position
    n = math.sqrt(float(d @ d))
    if n > 0.0:
        d = d / n
    basis = [0.28209479177387814, -0.4886025119029199 * d[1], 0.4886025119029199 * d[2],
             -0.4886025119029199 * d[0]]
    out = []
    for ch in range(3):
        acc = 0.0
        for b in range(4):
            acc += basis[b] * coeffs[3 * b + ch]
        out.append(max(acc + 0.5, 0.0))
    return out


def _footprint(gs, i: int, camera: Camera):
    """Screen centre, inverse 2D covariance and depth, or None if culled."""
    v = camera.rotation.T @ (gs.means[i].astype(np.float64) - camera.position)
    depth = -v[2]
    if not camera.near < depth < camera.far:
        return None
    f = camera.focal_px
    centre = (0.5 * camera.width + f * v[0] / depth, 0.5 * camera.height - f * v[1] / depth)
    jac = np.array([[f / depth, 0.0, f * v[0] / depth ** 2],
                    [0.0, -f / depth, -f * v[1] / depth ** 2]])
    m = jac @ camera.rotation.T
    cov = m @ gs.covariances[i].astype(np.float64) @ m.T
    a, b, c = cov[0, 0], 0.5 * (cov[0, 1] + cov[1, 0]), cov[1, 1]
    if a * c - b * b <= 1e-12:
        a, c = a + 1e-6, c + 1e-6
    det = a * c - b * b
    return centre, (c / det, -b / det, a / det), depth


def render_gaussian(assets: SceneAssets, camera: Camera, sampling: SamplingConfig) -> np.ndarray:
    gs = assets.gaussians
    prints = [_footprint(gs, i, camera) for i in range(len(gs))]
    colors = [_gaussian_color(gs, i, camera) for i in range(len(gs))]
    img = np.zeros((camera.height, camera.width, 3))
    for y in range(camera.height):
        for x in range(camera.width):
            hits = []
            for i, fp in enumerate(prints):
                if fp is None:
                    continue
                (cx, cy), (ia, ib, ic), depth = fp
                dx, dy = x + 0.5 - cx, y + 0.5 - cy
                alpha = float(gs.opacities[i]) * math.exp(
                    -0.5 * (ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy))
                if alpha > sampling.splat_threshold:
                    hits.append((depth, i, alpha))
            hits = sorted(hits, key=lambda e: e[0])
            img[y, x] = _composite([colors[i] for _, i, _ in hits], [a for _, _, a in hits],
                                   sampling.early_termination)[0]
    return img


# -- hybrid -----------------------------------------------------------------


def render_hybrid(assets: SceneAssets, camera: Camera, sampling: SamplingConfig) -> np.ndarray:
    img = np.zeros((camera.height, camera.width, 3))
    mesh = assets.mesh
    s, band = sampling.hybrid_samples, sampling.hybrid_band
    for (x, y), (t, b) in _nearest_hits(mesh, camera).items():
        v = mesh.vertices[mesh.triangles[t]].astype(np.float64)
        hit = b[0] * v[0] + b[1] * v[1] + b[2] * v[2]
        d = _ray(camera, x, y)
        t_hit = float((hit - camera.position) @ d)
        step = 2.0 * band / s
        cols, alphas = [], []
        for k in range(s):
            p = camera.position + (t_hit - band + (k + 0.5) * step) * d
            rgb, sigma = _field_shade(_mlp(assets.field_mlp, _hash_features(assets.hash_grid, p)))
            cols.append(rgb)
            alphas.append(1.0 - math.exp(-sigma * step))
        img[y, x] = _composite(cols, alphas, sampling.early_termination)[0]
    return img


RENDERERS = {
    "mesh": render_mesh,
    "mlp": render_mlp,
    "low-rank": render_low_rank,
    "hash-grid": render_hash_grid,
    "gaussian": render_gaussian,
    "hybrid": render_hybrid,
}


def render_reference(kind: str, assets: SceneAssets, camera: Camera,
                     sampling: SamplingConfig) -> np.ndarray:
    return RENDERERS[canonical_kind(kind)](assets, camera, sampling)
