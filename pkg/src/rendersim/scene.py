"""Scene representations, camera geometry and synthetic scene generation.

Every representation lives in the unit box ``[0, 1]^3``.  Real-valued tensors
are held as float32 (the on-disk precision); kernels promote to float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .images import atomic_write_bytes

PIPELINE_KINDS = ("mesh", "mlp", "low-rank", "hash-grid", "gaussian", "hybrid")
SCALES = ("tiny", "small", "medium")

# XOR-of-products spatial hash; all three constants are odd.
DEFAULT_HASH_CONSTANTS = (2654435761, 805459861, 3674653429)
HASH_LEVEL_GROWTH = 2.0


def _frozen(a, dtype=np.float32) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def canonical_kind(kind: str) -> str:
    k = kind.strip().lower().replace("_", "-")
    aliases = {"hash": "hash-grid", "lowrank": "low-rank", "hybrid-mesh-hash": "hybrid",
               "gaussians": "gaussian", "3dgs": "gaussian"}
    k = aliases.get(k, k)
    if k not in PIPELINE_KINDS:
        raise ConfigurationError(f"unknown pipeline kind {kind!r}; expected one of {PIPELINE_KINDS}")
    return k


# ---------------------------------------------------------------------------
# Camera and representation types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Camera:
    """Pinhole camera.

    ``rotation`` maps camera axes to world axes (columns are right, up and
    backward); the camera looks down its local ``-z`` axis.
    """

    position: np.ndarray
    rotation: np.ndarray
    fov_y: float
    width: int
    height: int
    near: float
    far: float

    def __post_init__(self):
        object.__setattr__(self, "position", _frozen(self.position, np.float64).reshape(3))
        object.__setattr__(self, "rotation", _frozen(self.rotation, np.float64).reshape(3, 3))
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        object.__setattr__(self, "fov_y", float(self.fov_y))
        object.__setattr__(self, "near", float(self.near))
        object.__setattr__(self, "far", float(self.far))

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 1.0, 0.0), *, fov_y=math.radians(40.0),
                width=16, height=16, near=0.5, far=3.0) -> "Camera":
        eye = np.asarray(eye, dtype=np.float64)
        back = eye - np.asarray(target, dtype=np.float64)
        back /= np.linalg.norm(back)
        right = np.cross(np.asarray(up, dtype=np.float64), back)
        right /= np.linalg.norm(right)
        true_up = np.cross(back, right)
        rot = np.stack([right, true_up, back], axis=1)
        return cls(eye, rot, fov_y, width, height, near, far)

    @property
    def aspect(self) -> float:
        return self.width / self.height

    @property
    def focal_px(self) -> float:
        """Focal length in pixels (square pixels)."""
        return 0.5 * self.height / math.tan(0.5 * self.fov_y)

    def world_to_view(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return (p - self.position) @ self.rotation

    def projection_matrix(self) -> np.ndarray:
        """OpenGL-style perspective matrix; ``w`` of the result is view depth."""
        f = 1.0 / math.tan(0.5 * self.fov_y)
        n, fa = self.near, self.far
        return np.array([
            [f / self.aspect, 0.0, 0.0, 0.0],
            [0.0, f, 0.0, 0.0],
            [0.0, 0.0, (fa + n) / (n - fa), 2.0 * fa * n / (n - fa)],
            [0.0, 0.0, -1.0, 0.0],
        ])

    def issues(self) -> list[str]:
        out = []
        r = self.rotation
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6) or abs(np.linalg.det(r) - 1.0) > 1e-6:
            out.append("camera: rotation is not a proper orthonormal matrix")
        if not (0.0 < self.near < self.far):
            out.append(f"camera: require 0 < near < far (near={self.near}, far={self.far})")
        if self.width < 1 or self.height < 1:
            out.append(f"camera: viewport {self.width}x{self.height} must be at least 1x1")
        if not (0.0 < self.fov_y < math.pi):
            out.append(f"camera: fov_y {self.fov_y} outside (0, pi)")
        return out


@dataclass(frozen=True)
class MeshSet:
    vertices: np.ndarray   # (V, 3)
    triangles: np.ndarray  # (T, 3) vertex indices
    uvs: np.ndarray        # (T, 3, 2) per-corner texture coordinates

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen(self.vertices).reshape(-1, 3))
        object.__setattr__(self, "triangles", _frozen(self.triangles, np.int32).reshape(-1, 3))
        object.__setattr__(self, "uvs", _frozen(self.uvs).reshape(-1, 3, 2))


@dataclass(frozen=True)
class TextureMap:
    """Texel grid stored row-major as ``(H, W, C)``; ``v`` indexes rows."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class HashGridRep:
    resolutions: tuple[int, ...]  # vertices per axis, one per level
    tables: np.ndarray            # (L, T, F)
    hash_constants: tuple[int, int, int] = DEFAULT_HASH_CONSTANTS

    def __post_init__(self):
        object.__setattr__(self, "resolutions", tuple(int(r) for r in self.resolutions))
        object.__setattr__(self, "tables", _frozen(self.tables))
        object.__setattr__(self, "hash_constants", tuple(int(c) for c in self.hash_constants))

    @property
    def levels(self) -> int:
        return len(self.resolutions)

    @property
    def table_size(self) -> int:
        return self.tables.shape[1]

    @property
    def feature_width(self) -> int:
        return self.tables.shape[2]


@dataclass(frozen=True)
class Plane:
    axes: tuple[int, int]
    data: np.ndarray  # (R, R, F); first index runs along axes[0]

    def __post_init__(self):
        object.__setattr__(self, "axes", (int(self.axes[0]), int(self.axes[1])))
        object.__setattr__(self, "data", _frozen(self.data))

    @property
    def resolution(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class LowRankGridRep:
    planes: tuple[Plane, ...]
    aggregation: str = "product"

    def __post_init__(self):
        object.__setattr__(self, "planes", tuple(self.planes))

    @property
    def feature_width(self) -> int:
        return self.planes[0].data.shape[2]


@dataclass(frozen=True)
class GaussianSet:
    """3D Gaussians.  ``colors`` is ``(N, K)``: K=3 is direct RGB, K=12 is
    degree-1 spherical harmonics laid out basis-major (4 bases x RGB)."""

    means: np.ndarray        # (N, 3)
    covariances: np.ndarray  # (N, 3, 3)
    opacities: np.ndarray    # (N,)
    colors: np.ndarray       # (N, K)

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means).reshape(-1, 3))
        object.__setattr__(self, "covariances", _frozen(self.covariances).reshape(-1, 3, 3))
        object.__setattr__(self, "opacities", _frozen(self.opacities).reshape(-1))
        n = self.means.shape[0]
        object.__setattr__(self, "colors", _frozen(self.colors).reshape(n, -1))

    def __len__(self) -> int:
        return self.means.shape[0]

    @property
    def sh_degree(self) -> int:
        return 0 if self.colors.shape[1] == 3 else 1


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray  # (in, out)
    bias: np.ndarray    # (out,)
    activation: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "weight", _frozen(self.weight))
        object.__setattr__(self, "bias", _frozen(self.bias).reshape(-1))


@dataclass(frozen=True)
class MlpParams:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def in_width(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def out_width(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def param_count(self) -> int:
        return sum(l.weight.size + l.bias.size for l in self.layers)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [tuple(l.weight.shape) for l in self.layers]


@dataclass(frozen=True)
class SampleBatch:
    positions: np.ndarray   # (S, 3)
    directions: np.ndarray  # (S, 3)
    deltas: np.ndarray      # (S,)
    ray_ids: np.ndarray     # (S,)
    t: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.positions.shape[0]

    def issues(self) -> list[str]:
        out = []
        norms = np.linalg.norm(self.directions, axis=-1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > 1e-5)
        if bad.size:
            out.append(f"samples: {bad.size} direction(s) not unit length, first at row {bad[0]}")
        if np.any(self.deltas <= 0):
            out.append("samples: segment lengths must be positive")
        return out


@dataclass(frozen=True)
class SceneAssets:
    kind: str
    scale: str = "tiny"
    seed: int = 0
    mesh: Optional[MeshSet] = None
    texture: Optional[TextureMap] = None
    mesh_mlp: Optional[MlpParams] = None
    mlp_tiles: tuple[MlpParams, ...] = ()
    tile_grid: int = 0
    low_rank: Optional[LowRankGridRep] = None
    hash_grid: Optional[HashGridRep] = None
    field_mlp: Optional[MlpParams] = None
    gaussians: Optional[GaussianSet] = None


@dataclass(frozen=True)
class SamplingConfig:
    samples_per_ray: int = 8
    hybrid_samples: int = 4
    hybrid_band: float = 0.05
    splat_threshold: float = 1.0 / 255.0
    early_termination: bool = True
    patch_size: int = 16


# ---------------------------------------------------------------------------
# Scale presets
# ---------------------------------------------------------------------------

_SCALE = {
    "tiny": dict(viewport=16, samples=8, triangles=8, texture=8, tex_channels=4,
                 mesh_hidden=8, tile_grid=2, tile_hidden=8, planes_res=8,
                 plane_features=4, hash_levels=4, hash_log2_t=8, hash_features=2,
                 field_hidden=8, gaussians=12, sh_degree=0),
    "small": dict(viewport=64, samples=16, triangles=32, texture=32, tex_channels=8,
                  mesh_hidden=16, tile_grid=3, tile_hidden=16, planes_res=32,
                  plane_features=8, hash_levels=8, hash_log2_t=12, hash_features=2,
                  field_hidden=16, gaussians=128, sh_degree=1),
    # Desk scale: the workload used for simulation and scaling sweeps.
    "medium": dict(viewport=128, samples=64, triangles=128, texture=64, tex_channels=8,
                   mesh_hidden=16, tile_grid=4, tile_hidden=32, planes_res=64,
                   plane_features=16, hash_levels=14, hash_log2_t=11, hash_features=2,
                   field_hidden=8, gaussians=1024, sh_degree=1),
}


def scale_preset(scale: str) -> dict:
    if scale not in _SCALE:
        raise ConfigurationError(f"unknown scale {scale!r}; expected one of {SCALES}")
    return dict(_SCALE[scale])


def default_camera(scale: str = "tiny") -> Camera:
    n = scale_preset(scale)["viewport"]
    return Camera.look_at((0.5, 0.5, 2.2), (0.5, 0.5, 0.5), fov_y=math.radians(40.0),
                          width=n, height=n, near=1.0, far=2.4)


def default_sampling(scale: str = "tiny") -> SamplingConfig:
    return SamplingConfig(samples_per_ray=scale_preset(scale)["samples"])


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------


def _random_mlp(rng, widths, activations, out_bias=None) -> MlpParams:
    layers = []
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        w = rng.normal(0.0, 1.0 / math.sqrt(a), size=(a, b))
        bias = rng.normal(0.0, 0.1, size=b)
        if out_bias is not None and i == len(widths) - 2:
            bias = bias + np.asarray(out_bias)
        layers.append(Layer(w, bias, activations[i]))
    return MlpParams(tuple(layers))


def _field_mlp(rng, in_width, hidden) -> MlpParams:
    # rgb logits + raw density; density output biased positive so scenes are visible
    return _random_mlp(rng, [in_width, hidden, 4], ["relu", "linear"],
                       out_bias=[0.0, 0.0, 0.0, 1.5])


def _mesh(rng, n_tri) -> MeshSet:
    centers = rng.uniform(0.2, 0.8, size=(n_tri, 1, 3))
    verts = centers + rng.uniform(-0.25, 0.25, size=(n_tri, 3, 3))
    tris = np.arange(3 * n_tri).reshape(n_tri, 3)
    uvs = rng.uniform(0.0, 1.0, size=(n_tri, 3, 2))
    return MeshSet(verts.reshape(-1, 3), tris, uvs)


def _hash_grid(rng, p) -> HashGridRep:
    levels = p["hash_levels"]
    res = tuple(int(2 * HASH_LEVEL_GROWTH ** l) for l in range(levels))
    tables = rng.uniform(-1.0, 1.0, size=(levels, 2 ** p["hash_log2_t"], p["hash_features"]))
    return HashGridRep(res, tables, DEFAULT_HASH_CONSTANTS)


def _low_rank(rng, p) -> LowRankGridRep:
    r, f = p["planes_res"], p["plane_features"]
    planes = tuple(Plane(ax, rng.uniform(0.2, 1.2, size=(r, r, f)))
                   for ax in ((0, 1), (1, 2), (0, 2)))
    return LowRankGridRep(planes, "product")


def _gaussians(rng, p) -> GaussianSet:
    n = p["gaussians"]
    means = rng.uniform(0.2, 0.8, size=(n, 3))
    q, _ = np.linalg.qr(rng.normal(size=(n, 3, 3)))
    scales = rng.uniform(0.04, 0.12, size=(n, 3))
    cov = q @ (scales[:, :, None] ** 2 * np.transpose(q, (0, 2, 1)))
    cov = 0.5 * (cov + np.transpose(cov, (0, 2, 1)))
    opac = rng.uniform(0.3, 0.95, size=n)
    rgb = rng.uniform(0.0, 1.0, size=(n, 3))
    if p["sh_degree"] == 0:
        colors = rgb
    else:
        dc = (rgb - 0.5) / 0.28209479177387814
        rest = rng.normal(0.0, 0.2, size=(n, 3, 3))
        colors = np.concatenate([dc[:, None, :], rest], axis=1).reshape(n, 12)
    return GaussianSet(means, cov, opac, colors)


def generate_synthetic_scene(kind: str, seed: int = 0, scale: str = "tiny") -> SceneAssets:
    """Build deterministic assets for one pipeline kind.

    The same ``(kind, seed, scale)`` always yields bit-identical arrays.
    """
    kind = canonical_kind(kind)
    p = scale_preset(scale)
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, PIPELINE_KINDS.index(kind),
                                 SCALES.index(scale)])
    rng = np.random.default_rng(ss)
    a = dict(kind=kind, scale=scale, seed=int(seed))
    if kind == "mesh":
        a["mesh"] = _mesh(rng, p["triangles"])
        c = p["tex_channels"]
        a["texture"] = TextureMap(rng.uniform(0.0, 1.0, size=(p["texture"], p["texture"], c)))
        a["mesh_mlp"] = _random_mlp(rng, [c, p["mesh_hidden"], 3], ["relu", "sigmoid"])
    elif kind == "mlp":
        g = p["tile_grid"]
        a["tile_grid"] = g
        a["mlp_tiles"] = tuple(_field_mlp(rng, 6, p["tile_hidden"]) for _ in range(g ** 3))
    elif kind == "low-rank":
        a["low_rank"] = _low_rank(rng, p)
        a["field_mlp"] = _field_mlp(rng, p["plane_features"], p["field_hidden"])
    elif kind == "hash-grid":
        a["hash_grid"] = _hash_grid(rng, p)
        a["field_mlp"] = _field_mlp(rng, p["hash_levels"] * p["hash_features"], p["field_hidden"])
    elif kind == "gaussian":
        a["gaussians"] = _gaussians(rng, p)
    elif kind == "hybrid":
        a["mesh"] = _mesh(rng, p["triangles"])
        a["hash_grid"] = _hash_grid(rng, p)
        a["field_mlp"] = _field_mlp(rng, p["hash_levels"] * p["hash_features"], p["field_hidden"])
    return SceneAssets(**a)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _mlp_issues(name: str, mlp: MlpParams) -> list[str]:
    out = []
    if not mlp.layers:
        out.append(f"{name}: no layers")
        return out
    for i, layer in enumerate(mlp.layers):
        if layer.weight.ndim != 2:
            out.append(f"{name}: layer {i} weight is not a matrix")
            continue
        if layer.bias.shape[0] != layer.weight.shape[1]:
            out.append(f"{name}: layer {i} bias length {layer.bias.shape[0]} != out width {layer.weight.shape[1]}")
        if i and mlp.layers[i - 1].weight.shape[1] != layer.weight.shape[0]:
            out.append(f"{name}: layer {i} input width {layer.weight.shape[0]} does not chain "
                       f"with previous output {mlp.layers[i - 1].weight.shape[1]}")
        if layer.activation not in ACTIVATIONS:
            out.append(f"{name}: layer {i} has unknown activation {layer.activation!r}")
        if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
            out.append(f"{name}: layer {i} has non-finite parameters")
    return out


ACTIVATIONS = ("linear", "relu", "sigmoid")


def validate_scene(assets: SceneAssets) -> list[str]:
    """Return one message per violated invariant; empty means valid."""
    out: list[str] = []
    m = assets.mesh
    if m is not None:
        nv = m.vertices.shape[0]
        for t, tri in enumerate(m.triangles):
            if np.any(tri < 0) or np.any(tri >= nv):
                out.append(f"mesh: triangle {t} references vertex outside [0, {nv})")
        if m.uvs.shape[0] != m.triangles.shape[0]:
            out.append(f"mesh: {m.uvs.shape[0] * 3} uv corners for {m.triangles.shape[0]} triangles")
        if np.any(m.uvs < 0.0) or np.any(m.uvs > 1.0):
            out.append("mesh: uv coordinates outside [0, 1]")
        if not np.all(np.isfinite(m.vertices)):
            out.append("mesh: non-finite vertex coordinates")
    tex = assets.texture
    if tex is not None and (tex.data.ndim != 3 or min(tex.data.shape) < 1):
        out.append(f"texture: dimensions {tex.data.shape} must all be >= 1")
    hg = assets.hash_grid
    if hg is not None:
        r = hg.resolutions
        if any(b <= a for a, b in zip(r[:-1], r[1:])):
            out.append(f"hash-grid: resolutions {r} not strictly increasing")
        if len(r) != hg.tables.shape[0]:
            out.append(f"hash-grid: {len(r)} resolutions but {hg.tables.shape[0]} tables")
        t = hg.table_size
        if t < 1 or t & (t - 1):
            out.append(f"hash-grid: table size {t} is not a power of two")
        if hg.feature_width < 1:
            out.append("hash-grid: feature width must be >= 1")
        if len(hg.hash_constants) != 3:
            out.append("hash-grid: need exactly 3 hash constants")
    lr = assets.low_rank
    if lr is not None:
        if not lr.planes:
            out.append("low-rank: no planes")
        else:
            f = lr.planes[0].data.shape[-1]
            for i, pl in enumerate(lr.planes):
                if pl.data.ndim != 3 or pl.data.shape[0] != pl.data.shape[1]:
                    out.append(f"low-rank: plane {i} is not R x R x F")
                if pl.data.shape[-1] != f:
                    out.append(f"low-rank: plane {i} feature width {pl.data.shape[-1]} != {f}")
                if len(set(pl.axes)) != 2 or not all(0 <= a < 3 for a in pl.axes):
                    out.append(f"low-rank: plane {i} axes {pl.axes} invalid")
        if lr.aggregation not in ("sum", "product"):
            out.append(f"low-rank: aggregation {lr.aggregation!r} not in (sum, product)")
    g = assets.gaussians
    if g is not None:
        cov = g.covariances.astype(np.float64)
        asym = np.abs(cov - np.transpose(cov, (0, 2, 1))).max(axis=(1, 2)) if len(g) else []
        for i in np.flatnonzero(np.asarray(asym) > 1e-6):
            out.append(f"gaussian: covariance {i} not symmetric")
        if len(g):
            eig = np.linalg.eigvalsh(0.5 * (cov + np.transpose(cov, (0, 2, 1))))
            for i in np.flatnonzero(eig.min(axis=1) < -1e-6):
                out.append(f"gaussian: covariance {i} not positive semi-definite")
        for i in np.flatnonzero((g.opacities < 0.0) | (g.opacities > 1.0)):
            out.append(f"gaussian: opacity {i} = {g.opacities[i]:g} outside [0, 1]")
        if g.colors.shape[1] not in (3, 12):
            out.append(f"gaussian: {g.colors.shape[1]} color coefficients, expected 3 or 12")
    for name in ("mesh_mlp", "field_mlp"):
        mlp = getattr(assets, name)
        if mlp is not None:
            out.extend(_mlp_issues(name, mlp))
    for i, mlp in enumerate(assets.mlp_tiles):
        out.extend(_mlp_issues(f"mlp_tiles[{i}]", mlp))
    if assets.mlp_tiles and len(assets.mlp_tiles) != assets.tile_grid ** 3:
        out.append(f"mlp_tiles: {len(assets.mlp_tiles)} tiles for a {assets.tile_grid}^3 grid")
    return out


# ---------------------------------------------------------------------------
# Scene files: manifest + one little-endian blob per tensor
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.json"


def _tensor_entries(assets: SceneAssets) -> dict[str, np.ndarray]:
    t: dict[str, np.ndarray] = {}
    if assets.mesh is not None:
        t["mesh.vertices"] = assets.mesh.vertices
        t["mesh.triangles"] = assets.mesh.triangles
        t["mesh.uvs"] = assets.mesh.uvs
    if assets.texture is not None:
        t["texture.data"] = assets.texture.data
    if assets.hash_grid is not None:
        t["hash_grid.tables"] = assets.hash_grid.tables
    if assets.low_rank is not None:
        for i, pl in enumerate(assets.low_rank.planes):
            t[f"low_rank.plane{i}"] = pl.data
    if assets.gaussians is not None:
        g = assets.gaussians
        t.update({"gaussians.means": g.means, "gaussians.covariances": g.covariances,
                  "gaussians.opacities": g.opacities, "gaussians.colors": g.colors})

    def add_mlp(prefix, mlp):
        for i, layer in enumerate(mlp.layers):
            t[f"{prefix}.layer{i}.weight"] = layer.weight
            t[f"{prefix}.layer{i}.bias"] = layer.bias

    if assets.mesh_mlp is not None:
        add_mlp("mesh_mlp", assets.mesh_mlp)
    if assets.field_mlp is not None:
        add_mlp("field_mlp", assets.field_mlp)
    for j, mlp in enumerate(assets.mlp_tiles):
        add_mlp(f"mlp_tiles{j}", mlp)
    return t


def _dtype_name(a: np.ndarray) -> str:
    return {np.dtype(np.float32): "float32", np.dtype(np.int32): "int32"}[a.dtype]


def save_scene(assets: SceneAssets, directory) -> Path:
    """Write ``assets`` to ``directory``; returns the manifest path."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    tensors = {}
    for name, arr in _tensor_entries(assets).items():
        fname = name.replace(".", "_") + ".bin"
        dt = _dtype_name(arr)
        atomic_write_bytes(d / fname,
                           np.ascontiguousarray(arr).astype("<" + arr.dtype.str[1:]).tobytes())
        tensors[name] = {"file": fname, "shape": list(arr.shape), "dtype": dt}

    def mlp_acts(mlp):
        return [l.activation for l in mlp.layers] if mlp is not None else None

    manifest = {
        "format": "rendersim-scene",
        "version": 1,
        "kind": assets.kind,
        "scale": assets.scale,
        "seed": assets.seed,
        "tile_grid": assets.tile_grid,
        "hash": None if assets.hash_grid is None else {
            "resolutions": list(assets.hash_grid.resolutions),
            "constants": list(assets.hash_grid.hash_constants)},
        "low_rank": None if assets.low_rank is None else {
            "aggregation": assets.low_rank.aggregation,
            "axes": [list(p.axes) for p in assets.low_rank.planes]},
        "activations": {
            "mesh_mlp": mlp_acts(assets.mesh_mlp),
            "field_mlp": mlp_acts(assets.field_mlp),
            "mlp_tiles": [mlp_acts(m) for m in assets.mlp_tiles]},
        "tensors": tensors,
    }
    path = d / MANIFEST_NAME
    atomic_write_bytes(path, (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode())
    return path


def load_scene(directory) -> SceneAssets:
    d = Path(directory)
    try:
        manifest = json.loads((d / MANIFEST_NAME).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"{d}: cannot read scene manifest: {exc}") from None
    if manifest.get("format") != "rendersim-scene":
        raise ConfigurationError(f"{d}: not a scene directory")
    arrays = {}
    for name, meta in manifest["tensors"].items():
        dt = np.dtype("<f4" if meta["dtype"] == "float32" else "<i4")
        raw = np.frombuffer((d / meta["file"]).read_bytes(), dtype=dt)
        arrays[name] = raw.reshape(meta["shape"])

    def mlp(prefix, acts):
        if acts is None:
            return None
        return MlpParams(tuple(Layer(arrays[f"{prefix}.layer{i}.weight"],
                                     arrays[f"{prefix}.layer{i}.bias"], a)
                               for i, a in enumerate(acts)))

    a = dict(kind=manifest["kind"], scale=manifest["scale"], seed=manifest["seed"],
             tile_grid=manifest["tile_grid"])
    if "mesh.vertices" in arrays:
        a["mesh"] = MeshSet(arrays["mesh.vertices"], arrays["mesh.triangles"], arrays["mesh.uvs"])
    if "texture.data" in arrays:
        a["texture"] = TextureMap(arrays["texture.data"])
    if manifest["hash"] is not None:
        a["hash_grid"] = HashGridRep(tuple(manifest["hash"]["resolutions"]),
                                     arrays["hash_grid.tables"],
                                     tuple(manifest["hash"]["constants"]))
    if manifest["low_rank"] is not None:
        lr = manifest["low_rank"]
        a["low_rank"] = LowRankGridRep(
            tuple(Plane(tuple(ax), arrays[f"low_rank.plane{i}"]) for i, ax in enumerate(lr["axes"])),
            lr["aggregation"])
    if "gaussians.means" in arrays:
        a["gaussians"] = GaussianSet(arrays["gaussians.means"], arrays["gaussians.covariances"],
                                     arrays["gaussians.opacities"], arrays["gaussians.colors"])
    acts = manifest["activations"]
    a["mesh_mlp"] = mlp("mesh_mlp", acts["mesh_mlp"])
    a["field_mlp"] = mlp("field_mlp", acts["field_mlp"])
    a["mlp_tiles"] = tuple(mlp(f"mlp_tiles{j}", x) for j, x in enumerate(acts["mlp_tiles"]))
    return SceneAssets(**a)


def assets_equal(a: SceneAssets, b: SceneAssets) -> bool:
    """Bitwise comparison of two asset bundles."""
    if (a.kind, a.scale, a.seed, a.tile_grid) != (b.kind, b.scale, b.seed, b.tile_grid):
        return False
    ta, tb = _tensor_entries(a), _tensor_entries(b)
    if ta.keys() != tb.keys():
        return False
    return all(ta[k].dtype == tb[k].dtype and np.array_equal(ta[k], tb[k]) for k in ta)


__all__ = [
    "ACTIVATIONS", "Camera", "GaussianSet", "HashGridRep", "Layer", "LowRankGridRep",
    "MeshSet", "MlpParams", "PIPELINE_KINDS", "Plane", "SCALES", "SampleBatch",
    "SamplingConfig", "SceneAssets", "TextureMap", "assets_equal", "canonical_kind",
    "default_camera", "default_sampling", "generate_synthetic_scene", "load_scene",
    "save_scene", "scale_preset", "validate_scene",
]
