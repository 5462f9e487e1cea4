import dataclasses
import json

import numpy as np
import pytest

from rendersim.errors import ConfigurationError
from rendersim.scene import (PIPELINE_KINDS, SCALES, Camera, GaussianSet, HashGridRep, MeshSet,
                             assets_equal, canonical_kind, default_camera, generate_synthetic_scene,
                             load_scene, save_scene, validate_scene)


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
def test_generation_is_deterministic(kind):
    a = generate_synthetic_scene(kind, 7, "tiny")
    b = generate_synthetic_scene(kind, 7, "tiny")
    c = generate_synthetic_scene(kind, 8, "tiny")
    assert assets_equal(a, b)
    assert not assets_equal(a, c)


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
@pytest.mark.parametrize("scale", SCALES)
def test_generated_scenes_validate(kind, scale):
    assert validate_scene(generate_synthetic_scene(kind, 0, scale)) == []


def test_arrays_are_read_only():
    a = generate_synthetic_scene("mesh", 0)
    with pytest.raises(ValueError):
        a.mesh.vertices[0, 0] = 3.0


def test_out_of_range_triangle_index_is_reported():
    a = generate_synthetic_scene("mesh", 0)
    tris = np.array(a.mesh.triangles)
    tris[2, 1] = a.mesh.vertices.shape[0]
    bad = dataclasses.replace(a, mesh=MeshSet(a.mesh.vertices, tris, a.mesh.uvs))
    issues = validate_scene(bad)
    assert any("triangle 2" in m for m in issues)


def test_non_increasing_hash_resolutions_are_reported():
    a = generate_synthetic_scene("hash-grid", 0)
    r = list(a.hash_grid.resolutions)
    r[2] = r[1]
    bad = dataclasses.replace(a, hash_grid=HashGridRep(r, a.hash_grid.tables))
    assert any("not strictly increasing" in m for m in validate_scene(bad))


def test_non_power_of_two_table_is_reported():
    a = generate_synthetic_scene("hash-grid", 0)
    t = a.hash_grid.tables[:, :-1]
    bad = dataclasses.replace(a, hash_grid=HashGridRep(a.hash_grid.resolutions, t))
    assert any("power of two" in m for m in validate_scene(bad))


def test_gaussian_mutations_are_reported():
    a = generate_synthetic_scene("gaussian", 0)
    g = a.gaussians
    cov = np.array(g.covariances)
    cov[0, 0, 1] += 0.5
    cov[1] = -np.eye(3) * 0.01
    op = np.array(g.opacities)
    op[3] = 1.5
    bad = dataclasses.replace(a, gaussians=GaussianSet(g.means, cov, op, g.colors))
    issues = validate_scene(bad)
    assert any("covariance 0 not symmetric" in m for m in issues)
    assert any("covariance 1 not positive" in m for m in issues)
    assert any("opacity 3" in m for m in issues)


def test_broken_mlp_chain_is_reported():
    a = generate_synthetic_scene("hash-grid", 0)
    layers = list(a.field_mlp.layers)
    l0 = layers[0]
    layers[0] = dataclasses.replace(l0, weight=np.zeros((l0.weight.shape[0], 3)), bias=np.zeros(3))
    bad = dataclasses.replace(a, field_mlp=dataclasses.replace(a.field_mlp, layers=tuple(layers)))
    assert any("does not chain" in m for m in validate_scene(bad))


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
def test_save_load_roundtrip(kind, tmp_path):
    a = generate_synthetic_scene(kind, 3, "tiny")
    save_scene(a, tmp_path / "s")
    b = load_scene(tmp_path / "s")
    assert assets_equal(a, b)
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["kind"] == kind


def test_load_missing_scene_is_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError):
        load_scene(tmp_path / "nothing-here")


def test_kind_aliases():
    assert canonical_kind("HASH_GRID") == "hash-grid"
    assert canonical_kind("3dgs") == "gaussian"
    with pytest.raises(ConfigurationError):
        canonical_kind("voxels")


def test_camera_projection_centres_target():
    cam = default_camera("tiny")
    v = cam.world_to_view(np.array([[0.5, 0.5, 0.5]]))
    assert np.allclose(v[0, :2], 0.0, atol=1e-12)
    assert v[0, 2] < 0
    assert cam.issues() == []


def test_camera_rejects_bad_fov():
    cam = Camera.look_at((0, 0, 2), (0, 0, 0), fov_y=4.0, width=8, height=8)
    assert any("fov_y" in m for m in cam.issues())
