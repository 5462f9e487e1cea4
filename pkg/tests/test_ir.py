import dataclasses

import numpy as np
import pytest

from conftest import oracle_sampling, scene
from rendersim.errors import CompileError
from rendersim.ir import (CGI, DGI, GEMM, GP, SORT, TEMPLATE, Edge, IndexingTask, compile_pipeline,
                          dumps_graph, execute_graph, gemm_graph, loads_graph, template_issues,
                          validate_graph)
from rendersim.reference import render_reference
from rendersim.scene import PIPELINE_KINDS, default_camera, default_sampling

SEQUENCES = {
    "mesh": [GP, CGI, GEMM],
    "mlp": [GEMM, GEMM, GEMM],
    "low-rank": [GEMM, DGI, GEMM, GEMM],
    "hash-grid": [GEMM, CGI, GEMM, GEMM],
    "gaussian": [GP, SORT, GEMM, GEMM],
    "hybrid": [GP, CGI, GEMM, GEMM],
}


def _graph(kind, seed=0):
    cam = default_camera("tiny")
    return compile_pipeline(kind, scene(kind, seed), cam, default_sampling("tiny"))


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
def test_node_sequence(kind):
    g = _graph(kind)
    assert g.kinds() == SEQUENCES[kind]
    assert validate_graph(g) == []


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
def test_every_node_fits_its_template_row(kind):
    for node in _graph(kind).nodes:
        row = TEMPLATE[node.kind]
        assert node.indexing.item in row.items
        assert node.indexing.function in row.functions
        assert node.reduction.access in row.access


def test_gaussian_colour_branch_feeds_blending():
    g = _graph("gaussian")
    assert {(e.src, e.dst, e.port) for e in g.edges} == {(0, 1, 0), (1, 3, 0), (2, 3, 1)}
    assert g.in_edges(2) == []


def test_template_mutation_is_reported():
    g = _graph("hash-grid")
    node = g.nodes[1]
    bad = dataclasses.replace(node, indexing=IndexingTask("features", "3D", "automatic-counter"))
    issues = template_issues(bad)
    assert len(issues) == 1 and "function" in issues[0]
    g2 = dataclasses.replace(g, nodes=(g.nodes[0], bad) + g.nodes[2:])
    assert any("automatic-counter" in m for m in validate_graph(g2))


def test_unknown_kind_is_reported():
    g = _graph("mesh")
    bad = dataclasses.replace(g.nodes[0], kind="Blit")
    assert "unknown micro-operator kind" in template_issues(bad)[0]


def test_injected_cycle_is_detected():
    g = _graph("hash-grid")
    last = g.nodes[3].workload
    back = Edge(3, 1, 0, last.out_rows, last.out_width)
    issues = validate_graph(dataclasses.replace(g, edges=g.edges + (back,)))
    assert "graph: dependency cycle detected" in issues


def test_width_mismatch_is_reported():
    g = _graph("low-rank")
    e = g.edges[1]
    bad = dataclasses.replace(e, width=e.width + 1)
    edges = (g.edges[0], bad) + g.edges[2:]
    issues = validate_graph(dataclasses.replace(g, edges=edges))
    assert any("does not match" in m for m in issues)


def test_zero_workload_is_reported():
    g = _graph("mesh")
    n = g.nodes[2]
    bad = dataclasses.replace(n, workload=dataclasses.replace(n.workload, items=0))
    issues = validate_graph(dataclasses.replace(g, nodes=g.nodes[:2] + (bad,)))
    assert any("workload count must be positive" in m for m in issues)


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
def test_serialisation_roundtrip(kind):
    g = _graph(kind)
    text = dumps_graph(g)
    assert loads_graph(text) == g
    assert dumps_graph(loads_graph(text)) == text


def test_missing_representation_is_compile_error():
    a = scene("mesh")
    with pytest.raises(CompileError):
        compile_pipeline("hash-grid", a, default_camera("tiny"))


def test_mlp_width_mismatch_is_compile_error():
    a = scene("hash-grid")
    lr = scene("low-rank")
    mixed = dataclasses.replace(a, field_mlp=lr.field_mlp)
    with pytest.raises(CompileError):
        compile_pipeline("hash-grid", mixed, default_camera("tiny"))


def test_bad_camera_is_compile_error():
    cam = dataclasses.replace(default_camera("tiny"), near=3.0)
    with pytest.raises(CompileError):
        compile_pipeline("mlp", scene("mlp"), cam)


def test_viewport_mismatch_at_execution():
    g = _graph("mlp")
    cam = dataclasses.replace(default_camera("tiny"), width=8)
    with pytest.raises(CompileError):
        execute_graph(g, scene("mlp"), cam)


def test_gemm_graph_shape():
    g = gemm_graph(1024, 64, 64)
    assert validate_graph(g) == []
    assert g.nodes[0].workload.params["weight_values"] == 64 * 64


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
@pytest.mark.parametrize("early", [True, False])
def test_graph_matches_oracle(kind, early):
    a = scene(kind, 11)
    cam = default_camera("tiny")
    sampling = dataclasses.replace(oracle_sampling(), early_termination=early)
    g = compile_pipeline(kind, a, cam, sampling)
    got = execute_graph(g, a, cam)
    want = render_reference(kind, a, cam, sampling)
    assert got.shape == want.shape == (cam.height, cam.width, 3)
    assert np.max(np.abs(got - want)) < 1e-5


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
def test_renders_are_not_blank(kind):
    img = execute_graph(_graph(kind, 4), scene(kind, 4), default_camera("tiny"))
    assert np.all(np.isfinite(img))
    assert img.max() > 0.05


def test_full_result_reports_transmittance():
    r = execute_graph(_graph("gaussian"), scene("gaussian"), default_camera("tiny"), full=True)
    assert r.transmittance.shape == r.image.shape[:2]
    assert np.all((r.transmittance >= 0) & (r.transmittance <= 1))
