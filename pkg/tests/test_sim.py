import dataclasses

import pytest

from conftest import scene
from rendersim.arch import ArchConfig, ArrayGeometry, EnergyConstants
from rendersim.errors import ConfigurationError
from rendersim.ir import PipelineGraph, compile_pipeline, gemm_graph
from rendersim.scene import PIPELINE_KINDS, default_camera, default_sampling
from rendersim.sim import (CSV_SCHEMA, dumps_report, estimate_energy, phase_split, report_csv,
                           simulate, sweep_csv, sweep_scaling, sweep_table)


def _graph(kind, scale="tiny", seed=0):
    return compile_pipeline(kind, scene(kind, seed, scale), default_camera(scale),
                            default_sampling(scale))


def _with_bandwidth(factor):
    g = ArrayGeometry()
    return ArchConfig(geometry=dataclasses.replace(g, dram_bytes_per_s=g.dram_bytes_per_s * factor))


def test_empty_graph():
    r = simulate(PipelineGraph("custom", (), (), (0, 0)))
    assert r.total_cycles == 0 and r.fps is None and r.reconfiguration_count == 0
    assert r.utilization == 0.0


def test_single_node_never_reconfigures():
    r = simulate(gemm_graph(1024, 64, 64))
    assert r.reconfigurations == ()
    assert r.total_cycles == r.nodes[0].cycles


def test_one_charge_per_kind_change_in_a_single_phase():
    g = _graph("mesh")
    r = simulate(g)
    assert r.phases == 1
    assert r.reconfiguration_count == len(g.nodes) - 1


def test_same_kind_neighbours_are_free():
    g = _graph("mlp")  # GEMM, GEMM, GEMM
    assert simulate(g).reconfiguration_count == 0


def test_multi_phase_charges_every_phase():
    g = _graph("hash-grid", "medium")
    r = simulate(g)
    assert r.phases > 1
    # GEMM, CGI, GEMM, GEMM: two changes per phase; first and last kinds match, so no wrap
    assert r.reconfiguration_count == 2 * r.phases


def test_phase_split_respects_sram():
    g = _graph("hash-grid", "medium")
    small = phase_split(g, ArchConfig())
    big = phase_split(g, ArchConfig().scaled(1, 4))
    assert big[0] < small[0]
    assert big[1] > small[1]


def test_more_bandwidth_never_hurts():
    for kind in PIPELINE_KINDS:
        g = _graph(kind, "small")
        a = simulate(g, _with_bandwidth(1)).total_cycles
        b = simulate(g, _with_bandwidth(2)).total_cycles
        assert b <= a, kind


def test_doubling_bandwidth_halves_memory_bound():
    g = gemm_graph(1024, 64, 64)
    a = simulate(g, _with_bandwidth(1)).nodes[0]
    b = simulate(g, _with_bandwidth(2)).nodes[0]
    assert b.memory_lower_bound == pytest.approx(a.memory_lower_bound / 2)


def test_geometry_argument_is_accepted():
    g = gemm_graph(64, 8, 8)
    assert simulate(g, ArrayGeometry()).total_cycles == simulate(g).total_cycles


def test_invalid_config_rejected():
    bad = ArchConfig(geometry=ArrayGeometry(rows=0))
    with pytest.raises(ConfigurationError):
        simulate(gemm_graph(8, 8, 8), bad)


@pytest.mark.parametrize("kind", PIPELINE_KINDS)
def test_deterministic(kind):
    g = _graph(kind, "small")
    assert dumps_report(simulate(g)) == dumps_report(simulate(g))


def test_report_csv_has_schema_and_total():
    text = report_csv(simulate(_graph("gaussian")))
    lines = text.splitlines()
    assert lines[0] == f"# schema: {CSV_SCHEMA}"
    assert lines[1].startswith("node,kind,role")
    assert lines[-1].startswith("TOTAL")
    assert len(lines) == 2 + 4 + 1


def test_sweep_reference_cell_is_one():
    cells = sweep_scaling(_graph("hash-grid", "small"))
    t = sweep_table(cells)
    assert t[(1, 1)] == 1.0
    assert len(t) == 9
    assert sweep_csv(cells).count("\n") == 2 + 9


def test_energy_is_linear_in_counts():
    tally = dict(int16_ops=10, bf16_macs=20, sfu_ops=3, compares=4, sram_accesses=5, dram_bytes=6)
    one = estimate_energy(tally)
    two = estimate_energy({k: 2 * v for k, v in tally.items()})
    assert two.total_joules == pytest.approx(2 * one.total_joules)
    assert "not calibrated" in one.label


def test_energy_of_nothing_is_zero():
    assert estimate_energy({}).total_joules == 0.0


def test_dram_dominates_energy_of_memory_bound_gemm():
    r = simulate(gemm_graph(1024, 64, 64))
    e = estimate_energy(r.tally)
    assert max(e.terms, key=e.terms.get) == "dram_bytes"


def test_negative_energy_constant_rejected():
    with pytest.raises(ConfigurationError):
        estimate_energy({}, EnergyConstants(dram_byte=-1.0))
