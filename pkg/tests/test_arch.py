import dataclasses
import json

import pytest

from rendersim.arch import (MODULE_STATES, PEAK_MACS_PER_CYCLE, ArchConfig, ArrayGeometry,
                            NetworkState, PEResources, config_from_dict, config_to_dict,
                            configuration_issues, configure_array, dumps_config, ff_capacity_check,
                            load_config, module_row, peak_macs_per_cycle)
from rendersim.errors import ConfigurationError
from rendersim.ir import CGI, DGI, GEMM, GP, MICROOP_KINDS, SORT


def test_default_geometry():
    g = ArrayGeometry()
    assert (g.rows, g.cols, g.pes) == (16, 16, 256)
    assert g.sram_bytes == 256 * 1024
    assert g.dram_bytes_per_cycle == pytest.approx(59.7)
    assert PEResources().ff_bytes == 4096


def test_peak_throughput():
    assert PEAK_MACS_PER_CYCLE == 1024
    assert peak_macs_per_cycle(ArrayGeometry().scaled(2, 1)) == 2048


def test_scaling_adds_columns_and_bytes():
    g = ArrayGeometry().scaled(4, 2)
    assert (g.rows, g.cols, g.sram_bytes) == (16, 64, 512 * 1024)


@pytest.mark.parametrize("kind", MICROOP_KINDS)
def test_configurations_are_consistent(kind):
    cfg = configure_array(kind)
    assert configuration_issues(cfg) == []
    assert cfg.network.mode == ("systolic" if kind == GEMM else "pipeline")


def test_module_rows():
    assert module_row(configure_array(CGI))[:2] == ("On", "Horizontally On")
    assert module_row(configure_array(DGI))[1] == "Fully On"
    assert module_row(configure_array(GP))[-1] == "Z-Buffer"
    assert module_row(configure_array(SORT))[4] == "Comparator"


def test_systolic_with_reduction_network_is_illegal():
    assert NetworkState("on", "fully-on", "systolic").issues()
    cfg = configure_array(GEMM)
    bad = dataclasses.replace(cfg, network=NetworkState("on", "fully-on", "systolic"))
    issues = configuration_issues(bad)
    assert any("systolic mode" in m for m in issues)
    assert any("Reduction" in m for m in issues)


def test_unknown_kind_and_bad_geometry():
    with pytest.raises(ConfigurationError):
        configure_array("Blit")
    with pytest.raises(ConfigurationError):
        configure_array(GP, ArrayGeometry(rows=0))


@pytest.mark.parametrize("nbytes,fits,tiles", [(0, True, 1), (4096, True, 1), (4097, False, 2),
                                               (12288, False, 3)])
def test_ff_capacity_pivot(nbytes, fits, tiles):
    chk = ff_capacity_check(configure_array(CGI), nbytes)
    assert (chk.fits, chk.tiles, chk.capacity) == (fits, tiles, 4096)


def test_negative_resident_bytes():
    with pytest.raises(ConfigurationError):
        ff_capacity_check(configure_array(CGI), -1)


def test_config_roundtrip(tmp_path):
    cfg = ArchConfig().scaled(2, 4)
    path = tmp_path / "c.json"
    path.write_text(dumps_config(cfg))
    assert load_config(path) == cfg
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_partial_config_overlays_defaults():
    cfg = config_from_dict({"geometry": {"rows": 8}, "costs": {"sort_cycles_per_compare": 0.5}})
    assert cfg.geometry.rows == 8 and cfg.geometry.cols == 16
    assert cfg.costs.sort_cycles_per_compare == 0.5


@pytest.mark.parametrize("doc", [
    {"geometry": {"rowz": 8}},
    {"nonsense": {}},
    {"geometry": 3},
    {"geometry": {"rows": "sixteen"}},
    {"geometry": {"rows": -1}},
    {"energy": {"dram_byte": -1.0}},
])
def test_bad_configs_rejected(doc):
    with pytest.raises(ConfigurationError):
        config_from_dict(doc)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "list.json").write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "list.json")


def test_every_kind_has_six_states():
    assert all(len(v) == 6 for v in MODULE_STATES.values())
