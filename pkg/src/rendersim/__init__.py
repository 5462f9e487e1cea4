"""Functional and cycle-level model of a reconfigurable neural-rendering accelerator."""

__version__ = "0.1.0"

from .errors import CompileError, ConfigurationError, ContractViolation, RenderSimError
from .scene import (PIPELINE_KINDS, Camera, SamplingConfig, SceneAssets, default_camera,
                    default_sampling, generate_synthetic_scene, load_scene, save_scene,
                    validate_scene)
from .ir import PipelineGraph, compile_pipeline, execute_graph, validate_graph
from .arch import (PEAK_MACS_PER_CYCLE, ArchConfig, ArrayGeometry, configure_array,
                   ff_capacity_check, peak_macs_per_cycle)
from .mapper import MappingPlan, map_microop, plan_traffic
from .sim import CostReport, estimate_energy, roofline_bound, simulate, sweep_scaling

__all__ = [
    "__version__", "RenderSimError", "ConfigurationError", "ContractViolation", "CompileError",
    "PIPELINE_KINDS", "Camera", "SamplingConfig", "SceneAssets", "default_camera",
    "default_sampling", "generate_synthetic_scene", "load_scene", "save_scene", "validate_scene",
    "PipelineGraph", "compile_pipeline", "execute_graph", "validate_graph",
    "PEAK_MACS_PER_CYCLE", "ArchConfig", "ArrayGeometry", "configure_array", "ff_capacity_check",
    "peak_macs_per_cycle", "MappingPlan", "map_microop", "plan_traffic", "CostReport",
    "estimate_energy", "roofline_bound", "simulate", "sweep_scaling",
]
