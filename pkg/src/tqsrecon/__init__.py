"""Three-quarter sampling sensor simulation and L-JSDE / RL-JSDE reconstruction."""
from .basis import WeightingConfig, frequency_weight, fourier_basis, spatial_weight, synthesize
from .config import ReconstructionConfig
from .estimators import JSDEReconstructor, ThreeQuarterSampler
from .exceptions import NoAdmissibleFrequency, ParameterError
from .grid import (LocalMeasurementMatrix, QuadrantPattern, extract_local_system,
                   generate_pattern, simulate_measurement)
from .ljsde import ljsde_block, ljsde_select, weighted_residual_energy
from .pipeline import ReconstructionReport, bench, pad_to_block_multiple, psnr, reconstruct
from .rljsde import (KernelCache, KernelSet, OffsetClass, init_projected_residual,
                     kernel_memory_report, offset_class, precompute_kernels, rljsde_block,
                     rljsde_select, rljsde_update)

__version__ = "0.1.0"

__all__ = [
    "JSDEReconstructor", "KernelCache", "KernelSet", "LocalMeasurementMatrix",
    "NoAdmissibleFrequency", "OffsetClass", "ParameterError", "QuadrantPattern",
    "ReconstructionConfig", "ReconstructionReport", "ThreeQuarterSampler",
    "WeightingConfig", "bench", "extract_local_system", "fourier_basis",
    "frequency_weight", "generate_pattern", "init_projected_residual",
    "kernel_memory_report", "ljsde_block", "ljsde_select", "offset_class",
    "pad_to_block_multiple", "precompute_kernels", "psnr", "reconstruct",
    "rljsde_block", "rljsde_select", "rljsde_update", "simulate_measurement",
    "spatial_weight", "synthesize", "weighted_residual_energy",
]
