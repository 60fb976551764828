"""Constellation shaping toolkit.

Non-uniform QAM design by BICM-capacity maximization: capacity estimation
over AWGN and Rayleigh channels, derivative-free shape optimization, the
iterative multichannel design loop, and a desk-scale coded-link simulator
for measured waterfall SNRs.
"""

from .capacity import (
    AWGN,
    RAYLEIGH,
    CapacityEstimate,
    ChannelModel,
    InfeasibleTargetError,
    Snr,
    UnsupportedCombinationError,
    bicm_capacity,
    capacity_curve,
    shannon_capacity,
    shannon_snr,
    shortfall_bits,
    shortfall_db,
    snr_for_capacity,
    transition_logpdf,
)
from .constellation import (
    Constellation,
    DegenerateAlphabetError,
    ShapeParams,
    dof,
    expand,
    extract_params,
    gray_code,
    gray_decode,
    load_constellation,
    normalize_power,
    save_constellation,
    uniform_qam,
)
from .multichan import (
    DesignProblem,
    DesignTrace,
    InfeasibleRateError,
    MultichannelResult,
    design_multichannel,
    waterfall_snr,
)
from .optimizer import (
    DesignTarget,
    OptimizationResult,
    OptimizerOptions,
    objective,
    optimize_1d,
    optimize_2d,
)

__version__ = "0.1.0"

__all__ = [
    "AWGN",
    "RAYLEIGH",
    "CapacityEstimate",
    "ChannelModel",
    "Constellation",
    "DegenerateAlphabetError",
    "DesignProblem",
    "DesignTarget",
    "DesignTrace",
    "InfeasibleRateError",
    "InfeasibleTargetError",
    "MultichannelResult",
    "OptimizationResult",
    "OptimizerOptions",
    "ShapeParams",
    "Snr",
    "UnsupportedCombinationError",
    "bicm_capacity",
    "capacity_curve",
    "design_multichannel",
    "dof",
    "expand",
    "extract_params",
    "gray_code",
    "gray_decode",
    "load_constellation",
    "normalize_power",
    "objective",
    "optimize_1d",
    "optimize_2d",
    "save_constellation",
    "shannon_capacity",
    "shannon_snr",
    "shortfall_bits",
    "shortfall_db",
    "snr_for_capacity",
    "transition_logpdf",
    "uniform_qam",
    "waterfall_snr",
]
