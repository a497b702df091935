"""Current steering optimization for directional deep brain stimulation leads.

Pipeline: place a lead, build (or load) the unit-current transfer matrix over
a labeled point cloud, then solve for the per-contact current distribution
with either the LP or the MILP formulation. `CurrentSteeringOptimizer` wraps
the same pipeline in a scikit-learn style fit/predict interface.
"""
from .branch_bound import (
    MilpOptions,
    MilpSolution,
    MixedIntegerProgram,
    solve_milp,
)
from .clouds import (
    EllipsoidRegion,
    LabeledCloud,
    default_stn_regions,
    generate_synthetic_stn,
    load_cloud,
    save_cloud,
    voxel_downsample,
)
from .estimators import CurrentSteeringOptimizer, VoxelGridDownsampler
from .fields import (
    ActivationMask,
    FieldModelConfig,
    TransferMatrix,
    build_transfer_matrix,
    compute_vta,
    load_transfer_matrix,
    save_transfer_matrix,
    superpose,
    unit_field_norm,
)
from .leads import LeadInstance, LeadModel, builtin_model, place_lead
from .metrics import (
    BenchRecord,
    CohortMatrix,
    dice,
    frobenius_diff,
    inconsistency,
    run_benchmark,
)
from .simplex import LinearProgram, LpOptions, LpSolution, solve_lp
from .steering import (
    CurrentDistribution,
    OptimizationReport,
    OptimizeOptions,
    StimulationProblem,
    build_lp,
    build_milp,
    optimize,
)

__version__ = "0.1.0"

__all__ = [
    "ActivationMask",
    "BenchRecord",
    "CohortMatrix",
    "CurrentDistribution",
    "CurrentSteeringOptimizer",
    "EllipsoidRegion",
    "FieldModelConfig",
    "LabeledCloud",
    "LeadInstance",
    "LeadModel",
    "LinearProgram",
    "LpOptions",
    "LpSolution",
    "MilpOptions",
    "MilpSolution",
    "MixedIntegerProgram",
    "OptimizationReport",
    "OptimizeOptions",
    "StimulationProblem",
    "TransferMatrix",
    "VoxelGridDownsampler",
    "build_lp",
    "build_milp",
    "build_transfer_matrix",
    "builtin_model",
    "compute_vta",
    "default_stn_regions",
    "dice",
    "frobenius_diff",
    "generate_synthetic_stn",
    "inconsistency",
    "load_cloud",
    "load_transfer_matrix",
    "optimize",
    "place_lead",
    "run_benchmark",
    "save_cloud",
    "save_transfer_matrix",
    "solve_lp",
    "solve_milp",
    "superpose",
    "unit_field_norm",
    "voxel_downsample",
    "__version__",
]
