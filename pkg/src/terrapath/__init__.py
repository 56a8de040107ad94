"""Terrain-aware grid path planning.

Pipeline: elevation rasters become per-cell traversability cost maps
(terrain), a weighted A* / D*-Lite core plans on them (search, dstar),
probability maps confine graph construction to adaptive-threshold regions
(regions), synthetic labelled datasets feed downstream models (encoding,
dataset), and the bench module reproduces the calibration sweeps, scaling
splits, and dynamic scenarios end to end.
"""

from .backend import NUMBA_ENABLED
from .bench import (
    DEFAULT_OMEGA_GRID,
    BenchReport,
    BenchRow,
    DynamicScenario,
    ObstacleTrack,
    OmegaSweep,
    bench_masked_vs_full,
    bench_scaling,
    dynamic_sim,
    masked_summary,
    scaling_summary,
    scripted_scenario,
    sweep_omega,
)
from .dataset import (
    DatasetSpec,
    Sample,
    SampleGenerationError,
    SampleMeta,
    generate_sample,
    load_manifest,
    load_sample_channels,
    write_dataset,
)
from .dstar import DstarPlanner, dstar_apply_changes_and_replan, dstar_init
from .encoding import EncodingConfig, default_sigma, gaussian_encode
from .grid import octile
from .rasters import (
    RasterFormatError,
    read_ascii_grid,
    read_nnpr,
    read_path_text,
    write_ascii_grid,
    write_nnpr,
    write_path_text,
)
from .regions import (
    ProbabilityMap,
    RegionMask,
    RegionReport,
    ThresholdPolicy,
    ThresholdResult,
    adaptive_threshold,
    dilate_mask,
    model_metric,
    oracle_region,
    region_connected,
    region_report,
    rescale_region,
    threshold_region,
)
from .search import (
    NoPathError,
    PathStats,
    PlannerConfig,
    SearchTelemetry,
    astar_plan,
    path_stats,
    step_cost,
)
from .terrain import (
    CellFeatures,
    CostMap,
    Dem,
    TerrainParams,
    compute_cell_features,
    compute_cost_map,
    compute_feature_grids,
    cost_from_features,
    fit_patch_plane,
    synth_terrain,
)

__version__ = "0.1.0"
