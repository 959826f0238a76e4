"""Sampling from tent densities and estimating their normalizing constants."""

from .bodies import (ConvexBody, MembershipBody, PolytopeBody, TentLevelSet,
                     hull_body, standard_simplex, unit_cube)
from .config import BACKENDS, SamplerConfig
from .levels import (LevelSetDecomposition, LogPartitionEstimate, TentSampler,
                     alpha_trials, build_decomposition, estimate_log_partition,
                     level_count, sample_tent)
from .volume import (VolumeEstimate, estimate_volume, grid_volume,
                     multiphase_volume, volume_with_error)
from .walk import hit_and_run, hit_and_run_chains, random_directions, uniform_sample

__all__ = [
    "ConvexBody", "MembershipBody", "PolytopeBody", "TentLevelSet", "hull_body",
    "standard_simplex", "unit_cube", "BACKENDS", "SamplerConfig",
    "LevelSetDecomposition", "LogPartitionEstimate", "TentSampler",
    "alpha_trials", "build_decomposition", "estimate_log_partition",
    "level_count", "sample_tent", "VolumeEstimate", "estimate_volume",
    "grid_volume", "multiphase_volume", "volume_with_error", "hit_and_run",
    "hit_and_run_chains", "random_directions", "uniform_sample",
]
