"""Herglotz functions, rank-one perturbations and the averaged singular measure."""
from .averaging import (
    DensityGrid,
    SweepConfig,
    compare,
    jump_points,
    oracle_density,
    sweep,
    theorem_check,
)
from .herglotz import (
    HerglotzTriple,
    TransformedFunction,
    boundary_value,
    derivative,
    evaluate,
    h_to_nu,
    nu_to_h,
    real_limits,
    solve_h_equals_r,
    transform,
)
from .measure import RealMeasure, make_measure, support_partition, total_mass
from .rankone import (
    RankOneModel,
    SpectralSample,
    build_model,
    krein_transform,
    resolvent_form,
    secular_eigen,
    spectral_measure_on_set,
)

__version__ = "0.1.0"
