"""Monotone sets, perimeter estimates and density classification on Carnot groups."""

from .condh import find_min_submersion_p, gamma, gamma_rank, sphere_sweep
from .density import (
    BoxGauge,
    Estimate,
    ball_volume_law,
    boundary_scan,
    box_gauge,
    classify_point,
    density_profile,
    distance,
)
from .errors import CarnotError
from .estimators import DensityClassifier, GammaRankAnalyzer, MonotonicityEstimator, PerimeterEstimator
from .lie_core import (
    CarnotGroup,
    Stratification,
    bracket,
    build_group,
    dilate,
    inverse,
    load_group,
    multiply,
    preset,
)
from .lines import Line, LineMeasureSampler, Window, decompose, flow, sample_lines
from .monotone import constant_normal_test, count_transitions, monotonicity_fraction, restrict
from .perimeter import estimate_perimeter, homogeneity_test, minimality_test, per_line_perimeter
from .sets import (
    boolean_ops,
    complement,
    empty_set,
    full_set,
    half_space,
    metric_ball,
    perturb,
    set_from_mapping,
    vertical_half_space,
)

__version__ = "0.1.0"
