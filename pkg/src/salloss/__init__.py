"""Saliency loss functions with analytic gradients, saliency metrics, and desk-scale experiments."""
from .combination import (
    CenterBias,
    LossCombination,
    Term,
    center_bias_from_maps,
    center_bias_term,
    combine,
    load_spec,
    parse_spec,
    preset,
)
from .core import (
    DegenerateInput,
    FixationSet,
    MapStats,
    SaliencyError,
    fixation_map,
    normalize_distribution,
    normalize_unit,
    stats,
)
from .kernels import BACKEND
from .metrics import EvalConfig, MetricReport, evaluate_all
from .optimize import OptimizeConfig, gradcheck, optimize_map
from .result import LossResult

__version__ = "0.1.0"
