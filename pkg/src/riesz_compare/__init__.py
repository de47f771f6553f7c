"""Direct estimation of Riesz representers: Riesz-loss minimization vs Rayleigh-quotient maximization."""

from .basis import FeatureBuilder, FeatureMatrix, GramMatrix, build_features, gram
from .data import (
    AteDgpConfig,
    CsvSchema,
    Dataset,
    ShiftDgpConfig,
    generate_ate_dgp,
    generate_shift_dgp,
    load_dataset_csv,
)
from .evaluation import MetricsReport, OutcomeFit, fit_outcome_model, plug_in_estimates, rr_mse
from .functional import FunctionalSpec, MomentVector, basis_moments, function_moment
from .linear import (
    EquivalenceReport,
    LinearRieszFit,
    equivalence_report,
    minnorm_pinv_solve,
    solve_lasso,
    solve_rayleigh,
    solve_riesz_loss,
)
from .neural import (
    MlpConfig,
    NeuralRieszFit,
    TrainConfig,
    predict_alpha,
    train_rayleigh_constrained,
    train_riesz_loss,
)

__version__ = "0.1.0"

__all__ = [
    "FeatureBuilder",
    "FeatureMatrix",
    "GramMatrix",
    "build_features",
    "gram",
    "AteDgpConfig",
    "CsvSchema",
    "Dataset",
    "ShiftDgpConfig",
    "generate_ate_dgp",
    "generate_shift_dgp",
    "load_dataset_csv",
    "MetricsReport",
    "OutcomeFit",
    "fit_outcome_model",
    "plug_in_estimates",
    "rr_mse",
    "FunctionalSpec",
    "MomentVector",
    "basis_moments",
    "function_moment",
    "EquivalenceReport",
    "LinearRieszFit",
    "equivalence_report",
    "minnorm_pinv_solve",
    "solve_lasso",
    "solve_rayleigh",
    "solve_riesz_loss",
    "MlpConfig",
    "NeuralRieszFit",
    "TrainConfig",
    "predict_alpha",
    "train_rayleigh_constrained",
    "train_riesz_loss",
]
