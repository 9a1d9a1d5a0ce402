"""Vessel shaft-power prediction from voyage and weather data.

The package covers the full pipeline: a synthetic voyage generator with a
known ground-truth power model, empirical resistance formulas with a
multistart coefficient fitter, a multiplicative polynomial RPM model, a
branched neural network with an optional physics-guided loss term, shared
metrics and reporting, and a file-based CLI tying the stages together.
"""
from .data import (
    Dataset,
    EnvironmentRecord,
    Provenance,
    Standardizer,
    apply_air_temp_fallback,
    chronological_split,
    feature_matrix,
    fit_standardizer,
    load_csv,
    normalize_angle,
    preprocess,
    write_csv,
)
from .ef import (
    EfFitConfig,
    EfFitResult,
    EmpiricalPowerRegressor,
    fit_ef,
    load_coefficients,
    predict_ef,
    save_coefficients,
)
from .exceptions import (
    DivergenceError,
    DomainError,
    SchemaError,
    ShaftPowerError,
    UsageError,
)
from .metrics import (
    EvalReport,
    MetricSet,
    aggregate,
    compute_metrics,
    format_report_table,
    mae,
    mape,
    r2,
    rmse,
)
from .network import (
    FeatureGroups,
    MlpModel,
    TrainConfig,
    TrainedPredictor,
    best_lambda,
    forward,
    lambda_sweep,
    load_predictor,
    predict,
    save_predictor,
    train,
)
from .physics import (
    ResistanceBreakdown,
    ResistanceCoefficients,
    air_density,
    calm_water_resistance,
    head_wave_resistance,
    physical_power,
    total_power,
    wave_resistance,
    wind_drag_coefficient,
    wind_resistance,
)
from .rpm import (
    MultiplicativePolyModel,
    MultiplicativePolyRegressor,
    RpmFitConfig,
    fit_rpm_als,
    greedy_feature_selection,
    rpm_evaluate,
)
from .synth import SynthConfig, generate, generate_paired_drydock

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DivergenceError",
    "DomainError",
    "EfFitConfig",
    "EfFitResult",
    "EmpiricalPowerRegressor",
    "EnvironmentRecord",
    "EvalReport",
    "FeatureGroups",
    "MetricSet",
    "MlpModel",
    "MultiplicativePolyModel",
    "MultiplicativePolyRegressor",
    "Provenance",
    "ResistanceBreakdown",
    "ResistanceCoefficients",
    "RpmFitConfig",
    "SchemaError",
    "ShaftPowerError",
    "Standardizer",
    "SynthConfig",
    "TrainConfig",
    "TrainedPredictor",
    "UsageError",
    "aggregate",
    "air_density",
    "apply_air_temp_fallback",
    "best_lambda",
    "calm_water_resistance",
    "chronological_split",
    "compute_metrics",
    "feature_matrix",
    "fit_ef",
    "fit_rpm_als",
    "fit_standardizer",
    "format_report_table",
    "forward",
    "generate",
    "generate_paired_drydock",
    "greedy_feature_selection",
    "head_wave_resistance",
    "lambda_sweep",
    "load_coefficients",
    "load_csv",
    "load_predictor",
    "mae",
    "mape",
    "normalize_angle",
    "physical_power",
    "predict",
    "predict_ef",
    "preprocess",
    "r2",
    "rmse",
    "rpm_evaluate",
    "save_coefficients",
    "save_predictor",
    "total_power",
    "train",
    "wave_resistance",
    "wind_drag_coefficient",
    "wind_resistance",
    "write_csv",
]
