"""Solar-power forecast combination: an SVR family blended by a random forest.

The pipeline trains 24 fixed support-vector-regression configurations on
hourly weather data, then combines their forecasts with weather features
and lagged past forecasts through a random-forest regressor, evaluated by
daylight-only RMSE against simple-average and best-single-model baselines.
"""

from .dataset import HourlyDataset, load_hourly_csv, write_hourly_csv
from .ensemble import (
    CombinerConfig,
    ForecastMatrix,
    combine,
    rolling_backtest,
    run_base_models,
    select_best_model,
    simple_average,
    train_combiner,
)
from .features import (
    FeatureMatrix,
    build_combiner_matrix,
    build_feature_matrix,
)
from .forest import (
    RandomForestRegressor,
    Tree,
    best_split,
    grow_tree,
    load_forest,
    save_forest,
)
from .metrics import (
    AggregateStats,
    SpreadStats,
    aggregate_report,
    daily_rmse,
    improvement_rate,
    model_spread_stats,
    monthly_rmse,
    rmse,
    round_half_away,
)
from .report import (
    BacktestArtifacts,
    EvaluationReport,
    render_report,
    report_csv_texts,
    write_report_csvs,
)
from .scaling import FeatureScaler
from .site import DEFAULT_SITE, SiteConfig, load_site_file, normalize_power, save_site_file
from .solarpos import solar_elevation
from .svr import SupportVectorRegressor, kkt_violation, rbf_kernel
from .synth import synth_generate
from .validation import (
    AlignmentError,
    ConfigurationError,
    ConvergenceError,
    IntegrityError,
    ParseError,
    SchemaError,
)
from .variants import (
    VariantModel,
    VariantSpec,
    load_svr_model,
    make_variant_specs,
    save_svr_model,
    train_variants,
    training_kkt_violation,
    training_row_mask,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "AlignmentError",
    "BacktestArtifacts",
    "CombinerConfig",
    "ConfigurationError",
    "ConvergenceError",
    "DEFAULT_SITE",
    "EvaluationReport",
    "FeatureMatrix",
    "FeatureScaler",
    "ForecastMatrix",
    "HourlyDataset",
    "IntegrityError",
    "ParseError",
    "RandomForestRegressor",
    "SchemaError",
    "SiteConfig",
    "SpreadStats",
    "SupportVectorRegressor",
    "Tree",
    "VariantModel",
    "VariantSpec",
    "aggregate_report",
    "best_split",
    "build_combiner_matrix",
    "build_feature_matrix",
    "combine",
    "daily_rmse",
    "grow_tree",
    "improvement_rate",
    "kkt_violation",
    "load_forest",
    "load_hourly_csv",
    "load_site_file",
    "load_svr_model",
    "make_variant_specs",
    "model_spread_stats",
    "monthly_rmse",
    "normalize_power",
    "rbf_kernel",
    "render_report",
    "report_csv_texts",
    "rmse",
    "round_half_away",
    "rolling_backtest",
    "run_base_models",
    "save_forest",
    "save_site_file",
    "save_svr_model",
    "select_best_model",
    "simple_average",
    "solar_elevation",
    "synth_generate",
    "train_combiner",
    "train_variants",
    "training_kkt_violation",
    "training_row_mask",
    "write_hourly_csv",
    "write_report_csvs",
]
