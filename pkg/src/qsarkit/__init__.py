"""QSAR model building from precomputed descriptor matrices.

Activity transformation, descriptor preprocessing, sphere-exclusion
splitting, simulated-annealing descriptor selection, MLR/PCR/PLS fitting and
the usual internal/external/randomization validation statistics.
"""

__version__ = "0.1.0"

from .data_ingest import (
    CompoundRecord,
    Dataset,
    DescriptorMatrix,
    compute_pic50,
    load_dataset,
    residual,
)
from .errors import (
    ConfigError,
    ContributionError,
    DomainError,
    FitError,
    IngestError,
    MetricError,
    PredictError,
    PreprocessError,
    QSARError,
    RandomizationError,
    SelectError,
    SplitError,
    StageError,
    TuneError,
)
from .feature_select import SAConfig, SATrace, sa_select, sa_select_chains
from .pipeline import RunArtifacts, RunConfig, compare_methods, run
from .preprocess import (
    PreprocessReport,
    Standardization,
    correlation_filter,
    preprocess,
    remove_constant_columns,
    standardize,
)
from .regression import (
    ContributionBreakdown,
    FittedModel,
    ModelSpec,
    choose_components,
    contributions,
    fit,
    fit_mlr,
    fit_pcr,
    fit_pls,
    load_model,
    predict,
)
from .splitter import SplitAssignment, sphere_exclusion_split, tune_dissimilarity
from .validation import (
    GateVerdict,
    RandomizationResult,
    ValidationReport,
    degrees_of_freedom,
    evaluate_gate,
    f_test,
    loo_q2,
    pred_r2,
    r_squared,
    validate_model,
    y_randomization,
)
