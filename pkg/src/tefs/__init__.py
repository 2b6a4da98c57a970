"""Transfer-entropy feature selection for time series with error-bound reporting."""

from .errors import EstimationError, TefsError, ValidationError
from .estimators import (
    Backend,
    ConcentrationParams,
    EstimatorConfig,
    cmi,
    concentration_bound,
    mi,
    te_from_design,
    transfer_entropy,
)
from .evaluation import BenchmarkConfig, EvalReport, r2_linear, run_benchmark, tpr_fpr
from .scm import TARGET, Edge, GroundTruth, ScmSpec, builtin_graph, generate
from .selection import (
    BoundReport,
    SelectionConfig,
    SelectionResult,
    StopReason,
    Task,
    backward_tefs,
    compute_bounds,
    forward_tefs,
    select,
    te_threshold,
    total_transfer_entropy,
)
from .timeseries import LagSpec, TimeSeriesDataset, embed, load_csv, standardize, temporal_split

__version__ = "0.1.0"
