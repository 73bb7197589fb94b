"""NK fitness landscapes, local optima networks, and search-performance analysis."""

from .basins import BasinPartition, NeutralityError, basin_partition, global_optimum, hill_climb
from .ils import IlsConfig, RunRecord, default_fe_max, ils_run, restart_experiment
from .lon import Lon, extract_lon, read_lon, write_lon
from .metrics import LonMetricsRow, metrics_row
from .nk import (NkInstance, ParameterError, fitness, full_fitness, generate_instance,
                 hamming_ball, neighbors, read_instance, write_instance)
from .regression import (Dataset, DiagnosticsBundle, RegressionFit, aic,
                         backward_eliminate, build_dataset, diagnostics, ols_fit)
from .stats import (SuccessStats, UnsolvedInstanceError, correlation_matrix, ets,
                    f_cdf, pearson, spearman, student_t_cdf)

__version__ = "0.1.0"

__all__ = [
    "BasinPartition", "Dataset", "DiagnosticsBundle", "IlsConfig", "Lon",
    "LonMetricsRow", "NeutralityError", "NkInstance", "ParameterError",
    "RegressionFit", "RunRecord", "SuccessStats", "UnsolvedInstanceError",
    "aic", "backward_eliminate", "basin_partition", "build_dataset",
    "correlation_matrix", "default_fe_max", "diagnostics", "ets", "extract_lon",
    "f_cdf", "fitness", "full_fitness", "generate_instance", "global_optimum",
    "hamming_ball", "hill_climb", "ils_run", "metrics_row", "neighbors",
    "ols_fit", "pearson", "read_instance", "read_lon", "restart_experiment",
    "spearman", "student_t_cdf", "write_instance", "write_lon",
]
