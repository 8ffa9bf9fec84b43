"""Regime-labeled benchmark datasets from raw asset-price series.

Fits Gaussian Markov regime-switching variance models by multi-restart EM,
selects the regime count by summed information criteria, labels each
timestep with its argmax smoothed regime, and quantifies how much those
labels help a baseline forecaster.
"""

from ._backend import active_backend, set_backend
from .em import FitConfig, FitReport, em_step, fit, fit_inference, init_params
from .forecast import ForecastConfig, MseReport, build_dataset, evaluate
from .ingest import (
    PriceSeries,
    ReturnSeries,
    clip_window,
    parse_price_csv,
    percent_change,
    resample_period_end,
)
from .labeling import (
    EventAnnotation,
    EventInterval,
    LabelSeries,
    annotate,
    assign_labels,
    order_regimes,
)
from .pipeline import PipelineConfig, emit_plot_data, run
from .regime import InferenceResult, RegimeParams, hamilton_filter, kim_smooth, simulate
from .selection import InfoCriteria, SelectionReport, information_criteria, select_k
from .stationarity import AdfResult, adf_test

__version__ = "0.1.0"

__all__ = [
    "PriceSeries",
    "ReturnSeries",
    "RegimeParams",
    "InferenceResult",
    "FitConfig",
    "FitReport",
    "InfoCriteria",
    "SelectionReport",
    "AdfResult",
    "LabelSeries",
    "EventAnnotation",
    "EventInterval",
    "ForecastConfig",
    "MseReport",
    "PipelineConfig",
    "parse_price_csv",
    "clip_window",
    "resample_period_end",
    "percent_change",
    "hamilton_filter",
    "kim_smooth",
    "simulate",
    "init_params",
    "em_step",
    "fit",
    "fit_inference",
    "information_criteria",
    "select_k",
    "adf_test",
    "order_regimes",
    "assign_labels",
    "annotate",
    "build_dataset",
    "evaluate",
    "run",
    "emit_plot_data",
    "active_backend",
    "set_backend",
    "__version__",
]
