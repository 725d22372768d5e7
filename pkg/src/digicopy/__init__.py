"""Sliding-window correlation indicators for enterprise digital copies."""

__version__ = "0.1.0"

from .compare import ModeComparison, compare_modes, paper_table, render_report, verify_paper_table
from .corrwin import correlation_entry, correlation_matrix, standardize
from .indicator import EngineConfig, IndicatorSeries, SlidingIndicator, indicator_series, row_abs_sums, total_indicator
from .panel import Panel, ParamMeta, WindowSpec, load_panel, make_panel, validate_panel, window_slice
from .strategy import (
    CoverageRule,
    StrategyModel,
    brute_force_assignment,
    check_budget,
    evaluate_plan,
    optimize_assignment,
)
from .synth import SynthSpec, apply_strategy_overlay, generate_panel

__all__ = [
    "CoverageRule",
    "EngineConfig",
    "IndicatorSeries",
    "ModeComparison",
    "Panel",
    "ParamMeta",
    "SlidingIndicator",
    "StrategyModel",
    "SynthSpec",
    "WindowSpec",
    "apply_strategy_overlay",
    "brute_force_assignment",
    "check_budget",
    "compare_modes",
    "correlation_entry",
    "correlation_matrix",
    "evaluate_plan",
    "generate_panel",
    "indicator_series",
    "load_panel",
    "make_panel",
    "optimize_assignment",
    "paper_table",
    "render_report",
    "row_abs_sums",
    "standardize",
    "total_indicator",
    "validate_panel",
    "verify_paper_table",
    "window_slice",
]
