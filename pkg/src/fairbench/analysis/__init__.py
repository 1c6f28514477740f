"""Post-hoc analysis of benchmark records."""

from .plots import Series, emit_scatter_svg, rect_geometry, render_scatter_svg
from .report import analyze, load_all_results, one_per_split
from .robust import (
    DEFAULT_CONFIG,
    SDConfig,
    pair_directions,
    sd_correlation,
    sd_directions,
    sd_outlyingness,
    sd_weights,
    weighted_correlation,
)
from .stability import (
    AnalysisError,
    CorrelationMatrix,
    StabilitySummary,
    TradeoffPoint,
    correlation_matrix,
    mean_std,
    stability,
    tradeoff_points,
    variant_compare,
)

__all__ = [
    "Series", "emit_scatter_svg", "rect_geometry", "render_scatter_svg",
    "analyze", "load_all_results", "one_per_split",
    "DEFAULT_CONFIG", "SDConfig", "pair_directions", "sd_correlation", "sd_directions",
    "sd_outlyingness", "sd_weights", "weighted_correlation",
    "AnalysisError", "CorrelationMatrix", "StabilitySummary", "TradeoffPoint",
    "correlation_matrix", "mean_std", "stability", "tradeoff_points", "variant_compare",
]
