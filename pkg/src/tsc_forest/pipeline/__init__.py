"""Benchmark pipelines driven by the command line."""

from tsc_forest.pipeline.compare import (
    COMPARISON_COLUMNS,
    compare_row,
    format_row,
    parse_row_spec,
    read_comparison_csv,
    render_comparison_text,
    run_comparison,
    write_comparison_csv,
)
from tsc_forest.pipeline.dof import dof_report, published_reports
from tsc_forest.pipeline.export import (
    export_features,
    export_generator_effects,
    feature_grid,
    forest_grid,
    generator_grid,
    normalize_cell,
    square_template,
)
from tsc_forest.pipeline.sources import load_patch_pool
from tsc_forest.pipeline.sweep import (
    SweepResult,
    best_fit_errors,
    parse_range_spec,
    sweep_surface,
    write_sweep_csv,
    write_sweep_heatmap,
)

__all__ = [
    "COMPARISON_COLUMNS",
    "SweepResult",
    "best_fit_errors",
    "compare_row",
    "dof_report",
    "export_features",
    "export_generator_effects",
    "feature_grid",
    "forest_grid",
    "format_row",
    "generator_grid",
    "load_patch_pool",
    "normalize_cell",
    "parse_range_spec",
    "parse_row_spec",
    "published_reports",
    "read_comparison_csv",
    "render_comparison_text",
    "run_comparison",
    "square_template",
    "sweep_surface",
    "write_comparison_csv",
    "write_sweep_csv",
    "write_sweep_heatmap",
]
