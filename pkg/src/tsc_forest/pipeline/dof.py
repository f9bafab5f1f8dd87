"""Degrees-of-freedom reports."""

import logging

from tsc_forest.forest import dof_sc, dof_tsc
from tsc_forest.models import DofReport, ForestLayout
from tsc_forest.presets import PUBLISHED_PIXELS, PUBLISHED_ROWS, find_published_row

logger = logging.getLogger(__name__)


def _edges_per_tree(layout: ForestLayout) -> int:
    return sum(layout.branching**d for d in range(1, layout.depth + 1))


def dof_report(
    layout: ForestLayout, pixels: int = PUBLISHED_PIXELS, group_dim: int = 6
) -> DofReport:
    """TSC and SC degrees of freedom for ``layout`` at equal feature count.

    Flat layouts use ``trees * (pixels - 1 + branching * group_dim)``; deeper
    trees count one parameter set per edge. When the layout matches a
    published row whose printed TSC value disagrees with the formula, the
    report carries a note saying so.
    """
    if layout.depth == 1:
        df_tsc = dof_tsc(layout.trees, layout.branching, pixels, group_dim)
    else:
        df_tsc = layout.trees * (pixels - 1 + _edges_per_tree(layout) * group_dim)
    num_features = layout.leaf_count
    df_sc = dof_sc(num_features, pixels)

    note = None
    if layout.depth == 1 and pixels == PUBLISHED_PIXELS and group_dim == 6:
        row = find_published_row(layout.trees, layout.branching)
        if row is not None and row["df_tsc"] != df_tsc:
            implied = row["df_tsc"] // layout.trees - layout.branching * group_dim + 1
            note = (
                f"published value is {row['df_tsc']}, formula gives {df_tsc} "
                f"(the published value matches {implied} pixels)"
            )
            logger.warning(f"{layout.label}: {note}")

    return DofReport(
        layout=layout.label if layout.depth == 1 else f"{layout.label}^{layout.depth}",
        pixels=pixels,
        group_dim=group_dim,
        df_tsc=df_tsc,
        df_sc=df_sc,
        num_features=num_features,
        ratio=df_sc / df_tsc,
        note=note,
    )


def published_reports(pixels: int = PUBLISHED_PIXELS, group_dim: int = 6) -> list[DofReport]:
    """Reports for every distinct published layout, in publication order."""
    seen: set[tuple[int, int]] = set()
    reports = []
    for row in PUBLISHED_ROWS:
        key = (row["trees"], row["branching"])
        if key in seen:
            continue
        seen.add(key)
        reports.append(
            dof_report(ForestLayout(trees=key[0], branching=key[1]), pixels, group_dim)
        )
    return reports
