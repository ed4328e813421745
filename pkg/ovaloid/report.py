#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""CSV tables, JSON summaries and plot data files."""

import csv
import io
import json
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

from .flow import MONOTONE_TOL, FlowTrace
from .wirtinger import WirtingerReport

logger = logging.getLogger("ovaloid.report")

SCHEMA_VERSION = 1

Cell = str | int | float | bool | None

IDENTITY_COLUMNS = ("body_id", "f_id", "resolution", "residual", "scale", "relative")
WIRTINGER_COLUMNS = (
    "body_id",
    "F_id",
    "lhs",
    "mean_term",
    "dirichlet_term",
    "slack",
    "equality_flag",
)
MIXED_COLUMNS = ("case", "value", "expected", "rel_error", "check", "passed")
FLOW_COLUMNS = ("t", "volume", "ratio", "min_margin", "min_s")


def format_cell(value: Cell) -> str:
    """
    Render one cell. Floats use ``repr`` so equal runs give equal bytes;
    booleans are ``true``/``false``; ``None`` is empty.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(schema: str, header: Sequence[str], rows: Iterable[Sequence[Cell]]) -> str:
    """The full table text, starting with a ``# schema=<name>/1`` line."""
    buffer = io.StringIO()
    buffer.write(f"# schema={schema}/{SCHEMA_VERSION}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"Row has {len(row)} cells, header has {len(header)}")
        writer.writerow([format_cell(cell) for cell in row])
    return buffer.getvalue()


def wirtinger_rows(body_id: str, reports: Iterable[tuple[str, WirtingerReport]]) -> list[list[Cell]]:
    return [
        [body_id, name, r.lhs, r.mean_term, r.dirichlet_term, r.slack, r.equality_flag]
        for name, r in reports
    ]


def trace_table(trace: FlowTrace) -> tuple[list[str], list[list[Cell]]]:
    """Header and rows of a flow trace; the residual column only when tracked."""
    header = list(FLOW_COLUMNS)
    with_residual = trace.has_residual
    if with_residual:
        header.append("residual")
    rows: list[list[Cell]] = []
    for row in trace.rows:
        cells: list[Cell] = [row.t, row.volume, row.ratio, row.min_margin, row.min_s]
        if with_residual:
            cells.append(row.residual)
        rows.append(cells)
    return header, rows


def write_trace(path: Path, trace: FlowTrace) -> None:
    header, rows = trace_table(trace)
    path.write_text(render_csv("flow", header, rows))


def summary_path(out: Path) -> Path:
    return out.with_suffix(".summary.json")


def _json_ready(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_json_ready(v) for v in value]
    return value


def write_summary(path: Path, summary: dict[str, Any]) -> None:
    """Write ``summary`` with sorted keys; non-finite floats become null."""
    path.write_text(json.dumps(_json_ready(summary), indent=2, sort_keys=True) + "\n")


def flow_summary(
    trace: FlowTrace, tol: float = MONOTONE_TOL, checked: bool = True
) -> dict[str, Any]:
    """Summary of one trace; ``monotone`` is null when the ratio was not checked."""
    return {
        "monotone": trace.monotone(tol) if checked else None,
        "min_ratio_delta": trace.min_ratio_delta,
        "steps": trace.steps,
        "t_final": trace.rows[-1].t,
        "extinct": trace.extinct,
        "normalization": str(trace.normalization),
    }


def write_plot_data(out: Path, trace: FlowTrace) -> list[Path]:
    """
    Two-column ``t value`` files, one per trace column, next to ``out``.

    Returns:
        The files written
    """
    header, rows = trace_table(trace)
    written = []
    for index, column in enumerate(header[1:], start=1):
        path = out.with_suffix(f".{column}.dat")
        lines = [f"{format_cell(row[0])} {format_cell(row[index])}" for row in rows]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    logger.debug(f"Wrote {len(written)} plot data files next to {out}")
    return written
