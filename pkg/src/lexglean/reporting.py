"""Report tables over condition summaries and overlap results.

Six table kinds (validity, fidelity, diversity, efficiency, full_summary,
overlap) can each be rendered as CSV, LaTeX or JSON.  Rows are always
sorted by (model, language, task_type) and every number is formatted with a
fixed precision, so rendering the same inputs twice produces byte-identical
output.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Callable, Sequence

from .evaluation import ConditionSummary, OverlapResult

TABLE_KINDS = ("validity", "fidelity", "diversity", "efficiency", "full_summary", "overlap")
FORMATS = ("csv", "latex", "json")


@dataclass(frozen=True)
class ReportSpec:
    table_kind: str
    format: str

    def __post_init__(self) -> None:
        if self.table_kind not in TABLE_KINDS:
            raise ValueError(f"unknown table kind '{self.table_kind}'")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format '{self.format}'")


@dataclass(frozen=True)
class _Column:
    key: str
    header: str
    latex_header: str
    align: str
    decimals: int | None  # None -> not numeric (string/int/bool passthrough)


_SUMMARY_COLUMNS = (
    _Column("model_id", "model", "Model", "l", None),
    _Column("language", "language", "Language", "l", None),
    _Column("task_type", "task_type", "Task", "l", None),
    _Column("n_outputs", "n_outputs", "N", "r", None),
    _Column("valid_pct", "valid_pct", "Valid\\%", "r", 1),
    _Column("avg_words", "avg_words", "Words", "r", 1),
    _Column("doc_fidelity_pct", "doc_fidelity_pct", "Fidelity\\%", "r", 1),
    _Column("avg_ttr", "avg_ttr", "TTR", "r", 3),
    _Column("avg_hapax", "avg_hapax", "Hapax", "r", 3),
    _Column("avg_vocab", "avg_vocab", "Vocab", "r", 1),
    _Column("avg_code_switch", "avg_code_switch", "CS", "r", 3),
    _Column("avg_lang_conf", "avg_lang_conf", "LangConf", "r", 3),
    _Column("avg_quality", "avg_quality", "Quality", "r", 3),
    _Column("usable_words_per_call", "usable_words_per_call", "Words/Call", "r", 1),
    _Column("diacritic_presence_pct", "diacritic_presence_pct", "Diacritics\\%", "r", 1),
    _Column("avg_diacritic_ratio", "avg_diacritic_ratio", "DiaRatio", "r", 3),
)

_KIND_COLUMNS = {
    "validity": ("model_id", "language", "task_type", "n_outputs", "valid_pct", "avg_words"),
    "fidelity": (
        "model_id",
        "language",
        "task_type",
        "doc_fidelity_pct",
        "avg_code_switch",
        "avg_lang_conf",
    ),
    "diversity": ("model_id", "language", "task_type", "avg_ttr", "avg_hapax", "avg_vocab"),
    "efficiency": ("model_id", "language", "task_type", "usable_words_per_call"),
    "full_summary": tuple(column.key for column in _SUMMARY_COLUMNS),
}

_OVERLAP_COLUMNS = (
    _Column("key", "key", "Group", "l", None),
    _Column("cosine", "cosine", "Cosine", "r", 4),
    _Column("memorization_suspect", "memorization_suspect", "Suspect", "l", None),
)


def _cell_value(value, column: _Column):
    """JSON-facing value: floats rounded to the column precision."""
    if value is None:
        return None
    if column.decimals is not None:
        return round(float(value), column.decimals)
    return value


def _cell_text(value, column: _Column) -> str:
    """CSV/LaTeX-facing value as a string."""
    if value is None:
        return ""
    if column.decimals is not None:
        return f"{float(value):.{column.decimals}f}"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _latex_escape(text: str) -> str:
    return text.replace("_", "\\_").replace("%", "\\%").replace("&", "\\&")


def _render_csv(columns: Sequence[_Column], rows: Sequence[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([column.header for column in columns])
    for row in rows:
        writer.writerow([_cell_text(row[column.key], column) for column in columns])
    return buffer.getvalue()


def _render_latex(columns: Sequence[_Column], rows: Sequence[dict]) -> str:
    lines = [
        "\\begin{tabular}{" + "".join(column.align for column in columns) + "}",
        "\\toprule",
        " & ".join(column.latex_header for column in columns) + " \\\\",
        "\\midrule",
    ]
    for row in rows:
        cells = []
        for column in columns:
            text = _cell_text(row[column.key], column)
            if column.decimals is None:
                text = _latex_escape(text)
            cells.append(text)
        lines.append(" & ".join(cells) + " \\\\")
    lines.append("\\bottomrule")
    lines.append("\\end{tabular}")
    return "\n".join(lines) + "\n"


def _render_json(kind: str, columns: Sequence[_Column], rows: Sequence[dict]) -> str:
    payload = {
        "kind": kind,
        "rows": [
            {column.header: _cell_value(row[column.key], column) for column in columns}
            for row in rows
        ],
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def _summary_rows(summaries: Sequence[ConditionSummary]) -> list[dict]:
    ordered = sorted(summaries, key=lambda s: (s.model_id, s.language, s.task_type))
    return [s.to_json_dict() for s in ordered]


def _overlap_rows(overlaps: Sequence[OverlapResult]) -> list[dict]:
    return [o.to_json_dict() for o in sorted(overlaps, key=lambda o: o.key)]


def render_report(
    spec: ReportSpec,
    summaries: Sequence[ConditionSummary] = (),
    overlaps: Sequence[OverlapResult] = (),
) -> str:
    """Render one report table to a string (including trailing newline)."""
    if spec.table_kind == "overlap":
        columns: Sequence[_Column] = _OVERLAP_COLUMNS
        rows = _overlap_rows(overlaps)
    else:
        wanted = _KIND_COLUMNS[spec.table_kind]
        columns = tuple(c for c in _SUMMARY_COLUMNS if c.key in wanted)
        rows = _summary_rows(summaries)
    renderers: dict[str, Callable[..., str]] = {
        "csv": lambda: _render_csv(columns, rows),
        "latex": lambda: _render_latex(columns, rows),
        "json": lambda: _render_json(spec.table_kind, columns, rows),
    }
    return renderers[spec.format]()


def format_condition_table(summaries: Sequence[ConditionSummary]) -> str:
    """Fixed-width text table for terminal output."""
    columns = tuple(c for c in _SUMMARY_COLUMNS if c.key in _KIND_COLUMNS["full_summary"])
    rows = _summary_rows(summaries)
    headers = [column.header for column in columns]
    table = [headers] + [
        [_cell_text(row[column.key], column) for column in columns] for row in rows
    ]
    widths = [max(len(line[i]) for line in table) for i in range(len(columns))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip() for line in table]
    return "\n".join(lines)
