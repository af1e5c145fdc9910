"""
Render EvalReports as a comparison table or a JSON document, and parse both back.

Usage:
    python -m eval.report                                   # reads runs/results.jsonl
    python -m eval.report --results a.jsonl b.jsonl --out comparison.md
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict
from enum import Enum
from pathlib import Path
from typing import Sequence

from config.app_config import OUTPUT_DIR

from .eval_types import EvalReport
from .logger import load_reports

DEFAULT_RESULTS = Path(OUTPUT_DIR) / "results.jsonl"

TABLE_COLUMNS = ("Dataset", "Model", "Precision", "Recall", "Test Accuracy", "F1 Score")
_ROW_FIELDS = ("dataset", "model", "precision", "recall", "accuracy", "f1")


class ReportFormat(str, Enum):
    TEXT = "text"
    STRUCTURED = "structured"


def _cell(text: str) -> str:
    return text.replace("|", "/").strip()


def fmt_val(v: float) -> str:
    return f"{v:.2f}"


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def build_comparison_table(reports: Sequence[EvalReport]) -> str:
    """One row per report: macro precision, macro recall, accuracy, macro F1 to 2 decimals."""
    lines = [
        "| " + " | ".join(TABLE_COLUMNS) + " |",
        "|" + "---|" * len(TABLE_COLUMNS),
    ]
    for r in reports:
        lines.append(
            f"| {_cell(r.dataset)} | {_cell(r.model)} | {fmt_val(r.macro_precision)} "
            f"| {fmt_val(r.macro_recall)} | {fmt_val(r.accuracy)} | {fmt_val(r.macro_f1)} |"
        )
    return "\n".join(lines)


def build_class_table(report: EvalReport) -> str:
    """Per-class breakdown of a single report."""
    lines = ["| Class | Support | Precision | Recall | F1 Score |", "|---|---|---|---|---|"]
    for k, name in enumerate(report.class_names):
        lines.append(
            f"| {_cell(name)} | {report.support[k]} | {fmt_val(report.precision[k])} "
            f"| {fmt_val(report.recall[k])} | {fmt_val(report.f1[k])} |"
        )
    for metric, classes in sorted(report.zero_division.items()):
        lines.append(f"\n_{metric} undefined (reported as 0) for: {', '.join(classes)}_")
    return "\n".join(lines)


def report_to_dict(report: EvalReport) -> dict:
    return asdict(report)


def report_from_dict(data: dict) -> EvalReport:
    return EvalReport(**data)


def render_report(reports: Sequence[EvalReport], fmt: ReportFormat | str = ReportFormat.TEXT) -> str:
    fmt = ReportFormat(fmt)
    if fmt is ReportFormat.TEXT:
        return build_comparison_table(reports) + "\n"
    return json.dumps({"reports": [report_to_dict(r) for r in reports]}, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Parse-back
# ---------------------------------------------------------------------------

def parse_text_report(text: str) -> list[dict[str, float | str]]:
    """Rows of a comparison table as dicts keyed dataset/model/precision/recall/accuracy/f1."""
    rows = []
    lines = [line.strip() for line in text.splitlines() if line.strip().startswith("|")]
    if not lines:
        raise ValueError("no table found")
    header = tuple(cell.strip() for cell in lines[0].strip("|").split("|"))
    if header != TABLE_COLUMNS:
        raise ValueError(f"unexpected table header {header}")
    for line in lines[2:]:
        cells = [cell.strip() for cell in line.strip("|").split("|")]
        if len(cells) != len(TABLE_COLUMNS):
            raise ValueError(f"malformed row: {line}")
        row: dict[str, float | str] = {"dataset": cells[0], "model": cells[1]}
        for name, cell in zip(_ROW_FIELDS[2:], cells[2:]):
            row[name] = float(cell)
        rows.append(row)
    return rows


def parse_structured_report(text: str) -> list[EvalReport]:
    data = json.loads(text)
    return [report_from_dict(item) for item in data["reports"]]


# ---------------------------------------------------------------------------
# Main
# ---------------------------------------------------------------------------

def main() -> None:
    parser = argparse.ArgumentParser(description="Build a comparison table from logged evaluation reports.")
    parser.add_argument("--results", nargs="+", default=[str(DEFAULT_RESULTS)], help="JSONL files of EvalReports")
    parser.add_argument("--out", default=None, help="Write the markdown table here instead of stdout")
    args = parser.parse_args()

    reports: list[EvalReport] = []
    for path in args.results:
        reports.extend(load_reports(path))
    table = render_report(reports, ReportFormat.TEXT)
    if args.out:
        Path(args.out).write_text(table)
        print(f"Report written to {args.out}")
    else:
        print(table, end="")


if __name__ == "__main__":
    main()
