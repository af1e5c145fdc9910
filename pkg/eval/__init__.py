"""Evaluation: confusion matrices, derived metrics and report rendering."""

from .eval_types import ConfusionMatrix, EvalReport
from .logger import append_record, append_report, load_reports
from .metrics import confusion, derive_metrics, evaluate_predictions, predictions_from_probs
from .report import (
    ReportFormat,
    build_class_table,
    build_comparison_table,
    parse_structured_report,
    parse_text_report,
    render_report,
    report_from_dict,
    report_to_dict,
)

__all__ = [
    "ConfusionMatrix",
    "EvalReport",
    "append_record",
    "append_report",
    "load_reports",
    "confusion",
    "derive_metrics",
    "evaluate_predictions",
    "predictions_from_probs",
    "ReportFormat",
    "build_class_table",
    "build_comparison_table",
    "parse_structured_report",
    "parse_text_report",
    "render_report",
    "report_from_dict",
    "report_to_dict",
]
