"""Tests for confusion matrices, derived metrics and report rendering/parse-back."""

from __future__ import annotations

import tempfile
import unittest
from fractions import Fraction
from pathlib import Path

import numpy as np

from eval import (
    ReportFormat,
    append_record,
    append_report,
    build_class_table,
    build_comparison_table,
    confusion,
    derive_metrics,
    evaluate_predictions,
    load_reports,
    parse_structured_report,
    parse_text_report,
    render_report,
)
from eval.eval_types import ConfusionMatrix
from eval.report import TABLE_COLUMNS
from tests.oracles import confusion_count, metrics_exact


def report_for(counts, dataset="notes", model="mobilenet"):
    cm = ConfusionMatrix(np.asarray(counts, dtype=np.int64), [f"c{k}" for k in range(len(counts))])
    return derive_metrics(cm, dataset, model)


class ConfusionTests(unittest.TestCase):
    def test_perfect_predictions_are_diagonal(self) -> None:
        labels = [0, 1, 2, 2, 1]
        cm = confusion(labels, labels, 3)
        np.testing.assert_array_equal(cm.counts, np.diag([1, 2, 2]))

    def test_constant_prediction_fills_one_column(self) -> None:
        cm = confusion([0, 1, 2, 1], [0, 0, 0, 0], 3)
        np.testing.assert_array_equal(cm.counts[:, 1:], 0)
        np.testing.assert_array_equal(cm.counts[:, 0], [1, 2, 1])

    def test_random_pairs_match_counting_oracle(self) -> None:
        rng = np.random.default_rng(0)
        for _ in range(50):
            k = int(rng.integers(1, 10))
            n = int(rng.integers(0, 200))
            true, pred = rng.integers(0, k, n), rng.integers(0, k, n)
            np.testing.assert_array_equal(confusion(true, pred, k).counts, confusion_count(true, pred, k))

    def test_out_of_range_label_rejected(self) -> None:
        with self.assertRaises(ValueError):
            confusion([0, 3], [0, 1], 3)

    def test_length_mismatch_rejected(self) -> None:
        with self.assertRaises(ValueError):
            confusion([0, 1], [0], 2)


class DerivedMetricTests(unittest.TestCase):
    def test_diagonal_matrix_scores_one(self) -> None:
        report = report_for(np.diag([3, 4, 5]))
        self.assertEqual(report.precision, [1.0, 1.0, 1.0])
        self.assertEqual(report.recall, [1.0, 1.0, 1.0])
        self.assertEqual((report.macro_f1, report.accuracy), (1.0, 1.0))

    def test_two_class_hand_example(self) -> None:
        report = report_for([[5, 5], [0, 10]])
        self.assertEqual(report.precision, [1.0, 10 / 15])
        self.assertEqual(report.recall, [0.5, 1.0])
        self.assertEqual(report.accuracy, 0.75)
        self.assertEqual(report.support, [10, 10])

    def test_absent_class_reports_zero_and_is_flagged(self) -> None:
        report = report_for([[4, 0, 0], [1, 3, 0], [0, 0, 0]])
        self.assertEqual(report.precision[2], 0.0)
        self.assertEqual(report.recall[2], 0.0)
        self.assertEqual(report.f1[2], 0.0)
        self.assertEqual(report.zero_division["recall"], ["c2"])
        self.assertIn("c2", report.zero_division["precision"])

    def test_random_matrices_match_exact_fractions(self) -> None:
        rng = np.random.default_rng(1)
        for _ in range(1000):
            k = int(rng.integers(1, 7))
            counts = rng.integers(0, 6, (k, k))
            report = report_for(counts)
            per_class, accuracy = metrics_exact(counts.tolist())
            for c, (p, r, f) in enumerate(per_class):
                self.assertEqual(report.precision[c], float(p))
                self.assertEqual(report.recall[c], float(r))
                self.assertEqual(report.f1[c], float(f))
            self.assertEqual(report.accuracy, float(accuracy))
            self.assertAlmostEqual(report.macro_f1, float(sum((f for _, _, f in per_class), Fraction(0)) / k), places=12)

    def test_evaluate_predictions_takes_argmax(self) -> None:
        probs = np.array([[0.7, 0.3], [0.4, 0.6], [0.5, 0.5]])
        report = evaluate_predictions([0, 1, 1], probs, ["one", "two"], "d", "m")
        self.assertEqual(report.correct, 2)
        self.assertEqual(report.class_names, ["one", "two"])


class ReportRenderingTests(unittest.TestCase):
    def test_empty_list_renders_header_only(self) -> None:
        text = render_report([], ReportFormat.TEXT)
        lines = text.strip().splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(tuple(c.strip() for c in lines[0].strip("|").split("|")), TABLE_COLUMNS)
        self.assertEqual(parse_text_report(text), [])

    def test_text_table_parses_back_to_two_decimals(self) -> None:
        reports = [report_for([[5, 5], [0, 10]], "money", "nasnet"), report_for(np.diag([2, 2]), "currency", "resnet")]
        rows = parse_text_report(render_report(reports, "text"))
        self.assertEqual([r["dataset"] for r in rows], ["money", "currency"])
        for row, report in zip(rows, reports):
            for key, value in report.row().items():
                if isinstance(value, float):
                    self.assertAlmostEqual(row[key], value, delta=0.005)

    def test_structured_report_round_trips_exactly(self) -> None:
        reports = [report_for([[1, 2, 0], [0, 3, 1], [2, 0, 0]])]
        self.assertEqual(parse_structured_report(render_report(reports, ReportFormat.STRUCTURED)), reports)

    def test_pipe_in_names_does_not_break_table(self) -> None:
        table = build_comparison_table([report_for(np.diag([1, 1]), "a|b", "m")])
        self.assertEqual(parse_text_report(table)[0]["dataset"], "a/b")

    def test_wrong_header_rejected(self) -> None:
        with self.assertRaises(ValueError):
            parse_text_report("| A | B |\n|---|---|\n")

    def test_class_table_lists_every_class(self) -> None:
        table = build_class_table(report_for([[4, 0, 0], [1, 3, 0], [0, 0, 0]]))
        for name in ("c0", "c1", "c2"):
            self.assertIn(f"| {name} |", table)
        self.assertIn("undefined", table)

    def test_results_log_round_trip(self) -> None:
        report = report_for([[3, 1], [1, 3]])
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "results.jsonl"
            append_report(path, report)
            append_report(path, report)
            self.assertEqual(load_reports(path), [report, report])

    def test_results_log_names_the_bad_line(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "results.jsonl"
            append_report(path, report_for([[2, 0], [0, 2]]))
            append_record(path, {"seed": 0, "transfer_epochs": 3})
            with self.assertRaises(ValueError) as ctx:
                load_reports(path)
        self.assertIn("results.jsonl:2", str(ctx.exception))

    def test_missing_results_log_reads_empty(self) -> None:
        with tempfile.TemporaryDirectory() as tmp:
            self.assertEqual(load_reports(Path(tmp) / "absent.jsonl"), [])


if __name__ == "__main__":
    unittest.main()
