"""Append-only JSONL results logs: evaluation reports and experiment records."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Mapping

from .eval_types import EvalReport

logger = logging.getLogger(__name__)


def append_record(path: str | Path, record: Mapping[str, Any]) -> None:
    """Append one JSON object as a line, creating the file and its folder if needed."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(dict(record)) + "\n")


def append_report(path: str | Path, report: EvalReport) -> None:
    append_record(path, asdict(report))
    logger.debug("Logged %s/%s to %s", report.dataset, report.model, path)


def load_reports(path: str | Path) -> list[EvalReport]:
    """Every report in the log, oldest first; a missing log reads as empty."""
    path = Path(path)
    if not path.exists():
        return []
    reports = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                reports.append(EvalReport(**json.loads(line)))
            except (json.JSONDecodeError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: not an evaluation report ({exc})") from exc
    return reports
