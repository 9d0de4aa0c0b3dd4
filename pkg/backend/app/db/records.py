# backend/app/db/records.py
"""JSON-lines records (loss curves, evaluation reports) and their CSV export."""
import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List

from pydantic import BaseModel

from app.core.exceptions import FormatError, NotFoundException
from app.schemas.reports import EvalReport

logger = logging.getLogger(__name__)


def write_jsonl(path: Path, records: Iterable[BaseModel]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.model_dump_json() + "\n")
    return path


def append_jsonl(path: Path, record: BaseModel) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(record.model_dump_json() + "\n")


def read_jsonl(path: Path) -> List[Dict[str, Any]]:
    path = Path(path)
    if not path.is_file():
        raise NotFoundException(f"records file {path} not found")
    rows = []
    with path.open(encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{number} is not a JSON record") from exc
    return rows


def write_report(path: Path, report: EvalReport) -> Path:
    """One line per entry, tagged with the report name, then a summary line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for entry in report.entries:
            fh.write(json.dumps({"record": "entry", "report": report.name, **entry.model_dump(mode="json")}) + "\n")
        summary = report.model_dump(mode="json", exclude={"entries"})
        fh.write(json.dumps({"record": "summary", **summary}) + "\n")
    return path


def read_report(path: Path) -> EvalReport:
    rows = read_jsonl(path)
    summary = next((row for row in rows if row.get("record") == "summary"), None)
    if summary is None:
        raise FormatError(f"{path} has no report summary line")
    entries = [{k: v for k, v in row.items() if k not in ("record", "report")}
               for row in rows if row.get("record") == "entry"]
    fields = {k: v for k, v in summary.items() if k != "record"}
    return EvalReport.model_validate({**fields, "entries": entries})


def flatten(row: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in row.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, "" if key == "group" else f"{name}."))
        else:
            out[name] = value
    return out


def export_csv(records_path: Path, csv_path: Path) -> int:
    """
    Flatten JSON-lines records to CSV. Report summaries are skipped so a report
    exports one row per (condition group, split). Returns the row count.
    """
    rows = [flatten(row) for row in read_jsonl(records_path) if row.get("record") != "summary"]
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    logger.info(f"Exported {len(rows)} rows from {records_path} to {csv_path}")
    return len(rows)
