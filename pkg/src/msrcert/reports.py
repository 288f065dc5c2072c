"""Report documents: summaries plus JSON and CSV emitters."""

import csv
import io
import json
import logging
from collections import defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Type, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from .exceptions import InputFileError, ParseError
from .models import AttackRecord, CertificationRecord, RunSummary, SaliencyRecord


logger = logging.getLogger(__name__)

RECORD_TYPES: Dict[str, Type[BaseModel]] = {
    "certify": CertificationRecord,
    "attack": AttackRecord,
    "saliency": SaliencyRecord,
}


def _mean_std(values: Sequence[float]) -> tuple:
    if not values:
        return None, None
    array = np.asarray(values, dtype=np.float64)
    return float(array.mean()), float(array.std())


def _profile(pairs: Sequence[tuple]) -> Optional[Dict[str, float]]:
    """Mean of the values grouped by position; keys are positions as strings."""
    if not pairs:
        return None
    grouped: Dict[int, List[float]] = defaultdict(list)
    for position, value in pairs:
        grouped[position].append(value)
    return {str(p): float(np.mean(grouped[p])) for p in sorted(grouped)}


def summarize(command: str, records: Sequence[BaseModel]) -> RunSummary:
    """Aggregate statistics; standard deviations are population deviations."""
    if command == "certify":
        mean, std = _mean_std([r.normalized for r in records])
        singles = [(r.indices[0], r.normalized) for r in records if len(r.indices) == 1]
        return RunSummary(count=len(records), mean_normalized=mean, std_normalized=std, positional_profile=_profile(singles))
    if command == "saliency":
        words = [(w.index, w.normalized) for r in records for w in r.words]
        mean, std = _mean_std([v for _, v in words])
        return RunSummary(count=len(records), mean_normalized=mean, std_normalized=std, positional_profile=_profile(words))
    if command == "attack":
        count = len(records)
        if count == 0:
            return RunSummary(count=0)
        return RunSummary(
            count=count,
            per_text_rate=float(np.mean([r.per_text_hit for r in records])),
            per_word_rate=float(np.mean([r.per_word_hit_rate for r in records])),
            mean_upper_bound=float(np.mean([r.upper_bound for r in records])),
            mean_normalized_upper_bound=float(np.mean([r.normalized_upper_bound for r in records])),
        )
    raise ValueError(f"No summary for command {command!r}")


def build_document(command: str, records: Sequence[BaseModel], generated_at: Optional[str] = None) -> Dict[str, Any]:
    return {
        "generated_at": generated_at or datetime.now(timezone.utc).isoformat(),
        "command": command,
        "records": [r.model_dump(mode="json") for r in records],
        "summary": summarize(command, records).model_dump(mode="json"),
    }


def render_json(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def _cell(value: Any) -> Any:
    if isinstance(value, list):
        return ";".join(
            json.dumps(v, sort_keys=True, separators=(",", ":")) if isinstance(v, (dict, list)) else str(v)
            for v in value
        )
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return value


def render_csv(document: Dict[str, Any]) -> str:
    """One row per record; nested lists are joined with ``;``."""
    records = document["records"]
    buffer = io.StringIO()
    if not records:
        return ""
    columns = sorted(records[0].keys())
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow({k: _cell(record[k]) for k in columns})
    return buffer.getvalue()


def write_report(document: Dict[str, Any], output: Optional[Union[str, Path]], fmt: str = "json") -> str:
    """Render ``document`` and write it to ``output`` (returned as text when ``output`` is None)."""
    text = render_csv(document) if fmt == "csv" else render_json(document)
    if output is not None:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {len(document['records'])} {document['command']} records to {path}")
    return text


def read_report(path: Union[str, Path]) -> Dict[str, Any]:
    """Load a JSON report and validate every record against its command's schema."""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputFileError(f"Report file not found: {path}", path=str(path)) from None
    except UnicodeDecodeError as e:
        raise ParseError.from_decode_error(path, e) from None
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=str(path), line=e.lineno) from None
    except OSError as e:
        raise InputFileError(f"Cannot read report file {path}: {e}", path=str(path)) from None
    command = document.get("command") if isinstance(document, dict) else None
    if command not in RECORD_TYPES:
        raise ParseError(f"unknown report command {command!r}", path=str(path))
    try:
        records = [RECORD_TYPES[command].model_validate(r) for r in document.get("records", [])]
    except ValidationError as e:
        raise ParseError(f"invalid {command} record: {e}", path=str(path)) from None
    return {"command": command, "records": records, "generated_at": document.get("generated_at")}
