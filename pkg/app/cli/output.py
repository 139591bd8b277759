"""
CSV and JSON writers. Both carry the run metadata: CSV as a '#' preamble,
JSON as a "metadata" object. Floats are written with repr so repeated runs
produce identical bytes.
"""

import csv
import io
import json
import hashlib
import logging
from typing import Any, Dict, List, Optional

from pydantic import BaseModel

import app

# Setup logging
logger = logging.getLogger(__name__)


class OutputTable(BaseModel):
    """Columns, rows and metadata of one command's output"""
    columns: List[str]
    rows: List[List[Any]]
    metadata: Dict[str, str] = {}
    records: Optional[List[Dict[str, Any]]] = None  # richer per-row JSON (e.g. ForceResult dumps)


def config_hash(config):
    payload = config.model_dump_json(exclude={"output", "format", "threads"})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def base_metadata(command, config):
    return {
        "command": command,
        "version": app.__version__,
        "config_hash": config_hash(config),
        "radius_um": repr(config.radius_um),
        "temperature_k": repr(config.temperature_k),
    }


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def to_csv(table):
    buffer = io.StringIO()
    for key, value in table.metadata.items():
        buffer.write(f"# {key}: {value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def to_json(table):
    records = table.records
    if records is None:
        records = [dict(zip(table.columns, row)) for row in table.rows]
    document = {"metadata": table.metadata, "columns": table.columns, "rows": records}
    return json.dumps(document, indent=2) + "\n"


def write_table(table, fmt, path=None, stream=None):
    """Render table as csv or json and write it to path or stream"""
    text = to_json(table) if fmt == "json" else to_csv(table)
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        logger.info(f"Wrote {len(table.rows)} rows to {path}")
    else:
        stream.write(text)
    return text
