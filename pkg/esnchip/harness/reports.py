"""
Report writers. Nothing time- or host-dependent goes in, keys are sorted and
floats use a fixed format, so equal runs give byte-identical files.
"""
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Optional

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.6f"


def _plain(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return round(v, 9)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    return obj


def to_json_text(payload: Any) -> str:
    return json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n"


def write_json(payload: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json_text(payload), encoding="utf-8")
    logging.info(f"Wrote {path}")
    return path


def _frame(rows: Iterable[Mapping[str, Any]], columns: Optional[List[str]] = None) -> pd.DataFrame:
    return pd.DataFrame([_plain(r) for r in rows], columns=columns)


def to_csv_text(rows: Iterable[Mapping[str, Any]], columns: Optional[List[str]] = None) -> str:
    return _frame(rows, columns).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(rows: Iterable[Mapping[str, Any]], path: Path, columns: Optional[List[str]] = None) -> Path:
    frame = _frame(rows, columns)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logging.info(f"Wrote {len(frame)} row(s) to {path}")
    return path


def report_payload(kind: str, config: Optional[dict], results: Any) -> dict:
    """Every report embeds the resolved configuration for provenance."""
    return {"report": kind, "config": config or {}, "results": results}
