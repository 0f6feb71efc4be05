"""Deterministic CSV/JSON serialization with a metadata header."""
from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

NA = "NA"


def fmt(v) -> str:
    """Round-trippable text for one CSV cell."""
    if v is None:
        return NA
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return v
    x = float(v)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def metadata_lines(meta: dict) -> list[str]:
    return [f"# {k}: {meta[k]}" for k in meta]


def csv_text(header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> str:
    lines = metadata_lines(meta)
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


def json_text(payload: dict, meta: dict) -> str:
    return json.dumps({"metadata": meta, **_jsonable(payload)}, indent=2, sort_keys=False) + "\n"


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    """Split a CSV produced by :func:`csv_text` into header and rows."""
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return body[0].split(","), [ln.split(",") for ln in body[1:]]
