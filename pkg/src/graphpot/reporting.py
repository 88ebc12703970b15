"""Deterministic report serialization.

Reports embed the resolved configuration and content hashes of every input,
and serialize with sorted keys so identical runs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def sha256_text(text: str) -> str:
    return sha256_bytes(text.encode("utf-8"))


def _sanitize(obj):
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if hasattr(obj, "as_dict"):
        return _sanitize(obj.as_dict())
    if hasattr(obj, "item"):      # numpy scalars
        return _sanitize(obj.item())
    return str(obj)


def canonical_json(obj) -> str:
    """Sorted-key JSON with a trailing newline; byte-stable across runs."""
    return json.dumps(_sanitize(obj), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"


def write_report(obj, out_path=None) -> str:
    text = canonical_json(obj)
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    return text


def sequence_csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x)
                              for x in row))
    return "\n".join(lines) + "\n"
