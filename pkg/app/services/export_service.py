"""
Export Service - JSON result documents and CSV tables

Every float is written with 17 significant digits so doubles survive a
write/read cycle unchanged. Non-finite values become null in JSON.
"""

import json
import math
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd
import structlog

app_logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"


def _number(value: float) -> str:
    if not math.isfinite(value):
        return "null"
    text = format(value, ".17g")
    # keep a float marker on integral values written in exponent-free form
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def render_json(document: Any, indent: int = 2) -> str:
    """Deterministic JSON text: key order preserved, floats at 17 digits."""

    def render(value: Any, depth: int) -> str:
        pad = " " * (indent * (depth + 1))
        close = " " * (indent * depth)
        if isinstance(value, dict):
            if not value:
                return "{}"
            items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {render(v, depth + 1)}" for k, v in value.items()]
            return "{\n" + ",\n".join(items) + "\n" + close + "}"
        if isinstance(value, (list, tuple, np.ndarray)):
            if len(value) == 0:
                return "[]"
            if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in value):
                return "[" + ", ".join(render(v, depth + 1) for v in value) + "]"
            items = [pad + render(v, depth + 1) for v in value]
            return "[\n" + ",\n".join(items) + "\n" + close + "]"
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return _number(float(value))
        if value is None:
            return "null"
        if hasattr(value, "value"):  # enums
            return json.dumps(value.value, ensure_ascii=False)
        return json.dumps(str(value), ensure_ascii=False)

    return render(document, 0) + "\n"


def write_json(document: Any, path: PathLike) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_json(document), encoding="utf-8")
    app_logger.info("json written", path=str(path))
    return path


def render_csv(table: pd.DataFrame) -> str:
    return table.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(table: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(table), encoding="utf-8")
    app_logger.info("csv written", path=str(path), rows=len(table))
    return path


def read_json(path: PathLike) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
