"""File formats: JSON for structured values, CSV for matrices."""
from __future__ import annotations

import csv
import io as _io
import json
import os
from typing import Any

import numpy as np

from .errors import GraphLimError
from .measures import DiscreteMeasure, MeasureSet
from .pvariable import StepPVariable, from_matrix


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise GraphLimError(f"cannot read {path}: {exc.strerror}") from exc


def _load_json(text: str, path: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphLimError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def parse_matrix_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(_io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        m = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise GraphLimError(f"non-numeric CSV entry: {exc}") from exc
    if m.ndim != 2:
        raise GraphLimError("CSV rows have unequal lengths")
    return m


def read_matrix(path: str) -> np.ndarray:
    """A square matrix from CSV rows or a JSON 2-D array."""
    text = _read_text(path)
    if text.lstrip().startswith("["):
        try:
            m = np.array(_load_json(text, path), dtype=np.float64)
        except ValueError as exc:
            raise GraphLimError(f"{path}: not a numeric 2-D array") from exc
    else:
        m = parse_matrix_csv(text)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise GraphLimError(f"{path}: expected a square matrix, got shape {m.shape}")
    return m


def read_pvariable(path: str) -> StepPVariable:
    """Kernel JSON (``{"n", "cells"}``), JSON matrix, or CSV matrix."""
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        return StepPVariable.from_json(_load_json(text, path))
    return from_matrix(read_matrix(path))


def read_measure(path: str) -> DiscreteMeasure:
    return DiscreteMeasure.from_json(_load_json(_read_text(path), path))


def read_measure_set(path: str) -> MeasureSet:
    """A JSON list of measures (a single measure object is a one-element set)."""
    obj = _load_json(_read_text(path), path)
    if isinstance(obj, dict):
        obj = obj.get("members", [obj]) if "members" in obj else [obj]
    return MeasureSet(tuple(DiscreteMeasure.from_json(m) for m in obj))


def read_json(path: str) -> Any:
    return _load_json(_read_text(path), path)


def dumps(obj: Any) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats."""
    return json.dumps(obj, sort_keys=True, separators=(", ", ": "))


def matrix_to_csv(m: np.ndarray) -> str:
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(m))


def write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        import sys

        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
