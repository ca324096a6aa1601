"""Reading and writing datasets, fits and run configurations."""
from __future__ import annotations

import csv
import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np
import yaml

from .estimation import Dataset, FitResult
from .exceptions import DataError
from .kernel import ModelSpec

_ITEM_COL = re.compile(r"^item(\d+)$", re.IGNORECASE)


def _parse_cell(text: str, line: int, column: str) -> float:
    text = text.strip()
    if text == "" or text.upper() in ("NA", "NAN"):
        return np.nan
    try:
        return float(text)
    except ValueError:
        raise DataError(f"line {line}: column {column!r} has non-numeric value {text!r}") from None


def read_dataset(path, item_columns=None, covariate_columns=None) -> Dataset:
    """Load a CSV file with a header row.

    Response columns default to those named ``item1, item2, ...`` (ordered
    by number).  Empty cells are missing responses.  Errors name the
    offending line (the header is line 1).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        if item_columns is None:
            found = [(int(m.group(1)), h) for h in header if (m := _ITEM_COL.match(h))]
            item_columns = [h for _, h in sorted(found)]
        if not item_columns:
            raise DataError(f"{path}: no response columns (expected item1..itemI or an explicit mapping)")
        covariate_columns = list(covariate_columns or [])
        missing = [c for c in list(item_columns) + covariate_columns if c not in header]
        if missing:
            raise DataError(f"{path}: columns not found in header: {missing}")
        idx_items = [header.index(c) for c in item_columns]
        idx_cov = [header.index(c) for c in covariate_columns]
        rows, covs = [], []
        for line, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue  # blank line
            if len(rec) != len(header):
                raise DataError(f"{path}: line {line} has {len(rec)} fields, header has {len(header)}")
            rows.append([_parse_cell(rec[j], line, header[j]) for j in idx_items])
            if idx_cov:
                vals = [_parse_cell(rec[j], line, header[j]) for j in idx_cov]
                if any(np.isnan(v) for v in vals):
                    raise DataError(f"{path}: line {line} has a missing covariate value")
                covs.append(vals)
            if all(np.isnan(v) for v in rows[-1]):
                raise DataError(f"{path}: line {line} has no observed responses")
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(np.array(rows), np.array(covs) if idx_cov else None,
                   item_names=list(item_columns), covariate_names=covariate_columns or None)


def _fmt(v: float) -> str:
    if np.isnan(v):
        return ""
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_dataset(path, dataset: Dataset) -> None:
    header = list(dataset.item_names) + list(dataset.covariate_names or [])
    X = dataset.covariates
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p in range(dataset.n_persons):
            row = [_fmt(v) for v in dataset.responses[p]]
            if X is not None:
                row += [_fmt(v) for v in X[p]]
            w.writerow(row)


class atomic_open:
    """Write to a temporary file and rename it into place on success."""

    def __init__(self, path):
        self.path = Path(path)

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, self.tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f".{self.path.name}.")
        self.fh = os.fdopen(fd, "w", newline="")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            os.unlink(self.tmp)
        return False


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, payload: dict) -> None:
    with atomic_open(path) as fh:
        json.dump(_jsonable(payload), fh, indent=2)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_fit(path, fit: FitResult) -> None:
    write_json(path, fit.to_dict())


def load_fit(path) -> FitResult:
    return FitResult.from_dict(read_json(path))


def load_model(path) -> tuple[ModelSpec, float]:
    """Load ``(spec, sigma_theta)`` from a fit JSON or a simulation truth JSON."""
    d = read_json(path)
    if "estimates" in d:
        fit = FitResult.from_dict(d)
        return fit.spec, fit.sigma_theta
    return ModelSpec.from_dict(d["model"]), float(d.get("sigma_theta", 1.0))


def read_config(path) -> dict:
    """Read a flat YAML run configuration (keys map onto CLI option names)."""
    if path is None:
        return {}
    with open(path) as fh:
        cfg = yaml.safe_load(fh) or {}
    if not isinstance(cfg, dict):
        raise DataError(f"{path}: configuration must be a mapping of keys to values")
    return {str(k).replace("-", "_"): v for k, v in cfg.items()}
