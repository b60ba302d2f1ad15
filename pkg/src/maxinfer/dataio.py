"""CSV and JSON serialization with reproducible byte-level formatting.

All files are written atomically (temp file in the target directory, then
rename), floats are formatted with 6 significant digits and a period
decimal separator regardless of locale, and JSON keys are sorted, so a
rerun with the same inputs produces byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Iterable, Optional, Sequence

import numpy as np

from .dantzig import DantzigResult
from .max_stats import QuantileEstimate
from .stepdown import StepdownResult


def format_number(x) -> str:
    """Locale-independent 6-significant-digit rendering."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    v = float(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".6g")


def atomic_write_text(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else format_number(cell) for cell in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: str, obj):
    atomic_write_text(path, dumps_json(obj))


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if (math.isnan(v) or math.isinf(v)) else v
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def load_matrix_csv(path: str, header: bool = False) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except OSError:
        raise
    except Exception as exc:
        raise ValueError(f"could not parse {path!r} as a numeric CSV: {exc}") from exc
    if data.size == 0:
        raise ValueError(f"{path!r} contains no data rows")
    return data


def quantile_estimate_json(
    est: QuantileEstimate, replicates_path: Optional[str] = None
) -> dict:
    out = {
        "level": est.level,
        "value": est.value,
        "replications": est.replications,
    }
    if replicates_path is not None:
        out["replicates_path"] = replicates_path
    return out


def write_replicates_csv(path: str, est: QuantileEstimate):
    write_csv(path, ["replicate"], ((v,) for v in est.replicate_values))


def dantzig_result_json(result: DantzigResult) -> dict:
    return {
        "beta_hat": [float(b) for b in result.beta_hat],
        "lambda": result.lam,
        "penalty_kind": result.penalty_kind.value if result.penalty_kind else None,
        "status": result.lp_status.value,
        "constraint_residual": result.constraint_residual,
    }


def stepdown_result_json(result: StepdownResult) -> dict:
    return {
        "rejected": [bool(r) for r in result.rejected],
        "rejection_step": list(result.rejection_step),
        "critical_values": [float(c) for c in result.critical_values],
        "steps": result.steps,
    }


def stepdown_rows(result: StepdownResult, t_stats: np.ndarray):
    for j, t in enumerate(t_stats):
        step = result.rejection_step[j]
        yield (j, t, bool(result.rejected[j]), step if step is not None else "")
