"""File formats: CSV rows with a JSON header sidecar, and JSON artifacts.

A dataset ``level_0.csv`` has its header in ``level_0.json``. Floats are
written with ``repr`` so values survive a round trip exactly. Every file is
written to ``<name>.partial`` first and renamed into place, so a failed
write never leaves a truncated artifact under the final name.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from collections.abc import Iterable, Mapping
from pathlib import Path

import numpy as np

from .pareto import SolutionSet
from .problems import OfflineDataset, ProblemSpec, array_fingerprint, evaluate, make_problem

FORMAT_VERSION = 1
DATASET_FORMAT = "frontshift-dataset"
SOLUTIONS_FORMAT = "frontshift-solutions"
METRICS_FORMAT = "frontshift-metrics"
SUMMARY_FORMAT = "frontshift-summary"
REPORT_FORMAT = "frontshift-verify"

# tolerance when re-evaluating stored designs
ROUND_TRIP_TOL = 1e-12


class DataError(ValueError):
    """A file is missing, malformed, of an unknown version or inconsistent."""


def _jsonable(obj):
    """Convert numpy scalars/arrays, tuples and non-finite floats for JSON."""
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(payload) -> str:
    """Deterministic JSON text (sorted keys, NaN/inf as null)."""
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".partial")
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return path


def write_json(path, payload) -> Path:
    return atomic_write_text(path, dumps(payload))


def read_json(path, expected_format: str | None = None) -> dict:
    """Load a JSON artifact, checking ``format`` and ``format_version`` when asked."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: cannot parse JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{path}: expected a JSON object")
    if expected_format is not None:
        _check_format(payload, expected_format, path)
    return payload


def _check_format(header: dict, expected: str, path) -> None:
    if header.get("format") != expected:
        raise DataError(f"{path}: expected format {expected!r}, found {header.get('format')!r}")
    if header.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported format_version {header.get('format_version')!r} (reader supports {FORMAT_VERSION})"
        )


def table_text(rows: Iterable[Mapping], columns: list[str] | None = None) -> str:
    """CSV text of dict rows; column order from ``columns`` or the first row."""
    rows = list(rows)
    buf = io.StringIO()
    if columns is None:
        columns = list(rows[0]) if rows else []
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return json.dumps(_jsonable(value))
    return str(value)


def header_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def _write_matrix(path, columns: list[str], matrix: np.ndarray, header: dict) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in matrix:
        writer.writerow([repr(float(v)) for v in row])
    # the sidecar goes last: a CSV without a header is never taken for complete
    out = atomic_write_text(path, buf.getvalue())
    write_json(header_path(path), header)
    return out


def _read_matrix(path, expected_format: str) -> tuple[dict, list[str], np.ndarray]:
    path = Path(path)
    header = read_json(header_path(path), expected_format)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            rows = [[float(v) for v in row] for row in reader]
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    except (StopIteration, ValueError) as exc:
        raise DataError(f"{path}: malformed CSV ({exc})") from exc
    if any(len(r) != len(columns) for r in rows):
        raise DataError(f"{path}: ragged rows")
    if len(rows) != header.get("rows"):
        raise DataError(f"{path}: header declares {header.get('rows')} rows, file has {len(rows)}")
    matrix = np.asarray(rows, dtype=float).reshape(len(rows), len(columns))
    return header, columns, matrix


def _columns(d: int, m: int) -> list[str]:
    return [f"x{i}" for i in range(d)] + [f"f{j}" for j in range(m)]


# --------------------------------------------------------------------------
# datasets


def write_dataset(path, data: OfflineDataset, *, config_fingerprint: str = "", extra: dict | None = None) -> Path:
    """Write ``data`` as CSV rows (designs then objectives) plus its header."""
    spec = data.problem
    header = {
        "format": DATASET_FORMAT,
        "format_version": FORMAT_VERSION,
        "family": spec.family,
        "d": spec.d,
        "m": spec.m,
        "shift_level": int(data.shift_level),
        "seed": int(data.seed),
        "pool_fingerprint": data.pool_fingerprint,
        "dataset_fingerprint": data.fingerprint,
        "rows": len(data),
        "config_fingerprint": config_fingerprint,
        **(extra or {}),
    }
    return _write_matrix(path, _columns(spec.d, spec.m), np.hstack([data.designs, data.objectives]), header)


def read_dataset(path, *, verify: bool = True) -> OfflineDataset:
    """Read a dataset file; with ``verify`` re-evaluate designs against stored objectives.

    Raises:
        DataError: missing or malformed files, unknown version, shape or
            fingerprint mismatch, or objectives that do not reproduce.
    """
    header, columns, matrix = _read_matrix(path, DATASET_FORMAT)
    try:
        spec = make_problem(header["family"], header["d"], header["m"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: invalid problem in header ({exc})") from exc
    if columns != _columns(spec.d, spec.m):
        raise DataError(f"{path}: columns do not match d={spec.d}, m={spec.m}")
    designs = np.ascontiguousarray(matrix[:, : spec.d])
    objectives = np.ascontiguousarray(matrix[:, spec.d :])
    if header.get("dataset_fingerprint") and array_fingerprint(designs, objectives) != header["dataset_fingerprint"]:
        raise DataError(f"{path}: content does not match the header fingerprint")
    if verify and len(designs):
        try:
            fresh = evaluate(spec, designs)
        except ValueError as exc:
            raise DataError(f"{path}: stored designs are invalid ({exc})") from exc
        err = float(np.max(np.abs(fresh - objectives)))
        if err > ROUND_TRIP_TOL:
            raise DataError(f"{path}: stored objectives differ from re-evaluation by {err:.3g}")
    return OfflineDataset(
        spec,
        designs,
        objectives,
        shift_level=int(header.get("shift_level", 0)),
        seed=int(header.get("seed", 0)),
        pool_fingerprint=str(header.get("pool_fingerprint", "")),
    )


# --------------------------------------------------------------------------
# solution sets


def write_solutions(
    path, solutions: SolutionSet, problem: ProblemSpec | None = None, *, config_fingerprint: str = "", extra: dict | None = None
) -> Path:
    """Write a solution set; designs are optional."""
    d = 0 if solutions.designs is None else solutions.designs.shape[1]
    header = {
        "format": SOLUTIONS_FORMAT,
        "format_version": FORMAT_VERSION,
        "problem": None if problem is None else problem.to_dict(),
        "d": d,
        "m": solutions.n_obj,
        "rows": len(solutions),
        "config_fingerprint": config_fingerprint,
        **(extra or {}),
    }
    parts = [solutions.objectives] if d == 0 else [solutions.designs, solutions.objectives]
    return _write_matrix(path, _columns(d, solutions.n_obj), np.hstack(parts), header)


def read_solutions(path) -> tuple[SolutionSet, ProblemSpec | None, dict]:
    """Read a solution set and its problem (if recorded) plus the raw header."""
    header, columns, matrix = _read_matrix(path, SOLUTIONS_FORMAT)
    d, m = int(header.get("d", 0)), int(header.get("m", 0))
    if columns != _columns(d, m):
        raise DataError(f"{path}: columns do not match d={d}, m={m}")
    problem = None
    if header.get("problem"):
        p = header["problem"]
        try:
            problem = make_problem(p["family"], p["d"], p["m"])
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: invalid problem in header ({exc})") from exc
    try:
        sols = SolutionSet(matrix[:, d:], matrix[:, :d] if d else None)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return sols, problem, header


def read_points(path) -> tuple[SolutionSet, ProblemSpec | None]:
    """Objectives from either a dataset or a solution file (by header format)."""
    header = read_json(header_path(path))
    if header.get("format") == DATASET_FORMAT:
        data = read_dataset(path)
        return SolutionSet(data.objectives, data.designs), data.problem
    sols, problem, _ = read_solutions(path)
    return sols, problem


# --------------------------------------------------------------------------
# summaries


def write_summary(summary, out_dir, *, config: dict | None = None) -> list[Path]:
    """Write a diagnostics summary: ``summary.json`` plus one CSV per table."""
    out_dir = Path(out_dir)
    payload = {"format": SUMMARY_FORMAT, "format_version": FORMAT_VERSION, **summary.to_dict()}
    if config is not None:
        payload["config"] = config
    paths = [write_json(out_dir / "summary.json", payload)]
    for name, rows in summary.tables().items():
        paths.append(atomic_write_text(out_dir / f"{name}.csv", table_text(rows)))
    return paths


__all__ = [
    "DataError",
    "FORMAT_VERSION",
    "atomic_write_text",
    "dumps",
    "read_dataset",
    "read_json",
    "read_points",
    "read_solutions",
    "table_text",
    "write_dataset",
    "write_json",
    "write_solutions",
    "write_summary",
]
