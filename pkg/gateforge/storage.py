import csv
import json
import math
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from loguru import logger

from .model import ControlField, DimensionError, SystemModel, TargetGate, TimeGrid, ensure_valid

TRACE_COLUMNS = ["iter", "re_tau", "abs_tau", "fidelity", "eta", "fluence", "update_norm", "wall_ms"]
RESIDUAL_COLUMNS = ["time", "residual_evolution", "residual_s2s"]
TRAJECTORY_COLUMNS = ["step", "time", "row_index", "component_index", "re", "im"]


class ModelFileError(Exception):
    pass


def fmt(x) -> str:
    return format(float(x), ".17g")


def _read_json(path: Path, what: str):
    if not path.exists():
        raise ModelFileError(f"{what} not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ModelFileError(f"{path}: cannot read {what}: {exc}") from exc


def _require(data: dict, key: str, path: str):
    if not isinstance(data, dict) or key not in data:
        raise ModelFileError(f"missing field '{path}{key}'")
    return data[key]


def _real(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFileError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    number = _real(value, path)
    if not number.is_integer():
        raise ModelFileError(f"{path}: expected an integer, got {value!r}")
    return int(number)


def _complex(value, path: str) -> complex:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(float(value), 0.0)
    if isinstance(value, list) and len(value) == 2:
        return complex(_real(value[0], f"{path}[0]"), _real(value[1], f"{path}[1]"))
    raise ModelFileError(f"{path}: expected a [re, im] pair, got {value!r}")


def _complex_matrix(value, rows: int, path: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise ModelFileError(f"{path}: expected {rows} rows")
    out = []
    for j, row in enumerate(value):
        if not isinstance(row, list) or len(row) != len(value[0]):
            raise ModelFileError(f"{path}[{j}]: rows must have equal length")
        out.append([_complex(z, f"{path}[{j}][{k}]") for k, z in enumerate(row)])
    return np.array(out, dtype=complex)


def parse_model(data: dict) -> Tuple[SystemModel, TargetGate, TimeGrid]:
    if not isinstance(data, dict):
        raise ModelFileError("model file must hold a JSON object")
    m = _integer(_require(data, "M", ""), "M")
    n = _integer(_require(data, "N", ""), "N")
    energies = _require(data, "energies", "")
    if not isinstance(energies, list):
        raise ModelFileError("energies: expected an array")
    e = [_real(x, f"energies[{k}]") for k, x in enumerate(energies)]
    if len(e) != m:
        raise ModelFileError(f"energies: expected {m} values (M), got {len(e)}")
    mu = _complex_matrix(_require(data, "mu", ""), m, "mu")
    target_raw = _require(data, "target", "")
    if not isinstance(target_raw, list):
        raise ModelFileError("target: expected an array")
    block = _complex_matrix(target_raw, len(target_raw), "target")
    grid_raw = _require(data, "grid", "")
    try:
        grid = TimeGrid(horizon=_real(_require(grid_raw, "T", "grid."), "grid.T"), step_count=_integer(_require(grid_raw, "steps", "grid."), "grid.steps"))
    except DimensionError as exc:
        raise ModelFileError(f"grid: {exc}") from exc
    model = SystemModel.create(e, mu, relevant_dim=n)
    target = TargetGate.create(block) if block.size else None
    if target is None:
        raise ModelFileError("target: empty matrix")
    if target.dim != n:
        raise DimensionError(f"target is {target.dim}x{target.dim} but N={n}")
    ensure_valid(model, target)
    return model, target, grid


def load_model(path) -> Tuple[SystemModel, TargetGate, TimeGrid]:
    path = Path(path)
    data = _read_json(path, "model file")
    try:
        model, target, grid = parse_model(data)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from exc
    logger.debug(f"Loaded {path}: M={model.level_count}, N={model.relevant_dim}, T={grid.horizon}, n={grid.step_count}")
    return model, target, grid


def model_to_dict(model: SystemModel, target: TargetGate, grid: TimeGrid) -> dict:
    data = model.to_dict()
    data["target"] = target.to_list()
    data["grid"] = grid.to_dict()
    return data


def save_model(path, model: SystemModel, target: TargetGate, grid: TimeGrid) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model, target, grid), indent=2), encoding="utf-8")
    return path


def save_field(path, field: ControlField, grid: TimeGrid) -> Path:
    path = Path(path)
    payload = {"T": grid.horizon, "steps": grid.step_count, "dt": grid.dt, "samples": [float(x) for x in field.samples]}
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def load_field(path, grid: TimeGrid = None) -> ControlField:
    path = Path(path)
    data = _read_json(path, "field file")
    if isinstance(data, list):
        samples = data
    else:
        samples = _require(data, "samples", "")
        if grid is not None and "steps" in data and _integer(data["steps"], "steps") != grid.step_count:
            raise ModelFileError(f"{path}: field has {data['steps']} steps, model grid has {grid.step_count}")
        if grid is not None and "T" in data and not math.isclose(float(data["T"]), grid.horizon, rel_tol=1e-12):
            raise ModelFileError(f"{path}: field horizon {data['T']} differs from model T={grid.horizon}")
    values = [_real(x, f"samples[{j}]") for j, x in enumerate(samples)]
    try:
        return ControlField.create(values, grid)
    except (DimensionError, ValueError) as exc:
        raise ModelFileError(f"{path}: {exc}") from exc


def _write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def write_trace_csv(path, records) -> Path:
    rows = (
        [r.iteration, fmt(r.re_tau), fmt(r.abs_tau), fmt(r.fidelity), fmt(r.eta), fmt(r.fluence), fmt(r.update_norm), fmt(r.wall_ms)]
        for r in records
    )
    return _write_csv(path, TRACE_COLUMNS, rows)


def write_residuals_csv(path, times, residual_evolution, residual_s2s) -> Path:
    rows = ([fmt(t), fmt(a), fmt(b)] for t, a, b in zip(times, residual_evolution, residual_s2s))
    return _write_csv(path, RESIDUAL_COLUMNS, rows)


def write_trajectory_csv(path, rows: np.ndarray, times) -> Path:
    """rows has shape (n+1, N, M)."""

    def _cells():
        for step, t in enumerate(times):
            for k, vec in enumerate(rows[step]):
                for c, z in enumerate(vec):
                    yield [step, fmt(t), k + 1, c + 1, fmt(z.real), fmt(z.imag)]

    return _write_csv(path, TRAJECTORY_COLUMNS, _cells())


def write_records_csv(path, records: List[dict]) -> Path:
    if not records:
        return _write_csv(path, [], [])
    header = list(records[0].keys())
    rows = ([fmt(r[h]) if isinstance(r[h], float) else r[h] for h in header] for r in records)
    return _write_csv(path, header, rows)


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, default=_json_default), encoding="utf-8")
    return path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"cannot serialize {type(value).__name__}")
