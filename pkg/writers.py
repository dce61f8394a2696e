# writers.py
"""Output files: chart/sweep CSV, contour polylines, 16-bit PGM snapshots,
8-bit PPM heatmaps and the key = value parameter sidecars."""
import logging
import os

import numpy as np
from configobj import ConfigObj

from charts import ModeCurves, ScalarChart
from exceptions import IoFailure

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
PGM_MAXVAL = 65535
NAN_COLOR = (0, 0, 0)


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _write_text(path: str, text: str, mode: str = 'w'):
    try:
        _ensure_parent(path)
        with open(path, mode, encoding='utf-8', newline='\n') as f:
            f.write(text)
    except OSError as e:
        raise IoFailure(f"Could not write {path}: {e}") from e


def _write_bytes(path: str, payload: bytes):
    try:
        _ensure_parent(path)
        with open(path, 'wb') as f:
            f.write(payload)
    except OSError as e:
        raise IoFailure(f"Could not write {path}: {e}") from e


def _format_row(values) -> str:
    return ','.join(FLOAT_FORMAT % v for v in values)


# --- CSV ---

def write_csv(result, path: str) -> str:
    """Write a ScalarChart, ModeCurves or sweep (anything with to_frame())."""
    if isinstance(result, ScalarChart):
        y_name = result.y_axis.name if result.y_axis else ''
        rows = result.values if result.values.ndim == 2 else result.values[None, :]
        lines = [f"# axes: {result.x_axis.name},{y_name}"] + [_format_row(r) for r in rows]
        _write_text(path, '\n'.join(lines) + '\n')
    elif isinstance(result, ModeCurves):
        labels = [f"alpha_{m.k_x}_{m.k_y}" for m in result.curves]
        lines = [f"# axes: {result.x_axis.name},mode",
                 ','.join([result.x_axis.name] + labels)]
        columns = [result.x_axis.points()] + list(result.curves.values())
        lines += [_format_row(r) for r in np.column_stack(columns)]
        _write_text(path, '\n'.join(lines) + '\n')
    elif hasattr(result, 'to_frame'):
        frame = result.to_frame()
        try:
            _ensure_parent(path)
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='none')
        except OSError as e:
            raise IoFailure(f"Could not write {path}: {e}") from e
        footer = result.footer_lines() if hasattr(result, 'footer_lines') else []
        if footer:
            _write_text(path, ''.join(f"# {line}\n" for line in footer), mode='a')
    else:
        raise IoFailure(f"Don't know how to write {type(result).__name__} as CSV")
    logger.info(f"Wrote {path}")
    return path


def read_chart_csv(path: str) -> np.ndarray:
    """Values of a ScalarChart CSV, one array row per grid row."""
    try:
        return np.loadtxt(path, delimiter=',', comments='#', ndmin=2)
    except OSError as e:
        raise IoFailure(f"Could not read {path}: {e}") from e


def write_contours_csv(polylines: list, path: str) -> str:
    """x,y pairs; polylines separated by a blank line."""
    blocks = ['\n'.join(_format_row(point) for point in line) for line in polylines]
    _write_text(path, '\n\n'.join(blocks) + ('\n' if blocks else ''))
    return path


def read_contours_csv(path: str) -> list:
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise IoFailure(f"Could not read {path}: {e}") from e
    blocks = [b for b in text.split('\n\n') if b.strip()]
    return [np.array([[float(v) for v in row.split(',')] for row in b.strip().splitlines()]) for b in blocks]


# --- PGM ---

def encode_pgm16(field: np.ndarray):
    """P5 bytes with values mapped linearly from [min, max] onto [0, 65535].

    Returns (payload, lo, hi).
    """
    field = np.asarray(field, dtype=float)
    lo, hi = float(field.min()), float(field.max())
    if hi > lo:
        scaled = np.rint((field - lo) / (hi - lo) * PGM_MAXVAL)
    else:
        scaled = np.zeros_like(field)
    height, width = field.shape
    header = f"P5\n{width} {height}\n{PGM_MAXVAL}\n".encode('ascii')
    return header + scaled.astype('>u2').tobytes(), lo, hi


def write_pgm16(field: np.ndarray, out_dir: str, run_id: str, field_name: str, step: int) -> str:
    """Write <run-id>_<field>_<step>.pgm and record its mapping in <run-id>_pgm_mapping.csv."""
    payload, lo, hi = encode_pgm16(field)
    filename = f"{run_id}_{field_name}_{step}.pgm"
    path = os.path.join(out_dir, filename)
    _write_bytes(path, payload)

    mapping = os.path.join(out_dir, f"{run_id}_pgm_mapping.csv")
    header = '' if os.path.exists(mapping) else 'file,lo,hi\n'
    _write_text(mapping, header + f"{filename},{FLOAT_FORMAT % lo},{FLOAT_FORMAT % hi}\n", mode='a')
    return path


# --- PPM ---

def diverging_color(t: np.ndarray) -> np.ndarray:
    """blue (t=0) -> white (t=0.5) -> red (t=1), as uint8 RGB."""
    t = np.clip(t, 0.0, 1.0)
    low = t < 0.5
    rgb = np.empty(t.shape + (3,))
    rgb[..., 0] = np.where(low, 255.0 * 2.0 * t, 255.0)
    rgb[..., 1] = np.where(low, 255.0 * 2.0 * t, 255.0 * (2.0 - 2.0 * t))
    rgb[..., 2] = np.where(low, 255.0, 255.0 * (2.0 - 2.0 * t))
    return np.rint(rgb).astype(np.uint8)


def encode_ppm(values: np.ndarray, lo: float = None, hi: float = None) -> bytes:
    """P6 bytes; [lo, hi] defaults to a range symmetric about 0. Highest row index on top."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    finite = values[np.isfinite(values)]
    if lo is None or hi is None:
        bound = float(np.abs(finite).max()) if finite.size else 0.0
        lo, hi = -bound, bound
    if hi > lo:
        t = (values - lo) / (hi - lo)
    else:
        t = np.full(values.shape, 0.5)
    rgb = diverging_color(np.nan_to_num(t, nan=0.5))
    rgb[~np.isfinite(values)] = NAN_COLOR
    rgb = rgb[::-1]
    height, width = values.shape
    return f"P6\n{width} {height}\n255\n".encode('ascii') + rgb.tobytes()


def write_ppm(chart: ScalarChart, path: str, lo: float = None, hi: float = None) -> str:
    _write_bytes(path, encode_ppm(chart.values, lo, hi))
    logger.info(f"Wrote {path}")
    return path


# --- Sidecars ---

def write_params_sidecar(output_path: str, settings: dict, comments: list = ()) -> str:
    """<name>.params.txt next to an output, readable back as a config file."""
    stem, _ = os.path.splitext(output_path)
    path = f"{stem}.params.txt"
    sidecar = ConfigObj(encoding='utf-8', list_values=False)
    sidecar.filename = path
    sidecar.initial_comment = [f"# {line}" for line in comments]
    for key, value in settings.items():
        if value is not None:
            sidecar[key] = str(value)
    try:
        _ensure_parent(path)
        sidecar.write()
    except OSError as e:
        raise IoFailure(f"Could not write {path}: {e}") from e
    return path
