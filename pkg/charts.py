# charts.py
"""Stability charts: Turing space, alpha against tau and L_x, the (L_x, tau)
heatmap, critical delays and mode switches.

Each cell is an independent alpha_max evaluation; cells fan out through joblib
and are put back in index order, so a chart never depends on the worker count.
"""
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

import contourpy
import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.optimize import brentq
from tqdm import tqdm

from dispersion import (DEFAULT_TOL, ModeIndex, alpha_max, coeffs, mode_root,
                        verify_root)
from exceptions import InvalidValue, NoConvergence, NoSignChange, RootCountUnstable, invalid_value_from
from kinetics import ModelParams

logger = logging.getLogger(__name__)

# --- Sampling defaults ---
DEFAULTS = {
    'CURVE_POINTS': 201,
    'HEATMAP_POINTS': 101,
    'MIN_LENGTH': 0.05,          # d/L^2 diverges as L -> 0
    'CRITICAL_TAU_STEP': 0.01,
    'CRITICAL_TAU_XTOL': 1e-4,
    'SWITCH_LX_STEP': 1e-3,
    'SWITCH_LX_TOL': 1e-5,
    'SWITCH_TAU_STEP': 1e-2,
    'SWITCH_TAU_TOL': 1e-5,
    'REAL_ROOT_IMAG': 1e-9,      # |Im lambda| below this counts as a real root
}


class Axis(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    name: str = Field(description="Parameter swept along this axis")
    min: float
    max: float
    count: int = Field(default=DEFAULTS['CURVE_POINTS'], ge=2)

    @model_validator(mode='after')
    def _check_order(self):
        if not self.min < self.max:
            raise ValueError(f"axis '{self.name}' needs min < max, got [{self.min}, {self.max}]")
        return self

    def points(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


def make_axis(name: str, lo: float, hi: float, count: int = DEFAULTS['CURVE_POINTS']) -> Axis:
    try:
        return Axis(name=name, min=lo, max=hi, count=count)
    except ValidationError as e:
        raise invalid_value_from(e, f"axis '{name}'") from e


@dataclass
class ScalarChart:
    """alpha over one axis (curve) or two axes (heatmap, rows follow y_axis)."""

    x_axis: Axis
    values: np.ndarray
    y_axis: Optional[Axis] = None
    meta: dict = field(default_factory=dict)
    contours: dict = field(default_factory=dict)   # name -> list of (k, 2) polylines
    layers: dict = field(default_factory=dict)     # name -> array shaped like values

    def __post_init__(self):
        expected = (self.y_axis.count, self.x_axis.count) if self.y_axis else (self.x_axis.count,)
        if self.values.shape != expected:
            raise InvalidValue(f"chart values have shape {self.values.shape}, expected {expected}")
        for name, layer in self.layers.items():
            if layer.shape != expected:
                raise InvalidValue(f"layer '{name}' has shape {layer.shape}, expected {expected}")


@dataclass
class ModeCurves:
    """alpha_{k_x,k_y} against L_x, one curve per mode."""

    x_axis: Axis
    curves: dict                                   # ModeIndex -> array over x_axis
    collisions: dict = field(default_factory=dict)  # ModeIndex -> L_x where the root turns complex
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ModeSwitch:
    at: float
    mode_before: ModeIndex
    mode_after: ModeIndex


@dataclass(frozen=True)
class _CellResult:
    alpha: float
    mode: Optional[ModeIndex]
    imag: float = math.nan
    audit_failures: int = 0
    alpha_00: float = math.nan
    alpha_inhomogeneous: float = math.nan   # max over modes other than (0, 0)


# --- Cell evaluation ---

def _audit_roots(params: ModelParams, roots: dict, tol: float) -> int:
    failures = 0
    for mode, lam in roots.items():
        if not verify_root(coeffs(params, mode), params.tau, lam, tol):
            failures += 1
            logger.warning(f"Root audit failed for mode {tuple(mode)} at lambda={lam:.10g} "
                           f"(a={params.a}, b={params.b}, L_x={params.L_x}, tau={params.tau})")
    return failures


def _alpha_cell(params: ModelParams, audit: bool, tol: float, k_cap=None) -> _CellResult:
    try:
        spectrum = alpha_max(params, k_cap=k_cap, tol=tol)
    except (NoConvergence, RootCountUnstable) as e:
        logger.warning(f"alpha_max failed at {params.model_dump()}: {e}")
        return _CellResult(alpha=math.nan, mode=None)
    failures = _audit_roots(params, spectrum.roots, tol) if audit else 0
    others = [v for m, v in spectrum.per_mode.items() if m != (0, 0)]
    return _CellResult(alpha=spectrum.alpha, mode=spectrum.argmax_mode,
                       imag=spectrum.dominant_root.imag, audit_failures=failures,
                       alpha_00=spectrum.per_mode.get(ModeIndex(0, 0), math.nan),
                       alpha_inhomogeneous=max(others) if others else math.nan)


def _mode_cell(params: ModelParams, mode: ModeIndex, audit: bool, tol: float) -> _CellResult:
    try:
        lam = mode_root(params, mode, tol).lam
    except (NoConvergence, RootCountUnstable) as e:
        logger.warning(f"Root solver failed for mode {tuple(mode)} at {params.model_dump()}: {e}")
        return _CellResult(alpha=math.nan, mode=mode)
    failures = _audit_roots(params, {mode: lam}, tol) if audit else 0
    return _CellResult(alpha=lam.real, mode=mode, imag=lam.imag, audit_failures=failures)


def _run_cells(tasks: list, jobs: int, show_progress: bool, desc: str) -> list:
    """Evaluate delayed tasks; results come back in task order."""
    iterator = tqdm(tasks, desc=desc, disable=not show_progress, leave=False)
    return Parallel(n_jobs=jobs)(iterator)


def _chart_meta(params_template: ModelParams, audit: bool, cells: list, **extra) -> dict:
    meta = {
        'params': params_template.model_dump(),
        'generated_at': datetime.now().isoformat(),
        'determinism': 'no randomness; values depend only on the inputs',
        'failed_cells': sum(1 for c in cells if math.isnan(c.alpha)),
    }
    if audit:
        meta['audit_failures'] = sum(c.audit_failures for c in cells)
    meta.update(extra)
    return meta


# --- Contours ---

def zero_contours(values: np.ndarray, xs: np.ndarray, ys: np.ndarray, level: float = 0.0) -> list:
    """Marching-squares polylines of values == level; NaN cells are left out."""
    z = np.ma.masked_invalid(values)
    if z.count() == 0:
        return []
    generator = contourpy.contour_generator(xs, ys, z, line_type=contourpy.LineType.Separate)
    return [np.asarray(line) for line in generator.lines(level) if len(line) >= 2]


def _modes_along(polylines: list, modes: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> list:
    """Argmax-mode changes met while walking each polyline (nearest grid cell)."""
    changes = []
    for line in polylines:
        previous = None
        for x, y in line:
            i = int(np.abs(ys - y).argmin())
            j = int(np.abs(xs - x).argmin())
            mode = modes[i][j]
            if mode is None:
                continue
            if previous is not None and mode != previous:
                changes.append({'a': float(x), 'b': float(y),
                                'mode_before': tuple(previous), 'mode_after': tuple(mode)})
            previous = mode
    return changes


# --- Charts ---

def turing_space(params_template: ModelParams, a_range: Axis, b_range: Axis, jobs: int = 1,
                 show_progress: bool = False, audit: bool = False, tol: float = DEFAULT_TOL) -> ScalarChart:
    """alpha over the (a, b) plane; the 'alpha' contour traces alpha without mode (0, 0).

    The 'alpha' contour is the diffusion-driven boundary: the zero set of the
    largest growth rate among modes other than (0, 0), kept in
    layers['alpha_inhomogeneous']. The 'alpha_00' contour is the zero set of the
    homogeneous mode alone (layers['alpha_00']). values holds the full alpha.
    """
    if a_range.min <= 0 or b_range.min <= 0:
        raise InvalidValue("turing_space needs positive a and b ranges")
    xs, ys = a_range.points(), b_range.points()
    grid = [params_template.replace(a=float(a), b=float(b)) for b in ys for a in xs]
    cells = _run_cells([delayed(_alpha_cell)(p, audit, tol) for p in grid],
                       jobs, show_progress, "turing-space")
    shape = (b_range.count, a_range.count)
    values = np.array([c.alpha for c in cells]).reshape(shape)
    homogeneous = np.array([c.alpha_00 for c in cells]).reshape(shape)
    inhomogeneous = np.array([c.alpha_inhomogeneous for c in cells]).reshape(shape)
    modes = [[cells[i * a_range.count + j].mode for j in range(a_range.count)] for i in range(b_range.count)]

    alpha_zero = zero_contours(inhomogeneous, xs, ys)
    chart = ScalarChart(
        x_axis=a_range, y_axis=b_range, values=values,
        meta=_chart_meta(params_template, audit, cells,
                         dominant_mode_changes=_modes_along(alpha_zero, modes, xs, ys)),
        contours={'alpha': alpha_zero, 'alpha_00': zero_contours(homogeneous, xs, ys)},
        layers={'alpha_inhomogeneous': inhomogeneous, 'alpha_00': homogeneous},
    )
    logger.info(f"turing_space: {values.size} cells, {len(alpha_zero)} alpha=0 polylines")
    return chart


def alpha_vs_tau(params_template: ModelParams, tau_range: Axis, jobs: int = 1,
                 show_progress: bool = False, audit: bool = False, tol: float = DEFAULT_TOL) -> ScalarChart:
    if tau_range.min < 0:
        raise InvalidValue("tau range must lie in [0, inf)")
    grid = [params_template.replace(tau=float(t)) for t in tau_range.points()]
    cells = _run_cells([delayed(_alpha_cell)(p, audit, tol) for p in grid], jobs, show_progress, "alpha-tau")
    return ScalarChart(x_axis=tau_range, values=np.array([c.alpha for c in cells]),
                       meta=_chart_meta(params_template, audit, cells,
                                        argmax_modes=[tuple(c.mode) if c.mode else None for c in cells]))


def _collision_points(xs: np.ndarray, imag: np.ndarray) -> list:
    """L_x midpoints where the rightmost root turns from real to complex."""
    is_real = np.abs(imag) < DEFAULTS['REAL_ROOT_IMAG']
    points = []
    for k in range(len(xs) - 1):
        if np.isnan(imag[k]) or np.isnan(imag[k + 1]):
            continue
        if is_real[k] != is_real[k + 1]:
            points.append(float(0.5 * (xs[k] + xs[k + 1])))
    return points


def alpha_vs_Lx(params_template: ModelParams, mode_list: list, Lx_range: Axis, jobs: int = 1,
                show_progress: bool = False, audit: bool = False, tol: float = DEFAULT_TOL) -> ModeCurves:
    if Lx_range.min <= 0:
        raise InvalidValue("L_x range must be strictly positive")
    xs = Lx_range.points()
    modes = [ModeIndex(*m) for m in mode_list]
    tasks = [delayed(_mode_cell)(params_template.replace(L_x=float(x)), mode, audit, tol)
             for mode in modes for x in xs]
    cells = _run_cells(tasks, jobs, show_progress, "alpha-lx")

    curves, collisions = {}, {}
    for n, mode in enumerate(modes):
        block = cells[n * len(xs):(n + 1) * len(xs)]
        curves[mode] = np.array([c.alpha for c in block])
        collisions[mode] = _collision_points(xs, np.array([c.imag for c in block]))
    return ModeCurves(x_axis=Lx_range, curves=curves, collisions=collisions,
                      meta=_chart_meta(params_template, audit, cells))


def heatmap_Lx_tau(params_template: ModelParams, Lx_range: Axis, tau_range: Axis, jobs: int = 1,
                   show_progress: bool = False, audit: bool = False, tol: float = DEFAULT_TOL) -> ScalarChart:
    if Lx_range.min < DEFAULTS['MIN_LENGTH']:
        raise InvalidValue(f"L_x grid must start at or above {DEFAULTS['MIN_LENGTH']}")
    if tau_range.min < 0:
        raise InvalidValue("tau range must lie in [0, inf)")
    xs, ys = Lx_range.points(), tau_range.points()
    grid = [params_template.replace(L_x=float(x), tau=float(t)) for t in ys for x in xs]
    cells = _run_cells([delayed(_alpha_cell)(p, audit, tol) for p in grid], jobs, show_progress, "heatmap")
    values = np.array([c.alpha for c in cells]).reshape(tau_range.count, Lx_range.count)
    return ScalarChart(x_axis=Lx_range, y_axis=tau_range, values=values,
                       meta=_chart_meta(params_template, audit, cells))


# --- Critical values ---

def critical_tau(params_template: ModelParams, tau_hi: float, jobs: int = 1,
                 show_progress: bool = False, tol: float = DEFAULT_TOL) -> float:
    """Smallest delay at which alpha changes sign on [0, tau_hi]."""
    step = DEFAULTS['CRITICAL_TAU_STEP']
    taus = np.linspace(0.0, tau_hi, max(2, int(round(tau_hi / step)) + 1))
    cells = _run_cells([delayed(_alpha_cell)(params_template.replace(tau=float(t)), False, tol) for t in taus],
                       jobs, show_progress, "critical-tau")
    alphas = np.array([c.alpha for c in cells])
    if np.isnan(alphas[0]) or np.isnan(alphas[-1]) or np.sign(alphas[0]) == np.sign(alphas[-1]):
        raise NoSignChange(f"alpha(0)={alphas[0]:.6g} and alpha({tau_hi})={alphas[-1]:.6g} share a sign")

    for k in range(len(taus) - 1):
        lo, hi = alphas[k], alphas[k + 1]
        if np.isnan(lo) or np.isnan(hi):
            continue
        if lo == 0.0:
            return float(taus[k])
        if np.sign(lo) != np.sign(hi):
            def alpha_at(t):
                return alpha_max(params_template.replace(tau=float(t)), tol=tol).alpha
            found = brentq(alpha_at, taus[k], taus[k + 1], xtol=DEFAULTS['CRITICAL_TAU_XTOL'])
            logger.info(f"critical_tau: sign change at tau={found:.5f}")
            return float(found)
    raise NoSignChange("pre-scan found no bracket between solver failures")


def _argmax_mode(params: ModelParams, tol: float, k_cap):
    return _alpha_cell(params, False, tol, k_cap).mode


def _mode_switches(params_template: ModelParams, name: str, values: np.ndarray, refine_tol: float,
                   tol: float, k_cap, jobs: int, show_progress: bool) -> list:
    cells = _run_cells([delayed(_alpha_cell)(params_template.replace(**{name: float(v)}), False, tol, k_cap)
                        for v in values], jobs, show_progress, f"mode-switch-{name}")
    switches = []
    for k in range(len(values) - 1):
        before, after = cells[k].mode, cells[k + 1].mode
        if before is None or after is None or before == after:
            continue
        lo, hi = float(values[k]), float(values[k + 1])
        while hi - lo > refine_tol:
            mid = 0.5 * (lo + hi)
            mode = _argmax_mode(params_template.replace(**{name: mid}), tol, k_cap)
            if mode == before:
                lo = mid
            elif mode == after:
                hi = mid
            else:
                break  # a third mode inside the bracket; keep the current estimate
        switches.append(ModeSwitch(at=0.5 * (lo + hi), mode_before=before, mode_after=after))
        logger.info(f"Mode switch along {name} at {0.5 * (lo + hi):.5f}: {tuple(before)} -> {tuple(after)}")
    return switches


def _scan_values(axis: Axis, step: float) -> np.ndarray:
    count = max(axis.count, int(math.ceil((axis.max - axis.min) / step)) + 1)
    return np.linspace(axis.min, axis.max, count)


def mode_switch_Lx(params_template: ModelParams, Lx_range: Axis, k_cap=None, jobs: int = 1,
                   show_progress: bool = False, tol: float = DEFAULT_TOL) -> list:
    """Every change of the dominant mode along L_x."""
    if Lx_range.min <= 0:
        raise InvalidValue("L_x range must be strictly positive")
    return _mode_switches(params_template, 'L_x', _scan_values(Lx_range, DEFAULTS['SWITCH_LX_STEP']),
                          DEFAULTS['SWITCH_LX_TOL'], tol, k_cap, jobs, show_progress)


def mode_switch_tau(params_template: ModelParams, tau_range: Axis, k_cap=None, jobs: int = 1,
                    show_progress: bool = False, tol: float = DEFAULT_TOL) -> list:
    """Every change of the dominant mode along tau."""
    if tau_range.min < 0:
        raise InvalidValue("tau range must lie in [0, inf)")
    return _mode_switches(params_template, 'tau', _scan_values(tau_range, DEFAULTS['SWITCH_TAU_STEP']),
                          DEFAULTS['SWITCH_TAU_TOL'], tol, k_cap, jobs, show_progress)
