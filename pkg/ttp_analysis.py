# ttp_analysis.py
"""Time to pattern: the linear prediction ln(w/beta)/alpha, simulated sweeps over
tau and L_x, replicate averaging and trend fits."""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.signal import find_peaks
from scipy.stats import linregress
from tqdm import tqdm

from charts import make_axis, mode_switch_Lx
from dispersion import DEFAULT_TOL, alpha_max
from exceptions import AllCensored, InvalidValue
from kinetics import ModelParams
from seeded_rng import derive_seed
from simulator import Grid, make_sim_config, run

logger = logging.getLogger(__name__)

DEFAULT_BETA = 0.005
DEFAULT_W = 0.01
DEFAULT_REPLICATES = 10
MIN_FIT_POINTS = 3
EXTREMUM_PROMINENCE = 0.03  # fraction of the median |TTP|


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


@dataclass
class TTPSweep:
    axis_name: str
    axis_values: np.ndarray
    fixed: dict
    predicted: np.ndarray                 # NaN where no pattern is predicted
    simulated_eigenmode: np.ndarray       # NaN where not simulated or censored
    simulated_random: list                # per point: replicate TTPs, None when censored
    fit: Optional[LinearFit] = None
    simulated_fit: Optional[LinearFit] = None
    extrema: list = field(default_factory=list)
    mode_switches: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def simulated_random_mean(self) -> np.ndarray:
        means = []
        for ttps in self.simulated_random:
            try:
                means.append(replicate_mean(ttps)[0] if ttps else math.nan)
            except AllCensored:
                means.append(math.nan)
        return np.array(means)

    @property
    def n_censored(self) -> list:
        return [sum(1 for t in ttps if t is None) for ttps in self.simulated_random]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            'axis_value': self.axis_values,
            'predicted': self.predicted,
            'simulated_eigenmode': self.simulated_eigenmode,
            'simulated_random_mean': self.simulated_random_mean,
            'n_censored': self.n_censored,
        })
        n_reps = max((len(t) for t in self.simulated_random), default=0)
        for r in range(n_reps):
            frame[f'replicate_{r}'] = [t[r] if r < len(t) and t[r] is not None else math.nan
                                       for t in self.simulated_random]
        return frame

    def footer_lines(self) -> list:
        lines = [f"axis: {self.axis_name}", f"fixed: {self.fixed}"]
        for label, fit in (('fit', self.fit), ('simulated_fit', self.simulated_fit)):
            if fit is not None:
                lines.append(f"{label}: slope={fit.slope!r}, intercept={fit.intercept!r}, r2={fit.r_squared!r}")
        if self.extrema:
            lines.append(f"extrema: {self.extrema}")
        for switch in self.mode_switches:
            lines.append(f"mode_switch: {switch.at!r} {tuple(switch.mode_before)} -> {tuple(switch.mode_after)}")
        lines.extend(f"note: {n}" for n in self.notes)
        return lines


@dataclass
class TauTrend:
    sweeps: dict          # L_x -> TTPSweep over tau
    slopes: pd.DataFrame  # L_x, slope, intercept, r2


# --- Prediction ---

def ttp_from_alpha(alpha: float, beta: float = DEFAULT_BETA, w: float = DEFAULT_W) -> Optional[float]:
    if not 0 < beta <= w:
        raise InvalidValue(f"need 0 < beta <= w, got beta={beta}, w={w}")
    if not alpha > 0:
        return None
    return math.log(w / beta) / alpha


def predicted_ttp(params: ModelParams, beta: float = DEFAULT_BETA, w: float = DEFAULT_W,
                  tol: float = DEFAULT_TOL) -> Optional[float]:
    """ln(w/beta)/alpha, or None ("no pattern") when alpha <= 0."""
    return ttp_from_alpha(alpha_max(params, tol=tol).alpha, beta, w)


def _predicted_point(params: ModelParams, beta: float, w: float, tol: float):
    spectrum = alpha_max(params, tol=tol)
    ttp = ttp_from_alpha(spectrum.alpha, beta, w)
    return (math.nan if ttp is None else ttp), spectrum.dominant_root


def replicate_mean(ttps: list):
    """(mean of the finite TTPs, number of censored runs)."""
    if not ttps:
        raise InvalidValue("replicate list is empty")
    finite = [t for t in ttps if t is not None]
    if not finite:
        raise AllCensored(f"all {len(ttps)} replicates ended without a pattern")
    return float(np.mean(finite)), len(ttps) - len(finite)


def fit_line(x, y) -> Optional[LinearFit]:
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = np.isfinite(y)
    if keep.sum() < MIN_FIT_POINTS:
        logger.warning(f"Only {int(keep.sum())} finite points; no fit")
        return None
    result = linregress(x[keep], y[keep])
    return LinearFit(slope=float(result.slope), intercept=float(result.intercept),
                     r_squared=float(result.rvalue**2))


def _finite_runs(finite: np.ndarray) -> list:
    idx = np.flatnonzero(finite)
    if idx.size == 0:
        return []
    return np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)


def interior_extrema(x, y, rel_prominence: float = EXTREMUM_PROMINENCE) -> list:
    """x positions of interior local extrema of y, skipping NaN gaps.

    A peak or trough counts only if its prominence reaches rel_prominence times
    the median |y| of the finite samples; ripples on a flat envelope drop out.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    finite = np.isfinite(y)
    if not finite.any():
        return []
    floor = rel_prominence * float(np.median(np.abs(y[finite])))
    found = []
    for run in _finite_runs(finite):
        for signal in (y[run], -y[run]):
            peaks, _ = find_peaks(signal, prominence=floor)
            found.extend(float(x[run[k]]) for k in peaks)
    return sorted(found)


# --- Simulated sweeps ---

def _simulated_ttp(params: ModelParams, ic_kind: str, seed: int, beta: float, w: float,
                   grid: Grid, t_end: float) -> Optional[float]:
    config = make_sim_config(params=params, grid=grid, t_end=t_end, ic_kind=ic_kind, seed=seed,
                             beta=beta, w=w, stop_on_pattern=True)
    return run(config).record.t_pattern


def _sweep(points: list, axis_name: str, axis_values, fixed: dict, replicates: int, master_seed: int,
           simulate: bool, beta: float, w: float, grid: Grid, t_end: float, jobs: int,
           show_progress: bool, tol: float) -> TTPSweep:
    predictions = [_predicted_point(p, beta, w, tol) for p in points]
    predicted = np.array([ttp for ttp, _ in predictions])

    eigenmode = np.full(len(points), math.nan)
    randoms = [[] for _ in points]
    if simulate:
        tasks = [delayed(_simulated_ttp)(p, 'eigenmode', 0, beta, w, grid, t_end)
                 for p, (ttp, _) in zip(points, predictions) if np.isfinite(ttp)]
        eigen_index = [i for i, (ttp, _) in enumerate(predictions) if np.isfinite(ttp)]
        tasks += [delayed(_simulated_ttp)(p, 'random', derive_seed(master_seed, i * replicates + r),
                                          beta, w, grid, t_end)
                  for i, p in enumerate(points) for r in range(replicates)]
        results = Parallel(n_jobs=jobs)(tqdm(tasks, desc=f"ttp-{axis_name}", disable=not show_progress,
                                             leave=False))
        for i, value in zip(eigen_index, results):
            eigenmode[i] = math.nan if value is None else value
        random_results = results[len(eigen_index):]
        randoms = [random_results[i * replicates:(i + 1) * replicates] for i in range(len(points))]
        censored = sum(t is None for reps in randoms for t in reps)
        if censored:
            logger.warning(f"{censored} random-IC replicates ended without a pattern")

    notes = []
    for x, (ttp, lam) in zip(axis_values, predictions):
        if np.isfinite(ttp) and abs(lam.imag) > 0:
            notes.append(f"dominant root complex at {axis_name}={x:g}: simulated crossing may lead or lag "
                         f"by up to one period {2 * math.pi / abs(lam.imag):.4g}")

    return TTPSweep(axis_name=axis_name, axis_values=np.asarray(axis_values, dtype=float), fixed=fixed,
                    predicted=predicted, simulated_eigenmode=eigenmode, simulated_random=randoms,
                    notes=notes)


def ttp_vs_tau(params_template: ModelParams, tau_samples, Lx_list, replicates: int = DEFAULT_REPLICATES,
               master_seed: int = 0, simulate: bool = True, beta: float = DEFAULT_BETA, w: float = DEFAULT_W,
               grid: Optional[Grid] = None, t_end: float = 500.0, jobs: int = 1, show_progress: bool = False,
               tol: float = DEFAULT_TOL) -> TauTrend:
    """TTP against tau for each L_x, with a linear fit per L_x and the slope table."""
    tau_samples = np.asarray(tau_samples, dtype=float)
    if len(tau_samples) < MIN_FIT_POINTS:
        raise InvalidValue(f"need at least {MIN_FIT_POINTS} tau samples")
    grid = grid or Grid()
    sweeps, rows = {}, []
    for lx in Lx_list:
        points = [params_template.replace(L_x=float(lx), tau=float(t)) for t in tau_samples]
        sweep = _sweep(points, 'tau', tau_samples, {'L_x': float(lx)}, replicates, master_seed, simulate,
                       beta, w, grid, t_end, jobs, show_progress, tol)
        sweep.fit = fit_line(tau_samples, sweep.predicted)
        sweep.simulated_fit = fit_line(tau_samples, sweep.simulated_eigenmode) if simulate else None
        sweeps[float(lx)] = sweep
        if sweep.fit is not None:
            rows.append({'Lx': float(lx), 'slope': sweep.fit.slope, 'intercept': sweep.fit.intercept,
                         'r2': sweep.fit.r_squared})
            logger.info(f"L_x={lx}: TTP slope {sweep.fit.slope:.4f}, R^2 {sweep.fit.r_squared:.4f}")
    return TauTrend(sweeps=sweeps, slopes=pd.DataFrame(rows, columns=['Lx', 'slope', 'intercept', 'r2']))


def ttp_vs_Lx(params_template: ModelParams, Lx_samples, tau_list, replicates: int = DEFAULT_REPLICATES,
              master_seed: int = 0, simulate: bool = True, find_switches: bool = True,
              beta: float = DEFAULT_BETA, w: float = DEFAULT_W, grid: Optional[Grid] = None,
              t_end: float = 500.0, jobs: int = 1, show_progress: bool = False,
              tol: float = DEFAULT_TOL) -> dict:
    """TTP against L_x for each tau, with interior extrema and dominant-mode switches."""
    Lx_samples = np.asarray(Lx_samples, dtype=float)
    if Lx_samples.min() < 0.05:
        raise InvalidValue("L_x samples must be at least 0.05")
    grid = grid or Grid()
    sweeps = {}
    for tau in tau_list:
        points = [params_template.replace(L_x=float(lx), tau=float(tau)) for lx in Lx_samples]
        sweep = _sweep(points, 'Lx', Lx_samples, {'tau': float(tau)}, replicates, master_seed, simulate,
                       beta, w, grid, t_end, jobs, show_progress, tol)
        sweep.extrema = interior_extrema(Lx_samples, sweep.predicted)
        if find_switches and len(Lx_samples) >= 2:
            axis = make_axis('L_x', float(Lx_samples.min()), float(Lx_samples.max()), len(Lx_samples))
            sweep.mode_switches = mode_switch_Lx(params_template.replace(tau=float(tau)), axis,
                                                 jobs=jobs, tol=tol)
        sweeps[float(tau)] = sweep
        logger.info(f"tau={tau}: {len(sweep.extrema)} interior extrema, {len(sweep.mode_switches)} mode switches")
    return sweeps
