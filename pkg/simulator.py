# simulator.py
"""Explicit finite-difference integration of the delayed LI system on the unit
square with zero-flux boundaries.

The delay enters only through 3 û^2 v̂ in the activator equation, so the history
ring stores that product, one n x m slot per step over [t - tau, t].
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from tqdm import tqdm

from dispersion import alpha_max, coeffs, eigen_pair
from exceptions import SimulationDiverged, invalid_value_from
from kinetics import ModelParams, SteadyState, reaction_rates, steady_state
from pattern_analyzer import classify_pattern
from seeded_rng import SeededRng
from writers import write_pgm16

logger = logging.getLogger(__name__)

CFL_SAFETY = 0.9


class Grid(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(default=101, ge=3, description="Points along x, x_1 = 0 and x_n = 1")
    m: int = Field(default=101, ge=3, description="Points along y, y_1 = 0 and y_m = 1")

    @property
    def dx(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def dy(self) -> float:
        return 1.0 / (self.m - 1)

    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    def y(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m)


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    params: ModelParams = Field(default_factory=ModelParams)
    grid: Grid = Field(default_factory=Grid)
    t_end: float = Field(default=500.0, gt=0)
    snapshot_stride: int = Field(default=0, ge=0, description="Steps between saved frames; 0 keeps only the final frame")
    snapshot_times: tuple = Field(default=(), description="Extra absolute times to save")
    ic_kind: Literal['random', 'eigenmode'] = 'random'
    seed: int = Field(default=0, ge=0, lt=2**64)
    beta: float = Field(default=0.005, ge=0, description="Sup-norm of the initial perturbation")
    w: float = Field(default=0.01, gt=0, description="Pattern detection threshold")
    stop_on_pattern: bool = False
    k_cap: Optional[tuple] = Field(default=None, description="Mode caps for the eigenmode IC")

    @model_validator(mode='after')
    def _check_threshold(self):
        if not self.beta < self.w:
            raise ValueError(f"beta ({self.beta}) must be below w ({self.w})")
        return self


def make_sim_config(**values) -> SimConfig:
    try:
        return SimConfig(**values)
    except ValidationError as e:
        raise invalid_value_from(e, "simulation settings") from e


@dataclass
class FieldPair:
    u: np.ndarray
    v: np.ndarray

    def deviation(self, ss: SteadyState) -> float:
        """Sup-norm over both fields of |field - steady value|."""
        return float(max(np.abs(self.u - ss.u_star).max(), np.abs(self.v - ss.v_star).max()))

    def delayed_term(self) -> np.ndarray:
        return self.u * self.u * self.v


@dataclass
class HistoryBuffer:
    """Ring of D + 1 slots of û^2 v̂; the slot D behind head is time t - tau."""

    depth: int
    ring: np.ndarray          # (depth + 1, n, m)
    current: FieldPair        # state at the head time
    head: int = 0

    @classmethod
    def constant(cls, state: FieldPair, depth: int) -> "HistoryBuffer":
        ring = np.broadcast_to(state.delayed_term(), (depth + 1,) + state.u.shape).copy()
        return cls(depth=depth, ring=ring, current=state, head=depth)

    def delayed_term(self) -> np.ndarray:
        return self.ring[(self.head + 1) % (self.depth + 1)]

    def push(self, state: FieldPair):
        self.head = (self.head + 1) % (self.depth + 1)
        self.ring[self.head] = state.delayed_term()
        self.current = state


@dataclass
class TTPRecord:
    t_pattern: Optional[float]     # None when w was never reached
    crossing_norm: Optional[float]
    dt: float
    config: dict = field(default_factory=dict)


@dataclass
class Snapshot:
    step: int
    time: float
    state: FieldPair


@dataclass
class SimResult:
    record: TTPRecord
    snapshots: list
    final: FieldPair


# --- Discretisation ---

def choose_dt(params: ModelParams, grid: Grid) -> float:
    d = max(params.d_u, params.d_v)
    dt0 = CFL_SAFETY * 0.5 / (d / params.L_x**2 / grid.dx**2 + d / params.L_y**2 / grid.dy**2)
    if params.tau == 0:
        return dt0
    return params.tau / math.ceil(params.tau / dt0)


def history_depth(params: ModelParams, dt: float) -> int:
    return int(round(params.tau / dt))


def second_differences(f: np.ndarray, grid: Grid):
    """(d2/dx2, d2/dy2) with mirror ghost points (u_0 := u_2)."""
    p = np.pad(f, 1, mode='reflect')
    dxx = (p[2:, 1:-1] + p[:-2, 1:-1] - 2.0 * f) / grid.dx**2
    dyy = (p[1:-1, 2:] + p[1:-1, :-2] - 2.0 * f) / grid.dy**2
    return dxx, dyy


def laplacian_neumann(f: np.ndarray, grid: Grid) -> np.ndarray:
    dxx, dyy = second_differences(f, grid)
    return dxx + dyy


def step(state: FieldPair, history: HistoryBuffer, params: ModelParams, grid: Grid, dt: float) -> FieldPair:
    """One explicit Euler step; advances the history ring."""
    u, v = state.u, state.v
    uxx, uyy = second_differences(u, grid)
    vxx, vyy = second_differences(v, grid)
    # the delayed arguments arrive already combined as û^2 v̂
    f, g = reaction_rates(u, v, 0.0, 0.0, params)
    f = f + 3.0 * history.delayed_term()

    u_new = u + dt * (params.d_u / params.L_x**2 * uxx + params.d_u / params.L_y**2 * uyy + f)
    v_new = v + dt * (params.d_v / params.L_x**2 * vxx + params.d_v / params.L_y**2 * vyy + g)
    if not (np.isfinite(u_new).all() and np.isfinite(v_new).all()):
        raise SimulationDiverged("NaN or Inf in the simulated fields")
    new_state = FieldPair(u=u_new, v=v_new)
    history.push(new_state)
    return new_state


# --- Initial conditions ---

def _log_history_size(depth: int, grid: Grid):
    size_mb = (depth + 1) * grid.n * grid.m * 8 / 1e6
    level = logging.WARNING if size_mb > 2000 else logging.DEBUG
    logger.log(level, f"History ring: {depth + 1} slots, {size_mb:.1f} MB")


def make_ic_random(config: SimConfig) -> HistoryBuffer:
    params, grid = config.params, config.grid
    ss = steady_state(params)
    noise = SeededRng(config.seed).uniform_array(2 * grid.n * grid.m).reshape(2, grid.n, grid.m)
    peak = np.abs(noise).max()
    scale = config.beta / peak if peak > 0 else 0.0
    state = FieldPair(u=ss.u_star + scale * noise[0], v=ss.v_star + scale * noise[1])
    depth = history_depth(params, choose_dt(params, grid))
    _log_history_size(depth, grid)
    return HistoryBuffer.constant(state, depth)


def dominant_mode_shape(k_x: int, k_y: int, grid: Grid) -> np.ndarray:
    return np.outer(np.cos(k_x * np.pi * grid.x()), np.cos(k_y * np.pi * grid.y()))


def make_ic_eigenmode(config: SimConfig) -> HistoryBuffer:
    """Dominant linear mode, Re(e^{lambda t}(c_u, c_v)) times the cosine shape on [-tau, 0]."""
    params, grid = config.params, config.grid
    ss = steady_state(params)
    spectrum = alpha_max(params, k_cap=config.k_cap)
    mode, lam = spectrum.argmax_mode, spectrum.dominant_root
    c_u, c_v = eigen_pair(coeffs(params, mode), lam, params)
    shape = dominant_mode_shape(mode.k_x, mode.k_y, grid)
    amplitude = config.beta / max(abs(c_u.real), abs(c_v.real)) / np.abs(shape).max()
    logger.info(f"Eigenmode IC: mode {tuple(mode)}, lambda={lam:.6g}")

    dt = choose_dt(params, grid)
    depth = history_depth(params, dt)
    _log_history_size(depth, grid)

    def state_at(t: float) -> FieldPair:
        growth = np.exp(lam * t)
        return FieldPair(u=ss.u_star + amplitude * (growth * c_u).real * shape,
                         v=ss.v_star + amplitude * (growth * c_v).real * shape)

    ring = np.empty((depth + 1, grid.n, grid.m))
    for k in range(depth + 1):
        ring[k] = state_at((k - depth) * dt).delayed_term()
    return HistoryBuffer(depth=depth, ring=ring, current=state_at(0.0), head=depth)


def make_ic(config: SimConfig) -> HistoryBuffer:
    if config.ic_kind == 'eigenmode':
        return make_ic_eigenmode(config)
    return make_ic_random(config)


# --- Driver ---

def _snapshot_steps(config: SimConfig, dt: float, n_steps: int) -> set:
    steps = set()
    if config.snapshot_stride:
        steps.update(range(config.snapshot_stride, n_steps + 1, config.snapshot_stride))
    for t in config.snapshot_times:
        k = int(round(t / dt))
        if 0 <= k <= n_steps:
            steps.add(k)
    return steps


def run(config: SimConfig, show_progress: bool = False) -> SimResult:
    """Integrate to t_end, recording the first time the deviation reaches w."""
    params, grid = config.params, config.grid
    ss = steady_state(params)
    dt = choose_dt(params, grid)
    n_steps = int(math.ceil(config.t_end / dt - 1e-9))
    history = make_ic(config)
    state = history.current
    wanted = _snapshot_steps(config, dt, n_steps)
    snapshots = [Snapshot(0, 0.0, state)] if 0 in wanted else []
    logger.info(f"Simulating {config.ic_kind} IC on {grid.n}x{grid.m}, dt={dt:.4e}, {n_steps} steps, "
                f"tau={params.tau}, L_x={params.L_x}, L_y={params.L_y}")

    t_pattern, crossing_norm = None, None
    warned_negative = False
    last = 0
    for k in tqdm(range(1, n_steps + 1), disable=not show_progress, desc="simulate", leave=False):
        state = step(state, history, params, grid, dt)
        last = k
        if not warned_negative and (state.u.min() < 0 or state.v.min() < 0):
            logger.warning(f"Negative concentration at t={k * dt:.4f}")
            warned_negative = True
        if k in wanted:
            snapshots.append(Snapshot(k, k * dt, state))
        if t_pattern is None:
            deviation = state.deviation(ss)
            if deviation >= config.w:
                t_pattern, crossing_norm = k * dt, deviation
                logger.info(f"Pattern threshold w={config.w} reached at t={t_pattern:.4f}")
                if config.stop_on_pattern:
                    break

    if not snapshots or snapshots[-1].step != last:
        snapshots.append(Snapshot(last, last * dt, state))
    if t_pattern is None:
        logger.info(f"No crossing of w={config.w} before t={last * dt:.4f}")
    record = TTPRecord(t_pattern=t_pattern, crossing_norm=crossing_norm, dt=dt,
                       config=config.model_dump(mode='json'))
    return SimResult(record=record, snapshots=snapshots, final=state)


# --- Gallery ---

def _gallery_cell(config: SimConfig, out_dir: Optional[str]) -> list:
    result = run(config)
    rows = []
    for snap in result.snapshots:
        if not any(abs(snap.time - t) <= 0.5 * result.record.dt for t in config.snapshot_times):
            continue
        path = None
        if out_dir:
            stem = f"gallery_tau{config.params.tau:g}_lx{config.params.L_x:g}"
            path = write_pgm16(snap.state.u, out_dir, stem, 'u', snap.step)
        rows.append({'tau': config.params.tau, 'Lx': config.params.L_x, 'time': snap.time,
                     'classification': classify_pattern(snap.state, config.grid), 'snapshot': path})
    return rows


def pattern_gallery(params_template: ModelParams, tau_list, Lx_list, t_frames=(130.0, 220.0), seed: int = 0,
                    grid: Optional[Grid] = None, out_dir: Optional[str] = None, jobs: int = 1,
                    show_progress: bool = False):
    """Random-IC snapshot matrix over tau x L_x, classified at each frame time."""
    grid = grid or Grid()
    configs = [make_sim_config(params=params_template.replace(tau=float(tau), L_x=float(lx)), grid=grid,
                               t_end=max(t_frames), snapshot_times=tuple(t_frames), seed=seed)
               for tau in tau_list for lx in Lx_list]
    tasks = tqdm([delayed(_gallery_cell)(c, out_dir) for c in configs],
                 disable=not show_progress, desc="gallery", leave=False)
    cells = Parallel(n_jobs=jobs)(tasks)
    return pd.DataFrame([row for rows in cells for row in rows],
                        columns=['tau', 'Lx', 'time', 'classification', 'snapshot'])
