# dispersion.py
"""Characteristic quasi-polynomial of the linearised LI model and its rightmost root.

For the Neumann mode cos(k_x pi x) cos(k_y pi y) the growth rates solve

    D(lambda, tau) = lambda^2 + p lambda + q + (r lambda + s) exp(-lambda tau) = 0.

The rightmost root is isolated with the argument principle on rectangles,
subdivided best-first by right edge, and polished with Newton's method.
"""
import cmath
import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.optimize import brentq

from exceptions import NoConvergence, RootCountUnstable, SingularEigenproblem
from kinetics import ModelParams, steady_state

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10

# --- Root solver settings ---
SOLVER = {
    'EDGE_POINTS': 64,            # starting samples per contour edge
    'MAX_PHASE_STEP': math.pi / 2,
    'MIN_PARAM_STEP': 1e-13,      # contour segments shorter than this (in [0, 1] arc parameter) stop refining
    'EXP_LIMIT': 600.0,           # largest -sigma tau the search box may use
    'REAL_SCAN_POINTS': 4097,
    'SIGMA_MARGIN': 1.0,          # search box starts this far left of the tau = 0 root
    'REAL_ROOT_MARGIN': 0.1,      # or this far left of a real delayed root, whichever is further right
    'SIGMA_STEP': 1.0,
    'MAX_SIGMA_RETRIES': 50,
    'NEWTON_MAX_ITER': 100,
    'MIN_CELL_SIZE': 1e-8,        # below this a cell with >1 root is reported as a multiple root
    'MAX_SPLIT_RETRIES': 8,
    'SPLIT_OFFSET': 0.0137,       # keeps split lines off the real axis and other symmetry lines
    'SINGULAR_THRESHOLD': 1e-12,
}

# --- Mode-lattice truncation ---
TRUNCATION = {
    'DECREASING_RUN': 3,
    'MAX_INDEX': 2000,
}


class ModeIndex(NamedTuple):
    k_x: int
    k_y: int


@dataclass(frozen=True)
class QuasiPolyCoeffs:
    p: float
    q: float
    r: float
    s: float
    mu: float  # pi^2 (k_x^2/L_x^2 + k_y^2/L_y^2)


@dataclass(frozen=True)
class RootResult:
    lam: complex
    residual: float
    multiplicity_flag: bool = False


@dataclass
class SpectralAbscissa:
    alpha: float
    argmax_mode: ModeIndex
    per_mode: dict = field(default_factory=dict)   # ModeIndex -> alpha_{k_x,k_y}
    roots: dict = field(default_factory=dict)      # ModeIndex -> rightmost root

    @property
    def dominant_root(self) -> complex:
        return self.roots[self.argmax_mode]


class _Cell(NamedTuple):
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def size(self) -> float:
        return max(self.width, self.height)

    def at(self, fx: float, fy: float) -> complex:
        return complex(self.x0 + fx * self.width, self.y0 + fy * self.height)

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (self.x0 - slack <= z.real <= self.x1 + slack
                and self.y0 - slack <= z.imag <= self.y1 + slack)

    def grown(self, margin: float) -> "_Cell":
        return _Cell(self.x0 - margin, self.x1 + margin, self.y0 - margin, self.y1 + margin)


# --- Coefficients and evaluation ---

def mode_mu(params: ModelParams, mode: ModeIndex) -> float:
    return math.pi**2 * (mode.k_x**2 / params.L_x**2 + mode.k_y**2 / params.L_y**2)


def _coeffs(params: ModelParams, ex: float, ey: float) -> QuasiPolyCoeffs:
    ss = steady_state(params)
    u2 = ss.u_star**2
    uv = ss.u_star * ss.v_star
    du, dv = params.d_u, params.d_v
    e = ex + ey
    p = (du + dv) * ex + (du + dv) * ey + u2 + 4.0 * uv + 1.0
    q = (dv * e + du * dv * (ex * ex + ey * ey) + du * e * u2
         + 4.0 * dv * e * uv + 2.0 * du * dv * ex * ey + u2)
    r = -6.0 * uv
    s = -6.0 * dv * ex * uv - 6.0 * dv * ey * uv
    return QuasiPolyCoeffs(p=p, q=q, r=r, s=s, mu=e)


def coeffs(params: ModelParams, mode: ModeIndex) -> QuasiPolyCoeffs:
    ex = mode.k_x**2 * math.pi**2 / params.L_x**2
    ey = mode.k_y**2 * math.pi**2 / params.L_y**2
    return _coeffs(params, ex, ey)


def coeffs_from_mu(params: ModelParams, mu: float) -> QuasiPolyCoeffs:
    """Coefficients for any mode with eigenvalue mu; p, q and s depend on the
    mode only through mu."""
    return _coeffs(params, mu, 0.0)


def eval_char(lam, tau: float, c: QuasiPolyCoeffs):
    """D(lambda, tau); lam may be a complex scalar or a numpy array."""
    return lam * lam + c.p * lam + c.q + (c.r * lam + c.s) * np.exp(-lam * tau)


def _char_and_derivative(lam: complex, tau: float, c: QuasiPolyCoeffs):
    # raises OverflowError far in the left half-plane
    damp = cmath.exp(-lam * tau)
    d = lam * lam + c.p * lam + c.q + (c.r * lam + c.s) * damp
    dd = 2.0 * lam + c.p + (c.r - tau * (c.r * lam + c.s)) * damp
    return d, dd


def _damp_modulus(re: float, tau: float) -> float:
    """|exp(-lambda tau)| for Re lambda = re, inf instead of OverflowError."""
    exponent = -re * tau
    return math.exp(exponent) if exponent < 709.0 else math.inf


def _term_scale(lam: complex, tau: float, c: QuasiPolyCoeffs) -> float:
    damp = _damp_modulus(lam.real, tau)
    return max(1.0, abs(lam)**2, abs(c.p * lam), abs(c.q), abs(c.r * lam + c.s) * damp)


def delay_independent_stable(c: QuasiPolyCoeffs) -> bool:
    """p > |r| and q > |s|: sufficient for Re lambda < 0 at every delay."""
    return c.p > abs(c.r) and c.q > abs(c.s)


def roots_tau_zero(c: QuasiPolyCoeffs):
    """Roots of lambda^2 + (p+r) lambda + (q+s) = 0, larger real part first;
    a complex pair is returned upper member first."""
    lin = c.p + c.r
    const = c.q + c.s
    disc = lin * lin - 4.0 * const
    if disc >= 0.0:
        t = -0.5 * (lin + math.copysign(math.sqrt(disc), lin))
        if t == 0.0:
            return 0j, 0j
        r1, r2 = t, const / t
        return complex(max(r1, r2)), complex(min(r1, r2))
    re = -0.5 * lin
    im = 0.5 * math.sqrt(-disc)
    return complex(re, im), complex(re, -im)


# --- Argument principle ---

def _values_on(c: QuasiPolyCoeffs, tau: float, z: np.ndarray) -> np.ndarray:
    with np.errstate(over='ignore', invalid='ignore'):
        d = eval_char(z, tau, c)
    if not np.all(np.isfinite(d)) or np.min(np.abs(d)) == 0.0:
        raise RootCountUnstable("characteristic function vanished or overflowed on the contour")
    return d


def _winding_number(c: QuasiPolyCoeffs, tau: float, contour) -> int:
    """Winding of D around 0 along the closed path contour(t), t in [0, 1].

    Sampling is refined per segment: only segments whose phase step reaches
    MAX_PHASE_STEP are bisected, as often as needed.
    """
    t = np.linspace(0.0, 1.0, 4 * SOLVER['EDGE_POINTS'] + 1)
    d = _values_on(c, tau, contour(t))
    while True:
        steps = np.angle(d[1:] / d[:-1])
        coarse = np.abs(steps) >= SOLVER['MAX_PHASE_STEP']
        if not coarse.any():
            break
        if np.min(np.diff(t)[coarse]) < SOLVER['MIN_PARAM_STEP']:
            raise RootCountUnstable("phase step did not resolve under refinement")
        mids = 0.5 * (t[:-1][coarse] + t[1:][coarse])
        t = np.concatenate([t, mids])
        d = np.concatenate([d, _values_on(c, tau, contour(mids))])
        order = np.argsort(t, kind='stable')
        t, d = t[order], d[order]
    turns = steps.sum() / (2.0 * math.pi)
    count = int(round(turns))
    if abs(turns - count) > 0.25:
        raise RootCountUnstable(f"non-integer winding {turns:.3f}")
    return count


def _cell_contour(cell: _Cell):
    """Counter-clockwise boundary of cell as a function of t in [0, 1]."""
    corners = np.array([complex(cell.x0, cell.y0), complex(cell.x1, cell.y0),
                        complex(cell.x1, cell.y1), complex(cell.x0, cell.y1),
                        complex(cell.x0, cell.y0)])

    def path(t):
        s = 4.0 * np.asarray(t, dtype=float)
        edge = np.minimum(s.astype(int), 3)
        return corners[edge] + (s - edge) * (corners[edge + 1] - corners[edge])
    return path


def count_roots(c: QuasiPolyCoeffs, tau: float, rect) -> int:
    """Roots of D inside the rectangle rect = (x0, x1, y0, y1)."""
    return _winding_number(c, tau, _cell_contour(_Cell(*rect)))


def count_roots_in_disc(c: QuasiPolyCoeffs, tau: float, center: complex, radius: float) -> int:
    def path(t):
        return center + radius * np.exp(2j * math.pi * np.asarray(t, dtype=float))
    return _winding_number(c, tau, path)


def verify_root(c: QuasiPolyCoeffs, tau: float, lam: complex, tol: float = DEFAULT_TOL,
                radius: float = 1e-3) -> bool:
    """Residual below tol and exactly one root in a small disc around lam.

    The residual is measured against the largest term of D once that term
    exceeds 1, the same scale Newton accepts a stalled iterate at.
    """
    if abs(eval_char(lam, tau, c)) >= tol * _term_scale(lam, tau, c):
        return False
    try:
        return count_roots_in_disc(c, tau, lam, radius) == 1
    except RootCountUnstable:
        return False


# --- Rightmost root ---

def _root_radius(c: QuasiPolyCoeffs, tau: float, sigma: float) -> float:
    # any root with Re >= sigma has |exp(-lambda tau)| <= exp(-sigma tau), hence |lambda| <= R
    if -sigma * tau > SOLVER['EXP_LIMIT']:
        raise NoConvergence(f"search box left edge {sigma:.3f} too far left for tau={tau} "
                            f"(mu={c.mu:.6g})")
    damp = math.exp(-sigma * tau)
    lin = abs(c.p) + damp * abs(c.r)
    const = abs(c.q) + damp * abs(c.s)
    return 0.5 * (lin + math.sqrt(lin * lin + 4.0 * const))


def _search_cell(c: QuasiPolyCoeffs, tau: float, sigma: float, tol: float) -> Optional[_Cell]:
    edge = _root_radius(c, tau, sigma) * (1.0 + 1e-3) + tol
    if sigma >= edge:
        return None
    return _Cell(sigma, edge, -edge, edge)


def _largest_real_root(c: QuasiPolyCoeffs, tau: float, floor: float) -> Optional[float]:
    """Largest real root of D(., tau) above floor found by a sign-change scan, or None."""
    top = _root_radius(c, tau, 0.0) + 1.0
    floor = max(floor, -SOLVER['EXP_LIMIT'] / tau)
    if floor >= top:
        return None
    x = np.linspace(top, floor, SOLVER['REAL_SCAN_POINTS'])
    with np.errstate(over='ignore', invalid='ignore'):
        d = eval_char(x, tau, c)
    finite = np.isfinite(d[:-1]) & np.isfinite(d[1:])
    change = np.flatnonzero(finite & (np.sign(d[:-1]) * np.sign(d[1:]) <= 0))
    if change.size == 0:
        return None
    i = change[0]
    if d[i] == 0.0:
        return float(x[i])
    return brentq(lambda v: float(eval_char(v, tau, c)), x[i + 1], x[i])


def _count_outer(c, tau, cell: _Cell, tol: float):
    for attempt in range(SOLVER['MAX_SPLIT_RETRIES'] + 1):
        try:
            return cell, _winding_number(c, tau, _cell_contour(cell))
        except RootCountUnstable as e:
            logger.debug(f"Outer contour unstable ({e}); growing by {tol * 10**attempt:.1e}")
            cell = cell.grown(tol * 10**attempt)
    raise RootCountUnstable(f"search rectangle count unstable for mu={c.mu:.6g}, tau={tau}")


def _split(c, tau, cell: _Cell, count: int):
    for attempt in range(SOLVER['MAX_SPLIT_RETRIES']):
        frac = 0.5 + SOLVER['SPLIT_OFFSET'] * (attempt + 1) * (-1)**attempt
        if cell.width >= cell.height:
            xm = cell.x0 + frac * cell.width
            halves = (_Cell(cell.x0, xm, cell.y0, cell.y1), _Cell(xm, cell.x1, cell.y0, cell.y1))
        else:
            ym = cell.y0 + frac * cell.height
            halves = (_Cell(cell.x0, cell.x1, cell.y0, ym), _Cell(cell.x0, cell.x1, ym, cell.y1))
        try:
            counts = [_winding_number(c, tau, _cell_contour(h)) for h in halves]
        except RootCountUnstable as e:
            logger.debug(f"Split at {frac:.4f} unstable ({e}), shifting")
            continue
        if sum(counts) != count:
            logger.debug(f"Split counts {counts} do not add up to {count}, shifting")
            continue
        return list(zip(halves, counts))
    raise RootCountUnstable(f"could not subdivide cell {tuple(cell)} holding {count} roots")


def _newton(c, tau, seed: complex, tol: float) -> Optional[complex]:
    lam = seed
    for _ in range(SOLVER['NEWTON_MAX_ITER']):
        try:
            d, dd = _char_and_derivative(lam, tau, c)
        except OverflowError:
            return None
        if abs(d) < tol:
            return lam
        if dd == 0:
            return None
        step = d / dd
        lam = lam - step
        if not cmath.isfinite(lam):
            return None
        if abs(step) <= 4.0 * np.finfo(float).eps * max(1.0, abs(lam)):
            # stalled at round-off; accept only if the residual is small relative to the terms
            d = eval_char(lam, tau, c)
            return lam if abs(d) < tol * _term_scale(lam, tau, c) else None
    return None


def _polish(c, tau, cell: _Cell, tol: float) -> Optional[complex]:
    slack = max(1e-6 * cell.size, 1e-12)
    seeds = [cell.at(0.5, 0.5), cell.at(0.25, 0.25), cell.at(0.75, 0.25),
             cell.at(0.25, 0.75), cell.at(0.75, 0.75)]
    for seed in seeds:
        lam = _newton(c, tau, seed, tol)
        if lam is not None and cell.contains(lam, slack):
            return lam
    return None


def _upper(lam: complex, tau: float, c: QuasiPolyCoeffs, tol: float) -> complex:
    if abs(lam.imag) < tol and abs(eval_char(complex(lam.real, 0.0), tau, c)) < tol:
        return complex(lam.real, 0.0)
    return lam.conjugate() if lam.imag < 0 else lam


def _isolate_rightmost(c, tau, cell: _Cell, count: int, tol: float) -> RootResult:
    order = itertools.count()
    heap = [(-cell.x1, next(order), cell, count)]
    best = None
    while heap:
        _, _, current, n = heapq.heappop(heap)
        if best is not None and current.x1 < best.lam.real:
            continue
        if n == 1 or current.size < SOLVER['MIN_CELL_SIZE']:
            lam = _polish(c, tau, current, tol)
            if lam is not None:
                lam = _upper(lam, tau, c, tol)
                if best is None or lam.real > best.lam.real:
                    best = RootResult(lam=lam, residual=abs(eval_char(lam, tau, c)),
                                      multiplicity_flag=n > 1)
                continue
            if current.size < SOLVER['MIN_CELL_SIZE']:
                raise NoConvergence(f"Newton failed from every seed near {current.at(0.5, 0.5):.6g}")
        for child, child_count in _split(c, tau, current, n):
            if child_count > 0:
                heapq.heappush(heap, (-child.x1, next(order), child, child_count))
    if best is None:
        raise NoConvergence(f"no root isolated for mu={c.mu:.6g}, tau={tau}")
    return best


def rightmost_root(c: QuasiPolyCoeffs, tau: float, tol: float = DEFAULT_TOL) -> RootResult:
    """Root of D(., tau) with the largest real part (upper member of a conjugate pair)."""
    hi, lo = roots_tau_zero(c)
    if tau == 0:
        return RootResult(lam=hi, residual=abs(eval_char(hi, 0.0, c)), multiplicity_flag=hi == lo)

    sigma = hi.real - SOLVER['SIGMA_MARGIN']
    # the rightmost root lies at or right of any real delayed root
    real_root = _largest_real_root(c, tau, sigma)
    if real_root is not None:
        sigma = max(sigma, real_root - SOLVER['REAL_ROOT_MARGIN'])
    for retry in range(SOLVER['MAX_SIGMA_RETRIES'] + 1):
        cell = _search_cell(c, tau, sigma, tol)
        if cell is not None:
            cell, count = _count_outer(c, tau, cell, tol)
            if count > 0:
                if retry:
                    logger.debug(f"rightmost_root: sigma lowered {retry} times to {sigma:.3f} "
                                 f"(mu={c.mu:.6g}, tau={tau})")
                return _isolate_rightmost(c, tau, cell, count, tol)
        sigma -= SOLVER['SIGMA_STEP']
    raise NoConvergence(f"no root with Re >= {sigma:.3f} after {SOLVER['MAX_SIGMA_RETRIES']} retries")


@lru_cache(maxsize=65536)
def _cached_root(p: float, q: float, r: float, s: float, mu: float, tau: float, tol: float) -> RootResult:
    return rightmost_root(QuasiPolyCoeffs(p=p, q=q, r=r, s=s, mu=mu), tau, tol)


def mode_root(params: ModelParams, mode: ModeIndex, tol: float = DEFAULT_TOL) -> RootResult:
    c = coeffs(params, mode)
    return _cached_root(c.p, c.q, c.r, c.s, c.mu, params.tau, tol)


def alpha_mode(params: ModelParams, mode: ModeIndex, tol: float = DEFAULT_TOL) -> float:
    return mode_root(params, mode, tol).lam.real


# --- Spectral abscissa over the mode lattice ---

class _DirectionScan:
    """Stop rule along one lattice direction: delay-independent margin holds,
    the tau = 0 growth rate fell for DECREASING_RUN consecutive indices, and it
    sits below the running maximum."""

    def __init__(self):
        self.previous = None
        self.decreasing = 0

    def should_stop(self, c: QuasiPolyCoeffs, running_max: float) -> bool:
        growth = roots_tau_zero(c)[0].real
        if self.previous is not None and growth < self.previous:
            self.decreasing += 1
        else:
            self.decreasing = 0
        self.previous = growth
        return (delay_independent_stable(c)
                and self.decreasing >= TRUNCATION['DECREASING_RUN']
                and growth < running_max)


def _normalize_cap(k_cap) -> Optional[tuple]:
    if k_cap is None:
        return None
    if isinstance(k_cap, int):
        return (k_cap, k_cap)
    return (int(k_cap[0]), int(k_cap[1]))


def alpha_max(params: ModelParams, k_cap: Union[None, int, tuple] = None,
              tol: float = DEFAULT_TOL) -> SpectralAbscissa:
    """Maximum of alpha_{k_x,k_y} over the mode lattice, scanned outward from (0, 0).

    k_cap, given as an int or (cap_x, cap_y), replaces the truncation rule by
    inclusive hard caps per axis.
    """
    cap = _normalize_cap(k_cap)
    result = SpectralAbscissa(alpha=-math.inf, argmax_mode=ModeIndex(0, 0))

    def visit(mode: ModeIndex) -> QuasiPolyCoeffs:
        c = coeffs(params, mode)
        root = _cached_root(c.p, c.q, c.r, c.s, c.mu, params.tau, tol)
        value = root.lam.real
        result.per_mode[mode] = value
        result.roots[mode] = root.lam
        if value > result.alpha or (value == result.alpha and mode < result.argmax_mode):
            result.alpha = value
            result.argmax_mode = mode
        return c

    column = _DirectionScan()
    for k_y in range(TRUNCATION['MAX_INDEX'] + 1):
        row = _DirectionScan()
        head = None
        for k_x in range(TRUNCATION['MAX_INDEX'] + 1):
            c = visit(ModeIndex(k_x, k_y))
            if k_x == 0:
                head = c
            if cap is not None:
                if k_x >= cap[0]:
                    break
            elif row.should_stop(c, result.alpha):
                break
        else:
            logger.warning(f"alpha_max: k_x scan hit the safety cap at k_y={k_y}")
        if cap is not None:
            if k_y >= cap[1]:
                break
        elif column.should_stop(head, result.alpha):
            break
    else:
        logger.warning("alpha_max: k_y scan hit the safety cap")
    return result


def eigen_pair(c: QuasiPolyCoeffs, lam: complex, params: ModelParams):
    """Eigenvector (c_u, c_v) of the linearisation, normalised to c_u = 1."""
    ss = steady_state(params)
    denominator = lam + params.d_v * c.mu + ss.u_star**2
    if abs(denominator) < SOLVER['SINGULAR_THRESHOLD']:
        raise SingularEigenproblem(f"lambda + d_v mu + u*^2 = {denominator:.3e} for mu={c.mu:.6g}")
    return complex(1.0), complex(-2.0 * ss.u_star * ss.v_star / denominator)
