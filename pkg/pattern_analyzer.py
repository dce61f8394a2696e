# pattern_analyzer.py
import logging
import math

import numpy as np
from scipy import fft

logger = logging.getLogger(__name__)

# --- Constants for morphology classification ---
# Fractions are of the non-DC spectral energy.
THRESHOLDS = {
    'EMPTY_ENERGY_PER_POINT': 1e-6,
    'STRIPE_BAND_FRACTION': 0.70,
    'SPOT_DIRECTION_FRACTION': 0.15,
    'SPOT_MIN_DIRECTIONS': 3,
    'ANGULAR_BIN_DEGREES': 30.0,
}

PATTERNS = ('none', 'stripes', 'spots', 'mixed')


def classify_pattern(field, grid) -> str:
    """
    Classifies the activator field of a snapshot by its 2-D spectrum.

    Args:
        field: a FieldPair (only u is used).
        grid: the Grid the field lives on.

    Returns:
        str: one of 'none', 'stripes', 'spots', 'mixed'.
    """
    energy = mode_energy(field.u)
    total = energy.sum()
    if total < THRESHOLDS['EMPTY_ENERGY_PER_POINT'] * grid.n * grid.m:
        return 'none'

    peak = np.unravel_index(int(energy.argmax()), energy.shape)
    directions = _direction_fractions(energy, total)
    strong = [d for d in directions if d >= THRESHOLDS['SPOT_DIRECTION_FRACTION']]
    logger.debug(f"Spectral peak at {tuple(int(k) for k in peak)}, direction fractions {directions}")

    # spots are tested first: a spot lattice still carries axis-aligned components
    if len(strong) >= THRESHOLDS['SPOT_MIN_DIRECTIONS']:
        return 'spots'
    if min(peak) == 0 or _axis_band_fraction(energy, total) > THRESHOLDS['STRIPE_BAND_FRACTION']:
        return 'stripes'
    return 'mixed'


def mode_energy(u: np.ndarray) -> np.ndarray:
    """Non-DC energy per cosine mode (k_x, k_y), from the FFT of the even extension."""
    u = u - u.mean()
    n, m = u.shape
    extended = np.concatenate([u, u[-2:0:-1]], axis=0)
    extended = np.concatenate([extended, extended[:, -2:0:-1]], axis=1)
    power = np.abs(fft.fft2(extended))**2 / extended.size

    rows, cols = extended.shape
    fold_x = np.minimum(np.arange(rows), rows - np.arange(rows))
    fold_y = np.minimum(np.arange(cols), cols - np.arange(cols))
    energy = np.zeros((n, m))
    np.add.at(energy, (fold_x[:, None], fold_y[None, :]), power)
    energy[0, 0] = 0.0
    return energy


def _axis_band_fraction(energy: np.ndarray, total: float) -> float:
    along_x = energy[:, :2].sum()
    along_y = energy[:2, :].sum()
    return max(along_x, along_y) / total


def _direction_fractions(energy: np.ndarray, total: float) -> list:
    bin_width = THRESHOLDS['ANGULAR_BIN_DEGREES']
    n_bins = int(math.ceil(90.0 / bin_width))
    kx, ky = np.meshgrid(np.arange(energy.shape[0]), np.arange(energy.shape[1]), indexing='ij')
    angles = np.degrees(np.arctan2(ky, kx))
    bins = np.minimum((angles // bin_width).astype(int), n_bins - 1)
    return [float(energy[bins == b].sum() / total) for b in range(n_bins)]
