import numpy as np
import pytest

from pattern_analyzer import PATTERNS, classify_pattern, mode_energy
from simulator import FieldPair, Grid

GRID = Grid(n=41, m=41)


def _field(u):
    return FieldPair(u=u, v=np.zeros_like(u))


def _cos(k, points):
    return np.cos(k * np.pi * points)


def test_uniform_field_has_no_pattern():
    assert classify_pattern(_field(np.full((GRID.n, GRID.m), 1.3)), GRID) == 'none'


def test_tiny_ripple_counts_as_no_pattern():
    u = 1.0 + 1e-6 * np.outer(_cos(3, GRID.x()), np.ones(GRID.m))
    assert classify_pattern(_field(u), GRID) == 'none'


@pytest.mark.parametrize("axis", [0, 1])
def test_single_cosine_is_stripes(axis):
    wave = _cos(3, GRID.x())
    u = np.outer(wave, np.ones(GRID.m)) if axis == 0 else np.outer(np.ones(GRID.n), wave)
    assert classify_pattern(_field(u), GRID) == 'stripes'


def test_three_direction_lattice_is_spots():
    cx, cy = _cos(3, GRID.x())[:, None], _cos(3, GRID.y())[None, :]
    u = cx * cy + cx + cy
    assert classify_pattern(_field(u), GRID) == 'spots'


def test_single_oblique_mode_is_mixed():
    u = np.outer(_cos(2, GRID.x()), _cos(3, GRID.y()))
    assert classify_pattern(_field(u), GRID) == 'mixed'


def test_mode_energy_peaks_on_the_cosine_index():
    u = 2.0 + np.outer(_cos(3, GRID.x()), np.ones(GRID.m))
    energy = mode_energy(u)
    assert energy.shape == (GRID.n, GRID.m)
    assert energy[0, 0] == 0.0
    assert np.unravel_index(int(energy.argmax()), energy.shape) == (3, 0)
    assert energy[3, 0] / energy.sum() == pytest.approx(1.0, abs=1e-12)


def test_classification_on_a_rectangular_grid():
    grid = Grid(n=31, m=11)
    u = np.outer(_cos(2, grid.x()), np.ones(grid.m))
    assert classify_pattern(_field(u), grid) in PATTERNS
    assert classify_pattern(_field(u), grid) == 'stripes'
