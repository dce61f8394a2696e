import math

import numpy as np
import pytest

import charts
from charts import (ModeSwitch, ScalarChart, alpha_vs_Lx, alpha_vs_tau, critical_tau, heatmap_Lx_tau, make_axis,
                    mode_switch_Lx, mode_switch_tau, turing_space, zero_contours)
from dispersion import ModeIndex, alpha_max
from exceptions import InvalidValue, NoSignChange
from kinetics import make_params


# --- Axes and containers ---

def test_axis_points():
    axis = make_axis('tau', 0.0, 1.0, 5)
    np.testing.assert_allclose(axis.points(), [0.0, 0.25, 0.5, 0.75, 1.0])


@pytest.mark.parametrize("lo, hi, count", [(1.0, 1.0, 5), (2.0, 1.0, 5), (0.0, 1.0, 1)])
def test_bad_axes_are_rejected(lo, hi, count):
    with pytest.raises(InvalidValue):
        make_axis('L_x', lo, hi, count)


def test_chart_shape_is_checked():
    x, y = make_axis('a', 0.1, 1.0, 4), make_axis('b', 0.1, 1.0, 3)
    ScalarChart(x_axis=x, y_axis=y, values=np.zeros((3, 4)))
    with pytest.raises(InvalidValue):
        ScalarChart(x_axis=x, y_axis=y, values=np.zeros((4, 3)))
    with pytest.raises(InvalidValue):
        ScalarChart(x_axis=x, y_axis=y, values=np.zeros((3, 4)), layers={'extra': np.zeros(4)})


# --- Contours ---

def test_zero_contour_of_a_plane():
    xs, ys = np.linspace(0.0, 1.0, 11), np.linspace(0.0, 2.0, 21)
    values = np.broadcast_to(xs - 0.55, (len(ys), len(xs)))
    lines = zero_contours(values, xs, ys)
    assert len(lines) == 1
    np.testing.assert_allclose(lines[0][:, 0], 0.55, atol=1e-12)
    assert lines[0][:, 1].min() == pytest.approx(0.0)
    assert lines[0][:, 1].max() == pytest.approx(2.0)


def test_zero_contour_without_sign_change():
    xs, ys = np.linspace(0.0, 1.0, 5), np.linspace(0.0, 1.0, 5)
    assert zero_contours(np.ones((5, 5)), xs, ys) == []
    assert zero_contours(np.full((5, 5), np.nan), xs, ys) == []


def _cell_has_both_signs(values, xs, ys, x, y):
    j = min(max(int(np.searchsorted(xs, x, side='right')) - 1, 0), len(xs) - 2)
    i = min(max(int(np.searchsorted(ys, y, side='right')) - 1, 0), len(ys) - 2)
    corners = values[i:i + 2, j:j + 2]
    return corners.min() <= 0.0 <= corners.max()


# --- Turing space ---

def test_turing_space_small_grid(turing_params):
    a_axis, b_axis = make_axis('a', 0.1, 0.4, 4), make_axis('b', 0.4, 0.9, 4)
    chart = turing_space(turing_params, a_axis, b_axis, audit=True)

    assert chart.values.shape == (4, 4)
    assert set(chart.layers) == {'alpha_inhomogeneous', 'alpha_00'}
    assert chart.meta['failed_cells'] == 0
    assert chart.meta['audit_failures'] == 0

    # corner (a, b) = (0.1, 0.9) sits inside the Turing region
    assert chart.values[-1, 0] > 0
    assert chart.layers['alpha_inhomogeneous'][-1, 0] > 0
    assert chart.layers['alpha_00'][-1, 0] == pytest.approx(-0.1, abs=1e-12)
    np.testing.assert_array_equal(chart.values, np.maximum(chart.layers['alpha_inhomogeneous'],
                                                           chart.layers['alpha_00']))

    assert chart.contours['alpha']
    layer = chart.layers['alpha_inhomogeneous']
    for line in chart.contours['alpha']:
        for x, y in line:
            assert _cell_has_both_signs(layer, a_axis.points(), b_axis.points(), x, y)


def test_turing_space_rejects_nonpositive_rates(turing_params):
    with pytest.raises(InvalidValue):
        turing_space(turing_params, make_axis('a', 0.0, 1.0, 3), make_axis('b', 0.1, 1.0, 3))


@pytest.mark.slow
def test_no_turing_region_on_the_small_square():
    params = make_params(d_u=0.01, d_v=0.2, L_x=0.2, L_y=0.2, tau=0.0)
    chart = turing_space(params, make_axis('a', 0.02, 1.0, 101), make_axis('b', 0.02, 1.0, 101), jobs=-1)
    assert chart.contours['alpha'] == []
    assert chart.meta['failed_cells'] == 0


@pytest.mark.slow
def test_turing_region_opens_on_the_unit_strip():
    params = make_params(d_u=0.01, d_v=0.2, L_x=1.0, L_y=0.2, tau=0.0)
    chart = turing_space(params, make_axis('a', 0.02, 1.0, 41), make_axis('b', 0.02, 1.0, 41), jobs=-1)
    assert chart.contours['alpha'] and chart.contours['alpha_00']
    inside = (chart.layers['alpha_inhomogeneous'] > 0) & (chart.layers['alpha_00'] < 0)
    assert inside.any()


# --- Curves ---

def test_alpha_vs_tau_starts_at_the_undelayed_scan(turing_params):
    chart = alpha_vs_tau(turing_params, make_axis('tau', 0.0, 0.2, 3))
    assert chart.values.shape == (3,)
    assert chart.values[0] == alpha_max(turing_params).alpha
    assert len(chart.meta['argmax_modes']) == 3


def test_alpha_vs_tau_rejects_negative_delays(turing_params):
    with pytest.raises(InvalidValue):
        alpha_vs_tau(turing_params, make_axis('tau', -1.0, 1.0, 3))


def test_root_audit_on_a_delayed_chart(turing_params):
    chart = alpha_vs_tau(turing_params, make_axis('tau', 0.0, 1.0, 5), audit=True)
    assert chart.meta['failed_cells'] == 0
    assert chart.meta['audit_failures'] == 0
    assert np.all(np.isfinite(chart.values))


@pytest.mark.slow
@pytest.mark.parametrize("a, b, positive", [(0.1, 0.9, True), (0.4, 0.4, False)])
def test_alpha_against_delay_on_the_wide_domain(a, b, positive):
    params = make_params(a=a, b=b, L_x=3.0, L_y=0.2)
    values = alpha_vs_tau(params, make_axis('tau', 0.0, 2.0, 21), jobs=-1).values
    assert np.all(values > 0) if positive else np.all(values < 0)
    if positive:
        assert values[-1] < values[0]
    else:
        assert values[-1] > values[0]


def test_alpha_vs_Lx_curves(turing_params):
    curves = alpha_vs_Lx(turing_params, [(0, 0), (1, 0)], make_axis('L_x', 0.5, 1.5, 11))
    np.testing.assert_allclose(curves.curves[ModeIndex(0, 0)], -0.1, atol=1e-12)
    assert set(curves.collisions) == {ModeIndex(0, 0), ModeIndex(1, 0)}
    assert curves.collisions[ModeIndex(0, 0)] == []
    assert curves.curves[ModeIndex(1, 0)].max() > 0


def test_heatmap_rejects_tiny_domains(turing_params):
    with pytest.raises(InvalidValue):
        heatmap_Lx_tau(turing_params, make_axis('L_x', 0.01, 1.0, 3), make_axis('tau', 0.0, 1.0, 3))


def test_heatmap_zero_delay_row_matches_the_envelope(turing_params):
    lx_axis = make_axis('L_x', 0.5, 1.5, 5)
    chart = heatmap_Lx_tau(turing_params, lx_axis, make_axis('tau', 0.0, 0.1, 2))
    assert chart.values.shape == (2, 5)
    expected = [alpha_max(turing_params.replace(L_x=float(x))).alpha for x in lx_axis.points()]
    np.testing.assert_array_equal(chart.values[0], expected)


# --- Critical values ---

def test_critical_tau_needs_a_sign_change(turing_params):
    with pytest.raises(NoSignChange):
        critical_tau(turing_params, 0.02)


@pytest.mark.parametrize("a, b, L_x, expected", [(0.17, 0.5, 0.38, 0.32), (0.18, 0.4, 0.5, 0.39)])
def test_critical_delays(a, b, L_x, expected):
    params = make_params(a=a, b=b, L_x=L_x, L_y=0.2)
    assert critical_tau(params, 1.0, jobs=-1) == pytest.approx(expected, abs=0.05)


def test_mode_switch_on_the_narrow_strip(turing_params):
    switches = mode_switch_Lx(turing_params, make_axis('L_x', 0.5, 1.5, 101))
    assert len(switches) == 1
    switch = switches[0]
    assert isinstance(switch, ModeSwitch)
    assert switch.at == pytest.approx(0.923, abs=0.02)
    assert (switch.mode_before, switch.mode_after) == (ModeIndex(1, 0), ModeIndex(2, 0))


def test_single_mode_scan_never_switches(turing_params):
    assert mode_switch_Lx(turing_params, make_axis('L_x', 0.5, 1.5, 11), k_cap=(0, 0)) == []


def test_mode_switch_tau_rejects_negative_delays(turing_params):
    with pytest.raises(InvalidValue):
        mode_switch_tau(turing_params, make_axis('tau', -0.5, 1.0, 3))


@pytest.mark.slow
def test_dominant_mode_switches_along_the_delay():
    params = make_params(a=0.18, b=0.4, L_x=0.5, L_y=0.2)
    switches = mode_switch_tau(params, make_axis('tau', 0.0, 2.0, 21), jobs=-1)
    assert any(abs(s.at - 1.33) < 0.1 for s in switches)


def test_failed_cells_become_nan(turing_params, monkeypatch):
    from exceptions import NoConvergence

    def failing(*args, **kwargs):
        raise NoConvergence("forced")
    monkeypatch.setattr(charts, 'alpha_max', failing)
    chart = alpha_vs_tau(turing_params, make_axis('tau', 0.0, 1.0, 3))
    assert np.all(np.isnan(chart.values))
    assert chart.meta['failed_cells'] == 3
    assert math.isnan(charts._alpha_cell(turing_params, False, 1e-10).alpha)
