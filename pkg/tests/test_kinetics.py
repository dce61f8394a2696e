import numpy as np
import pytest

from exceptions import InvalidValue
from kinetics import ModelParams, linearization, make_params, reaction_rates, steady_state


@pytest.mark.parametrize("a, b, u_star, v_star", [
    (0.1, 0.9, 1.0, 0.9),
    (0.4, 0.4, 0.8, 0.625),
    (0.1, 1.5, 1.6, 0.5859375),
])
def test_steady_state(a, b, u_star, v_star):
    ss = steady_state(make_params(a=a, b=b))
    assert ss.u_star == pytest.approx(u_star, rel=1e-15)
    assert ss.v_star == pytest.approx(v_star, rel=1e-15)


@pytest.mark.parametrize("a, b", [(0.1, 0.9), (0.4, 0.4), (0.1, 1.5), (0.02, 0.03), (0.9, 0.05)])
def test_steady_state_is_a_fixed_point(a, b):
    params = make_params(a=a, b=b)
    ss = steady_state(params)
    f, g = reaction_rates(ss.u_star, ss.v_star, ss.u_star, ss.v_star, params)
    assert abs(f) < 1e-14 * max(1.0, params.a)
    assert abs(g) < 1e-14 * max(1.0, params.b)


def test_reaction_rates_by_hand():
    params = make_params(a=0.1, b=0.9)
    f, g = reaction_rates(1.0, 1.0, 0.0, 0.0, params)
    assert f == pytest.approx(-2.9)
    assert g == pytest.approx(-0.1)

    f, g = reaction_rates(0.0, 0.0, 1.0, 1.0, params)
    assert f == pytest.approx(3.1)
    assert g == pytest.approx(0.9)


def test_without_delay_offset_kinetics_are_classic_schnakenberg():
    params = make_params(a=0.3, b=0.7)
    u = np.linspace(0.1, 2.0, 7)
    v = np.linspace(0.2, 1.5, 7)
    f, g = reaction_rates(u, v, u, v, params)
    np.testing.assert_allclose(f, params.a - u + u * u * v, rtol=1e-13)
    np.testing.assert_allclose(g, params.b - u * u * v, rtol=1e-13)


@pytest.mark.parametrize("field, value", [
    ('a', -1.0), ('b', 0.0), ('d_u', 0.0), ('d_v', -0.2), ('L_x', 0.0), ('L_y', -3.0),
    ('tau', -0.1), ('a', float('nan')), ('tau', float('inf')),
])
def test_invalid_parameters_are_rejected(field, value):
    with pytest.raises(InvalidValue, match=field):
        make_params(**{field: value})


def test_zero_delay_is_valid():
    assert make_params(tau=0.0).tau == 0.0


def test_defaults_are_the_canonical_set():
    params = ModelParams()
    assert (params.a, params.b, params.d_u, params.d_v, params.L_y, params.tau) == (0.1, 0.9, 0.01, 0.2, 0.2, 0.0)


def test_replace_revalidates():
    params = make_params()
    assert params.replace(L_x=2.5).L_x == 2.5
    assert params.L_x == 1.0
    with pytest.raises(InvalidValue):
        params.replace(L_x=0.0)


def test_linearization_values():
    jac = linearization(make_params(a=0.1, b=0.9))
    assert jac.f_u == pytest.approx(-4.6)
    assert jac.f_v == pytest.approx(-2.0)
    assert jac.f_u_delayed == pytest.approx(5.4)
    assert jac.f_v_delayed == pytest.approx(3.0)
    assert jac.g_u == pytest.approx(-1.8)
    assert jac.g_v == pytest.approx(-1.0)
