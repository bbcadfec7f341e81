import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from heteroclinic.action import (
    DiscreteAction,
    RULES,
    action,
    action_report,
    dual_norm,
    gradient,
    h1_operator,
    residual,
    tail_truncation_bound,
)
from heteroclinic.coefficient import make_standard
from heteroclinic.potential import make_quartic, modify
from heteroclinic.trajectory import Grid, Path, tanh_seed

K0 = 1.0 / np.sqrt(2.0)
VT = modify(make_quartic(), 0.1)
B1 = 2.0 * np.sqrt(2.0) / 3.0


def tanh_action(k, a):
    """Action of tanh(k t) on the whole line: kinetic 2k/3 plus potential a/(3k)."""
    return 2.0 * k / 3.0 + a / (3.0 * k)


def exact_tanh_path(grid, k):
    return Path(grid, np.tanh(k * grid.times), clamped=False)


def tanh_fourth_derivative(u):
    y = np.tanh(u)
    return 8.0 * y * (2.0 - 3.0 * y * y) * (1.0 - y * y)


@pytest.mark.parametrize("rule", RULES)
def test_action_of_tanh_seed(grid, rule):
    p = tanh_seed(grid, K0)
    assert action(p, VT, make_standard("const(1)"), rule=rule) == pytest.approx(B1, abs=5e-4)
    assert action(p, VT, make_standard("const(2)"), rule=rule) == pytest.approx(tanh_action(K0, 2.0), abs=5e-4)
    assert tanh_action(K0, 2.0) == pytest.approx(1.41421, abs=1e-5)


@given(st.floats(0.5, 1.5), st.floats(0.25, 4.0))
def test_action_closed_form_family(k, a):
    g = Grid(12.0, 1201)
    J = action(exact_tanh_path(g, k), VT, make_standard(f"const({a!r})"))
    assert J == pytest.approx(tanh_action(k, a), abs=1e-3)


def test_action_grid_convergence():
    errs = []
    for N in (601, 1201, 2401):
        g = Grid(12.0, N)
        errs.append(action(exact_tanh_path(g, K0), VT, make_standard("const(1)")) - B1)
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 3.8 < r1 < 4.2 and 3.8 < r2 < 4.2


def test_action_of_well_path_is_zero():
    g = Grid(5.0, 101)
    p = Path(g, np.ones(g.N), clamped=False)
    for rule in RULES:
        assert action(p, VT, make_standard("rabinowitz_gauss"), rule=rule) == 0.0


paths = arrays(np.float64, 39, elements=st.floats(-3.0, 3.0))


def _path(vals):
    return Path(Grid(4.0, 41), np.r_[-1.0, vals, 1.0])


@given(paths, st.sampled_from(RULES))
def test_action_nonnegative(vals, rule):
    assert action(_path(vals), VT, make_standard("coercive_quad"), rule=rule) >= 0.0


@given(paths, st.sampled_from(RULES))
def test_action_reflection_invariance(vals, rule):
    p = _path(vals)
    c = make_standard("rabinowitz_gauss")
    assert action(p, VT, c, rule=rule) == pytest.approx(action(p.reflected(), VT, c, rule=rule), rel=1e-12, abs=1e-12)


@given(paths, st.sampled_from(RULES), st.floats(0.05, 5.0))
def test_action_monotone_in_coefficient(vals, rule, eps):
    # 1 <= 2 - exp(-t^2) pointwise
    p = _path(vals)
    lo = action(p, VT, make_standard("const(1)"), eps, rule)
    hi = action(p, VT, make_standard("rabinowitz_gauss"), eps, rule)
    assert lo <= hi + 1e-12 * hi


@given(paths, arrays(np.float64, 39, elements=st.floats(-1.0, 1.0)), st.sampled_from(RULES))
def test_gradient_matches_central_differences(vals, v, rule):
    p = _path(vals)
    F = DiscreteAction(p.grid, VT, make_standard("asym_periodic"), 0.7, rule)
    g = F.gradient(p.x)
    sigma = 1e-5
    d = np.r_[0.0, v, 0.0]
    fd = (F.value(p.x + sigma * d) - F.value(p.x - sigma * d)) / (2 * sigma)
    gv = float(g @ v)
    assert abs(gv - fd) <= 1e-6 * (1.0 + abs(gv))


def test_gradient_is_odd_for_symmetric_problems(grid):
    g = gradient(tanh_seed(grid, 0.9), VT, make_standard("rabinowitz_gauss"))
    np.testing.assert_allclose(g, -g[::-1], atol=1e-14)


def test_trapezoid_stationarity_equals_central_residual(grid):
    # under the trapezoid rule the discrete EL equations are the ODE residual times -h
    p = tanh_seed(grid, 0.8)
    F = DiscreteAction(grid, VT, make_standard("asym_periodic"), 1.0, "trapezoid")
    np.testing.assert_allclose(F.gradient(p.x), -grid.h * F.residual(p.x), rtol=0, atol=1e-12)


def test_dual_norm_examples():
    g = Grid(3.0, 61)
    n = g.N - 2
    assert dual_norm(np.zeros(n), g) == 0.0
    e = np.sin(np.linspace(0, 3 * np.pi, n)) + 0.3
    full = np.r_[0.0, e, 0.0]
    h1 = np.sum(np.diff(full) ** 2) / g.h + g.h * np.sum(e * e)
    e = e / np.sqrt(h1)
    ab = h1_operator(g)
    Me = ab[1] * e
    Me[:-1] += ab[0, 1:] * e[1:]
    Me[1:] += ab[0, 1:] * e[:-1]
    assert dual_norm(Me, g) == pytest.approx(1.0, rel=1e-12)
    assert dual_norm(2 * Me, g) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        dual_norm(np.ones(n + 1), g)


@given(arrays(np.float64, 59, elements=st.floats(-1e3, 1e3)), st.floats(0.0, 100.0))
def test_dual_norm_homogeneous(gvec, c):
    g = Grid(3.0, 61)
    assert dual_norm(c * gvec, g) == pytest.approx(c * dual_norm(gvec, g), rel=1e-12, abs=1e-300)


def test_residual_of_exact_tanh_is_second_order():
    res = {}
    for N in (1201, 2401):
        g = Grid(12.0, N)
        p = exact_tanh_path(g, K0)
        res[N] = residual(p, VT, make_standard("const(1)"))
        # leading Taylor term of the central difference: h^2 / 12 max |x''''|
        u = K0 * g.times
        taylor = g.h**2 / 12.0 * K0**4 * np.max(np.abs(tanh_fourth_derivative(u)))
        assert res[N] == pytest.approx(taylor, rel=0.02)
    assert res[1201] <= 2e-4
    assert 3.9 < res[1201] / res[2401] < 4.1


def test_residual_of_linear_ramp(vtilde):
    g = Grid(1.0, 11)
    p = Path(g, np.linspace(-1.0, 1.0, 11))
    c = make_standard("const(3)")
    expected = np.max(np.abs(3.0 * vtilde.deriv(p.x[1:-1])))
    assert residual(p, vtilde, c) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        residual(Path(Grid(1.0, 3), [-1.0, 0.0, 1.0]), vtilde, c)


def test_tail_truncation_bound(grid):
    b = tail_truncation_bound(grid, VT, make_standard("const(1)"))
    k = np.sqrt(2.0)
    assert b == pytest.approx(2 * 1.1025 / k * np.exp(-2 * k * 12.0), rel=1e-12)
    assert b < 1e-14


def test_action_report_json_fields(grid):
    rep = action_report(tanh_seed(grid, K0), VT, make_standard("const(1)"))
    d = json.loads(rep.to_json())
    assert list(d) == ["value", "grad_dual", "grad_l2", "residual_inf", "tail_truncation_bound"]
    assert all(v >= 0 for v in d.values())


def test_discrete_action_rejects_bad_input(grid):
    with pytest.raises(ValueError):
        DiscreteAction(grid, VT, make_standard("const(1)"), eps=0.0)
    with pytest.raises(ValueError):
        DiscreteAction(grid, VT, make_standard("const(1)"), rule="simpson")


@given(paths, arrays(np.float64, 39, elements=st.floats(-1.0, 1.0)), st.sampled_from(RULES))
def test_change_matches_value_difference(vals, v, rule):
    p = _path(vals)
    F = DiscreteAction(p.grid, VT, make_standard("periodic_sin"), 1.0, rule)
    step = np.r_[0.0, 1e-3 * v, 0.0]
    direct = F.value(p.x + step) - F.value(p.x)
    assert F.change(p.x, step) == pytest.approx(direct, rel=1e-8, abs=1e-11 * max(1.0, F.value(p.x)))
