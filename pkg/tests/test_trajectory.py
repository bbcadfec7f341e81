import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from heteroclinic.coefficient import make_standard
from heteroclinic.trajectory import (
    Grid,
    Path,
    coercive_radius,
    load_path,
    save_path,
    segment_tail_masses,
    sup_bound_check,
    tail_report,
    tanh_seed,
    transition_interval,
)

K0 = 1.0 / np.sqrt(2.0)


def test_grid_basics():
    g = Grid(12.0, 1201)
    assert g.h == pytest.approx(0.02, rel=1e-15)
    t = g.times
    assert t[0] == -12.0 and t[-1] == 12.0 and t[g.mid] == 0.0
    np.testing.assert_array_equal(t, -t[::-1])
    assert not t.flags.writeable


@pytest.mark.parametrize("N", [1200, 1, 2, 3.5])
def test_grid_rejects_bad_node_count(N):
    with pytest.raises(ValueError):
        Grid(12.0, N)


def test_grid_with_spacing():
    g = Grid(12.0, 1201).with_spacing(18.0)
    assert g.N == 1801 and g.T == pytest.approx(18.0) and g.h == pytest.approx(0.02)


def test_path_clamps_and_immutability():
    g = Grid(1.0, 5)
    with pytest.raises(ValueError):
        Path(g, np.zeros(5))
    with pytest.raises(ValueError):
        Path(g, [-1, 0, np.nan, 0, 1])
    p = Path(g, [-1, -0.5, 0, 0.5, 1])
    with pytest.raises(ValueError):
        p.x[1] = 3.0
    q = p.with_interior([0.1, 0.2, 0.3])
    assert q.x.tolist() == [-1, 0.1, 0.2, 0.3, 1]


def test_tanh_seed_examples(grid):
    p = tanh_seed(grid, K0)
    assert p.x[grid.mid] == 0.0
    assert p.x[0] == -1.0 and p.x[-1] == 1.0
    t_half = np.sqrt(2.0) * np.arctanh(0.5)
    assert np.interp(t_half, p.t, p.x) == pytest.approx(0.5, abs=1e-4)
    np.testing.assert_array_equal(p.x, -p.x[::-1])
    with pytest.raises(ValueError):
        tanh_seed(grid, 0.0)


def _one_cell_path(grid):
    x = np.where(np.arange(grid.N) <= grid.mid, -1.0, 1.0)
    return Path(grid, x)


def test_tail_report_one_cell_path(grid):
    p = _one_cell_path(grid)
    r = tail_report(p)
    h = grid.h
    assert r.left_h1 == 0.0
    # slope 2/h over one cell, plus (x - 1)^2 = 4 at the mid node with weight h/2
    assert r.right_h1 == pytest.approx(4.0 / h + 2.0 * h, rel=1e-13)


def test_tail_report_symmetry_and_weighting(grid):
    p = tanh_seed(grid, K0)
    r = tail_report(p)
    assert abs(r.left_h1 - r.right_h1) < 1e-10
    rw = tail_report(p, make_standard("coercive_quad"))
    assert np.isfinite(rw.weighted_left) and np.isfinite(rw.weighted_right)
    assert rw.weighted_left > rw.left_h1 and rw.weighted_right > rw.right_h1
    assert r.sup_on_window == 1.0
    assert all(v >= 0 for v in r.to_dict().values())


interior = arrays(np.float64, 19, elements=st.floats(-1.5, 1.5))


@given(interior)
def test_tail_report_reflection(vals):
    g = Grid(2.0, 21)
    p = Path(g, np.r_[-1.0, vals, 1.0])
    c = make_standard("rabinowitz_gauss")
    a, b = tail_report(p, c), tail_report(p.reflected(), c)
    for u, v in ((a.left_h1, b.right_h1), (a.right_h1, b.left_h1),
                 (a.weighted_left, b.weighted_right), (a.weighted_right, b.weighted_left)):
        assert u == pytest.approx(v, rel=1e-12, abs=1e-12)


def test_transition_interval_tanh(grid):
    h = grid.h
    r = transition_interval(tanh_seed(grid, K0), 0.2)
    edge = np.sqrt(2.0) * np.arctanh(0.9)  # 2.0809...
    assert -edge - h <= r.s <= -edge
    assert edge <= r.t <= edge + h
    assert not r.non_monotone and not r.collar_only
    r1 = transition_interval(tanh_seed(grid, 1.0), 0.2)
    edge1 = np.arctanh(0.9)  # 1.4722...
    assert -edge1 - h <= r1.s <= -edge1 and edge1 <= r1.t <= edge1 + h
    assert r1.length < r.length
    # the wider eps collar is crossed later on the way out, earlier on the way in
    assert r.s_eps >= r.s and r.t_eps <= r.t


def test_transition_interval_one_cell(grid):
    r = transition_interval(_one_cell_path(grid), 0.2)
    assert r.length == pytest.approx(grid.h)
    assert r.collar_only


def test_transition_interval_flags_excursion(grid):
    x = tanh_seed(grid, K0).x.copy()
    x[100] = 0.0  # leaves the left collar long before the transition
    r = transition_interval(Path(grid, x), 0.2)
    assert r.non_monotone


def test_transition_interval_rejects_bad_margin(grid):
    with pytest.raises(ValueError):
        transition_interval(tanh_seed(grid), 1.0)


@given(st.lists(st.floats(0.01, 1.0), min_size=10, max_size=10))
def test_transition_interval_antisymmetric_for_odd_paths(incs):
    g = Grid(3.0, 21)
    half = np.cumsum(incs)
    half = half / half[-1]
    x = np.r_[-half[::-1], 0.0, half]
    r = transition_interval(Path(g, x), 0.3)
    assert r.s == -r.t


def test_coercive_radius_matches_closed_forms(vtilde):
    # on the quadratic branch z^2 + V'(1.1) z + V(1.1) = 0.1, z = x - 1.1
    v, dv = 0.25 * (1 - 1.21) ** 2, -1.1 * (1 - 1.21)
    z = (-dv + np.sqrt(dv * dv - 4 * (v - 0.1))) / 2
    assert coercive_radius(vtilde, 0.1) == pytest.approx(1.1 + z, abs=1e-12)
    # inside the collar V itself: (1 - x^2)^2 / 4 = L  gives  x = sqrt(1 + 2 sqrt(L))
    for L in (1e-10, 1e-4, 0.01):
        assert coercive_radius(vtilde, L) == pytest.approx(np.sqrt(1 + 2 * np.sqrt(L)), abs=1e-12)
    assert coercive_radius(vtilde, 0.0) == 1.0


def test_sup_bound_check_example(vtilde):
    g = Grid(10.0, 1001)
    p = tanh_seed(g, K0)
    r = sup_bound_check(p, 1.0, vtilde, make_standard("const(1)"))
    assert r.threshold == pytest.approx(0.1)
    assert r.C == pytest.approx(1.30437, abs=1e-5)
    assert r.bound == pytest.approx(r.C + 2 * np.sqrt(10.0))
    assert r.passed and r.sup == 1.0
    with pytest.raises(ValueError, match="exceeds"):
        sup_bound_check(p, 0.5, vtilde, make_standard("const(1)"))


def test_segment_tail_masses_decay(grid):
    left, right = segment_tail_masses(tanh_seed(grid, K0))
    # tanh tail: |x - 1| ~ 2 exp(-sqrt(2) t) beyond t = 6
    assert left == pytest.approx(right, rel=1e-9)
    assert left < 1e-6


def test_save_load_round_trip(tmp_path, grid):
    p = tanh_seed(grid, 0.9)
    f = tmp_path / "p.txt"
    save_path(p, f)
    q = load_path(f)
    np.testing.assert_array_equal(q.x, p.x)
    np.testing.assert_array_equal(q.t, p.t)
    save_path(q, tmp_path / "q.txt")
    assert (tmp_path / "q.txt").read_bytes() == f.read_bytes()


def test_load_path_rejects_bad_grid(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("-1 -1\n0.3 0\n1 1\n")
    with pytest.raises(ValueError):
        load_path(f)
