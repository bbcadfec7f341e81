import numpy as np
import pytest
from hypothesis import given, strategies as st

from heteroclinic.coefficient import (
    CoefficientFileError,
    load_tabulated_coefficient,
    make_standard,
    verify_class,
)

STANDARD = ["const(1)", "const(2.5)", "rabinowitz_gauss", "periodic_sin", "asym_periodic", "coercive_quad"]


def test_standard_values():
    assert make_standard("rabinowitz_gauss").eval(0.0) == 1.0
    assert make_standard("asym_periodic").eval(0.0) == 1.0
    assert make_standard("coercive_quad").eval(3.0) == 10.0
    assert make_standard("coercive_quad(4)").eval(0.5) == 2.0
    assert make_standard("periodic_sin").eval(np.pi / 2) == 3.0
    assert make_standard("const(2)").eval(np.array([-1.0, 7.0])).tolist() == [2.0, 2.0]


@pytest.mark.parametrize("name", ["nope", "const", "const(-1)", "const(x)", "rabinowitz_gauss(2)", "coercive_quad(0)"])
def test_unknown_or_bad_names(name):
    with pytest.raises(ValueError):
        make_standard(name)


@pytest.mark.parametrize("name", STANDARD)
def test_positivity_on_wide_window(name):
    ts = np.linspace(-1e3, 1e3, 100_000)
    assert np.all(make_standard(name).eval(ts) > 0)


def test_asym_periodic_strictly_below_envelope():
    c = make_standard("asym_periodic")
    ts = np.linspace(-1e3, 1e3, 100_001)
    assert np.all(c.eval(ts) < c.params.envelope.eval(ts))


@given(st.floats(-1e4, 1e4))
def test_asym_periodic_dominance_property(t):
    c = make_standard("asym_periodic")
    assert c.eval(t) < c.params.envelope.eval(t)


def test_rabinowitz_minimum_at_zero():
    c = make_standard("rabinowitz_gauss")
    ts = np.linspace(-50, 50, 100_001)
    v = c.eval(ts)
    assert ts[np.argmin(v)] == 0.0
    assert v.min() == c.eval(0.0)


def test_verify_rabinowitz():
    rep = verify_class(make_standard("rabinowitz_gauss"), (-50, 50))
    assert rep.conditions["a7"]
    assert rep.a0 == 1.0
    # sample minimum of 2 - exp(-t^2) on |t| in [25, 50]
    assert rep.probe_min == pytest.approx(2.0 - np.exp(-625.0), abs=1e-15)
    assert rep.probe_window == (25.0, 50.0)
    assert set(rep.passed) == {"a7", "a11"}


def test_verify_const():
    rep = verify_class(make_standard("const(1)"), (-50, 50))
    assert rep.conditions["a11"] and rep.l0 == rep.l1 == 1.0
    assert not rep.conditions["a7"]
    assert rep.passed == ["a11"]


def test_verify_coercive():
    c = make_standard("coercive_quad")
    rep = verify_class(c, (-50, 50))
    assert rep.conditions["a10"]
    assert not rep.conditions["a7"]
    assert not rep.conditions["a11"]
    # max of 1 + t^2 on the window is 2501
    assert not verify_class(c, (-50, 50), bounds=(1.0, 2500.0)).conditions["a11"]
    assert verify_class(c, (-50, 50), bounds=(1.0, 2501.0)).conditions["a11"]


def test_verify_asym_periodic():
    rep = verify_class(make_standard("asym_periodic"), (-50, 50))
    assert rep.conditions["a8"] and rep.conditions["a9"]
    assert not rep.conditions["a7"] and not rep.conditions["a10"]


def test_verify_rejects_bad_window():
    with pytest.raises(ValueError):
        verify_class(make_standard("const(1)"), (1.0, 1.0))
    with pytest.raises(ValueError):
        verify_class(make_standard("const(1)"), (-1.0, 1.0), samples=10)


def test_tabulated_coefficient(tmp_path):
    p = tmp_path / "a.txt"
    ts = np.linspace(-5, 5, 11)
    p.write_text("# t a\n" + "".join(f"{t:g}, {2 - np.exp(-t * t):.17g}\n" for t in ts))
    c = load_tabulated_coefficient(p, "rabinowitz", a_inf=2.0)
    assert c.eval(0.0) == 1.0
    assert c.eval(100.0) == c.eval(5.0)  # constant extrapolation
    assert c.eval(0.5) == pytest.approx(0.5 * (1.0 + 2 - np.exp(-1.0)))
    rep = verify_class(c, (-50, 50))
    assert rep.extrapolation == "constant"
    assert any("extrapolation" in n for n in rep.notes)
    assert rep.conditions["a7"]


def test_tabulated_coefficient_errors(tmp_path):
    p = tmp_path / "a.txt"
    p.write_text("0 1\n1 -2\n")
    with pytest.raises(CoefficientFileError, match="positive"):
        load_tabulated_coefficient(p)
    p.write_text("0 1\n1 x\n")
    with pytest.raises(CoefficientFileError, match=":2:"):
        load_tabulated_coefficient(p)
    p.write_text("1 1\n0 2\n")
    with pytest.raises(CoefficientFileError, match="increasing"):
        load_tabulated_coefficient(p)


def test_describe_round_trip():
    d = make_standard("asym_periodic").describe()
    assert d["envelope"] == "periodic_sin" and d["class_tag"] == "asymptotically_periodic"
