from fractions import Fraction as F

import pytest

from voatwist.series import (
    ExpansionSite,
    MultiPointFunction,
    PuiseuxSeries,
    WindowTooNarrow,
    binomial_coeff,
    coefficient_at,
    curve_residue,
    expand,
    rational_equal,
    residue,
)

ZW = ("z", "w")


def inv_diff():
    return MultiPointFunction.difference_power(ZW, "z", "w", -1)


def test_binomial_coefficients():
    assert binomial_coeff(F(1, 2), 2) == F(-1, 8)
    assert binomial_coeff(-1, 3) == -1
    assert binomial_coeff(5, 2) == 10
    assert binomial_coeff(F(1, 2), 0) == 1


def test_geometric_expansions_of_inverse_difference():
    f = inv_diff()
    at0 = expand(f, ExpansionSite.at_zero("z"), 3)
    for k in range(4):
        assert at0.coefficient(k) == MultiPointFunction.monomial(ZW, {"w": -k - 1}, -1)
    atinf = expand(f, ExpansionSite.at_infinity("z"), -4)
    for k in range(1, 5):
        assert atinf.coefficient(-k) == MultiPointFunction.monomial(ZW, {"w": k - 1})


def test_diagonal_expansion_of_fractional_power():
    # z^{1/2} around z = w: w^{1/2} (1 + (z-w)/w)^{1/2}
    f = MultiPointFunction.monomial(ZW, {"z": F(1, 2)})
    s = expand(f, ExpansionSite.at_diagonal("z", "w"), 2)
    assert s.coefficient(0) == MultiPointFunction.monomial(ZW, {"w": F(1, 2)})
    assert s.coefficient(1) == MultiPointFunction.monomial(ZW, {"w": F(-1, 2)}, F(1, 2))
    assert s.coefficient(2) == MultiPointFunction.monomial(ZW, {"w": F(-3, 2)}, F(-1, 8))


def test_arithmetic_and_rational_equality():
    f = inv_diff()
    g = MultiPointFunction.monomial(ZW, {"z": 1}) - MultiPointFunction.monomial(ZW, {"w": 1})
    assert (f * g).is_constant() and (f * g).constant_value() == 1
    lhs = f * f
    rhs = MultiPointFunction.difference_power(ZW, "z", "w", -2)
    assert rational_equal(lhs, rhs)
    assert not rational_equal(lhs, f)
    assert (f - f).is_zero()


def test_derivative():
    f = inv_diff()
    assert rational_equal(f.derivative("w"), MultiPointFunction.difference_power(ZW, "z", "w", -2))
    assert rational_equal(f.derivative("z"), -MultiPointFunction.difference_power(ZW, "z", "w", -2))


def test_residues_on_the_twisted_line():
    # z^{-1} on the double cover: local parameter t = z^{1/2} gives residue T at 0
    f = MultiPointFunction.monomial(ZW, {"z": -1})
    assert curve_residue(f, "z", "zero", 2).constant_value() == 2
    assert curve_residue(f, "z", "infinity", 2).constant_value() == -2
    g = inv_diff()
    assert curve_residue(g, "z", "diagonal", 2, base="w").constant_value() == 1


def test_coefficient_at_and_window():
    f = inv_diff()
    c = coefficient_at(f, "z", "zero", 2)
    assert c == MultiPointFunction.monomial(ZW, {"w": -3}, -1)
    s = expand(f, ExpansionSite.at_zero("z"), -2)
    with pytest.raises(WindowTooNarrow):
        residue(s)


def test_json_round_trips():
    f = inv_diff().mul_monomial({"z": F(-1, 2), "w": F(3, 2)}, 5)
    assert MultiPointFunction.from_json(f.to_json()) == f
    s = PuiseuxSeries("z", {F(-1, 2): F(3), F(1, 2): F(-1, 4)}, (F(-1, 2), F(5, 2)))
    assert PuiseuxSeries.from_json(s.to_json()) == s


def test_series_equality_requires_same_window():
    a = PuiseuxSeries("z", {0: F(1)}, (0, 2))
    b = PuiseuxSeries("z", {0: F(1)}, (0, 3))
    assert a != b
    assert a == PuiseuxSeries("z", {0: F(1)}, (0, 2))
