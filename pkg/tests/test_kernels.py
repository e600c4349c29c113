import random
from fractions import Fraction as F

import pytest

from voatwist.checks import kernel_suite, random_two_point, residue_suite
from voatwist.kernels import f_kernel, kernel_recurrence_defect, residue_sum
from voatwist.series import MultiPointFunction, NotSingleValued, rational_equal

ZW = ("z", "w")


def test_lowest_kernel_is_the_cauchy_kernel():
    assert rational_equal(f_kernel(0, 0), MultiPointFunction.difference_power(ZW, "z", "w", -1))


def test_first_derivative_kernel_closed_form():
    # F_{n,1} = z^{-n} d/dw (w^n/(z-w)) = z^{-n} (n w^{n-1}/(z-w) + w^n/(z-w)^2)
    n = F(1, 2)
    want = (
        MultiPointFunction.monomial(ZW, {"z": -n, "w": n - 1}, n) * MultiPointFunction.difference_power(ZW, "z", "w", -1)
        + MultiPointFunction.monomial(ZW, {"z": -n, "w": n}) * MultiPointFunction.difference_power(ZW, "z", "w", -2)
    )
    assert rational_equal(f_kernel(n, 1), want)


@pytest.mark.parametrize("n", [F(-3, 2), 0, F(1, 2), 2])
def test_recurrence(n):
    for i in range(3):
        assert kernel_recurrence_defect(n, i).is_zero()


def test_kernel_suite_small():
    rep = kernel_suite(terms=5, max_i=1)
    assert rep.ok and rep.cases == 9 * 2 * 5


def test_residue_sum_of_cauchy_kernel_vanishes():
    assert not residue_sum(f_kernel(F(1, 2), 0), 1, 2).terms


def test_residue_sum_rejects_multivalued():
    f = MultiPointFunction.monomial(ZW, {"z": F(1, 2)})
    with pytest.raises(NotSingleValued):
        residue_sum(f, 0, 2)


def test_random_samples_are_reproducible():
    a, _ = random_two_point(random.Random(7))
    b, _ = random_two_point(random.Random(7))
    assert a == b


def test_residue_suite():
    rep = residue_suite(count=20, seed=3)
    assert rep.ok and rep.cases == 20
