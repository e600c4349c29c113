from fractions import Fraction as F

import pytest

from voatwist.checks import bimodule_suite, surjection_suite, zhu_suite
from voatwist.voa import FockModule, VertexAlgebra
from voatwist.zhu import OutOfWindow, o_subspace, quotient_algebra, quotient_bimodule


@pytest.fixture(scope="module")
def zhu():
    return zhu_suite(windows=(4, 5))


def test_heisenberg_twisted_zhu_is_one_dimensional(zhu):
    assert zhu.data["heisenberg", 5]["dim"] == 1


def test_lattice_twisted_zhu(zhu):
    entry = zhu.data["lattice-a1", 5]
    assert entry["dim"] == 2
    assert entry["e_alpha_squared"] == [v / 16 for v in entry["identity"]]
    assert zhu.ok


def test_untwisted_heisenberg_is_not_finite():
    # untwisted: a polynomial ring in [h], so the window keeps seeing new classes
    H = VertexAlgebra.heisenberg(twist="id")
    assert o_subspace(H, None, 3).dim < o_subspace(H, None, 5).dim
    with pytest.raises(OutOfWindow):
        quotient_algebra(H, 3)


def test_bimodules():
    rep = bimodule_suite(window=3)
    assert rep.ok
    assert [str(b) for b in rep.data["M(1,1)"].basis] == ["e(1/1)"]
    assert sorted(str(b) for b in rep.data["V{L+a/2}"].basis) == ["e(-1/2)", "e(1/2)"]
    assert rep.data["bracket"] == [[0, 1], [1, 0]]


def test_b_quotient_for_lambda_zero_matches_a():
    L = VertexAlgebra.lattice_a1()
    M = FockModule(L, (1,))
    A = quotient_bimodule(L, M, "A", 3)
    B = quotient_bimodule(L, M, "B", 3, F(0), A.algebra_quotient)
    assert A.dim == B.dim == 2


def test_graded_surjection():
    assert surjection_suite(window=3).ok
