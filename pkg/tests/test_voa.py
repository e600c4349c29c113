from fractions import Fraction as F

import pytest

from voatwist.voa import (
    FockModule,
    SectorMismatch,
    TwistedModule,
    VertexAlgebra,
    jacobi_component_defect,
    monomial_from_string,
    to_fraction,
)


@pytest.fixture(scope="module")
def heis():
    return VertexAlgebra.heisenberg()


@pytest.fixture(scope="module")
def lattice():
    return VertexAlgebra.lattice_a1()


def scalar(vec):
    (c,) = vec.values()
    return to_fraction(c)


def test_heisenberg_commutator(heis):
    U = heis.module
    h = heis.mono((1, 0))
    out = U.apply({h: 1}, 1, {h: 1})
    assert out == {heis.vacuum: 1}


def test_graded_dimensions(heis):
    # partitions: 1, 1, 2, 3
    dims = [len([m for m in heis.basis(w) if heis.weight(m) == w]) for w in range(4)]
    assert dims == [1, 1, 2, 3]


def test_lattice_weights(lattice):
    assert lattice.weight(lattice.exp_vector((1,))) == 1
    assert lattice.weight(lattice.exp_vector((2,))) == 4


def test_twisted_bottom_weight(heis, lattice):
    M = TwistedModule(heis)
    b = M.bottom()[0]
    assert scalar(M.virasoro(0, {b: 1})) == F(1, 16)
    for chi in (1, -1):
        T = TwistedModule(lattice, chi)
        assert T.bottom_weight == F(1, 16)


def test_e_zero_mode_eigenvalues(lattice):
    E, _ = lattice.lattice_pair()
    for chi, want in ((1, F(1, 2)), (-1, F(-1, 2))):
        T = TwistedModule(lattice, chi)
        b = T.bottom()[0]
        assert scalar(T.apply(E, 0, {b: 1})) == want


def test_twisted_mode_index_is_enforced(heis):
    M = TwistedModule(heis)
    h = {heis.mono((1, 0)): 1}
    with pytest.raises(SectorMismatch):
        M.mode_action(h, 0, {M.bottom()[0]: 1})


def test_half_lattice_module_bottom(lattice):
    M = FockModule(lattice, (1,))
    assert M.bottom_weight == F(1, 4)


@pytest.mark.parametrize("chi", [1, -1])
def test_twisted_jacobi_sample(lattice, chi):
    T = TwistedModule(lattice, chi)
    eb = lattice.eigen_basis(1)
    vs = T.basis(1)
    for a, r, _ in eb:
        for b, s, _ in eb:
            for m in range(-1, 2):
                for l in range(-1, 2):
                    for u in vs:
                        assert not jacobi_component_defect(T, a, b, m, 0, l, {u: 1}, r, s)


def test_monomial_strings_round_trip(heis, lattice):
    for alg in (heis, lattice):
        for m in alg.basis(2):
            assert monomial_from_string(str(m), alg) == m
