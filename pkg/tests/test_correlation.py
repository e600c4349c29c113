import random
from fractions import Fraction as F

import pytest

from voatwist.checks import block_checks, generating_suite
from voatwist.correlation import (
    BlockSpace,
    ExtendedBlock,
    RestrictedBlock,
    check_l1,
    check_locality,
    four_point,
    n_point,
    intertwiner_modes,
    three_point,
)
from voatwist.fusion import FusionQuery
from voatwist.linalg import RowSpace
from voatwist.series import MultiPointFunction, rational_equal
from voatwist.voa import ONE

HEIS = FusionQuery("heisenberg", "M(1,1)", "M(1)_tw", "M(1)_tw")
SAME = FusionQuery("lattice-a1", "V", "T+", "T+")
CROSS = FusionQuery("lattice-a1", "V{L+a/2}", "T+", "T-")


def only_block(engine, q):
    (b,) = engine.blocks(q).blocks()
    return b


def test_block_datum_invariants(engine):
    for q in (HEIS, SAME, CROSS):
        d = engine.blocks(q).datum
        assert d.invariants_ok()
        assert d.omega_scalars() == ([F(1, 16)], [F(1, 16)])


def test_block_dimensions(engine):
    assert engine.blocks(HEIS).dim == 1
    assert engine.blocks(SAME).dim == 1
    assert engine.blocks(CROSS).dim == 1
    assert engine.blocks(FusionQuery("lattice-a1", "V", "T+", "T-")).dim == 0


def test_blocks_vanish_on_relations(engine):
    space = engine.blocks(CROSS)
    for b in space.blocks():
        assert space.vanishes_on_j(b)


def test_three_point_of_vacuum_is_constant(engine):
    b = only_block(engine, SAME)
    d = b.datum
    f = three_point(b, {d.U3[0]: ONE}, {d.m1.bottom()[0]: ONE}, {d.U2[0]: ONE})
    assert f.is_constant() and f.constant_value() == 1


def test_twisted_two_point_function(engine):
    # <h(z1) h(z2)> with (a|a) = 2 on the twisted module:
    # (sqrt(z1/z2) + sqrt(z2/z1)) / (2 (z1-z2)^2) times (a|a)
    b = only_block(engine, SAME)
    alg = b.datum.algebra
    h = {alg.mono((1, 0)): ONE}
    f = n_point(b, [h, h], {b.datum.m1.bottom()[0]: ONE})
    vs = f.vars
    want = (
        MultiPointFunction.monomial(vs, {"z1": F(1, 2), "z2": F(-1, 2)})
        + MultiPointFunction.monomial(vs, {"z1": F(-1, 2), "z2": F(1, 2)})
    ) * MultiPointFunction.difference_power(vs, "z1", "z2", -2)
    assert rational_equal(f, want)


def test_four_point_sides_agree(engine):
    b = only_block(engine, CROSS)
    alg = b.datum.algebra
    v = {b.datum.m1.bottom()[0]: ONE}
    for a, _, wt in alg.eigen_basis(1):
        if wt == 1:
            assert rational_equal(four_point(b, a, v, "left"), four_point(b, a, v, "right"))


def test_all_block_checks_pass(engine):
    b = only_block(engine, HEIS)
    for rep in block_checks(b, random.Random(1), depth=1):
        assert rep.ok, (rep.check, rep.failures[:3])
        assert rep.cases > 0


def test_functional_ignoring_relations_is_caught(engine):
    # 1 on every (p, m, q) with no relations imposed: not a block, and the checks must say so
    space = engine.blocks(CROSS)
    d = space.datum
    cols = tuple((p, m, q) for m in d.m1.basis(d.window) for p in d.U3 for q in d.U2)
    fake = RestrictedBlock(BlockSpace(d, RowSpace(), cols), {c: 1 for c in cols})
    alg = d.algebra
    wt1 = [a for a, _, wt in alg.eigen_basis(1) if wt == 1]
    vs = [{m: ONE} for m in d.m1.basis(1)]
    assert not check_locality(fake, wt1, vs).ok
    assert not check_l1(fake, wt1, vs[:1]).ok


def test_generating_and_intertwiner_jacobi(engine):
    rep = generating_suite(only_block(engine, HEIS), depth=1)
    assert rep.ok and rep.cases > 50


def test_intertwiner_vacuum_mode_is_identity(engine):
    b = only_block(engine, SAME)
    ext = ExtendedBlock(b, 1)
    v = {b.datum.m1.bottom()[0]: ONE}
    tgt, src, entries = intertwiner_modes(ext, v, -1, 0)
    assert len(tgt) == len(src) == 1
    assert entries == {(0, 0): 1}
