from fractions import Fraction as F

import pytest

from voatwist.checks import fusion_suite
from voatwist.fusion import (
    STANDARD_QUERIES,
    FusionEngine,
    FusionQuery,
    Mismatch,
    make_algebra,
    make_module,
    table,
)

EXPECTED = {
    ("heisenberg", "M(1,1)", "M(1)_tw", "M(1)_tw"): 1,
    ("lattice-a1", "V", "T+", "T+"): 1,
    ("lattice-a1", "V", "T+", "T-"): 0,
    ("lattice-a1", "V{L+a/2}", "T+", "T+"): 0,
    ("lattice-a1", "V{L+a/2}", "T+", "T-"): 1,
    ("lattice-a1", "V", "T-", "T-"): 1,
    ("lattice-a1", "V", "T-", "T+"): 0,
    ("lattice-a1", "V{L+a/2}", "T-", "T-"): 0,
    ("lattice-a1", "V{L+a/2}", "T-", "T+"): 1,
}


def key(q):
    return (q.voa, q.m1, q.m2, q.m3)


@pytest.mark.parametrize("q", STANDARD_QUERIES, ids=lambda q: q.label())
def test_both_routes(engine, q):
    out = engine.cross_validate(q)
    assert out["tensor"] == out["blocks"] == EXPECTED[key(q)]
    assert out["stable"]


def test_small_window_agrees():
    rep = fusion_suite(window=2)
    assert rep.ok
    assert {key(q): t for q, (t, _, _) in rep.data.items()} == EXPECTED


def test_weights(engine):
    assert engine.weights(STANDARD_QUERIES[0]) == (F(1, 2), F(1, 16), F(1, 16))
    assert engine.weights(STANDARD_QUERIES[3]) == (F(1, 4), F(1, 16), F(1, 16))


def test_upper_bound(engine):
    for q in STANDARD_QUERIES:
        n3 = engine.bottom(q.voa, q.m3).dim
        n2 = engine.bottom(q.voa, q.m2).dim
        assert engine.tensor(q) <= n3 * engine.bimodule(q).dim * n2


def test_lambda_zero_quotient_equals_a(engine):
    for q in STANDARD_QUERIES:
        dims = engine.lambda_dimensions(q)
        assert dims["lam1"] == 0
        assert dims["B(lam1)"] == dims["A"]


def test_lambda_shift_collapses_the_bimodule(engine):
    # (L(-1)+L(0)) u is congruent to [omega]*u - u*[omega]; with lambda = 1 the quotient dies
    for q in STANDARD_QUERIES:
        assert engine.bimodule(q.with_mode("B", F(1))).dim == 0


def test_mismatch_is_raised(monkeypatch):
    eng = FusionEngine(2)
    monkeypatch.setattr(eng, "tensor", lambda q, window=None: 5)
    with pytest.raises(Mismatch):
        eng.cross_validate(STANDARD_QUERIES[0], strict=True)


def test_unknown_names():
    with pytest.raises(ValueError):
        make_algebra("virasoro")
    with pytest.raises(ValueError):
        make_module(make_algebra("heisenberg"), "T+")


def test_label_and_table():
    q = FusionQuery("lattice-a1", "V{L+a/2}", "T+", "T-")
    assert q.label() == "lattice-a1: V{L+a/2} x T+ -> T- [A_g]"
    assert q.with_mode("B", F(1, 2)).label().endswith("[B_g(1/2)]")
    tex = table([(q, 1, 1)])
    assert tex.startswith(r"\begin{tabular}")
    assert r"$V_{L+\alpha/2}$ & $V_L^{T_{\chi}}$ & $V_L^{T_{-\chi}}$ & 1 & 1 \\" in tex
