from gmpy2 import mpq

from voatwist.linalg import RowSpace, nullspace, rank_of, solve_in_span


def test_rank_and_reduce():
    rows = [{"a": 1, "b": 2}, {"a": 2, "b": 4}, {"b": 1, "c": 1}]
    assert rank_of(rows) == 2
    rs = RowSpace()
    rs.extend(rows)
    assert rs.contains({"a": 1, "b": 3, "c": 1})
    assert not rs.contains({"c": 1, "a": 5})


def test_nullspace_is_annihilated():
    rows = [{"x": 1, "y": -1}, {"y": 1, "z": -2}]
    basis = nullspace(rows, ["x", "y", "z"])
    assert len(basis) == 1
    v = basis[0]
    for r in rows:
        assert sum(c * v.get(k, 0) for k, c in r.items()) == 0


def test_solve_in_span():
    vecs = [{"e1": 1}, {"e2": 1}]
    assert solve_in_span(vecs, {"e1": 2, "e2": 3}) == [mpq(2), mpq(3)]
    assert solve_in_span(vecs, {"e3": 1}) is None
