"""Acceptance criteria, one test each, with wall-clock limits.

Every criterion prints a single PASS/FAIL line (also collected into the
pytest terminal summary).  Run standalone with ``python3 tests/test_acceptance.py``.
"""

import time
from fractions import Fraction as F

import pytest

from voatwist import checks
from voatwist.fusion import STANDARD_QUERIES, FusionEngine

LINES = []

FUSION_TABLE = {
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


def _failures(rep):
    return f"{rep.cases} cases, {len(rep.failures)} failures"


def kernels():
    rep = checks.kernel_suite(terms=12, max_i=4)
    return rep.ok and rep.cases == 9 * 5 * 5, _failures(rep)


def residues():
    rep = checks.residue_suite(count=50, seed=0, T=2)
    return rep.ok and rep.cases == 50, _failures(rep)


def jacobi():
    rep = checks.jacobi_suite(max_weight=2, depth=2, grid=range(-2, 3))
    return rep.ok and rep.cases > 0, _failures(rep)


def zhu():
    rep = checks.zhu_suite(windows=(5, 6))
    ok = rep.ok
    for w in (5, 6):
        h = rep.data["heisenberg", w]
        l = rep.data["lattice-a1", w]
        ok &= h["dim"] == 1 and l["dim"] == 2
        ok &= l["e_alpha_squared"] == [x * F(1, 16) for x in l["identity"]]
    ok &= rep.data["lattice-a1", 5]["basis"] == rep.data["lattice-a1", 6]["basis"]
    dims = {k: v["dim"] for k, v in rep.data.items()}
    sq = [str(x) for x in rep.data["lattice-a1", 6]["e_alpha_squared"]]
    return ok, f"dims {dims}, [e^a]*[e^a] = {sq} in basis {rep.data['lattice-a1', 6]['basis']}"


def bimodules():
    rep = checks.bimodule_suite(window=4)
    heis = [str(b) for b in rep.data["M(1,1)"].basis]
    half = sorted(str(b) for b in rep.data["V{L+a/2}"].basis)
    ok = rep.ok and heis == ["e(1/1)"] and half == ["e(-1/2)", "e(1/2)"] and rep.data["bracket"] == [[0, 1], [1, 0]]
    bracket = [[str(x) for x in row] for row in rep.data["bracket"]]
    return ok, f"A(M(1,1)) = {heis}, A(V_(L+a/2)) = {half}, [E, -] = {bracket}"


def fusion():
    engine = FusionEngine(4)
    rep = checks.fusion_suite(engine=engine)
    got = {(q.voa, q.m1, q.m2, q.m3): t for q, (t, b, _) in rep.data.items()}
    strict = all(engine.cross_validate(q)["tensor"] == FUSION_TABLE[q.voa, q.m1, q.m2, q.m3] for q in STANDARD_QUERIES)
    return rep.ok and got == FUSION_TABLE and strict, f"{len(got)} queries, both routes {'agree' if rep.ok else 'DISAGREE'}"


def reconstruction():
    reports = checks.reconstruction_suite(window=4, seed=0, depth=1)
    nonzero = sum(1 for v in FUSION_TABLE.values() if v)
    cases = sum(r.cases for reps in reports.values() for r in reps)
    bad = [(tag, r.check, r.failures[:2]) for tag, reps in reports.items() for r in reps if not r.ok]
    empty = [(tag, r.check) for tag, reps in reports.items() for r in reps if not r.cases]
    return len(reports) == nonzero and not bad and not empty, f"{len(reports)} blocks, {cases} cases, failures {bad}"


def lambda_insensitivity():
    rep = checks.lambda_suite(window=4)
    rows = [f"{q.m1}/{q.m2}->{q.m3}: {d['B(lam1)']},{d['B(lam2)']},{d['A']}" for q, d in rep.data.items()]
    return rep.ok, "B(h2-h3), B(h2-h3+1), A: " + "; ".join(rows)


def surjection():
    rep = checks.surjection_suite(window=4)
    return rep.ok and rep.cases == 2, _failures(rep)


CRITERIA = [
    (1, "kernel suite", kernels, 5),
    (2, "residue sum formula", residues, 10),
    (3, "twisted Jacobi components", jacobi, 60),
    (4, "twisted Zhu algebras", zhu, 120),
    (5, "bimodules", bimodules, 120),
    (6, "fusion table, both routes", fusion, 300),
    (7, "reconstruction properties", reconstruction, 300),
    (8, "lambda-insensitivity", lambda_insensitivity, None),
    (9, "graded surjection", surjection, None),
]


def evaluate(number, title, fn, limit):
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    in_time = limit is None or elapsed < limit
    budget = f"{elapsed:.1f}s" + (f" < {limit}s" if limit else "")
    status = "PASS" if ok and in_time else "FAIL"
    line = f"{status} criterion {number} ({title}) [{budget}]: {detail}"
    if not in_time:
        line += " (over time limit)"
    LINES.append(line)
    print(line)
    return ok and in_time, line


@pytest.mark.parametrize("number, title, fn, limit", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, limit):
    ok, line = evaluate(number, title, fn, limit)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(*c)[0] for c in CRITERIA]
    raise SystemExit(0 if all(results) else 1)
