"""Property suites shared by the CLI selftest and the test-suite.

Each suite returns a CheckReport; ``data`` carries the computed numbers so
callers can assert on values and not only on the pass flag.
"""

from __future__ import annotations

import random
from fractions import Fraction

from gmpy2 import mpq

from .correlation import (
    CheckReport,
    ExtendedBlock,
    WindowExceeded,
    check_associativity,
    check_generating,
    check_l1,
    check_locality,
    check_monomial,
    check_vacuum,
    intertwiner_jacobi_defect,
    n_point,
)
from .fusion import STANDARD_QUERIES, FusionEngine
from .kernels import derivative_identities, f_kernel, f_kernel_expansion, kernel_recurrence_defect, residue_sum
from .series import ExpansionSite, MultiPointFunction, expand, rational_equal
from .voa import ONE, FockModule, TwistedModule, VertexAlgebra, jacobi_component_defect, to_fraction
from .zhu import graded_surjection_check, quotient_algebra, quotient_bimodule

HALF_GRID = [Fraction(k, 2) for k in range(-4, 5)]


def _sites(n, i, terms):
    """(site, trunc) pairs giving `terms` exponents at each site."""
    return [
        (ExpansionSite.at_zero("z"), terms - 1 - n),
        (ExpansionSite.at_infinity("z"), -n - terms),
        (ExpansionSite.at_diagonal("z", "w"), terms - 2 - i),
    ]


def kernel_suite(terms=12, max_i=4):
    rep = CheckReport("kernels")
    for n in HALF_GRID:
        for i in range(max_i + 1):
            rep.record(kernel_recurrence_defect(n, i).is_zero(), ("recurrence", str(n), i))
            dw, dz = derivative_identities(n, i)
            rep.record(dw.is_zero() and dz.is_zero(), ("derivatives", str(n), i))
            f = f_kernel(n, i)
            for site, trunc in _sites(n, i, terms):
                closed = f_kernel_expansion(n, i, site, trunc)
                generic = expand(f, site, trunc)
                rep.record(closed == generic, ("expansion", site.tag, str(n), i))
    return rep


def random_two_point(rng, T=2):
    """g(z, w^{1/T}) / (z^{r/T} z^m w^{n/T} (z-w)^l) with small random data; returns (f, r)."""
    r = rng.randrange(T)
    m = rng.randint(-2, 2)
    n = rng.randint(-3, 3)
    l = rng.randint(0, 3)
    variables = ("z", "w")
    g = MultiPointFunction.zero(variables)
    for _ in range(rng.randint(1, 4)):
        c = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
        g = g + MultiPointFunction.monomial(variables, {"z": rng.randint(0, 3), "w": Fraction(rng.randint(0, 2 * T), T)}, c)
    f = g.mul_monomial({"z": -Fraction(r, T) - m, "w": -Fraction(n, T)})
    f = f * MultiPointFunction.difference_power(variables, "z", "w", -l)
    return f, r


def residue_suite(count=50, seed=0, T=2):
    rng = random.Random(seed)
    rep = CheckReport("residue-sum")
    for k in range(count):
        f, r = random_two_point(rng, T)
        total = residue_sum(f, r, T)
        rep.record(not total.terms, ("sample", k, str(f)))
    return rep


def jacobi_suite(max_weight=2, depth=2, grid=range(-2, 3)):
    """Twisted Jacobi components on M(1)_tw and both twisted lattice modules."""
    rep = CheckReport("jacobi")
    H = VertexAlgebra.heisenberg()
    L = VertexAlgebra.lattice_a1()
    for alg, module in ((H, TwistedModule(H)), (L, TwistedModule(L, 1)), (L, TwistedModule(L, -1))):
        eb = alg.eigen_basis(max_weight)
        vs = module.basis(depth)
        for a, r, _ in eb:
            for b, s, _ in eb:
                for m in grid:
                    for n in grid:
                        for l in grid:
                            for u in vs:
                                d = jacobi_component_defect(module, a, b, m, n, l, {u: ONE}, r, s)
                                if d:
                                    rep.record(False, (module.name, m, n, l, str(u)))
                                else:
                                    rep.cases += 1
    return rep


def zhu_suite(windows=(5, 6)):
    rep = CheckReport("zhu")
    data = {}
    for alg in (VertexAlgebra.heisenberg(), VertexAlgebra.lattice_a1()):
        for w in windows:
            A = quotient_algebra(alg, w)
            entry = {"dim": A.dim, "basis": [str(b) for b in A.basis]}
            rep.record(A.is_associative(), (alg.name, w, "associative"))
            rep.record(A.identity_ok(), (alg.name, w, "identity"))
            rep.record(A.omega_central(), (alg.name, w, "omega central"))
            if alg.lattice:
                ea = A.reduction.coordinates({alg.exp_vector((1,)): ONE})
                entry["e_alpha_squared"] = [to_fraction(c) for c in A.multiply(ea, ea)]
                entry["identity"] = [to_fraction(c) for c in A.unit(A.identity_index)]
            data[alg.name, w] = entry
    rep.data = data
    return rep


def bimodule_suite(window=4):
    rep = CheckReport("bimodule")
    H = VertexAlgebra.heisenberg()
    L = VertexAlgebra.lattice_a1()
    data = {}
    B = quotient_bimodule(H, FockModule(H, (2,)), "A", window)
    rep.record(B.actions_commute(), ("M(1,1)", "commute"))
    data["M(1,1)"] = B
    M = FockModule(L, (1,))
    B = quotient_bimodule(L, M, "A", window)
    rep.record(B.actions_commute(), ("V{L+a/2}", "commute"))
    data["V{L+a/2}"] = B
    # [E]*m - m*[E] with E = e^a + e^-a should swap [e^{a/2}] and [e^{-a/2}]
    A = B.algebra_quotient
    E = A.reduction.coordinates({L.exp_vector((1,)): ONE, L.exp_vector((-1,)): ONE})
    bracket = []
    for k in range(B.dim):
        u = [mpq(int(t == k)) for t in range(B.dim)]
        out = [mpq(0)] * B.dim
        for i, c in enumerate(E):
            if c:
                for t, (x, y) in enumerate(zip(B.left(i, u), B.right(i, u))):
                    out[t] += c * (x - y)
        bracket.append([to_fraction(c) for c in out])
    data["bracket"] = bracket
    rep.record(bracket == [[0, 1], [1, 0]], ("V{L+a/2}", "bracket", bracket))
    rep.data = data
    return rep


def fusion_suite(window=4, queries=STANDARD_QUERIES, engine=None):
    """Both routes on every query; data maps query -> (tensor, blocks, stable)."""
    engine = engine or FusionEngine(window)
    rep = CheckReport("fusion")
    data = {}
    for q in queries:
        out = engine.cross_validate(q, strict=False)
        data[q] = (out["tensor"], out["blocks"], out["stable"])
        rep.record(out["tensor"] == out["blocks"], (q.label(), out["tensor"], out["blocks"]))
    rep.data = data
    return rep


def lambda_suite(window=4, queries=STANDARD_QUERIES, engine=None):
    engine = engine or FusionEngine(window)
    rep = CheckReport("lambda")
    data = {}
    for q in queries:
        dims = engine.lambda_dimensions(q)
        data[q] = dims
        rep.record(dims["B(lam1)"] == dims["B(lam2)"] == dims["A"],
                   (q.label(), dims["B(lam1)"], dims["B(lam2)"], dims["A"]))
    rep.data = data
    return rep


def surjection_suite(window=4):
    rep = CheckReport("surjection")
    for alg in (VertexAlgebra.heisenberg(), VertexAlgebra.lattice_a1()):
        details = []
        rep.record(graded_surjection_check(alg, window, report=details), (alg.name, details))
    return rep


BLOCK_CHECKS = ("monomial", "locality", "assoc", "l-1", "vacuum", "order", "generating")


def block_checks(block, rng=None, depth=1, which=BLOCK_CHECKS):
    """Run the selected reconstruction properties on one block; returns a list of reports."""
    rng = rng or random.Random(0)
    d = block.datum
    alg = d.algebra
    wt1 = [a for a, _, wt in alg.eigen_basis(1) if wt == 1]
    wt2 = [a for a, _, wt in alg.eigen_basis(2) if wt == 2]
    sample2 = rng.sample(wt2, min(2, len(wt2))) + [alg.omega()]
    vs = [{m: ONE} for m in d.m1.basis(1)]
    low = [{m: ONE} for m in d.m1.basis(0)]
    reps = []
    if "monomial" in which:
        reps.append(check_monomial(block, [{m: ONE} for m in d.m1.basis(d.window)]))
    if "locality" in which:
        rep = check_locality(block, wt1, vs)
        reps.append(check_locality(block, sample2, low, rep))
    if "l-1" in which:
        reps.append(check_l1(block, wt1 + sample2, low))
    if "vacuum" in which:
        reps.append(check_vacuum(block, wt1, vs))
    if "assoc" in which:
        assoc = CheckReport("associativity")
        for k in range(-2, 4):
            for a in wt1 + sample2:
                for v in vs if a in wt1 else low:
                    check_associativity(block, (a, v), k, assoc)
            for a1 in wt1:
                for a2 in wt1:
                    check_associativity(block, (a1, a2, low[0]), k, assoc)
        reps.append(assoc)
    if "order" in which:
        order = CheckReport("n-point order")
        for a1 in wt1:
            for a2 in wt1:
                ref = n_point(block, [a1, a2], low[0], 2)
                for ins in (0, 1):
                    order.record(rational_equal(ref, n_point(block, [a1, a2], low[0], ins)), ("order", ins))
        reps.append(order)
    if "generating" in which:
        reps.append(generating_suite(block, depth))
    return reps


def reconstruction_suite(window=4, seed=0, queries=STANDARD_QUERIES, engine=None, depth=1, which=BLOCK_CHECKS):
    """Reconstruction properties on every nonzero block of the query list; {tag: [reports]}."""
    engine = engine or FusionEngine(window)
    rng = random.Random(seed)
    reports = {}
    for q in queries:
        for idx, block in enumerate(engine.blocks(q).blocks()):
            reports[f"{q.label()}#{idx}"] = block_checks(block, rng, depth, which)
    return reports


def generating_suite(block, depth=1):
    rep = CheckReport("generating")
    ext = ExtendedBlock(block, depth)
    d = block.datum
    alg = d.algebra
    wt1 = [a for a, _, wt in alg.eigen_basis(1) if wt == 1]
    v0 = {d.m1.bottom()[0]: ONE}
    ext.consistency([([], v0), ([wt1[0]], v0)], rep)
    half = Fraction(1, alg.T)
    for side in ("M2", "M3"):
        words = [None] + (ext.words2 if side == "M2" else ext.words3).get(half, [])
        for a, r, wt in alg.eigen_basis(2):
            if wt == 0:
                continue
            for k in range(-4 * alg.T, 4 * alg.T + 1):
                m = Fraction(k, alg.T)
                if (m - Fraction(r, alg.T)) % 1:
                    continue
                for word in words:
                    ok = check_generating(ext, a, m, side, v0, word)
                    if ok is not None:
                        rep.record(ok, (side, str(m), str(word and word[1])))
    jac = CheckReport("intertwiner jacobi")
    for a in wt1:
        for m in range(-2, 3):
            for k2 in range(-4, 3):
                for l in range(3):
                    try:
                        defect = intertwiner_jacobi_defect(ext, a, v0, m, Fraction(k2, alg.T), l)
                    except WindowExceeded:
                        continue
                    jac.record(not defect, ("jacobi", m, k2, l))
    rep.cases += jac.cases
    rep.failures += jac.failures
    return rep


__all__ = [
    "kernel_suite",
    "residue_suite",
    "random_two_point",
    "jacobi_suite",
    "zhu_suite",
    "bimodule_suite",
    "fusion_suite",
    "lambda_suite",
    "surjection_suite",
    "reconstruction_suite",
    "block_checks",
    "BLOCK_CHECKS",
    "generating_suite",
]
