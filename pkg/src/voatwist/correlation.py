"""Restricted conformal blocks and the correlation functions they generate.

A block is a functional phi on U3 (x) M1 (x) U2 that kills the relation
space J.  U2 is the bottom level of a twisted module M2 and U3 the dual of the
bottom level of M3; both carry the zero-mode action o(a) of the engine.  The
(n+3)-point functions are rebuilt from phi by the two recursions (peel an
insertion towards U3 or towards U2) and every property is checked as an exact
identity of rational functions.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from .kernels import f_kernel
from .linalg import RowSpace, nullspace, solve_in_span
from .series import MultiPointFunction, as_q, coefficient_at, fmt_q, rational_equal
from .voa import ONE, to_fraction, vadd
from .zhu import _delta, circle_g, monomial_key, right_star, star_g

log = logging.getLogger(__name__)


class WindowExceeded(ValueError):
    pass


def _freeze(v):
    return frozenset(v.items())


def _homogeneous_parts(module, v):
    parts = {}
    for m, c in v.items():
        parts.setdefault(module.degree(m), {})[m] = c
    return parts


class BlockDatum:
    """Sigma_1(U3, M1, U2): bottom levels of M2 (left) and M3 (dual, right) around M1.

    ``window`` bounds the degree of M1 vectors on which blocks are read off;
    relations are generated up to window + slack.
    """

    def __init__(self, algebra, m1, m2, m3, window=4, slack=2):
        self.algebra = algebra
        self.m1, self.m2, self.m3 = m1, m2, m3
        self.window = as_q(window)
        self.slack = as_q(slack)
        self.h1 = m1.bottom_weight
        self.h2 = m2.bottom_weight
        self.h3 = m3.bottom_weight
        self.h = self.h1 + self.h2 - self.h3
        self.U2 = list(m2.bottom())
        self.U3 = list(m3.bottom())

    @property
    def name(self):
        return f"{self.m3.name}<-{self.m1.name}<-{self.m2.name}"

    def _zero(self, a):
        alg = self.algebra
        return alg.project(a, 0) if alg.T > 1 else a

    def act_u2(self, a, u2):
        """[a] . u2 = o(a^0) u2 on the bottom of M2."""
        a0 = self._zero(a)
        out = {}
        for wt, comp in _by_weight(self.algebra, a0).items():
            vadd(out, self.m2.apply(comp, wt - 1, u2))
        return out

    def act_u3(self, u3, a):
        """u3 . [a] = u3 o o(a^0) for a functional u3 on the bottom of M3."""
        a0 = self._zero(a)
        out = {}
        for t in self.U3:
            img = {}
            for wt, comp in _by_weight(self.algebra, a0).items():
                vadd(img, self.m3.apply(comp, wt - 1, {t: ONE}))
            c = sum((u3.get(p, 0) * x for p, x in img.items()), mpq(0))
            if c:
                out[t] = c
        return out

    def omega_scalars(self):
        """Eigenvalues of [omega] on U2 and U3, as (list, list)."""
        om = self.algebra.omega()
        s2 = [self.act_u2(om, {u: ONE}).get(u, 0) for u in self.U2]
        s3 = [self.act_u3({u: ONE}, om).get(u, 0) for u in self.U3]
        return [to_fraction(x) for x in s2], [to_fraction(x) for x in s3]

    def invariants_ok(self):
        om = self.algebra.omega()
        for u in self.U2:
            if self.act_u2(om, {u: ONE}) != {u: mpq(self.h2)}:
                return False
        for u in self.U3:
            if self.act_u3({u: ONE}, om) != {u: mpq(self.h3)}:
                return False
        return True


def _by_weight(algebra, a):
    parts = {}
    for m, c in a.items():
        parts.setdefault(algebra.weight(m), {})[m] = c
    return parts


def _eigen_parts(algebra, a):
    """Split a vector of V into (r, weight, component) pieces."""
    out = []
    for s in range(algebra.T):
        comp = algebra.project(a, s) if algebra.T > 1 else dict(a)
        if comp:
            for wt, piece in sorted(_by_weight(algebra, comp).items()):
                out.append((s, wt, piece))
    return out


def _tensor(u3, v, u2):
    out = {}
    for p, cp in u3.items():
        for m, cm in v.items():
            for q, cq in u2.items():
                c = cp * cm * cq
                if c:
                    k = (p, m, q)
                    x = out.get(k, 0) + c
                    if x:
                        out[k] = x
                    else:
                        del out[k]
    return out


def j_generators(datum: BlockDatum, work=None):
    """Spanning vectors of J inside U3 (x) M1_{<= work} (x) U2, keyed by (p, m, q)."""
    alg = datum.algebra
    M = datum.m1
    work = datum.window + datum.slack if work is None else as_q(work)
    space = M.basis(work)
    degs = {m: M.degree(m) for m in space}
    gens = []
    for p in datum.U3:
        for q in datum.U2:
            u3, u2 = {p: ONE}, {q: ONE}
            for m in space:
                if degs[m] + 1 > work:
                    continue
                v = {m: ONE}
                rel = vadd(dict(M.virasoro(-1, v)), v, mpq(degs[m] + datum.h))
                gens.append(_tensor(u3, rel, u2))
            for a, r, wa in alg.eigen_basis(work):
                if wa == 0:
                    continue
                for m in space:
                    if degs[m] + wa > work:
                        continue
                    v = {m: ONE}
                    if r == 0:
                        rel = _tensor(datum.act_u3(u3, a), v, u2)
                        vadd(rel, _tensor(u3, star_g(alg, a, v, M), u2), -ONE)
                        gens.append(rel)
                        rel = _tensor(u3, v, datum.act_u2(a, u2))
                        vadd(rel, _tensor(u3, right_star(alg, v, a, M), u2), -ONE)
                        gens.append(rel)
                    else:
                        gens.append(_tensor(u3, circle_g(alg, a, v, M, 0, r), u2))
    return [g for g in gens if g]


@dataclass
class BlockSpace:
    datum: BlockDatum
    rows: RowSpace
    basis: tuple  # surviving columns (p, m, q) of degree <= window

    @property
    def dim(self):
        return len(self.basis)

    def normal_form(self, x):
        nf = self.rows.reduce(x)
        M = self.datum.m1
        for _, m, _ in nf:
            if M.degree(m) > self.datum.window:
                raise WindowExceeded(f"degree {M.degree(m)} beyond block window {self.datum.window}")
        return nf

    def blocks(self):
        return [RestrictedBlock(self, {c: ONE}) for c in self.basis]

    def vanishes_on_j(self, block):
        return all(block.pair(row) == 0 for row in self.rows.rows.values() if self._inside(row))

    def _inside(self, row):
        M = self.datum.m1
        return all(M.degree(m) <= self.datum.window for _, m, _ in row)


def solve_blocks(datum: BlockDatum) -> BlockSpace:
    """Blocks on the window: the dual of (U3 (x) M1 (x) U2)_{<= N} / J.

    Pivots are ranked by degree first, so relations reduce top-down and the
    non-pivot columns of degree <= N form a basis of the quotient.
    """
    mk = monomial_key(datum.algebra, datum.m1)
    rows = RowSpace(lambda c: (mk(c[1]), c[0].label, c[2].label))
    n = rows.extend(j_generators(datum))
    log.debug("solve_blocks %s: rank %d", datum.name, n)
    cols = [
        (p, m, q)
        for m in datum.m1.basis(datum.window)
        for p in datum.U3
        for q in datum.U2
        if (p, m, q) not in rows.rows
    ]
    cols.sort(key=rows.rank_key)
    return BlockSpace(datum, rows, tuple(cols))


class RestrictedBlock:
    """phi as a combination of the coordinate functionals of a BlockSpace."""

    def __init__(self, space: BlockSpace, coeffs):
        self.space = space
        self.datum = space.datum
        self.coeffs = {c: mpq(x) for c, x in coeffs.items() if x}
        self._cache = {}

    def pair(self, x):
        """phi on an element of U3 (x) M1 (x) U2 already in normal form or not."""
        nf = self.space.normal_form(x)
        return sum((self.coeffs.get(c, 0) * x for c, x in nf.items()), mpq(0))

    def phi(self, u3, v, u2):
        return self.pair(_tensor(u3, v, u2))

    def is_zero(self):
        return not self.coeffs

    def table(self):
        """phi on the surviving columns, as strings."""
        return {f"{p.label}|{m}|{q.label}": fmt_q(to_fraction(c)) for (p, m, q), c in self.coeffs.items()}

    # -- correlation functions --------------------------------------------

    def correlate(self, variables, u3, left, v, right, u2):
        """S(u3 | left... (v,w) ...right | u2) with insertions (var, vector) of V.

        Insertions in ``left`` are peeled first-to-last with the U3 recursion,
        those in ``right`` last-to-first with the U2 recursion.
        """
        key = (variables, _freeze(u3), tuple((z, _freeze(a)) for z, a in left), _freeze(v),
               tuple((z, _freeze(a)) for z, a in right), _freeze(u2))
        hit = self._cache.get(key)
        if hit is None:
            hit = self._correlate(variables, u3, list(left), v, list(right), u2)
            self._cache[key] = hit
        return hit

    def _correlate(self, variables, u3, left, v, right, u2):
        zero = MultiPointFunction.zero(variables)
        if not u3 or not u2 or not v:
            return zero
        if not left and not right:
            out = zero
            for d, piece in _homogeneous_parts(self.datum.m1, v).items():
                c = self.phi(u3, piece, u2)
                if c:
                    out = out + MultiPointFunction.monomial(variables, {"w": -d}, to_fraction(c))
            return out
        if left:
            (z, a), rest_l, rest_r, towards = left[0], left[1:], right, "u3"
        else:
            (z, a), rest_l, rest_r, towards = right[-1], left, right[:-1], "u2"
        alg = self.datum.algebra
        M = self.datum.m1
        T = alg.T
        out = zero
        for r, wt, comp in _eigen_parts(alg, a):
            if r == 0:
                if towards == "u3":
                    head = self.correlate(variables, self.datum.act_u3(u3, comp), rest_l, v, rest_r, u2)
                else:
                    head = self.correlate(variables, u3, rest_l, v, rest_r, self.datum.act_u2(comp, u2))
                if head:
                    out = out + head.mul_monomial({z: -wt})
            n = wt - 1 + Fraction(r, T) + (_delta(r) if towards == "u3" else 0)
            others = [("l", k, zk, b) for k, (zk, b) in enumerate(rest_l)]
            others += [("r", k, zk, b) for k, (zk, b) in enumerate(rest_r)]
            for side, k, zk, b in others:
                top = wt + max(alg.weight(x) for x in b) - 1 if b else -1
                for i in range(int(top) + 1 if top >= 0 else 0):
                    c = alg.nth_product(comp, i, b)
                    if not c:
                        continue
                    nl, nr = list(rest_l), list(rest_r)
                    (nl if side == "l" else nr)[k] = (zk, c)
                    sub = self.correlate(variables, u3, nl, v, nr, u2)
                    if sub:
                        out = out + _kernel(n, i, variables, z, zk) * sub
            top = wt - 1 + max(M.degree(m) for m in v)
            for i in range(int(top) + 1 if top >= 0 else 0):
                c = M.apply(comp, i, v)
                if not c:
                    continue
                sub = self.correlate(variables, u3, rest_l, c, rest_r, u2)
                if sub:
                    out = out + _kernel(n, i, variables, z, "w") * sub
        return out


_KERNELS = {}


def _kernel(n, i, variables, z, w):
    key = (n, i, variables, z, w)
    f = _KERNELS.get(key)
    if f is None:
        f = _KERNELS[key] = f_kernel(n, i, variables, z, w)
    return f


def _vars(n):
    return tuple(f"z{k}" for k in range(1, n + 1)) + ("w",)


def _default_u(block, u3, u2):
    d = block.datum
    return u3 if u3 is not None else {d.U3[0]: ONE}, u2 if u2 is not None else {d.U2[0]: ONE}


def three_point(block, u3, v, u2):
    """phi(u3 (x) v (x) u2) w^{-deg v}, summed over homogeneous parts."""
    return block.correlate(("w",), u3, [], v, [], u2)


def four_point(block, a, v, side="left", u3=None, u2=None):
    u3, u2 = _default_u(block, u3, u2)
    variables = _vars(1)
    if side == "left":
        return block.correlate(variables, u3, [("z1", a)], v, [], u2)
    return block.correlate(variables, u3, [], v, [("z1", a)], u2)


ROUTES = ("LL", "LR", "RL", "RR")


def five_point(block, a1, a2, v, route="LL", u3=None, u2=None):
    """S(u3|(a1,z1)(a2,z2)(v,w)|u2); the first letter peels a1, the second a2."""
    u3, u2 = _default_u(block, u3, u2)
    variables = _vars(2)
    first, second = route
    if first == "L":
        return block.correlate(variables, u3, [("z1", a1)] + ([("z2", a2)] if second == "L" else []), v,
                               [] if second == "L" else [("z2", a2)], u2)
    # a1 peeled towards U2 first: it sits last on the right
    if second == "L":
        return block.correlate(variables, u3, [("z2", a2)], v, [("z1", a1)], u2)
    return block.correlate(variables, u3, [], v, [("z2", a2), ("z1", a1)], u2)


def n_point(block, a_list, v, insertion_index=None, u3=None, u2=None):
    """S with a_list at z1..zn; the first insertion_index of them are peeled towards U3."""
    u3, u2 = _default_u(block, u3, u2)
    n = len(a_list)
    if insertion_index is None:
        insertion_index = n
    if not 0 <= insertion_index <= n:
        raise ValueError("insertion index out of range")
    variables = _vars(n)
    items = [(f"z{k + 1}", a) for k, a in enumerate(a_list)]
    try:
        return block.correlate(variables, u3, items[:insertion_index], v, items[insertion_index:], u2)
    except RecursionError as exc:  # pragma: no cover
        raise WindowExceeded(str(exc)) from exc


# -- property checks -------------------------------------------------------


@dataclass
class CheckReport:
    check: str
    cases: int = 0
    failures: list = field(default_factory=list)

    def record(self, ok, case):
        self.cases += 1
        if not ok:
            self.failures.append(case)

    @property
    def ok(self):
        return not self.failures

    def to_json(self):
        return {"check": self.check, "cases": self.cases, "failures": [str(f) for f in self.failures]}


def _name(v):
    return " + ".join(f"{fmt_q(to_fraction(c))}*{m}" for m, c in sorted(v.items(), key=lambda t: str(t[0])))


def check_monomial(block, vectors, report=None):
    report = report or CheckReport("monomial")
    d = block.datum
    for p in d.U3:
        for q in d.U2:
            for v in vectors:
                for deg, piece in _homogeneous_parts(d.m1, v).items():
                    f = three_point(block, {p: ONE}, piece, {q: ONE}).mul_monomial({"w": deg})
                    report.record(not f.depends_on("w"), ("monomial", _name(piece)))
    return report


def check_locality(block, a_list, vectors, report=None):
    """Four-point left = right and equality of all five-point routes (both orders)."""
    report = report or CheckReport("locality")
    for a in a_list:
        for v in vectors:
            report.record(rational_equal(four_point(block, a, v, "left"), four_point(block, a, v, "right")),
                          ("4pt", _name(a), _name(v)))
    for a1, a2 in itertools.combinations_with_replacement(a_list, 2):
        for v in vectors:
            ref = five_point(block, a1, a2, v, "LL")
            for route in ROUTES[1:]:
                report.record(rational_equal(ref, five_point(block, a1, a2, v, route)),
                              ("5pt", route, _name(a1), _name(a2), _name(v)))
            swapped = _swap(five_point(block, a2, a1, v, "LL"))
            report.record(rational_equal(ref, swapped), ("5pt-swap", _name(a1), _name(a2), _name(v)))
    return report


def _swap(f):
    """Exchange the roles of z1 and z2."""
    i, j = f.vars.index("z1"), f.vars.index("z2")
    perm = list(range(len(f.vars)))
    perm[i], perm[j] = j, i
    num = {tuple(e[perm[k]] for k in range(len(e))): c for e, c in f.num.items()}
    poles = {}
    sign = Fraction(1)
    for (a, b), l in f.poles.items():
        a2, b2 = perm[a], perm[b]
        if a2 > b2:
            a2, b2 = b2, a2
            sign *= (-1) ** l
        poles[(a2, b2)] = l
    num = {e: c * sign for e, c in num.items()}
    return MultiPointFunction(f.vars, num, poles)


def check_associativity(block, sample, k, report=None):
    """Residue of S (z1 - w)^k at z1 = w (or (z1 - z2)^k at z1 = z2) against the contracted value.

    ``sample`` is (a, v) for the four-point form or (a1, a2, v) for the five-point form.
    """
    alg = block.datum.algebra
    M = block.datum.m1
    if len(sample) == 2:
        a, v = sample
        f = four_point(block, a, v, "left")
        lhs = coefficient_at(f, "z1", "diagonal", -1 - k, base="w")
        u3, u2 = _default_u(block, None, None)
        rhs = block.correlate(f.vars, u3, [], M.apply(a, k, v), [], u2)
    else:
        a1, a2, v = sample
        f = five_point(block, a1, a2, v, "LL")
        lhs = coefficient_at(f, "z1", "diagonal", -1 - k, base="z2")
        u3, u2 = _default_u(block, None, None)
        c = alg.nth_product(a1, k, a2)
        rhs = block.correlate(f.vars, u3, [("z2", c)], v, [], u2) if c else MultiPointFunction.zero(f.vars)
    ok = rational_equal(lhs, rhs)
    if report is not None:
        report.record(ok, ("assoc", k) + tuple(_name(x) for x in sample))
    return ok


def check_l1(block, a_list, vectors, report=None):
    """L(-1)-derivative identities in the V slots and in the M1 slot."""
    report = report or CheckReport("l-1")
    d = block.datum
    V = d.algebra.module
    M = d.m1
    h = d.h
    for a in a_list:
        da = V.virasoro(-1, a)
        for v in vectors:
            dv = M.virasoro(-1, v)
            f = four_point(block, a, v)
            report.record(rational_equal(f.derivative("z1"), four_point(block, da, v)), ("4pt-a", _name(a), _name(v)))
            lhs = four_point(block, a, dv).mul_monomial({"w": -h})
            report.record(rational_equal(lhs, f.mul_monomial({"w": -h}).derivative("w")), ("4pt-v", _name(a), _name(v)))
    for a1, a2 in itertools.combinations(a_list, 2):
        for v in vectors:
            f = five_point(block, a1, a2, v)
            report.record(rational_equal(f.derivative("z1"), five_point(block, V.virasoro(-1, a1), a2, v)),
                          ("5pt-a", _name(a1), _name(a2), _name(v)))
            lhs = five_point(block, a1, a2, M.virasoro(-1, v)).mul_monomial({"w": -h})
            report.record(rational_equal(lhs, f.mul_monomial({"w": -h}).derivative("w")),
                          ("5pt-v", _name(a1), _name(a2), _name(v)))
    for v in vectors:
        lhs = three_point(block, {d.U3[0]: ONE}, M.virasoro(-1, v), {d.U2[0]: ONE}).mul_monomial({"w": -h})
        rhs = three_point(block, {d.U3[0]: ONE}, v, {d.U2[0]: ONE}).mul_monomial({"w": -h}).derivative("w")
        report.record(rational_equal(lhs, rhs), ("3pt-v", _name(v)))
    return report


def check_vacuum(block, a_list, vectors, report=None):
    report = report or CheckReport("vacuum")
    alg = block.datum.algebra
    one = {alg.vacuum: ONE}
    u3, u2 = _default_u(block, None, None)
    for v in vectors:
        three = block.correlate(_vars(1), u3, [], v, [], u2)
        report.record(rational_equal(four_point(block, one, v, "left"), three), ("4pt", _name(v)))
        report.record(rational_equal(four_point(block, one, v, "right"), three), ("4pt-r", _name(v)))
        for a in a_list:
            four = block.correlate(_vars(2), u3, [("z1", a)], v, [], u2)
            report.record(rational_equal(five_point(block, a, one, v, "LL"), four), ("5pt", _name(a), _name(v)))
    return report


# -- module extension beyond the bottom levels -----------------------------


def _mode_grid(algebra, a_list, target_shift):
    """(a, r, mode) with a_(mode) raising degree by target_shift."""
    out = []
    T = algebra.T
    for a in a_list:
        for r, wt, comp in _eigen_parts(algebra, a):
            m = wt - 1 - target_shift
            if (m - Fraction(r, T)) % 1 == 0:
                out.append((comp, r, m))
    return out


class ExtendedBlock:
    """A block with S extended to M2 and to the contragredient of M3 up to ``depth``.

    A vector b_(m) u2 of M2 is represented by a word and valued by a residue at
    0 of one more insertion; a functional u3' o b_(m) on M3 by a residue at
    infinity.  The engine realises each word as an honest module vector
    (resp. functional); ``consistency`` checks that S kills every linear
    relation among words that holds in the module, so S factors through M2
    and M3'.
    """

    def __init__(self, block, depth=1, generators=None):
        self.block = block
        self.datum = block.datum
        self.depth = as_q(depth)
        alg = self.datum.algebra
        if generators is None:
            generators = [a for a, _, wt in alg.eigen_basis(2) if 0 < wt <= 2]
        self.generators = generators
        T = alg.T
        self.levels = [Fraction(k, T) for k in range(int(self.depth * T) + 1)]
        self.words2 = {}
        self.words3 = {}
        for d in self.levels:
            if d == 0:
                continue
            self.words2[d] = [(comp, m, q) for comp, _, m in _mode_grid(alg, generators, d) for q in self.datum.U2]
            self.words3[d] = [(comp, m, p) for comp, _, m in _mode_grid(alg, generators, -d) for p in self.datum.U3]

    # engine images
    def basis2(self, d):
        return [m for m in self.datum.m2.basis(d) if self.datum.m2.degree(m) == d]

    def basis3(self, d):
        return [m for m in self.datum.m3.basis(d) if self.datum.m3.degree(m) == d]

    def image2(self, word):
        comp, m, q = word
        return self.datum.m2.apply(comp, m, {q: ONE})

    def image3(self, word, d):
        """The functional x -> u3'(b_(m) x) on M3(d), as {basis monomial: value}."""
        comp, m, p = word
        out = {}
        for x in self.basis3(d):
            c = self.datum.m3.apply(comp, m, {x: ONE}).get(p, 0)
            if c:
                out[x] = c
        return out

    def section2(self, d, vec):
        """Express an M2(d) vector as a combination of words."""
        if d == 0:
            return [((None, None, q), c) for q, c in vec.items()]
        words = self.words2[d]
        coeffs = solve_in_span([self.image2(w) for w in words], vec)
        if coeffs is None:
            raise WindowExceeded(f"words do not span M2({d})")
        return [(w, c) for w, c in zip(words, coeffs) if c]

    def section3(self, d, func):
        if d == 0:
            return [((None, None, p), c) for p, c in func.items()]
        words = self.words3[d]
        coeffs = solve_in_span([self.image3(w, d) for w in words], func)
        if coeffs is None:
            raise WindowExceeded(f"words do not span M3'({d})")
        return [(w, c) for w, c in zip(words, coeffs) if c]

    # values
    def value(self, left, v, right, out_word=None, in_word=None):
        """S(u3 o out_word | left.. (v,w) ..right | in_word u2) with insertions at z1.. ."""
        n = len(left) + len(right)
        variables = tuple(f"z{k}" for k in range(1, n + 1)) + ("x", "y", "w")
        names = [f"z{k}" for k in range(1, n + 1)]
        L = list(zip(names[: len(left)], left))
        R = list(zip(names[len(left):], right))
        u3 = {self.datum.U3[0]: ONE}
        u2 = {self.datum.U2[0]: ONE}
        if out_word is not None:
            comp3, m3, p = out_word
            u3 = {p: ONE}
            if comp3 is not None:
                L = [("y", comp3)] + L
        if in_word is not None:
            comp2, m2, q = in_word
            u2 = {q: ONE}
            if comp2 is not None:
                R = R + [("x", comp2)]
        f = self.block.correlate(variables, u3, L, v, R, u2)
        # innermost residues: the word next to u2 at 0, the word next to u3 at infinity
        if in_word is not None and in_word[0] is not None:
            f = coefficient_at(f.mul_monomial({"x": in_word[1]}), "x", "zero", -1)
        if out_word is not None and out_word[0] is not None:
            f = coefficient_at(f.mul_monomial({"y": out_word[1]}), "y", "infinity", -1)
        return f

    def consistency(self, probes, report=None):
        """Every module relation among words is killed by S on each probe (a_list, v)."""
        report = report or CheckReport("generating-consistency")
        for d in self.levels:
            if d == 0:
                continue
            words = self.words2[d]
            cols = list(self.basis2(d))
            rows = [{i: img.get(x, 0) for i, img in enumerate(self.image2(w) for w in words)} for x in cols]
            for rel in nullspace(rows, list(range(len(words)))):
                for a_list, v in probes:
                    tot = None
                    for i, c in rel.items():
                        val = self.value(a_list, v, [], in_word=words[i]) * to_fraction(c)
                        tot = val if tot is None else tot + val
                    report.record(tot is None or tot.is_zero(), ("M2", str(d), len(rel)))
            words = self.words3[d]
            cols = list(self.basis3(d))
            imgs = [self.image3(w, d) for w in words]
            rows = [{i: img.get(x, 0) for i, img in enumerate(imgs)} for x in cols]
            for rel in nullspace(rows, list(range(len(words)))):
                for a_list, v in probes:
                    tot = None
                    for i, c in rel.items():
                        val = self.value(a_list, v, [], out_word=words[i]) * to_fraction(c)
                        tot = val if tot is None else tot + val
                    report.record(tot is None or tot.is_zero(), ("M3", str(d), len(rel)))
        return report


def check_generating(ext: ExtendedBlock, a, m, side="M2", v=None, word=None):
    """Residue of S z^m against S with the mode a_(m) pushed into M2 (at 0) or M3' (at infinity).

    ``word`` is the module vector the mode acts on (None for the bottom level);
    returns True, False, or None when the target leaves the extension depth.
    """
    d = ext.datum
    alg = d.algebra
    if v is None:
        v = {d.m1.bottom()[0]: ONE}
    m = as_q(m)
    wt = alg.weight_vec(a)
    r = alg.sector(a)
    if (m - Fraction(r, alg.T)) % 1:
        raise ValueError("mode outside the index set of a")
    if side == "M2":
        word = word or (None, None, d.U2[0])
        src = {word[2]: ONE} if word[0] is None else ext.image2(word)
        src_deg = 0 if word[0] is None else d.m2.degree(next(iter(src)))
        tgt_deg = src_deg + wt - m - 1
        if tgt_deg > ext.depth:
            return None
        variables = ("z1", "x", "y", "w")
        if word[0] is None:
            f = ext.block.correlate(variables, {d.U3[0]: ONE}, [], v, [("z1", a)], {word[2]: ONE})
        else:
            f = ext.block.correlate(variables, {d.U3[0]: ONE}, [], v, [("z1", a), ("x", word[0])], {word[2]: ONE})
            f = coefficient_at(f.mul_monomial({"x": word[1]}), "x", "zero", -1)
        lhs = coefficient_at(f.mul_monomial({"z1": m}), "z1", "zero", -1)
        target = d.m2.apply(a, m, src)
        rhs = MultiPointFunction.zero(variables)
        if tgt_deg >= 0 and target:
            for w, c in ext.section2(tgt_deg, target):
                rhs = rhs + _retag(ext.value([], v, [], in_word=w), variables) * to_fraction(c)
        return rational_equal(lhs, rhs)
    # M3 side: functional u3' o b_(k) composed with a_(m)
    word = word or (None, None, d.U3[0])
    src_deg = 0 if word[0] is None else word_degree3(ext, word)
    tgt_deg = src_deg - (wt - m - 1)
    if tgt_deg > ext.depth:
        return None
    variables = ("z1", "x", "y", "w")
    if word[0] is None:
        f = ext.block.correlate(variables, {word[2]: ONE}, [("z1", a)], v, [], {d.U2[0]: ONE})
    else:
        f = ext.block.correlate(variables, {word[2]: ONE}, [("y", word[0]), ("z1", a)], v, [], {d.U2[0]: ONE})
        f = coefficient_at(f.mul_monomial({"y": word[1]}), "y", "infinity", -1)
    lhs = coefficient_at(f.mul_monomial({"z1": m}), "z1", "infinity", -1)
    rhs = MultiPointFunction.zero(variables)
    if tgt_deg >= 0:
        func = _compose3(ext, word, a, m, tgt_deg)
        if func:
            for w, c in ext.section3(tgt_deg, func):
                rhs = rhs + _retag(ext.value([], v, [], out_word=w), variables) * to_fraction(c)
    return rational_equal(lhs, rhs)


def word_degree3(ext, word):
    comp, m, _ = word
    return -(ext.datum.algebra.weight_vec(comp) - m - 1)


def _compose3(ext, word, a, m, d):
    """The functional x -> (word functional)(a_(m) x) on M3(d)."""
    M3 = ext.datum.m3
    out = {}
    for x in ext.basis3(d):
        y = M3.apply(a, m, {x: ONE})
        if word[0] is None:
            c = y.get(word[2], 0)
        else:
            c = sum((cy * M3.apply(word[0], word[1], {t: ONE}).get(word[2], 0) for t, cy in y.items()), mpq(0))
        if c:
            out[x] = c
    return out


def _retag(f, variables):
    """Re-express f over another variable tuple containing every variable f depends on."""
    if f.vars == variables:
        return f
    idx = []
    for name in f.vars:
        idx.append(variables.index(name) if name in variables else None)
    num = {}
    for e, c in f.num.items():
        new = [Fraction(0)] * len(variables)
        for k, x in enumerate(e):
            if x:
                if idx[k] is None:
                    raise ValueError(f"function depends on {f.vars[k]}")
                new[idx[k]] += x
        num[tuple(new)] = num.get(tuple(new), 0) + c
    poles = {}
    for (i, j), l in f.poles.items():
        a, b = idx[i], idx[j]
        if a is None or b is None:
            raise ValueError("pole in a dropped variable")
        if a > b:
            a, b = b, a
            num = {e: c * (-1) ** l for e, c in num.items()}
        poles[(a, b)] = l
    return MultiPointFunction(variables, num, poles)


def intertwiner_modes(ext: ExtendedBlock, v, k, d2):
    """Matrix of the mode v_(k): M2(d2) -> M3(d3), d3 = d2 + deg v - k - 1 + h-shift.

    Entries <e_j^*, v_(k) x_i> are read from S w^k at w = 0 (the extension
    words supply x_i and e_j^*).  Returns (rows, cols, {(j, i): value}).
    """
    d = ext.datum
    M1 = d.m1
    parts = _homogeneous_parts(M1, v)
    if len(parts) != 1:
        raise ValueError("v must be homogeneous")
    (dv,) = parts
    k = as_q(k)
    d3 = as_q(d2) + dv - k - 1
    if d3 < 0:
        return [], [], {}
    if max(as_q(d2), d3) > ext.depth:
        raise WindowExceeded(f"mode matrix needs depth {max(as_q(d2), d3)}")
    src = ext.basis2(as_q(d2)) if d2 else list(d.U2)
    tgt = ext.basis3(d3) if d3 else list(d.U3)
    entries = {}
    for i, x in enumerate(src):
        for j, y in enumerate(tgt):
            total = mpq(0)
            for w2, c2 in ext.section2(as_q(d2), {x: ONE}):
                for w3, c3 in ext.section3(d3, {y: ONE}):
                    f = ext.value([], v, [], out_word=w3, in_word=w2)
                    coef = coefficient_at(f.mul_monomial({"w": k}), "w", "zero", -1)
                    if coef:
                        total += mpq(coef.constant_value()) * c2 * c3
            if total:
                entries[j, i] = total
    return tgt, src, entries



def intertwiner_jacobi_defect(ext: ExtendedBlock, a, v, m, k, l, d2=0):
    """Matrix of LHS - RHS of the twisted Jacobi identity for the extracted modes.

    LHS = sum_i binom(l,i) (-1)^i a_(p+l-i) v_(k+i) - sum_i binom(l,i) (-1)^(l+i) v_(k+l-i) a_(p+i),
    RHS = sum_j binom(p,j) (a_(j+l) v)_(p+k-j), with p = m + r/T, acting on M2(d2).
    Raises WindowExceeded when an intermediate level is deeper than the extension.
    """
    from .voa import _binom

    d = ext.datum
    alg = d.algebra
    M1, M2, M3 = d.m1, d.m2, d.m3
    r = alg.sector(a)
    wa = alg.weight_vec(a)
    p = as_q(m) + Fraction(r, alg.T)
    k = as_q(k)
    (dv,) = _homogeneous_parts(M1, v)
    d2 = as_q(d2)
    d_out = d2 + wa - p - 1 + dv - k - 1 - l
    if d_out < 0:
        return {}
    if d_out > ext.depth:
        raise WindowExceeded("target level beyond extension depth")
    src = ext.basis2(d2) if d2 else list(d.U2)
    out_basis = ext.basis3(d_out) if d_out else list(d.U3)
    total = {}

    def add_vec(i, vec3, c):
        for j, y in enumerate(out_basis):
            x = vec3.get(y, 0)
            if x:
                total[j, i] = total.get((j, i), 0) + c * x

    for i_src, x in enumerate(src):
        xv = {x: ONE}
        for i in range(l + 1):
            c = _binom(l, i) * (-1) ** i
            mid = _apply_intertwiner(ext, v, k + i, d2, xv)
            add_vec(i_src, M3.apply(a, p + l - i, mid), c)
            c = _binom(l, i) * (-1) ** ((l + i) % 2)
            y = M2.apply(a, p + i, xv)
            if y:
                lvl = M2.degree(next(iter(y)))
                add_vec(i_src, _apply_intertwiner(ext, v, k + l - i, lvl, y), -c)
        j = 0
        while j + l <= wa + dv - 1:
            prod = M1.apply(a, j + l, v)
            if prod:
                c = _binom(p, j)
                for deg, piece in _homogeneous_parts(M1, prod).items():
                    add_vec(i_src, _apply_intertwiner(ext, piece, p + k - j, d2, xv), -c)
            j += 1
    return {key: x for key, x in total.items() if x}


def _apply_intertwiner(ext, v, kk, level, vec):
    tgt, srcb, entries = intertwiner_modes(ext, v, kk, level)
    out = {}
    for col, b in enumerate(srcb):
        c = vec.get(b, 0)
        if c:
            for (row, cc), x in entries.items():
                if cc == col:
                    vadd(out, {tgt[row]: x * c})
    return out


__all__ = [
    "BlockDatum",
    "BlockSpace",
    "RestrictedBlock",
    "ExtendedBlock",
    "CheckReport",
    "WindowExceeded",
    "j_generators",
    "solve_blocks",
    "three_point",
    "four_point",
    "five_point",
    "n_point",
    "check_monomial",
    "check_locality",
    "check_associativity",
    "check_l1",
    "check_vacuum",
    "check_generating",
    "intertwiner_modes",
    "intertwiner_jacobi_defect",
    "ROUTES",
]
