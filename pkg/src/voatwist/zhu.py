"""Twisted Zhu algebras A_g(V) and bimodules A_g(M), B_{g,lam}(M) on finite windows.

The relation subspace is generated inside a working window (window + slack)
and row-reduced with pivots ranked by weight first, so the part of the row
space inside the window is read off directly.  Quotient classes are the
non-pivot monomials of degree <= window.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from .linalg import RowSpace
from .series import as_q, binomial_coeff, fmt_q
from .voa import ONE, VertexAlgebra, to_fraction, vadd

log = logging.getLogger(__name__)


class OutOfWindow(ValueError):
    pass


def _delta(r):
    return 1 if r == 0 else 0


def _binom_q(alpha, j):
    return mpq(binomial_coeff(alpha, j))


def _target(algebra, module):
    return algebra.module if module is None else module


def circle_g(algebra: VertexAlgebra, a, u, module=None, k=0, r=None):
    """Res_z (1+z)^{wt a - 1 + delta(r) + r/T} z^{-1-delta(r)-k} Y(a,z) u.

    a must be homogeneous; a vector mixing twist sectors is split into its
    eigen-components.
    """
    M = _target(algebra, module)
    if r is None:
        r = algebra.sector(a)
        if r is None:
            out = {}
            for s in range(algebra.T):
                vadd(out, circle_g(algebra, algebra.project(a, s), u, module, k, s))
            return out
    if not a:
        return {}
    wa = algebra.weight_vec(a)
    d = _delta(r)
    expo = wa - 1 + d + Fraction(r, algebra.T)
    out = {}
    top = M.truncation_bound(a, max(u, key=M.deg2)) if u else 0
    j = 0
    while j - 1 - d - k <= top:
        c = _binom_q(expo, j)
        if c:
            vadd(out, M.apply(a, j - 1 - d - k, u), c)
        j += 1
    return out


def star_g(algebra: VertexAlgebra, a, b, module=None):
    """a *_g b = Res_z Y(a^0,z) b (1+z)^{wt a}/z; the twisted part of a drops out."""
    M = _target(algebra, module)
    a0 = algebra.project(a, 0) if algebra.T > 1 else a
    if not a0 or not b:
        return {}
    wa = algebra.weight_vec(a0)
    out = {}
    top = M.truncation_bound(a0, max(b, key=M.deg2))
    j = 0
    while j - 1 <= top:
        c = _binom_q(wa, j)
        if c:
            vadd(out, M.apply(a0, j - 1, b), c)
        j += 1
    return out


def right_star(algebra: VertexAlgebra, u, a, module=None):
    """u *_g a = Res_z Y(a^0,z) u (1+z)^{wt a - 1}/z."""
    M = _target(algebra, module)
    a0 = algebra.project(a, 0) if algebra.T > 1 else a
    if not a0 or not u:
        return {}
    wa = algebra.weight_vec(a0)
    out = {}
    top = M.truncation_bound(a0, max(u, key=M.deg2))
    j = 0
    while j - 1 <= top:
        c = _binom_q(wa - 1, j)
        if c:
            vadd(out, M.apply(a0, j - 1, u), c)
        j += 1
    return out


def monomial_key(algebra, module):
    """Elimination priority: higher weight first, then oscillator content, then label."""

    def key(m):
        return (module.deg2(m), sum(kk for kk, _ in m.modes), m.modes, tuple(-x for x in m.label))

    return key


@dataclass
class ReducedClass:
    representative: dict  # normal form, supported on the quotient basis
    basis: tuple

    def coordinates(self):
        return [to_fraction(self.representative.get(m, 0)) for m in self.basis]

    def is_zero(self):
        return not self.representative

    def __str__(self):
        if not self.representative:
            return "0"
        return " + ".join(f"({fmt_q(c)})[{m}]" for m, c in zip(self.basis, self.coordinates()) if c)


@dataclass
class Reduction:
    """A relation subspace O inside a finite window of V or of a module M."""

    algebra: VertexAlgebra
    module: object
    window: Fraction
    work: Fraction
    rows: RowSpace
    mode: str = "A"
    lam: Fraction | None = None
    basis: tuple = field(default=())

    def normal_form(self, v):
        nf = self.rows.reduce(v)
        over = [m for m in nf if self.module.degree(m) > self.window]
        if over:
            raise OutOfWindow(f"class of degree {self.module.degree(over[0])} beyond window {self.window}")
        return nf

    def reduce(self, v):
        return ReducedClass(self.normal_form(v), self.basis)

    def coordinates(self, v):
        nf = self.normal_form(v)
        return [nf.get(m, mpq(0)) for m in self.basis]

    @property
    def dim(self):
        return len(self.basis)

    @property
    def corank(self):
        return self.dim

    def in_window_relations(self):
        return [row for p, row in self.rows.rows.items() if self.module.degree(p) <= self.window]


def o_subspace(algebra: VertexAlgebra, module=None, window=4, mode="A", lam=None, slack=None, k_family=(0, 1)):
    """Row-reduced generators of O_g(V), O_g(M) or O_{g,lam}(M) up to a working window.

    Generators a o_k u are used whenever their top degree fits in
    window + slack; lam switches on the (L(-1) + L(0) + lam) u generators.
    """
    M = _target(algebra, module)
    window = as_q(window)
    if slack is None:
        slack = 2
    work = window + as_q(slack)
    rows = RowSpace(monomial_key(algebra, M))
    space = M.basis(work)
    degs = {u: M.degree(u) for u in space}
    count = 0
    for a, r, wa in algebra.eigen_basis(work):
        if wa == 0:
            continue  # vacuum: 1 o u = 0
        d = _delta(r)
        for k in k_family:
            lift = wa + d + k
            for u in space:
                if degs[u] + lift > work:
                    continue
                rel = circle_g(algebra, a, {u: ONE}, module, k, r)
                if rel:
                    rows.add(rel)
                    count += 1
    if mode == "B":
        lam = mpq(as_q(lam or 0))
        for u in space:
            if degs[u] + 1 > work:
                continue
            uv = {u: ONE}
            rel = vadd(vadd(M.virasoro(-1, uv), M.virasoro(0, uv)), uv, lam)
            if rel:
                rows.add(rel)
                count += 1
    log.debug("o_subspace %s: %d generators, rank %d", mode, count, rows.rank)
    key = rows.rank_key
    basis = tuple(sorted((u for u in space if degs[u] <= window and u not in rows.rows), key=key))
    return Reduction(algebra, M, window, work, rows, mode, None if lam is None else to_fraction(mpq(lam)), basis)


def reduce(u, reduction: Reduction) -> ReducedClass:
    return reduction.reduce(u)


@dataclass
class ReducedAlgebra:
    reduction: Reduction
    basis: tuple
    structure_constants: dict  # (i, j) -> list of coefficients
    identity_index: int
    omega: list

    @property
    def dim(self):
        return len(self.basis)

    def multiply(self, x, y):
        """Product of coordinate vectors."""
        out = [mpq(0)] * self.dim
        for i, xi in enumerate(x):
            if not xi:
                continue
            for j, yj in enumerate(y):
                if yj:
                    for k, c in enumerate(self.structure_constants[i, j]):
                        out[k] += xi * yj * c
        return out

    def unit(self, i):
        return [mpq(int(k == i)) for k in range(self.dim)]

    def is_associative(self):
        n = self.dim
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    ab = self.multiply(self.multiply(self.unit(i), self.unit(j)), self.unit(k))
                    bc = self.multiply(self.unit(i), self.multiply(self.unit(j), self.unit(k)))
                    if ab != bc:
                        return False
        return True

    def identity_ok(self):
        e = self.unit(self.identity_index)
        return all(self.multiply(e, self.unit(i)) == self.unit(i) == self.multiply(self.unit(i), e) for i in range(self.dim))

    def omega_central(self):
        return all(self.multiply(self.omega, self.unit(i)) == self.multiply(self.unit(i), self.omega) for i in range(self.dim))

    def to_json(self):
        return {
            "dim": self.dim,
            "basis": [str(m) for m in self.basis],
            "structure_constants": {
                f"{i},{j}": [fmt_q(to_fraction(c)) for c in v] for (i, j), v in sorted(self.structure_constants.items())
            },
            "identity": self.identity_index,
            "omega": [fmt_q(to_fraction(c)) for c in self.omega],
        }


def quotient_algebra(algebra: VertexAlgebra, window=6, slack=None, k_family=(0, 1)) -> ReducedAlgebra:
    red = o_subspace(algebra, None, window, "A", None, slack, k_family)
    basis = red.basis
    if algebra.vacuum not in basis:
        raise OutOfWindow("vacuum class vanished; window too small")
    sc = {}
    for i, x in enumerate(basis):
        for j, y in enumerate(basis):
            if algebra.weight(x) + algebra.weight(y) > red.work:
                raise OutOfWindow("product of basis classes leaves the working window")
            sc[i, j] = red.coordinates(star_g(algebra, {x: ONE}, {y: ONE}))
    omega = red.coordinates(algebra.omega())
    return ReducedAlgebra(red, basis, sc, basis.index(algebra.vacuum), omega)


@dataclass
class ReducedBimodule:
    reduction: Reduction
    algebra_quotient: ReducedAlgebra
    basis: tuple
    left_action: list  # [i][k] -> coordinates of x_i * m_k
    right_action: list  # [i][k] -> coordinates of m_k * x_i

    @property
    def dim(self):
        return len(self.basis)

    def left(self, i, coords):
        out = [mpq(0)] * self.dim
        for k, c in enumerate(coords):
            if c:
                for t, v in enumerate(self.left_action[i][k]):
                    out[t] += c * v
        return out

    def right(self, i, coords):
        out = [mpq(0)] * self.dim
        for k, c in enumerate(coords):
            if c:
                for t, v in enumerate(self.right_action[i][k]):
                    out[t] += c * v
        return out

    def actions_commute(self):
        A = self.algebra_quotient
        for i in range(A.dim):
            for j in range(A.dim):
                for k in range(self.dim):
                    u = [mpq(int(t == k)) for t in range(self.dim)]
                    if self.right(j, self.left(i, u)) != self.left(i, self.right(j, u)):
                        return False
        return True

    def to_json(self):
        fm = lambda rows: [[[fmt_q(to_fraction(c)) for c in col] for col in row] for row in rows]
        return {
            "dim": self.dim,
            "mode": self.reduction.mode,
            "lambda": None if self.reduction.lam is None else fmt_q(self.reduction.lam),
            "basis": [str(m) for m in self.basis],
            "algebra_basis": [str(m) for m in self.algebra_quotient.basis],
            "left_action": fm(self.left_action),
            "right_action": fm(self.right_action),
        }


def quotient_bimodule(algebra: VertexAlgebra, module, mode="A", window=4, lam=None, algebra_quotient=None, slack=None, k_family=(0, 1)):
    """A_g(M) (mode "A") or B_{g,lam}(M) (mode "B") with both A_g(V)-actions."""
    A = algebra_quotient or quotient_algebra(algebra, max(2, int(as_q(window))))
    red = o_subspace(algebra, module, window, mode, lam, slack, k_family)
    left, right = [], []
    for x in A.basis:
        xv = {x: ONE}
        left.append([red.coordinates(star_g(algebra, xv, {m: ONE}, module)) for m in red.basis])
        right.append([red.coordinates(right_star(algebra, {m: ONE}, xv, module)) for m in red.basis])
    return ReducedBimodule(red, A, red.basis, left, right)


def graded_surjection_check(algebra: VertexAlgebra, window=4, slack=None, report=None):
    """Check R(V) = V/C_2(V) -> gr A_g(V), a + C_2 -> [a] + F_{m-1}, degree by degree.

    Verified inside the window: C_2(V) maps into lower filtration, the map is
    multiplicative modulo lower filtration (a_(-1)b -> [a]*[b]), and each
    graded piece of gr A_g(V) is hit.
    """
    window = as_q(window)
    red = o_subspace(algebra, None, window, "A", None, slack)
    M = algebra.module
    ok = True
    details = []

    def lower(v, m):
        nf = red.normal_form(v)
        return all(M.degree(x) <= m - 1 for x in nf)

    eig = algebra.eigen_basis(window)
    for a, _, wa in eig:
        for b, _, wb in eig:
            m = wa + wb + 1
            if m <= window:
                c2 = algebra.nth_product(a, -2, b)
                if c2 and not lower(c2, m):
                    ok = False
                    details.append(("C2", str(list(a)[0]), str(list(b)[0])))
            m = wa + wb
            if m <= window and (wa > 0 and wb > 0):
                prod = algebra.nth_product(a, -1, b)
                diff = vadd(dict(prod), star_g(algebra, a, b), -ONE)
                if diff and not lower(diff, m):
                    ok = False
                    details.append(("mult", str(list(a)[0]), str(list(b)[0])))
    # surjectivity: images of V_m span F_m / F_{m-1}
    d = Fraction(0)
    while d <= window:
        top = [x for x in red.basis if M.degree(x) == d]
        image = RowSpace()
        for x in M.basis(d):
            if M.degree(x) != d:
                continue
            nf = red.normal_form({x: ONE})
            image.add({y: c for y, c in nf.items() if M.degree(y) == d})
        if image.rank != len(top):
            ok = False
            details.append(("surj", str(d)))
        d += 1
    if report is not None:
        report.extend(details)
    return ok


__all__ = [
    "OutOfWindow",
    "circle_g",
    "star_g",
    "right_star",
    "o_subspace",
    "reduce",
    "quotient_algebra",
    "quotient_bimodule",
    "graded_surjection_check",
    "ReducedAlgebra",
    "ReducedBimodule",
    "ReducedClass",
    "Reduction",
]
