"""Heisenberg and rank-one lattice vertex algebras with their (twisted) modules.

Vectors are plain dicts ``{Monomial: coefficient}``.  A monomial is a PBW
word in the Heisenberg creation modes h_i(-k) times one group-algebra
generator e^beta (untwisted) or a bottom-level label (twisted).

All exponents inside the engine are integers counted in half-units: a mode
h_i(-3/2) is stored as (3, i), the label alpha/2 as (1,), and a mode index
p as 2p.  One denominator covers both the theta-twist (T = 2) and the
half-lattice coset, and integer keys hash fast.

Modes of generators come from free-field formulas: h_i(n) acts by the
oscillator algebra and e^gamma by the exponentials E^-(-gamma,z)E^+(-gamma,z),
expanded mode by mode.  Modes of every other vector are reconstructed from
the component Jacobi identity at m = 0, which expresses (a_(l) b)_(p) through
modes of a and b and lower products a_(j+l) b.  On untwisted modules that is
ordinary normal ordering; on a twisted module it is the twisted iterate
formula.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from gmpy2 import mpq

from .series import as_q, binomial_coeff, fmt_q

ONE = mpq(1)
HALF = mpq(1, 2)


class SectorMismatch(ValueError):
    pass


class NotHomogeneous(ValueError):
    pass


def _h(x):
    """2x as an int when possible (half-unit encoding)."""
    v = as_q(x) * 2
    return v.numerator if v.denominator == 1 else v


def _unh(x):
    return Fraction(x) / 2 if isinstance(x, int) else to_fraction(x) / 2


def to_fraction(c):
    return Fraction(int(c.numerator), int(c.denominator))


@lru_cache(maxsize=None)
def _binom(alpha, j):
    return mpq(binomial_coeff(alpha, j))


class Monomial(NamedTuple):
    modes: tuple  # ((2k, i), ...) meaning h_i(-k), sorted by decreasing k then i
    label: tuple  # 2*beta in h-coordinates, or (chi,) on a twisted lattice module

    def __str__(self):
        parts = [f"a{i}[-{fmt_q(_unh(kk))}]" for kk, i in self.modes]
        if self.label and self.label != (0,) * len(self.label):
            parts.append("e(" + ",".join(fmt_q(_unh(x)) for x in self.label) + ")")
        return ".".join(parts) if parts else "1"


def _sort_modes(modes):
    return tuple(sorted(modes, key=lambda m: (-m[0], m[1])))


# ---------------------------------------------------------------------------
# sparse vectors


def vadd(out, vec, c=ONE):
    """out += c*vec, in place."""
    if not c:
        return out
    for m, v in vec.items():
        nv = out.get(m, 0) + c * v
        if nv:
            out[m] = nv
        else:
            del out[m]
    return out


def vscale(vec, c):
    if not c:
        return {}
    return {m: c * v for m, v in vec.items()}


def vsum(*vecs):
    out = {}
    for v in vecs:
        vadd(out, v)
    return out


def vec(*pairs):
    """Build a vector from (monomial, coefficient) pairs."""
    out = {}
    for m, c in pairs:
        vadd(out, {m: mpq(as_q(c))})
    return out


def vector_to_json(v):
    rows = sorted(v.items(), key=lambda t: (t[0].modes, t[0].label))
    return [{"monomial": str(m), "coef": fmt_q(to_fraction(c))} for m, c in rows]


# ---------------------------------------------------------------------------


class VertexAlgebra:
    """Heisenberg M(1) of any rank, or the A1 lattice algebra V_L.

    ``twist`` is "id" (T = 1) or "theta" (T = 2, the lift of -1 on h).
    """

    def __init__(self, kind, gram, lattice=(), twist="theta", name=None):
        if twist not in ("id", "theta"):
            raise ValueError(f"unknown twist {twist!r}")
        self.kind = kind
        self.gram = tuple(tuple(mpq(as_q(x)) for x in row) for row in gram)
        self.rank = len(self.gram)
        for i in range(self.rank):
            for j in range(self.rank):
                if self.gram[i][j] != self.gram[j][i]:
                    raise ValueError("bilinear form must be symmetric")
        self.gram_inv = _invert(self.gram)
        self.lattice = tuple(tuple(_h(x) for x in b) for b in lattice)
        if len(self.lattice) > 1:
            raise ValueError("only rank-one lattices are supported")
        self.twist = twist
        self.T = 2 if twist == "theta" else 1
        self.name = name or kind
        self.zero = (0,) * self.rank
        self.vacuum = Monomial((), self.zero)
        self._adjoint = None
        self._wt2 = {}

    @classmethod
    def heisenberg(cls, rank=1, gram=None, twist="theta"):
        if gram is None:
            gram = [[int(i == j) for j in range(rank)] for i in range(rank)]
        return cls("heisenberg", gram, (), twist, name="heisenberg")

    @classmethod
    def lattice_a1(cls, twist="theta"):
        return cls("lattice_a1", [[2]], [(1,)], twist, name="lattice-a1")

    def with_twist(self, twist):
        lat = [tuple(_unh(x) for x in b) for b in self.lattice]
        return VertexAlgebra(self.kind, self.gram, lat, twist, self.name)

    def pair2(self, b, c):
        """(beta|gamma) for half-unit labels b = 2 beta, c = 2 gamma."""
        g = self.gram
        s = 0
        for i, bi in enumerate(b):
            if bi:
                for j, cj in enumerate(c):
                    if cj:
                        s += bi * g[i][j] * cj
        return mpq(s) / 4

    def pair(self, beta, gamma):
        return to_fraction(self.pair2(tuple(_h(x) for x in beta), tuple(_h(x) for x in gamma)))

    def generator(self, i=0):
        return Monomial(((2, i),), self.zero)

    def exp_vector(self, label, modes=()):
        """Monomial h(-k1)...e^label from real exponents and label coordinates."""
        return Monomial(_sort_modes(tuple((_h(k), i) for k, i in modes)), tuple(_h(x) for x in label))

    def mono(self, *modes, label=None):
        """h_{i}(-k) ... e^label from (k, i) pairs in real units."""
        return self.exp_vector(label if label is not None else (0,) * self.rank, modes)

    def wt2(self, m):
        w = self._wt2.get(m)
        if w is None:
            w = self.pair2(m.label, m.label) + sum(kk for kk, _ in m.modes)
            w = int(w) if w.denominator == 1 else to_fraction(w)
            self._wt2[m] = w
        return w

    def weight(self, m):
        return _unh(self.wt2(m))

    def weight_vec(self, v):
        ws = {self.wt2(m) for m in v}
        if len(ws) > 1:
            raise NotHomogeneous(f"weights {sorted(_unh(w) for w in ws)}")
        return _unh(ws.pop()) if ws else Fraction(0)

    @property
    def module(self):
        if self._adjoint is None:
            self._adjoint = FockModule(self, (0,) * self.rank, name="V")
        return self._adjoint

    def basis(self, max_weight):
        return self.module.basis(max_weight)

    # involution
    def theta_mono(self, m):
        return (-1) ** len(m.modes), Monomial(m.modes, tuple(-x for x in m.label))

    def theta(self, v):
        out = {}
        for m, c in v.items():
            s, m2 = self.theta_mono(m)
            vadd(out, {m2: c * s})
        return out

    def project(self, v, s):
        """Component of v in the eigenspace V^s of the twist."""
        if self.T == 1:
            return dict(v)
        sign = 1 if s % 2 == 0 else -1
        return vscale(vadd(dict(v), self.theta(v), sign), HALF)

    def sector(self, v):
        """r with v in V^r, or None if v mixes sectors."""
        if self.T == 1:
            return 0
        for r in (0, 1):
            if self.project(v, r) == v:
                return r
        return None

    def eigen_basis(self, max_weight, min_weight=0):
        """Homogeneous twist eigenvectors spanning V up to max_weight: (vector, r, weight)."""
        out = []
        seen = set()
        for m in self.basis(max_weight):
            w = self.weight(m)
            if w < min_weight or m in seen:
                continue
            if self.T == 1:
                out.append(({m: ONE}, 0, w))
                continue
            s, tm = self.theta_mono(m)
            seen.update((m, tm))
            if tm == m:
                out.append(({m: ONE}, 0 if s == 1 else 1, w))
                continue
            out.append((vscale(self.project({m: ONE}, 0), 2), 0, w))
            out.append((vscale(self.project({m: ONE}, 1), 2), 1, w))
        return out

    def omega(self):
        out = {}
        for i in range(self.rank):
            for j in range(self.rank):
                c = self.gram_inv[i][j] / 2
                if c:
                    vadd(out, {Monomial(_sort_modes(((2, i), (2, j))), self.zero): c})
        return out

    def nth_product(self, a, j, b):
        return self.module.apply(a, j, b)

    def lattice_generators(self):
        if not self.lattice:
            return []
        a = self.lattice[0]
        return [Monomial((), a), Monomial((), tuple(-x for x in a))]

    def lattice_pair(self):
        """(E, F) = (e^alpha + e^-alpha, e^alpha - e^-alpha)."""
        ea, ema = self.lattice_generators()
        return {ea: ONE, ema: ONE}, {ea: ONE, ema: -ONE}


def _invert(g):
    n = len(g)
    m = [list(row) + [mpq(int(i == j)) for j in range(n)] for i, row in enumerate(g)]
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            raise ValueError("bilinear form is degenerate")
        m[c], m[p] = m[p], m[c]
        piv = m[c][c]
        m[c] = [x / piv for x in m[c]]
        for r in range(n):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return tuple(tuple(row[n:]) for row in m)


def _multisets(types, total, start=0):
    if total == 0:
        yield ()
        return
    for idx in range(start, len(types)):
        k = types[idx][0]
        if k > total:
            continue
        for rest in _multisets(types, total - k, idx):
            yield (types[idx],) + rest


@lru_cache(maxsize=None)
def fock_words(rank, degree2, half=False):
    """All PBW words of total degree degree2/2 (half-unit exponents)."""
    first = 1 if half else 2
    types = [(k, i) for k in range(first, degree2 + 1, 2) for i in range(rank)]
    words = {_sort_modes(w) for w in _multisets(types, degree2)}
    return sorted(words, key=lambda w: tuple((-k, i) for k, i in w))


class _ModuleBase:
    """Shared mode-reconstruction engine."""

    twisted = False
    T = 1

    def __init__(self, algebra):
        self.algebra = algebra
        self._cache = {}
        self._deg2 = {}

    # subclass hooks: deg2(m), heis(i, N, m), _lattice_mode(gamma, P, u)

    def degree(self, m):
        return _unh(self.deg2(m))

    def weight(self, m):
        return self.bottom_weight + self.degree(m)

    def heis_vec(self, gamma, N, v):
        """gamma(N/2) on a vector, gamma given in half-units."""
        out = {}
        for i, g in enumerate(gamma):
            if g:
                for m, c in v.items():
                    vadd(out, self.heis(i, N, m), c * g / 2)
        return out

    def apply(self, a, p, v):
        """a_(p) v for a vector a of V and a vector v of this module."""
        P = _h(p)
        if not isinstance(P, int) or (self.T == 1 and P % 2):
            raise SectorMismatch(f"mode index {fmt_q(as_q(p))} outside the index set")
        return self._apply2(a, P, v)

    def _apply2(self, a, P, v):
        out = {}
        for x, cx in a.items():
            for u, cu in v.items():
                vadd(out, self.mode(x, P, u), cx * cu)
        return out

    def mode_action(self, a, p, v):
        """a_(p) v, enforcing p in r/T + Z for a in V^r."""
        if self.twisted:
            r = self.algebra.sector(a)
            if r is not None and (as_q(p) - Fraction(r, self.T)) % 1 != 0:
                raise SectorMismatch(f"mode {fmt_q(as_q(p))} not in {r}/{self.T} + Z")
        elif as_q(p).denominator != 1:
            raise SectorMismatch(f"mode {fmt_q(as_q(p))} not an integer")
        return self.apply(a, p, v)

    def zero_mode(self, a, v):
        return self.apply(a, self.algebra.weight_vec(a) - 1, v)

    def virasoro(self, n, v):
        return self.apply(self.algebra.omega(), as_q(n) + 1, v)

    def truncation_bound(self, a, u):
        """Largest p with a_(p) u possibly nonzero."""
        alg = self.algebra
        return max(alg.weight(x) for x in a) + self.degree(u) - 1

    def mode(self, x, P, u):
        key = (x, P, u)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._mode(x, P, u)
            self._cache[key] = hit
        return hit

    def _mode(self, x, P, u):
        alg = self.algebra
        if not x.modes and not any(x.label):
            return {u: ONE} if P == -2 else {}
        if self.deg2(u) + alg.wt2(x) - P - 2 < 0:
            return {}
        if len(x.modes) == 1 and x.modes[0][0] == 2 and not any(x.label):
            return self.heis(x.modes[0][1], P, u)
        if not x.modes:
            gens = alg.lattice_generators()
            if not self.twisted or x in gens:
                return self._lattice_mode(x.label, P, u)
            # e^{k alpha} = (e^{+-alpha})_(-2|k|+1) e^{(k-+1) alpha}
            g = alg.lattice[0]
            k = x.label[0] // g[0]
            sgn = 1 if k > 0 else -1
            a = gens[0] if sgn > 0 else gens[1]
            b = Monomial((), tuple(y - sgn * z for y, z in zip(x.label, g)))
            return self._iterate(a, -2 * abs(k) + 1, b, P, u)
        kk, i = x.modes[0]
        b = Monomial(x.modes[1:], x.label)
        return self._iterate(alg.generator(i), -(kk // 2), b, P, u)

    def _components(self, a):
        """Eigen-components (coef, vector, r) of a generator monomial."""
        if not self.twisted:
            return ((ONE, {a: ONE}, 0),)
        if a.modes:
            return ((ONE, {a: ONE}, 1),)
        _, ta = self.algebra.theta_mono(a)
        return ((HALF, {a: ONE, ta: ONE}, 0), (HALF, {a: ONE, ta: -ONE}, 1))

    def _apply_gen(self, avec, Q2, y):
        out = {}
        for x, c in avec.items():
            vadd(out, self.mode(x, Q2, y), c)
        return out

    def _iterate(self, a, l, b, P, u):
        """(a_(l) b)_(P/2) u from the Jacobi identity with m = 0."""
        alg = self.algebra
        out = {}
        wa2 = alg.wt2(a)
        wb2 = alg.wt2(b)
        du2 = self.deg2(u)
        for c, avec, r in self._components(a):
            r2 = 2 * r // self.T
            q0 = P - r2
            # sum_i binom(l,i)(-1)^i a_(r/T+l-i) b_(p-r/T+i) u
            i = 0
            while q0 + 2 * i <= wb2 + du2 - 2:
                coef = _binom(l, i) * (-1) ** i
                for y, cy in self.mode(b, q0 + 2 * i, u).items():
                    vadd(out, self._apply_gen(avec, r2 + 2 * (l - i), y), c * coef * cy)
                i += 1
            # - sum_i binom(l,i)(-1)^(l+i) b_(p-r/T+l-i) a_(r/T+i) u
            i = 0
            while r2 + 2 * i <= wa2 + du2 - 2:
                coef = _binom(l, i) * (-1) ** ((l + i) % 2)
                for y, cy in self._apply_gen(avec, r2 + 2 * i, u).items():
                    vadd(out, self.mode(b, q0 + 2 * (l - i), y), -c * coef * cy)
                i += 1
            # - sum_{j>=1} binom(r/T, j) (a_(j+l) b_s)_(p-j) u
            if r2:
                s = (P * self.T // 2 - r) % self.T
                bs = alg.project({b: ONE}, s)
                j = 1
                while 2 * (j + l) <= wa2 + wb2 - 2:
                    prod = alg.nth_product(avec, j + l, bs)
                    if prod:
                        coef = _binom(Fraction(r, self.T), j)
                        vadd(out, self._apply2(prod, P - 2 * j, {u: ONE}), -c * coef)
                    j += 1
        return out

    def _eplus(self, gamma, u):
        """Homogeneous pieces of E^+(-gamma, z) u keyed by 2t (coefficient of z^{-t})."""
        key = ("E+", gamma, u)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        first, tick = (1, 1) if self.twisted else (2, 2)
        levels = {0: {u: ONE}}
        t = tick
        while t <= self.deg2(u):
            acc = {}
            n = first
            while n <= t:
                prev = levels.get(t - n)
                if prev:
                    vadd(acc, self.heis_vec(gamma, n, prev), -ONE)
                n += 2
            levels[t] = vscale(acc, mpq(2, t))
            t += tick
        self._cache[key] = levels
        return levels

    def _eminus_words(self, gamma, m2):
        """Coefficient of z^{m2/2} in E^-(-gamma, z) as {creation word: coef}."""
        key = ("E-", gamma, m2)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if m2 == 0:
            out = {(): ONE}
        else:
            # m S_m = sum_n gamma(-n) S_{m-n}
            out = {}
            first = 1 if self.twisted else 2
            n = first
            while n <= m2:
                for w, c in self._eminus_words(gamma, m2 - n).items():
                    for i, g in enumerate(gamma):
                        if g:
                            nw = _sort_modes(w + ((n, i),))
                            vadd(out, {nw: c * g / 2})
                n += 2
            out = vscale(out, mpq(2, m2))
        self._cache[key] = out
        return out

    def _eminus(self, gamma, m2, v, label=None):
        out = {}
        for w, cw in self._eminus_words(gamma, m2).items():
            for y, cy in v.items():
                key = Monomial(_sort_modes(y.modes + w) if w else y.modes, y.label if label is None else label)
                vadd(out, {key: cw * cy})
        return out


class FockModule(_ModuleBase):
    """Untwisted module: Fock space over the labels offset + L (offset in half-units)."""

    twisted = False
    T = 1

    def __init__(self, algebra, offset2, name=None):
        super().__init__(algebra)
        self.offset = tuple(offset2)
        self.name = name or ("M(" + ",".join(fmt_q(_unh(x)) for x in self.offset) + ")")
        self.bottom_weight = min(algebra.weight(Monomial((), b)) for b in self._labels_near())
        self._bw2 = _h(self.bottom_weight)

    @classmethod
    def with_weight(cls, algebra, weight, name=None):
        """Module with lowest label `weight` given in real h-coordinates."""
        return cls(algebra, tuple(_h(x) for x in weight), name)

    def _labels_near(self, radius=4):
        alg = self.algebra
        if not alg.lattice:
            return [self.offset]
        g = alg.lattice[0]
        return [tuple(o + n * x for o, x in zip(self.offset, g)) for n in range(-radius, radius + 1)]

    def labels(self, max_degree):
        alg = self.algebra
        top = self.bottom_weight + as_q(max_degree)
        out = [b for b in self._labels_near(radius=8) if alg.weight(Monomial((), b)) <= top]
        return sorted(out, key=lambda b: (alg.wt2(Monomial((), b)), tuple(-x for x in b)))

    def deg2(self, m):
        d = self._deg2.get(m)
        if d is None:
            d = self.algebra.wt2(m) - self._bw2
            if not isinstance(d, int):
                d = int(d) if d.denominator == 1 else d
            self._deg2[m] = d
        return d

    def basis(self, max_degree):
        top2 = _h(max_degree)
        out = []
        for lab in self.labels(max_degree):
            lw2 = self.deg2(Monomial((), lab))
            d2 = 0
            while lw2 + d2 <= top2:
                out.extend(Monomial(w, lab) for w in fock_words(self.algebra.rank, d2))
                d2 += 2
        return out

    def bottom(self):
        return self.basis(0)

    def heis(self, i, N, m):
        g = self.algebra.gram
        if N % 2:
            raise SectorMismatch("untwisted oscillator modes are integral")
        if N < 0:
            return {Monomial(_sort_modes(m.modes + ((-N, i),)), m.label): ONE}
        if N == 0:
            c = sum((g[i][j] * m.label[j] for j in range(len(m.label))), mpq(0)) / 2
            return {m: c} if c else {}
        out = {}
        for j in range(len(g)):
            cnt = m.modes.count((N, j))
            if cnt and g[i][j]:
                rest = list(m.modes)
                rest.remove((N, j))
                out[Monomial(tuple(rest), m.label)] = mpq(N, 2) * g[i][j] * cnt
        return out

    def _lattice_mode(self, gamma, P, u):
        alg = self.algebra
        gb2 = _h(alg.pair2(gamma, u.label))
        new_label = tuple(x + y for x, y in zip(u.label, gamma))
        out = {}
        for t2, v in self._eplus(gamma, u).items():
            m2 = -P - 2 - gb2 + t2
            if v and m2 >= 0 and m2 % 2 == 0:
                vadd(out, self._eminus(gamma, m2, v, new_label))
        return out


class TwistedModule(_ModuleBase):
    """theta-twisted module: Fock space over h(n), n in 1/2 + Z, times a bottom label.

    For the lattice algebra the bottom level is T_chi with e_{+-alpha} acting
    by chi in {+1, -1}; the vertex operator of e^gamma is
    2^{-(gamma|gamma)} z^{-(gamma|gamma)/2} E^-(-gamma,z) E^+(-gamma,z) e_gamma.
    """

    twisted = True
    T = 2

    def __init__(self, algebra, chi=None, name=None):
        if algebra.T != 2:
            raise ValueError("twisted modules need the theta twist")
        super().__init__(algebra)
        if algebra.lattice and chi not in (1, -1):
            raise ValueError("lattice twisted modules need chi = +1 or -1")
        self.chi = None if chi is None else int(chi)
        self.label = () if chi is None else (int(chi),)
        self.bottom_weight = Fraction(algebra.rank, 16)
        if name is None:
            name = "M(1)_tw" if chi is None else ("T+" if chi == 1 else "T-")
        self.name = name

    def deg2(self, m):
        return sum(kk for kk, _ in m.modes)

    def basis(self, max_degree):
        top2 = _h(max_degree)
        return [Monomial(w, self.label) for d2 in range(0, int(top2) + 1) for w in fock_words(self.algebra.rank, d2, True)]

    def bottom(self):
        return [Monomial((), self.label)]

    def heis(self, i, N, m):
        if N % 2 == 0:
            raise SectorMismatch(f"twisted oscillator mode {fmt_q(_unh(N))} not in 1/2 + Z")
        g = self.algebra.gram
        if N < 0:
            return {Monomial(_sort_modes(m.modes + ((-N, i),)), m.label): ONE}
        out = {}
        for j in range(len(g)):
            cnt = m.modes.count((N, j))
            if cnt and g[i][j]:
                rest = list(m.modes)
                rest.remove((N, j))
                out[Monomial(tuple(rest), m.label)] = mpq(N, 2) * g[i][j] * cnt
        return out

    def _lattice_mode(self, gamma, P, u):
        gg = self.algebra.pair2(gamma, gamma)
        const = mpq(self.chi, 2 ** int(gg))
        gg2 = int(gg)  # 2 * (gamma|gamma)/2
        out = {}
        for t2, v in self._eplus(gamma, u).items():
            m2 = t2 - P - 2 + gg2
            if v and m2 >= 0:
                vadd(out, self._eminus(gamma, m2, v), const)
        return out


def jacobi_component_defect(module, a, b, m, n, l, v, r=None, s=None):
    """LHS - RHS of the component Jacobi identity on a (twisted) module.

    sum_i binom(l,i)(-1)^i a_(r/T+m+l-i) b_(s/T+n+i) v
      - sum_i binom(l,i)(-1)^(l+i) b_(s/T+n+l-i) a_(r/T+m+i) v
      = sum_j binom(m+r/T, j) (a_(j+l) b)_((r+s)/T+m+n-j) v
    """
    alg = module.algebra
    T = module.T
    if r is None:
        r = alg.sector(a) if module.twisted else 0
    if s is None:
        s = alg.sector(b) if module.twisted else 0
    if r is None or s is None:
        raise SectorMismatch("Jacobi components need twist eigenvectors")
    r2, s2 = 2 * r // T, 2 * s // T
    wa2 = _h(alg.weight_vec(a))
    wb2 = _h(alg.weight_vec(b))
    dv2 = max((module.deg2(u) for u in v), default=0)
    M, N = 2 * m, 2 * n
    out = {}
    i = 0
    while s2 + N + 2 * i <= wb2 + dv2 - 2:
        inner = module._apply2(b, s2 + N + 2 * i, v)
        vadd(out, module._apply2(a, r2 + M + 2 * (l - i), inner), _binom(l, i) * (-1) ** i)
        i += 1
    i = 0
    while r2 + M + 2 * i <= wa2 + dv2 - 2:
        inner = module._apply2(a, r2 + M + 2 * i, v)
        vadd(out, module._apply2(b, s2 + N + 2 * (l - i), inner), -_binom(l, i) * (-1) ** ((l + i) % 2))
        i += 1
    j = 0
    while 2 * (j + l) <= wa2 + wb2 - 2:
        c = _binom(m + Fraction(r, T), j)
        if c:
            prod = alg.nth_product(a, j + l, b)
            if prod:
                vadd(out, module._apply2(prod, r2 + s2 + M + N - 2 * j, v), -c)
        j += 1
    return out


def monomial_from_string(text, algebra):
    """Parse the serialized form, e.g. 'a0[-2].a0[-1].e(1/2)'."""
    text = text.strip()
    if text == "1":
        return algebra.vacuum
    modes = []
    label = algebra.zero
    for part in text.split("."):
        if part.startswith("e("):
            label = tuple(_h(x) for x in part[2:-1].split(","))
        else:
            i = int(part[1 : part.index("[")])
            k = -as_q(part[part.index("[") + 1 : -1])
            modes.append((_h(k), i))
    return Monomial(_sort_modes(tuple(modes)), label)


__all__ = [
    "Monomial",
    "VertexAlgebra",
    "FockModule",
    "TwistedModule",
    "jacobi_component_defect",
    "SectorMismatch",
    "NotHomogeneous",
    "monomial_from_string",
    "to_fraction",
    "vadd",
    "vscale",
    "vsum",
    "vec",
    "vector_to_json",
    "fock_words",
]
