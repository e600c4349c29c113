"""Exact Puiseux series, rational functions on the twisted line, and their expansions.

Everything here is exact: scalars are ``fractions.Fraction`` and exponents are
Fractions as well.  A :class:`MultiPointFunction` is a finite sum of monomials
with rational exponents divided by powers of the difference factors
``(x_i - x_j)``; the three expansion maps turn such a function into a
:class:`PuiseuxSeries` in one variable whose coefficients are again
functions of the remaining variables.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor

Q = Fraction


class WindowTooNarrow(ValueError):
    pass


class UnsupportedShape(ValueError):
    pass


class NotSingleValued(ValueError):
    pass


def as_q(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


def fmt_q(x) -> str:
    x = as_q(x)
    return f"{x.numerator}/{x.denominator}"


def binomial_coeff(alpha, j: int) -> Fraction:
    """Generalized binomial alpha(alpha-1)...(alpha-j+1)/j!."""
    if j < 0:
        return Q(0)
    alpha = as_q(alpha)
    out = Q(1)
    for t in range(j):
        out = out * (alpha - t) / (t + 1)
    return out


# ---------------------------------------------------------------------------
# Laurent polynomials with rational exponents (plain dicts: exps tuple -> coef)


def _padd(p, q, c=1):
    out = dict(p)
    for e, v in q.items():
        nv = out.get(e, 0) + c * v
        if nv:
            out[e] = nv
        else:
            out.pop(e, None)
    return out


def _pmul(p, q):
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            v = out.get(e, 0) + c1 * c2
            if v:
                out[e] = v
            else:
                del out[e]
    return out


def _pscale(p, c):
    if not c:
        return {}
    return {e: c * v for e, v in p.items()}


def _diff_poly(nvars, i, j, power):
    """(x_i - x_j)**power for a natural power, as a polynomial dict."""
    out = {}
    for t in range(power + 1):
        e = [Q(0)] * nvars
        e[i] += power - t
        e[j] += t
        c = binomial_coeff(power, t) * (-1) ** t
        out[tuple(e)] = out.get(tuple(e), 0) + c
    return {e: c for e, c in out.items() if c}


def _try_divide(p, i, j):
    """Exact quotient p/(x_i - x_j), or None when the division is not exact."""
    if not p:
        return {}
    rest = dict(p)
    low = min(e[i] for e in p)
    quot = {}
    while rest:
        e = max(rest, key=lambda t: (t[i], t))
        c = rest[e]
        if e[i] - 1 < low:
            return None
        qe = list(e)
        qe[i] -= 1
        qe = tuple(qe)
        quot[qe] = quot.get(qe, 0) + c
        # subtract c * x^qe * (x_i - x_j)
        del rest[e]
        se = list(qe)
        se[j] += 1
        se = tuple(se)
        v = rest.get(se, 0) + c
        if v:
            rest[se] = v
        else:
            rest.pop(se, None)
    return {e: c for e, c in quot.items() if c}


def _pderiv(p, k):
    out = {}
    for e, c in p.items():
        if e[k]:
            ne = list(e)
            ne[k] -= 1
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + c * e[k]
    return {e: c for e, c in out.items() if c}


class MultiPointFunction:
    """numerator / prod (x_i - x_j)**l_ij over a fixed variable tuple.

    The numerator is a Laurent polynomial whose exponents may be fractional;
    this covers the prefactors z_i^{r_i/T}, z_i^{m_i} and w^{n/T}.  Pole
    factors are keyed by index pairs (i, j) with i < j.  Instances are kept
    reduced: no pole factor divides the numerator.
    """

    __slots__ = ("vars", "num", "poles")

    def __init__(self, variables, num=None, poles=None, reduce=True):
        self.vars = tuple(variables)
        self.num = {e: as_q(c) for e, c in (num or {}).items() if c}
        self.poles = {k: v for k, v in (poles or {}).items() if v}
        for (i, j), l in self.poles.items():
            if not (0 <= i < j < len(self.vars)) or l < 0:
                raise UnsupportedShape(f"bad pole factor {(i, j)}^{l}")
        if reduce:
            self._reduce()

    # constructors
    @classmethod
    def zero(cls, variables):
        return cls(variables, {}, {}, reduce=False)

    @classmethod
    def constant(cls, variables, c):
        n = len(tuple(variables))
        return cls(variables, {(Q(0),) * n: as_q(c)}, {}, reduce=False)

    @classmethod
    def monomial(cls, variables, exps, coef=1):
        variables = tuple(variables)
        e = [Q(0)] * len(variables)
        for name, x in exps.items():
            e[variables.index(name)] += as_q(x)
        return cls(variables, {tuple(e): as_q(coef)}, {}, reduce=False)

    @classmethod
    def difference_power(cls, variables, a, b, power: int):
        """(x_a - x_b)**power for any integer power."""
        variables = tuple(variables)
        ia, ib = variables.index(a), variables.index(b)
        sign = 1
        if ia > ib:
            ia, ib = ib, ia
            sign = -1
        n = len(variables)
        if power >= 0:
            return cls(variables, _pscale(_diff_poly(n, ia, ib, power), Q(sign) ** power), {}, reduce=False)
        return cls(variables, {(Q(0),) * n: Q(sign) ** power}, {(ia, ib): -power}, reduce=False)

    # structure
    def _reduce(self):
        for key in list(self.poles):
            i, j = key
            while self.poles.get(key, 0) > 0 and self.num:
                q = _try_divide(self.num, i, j)
                if q is None:
                    break
                self.num = q
                self.poles[key] -= 1
            if not self.poles.get(key):
                self.poles.pop(key, None)
        if not self.num:
            self.poles = {}

    def is_zero(self):
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def _with_poles(self, target):
        """Numerator rewritten over the denominator `target` (dominating self.poles)."""
        num = self.num
        n = len(self.vars)
        for (i, j), l in target.items():
            extra = l - self.poles.get((i, j), 0)
            if extra < 0:
                raise ValueError("target does not dominate")
            if extra:
                num = _pmul(num, _diff_poly(n, i, j, extra))
        return num

    def _check(self, other):
        if isinstance(other, MultiPointFunction):
            if other.vars != self.vars:
                raise UnsupportedShape("variable tuples differ")
            return other
        return MultiPointFunction.constant(self.vars, other)

    def __add__(self, other):
        other = self._check(other)
        if not other.num:
            return self
        if not self.num:
            return other
        target = dict(self.poles)
        for k, v in other.poles.items():
            target[k] = max(target.get(k, 0), v)
        num = _padd(self._with_poles(target), other._with_poles(target))
        return MultiPointFunction(self.vars, num, target)

    __radd__ = __add__

    def __neg__(self):
        return MultiPointFunction(self.vars, _pscale(self.num, -1), self.poles, reduce=False)

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if not isinstance(other, MultiPointFunction):
            c = as_q(other)
            if not c:
                return MultiPointFunction.zero(self.vars)
            return MultiPointFunction(self.vars, _pscale(self.num, c), self.poles, reduce=False)
        other = self._check(other)
        if not self.num or not other.num:
            return MultiPointFunction.zero(self.vars)
        poles = dict(self.poles)
        for k, v in other.poles.items():
            poles[k] = poles.get(k, 0) + v
        return MultiPointFunction(self.vars, _pmul(self.num, other.num), poles)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, MultiPointFunction):
            return rational_equal(self, other)
        try:
            return rational_equal(self, MultiPointFunction.constant(self.vars, other))
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.vars, frozenset(self.num.items()), frozenset(self.poles.items())))

    def derivative(self, var):
        k = self.vars.index(var)
        out = MultiPointFunction(self.vars, _pderiv(self.num, k), self.poles)
        for (i, j), l in self.poles.items():
            if k not in (i, j):
                continue
            sign = 1 if k == i else -1
            poles = dict(self.poles)
            poles[(i, j)] = l + 1
            out = out + MultiPointFunction(self.vars, _pscale(self.num, -l * sign), poles)
        return out

    def mul_monomial(self, exps, coef=1):
        return self * MultiPointFunction.monomial(self.vars, exps, coef)

    def is_constant(self):
        return not self.poles and all(not any(e) for e in self.num)

    def constant_value(self):
        if not self.num:
            return Q(0)
        if not self.is_constant():
            raise ValueError("not a constant")
        return next(iter(self.num.values()))

    def depends_on(self, var):
        k = self.vars.index(var)
        return any(e[k] for e in self.num) or any(k in p for p in self.poles)

    def exponent_classes(self, var):
        k = self.vars.index(var)
        return {e[k] - floor(e[k]) for e in self.num}

    def pole_order(self, a, b):
        ia, ib = sorted((self.vars.index(a), self.vars.index(b)))
        return self.poles.get((ia, ib), 0)

    def __repr__(self):
        return f"MultiPointFunction({self})"

    def __str__(self):
        if not self.num:
            return "0"
        parts = []
        for e in sorted(self.num, reverse=True):
            c = self.num[e]
            mon = "*".join(
                (v if x == 1 else f"{v}^({x})") for v, x in zip(self.vars, e) if x
            )
            if mon:
                parts.append(f"{c}*{mon}" if c != 1 else mon)
            else:
                parts.append(str(c))
        s = " + ".join(parts)
        den = "*".join(
            f"({self.vars[i]}-{self.vars[j]})" + (f"^{l}" if l != 1 else "")
            for (i, j), l in sorted(self.poles.items())
        )
        return f"({s})/({den})" if den else s

    def to_json(self):
        return {
            "vars": list(self.vars),
            "numerator": [
                {"exps": [fmt_q(x) for x in e], "coef": fmt_q(c)} for e, c in sorted(self.num.items())
            ],
            "poles": [
                {"pair": [self.vars[i], self.vars[j]], "order": l} for (i, j), l in sorted(self.poles.items())
            ],
        }

    @classmethod
    def from_json(cls, data):
        variables = tuple(data["vars"])
        num = {tuple(as_q(x) for x in t["exps"]): as_q(t["coef"]) for t in data["numerator"]}
        poles = {}
        for p in data.get("poles", []):
            a, b = (variables.index(x) for x in p["pair"])
            if a > b:
                raise UnsupportedShape("pole pairs must follow variable order")
            poles[(a, b)] = int(p["order"])
        return cls(variables, num, poles)


def rational_equal(f: MultiPointFunction, g: MultiPointFunction) -> bool:
    """Cross-multiplied numerators agree as exact Laurent polynomials."""
    if f.vars != g.vars:
        raise UnsupportedShape("variable tuples differ")
    target = dict(f.poles)
    for k, v in g.poles.items():
        target[k] = max(target.get(k, 0), v)
    return f._with_poles(target) == g._with_poles(target)


# ---------------------------------------------------------------------------
# Puiseux series


def _coef_is_zero(c):
    if isinstance(c, MultiPointFunction):
        return c.is_zero()
    return c == 0


class PuiseuxSeries:
    """Finitely many terms of a series in one variable plus its exact window.

    ``window = (lo, hi)``; ``None`` means unbounded on that side.  Every term
    whose exponent lies inside the window is stored; nothing outside is kept.
    An ascending expansion (at 0 or at a diagonal) has ``lo = None`` and a
    descending one (at infinity) has ``hi = None``.
    """

    __slots__ = ("var", "terms", "lo", "hi", "denom")

    def __init__(self, var, terms=None, window=(None, None), denom=None):
        self.var = var
        lo, hi = window
        self.lo = None if lo is None else as_q(lo)
        self.hi = None if hi is None else as_q(hi)
        terms = {as_q(e): c for e, c in (terms or {}).items()}
        self.terms = {
            e: c
            for e, c in terms.items()
            if not _coef_is_zero(c)
            and (self.lo is None or e >= self.lo)
            and (self.hi is None or e <= self.hi)
        }
        if denom is not None:
            for e in self.terms:
                if (e * denom).denominator != 1:
                    raise ValueError(f"exponent {e} not in (1/{denom})Z")
        self.denom = denom

    @property
    def window(self):
        return (self.lo, self.hi)

    def in_window(self, e):
        e = as_q(e)
        return (self.lo is None or e >= self.lo) and (self.hi is None or e <= self.hi)

    def coefficient(self, e):
        e = as_q(e)
        if not self.in_window(e):
            raise WindowTooNarrow(f"exponent {e} outside window {self.window}")
        return self.terms.get(e, 0)

    def valuation(self):
        if self.terms:
            return min(self.terms)
        return self.hi

    def top(self):
        if self.terms:
            return max(self.terms)
        return self.lo

    def _zero_like(self):
        for c in self.terms.values():
            if isinstance(c, MultiPointFunction):
                return MultiPointFunction.zero(c.vars)
        return Q(0)

    def __add__(self, other):
        if not isinstance(other, PuiseuxSeries):
            other = PuiseuxSeries(self.var, {0: other})
        lo = _max_opt(self.lo, other.lo)
        hi = _min_opt(self.hi, other.hi)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms[e] + c if e in terms else c
        return PuiseuxSeries(self.var, terms, (lo, hi))

    __radd__ = __add__

    def __neg__(self):
        return PuiseuxSeries(self.var, {e: -c for e, c in self.terms.items()}, self.window)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return PuiseuxSeries(self.var, {e: c * other for e, c in self.terms.items()}, self.window)
        if (self.lo is not None and other.hi is not None) or (self.hi is not None and other.lo is not None):
            if not ((self.lo is None and self.hi is None) or (other.lo is None and other.hi is None)):
                raise ValueError("cannot multiply ascending and descending truncations")
        hi = None
        if self.hi is not None:
            hi = self.hi + other.valuation()
        if other.hi is not None:
            cand = other.hi + self.valuation()
            hi = cand if hi is None else min(hi, cand)
        lo = None
        if self.lo is not None:
            lo = self.lo + other.top()
        if other.lo is not None:
            cand = other.lo + self.top()
            lo = cand if lo is None else max(lo, cand)
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                terms[e] = terms[e] + c1 * c2 if e in terms else c1 * c2
        return PuiseuxSeries(self.var, terms, (lo, hi))

    __rmul__ = __mul__

    def restrict(self, lo=None, hi=None):
        return PuiseuxSeries(self.var, self.terms, (_max_opt(self.lo, lo), _min_opt(self.hi, hi)))

    def agrees_with(self, other) -> bool:
        """Term-by-term equality on the common window."""
        lo = _max_opt(self.lo, other.lo)
        hi = _min_opt(self.hi, other.hi)
        a, b = self.restrict(lo, hi), other.restrict(lo, hi)
        if set(a.terms) != set(b.terms):
            return False
        return all(_coef_equal(a.terms[e], b.terms[e]) for e in a.terms)

    def __eq__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return NotImplemented
        return self.window == other.window and self.agrees_with(other)

    def __repr__(self):
        body = " + ".join(f"({c})*{self.var}^({e})" for e, c in sorted(self.terms.items()))
        return f"PuiseuxSeries[{self.var}; {self.lo}..{self.hi}]({body or '0'})"

    def to_json(self):
        def coef(c):
            if isinstance(c, MultiPointFunction):
                if c.is_constant():
                    return fmt_q(c.constant_value())
                return str(c)
            return fmt_q(c)

        return {
            "var": self.var,
            "terms": [{"exp": fmt_q(e), "coef": coef(c)} for e, c in sorted(self.terms.items())],
            "window": [
                "-inf" if self.lo is None else fmt_q(self.lo),
                "inf" if self.hi is None else fmt_q(self.hi),
            ],
        }

    @classmethod
    def from_json(cls, data):
        lo, hi = data["window"]
        return cls(
            data["var"],
            {as_q(t["exp"]): as_q(t["coef"]) for t in data["terms"]},
            (None if lo == "-inf" else as_q(lo), None if hi == "inf" else as_q(hi)),
        )


def _coef_equal(a, b):
    if isinstance(a, MultiPointFunction) or isinstance(b, MultiPointFunction):
        if not isinstance(a, MultiPointFunction):
            a, b = b, a
        if not isinstance(b, MultiPointFunction):
            b = MultiPointFunction.constant(a.vars, b)
        return rational_equal(a, b)
    return a == b


def _max_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _min_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def residue(s: PuiseuxSeries):
    """Coefficient of var^{-1}."""
    if not s.in_window(-1):
        raise WindowTooNarrow(f"-1 outside window {s.window}")
    return s.terms.get(Q(-1), s._zero_like())


# ---------------------------------------------------------------------------
# Expansion maps


@dataclass(frozen=True)
class ExpansionSite:
    tag: str  # "zero" | "infinity" | "diagonal"
    var: str
    base: str | None = None

    def __post_init__(self):
        if self.tag not in ("zero", "infinity", "diagonal"):
            raise ValueError(f"unknown site {self.tag}")
        if self.tag == "diagonal" and (self.base is None or self.base == self.var):
            raise ValueError("a diagonal site pairs two distinct variables")

    @classmethod
    def at_zero(cls, var):
        return cls("zero", var)

    @classmethod
    def at_infinity(cls, var):
        return cls("infinity", var)

    @classmethod
    def at_diagonal(cls, var, base):
        return cls("diagonal", var, base)

    @property
    def series_var(self):
        return f"({self.var}-{self.base})" if self.tag == "diagonal" else self.var


def _bounded_tuples(n, total):
    """All n-tuples of naturals with sum <= total."""
    if n == 0:
        yield ()
        return
    if total < 0:
        return
    for first in range(int(total) + 1):
        for rest in _bounded_tuples(n - 1, total - first):
            yield (first,) + rest


def expand(f: MultiPointFunction, site: ExpansionSite, trunc) -> PuiseuxSeries:
    """Formal expansion of f at the site, exact on the returned window."""
    trunc = as_q(trunc)
    if site.tag == "diagonal":
        return _expand_diagonal(f, site.var, site.base, trunc)
    k = f.vars.index(site.var)
    involved = []  # (other index, order, sign) with factor = sign**order * (x_k - x_o)^(-order)
    rest = {}
    for (i, j), l in f.poles.items():
        if i == k:
            involved.append((j, l, 1))
        elif j == k:
            involved.append((i, l, -1))
        else:
            rest[(i, j)] = l
    acc = {}

    def push(exp_k, mono, coef):
        key = exp_k
        bucket = acc.setdefault(key, {})
        mono = tuple(mono)
        v = bucket.get(mono, 0) + coef
        if v:
            bucket[mono] = v
        else:
            bucket.pop(mono, None)

    total_order = sum(l for _, l, _ in involved)
    for e, c in f.num.items():
        ek = e[k]
        sign = Q(1)
        for _, l, s in involved:
            sign *= Q(s) ** l
        if site.tag == "infinity":
            budget = ek - total_order - trunc
            if budget < 0:
                continue
            for ts in _bounded_tuples(len(involved), floor(budget)):
                coef = c * sign
                mono = list(e)
                mono[k] = Q(0)
                for (o, l, _), t in zip(involved, ts):
                    coef *= binomial_coeff(l + t - 1, t)
                    mono[o] += t
                push(ek - total_order - sum(ts), mono, coef)
        else:
            # at zero: (x_k - x_o)^(-l) = sum_t binom(-l, t) x_k^t (-x_o)^(-l-t)
            budget = trunc - ek
            if budget < 0:
                continue
            for ts in _bounded_tuples(len(involved), floor(budget)):
                coef = c * sign
                mono = list(e)
                mono[k] = Q(0)
                for (o, l, _), t in zip(involved, ts):
                    coef *= binomial_coeff(-l, t) * Q(-1) ** (l + t)
                    mono[o] += -l - t
                push(ek + sum(ts), mono, coef)
    terms = {}
    for ex, bucket in acc.items():
        if bucket:
            terms[ex] = MultiPointFunction(f.vars, bucket, rest)
    window = (trunc, None) if site.tag == "infinity" else (None, trunc)
    return PuiseuxSeries(site.var, terms, window)


def _expand_diagonal(f, var, base, trunc):
    k = f.vars.index(var)
    b = f.vars.index(base)
    vars_ = f.vars
    own = 0
    own_sign = Q(1)
    others = []  # (o, l, sign): factor = sign**l * (x_k - x_o)^(-l)
    rest = {}
    for (i, j), l in f.poles.items():
        if {i, j} == {k, b}:
            own = l
            own_sign = Q(1) if i == k else Q(-1)
        elif i == k:
            others.append((j, l, 1))
        elif j == k:
            others.append((i, l, -1))
        else:
            rest[(i, j)] = l
    # exponent of (x_k - x_b) ranges from -own upward
    budget = trunc + own
    terms = {}
    if budget < 0:
        return PuiseuxSeries(f"({var}-{base})", {}, (None, trunc))
    maxdeg = floor(budget)
    for e, c in f.num.items():
        ek = e[k]
        base_mono = list(e)
        base_mono[k] = Q(0)
        for t0 in range(maxdeg + 1):
            c0 = c * binomial_coeff(ek, t0)
            if not c0:
                continue
            mono0 = list(base_mono)
            mono0[b] += ek - t0
            for ts in _bounded_tuples(len(others), maxdeg - t0):
                coef = c0 * own_sign ** own
                poles = dict(rest)
                for (o, l, s), t in zip(others, ts):
                    # (x_b - x_o + x)^(-l) = sum_t binom(-l,t) x^t (x_b - x_o)^(-l-t)
                    coef *= Q(s) ** l * binomial_coeff(-l, t)
                    key = (min(b, o), max(b, o))
                    if b > o:
                        coef *= Q(-1) ** (l + t)
                    poles[key] = poles.get(key, 0) + l + t
                ex = Q(t0 + sum(ts) - own)
                term = MultiPointFunction(vars_, {tuple(mono0): coef}, poles)
                terms[ex] = terms[ex] + term if ex in terms else term
    return PuiseuxSeries(f"({var}-{base})", terms, (None, trunc))


def curve_residue(f: MultiPointFunction, var: str, point: str, T: int, base: str | None = None):
    """Residue of f d(var) on the T-fold twisted line at 0, infinity or the point var=base.

    Uses Res_z(iota_0 f) = (1/T) Res_0 and Res_z(iota_inf f) = -(1/T) Res_inf;
    the diagonal point is unramified so its residue is the plain one.
    """
    if point == "zero":
        return residue(expand(f, ExpansionSite.at_zero(var), -1)) * T
    if point == "infinity":
        return residue(expand(f, ExpansionSite.at_infinity(var), -1)) * (-T)
    if point == "diagonal":
        return residue(expand(f, ExpansionSite.at_diagonal(var, base), -1))
    raise ValueError(point)


def coefficient_at(f: MultiPointFunction, var: str, site: str, exponent, base=None):
    """Single coefficient of the expansion of f at a site."""
    exponent = as_q(exponent)
    if site == "zero":
        s = expand(f, ExpansionSite.at_zero(var), exponent)
    elif site == "infinity":
        s = expand(f, ExpansionSite.at_infinity(var), exponent)
    else:
        s = expand(f, ExpansionSite.at_diagonal(var, base), exponent)
    c = s.terms.get(exponent)
    if c is None:
        return MultiPointFunction.zero(f.vars)
    return c


__all__ = [
    "Q",
    "as_q",
    "fmt_q",
    "binomial_coeff",
    "MultiPointFunction",
    "PuiseuxSeries",
    "ExpansionSite",
    "expand",
    "residue",
    "rational_equal",
    "curve_residue",
    "coefficient_at",
    "WindowTooNarrow",
    "UnsupportedShape",
    "NotSingleValued",
]
