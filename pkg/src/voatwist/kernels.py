"""Kernel functions F_{n,i} on the twisted projective line.

F_{n,i}(z, w) = z^{-n} (1/i!) d^i/dw^i ( w^n / (z - w) ), n in (1/T)Z.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .series import (
    ExpansionSite,
    MultiPointFunction,
    NotSingleValued,
    PuiseuxSeries,
    Q,
    as_q,
    binomial_coeff,
    expand,
    residue,
)


@dataclass(frozen=True)
class KernelIndex:
    n: Fraction
    i: int

    def __post_init__(self):
        object.__setattr__(self, "n", as_q(self.n))
        if self.i < 0:
            raise ValueError("kernel index i must be natural")


def f_kernel(n, i: int, variables=("z", "w"), z="z", w="w") -> MultiPointFunction:
    """F_{n,i} as an exact rational function in the pair (z, w)."""
    n = as_q(n)
    out = MultiPointFunction.zero(variables)
    for l in range(i + 1):
        c = binomial_coeff(n, i - l)
        if not c:
            continue
        mono = MultiPointFunction.monomial(variables, {z: -n, w: n - i + l}, c)
        out = out + mono * MultiPointFunction.difference_power(variables, z, w, -1 - l)
    return out


def _w_monomial(exp, coef):
    return MultiPointFunction.monomial(("z", "w"), {"w": exp}, coef)


def f_kernel_expansion(n, i: int, site: ExpansionSite, trunc) -> PuiseuxSeries:
    """Closed-form expansions of F_{n,i} at 0, infinity and the diagonal.

    The window matches :func:`expand` with the same truncation, so the two can
    be compared term by term.
    """
    n = as_q(n)
    trunc = as_q(trunc)
    terms = {}
    if site.tag == "zero":
        # -sum_j binom(n-j-1, i) z^{j-n} w^{n-j-i-1}
        j = 0
        while j - n <= trunc:
            c = -binomial_coeff(n - j - 1, i)
            if c:
                terms[j - n] = _w_monomial(n - j - i - 1, c)
            j += 1
        return PuiseuxSeries("z", terms, (None, trunc))
    if site.tag == "infinity":
        # sum_j binom(n+j, i) z^{-n-j-1} w^{n+j-i}
        j = 0
        while -n - j - 1 >= trunc:
            c = binomial_coeff(n + j, i)
            if c:
                terms[-n - j - 1] = _w_monomial(n + j - i, c)
            j += 1
        return PuiseuxSeries("z", terms, (trunc, None))
    # diagonal: sum_{l<=i} sum_p binom(n,i-l) binom(-n,p) w^{-i+l-p} (z-w)^{p-l-1}
    for l in range(i + 1):
        p = 0
        while p - l - 1 <= trunc:
            c = binomial_coeff(n, i - l) * binomial_coeff(-n, p)
            if c:
                e = Q(p - l - 1)
                term = _w_monomial(-i + l - p, c)
                terms[e] = terms[e] + term if e in terms else term
            p += 1
    return PuiseuxSeries("(z-w)", terms, (None, trunc))


def kernel_recurrence_defect(n, i: int) -> MultiPointFunction:
    """F_{n,i} - F_{n+1,i} - binom(n,i) z^{-n-1} w^{n-i}; identically zero."""
    n = as_q(n)
    extra = MultiPointFunction.monomial(("z", "w"), {"z": -n - 1, "w": n - i}, binomial_coeff(n, i))
    return f_kernel(n, i) - f_kernel(n + 1, i) - extra


def residue_sum(f: MultiPointFunction, r: int, T: int, z="z", w="w") -> PuiseuxSeries:
    """(1/T)Res_0 + (1/T)Res_inf + Res_q of z^{r/T} f dz, as a series in w.

    The curve residues are obtained from the formal expansions
    (Res_z iota_0 = (1/T) Res_0, Res_z iota_inf = -(1/T) Res_inf), so the sum
    is Res_z iota_0 - Res_z iota_inf + Res_{z-w} iota_q.
    """
    g = f * MultiPointFunction.monomial(f.vars, {z: Fraction(r, T)})
    if any(c != 0 for c in g.exponent_classes(z)):
        raise NotSingleValued("z^{r/T} f keeps a fractional power of z")
    at0 = residue(expand(g, ExpansionSite.at_zero(z), -1))
    atinf = residue(expand(g, ExpansionSite.at_infinity(z), -1))
    atq = residue(expand(g, ExpansionSite.at_diagonal(z, w), -1))
    total = at0 - atinf + atq
    if not isinstance(total, MultiPointFunction):
        total = MultiPointFunction.constant(f.vars, total)
    k = f.vars.index(w)
    if total.poles:
        raise NotSingleValued("residue sum kept a pole in the remaining variables")
    terms = {}
    for e, c in total.num.items():
        terms[e[k]] = terms.get(e[k], 0) + c
    return PuiseuxSeries(w, terms, (None, None))


def derivative_identities(n, i: int):
    """Differences dF_{n,i}/dw - (i+1)F_{n,i+1} and dF_{n,i}/dz + (i+1)F_{n+1,i+1}."""
    f = f_kernel(n, i)
    dw = f.derivative("w") - f_kernel(n, i + 1) * (i + 1)
    dz = f.derivative("z") + f_kernel(as_q(n) + 1, i + 1) * (i + 1)
    return dw, dz
