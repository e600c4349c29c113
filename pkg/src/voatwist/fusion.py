"""Fusion rules from bimodule tensor products, cross-checked against conformal blocks.

N(M3; M1, M2) = dim (U3 (x)_A B (x)_A U2) with A = A_g(V), B = A_g(M1) or
B_{g,lam}(M1), U2 the bottom level of M2 and U3 the dual bottom level of M3.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

from gmpy2 import mpq

from .correlation import BlockDatum, solve_blocks
from .linalg import RowSpace
from .series import as_q, fmt_q
from .voa import ONE, FockModule, TwistedModule, VertexAlgebra, to_fraction, vadd
from .zhu import quotient_algebra, quotient_bimodule

log = logging.getLogger(__name__)


class Mismatch(RuntimeError):
    pass


def make_algebra(voa, twist="theta"):
    if voa in ("heisenberg", "M(1)"):
        return VertexAlgebra.heisenberg(twist=twist)
    if voa in ("lattice-a1", "lattice_a1", "V_L"):
        return VertexAlgebra.lattice_a1(twist=twist)
    raise ValueError(f"unknown VOA {voa!r}")


def make_module(algebra, name):
    """Module ids: V, M(1,l) with rational l, V{L+a/2}, M(1)_tw, T+, T-."""
    if name in ("V", "V_L", "M(1)", "M(1,0)"):
        return algebra.module
    if algebra.kind == "heisenberg" and name.startswith("M(1,") and name.endswith(")"):
        lam = as_q(name[4:-1])
        return FockModule.with_weight(algebra, (lam,) + (0,) * (algebra.rank - 1), name=name)
    if algebra.kind == "lattice_a1" and name in ("V{L+a/2}", "V_{L+a/2}", "VL+a/2"):
        return FockModule(algebra, (1,), name="V{L+a/2}")
    if name in ("M(1)_tw", "tw") and algebra.kind == "heisenberg":
        return TwistedModule(algebra)
    if name in ("T+", "T-") and algebra.kind == "lattice_a1":
        return TwistedModule(algebra, 1 if name == "T+" else -1)
    raise ValueError(f"unknown module {name!r} for {algebra.name}")


@dataclass(frozen=True)
class FusionQuery:
    voa: str
    m1: str
    m2: str
    m3: str
    mode: str = "A"  # "A" or "B"
    lam: Fraction | None = None

    def with_mode(self, mode, lam=None):
        return FusionQuery(self.voa, self.m1, self.m2, self.m3, mode, lam)

    def label(self):
        tag = "A_g" if self.mode == "A" else f"B_g({fmt_q(as_q(self.lam or 0))})"
        return f"{self.voa}: {self.m1} x {self.m2} -> {self.m3} [{tag}]"


STANDARD_QUERIES = (
    FusionQuery("heisenberg", "M(1,1)", "M(1)_tw", "M(1)_tw"),
    FusionQuery("lattice-a1", "V", "T+", "T+"),
    FusionQuery("lattice-a1", "V", "T+", "T-"),
    FusionQuery("lattice-a1", "V{L+a/2}", "T+", "T+"),
    FusionQuery("lattice-a1", "V{L+a/2}", "T+", "T-"),
    FusionQuery("lattice-a1", "V", "T-", "T-"),
    FusionQuery("lattice-a1", "V", "T-", "T+"),
    FusionQuery("lattice-a1", "V{L+a/2}", "T-", "T-"),
    FusionQuery("lattice-a1", "V{L+a/2}", "T-", "T+"),
)


class BottomLevel:
    """Bottom level of a twisted module with the zero-mode action of A_g(V)."""

    def __init__(self, module, algebra_quotient):
        self.module = module
        self.A = algebra_quotient
        self.basis = list(module.bottom())
        alg = module.algebra
        self.matrices = []  # o(x_i) as {(row, col): c}
        for x in self.A.basis:
            x0 = alg.project({x: ONE}, 0) if alg.T > 1 else {x: ONE}
            mat = {}
            for j, b in enumerate(self.basis):
                img = module.apply(x0, alg.weight(x) - 1, {b: ONE}) if x0 else {}
                for i, c in enumerate(self.basis):
                    v = img.get(c, 0)
                    if v:
                        mat[i, j] = mpq(v)
            self.matrices.append(mat)

    @property
    def dim(self):
        return len(self.basis)

    def left(self, k, coords):
        """Action of x_k on a vector of U2 (coordinates)."""
        out = [mpq(0)] * self.dim
        for (i, j), c in self.matrices[k].items():
            out[i] += c * coords[j]
        return out

    def right(self, coords, k):
        """Right action of x_k on the dual space: (f . x)(u) = f(o(x) u)."""
        out = [mpq(0)] * self.dim
        for (i, j), c in self.matrices[k].items():
            out[j] += coords[i] * c
        return out

    def omega_scalar(self):
        """The scalar by which [omega] acts, or None if it is not scalar."""
        mat = {}
        for k, c in enumerate(self.A.omega):
            for key, x in self.matrices[k].items():
                mat[key] = mat.get(key, 0) + c * x
        diag = {mat.get((i, i), 0) for i in range(self.dim)}
        if len(diag) != 1 or any(x for (i, j), x in mat.items() if i != j):
            return None
        return to_fraction(diag.pop())


def tensor_over_algebra(U3: BottomLevel, B, U2: BottomLevel):
    """dim of U3 (x)_A B (x)_A U2 by exact rank of the balancing relations."""
    n3, nb, n2 = U3.dim, B.dim, U2.dim
    rows = RowSpace()

    def unit(n, i):
        return [mpq(int(t == i)) for t in range(n)]

    for k in range(B.algebra_quotient.dim):
        for p in range(n3):
            for b in range(nb):
                for q in range(n2):
                    rel = {}
                    for p2, c in enumerate(U3.right(unit(n3, p), k)):
                        if c:
                            vadd(rel, {(p2, b, q): c})
                    for b2, c in enumerate(B.left(k, unit(nb, b))):
                        if c:
                            vadd(rel, {(p, b2, q): -c})
                    rows.add(rel)
                    rel = {}
                    for b2, c in enumerate(B.right(k, unit(nb, b))):
                        if c:
                            vadd(rel, {(p, b2, q): c})
                    for q2, c in enumerate(U2.left(k, unit(n2, q))):
                        if c:
                            vadd(rel, {(p, b, q2): -c})
                    rows.add(rel)
    return n3 * nb * n2 - rows.rank


class FusionEngine:
    """Caches algebra quotients and bottom levels across queries."""

    def __init__(self, window=4, algebra_window=None):
        self.window = as_q(window)
        self.algebra_window = algebra_window
        self._alg = {}
        self._quot = {}
        self._bottom = {}
        self._bimod = {}

    def algebra(self, voa):
        if voa not in self._alg:
            self._alg[voa] = make_algebra(voa)
        return self._alg[voa]

    def quotient(self, voa):
        if voa not in self._quot:
            w = self.algebra_window or max(4, int(self.window))
            self._quot[voa] = quotient_algebra(self.algebra(voa), w)
        return self._quot[voa]

    def bottom(self, voa, name):
        key = (voa, name)
        if key not in self._bottom:
            alg = self.algebra(voa)
            self._bottom[key] = BottomLevel(make_module(alg, name), self.quotient(voa))
        return self._bottom[key]

    def bimodule(self, q: FusionQuery, window=None):
        window = self.window if window is None else as_q(window)
        key = (q.voa, q.m1, q.mode, q.lam, window)
        if key not in self._bimod:
            alg = self.algebra(q.voa)
            M = make_module(alg, q.m1)
            self._bimod[key] = quotient_bimodule(alg, M, q.mode, window, q.lam, self.quotient(q.voa))
        return self._bimod[key]

    def tensor(self, q: FusionQuery, window=None):
        return tensor_over_algebra(self.bottom(q.voa, q.m3), self.bimodule(q, window), self.bottom(q.voa, q.m2))

    def weights(self, q: FusionQuery):
        alg = self.algebra(q.voa)
        return tuple(make_module(alg, n).bottom_weight for n in (q.m1, q.m2, q.m3))

    def fusion_rule(self, q: FusionQuery, window=None):
        """(dimension, stable) with stability meaning the same value at window + 1."""
        window = self.window if window is None else as_q(window)
        n = self.tensor(q, window)
        n_next = self.tensor(q, window + 1)
        return n, n == n_next

    def blocks(self, q: FusionQuery, window=None):
        window = self.window if window is None else as_q(window)
        alg = self.algebra(q.voa)
        datum = BlockDatum(alg, make_module(alg, q.m1), make_module(alg, q.m2), make_module(alg, q.m3), window)
        return solve_blocks(datum)

    def lambda_dimensions(self, q: FusionQuery, lam2=None, window=None):
        """Tensor dimensions over B_{g,h2-h3}, B_{g,lam2} (default h2-h3+1) and A_g."""
        _, h2, h3 = self.weights(q)
        lam1 = h2 - h3
        lam2 = lam1 + 1 if lam2 is None else as_q(lam2)
        return {
            "B(lam1)": self.tensor(q.with_mode("B", lam1), window),
            "B(lam2)": self.tensor(q.with_mode("B", lam2), window),
            "A": self.tensor(q.with_mode("A"), window),
            "lam1": lam1,
            "lam2": lam2,
        }

    def lambda_insensitivity(self, q: FusionQuery, lam2=None, window=None):
        dims = self.lambda_dimensions(q, lam2, window)
        return dims["B(lam1)"] == dims["B(lam2)"] == dims["A"]

    def cross_validate(self, q: FusionQuery, window=None, strict=True):
        tensor, stable = self.fusion_rule(q, window)
        blocks = self.blocks(q, window).dim
        report = {"query": q.label(), "tensor": tensor, "blocks": blocks, "stable": stable}
        if strict and tensor != blocks:
            raise Mismatch(f"{q.label()}: tensor {tensor} != blocks {blocks}")
        return report


def fusion_rule(q: FusionQuery, window=4):
    return FusionEngine(window).fusion_rule(q)


def lambda_insensitivity(q: FusionQuery, lam2=None, window=4):
    return FusionEngine(window).lambda_insensitivity(q, lam2)


def cross_validate(q: FusionQuery, window=4):
    return FusionEngine(window).cross_validate(q)


_TEX_NAMES = {
    "M(1,1)": r"M(1,\lambda)",
    "M(1)_tw": r"M(1)_{\mathbb{Z}+1/2}",
    "V": "V_L",
    "V{L+a/2}": r"V_{L+\alpha/2}",
    "T+": r"V_L^{T_{\chi}}",
    "T-": r"V_L^{T_{-\chi}}",
}


def table(rows):
    """LaTeX tabular from rows of (query, tensor, blocks); formatting only."""
    out = [r"\begin{tabular}{llllcc}", r"\hline", r"$V$ & $M^1$ & $M^2$ & $M^3$ & tensor & blocks \\", r"\hline"]
    for q, t, b in rows:
        voa = "M(1)" if q.voa == "heisenberg" else "V_L"
        out.append(
            f"${voa}$ & ${_TEX_NAMES.get(q.m1, q.m1)}$ & ${_TEX_NAMES.get(q.m2, q.m2)}$ & "
            f"${_TEX_NAMES.get(q.m3, q.m3)}$ & {t} & {b} \\\\"
        )
    out += [r"\hline", r"\end{tabular}"]
    return "\n".join(out) + "\n"


__all__ = [
    "FusionQuery",
    "FusionEngine",
    "BottomLevel",
    "Mismatch",
    "STANDARD_QUERIES",
    "make_algebra",
    "make_module",
    "tensor_over_algebra",
    "fusion_rule",
    "lambda_insensitivity",
    "cross_validate",
    "table",
]
