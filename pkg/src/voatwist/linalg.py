"""Exact sparse row reduction over the rationals.

Columns are arbitrary hashable labels ordered by a priority key; every row is
stored with its highest-priority column as pivot (coefficient 1), so a row
never touches a column ranked above its pivot.  With a key that ranks by
weight first, the rows whose pivots sit at weight <= N span exactly the part
of the row space inside weight <= N.
"""

from __future__ import annotations

from gmpy2 import mpq

from .voa import vadd

ONE = mpq(1)


class RowSpace:
    def __init__(self, key=None):
        self.key = key or (lambda c: c)
        self._keys = {}
        self.rows = {}  # pivot -> row dict

    def rank_key(self, c):
        k = self._keys.get(c)
        if k is None:
            k = self._keys[c] = self.key(c)
        return k

    def _top(self, v, among_pivots=False):
        best = None
        bk = None
        for c in v:
            if among_pivots and c not in self.rows:
                continue
            k = self.rank_key(c)
            if best is None or k > bk:
                best, bk = c, k
        return best

    def add(self, v):
        """Insert v; return True if it enlarged the row space."""
        v = {c: mpq(x) for c, x in v.items() if x}
        while v:
            p = self._top(v)
            row = self.rows.get(p)
            if row is None:
                inv = ONE / v[p]
                self.rows[p] = {c: x * inv for c, x in v.items()}
                return True
            vadd(v, row, -v[p])
        return False

    def extend(self, vectors):
        n = 0
        for v in vectors:
            n += self.add(v)
        return n

    def reduce(self, v):
        """Normal form: v minus a combination of rows, free of pivot columns."""
        v = {c: mpq(x) for c, x in v.items() if x}
        while True:
            p = self._top(v, among_pivots=True)
            if p is None:
                return v
            vadd(v, self.rows[p], -v[p])

    def contains(self, v):
        return not self.reduce(v)

    def __len__(self):
        return len(self.rows)

    @property
    def rank(self):
        return len(self.rows)

    def pivots(self):
        return set(self.rows)


def rank_of(vectors, key=None):
    rs = RowSpace(key)
    rs.extend(vectors)
    return rs.rank


def nullspace(rows, columns):
    """Basis of {x : sum_c row[c] x[c] = 0 for every row} over the given columns.

    Solves by reducing the transposed system: returns dicts column -> value.
    """
    order = {c: i for i, c in enumerate(columns)}
    rs = RowSpace(key=lambda c: -order[c])
    rs.extend(rows)
    free = [c for c in columns if c not in rs.rows]
    # back-substitute to fully reduced form
    piv = sorted(rs.rows, key=lambda c: order[c], reverse=True)
    reduced = {}
    for p in piv:
        row = dict(rs.rows[p])
        for c in list(row):
            if c != p and c in reduced:
                vadd(row, reduced[c], -row[c])
        reduced[p] = row
    basis = []
    for f in free:
        x = {f: ONE}
        for p, row in reduced.items():
            c = row.get(f)
            if c:
                x[p] = -c
        basis.append(x)
    return basis


def solve_in_span(vectors, target):
    """Coefficients c with sum c_i vectors[i] = target, or None if target is not in the span."""
    rs = RowSpace(key=lambda c: (0, c[1]) if c[0] == "aux" else (1, c[1]))
    for i, v in enumerate(vectors):
        row = {("main", k): x for k, x in v.items()}
        row[("aux", i)] = ONE
        rs.add(row)
    rem = rs.reduce({("main", k): x for k, x in target.items()})
    if any(tag == "main" for tag, _ in rem):
        return None
    out = [mpq(0)] * len(vectors)
    for (_, i), x in rem.items():
        out[i] = -x
    return out
