"""Exact linear algebra over Q on sparse rows (dict column -> Fraction)."""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction

SparseRow = dict[int, Fraction]


class SparseEliminator:
    """Incremental reduced row echelon form.

    Rows are added one at a time and kept fully reduced, so every pivot
    column appears in exactly one stored row. The pivot of a new row is the
    column with the fewest occurrences among stored rows (ties go to the
    highest index), which keeps fill-in low for Manin-symbol relations.
    """

    def __init__(self, pivot_rule: str = "fill"):
        self.pivot_rule = pivot_rule
        self.rows: dict[int, SparseRow] = {}  # pivot column -> row (pivot coeff 1)
        self.col_rows: dict[int, set[int]] = defaultdict(set)  # column -> pivots of rows using it

    def reduce(self, row: SparseRow) -> SparseRow:
        row = {c: Fraction(v) for c, v in row.items() if v}
        for c in [c for c in row if c in self.rows]:
            coeff = row.get(c)
            if not coeff:
                continue
            for cc, vv in self.rows[c].items():
                nv = row.get(cc, 0) - coeff * vv
                if nv:
                    row[cc] = nv
                else:
                    row.pop(cc, None)
        return row

    def add(self, row: SparseRow) -> int | None:
        row = self.reduce(row)
        if not row:
            return None
        if self.pivot_rule == "first":
            pivot = min(row)
        else:
            pivot = min(row, key=lambda c: (len(self.col_rows.get(c, ())), -c))
        inv = 1 / row[pivot]
        row = {c: v * inv for c, v in row.items()}
        # eliminate the new pivot from stored rows
        for pc in list(self.col_rows.get(pivot, ())):
            other = self.rows[pc]
            coeff = other[pivot]
            for c, v in row.items():
                nv = other.get(c, 0) - coeff * v
                if nv:
                    if c not in other:
                        self.col_rows[c].add(pc)
                    other[c] = nv
                else:
                    if c in other:
                        del other[c]
                        self.col_rows[c].discard(pc)
        self.rows[pivot] = row
        for c in row:
            self.col_rows[c].add(pivot)
        return pivot

    @property
    def rank(self) -> int:
        return len(self.rows)

    def pivots(self) -> set[int]:
        return set(self.rows)


def nullspace(matrix: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of {v : M v = 0} for a dense rational matrix given as rows."""
    elim = SparseEliminator()
    for r in matrix:
        elim.add({j: v for j, v in enumerate(r) if v})
    free = [j for j in range(ncols) if j not in elim.rows]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for pc, row in elim.rows.items():
            v[pc] = -row.get(f, Fraction(0))
        basis.append(v)
    return basis


def rank(matrix: list[list[Fraction]]) -> int:
    elim = SparseEliminator()
    for r in matrix:
        elim.add({j: v for j, v in enumerate(r) if v})
    return elim.rank


def solve_left_combination(basis: list[list[Fraction]], target: list[Fraction]) -> list[Fraction]:
    """Coefficients c with sum_i c_i basis[i] == target (basis independent)."""
    k = len(basis)
    n = len(target)
    # columns = basis vectors; augmented with target
    rows = [[basis[i][j] for i in range(k)] + [target[j]] for j in range(n)]
    elim = SparseEliminator(pivot_rule="first")
    for r in rows:
        elim.add({j: v for j, v in enumerate(r) if v})
    if k in elim.rows:
        raise ValueError("target not in span")
    out = []
    for i in range(k):
        row = elim.rows.get(i)
        if row is None:
            raise ValueError("basis not independent")
        out.append(row.get(k, Fraction(0)))
    return out
