"""GF(2) linear algebra on rows packed into Python ints (bit j = column j)."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


def pack_bits(bits: Sequence[int]) -> int:
    out = 0
    for j, b in enumerate(bits):
        if b:
            out |= 1 << j
    return out


def unpack_bits(word: int, n: int) -> np.ndarray:
    return np.array([(word >> j) & 1 for j in range(n)], dtype=np.uint8)


def row_reduce(rows: Iterable[int], n_cols: int) -> tuple[list[int], list[int]]:
    """Reduced row-echelon form.

    Pivot of each row is its lowest set column; rows are swapped into
    place as pivots are found.  Returns ``(reduced_rows, pivot_columns)``.
    """
    work = [r for r in rows if r]
    pivots: list[int] = []
    top = 0
    for col in range(n_cols):
        bit = 1 << col
        piv = None
        for r in range(top, len(work)):
            if work[r] & bit:
                piv = r
                break
        if piv is None:
            continue
        work[top], work[piv] = work[piv], work[top]
        prow = work[top]
        for r in range(len(work)):
            if r != top and work[r] & bit:
                work[r] ^= prow
        pivots.append(col)
        top += 1
        if top == len(work):
            break
    return work[:top], pivots


def rank(rows: Iterable[int], n_cols: int) -> int:
    return len(row_reduce(rows, n_cols)[1])


def nullspace(rows: Iterable[int], n_cols: int) -> list[int]:
    """Basis of {x : H x = 0} as packed words."""
    reduced, pivots = row_reduce(rows, n_cols)
    pivset = set(pivots)
    basis = []
    for free in range(n_cols):
        if free in pivset:
            continue
        vec = 1 << free
        for row, p in zip(reduced, pivots):
            if (row >> free) & 1:
                vec |= 1 << p
        basis.append(vec)
    return basis


def span(basis: Sequence[int]) -> list[int]:
    """All 2**k combinations of ``basis`` in Gray-code order."""
    out = [0]
    cur = 0
    for i in range(1, 1 << len(basis)):
        cur ^= basis[(i & -i).bit_length() - 1]
        out.append(cur)
    return out


class EchelonBasis:
    """Incrementally maintained echelon basis of affine GF(2) constraints.

    A constraint ``c + sum_{j in S} g_j = 0`` is packed as an int with bit 0
    the constant and bit ``j + 1`` guess variable ``g_j``.  Each stored row is
    keyed by its highest set bit, so reduction is a short chain of XORs.
    """

    __slots__ = ("rows",)

    def __init__(self):
        self.rows: dict[int, int] = {}

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, word: int) -> int:
        rows = self.rows
        while word > 1:
            hb = word.bit_length() - 1
            r = rows.get(hb)
            if r is None:
                break
            word ^= r
        return word

    def add(self, word: int) -> int:
        """Insert a constraint; returns 1 if independent, 0 if dependent.

        Raises ``ValueError`` when the constraint reduces to ``1 = 0``.
        """
        word = self.reduce(word)
        if word == 0:
            return 0
        if word == 1:
            raise ValueError("constraint reduces to 1 = 0")
        self.rows[word.bit_length() - 1] = word
        return 1

    def pivots(self) -> set[int]:
        return set(self.rows)

    def solve(self, n_vars: int, free_values: dict[int, int]) -> int:
        """Complete an assignment of guess variables.

        ``free_values`` maps non-pivot variable index -> bit.  Returns the
        packed assignment (bit ``j + 1`` = value of ``g_j``, bit 0 set so that
        affine forms evaluate by parity of ``form & assignment``).
        """
        assign = 1
        for j, b in free_values.items():
            if b:
                assign |= 1 << (j + 1)
        # every non-pivot bit of a row lies strictly below its pivot
        for p in sorted(self.rows):
            row = self.rows[p] & ~(1 << p)
            if (row & assign).bit_count() & 1:
                assign |= 1 << p
        return assign
