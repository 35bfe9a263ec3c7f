"""Tanner graphs sampled from LDPC(n, lambda, rho), parity-check matrices and alist I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gf2
from .degree import EnsembleSpec


class CapExceeded(Exception):
    """The requested list would exceed the caller's size cap."""

    def __init__(self, message: str, payload=None):
        super().__init__(message)
        self.payload = payload


class AlistError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Bipartite multigraph; edge ``k`` joins ``var[k]`` and ``chk[k]``."""

    n_var: int
    n_chk: int
    var: np.ndarray
    chk: np.ndarray
    var_adj: list[list[int]] = field(repr=False)
    chk_adj: list[list[int]] = field(repr=False)

    @classmethod
    def from_edges(cls, n_var: int, n_chk: int, edges) -> "TannerGraph":
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        var, chk = e[:, 0].copy(), e[:, 1].copy()
        if len(var) and (var.min() < 0 or var.max() >= n_var or chk.min() < 0 or chk.max() >= n_chk):
            raise ValueError("edge endpoint out of range")
        var_adj: list[list[int]] = [[] for _ in range(n_var)]
        chk_adj: list[list[int]] = [[] for _ in range(n_chk)]
        for v, c in zip(var.tolist(), chk.tolist()):
            var_adj[v].append(c)
            chk_adj[c].append(v)
        var.setflags(write=False)
        chk.setflags(write=False)
        return cls(n_var, n_chk, var, chk, var_adj, chk_adj)

    @property
    def n_edges(self) -> int:
        return len(self.var)

    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.var.tolist(), self.chk.tolist()))

    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.var, minlength=self.n_var)

    def chk_degrees(self) -> np.ndarray:
        return np.bincount(self.chk, minlength=self.n_chk)

    def write_edgelist(self, path) -> None:
        lines = [f"# n_var={self.n_var} n_chk={self.n_chk}"]
        lines += [f"{v} {c}" for v, c in self.edges()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read_edgelist(cls, path) -> "TannerGraph":
        n_var = n_chk = None
        edges = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    k, _, v = tok.partition("=")
                    if k == "n_var":
                        n_var = int(v)
                    elif k == "n_chk":
                        n_chk = int(v)
                continue
            try:
                v, c = (int(t) for t in line.split())
            except ValueError:
                raise AlistError(f"expected 'v c', got {line!r}", lineno) from None
            edges.append((v, c))
        if n_var is None:
            n_var = 1 + max((v for v, _ in edges), default=-1)
        if n_chk is None:
            n_chk = 1 + max((c for _, c in edges), default=-1)
        return cls.from_edges(n_var, n_chk, edges)


def sample_graph(spec: EnsembleSpec, seed) -> TannerGraph:
    """Configuration-model sample; parallel edges are kept."""
    rng = np.random.default_rng(seed)
    vcounts = spec.variable_counts()
    var_sockets = np.repeat(
        np.arange(spec.n),
        np.concatenate([np.full(cnt, d) for d, cnt in sorted(vcounts.items())]).astype(np.int64),
    )
    n_edges = len(var_sockets)
    ccounts = spec.check_counts(n_edges)
    cdeg = np.concatenate([np.full(cnt, d) for d, cnt in sorted(ccounts.items())]).astype(np.int64)
    chk_sockets = np.repeat(np.arange(len(cdeg)), cdeg)
    if len(chk_sockets) != n_edges:
        raise ValueError(f"edge count mismatch: {n_edges} variable vs {len(chk_sockets)} check sockets")
    perm = rng.permutation(n_edges)
    return TannerGraph.from_edges(spec.n, len(cdeg), np.column_stack([var_sockets, chk_sockets[perm]]))


@dataclass(frozen=True)
class ParityCheckMatrix:
    n: int
    rows: tuple[frozenset[int], ...]

    @property
    def m(self) -> int:
        return len(self.rows)

    @classmethod
    def from_dense(cls, mat) -> "ParityCheckMatrix":
        a = np.atleast_2d(np.asarray(mat, dtype=np.uint8)) & 1
        return cls(a.shape[1], tuple(frozenset(np.flatnonzero(r).tolist()) for r in a))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            a[i, sorted(r)] = 1
        return a

    def packed_rows(self) -> list[int]:
        return [sum(1 << j for j in r) for r in self.rows]

    def rank(self) -> int:
        return gf2.rank(self.packed_rows(), self.n)

    def syndrome(self, word) -> np.ndarray:
        return (self.to_dense().astype(np.int64) @ np.asarray(word, dtype=np.int64)) & 1

    def to_graph(self) -> TannerGraph:
        edges = [(v, c) for c, r in enumerate(self.rows) for v in sorted(r)]
        return TannerGraph.from_edges(self.n, self.m, edges)


def to_parity_check(graph: TannerGraph) -> ParityCheckMatrix:
    rows: list[set[int]] = [set() for _ in range(graph.n_chk)]
    for v, c in graph.edges():
        rows[c] ^= {v}
    return ParityCheckMatrix(graph.n_var, tuple(frozenset(r) for r in rows))


def codebook_basis(H: ParityCheckMatrix) -> list[int]:
    return gf2.nullspace(H.packed_rows(), H.n)


def enumerate_codewords(H: ParityCheckMatrix, cap: int = 1 << 20) -> np.ndarray:
    """All codewords as a ``(2**k, n)`` uint8 array, all-zero word first."""
    basis = codebook_basis(H)
    if (1 << len(basis)) > cap:
        raise CapExceeded(f"codebook has 2^{len(basis)} words, cap is {cap}", basis)
    words = gf2.span(basis)
    return words_to_array(words, H.n)


def words_to_array(words, n: int) -> np.ndarray:
    if n <= 63:
        w = np.asarray(words, dtype=np.int64)
        return ((w[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    out = np.zeros((len(words), n), dtype=np.uint8)
    for j in range(n):
        out[:, j] = [(x >> j) & 1 for x in words]
    return out


def random_codeword(H: ParityCheckMatrix, rng) -> np.ndarray:
    basis = codebook_basis(H)
    word = 0
    for b, pick in zip(basis, rng.integers(0, 2, len(basis))):
        if pick:
            word ^= b
    return gf2.unpack_bits(word, H.n)


def write_alist(H: ParityCheckMatrix, path) -> None:
    cols: list[list[int]] = [[] for _ in range(H.n)]
    for i, r in enumerate(H.rows):
        for j in r:
            cols[j].append(i)
    rows = [sorted(r) for r in H.rows]
    cols = [sorted(c) for c in cols]
    max_c = max((len(c) for c in cols), default=0)
    max_r = max((len(r) for r in rows), default=0)

    def padded(idx, width):
        vals = [i + 1 for i in idx] + [0] * (width - len(idx))
        return " ".join(map(str, vals))

    lines = [
        f"{H.n} {H.m}",
        f"{max_c} {max_r}",
        " ".join(str(len(c)) for c in cols),
        " ".join(str(len(r)) for r in rows),
    ]
    lines += [padded(c, max_c) for c in cols]
    lines += [padded(r, max_r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_alist(path) -> ParityCheckMatrix:
    """Read MacKay's alist layout; zero padding is accepted but not required."""
    text = Path(path).read_text().splitlines()
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text) if ln.strip()]
    pos = 0

    def take(count=None):
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise AlistError("unexpected end of file", last + 1)
        lineno, toks = lines[pos]
        pos += 1
        try:
            vals = [int(t) for t in toks]
        except ValueError:
            raise AlistError(f"non-integer token in {' '.join(toks)!r}", lineno) from None
        if count is not None and len(vals) != count:
            raise AlistError(f"expected {count} integers, found {len(vals)}", lineno)
        return lineno, vals

    ln, (n, m) = _pair(take)
    if n <= 0 or m <= 0:
        raise AlistError("header must give positive n m", ln)
    ln, (max_c, max_r) = _pair(take)
    ln, col_w = take(n)
    ln_rw, row_w = take(m)
    if any(w > max_c for w in col_w) or any(w > max_r for w in row_w):
        raise AlistError("degree exceeds declared maximum", ln_rw)
    cols = []
    for j in range(n):
        ln, vals = take()
        idx = [v for v in vals if v != 0]
        if len(idx) != col_w[j] or any(not 1 <= v <= m for v in idx):
            raise AlistError(f"column {j + 1} adjacency does not match its weight", ln)
        cols.append(idx)
    rows = []
    for i in range(m):
        ln, vals = take()
        idx = [v for v in vals if v != 0]
        if len(idx) != row_w[i] or any(not 1 <= v <= n for v in idx):
            raise AlistError(f"row {i + 1} adjacency does not match its weight", ln)
        rows.append(frozenset(v - 1 for v in idx))
    for j, c in enumerate(cols):
        for i in c:
            if j not in rows[i - 1]:
                raise AlistError(f"column {j + 1} lists row {i} but not vice versa", 0)
    return ParityCheckMatrix(n, tuple(rows))


def _pair(take):
    ln, vals = take()
    if len(vals) != 2:
        raise AlistError("expected two integers", ln)
    return ln, vals
