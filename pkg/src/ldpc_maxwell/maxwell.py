"""Maxwell decoder: complete list decoding over the BEC.

Instead of forking 2**h decoder copies, every variable carries an affine
form over GF(2) in the guess variables ``g_0, g_1, ...``.  A form is packed
into an int: bit 0 is the constant, bit ``j + 1`` is ``g_j``.  Consistency
constraints between copies become rows of an incremental echelon basis,
and ``h = guesses - rank`` is the log2 number of surviving copies.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .channels import BEC, ERASURE
from .degree import EnsembleSpec
from .gf2 import EchelonBasis
from .peeling import InconsistentInput, initial_checks, trial_seeds
from .tanner import CapExceeded, TannerGraph, sample_graph

UNKNOWN = -1


@dataclass(frozen=True)
class AffineExpr:
    constant: int
    support: frozenset[int]

    @classmethod
    def from_word(cls, word: int) -> "AffineExpr":
        support = frozenset(j - 1 for j in range(1, word.bit_length()) if (word >> j) & 1)
        return cls(word & 1, support)

    def to_word(self) -> int:
        w = self.constant & 1
        for j in self.support:
            w |= 1 << (j + 1)
        return w

    def __xor__(self, other: "AffineExpr") -> "AffineExpr":
        return AffineExpr(self.constant ^ other.constant, self.support ^ other.support)

    def evaluate(self, guesses: dict[int, int]) -> int:
        return (self.constant + sum(guesses[j] for j in self.support)) & 1


@dataclass
class MaxwellTrace:
    ell: list[int] = field(default_factory=list)
    h: list[int] = field(default_factory=list)
    guesses: list[int] = field(default_factory=list)
    resolutions: list[int] = field(default_factory=list)

    def append(self, ell, h, guesses, resolutions):
        self.ell.append(ell)
        self.h.append(h)
        self.guesses.append(guesses)
        self.resolutions.append(resolutions)

    def __len__(self):
        return len(self.ell)

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.ell, self.h, self.guesses, self.resolutions]).astype(np.int64)

    def peak(self) -> int:
        return max(self.h, default=0)


@dataclass
class MaxwellResult:
    forms: list[int]
    basis: EchelonBasis
    total_guesses: int
    total_resolutions: int
    dependent_constraints: int
    trace: MaxwellTrace
    codewords: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.forms)

    @property
    def h_final(self) -> int:
        return self.total_guesses - self.total_resolutions

    def expr(self, v: int) -> AffineExpr:
        return AffineExpr.from_word(self.forms[v])


class UnknownSet:
    """Unknown variables with O(1) removal and uniform sampling."""

    __slots__ = ("items", "pos")

    def __init__(self, items):
        self.items = list(items)
        self.pos = {v: i for i, v in enumerate(self.items)}

    def __len__(self):
        return len(self.items)

    def __contains__(self, v):
        return v in self.pos

    def remove(self, v):
        i = self.pos.pop(v)
        last = self.items.pop()
        if i < len(self.items):
            self.items[i] = last
            self.pos[last] = i


def guess_policy(unknown: UnknownSet, rng) -> int:
    """Uniform choice among the currently unknown variables."""
    if not len(unknown):
        raise ValueError("no unknown variable to guess")
    return unknown.items[int(rng.integers(len(unknown)))]


def maxwell_decode(
    graph: TannerGraph,
    received,
    seed=None,
    list_cap: int = 1 << 16,
    record_trace: bool = True,
) -> MaxwellResult:
    """List-decode a BEC output.

    Alternates peeling (degree-1 checks propagate affine forms) with single
    guesses on a uniformly chosen unknown variable.  Every check that runs
    out of unknown neighbours while carrying a non-zero affine parity yields
    a constraint; independent ones increment the rank.
    """
    if list_cap < 1:
        raise ValueError("list_cap must be >= 1")
    rng = np.random.default_rng(seed)
    raw = np.asarray(received)
    if len(raw) != graph.n_var:
        raise ValueError("received word length does not match the graph")
    if np.any((raw != 0) & (raw != 1) & (raw != ERASURE)):
        raise ValueError("received symbols must be 0, 1 or ERASURE")
    y = raw.astype(np.int8)
    known = y != ERASURE
    deg_a, par_a = initial_checks(graph, known, y)
    if np.any((deg_a == 0) & (par_a == 1)):
        raise InconsistentInput("a check with no erased neighbours has odd parity")

    deg = deg_a.tolist()
    parity = par_a.tolist()
    forms = [int(b) if b != ERASURE else UNKNOWN for b in y.tolist()]
    var_adj, chk_adj = graph.var_adj, graph.chk_adj
    unknown = UnknownSet(np.flatnonzero(~known).tolist())
    basis = EchelonBasis()
    trace = MaxwellTrace()
    guesses = 0
    dependent = 0
    ell = 0
    if record_trace:
        trace.append(0, 0, 0, 0)

    work = deque(np.flatnonzero(deg_a == 1).tolist())

    def assign(v: int, form: int) -> None:
        nonlocal dependent
        forms[v] = form
        unknown.remove(v)
        for c2 in var_adj[v]:
            d = deg[c2] - 1
            deg[c2] = d
            p = parity[c2] ^ form
            parity[c2] = p
            if d == 1:
                work.append(c2)
            elif d == 0 and p:
                try:
                    added = basis.add(p)
                except ValueError:
                    raise InconsistentInput(f"check {c2} forces 1 = 0") from None
                if not added:
                    dependent += 1

    while unknown:
        while work:
            c = work.popleft()
            if deg[c] != 1:
                continue
            for v in chk_adj[c]:
                if forms[v] == UNKNOWN:
                    break
            assign(v, parity[c])
            ell += 1
            if record_trace:
                trace.append(ell, guesses - basis.rank, guesses, basis.rank)
        if not unknown:
            break
        v = guess_policy(unknown, rng)
        assign(v, 1 << (guesses + 1))
        guesses += 1
        ell += 1
        if record_trace:
            trace.append(ell, guesses - basis.rank, guesses, basis.rank)

    result = MaxwellResult(forms, basis, guesses, basis.rank, dependent, trace)
    if (1 << result.h_final) <= list_cap:
        result.codewords = enumerate_list(result, list_cap)
    return result


def enumerate_list(result: MaxwellResult, cap: int = 1 << 16) -> np.ndarray:
    """Codewords compatible with the received word, as a ``(2**h, n)`` array."""
    h = result.h_final
    if (1 << h) > cap:
        raise CapExceeded(f"list has 2^{h} words, cap is {cap}", result.basis)
    pivots = result.basis.pivots()
    free = [j for j in range(result.total_guesses) if (j + 1) not in pivots]
    assert len(free) == h
    n_bits = result.total_guesses + 1
    assigns = []
    for k in range(1 << h):
        values = {j: (k >> i) & 1 for i, j in enumerate(free)}
        assigns.append(result.basis.solve(result.total_guesses, values))
    amat = _bits(assigns, n_bits)  # (2**h, n_bits)
    fmat = _bits(result.forms, n_bits)  # (n, n_bits)
    return ((amat.astype(np.int64) @ fmat.T.astype(np.int64)) & 1).astype(np.uint8)


def _bits(words, width: int) -> np.ndarray:
    nbytes = (width + 7) // 8
    buf = b"".join(w.to_bytes(nbytes, "little") for w in words)
    arr = np.frombuffer(buf, dtype=np.uint8).reshape(len(words), nbytes)
    return np.unpackbits(arr, axis=1, bitorder="little")[:, :width]


@dataclass
class BalanceStats:
    guesses: float
    resolutions: float
    h_final: float
    guesses_se: float
    resolutions_se: float
    h_final_se: float
    trials: int


def run_trial(spec: EnsembleSpec, epsilon: float, seed, trial: int, record_trace: bool = False) -> MaxwellResult:
    """One (graph, erasure pattern, guess sequence) realisation, all-zero codeword."""
    gseed, cseed = trial_seeds(seed, trial)
    graph = sample_graph(spec, gseed)
    y = BEC(epsilon).transmit(np.zeros(spec.n, dtype=np.int8), cseed)
    dseed = np.random.SeedSequence([int(seed), int(trial), 2])
    return maxwell_decode(graph, y, dseed, list_cap=1, record_trace=record_trace)


def balance_statistics(spec: EnsembleSpec, epsilon: float, trials: int, seed) -> BalanceStats:
    """Mean guesses/n, resolutions/n and h_final/n with standard errors."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows = np.array(
        [
            (r.total_guesses, r.total_resolutions, r.h_final)
            for r in (run_trial(spec, epsilon, seed, t) for t in range(trials))
        ],
        dtype=float,
    ) / spec.n
    mean = rows.mean(axis=0)
    se = rows.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.zeros(3)
    return BalanceStats(*mean, *se, trials)
