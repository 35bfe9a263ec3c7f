"""Peeling (BEC belief propagation) decoder on Tanner multigraphs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .channels import BEC, ERASURE
from .degree import EnsembleSpec
from .tanner import TannerGraph, sample_graph


class InconsistentInput(ValueError):
    """A fully known check has odd parity; the input is not a BEC output."""


@dataclass
class PeelingResult:
    assignment: np.ndarray  # int8, ERASURE where unresolved
    stuck: bool
    stopping_set: np.ndarray  # unresolved variable indices

    @property
    def residual_fraction(self) -> float:
        return len(self.stopping_set) / len(self.assignment)


def initial_checks(graph: TannerGraph, known: np.ndarray, values: np.ndarray):
    """Residual degree and parity of every check given the known variables."""
    unknown_edge = ~known[graph.var]
    deg = np.bincount(graph.chk, weights=unknown_edge, minlength=graph.n_chk).astype(np.int64)
    ones = known[graph.var] & (values[graph.var] == 1)
    parity = np.bincount(graph.chk, weights=ones, minlength=graph.n_chk).astype(np.int64) & 1
    return deg, parity


def peel(graph: TannerGraph, received, rng=None) -> PeelingResult:
    """Resolve variables through residual-degree-1 checks until none remain.

    The worklist is FIFO; passing ``rng`` processes it in random order
    instead.  The final assignment does not depend on the order.
    """
    raw = np.asarray(received)
    if len(raw) != graph.n_var:
        raise ValueError("received word length does not match the graph")
    if np.any((raw != 0) & (raw != 1) & (raw != ERASURE)):
        raise ValueError("received symbols must be 0, 1 or ERASURE")
    y = raw.astype(np.int8)
    known = y != ERASURE
    deg_a, par_a = initial_checks(graph, known, y)
    if np.any((deg_a == 0) & (par_a == 1)):
        c = int(np.flatnonzero((deg_a == 0) & (par_a == 1))[0])
        raise InconsistentInput(f"check {c} has no erased neighbours but odd parity")
    deg = deg_a.tolist()
    parity = par_a.tolist()
    value = y.tolist()
    is_known = known.tolist()
    var_adj, chk_adj = graph.var_adj, graph.chk_adj

    work = deque(np.flatnonzero(deg_a == 1).tolist())
    while work:
        if rng is None:
            c = work.popleft()
        else:
            k = int(rng.integers(len(work)))
            work[k], work[-1] = work[-1], work[k]
            c = work.pop()
        if deg[c] != 1:
            continue
        for v in chk_adj[c]:
            if not is_known[v]:
                break
        val = parity[c]
        is_known[v] = True
        value[v] = val
        for c2 in var_adj[v]:
            d = deg[c2] - 1
            deg[c2] = d
            p = parity[c2] ^ val
            parity[c2] = p
            if d == 1:
                work.append(c2)
            elif d == 0 and p:
                raise InconsistentInput(f"check {c2} resolved with odd parity")
    out = np.asarray(value, dtype=np.int8)
    unresolved = np.flatnonzero(out == ERASURE)
    return PeelingResult(out, len(unresolved) > 0, unresolved)


def bec_bit_erasure_rate(spec: EnsembleSpec, epsilon: float, trials: int, seed) -> float:
    """Monte-Carlo fraction of bits left erased by peeling (all-zero codeword)."""
    return float(np.mean(residual_fractions(spec, epsilon, trials, seed)))


def residual_fractions(spec: EnsembleSpec, epsilon: float, trials: int, seed) -> np.ndarray:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ch = BEC(epsilon)
    out = np.empty(trials)
    for t in range(trials):
        graph_seed, chan_seed = trial_seeds(seed, t)
        g = sample_graph(spec, graph_seed)
        y = ch.transmit(np.zeros(spec.n, dtype=np.int8), chan_seed)
        out[t] = peel(g, y).residual_fraction
    return out


def trial_seeds(seed, trial: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Independent (graph, channel) streams for trial ``trial`` of a run seeded by ``seed``."""
    ss = np.random.SeedSequence([int(seed), int(trial)])
    g, c = ss.spawn(2)
    return g, c
