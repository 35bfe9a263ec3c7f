import numpy as np
import pytest

from ldpc_maxwell.channels import BEC, ERASURE
from ldpc_maxwell.degree import EnsembleSpec, regular
from ldpc_maxwell.density import bec_fixed_point
from ldpc_maxwell.exit_gexit import exit_of_x
from ldpc_maxwell.peeling import (
    InconsistentInput,
    bec_bit_erasure_rate,
    peel,
    residual_fractions,
)
from ldpc_maxwell.tanner import ParityCheckMatrix, random_codeword, sample_graph, to_parity_check

E = ERASURE


def rep2():
    return ParityCheckMatrix.from_dense([[1, 1]]).to_graph()


def test_no_erasures():
    r = peel(rep2(), [1, 1])
    assert r.assignment.tolist() == [1, 1] and not r.stuck


def test_repetition_recovers():
    r = peel(rep2(), [0, E])
    assert r.assignment.tolist() == [0, 0] and not r.stuck


def test_fully_erased_is_stuck():
    g = sample_graph(EnsembleSpec(*regular(3, 6), 30), 2)
    r = peel(g, [E] * 30)
    assert r.stuck and len(r.stopping_set) == 30


def test_inconsistent_input():
    with pytest.raises(InconsistentInput):
        peel(rep2(), [0, 1])
    H = ParityCheckMatrix.from_dense([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    with pytest.raises(InconsistentInput):
        peel(H.to_graph(), [0, E, 1])


def test_stopping_set_is_closed():
    g = sample_graph(EnsembleSpec(*regular(3, 6), 200), 4)
    y = BEC(0.5).transmit(np.zeros(200, dtype=np.int8), 5)
    r = peel(g, y)
    s = set(r.stopping_set.tolist())
    for c in range(g.n_chk):
        k = sum(v in s for v in g.chk_adj[c])
        assert k != 1


def test_order_confluence():
    g = sample_graph(EnsembleSpec(*regular(3, 6), 300), 11)
    for t in range(10):
        y = BEC(0.44).transmit(np.zeros(300, dtype=np.int8), t)
        base = peel(g, y).assignment
        for s in range(3):
            assert np.array_equal(peel(g, y, np.random.default_rng(s)).assignment, base)


def test_random_codeword_symmetry():
    # residual sizes do not depend on which codeword was sent
    g = sample_graph(EnsembleSpec(*regular(3, 6), 24), 1)
    H = to_parity_check(g)
    rng = np.random.default_rng(0)
    for t in range(50):
        x = random_codeword(H, rng).astype(np.int8)
        mask = np.random.default_rng(t).random(24) < 0.45
        y0 = np.where(mask, E, 0)
        y1 = np.where(mask, E, x)
        r0, r1 = peel(g, y0), peel(g, y1)
        assert np.array_equal(r0.stopping_set, r1.stopping_set)
        known = r1.assignment != E
        assert np.array_equal(r1.assignment[known], x[known])


def test_erasure_rate_examples():
    spec = EnsembleSpec(*regular(3, 6), 10_000)
    assert bec_bit_erasure_rate(spec, 0.0, 1, 0) == 0.0
    assert bec_bit_erasure_rate(spec, 0.40, 3, 0) < 1e-2


def test_erasure_rate_above_threshold_matches_fixed_point():
    lam, rho = regular(3, 6)
    x = bec_fixed_point(lam, rho, 0.47)
    predicted = 0.47 * exit_of_x(lam, rho, x)
    got = bec_bit_erasure_rate(EnsembleSpec(lam, rho, 10_000), 0.47, 3, 1)
    assert got == pytest.approx(predicted, abs=0.01)


def test_trials_validated():
    with pytest.raises(ValueError):
        residual_fractions(EnsembleSpec(*regular(3, 6), 10), 0.3, 0, 0)
