import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ldpc_maxwell.degree import (
    DegreePolynomial,
    EnsembleSpec,
    design_rate,
    edge_perspective,
    largest_remainder,
    node_perspective,
    parse_ensemble,
    parse_polynomial,
    regular,
)


def poly(text):
    return DegreePolynomial.parse(text)


def test_eval_examples():
    assert poly("x^2")(0.5) == 0.25
    assert poly("x^5")(0.8) == pytest.approx(0.32768, abs=1e-15)
    assert poly("0.3x + 0.7x^4")(1.0) == pytest.approx(1.0, abs=1e-15)


def test_eval_domain():
    with pytest.raises(ValueError):
        poly("x^2")(1.5)
    with pytest.raises(ValueError):
        poly("x^2")(-0.1)


def test_node_perspective_examples():
    assert node_perspective(poly("x^2")).coeffs == (0.0, 0.0, 0.0, 1.0)
    assert node_perspective(poly("x")).coeffs == (0.0, 0.0, 1.0)
    big = node_perspective(poly("0.5x + 0.5x^3"))
    # hand computation: (1/4, 1/8) normalised by 3/8
    assert big.coeffs[2] == pytest.approx(2 / 3, abs=1e-15)
    assert big.coeffs[4] == pytest.approx(1 / 3, abs=1e-15)


def test_design_rate_examples():
    assert design_rate(poly("x^2"), poly("x^5")) == pytest.approx(0.5, abs=1e-15)
    assert design_rate(poly("x^2"), poly("x^3")) == pytest.approx(0.25, abs=1e-15)
    assert design_rate(poly("x^3"), poly("x^7")) == pytest.approx(0.5, abs=1e-15)


def test_design_rate_nonpositive():
    with pytest.raises(ValueError):
        design_rate(poly("x"), poly("x"))
    with pytest.raises(ValueError):
        design_rate(poly("x^5"), poly("x^2"))


def test_validation():
    with pytest.raises(ValueError):
        DegreePolynomial((0.5, 0.4))
    with pytest.raises(ValueError):
        DegreePolynomial((1.2, -0.2))
    with pytest.raises(ValueError):
        DegreePolynomial.monomial(80)


def test_parse_polynomial_forms():
    assert parse_polynomial("0.5 x^2 + 0.5 x^4") == [0, 0, 0.5, 0, 0.5]
    assert parse_polynomial("x") == [0, 1]
    assert parse_polynomial("1/3x^2+2/3x^3") == pytest.approx([0, 0, 1 / 3, 2 / 3])
    with pytest.raises(ValueError):
        parse_polynomial("x^2 x^3")
    with pytest.raises(ValueError):
        parse_polynomial("")


def test_parse_ensemble():
    lam, rho = parse_ensemble("(x^2,x^5)")
    assert (lam, rho) == regular(3, 6)
    assert parse_ensemble("3,6") == regular(3, 6)
    with pytest.raises(ValueError):
        parse_ensemble("(x^2)")
    with pytest.raises(ValueError):
        parse_ensemble("(x^2, 1)")


@st.composite
def edge_polys(draw):
    k = draw(st.integers(1, 8))
    w = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k)))
    degs = draw(st.lists(st.integers(1, 12), min_size=k, max_size=k, unique=True))
    w = w / w.sum()
    c = [0.0] * max(degs)
    for d, v in zip(degs, w):
        c[d - 1] = float(v)
    c[degs[0] - 1] += 1.0 - sum(c)
    return DegreePolynomial(tuple(c))


@given(edge_polys())
def test_perspective_round_trip(lam):
    back = edge_perspective(node_perspective(lam))
    assert np.allclose(back.coeffs, lam.coeffs, atol=1e-12)


@given(edge_polys(), st.floats(0, 1), st.floats(0, 1))
def test_eval_monotone(p, a, b):
    lo, hi = min(a, b), max(a, b)
    assert p(lo) <= p(hi) + 1e-15
    assert 0.0 <= p(lo) <= 1.0 + 1e-15


@given(st.integers(2, 9), st.integers(3, 20))
def test_regular_rate(dl, dr):
    if dl >= dr:
        return
    lam, rho = regular(dl, dr)
    assert design_rate(lam, rho) == pytest.approx(1 - dl / dr, abs=1e-14)


def test_largest_remainder_preserves_total():
    counts = largest_remainder({2: 1 / 3, 3: 1 / 3, 4: 1 / 3}, 10)
    assert sum(counts.values()) == 10
    assert sorted(counts.values()) == [3, 3, 4]


def test_ensemble_counts_match_edges():
    spec = EnsembleSpec(poly("0.5x + 0.5x^3"), poly("x^5"), 101)
    v = spec.variable_counts()
    assert sum(v.values()) == 101
    edges = sum(d * c for d, c in v.items())
    chk = spec.check_counts(edges)
    assert sum(d * c for d, c in chk.items()) == edges


def test_ensemble_rejects_degree_one_checks():
    with pytest.raises(ValueError):
        EnsembleSpec(poly("x^2"), DegreePolynomial((1.0,)), 10)
    assert math.isclose(EnsembleSpec(*regular(3, 6), 10).rate, 0.5)
