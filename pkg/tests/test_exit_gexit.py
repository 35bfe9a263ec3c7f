import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ldpc_maxwell.channels import BEC, BSC, BiAWGN, exit_kernel, h2
from ldpc_maxwell.degree import DegreePolynomial, regular
from ldpc_maxwell.density import (
    AtomicDensity,
    LLRDensity,
    LLRGrid,
    bec_fixed_point,
    bec_it_threshold,
    boxplus_atoms,
    de_bms,
    extrinsic_density,
)
from ldpc_maxwell.exit_gexit import (
    STABLE,
    UNSTABLE,
    GexitKernel,
    PreconditionError,
    area_crossing,
    exit_curve_table,
    exit_functional,
    exit_of_x,
    exit_parametric,
    fold,
    gexit_exit_sweep,
    gexit_functional,
    gexit_functional_abs,
    gexit_kernel_L,
    kernel_table,
    kernel_transform,
    maxwell_area_predictions,
    ml_exit_area,
    ml_threshold_bec,
    pml_de_bound,
    pml_de_bound_bec,
    stable_x,
)
from ldpc_maxwell.oracle import gexit_i_fd, repetition_code

ENSEMBLES = [(3, 6), (3, 4), (4, 8)]


# -- parametric curve ---------------------------------------------------------


def test_parametric_endpoint(r36):
    eps, val, branch = exit_parametric(*r36, 1.0)
    assert eps == pytest.approx(1.0)
    assert val == pytest.approx(1.0)
    assert branch == STABLE


def test_parametric_at_it_point(r36):
    it = bec_it_threshold(*r36)
    eps, _, branch = exit_parametric(*r36, it.x)
    assert eps == pytest.approx(0.4294, abs=1e-4)
    assert branch == STABLE


def test_parametric_rejects_zero(r36):
    with pytest.raises(ValueError):
        exit_parametric(*r36, 0.0)


def test_unstable_branch_shape(r36):
    t = exit_curve_table(*r36, 400)
    rows = [(x, e) for x, e, b in zip(t.x, t.w, t.branch) if b == UNSTABLE]
    assert rows
    xs, es = np.array(rows).T
    # erased fraction falls while the erasure probability grows
    assert np.all(np.diff(es) < 0)
    assert np.all(es > bec_it_threshold(*r36).epsilon)
    # any fixed point has x = eps * lam(.) <= eps
    assert np.all(xs <= es)


def test_curve_table_sorted_and_tagged(r36):
    t = exit_curve_table(*r36, 100)
    assert t.x == sorted(t.x)
    assert t.exit == t.gexit
    it = bec_it_threshold(*r36)
    assert all((b == STABLE) == (x >= it.x) for x, b in zip(t.x, t.branch))


# -- ML threshold and areas ---------------------------------------------------


def test_ml_threshold_36(r36):
    ml = ml_threshold_bec(*r36)
    assert ml.epsilon == pytest.approx(0.48815, abs=1e-4)
    assert ml.balance_epsilon == pytest.approx(ml.epsilon, abs=1e-8)
    assert ml.epsilon_it < ml.epsilon


@pytest.mark.parametrize("dl,dr", ENSEMBLES)
def test_area_theorem(dl, dr):
    lam, rho = regular(dl, dr)
    ml = ml_threshold_bec(lam, rho)
    assert ml_exit_area(lam, rho, ml) == pytest.approx(1 - dl / dr, abs=1e-6)


def test_ml_threshold_by_eps_domain_bisection(r36):
    # bisection on the directly integrated area, independent of the x-substitution
    it = bec_it_threshold(*r36)

    def area(e0):
        return quad(lambda e: exit_of_x(*r36, stable_x(*r36, e, it.x)), e0, 1.0, epsabs=1e-11)[0]

    lo, hi = it.epsilon, 0.99
    while hi - lo > 1e-8:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if area(mid) > 0.5 else (lo, mid)
    assert ml_threshold_bec(*r36).epsilon == pytest.approx(lo, abs=1e-6)


def test_degree_two_rejected():
    lam, rho = regular(2, 4)
    with pytest.raises(PreconditionError):
        ml_threshold_bec(lam, rho)


def test_area_predictions_at_thresholds(r36):
    ml = ml_threshold_bec(*r36)
    at_it = maxwell_area_predictions(*r36, ml.epsilon_it)
    assert at_it.guess_area == pytest.approx(0.0, abs=1e-8)
    at_ml = maxwell_area_predictions(*r36, ml.epsilon)
    assert at_ml.guess_area == pytest.approx(at_ml.resolution_area, abs=1e-8)
    assert at_ml.guess_area == pytest.approx(ml.unstable_area, abs=1e-7)


def test_area_predictions_at_047(r36):
    it = bec_it_threshold(*r36)
    ref = quad(lambda e: exit_of_x(*r36, stable_x(*r36, e, it.x)), it.epsilon, 0.47, epsabs=1e-12)[0]
    a = maxwell_area_predictions(*r36, 0.47)
    assert a.guess_area == pytest.approx(ref, abs=1e-8)
    assert a.h_final == 0.0


def test_area_predictions_below_it(r36):
    with pytest.raises(ValueError):
        maxwell_area_predictions(*r36, 0.40)


def test_above_ml_guesses_exceed_resolutions(r36):
    a = maxwell_area_predictions(*r36, 0.52)
    assert a.h_final > 0
    assert a.resolution_area == pytest.approx(a.unstable_area)


# -- kernels ------------------------------------------------------------------


def test_bec_kernel_values():
    assert gexit_kernel_L(BEC(0.3), 0.0) == pytest.approx(1.0)
    assert gexit_kernel_L(BEC(0.3), math.inf) == 0.0


def test_bec_kernel_is_exit_kernel():
    ls = GRID_L = np.linspace(-20, 20, 801)
    assert np.array_equal(gexit_kernel_L(BEC(0.4), ls), exit_kernel(GRID_L))


@pytest.mark.parametrize("p,q", [(0.11, 0.2), (0.05, 0.3), (0.2, 0.01)])
def test_bsc_kernel_matches_entropy_derivative(p, q):
    # bit 0 sees BSC(p); its extrinsic view is the repetition partner over BSC(q)
    lq = math.log((1 - q) / q)
    a = AtomicDensity([lq, -lq], [1 - q, q])
    fd = gexit_i_fd(repetition_code(2), BSC(p), 0, ws=[h2(p), h2(q)])
    assert gexit_functional(a, BSC(p)) == pytest.approx(fd, abs=1e-7)


@pytest.mark.parametrize("ch", [BEC(0.3), BSC(0.11), BiAWGN(1.0)])
def test_kernel_domains_agree(ch):
    k = GexitKernel(ch, "L")
    assert kernel_transform(k, "D")(0.0) == pytest.approx(k(0.0))
    assert kernel_transform(k, "D")(1.0) == pytest.approx(0.0, abs=1e-12)
    ls = np.linspace(0.0, 25.0, 101)
    for row in kernel_table(ch, ls):
        assert min(row[1:]) >= 0.0
        assert row[2] == pytest.approx(row[1], rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("ch", [BSC(0.02), BSC(0.11), BSC(0.4), BEC(0.5), BiAWGN(0.5)])
def test_kernel_strictly_decreasing(ch):
    vals = gexit_kernel_L(ch, np.linspace(-30, 30, 601))
    assert np.all(np.diff(vals) < 0)


def test_transform_requires_l_domain():
    with pytest.raises(ValueError):
        kernel_transform(GexitKernel(BSC(0.1), "D"), "|L|")
    with pytest.raises(ValueError):
        GexitKernel(BSC(0.1), "Z")


@st.composite
def symmetric_atoms(draw):
    k = draw(st.integers(1, 6))
    mags = draw(st.lists(st.floats(0.01, 30.0), min_size=k, max_size=k))
    ws = draw(st.lists(st.floats(0.01, 1.0), min_size=k, max_size=k))
    er = draw(st.floats(0.0, 0.5))
    pf = draw(st.floats(0.0, 0.5))
    return AtomicDensity.symmetric(mags, ws, er, pf)


@given(symmetric_atoms(), st.floats(0.001, 0.5))
@settings(max_examples=100)
def test_fold_identity(a, p):
    for ch in (BSC(p), BEC(p)):
        assert gexit_functional_abs(a, ch) == pytest.approx(gexit_functional(a, ch), abs=1e-12)


def test_fold_at_infinity_is_finite():
    assert fold(exit_kernel, math.inf) == 0.0


# -- functionals --------------------------------------------------------------


def test_functional_of_perfect_density():
    a = AtomicDensity([math.inf], [1.0])
    assert gexit_functional(a, BSC(0.1)) == 0.0
    assert exit_functional(a) == 0.0


def test_functional_of_erasure_density():
    a = AtomicDensity([0.0], [1.0])
    assert gexit_functional(a, BEC(0.4)) == pytest.approx(1.0)


@pytest.mark.parametrize("eps", [0.45, 0.5, 0.7])
def test_bec_extrinsic_gexit_matches_parametric(r36, eps):
    grid = LLRGrid(20.0, 201)
    fp = de_bms(*r36, BEC(eps), grid, tol=1e-13, max_iter=10000)
    x = bec_fixed_point(*r36, eps)
    expect = float(exit_of_x(*r36, x))
    assert gexit_functional(fp.extrinsic, BEC(eps)) == pytest.approx(expect, abs=1e-6)
    assert exit_functional(fp.extrinsic) == pytest.approx(expect, abs=1e-6)


def test_gexit_nonincreasing_in_iterations(r36):
    lam, rho = r36
    ch = BSC(0.095)
    values = []
    de_bms(lam, rho, ch, LLRGrid(30.0, 401), max_iter=40, raise_on_fail=False,
           on_iteration=lambda k, v, c: values.append(gexit_functional(extrinsic_density(lam, c).normalized(), ch)))
    assert np.all(np.diff(values) <= 1e-9)


@st.composite
def degradation_pairs(draw):
    a = draw(symmetric_atoms())
    if draw(st.booleans()):
        d = draw(st.floats(1e-4, 0.5))
        ld = math.log((1 - d) / d)
        deg = AtomicDensity([ld, -ld], [1 - d, d])
    else:
        e = draw(st.floats(1e-4, 1.0))
        deg = AtomicDensity([0.0, math.inf], [e, 1 - e])
    return a, boxplus_atoms(a, deg)


@given(degradation_pairs(), st.floats(1e-3, 0.5))
@settings(max_examples=100)
def test_degradation_raises_gexit(pair, p):
    a, b = pair
    assert gexit_functional(b, BSC(p)) >= gexit_functional(a, BSC(p)) - 1e-9


# -- bounds -------------------------------------------------------------------


def test_bec_bound_lands_on_ml_threshold(r36):
    res = pml_de_bound_bec(*r36)
    assert res.w == pytest.approx(ml_threshold_bec(*r36).epsilon, abs=1e-4)


def test_zero_rate_limit():
    assert area_crossing(lambda w: 1.0, 0.0).w == 1.0
    lam = DegreePolynomial.parse("x^2")
    rho = DegreePolynomial.parse("0.99x^2 + 0.01x^3")
    res = pml_de_bound(lam, rho, LLRGrid(20.0, 201), points=50, tol=1e-5)
    assert res.w > 0.99
    assert res.parameter > 0.44


def test_area_crossing_linear():
    res = area_crossing(lambda w: 1.0, 0.25, points=20, tol=1e-9)
    assert res.w == pytest.approx(0.75, abs=1e-8)
    with pytest.raises(ValueError):
        area_crossing(lambda w: 0.0, 0.25, points=5)


def test_sweep_bec_columns_identical(r36):
    t = gexit_exit_sweep(*r36, "bec", points=6, grid=LLRGrid(20.0, 201))
    assert np.allclose(t.exit, t.gexit, atol=1e-12)


def test_sweep_bsc_monotone_and_distinct(r36):
    coarse = gexit_exit_sweep(*r36, "bsc", points=8, grid=LLRGrid(30.0, 301), w_min=0.3)
    fine = gexit_exit_sweep(*r36, "bsc", points=8, grid=LLRGrid(30.0, 601), w_min=0.3)
    for col in ("gexit", "exit"):
        c, f = np.array(getattr(coarse, col)), np.array(getattr(fine, col))
        # near p = 1/2 the quantization error is only first order in the bin
        # width, so the coarse-fine gap bounds the fine grid's error
        err = np.abs(c - f)
        assert np.all(np.diff(f) >= -(err[1:] + err[:-1]) - 1e-9)
    gap = np.abs(np.array(fine.gexit) - np.array(fine.exit))
    assert gap.max() > 1e-3


def test_sweep_rejects_empty(r36):
    with pytest.raises(ValueError):
        gexit_exit_sweep(*r36, "bsc", points=0)
