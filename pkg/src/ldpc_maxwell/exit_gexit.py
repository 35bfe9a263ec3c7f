"""EXIT and GEXIT curves, area integrals, the Maxwell construction and the DE bound on the ML threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .channels import BEC, BSC, ChannelModel, exit_kernel, h2_inverse
from .density import (
    DEFixedPoint,
    LLRGrid,
    NotConverged,
    bec_fixed_point,
    bec_it_threshold,
    de_bms,
    epsilon_of_x,
)
from .degree import DegreePolynomial, design_rate, node_perspective

STABLE = "stable"
UNSTABLE = "unstable"
QUAD_TOL = 1e-12


class MultiJump(ValueError):
    """eps(x) has more than one decreasing stretch; the single-jump construction does not apply."""


class PreconditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parametric EXIT curve on the BEC


def exit_of_x(lam: DegreePolynomial, rho: DegreePolynomial, x):
    """Lambda(1 - rho(1 - x)): the bit EXIT value at DE parameter x."""
    big = node_perspective(lam)
    return big(1.0 - rho(1.0 - np.asarray(x, dtype=float)))


def depsilon_dx(lam, rho, x):
    u = 1.0 - rho(1.0 - x)
    lu = lam(u)
    return (lu - x * lam.derivative(u) * rho.derivative(1.0 - x)) / lu**2


def exit_parametric(lam, rho, x: float, x_it: float | None = None) -> tuple[float, float, str]:
    """(eps, EXIT, branch) at x in (0, 1]; branch is stable iff x >= x_IT."""
    if not 0.0 < x <= 1.0:
        raise ValueError(f"x = {x} outside (0, 1]")
    if x_it is None:
        x_it = bec_it_threshold(lam, rho).x
    return float(epsilon_of_x(lam, rho, x)), float(exit_of_x(lam, rho, x)), STABLE if x >= x_it else UNSTABLE


@dataclass
class CurveTable:
    """Rows of (x, w, exit, gexit, branch); ``x`` is the DE parameter or native channel parameter."""

    x: list[float] = field(default_factory=list)
    w: list[float] = field(default_factory=list)
    exit: list[float] = field(default_factory=list)
    gexit: list[float] = field(default_factory=list)
    branch: list[str] = field(default_factory=list)
    converged: list[bool] = field(default_factory=list)

    columns = ("x", "w", "branch", "exit", "gexit", "converged")

    def append(self, x, w, exit_, gexit, branch=STABLE, converged=True):
        self.x.append(float(x))
        self.w.append(float(w))
        self.exit.append(float(exit_))
        self.gexit.append(float(gexit))
        self.branch.append(branch)
        self.converged.append(bool(converged))

    def __len__(self):
        return len(self.x)

    def sorted(self) -> "CurveTable":
        out = CurveTable()
        for i in sorted(range(len(self)), key=lambda i: self.x[i]):
            out.append(self.x[i], self.w[i], self.exit[i], self.gexit[i], self.branch[i], self.converged[i])
        return out

    def rows(self):
        for i in range(len(self)):
            yield (
                f"{self.x[i]:.10g}",
                f"{self.w[i]:.10g}",
                self.branch[i],
                f"{self.exit[i]:.12g}",
                f"{self.gexit[i]:.12g}",
                int(self.converged[i]),
            )


def exit_curve_table(lam, rho, points: int = 200) -> CurveTable:
    """BEC parametric curve over x in (0, 1], both branches, gexit = exit."""
    if points < 2:
        raise ValueError("need at least two points")
    x_it = bec_it_threshold(lam, rho).x
    xs = np.unique(np.concatenate([np.linspace(0.0, 1.0, points + 1)[1:], [x_it]] if x_it > 0 else [np.linspace(0.0, 1.0, points + 1)[1:]]))
    t = CurveTable()
    for x in xs:
        e, v, b = exit_parametric(lam, rho, float(x), x_it)
        t.append(x, e, v, v, b)
    return t


def _check_single_jump(lam, rho, x_it: float) -> None:
    if lam.derivative(0.0) > 0.0:
        raise PreconditionError("left degree 2 present: no Maxwell jump for this construction")
    if x_it <= 0.0:
        raise PreconditionError("eps(x) attains its minimum at x = 0: no jump")
    xs = np.linspace(0.0, 1.0, 4001)[1:]
    d = np.sign(np.diff(epsilon_of_x(lam, rho, xs)))
    changes = np.count_nonzero(np.diff(d[d != 0]))
    if changes > 1:
        raise MultiJump(f"eps(x) changes monotonicity {changes} times")


def stable_area(lam, rho, x_lo: float, x_hi: float = 1.0) -> float:
    """Integral of EXIT d(eps) along the curve between DE parameters x_lo and x_hi."""
    val, _ = quad(
        lambda t: exit_of_x(lam, rho, t) * depsilon_dx(lam, rho, t),
        x_lo,
        x_hi,
        epsabs=QUAD_TOL,
        epsrel=QUAD_TOL,
        limit=200,
    )
    return float(val)


def unstable_area(lam, rho, x_it: float | None = None) -> float:
    """Area between the unstable branch and the eps axis, from eps_IT to infinity."""
    if x_it is None:
        x_it = bec_it_threshold(lam, rho).x
    return -stable_area(lam, rho, 0.0, x_it)


@dataclass(frozen=True)
class MLThreshold:
    epsilon: float
    x: float
    epsilon_it: float
    x_it: float
    rate: float
    unstable_area: float
    balance_epsilon: float  # same threshold from the guess/resolution balance


def ml_threshold_bec(lam, rho, tol: float = 1e-10) -> MLThreshold:
    """Largest eps whose stable-branch area above it equals the design rate."""
    rate = design_rate(lam, rho)
    it = bec_it_threshold(lam, rho)
    _check_single_jump(lam, rho, it.x)
    top = stable_area(lam, rho, it.x)
    if top < rate:
        raise PreconditionError("area above eps_IT is below the rate: no Maxwell jump")
    x_ml = brentq(lambda x: stable_area(lam, rho, x) - rate, it.x, 1.0, xtol=tol, rtol=1e-15)
    u = unstable_area(lam, rho, it.x)
    x_bal = brentq(lambda x: stable_area(lam, rho, it.x, x) - u, it.x, 1.0, xtol=tol, rtol=1e-15)
    return MLThreshold(
        float(epsilon_of_x(lam, rho, x_ml)),
        float(x_ml),
        it.epsilon,
        it.x,
        rate,
        u,
        float(epsilon_of_x(lam, rho, x_bal)),
    )


def stable_x(lam, rho, eps: float, x_it: float) -> float:
    """Invert eps(x) on the stable branch."""
    if eps >= 1.0:
        return 1.0
    return brentq(lambda x: epsilon_of_x(lam, rho, x) - eps, x_it, 1.0, xtol=1e-15, rtol=1e-15)


def ml_exit_area(lam, rho, ml: MLThreshold | None = None) -> float:
    """Integral over eps in [0, 1] of the ML EXIT curve, integrating in eps directly."""
    ml = ml or ml_threshold_bec(lam, rho)
    val, _ = quad(
        lambda e: exit_of_x(lam, rho, stable_x(lam, rho, e, ml.x_it)),
        ml.epsilon,
        1.0,
        epsabs=QUAD_TOL,
        epsrel=QUAD_TOL,
        limit=200,
    )
    return float(val)


@dataclass(frozen=True)
class MaxwellAreas:
    guess_area: float
    resolution_area: float
    unstable_area: float

    @property
    def h_final(self) -> float:
        return self.guess_area - self.resolution_area


def maxwell_area_predictions(lam, rho, eps: float) -> MaxwellAreas:
    """Asymptotic guesses/n and resolutions/n of the Maxwell decoder at erasure probability eps.

    Guesses fill the stable-branch area from eps_IT to eps.  Resolutions
    cannot exceed guesses and are capped by the unstable-branch area, so
    the two coincide up to eps_ML and part ways above it.
    """
    it = bec_it_threshold(lam, rho)
    if eps < it.epsilon - 1e-12:
        raise ValueError(f"eps = {eps} below eps_IT = {it.epsilon:.6f}")
    if it.x <= 0.0:
        return MaxwellAreas(0.0, 0.0, 0.0)
    x = stable_x(lam, rho, max(eps, it.epsilon), it.x)
    g = stable_area(lam, rho, it.x, x)
    u = unstable_area(lam, rho, it.x)
    return MaxwellAreas(g, min(g, u), u)


# ---------------------------------------------------------------------------
# GEXIT kernels and functionals

DOMAINS = ("L", "D", "|L|", "|D|")


@dataclass(frozen=True)
class GexitKernel:
    channel: ChannelModel | None  # None selects the channel-independent EXIT kernel
    domain: str = "L"

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown kernel domain {self.domain!r}")

    def base(self, l):
        if self.channel is None:
            return exit_kernel(l)
        return self.channel.gexit_kernel(l)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.domain in ("D", "|D|"):
            if np.any(np.abs(t) > 1.0):
                raise ValueError("difference-domain argument outside [-1, 1]")
            with np.errstate(divide="ignore"):
                t = 2.0 * np.arctanh(t)
        if self.domain in ("|L|", "|D|"):
            if np.any(t < 0):
                raise ValueError("absolute-domain argument must be nonnegative")
            return fold(self.base, t)
        return self.base(t)


def fold(kernel, l):
    """k(l) + e^{-l} k(-l): integrating a symmetric density against this over l >= 0 matches the full-line integral."""
    l = np.asarray(l, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        tail = np.where(np.isposinf(l), 0.0, np.exp(-l) * kernel(-l))
    out = kernel(l) + tail
    return out if np.ndim(out) else float(out)


def gexit_kernel_L(ch: ChannelModel, l):
    return ch.gexit_kernel(l)


def kernel_transform(k: GexitKernel, domain: str) -> GexitKernel:
    if k.domain != "L":
        raise ValueError("transforms start from the L domain")
    return GexitKernel(k.channel, domain)


def _integrate(kernel, density) -> float:
    vals, masses = density.atoms()
    keep = masses != 0.0
    return float(np.sum(masses[keep] * kernel(vals[keep])))


def gexit_functional(density, ch: ChannelModel) -> float:
    """Integral of the density against the channel's GEXIT kernel, in bits."""
    return _integrate(ch.gexit_kernel, density)


def exit_functional(density) -> float:
    return _integrate(exit_kernel, density)


def gexit_functional_abs(density, ch: ChannelModel) -> float:
    """Same value computed on |L| with the folded kernel (a symmetric density is assumed)."""
    vals, masses = density.atoms()
    pos = (vals > 0) & (masses != 0.0)
    zero = (vals == 0) & (masses != 0.0)
    # the folded kernel accounts for the mirrored negative mass
    return float(np.sum(masses[pos] * fold(ch.gexit_kernel, vals[pos])) + np.sum(masses[zero]) * ch.gexit_kernel(0.0))


# ---------------------------------------------------------------------------
# DE sweeps and the upper bound on the ML threshold


@dataclass
class SweepPoint:
    w: float
    channel: ChannelModel
    gexit: float
    exit: float
    converged: bool
    fixed_point: DEFixedPoint | None = None


class DESweep:
    """Evaluates GEXIT/EXIT of the DE fixed point, warm-starting from the last noisier point.

    Warm starts are only used moving toward less noise: the fixed point at
    a noisier channel is degraded with respect to the target one and
    upgraded with respect to the all-erasure start, so DE still converges
    to the same limit.
    """

    def __init__(self, lam, rho, family: str = "bsc", grid: LLRGrid | None = None, tol: float = 1e-8, max_iter: int = 2000):
        self.lam, self.rho, self.family = lam, rho, family
        self.grid = grid or LLRGrid(30.0, 1201)
        self.tol, self.max_iter = tol, max_iter
        self._warm: tuple[float, object] | None = None

    def channel(self, w: float) -> ChannelModel:
        if self.family == "bsc":
            return BSC(h2_inverse(w))
        if self.family == "bec":
            return BEC(w)
        raise ValueError(f"DE sweeps support bec and bsc, not {self.family!r}")

    def evaluate(self, w: float, strict: bool = False) -> SweepPoint:
        ch = self.channel(w)
        init = None
        if self._warm is not None and self._warm[0] >= w:
            init = self._warm[1]
        fp = de_bms(self.lam, self.rho, ch, self.grid, self.tol, self.max_iter, init=init, raise_on_fail=False)
        ok = fp.residual < self.tol
        if strict and not ok:
            raise NotConverged(f"DE at w = {w:.6g} stopped with residual {fp.residual:.3g}", fp.density, fp.residual)
        if self._warm is None or w <= self._warm[0]:
            self._warm = (w, fp.density)
        return SweepPoint(w, ch, gexit_functional(fp.extrinsic, ch), exit_functional(fp.extrinsic), ok, fp)


@dataclass
class BoundResult:
    w: float
    parameter: float
    rate: float
    table: list[tuple[float, float]]  # (w, gexit) in evaluation order
    points: list[SweepPoint] = field(default_factory=list)


def area_crossing(f, rate: float, points: int = 200, tol: float = 1e-4, w_min: float = 0.0) -> BoundResult:
    """Integrate f(w) from w = 1 downward (trapezoid) and find where the area reaches ``rate``.

    The crossing interval is refined by bisection in w; each probe extends
    the trapezoid from the last grid point to the probe.
    """
    if points < 2:
        raise ValueError("need at least two grid points")
    ws = np.linspace(1.0, w_min, points + 1)
    table = []
    prev_w, prev_f = 1.0, f(1.0)
    table.append((prev_w, prev_f))
    area = 0.0
    if rate <= 0.0:
        return BoundResult(1.0, 1.0, rate, table)
    for w in ws[1:]:
        fw = f(float(w))
        table.append((float(w), fw))
        step = 0.5 * (prev_f + fw) * (prev_w - w)
        if area + step >= rate:
            lo, hi = float(w), prev_w  # crossing inside [lo, hi]
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                fm = f(mid)
                table.append((mid, fm))
                if area + 0.5 * (prev_f + fm) * (prev_w - mid) >= rate:
                    lo = mid
                else:
                    hi = mid
            wc = 0.5 * (lo + hi)
            return BoundResult(wc, wc, rate, table)
        area += step
        prev_w, prev_f = float(w), fw
    raise ValueError("area never reaches the rate over the swept range")


def pml_de_bound(
    lam,
    rho,
    grid: LLRGrid | None = None,
    points: int = 200,
    tol: float = 1e-4,
    max_iter: int = 2000,
) -> BoundResult:
    """Upper bound on the BSC ML threshold from GEXIT of the DE fixed point; ``parameter`` is p."""
    rate = design_rate(lam, rho)
    sweep = DESweep(lam, rho, "bsc", grid, max_iter=max_iter)
    seen: list[SweepPoint] = []

    def f(w):
        pt = sweep.evaluate(w, strict=True)
        pt.fixed_point = None
        seen.append(pt)
        return pt.gexit

    res = area_crossing(f, rate, points, tol)
    res.parameter = h2_inverse(res.w)
    res.points = seen
    return res


def pml_de_bound_bec(lam, rho, points: int = 2000, tol: float = 1e-6) -> BoundResult:
    """The same construction on the BEC with scalar DE; lands on eps_ML."""
    rate = design_rate(lam, rho)

    def f(eps):
        return float(exit_of_x(lam, rho, bec_fixed_point(lam, rho, eps)))

    return area_crossing(f, rate, points, tol)


def gexit_exit_sweep(
    lam,
    rho,
    family: str = "bsc",
    points: int = 200,
    grid: LLRGrid | None = None,
    w_min: float = 0.02,
    max_iter: int = 2000,
) -> CurveTable:
    """EXIT and GEXIT of the DE fixed-point extrinsic density over a w grid (noisy to clean)."""
    if points < 1:
        raise ValueError("empty grid")
    sweep = DESweep(lam, rho, family, grid, max_iter=max_iter)
    t = CurveTable()
    for w in np.linspace(1.0, w_min, points):
        pt = sweep.evaluate(float(w))
        native = pt.channel.p if family == "bsc" else pt.channel.epsilon
        t.append(native, w, pt.exit, pt.gexit, STABLE, pt.converged)
    return t.sorted()


def kernel_table(ch: ChannelModel, ls) -> list[tuple[float, float, float, float, float]]:
    """Rows (l, k_L, k_D, k_|L|, k_|D|) with z = tanh(l/2) for the D columns."""
    k = GexitKernel(ch, "L")
    rows = []
    for l in ls:
        l = float(l)
        z = math.tanh(l / 2.0)
        kd = kernel_transform(k, "D")(z)
        kal = kernel_transform(k, "|L|")(abs(l))
        kad = kernel_transform(k, "|D|")(abs(z))
        rows.append((l, float(k(l)), float(kd), float(kal), float(kad)))
    return rows
