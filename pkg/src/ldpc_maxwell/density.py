"""Density evolution: scalar recursion on the BEC and quantized LLR densities for BMS channels.

LLRs are natural-log likelihood ratios throughout this module; entropies
in bits only appear at the GEXIT boundary.
"""

from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .channels import ChannelModel
from .degree import DegreePolynomial, design_rate, node_perspective

# ---------------------------------------------------------------------------
# scalar BEC recursion


def epsilon_of_x(lam: DegreePolynomial, rho: DegreePolynomial, x):
    """Channel erasure probability for which ``x`` is a fixed point."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x / lam(1.0 - rho(1.0 - x))
    small = x == 0.0
    if np.any(small):
        out = np.where(small, _epsilon_at_zero(lam, rho), out)
    return out if out.ndim else float(out)


def _epsilon_at_zero(lam, rho) -> float:
    slope = lam.derivative(0.0) * rho.derivative(1.0)
    return 1.0 / slope if slope > 0 else math.inf


def bec_fixed_point(lam, rho, epsilon: float, tol: float = 1e-14, max_iter: int = 10**7) -> float:
    """Iterate x <- eps * lam(1 - rho(1 - x)) from x = eps."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"erasure probability {epsilon} outside [0, 1]")
    x = epsilon
    for _ in range(max_iter):
        nx = epsilon * lam(1.0 - rho(1.0 - x))
        if abs(nx - x) < tol:
            return nx
        x = nx
    return x


@dataclass(frozen=True)
class ITThreshold:
    epsilon: float
    x: float


def bec_it_threshold(lam, rho, tol: float = 1e-9, grid: int = 4000) -> ITThreshold:
    """Minimum of eps(x) over (0, 1]: grid bracketing then golden-section search."""
    design_rate(lam, rho)
    xs = np.linspace(0.0, 1.0, grid + 1)
    vals = epsilon_of_x(lam, rho, np.maximum(xs, 1e-300))
    vals[0] = _epsilon_at_zero(lam, rho)
    k = int(np.argmin(vals))
    if k == 0:
        return ITThreshold(float(vals[0]), 0.0)
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid)]
    x = golden_section(lambda t: epsilon_of_x(lam, rho, t), a, b, tol)
    e = epsilon_of_x(lam, rho, x)
    if vals[0] <= e:
        return ITThreshold(float(vals[0]), 0.0)
    return ITThreshold(float(e), float(x))


def golden_section(f, a: float, b: float, tol: float) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# quantized LLR densities


class NotConverged(RuntimeError):
    def __init__(self, message: str, density: "LLRDensity", residual: float):
        super().__init__(message)
        self.density = density
        self.residual = residual


@dataclass(frozen=True)
class LLRGrid:
    l_max: float = 30.0
    bins: int = 4001

    def __post_init__(self):
        if self.bins < 3 or self.bins % 2 == 0:
            raise ValueError("bins must be odd and >= 3 so that l = 0 is a bin centre")
        if self.l_max <= 0:
            raise ValueError("l_max must be positive")

    @property
    def half(self) -> int:
        return (self.bins - 1) // 2

    @property
    def delta(self) -> float:
        return self.l_max / self.half

    @functools.cached_property
    def centers(self) -> np.ndarray:
        return (np.arange(self.bins) - self.half) * self.delta


@dataclass(eq=False)
class LLRDensity:
    """Probability masses on a uniform LLR grid plus atoms at +/- infinity."""

    grid: LLRGrid
    masses: np.ndarray
    pinf: float = 0.0
    ninf: float = 0.0

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.shape != (self.grid.bins,):
            raise ValueError("mass vector does not match the grid")

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_atoms(cls, grid: LLRGrid, atoms) -> "LLRDensity":
        """Deposit (value, mass) atoms, splitting finite ones between adjacent bins."""
        m = np.zeros(grid.bins)
        pinf = ninf = 0.0
        for v, w in atoms:
            if w == 0.0:
                continue
            if v == math.inf or v >= grid.l_max + grid.delta:
                pinf += w
            elif v == -math.inf or v <= -grid.l_max - grid.delta:
                ninf += w
            else:
                _deposit(m, np.array([v]), np.array([w]), grid, clip=True)
        return cls(grid, m, pinf, ninf)

    @classmethod
    def point_mass(cls, grid: LLRGrid, value: float) -> "LLRDensity":
        return cls.from_atoms(grid, [(value, 1.0)])

    @classmethod
    def channel(cls, grid: LLRGrid, ch: ChannelModel) -> "LLRDensity":
        return cls.from_atoms(grid, ch.llr_atoms())

    def copy(self) -> "LLRDensity":
        return LLRDensity(self.grid, self.masses.copy(), self.pinf, self.ninf)

    # -- functionals -------------------------------------------------------
    def total(self) -> float:
        return float(self.masses.sum() + self.pinf + self.ninf)

    def normalized(self) -> "LLRDensity":
        t = self.total()
        return LLRDensity(self.grid, self.masses / t, self.pinf / t, self.ninf / t)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        vals = np.concatenate([self.grid.centers, [math.inf, -math.inf]])
        return vals, np.concatenate([self.masses, [self.pinf, self.ninf]])

    def error_probability(self) -> float:
        k = self.grid.half
        return float(self.masses[:k].sum() + 0.5 * self.masses[k] + self.ninf)

    def symmetry_defect(self) -> float:
        """sum over l > 0 of |a(-l) - e^{-l} a(l)|, plus the -inf atom."""
        k = self.grid.half
        pos = self.masses[k + 1 :]
        neg = self.masses[:k][::-1]
        return float(np.abs(neg - np.exp(-self.grid.centers[k + 1 :]) * pos).sum() + self.ninf)

    def l1_distance(self, other: "LLRDensity") -> float:
        return float(
            np.abs(self.masses - other.masses).sum()
            + abs(self.pinf - other.pinf)
            + abs(self.ninf - other.ninf)
        )

    def magnitudes(self) -> tuple[np.ndarray, np.ndarray]:
        """Split into (positive, negative) mass by magnitude index 0..half+1.

        Index 0 holds the l = 0 bin (sign irrelevant) and index half + 1 the
        infinite atoms.
        """
        k = self.grid.half
        pos = np.empty(k + 2)
        neg = np.zeros(k + 2)
        pos[: k + 1] = self.masses[k:]
        neg[1 : k + 1] = self.masses[:k][::-1]
        pos[k + 1] = self.pinf
        neg[k + 1] = self.ninf
        return pos, neg

    @classmethod
    def from_magnitudes(cls, grid: LLRGrid, pos: np.ndarray, neg: np.ndarray) -> "LLRDensity":
        k = grid.half
        m = np.empty(grid.bins)
        m[k:] = pos[: k + 1]
        m[k] += neg[0]
        m[:k] = neg[1 : k + 1][::-1]
        return cls(grid, m, float(pos[k + 1]), float(neg[k + 1]))

    # -- binary grid file --------------------------------------------------
    _MAGIC = b"LLRD0001"

    def save(self, path) -> None:
        head = self._MAGIC + struct.pack("<dq", self.grid.l_max, self.grid.bins)
        body = np.concatenate([self.masses, [self.pinf, self.ninf]]).astype("<f8").tobytes()
        Path(path).write_bytes(head + body)

    @classmethod
    def load(cls, path) -> "LLRDensity":
        raw = Path(path).read_bytes()
        if raw[:8] != cls._MAGIC:
            raise ValueError("not an LLR density file")
        l_max, bins = struct.unpack("<dq", raw[8:24])
        vals = np.frombuffer(raw[24:], dtype="<f8")
        if len(vals) != bins + 2:
            raise ValueError("truncated LLR density file")
        return cls(LLRGrid(l_max, bins), vals[:bins].copy(), float(vals[bins]), float(vals[bins + 1]))


def _deposit(m: np.ndarray, values: np.ndarray, weights: np.ndarray, grid: LLRGrid, clip=False):
    """Linear (mean-preserving) split of point masses onto grid bins."""
    pos = values / grid.delta + grid.half
    if clip:
        pos = np.clip(pos, 0.0, grid.bins - 1.0)
    lo = np.floor(pos).astype(np.int64)
    fr = pos - lo
    hi = np.minimum(lo + 1, grid.bins - 1)
    np.add.at(m, lo, weights * (1.0 - fr))
    np.add.at(m, hi, weights * fr)


def _check_grid(a: LLRDensity, b: LLRDensity) -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def var_convolve(a: LLRDensity, b: LLRDensity) -> LLRDensity:
    """Density of the sum of independent LLRs.

    Overflow beyond +l_max joins the +inf atom.  Underflow below -l_max
    saturates at the edge bin: a finite channel never yields a certain
    wrong decision, and the EXIT kernel is infinite there.
    """
    _check_grid(a, b)
    g = a.grid
    k = g.half
    full = np.zeros(2 * g.bins - 1)
    ia, ib = _support(a.masses), _support(b.masses)
    if ia is not None and ib is not None:
        # convolve the supports only, so FFT round-off cannot leak outside them
        ca, cb = a.masses[slice(*ia)], b.masses[slice(*ib)]
        part = np.convolve(ca, cb) if min(len(ca), len(cb)) < 64 else fftconvolve(ca, cb)
        full[ia[0] + ib[0] : ia[0] + ib[0] + len(part)] = np.maximum(part, 0.0)
    # full[i] sits at (i - 2k) * delta
    m = full[k : 3 * k + 1].copy()
    over = float(full[3 * k + 1 :].sum())
    under = float(full[:k].sum())
    fa, fb = float(a.masses.sum()), float(b.masses.sum())
    pinf = a.pinf * (fb + b.pinf) + fa * b.pinf + over
    ninf = a.ninf * (fb + b.ninf) + fa * b.ninf
    m[0] += under
    # +inf meets -inf only for inconsistent inputs; treat as an erasure
    m[k] += a.pinf * b.ninf + a.ninf * b.pinf
    return LLRDensity(g, m, pinf, ninf)


@functools.lru_cache(maxsize=8)
def _boxplus_table(grid: LLRGrid):
    """Fractional output magnitude index for every pair of input magnitude indices."""
    k = grid.half
    mags = np.arange(k + 2) * grid.delta
    t = np.tanh(mags / 2.0)
    t[k + 1] = 1.0
    prod = np.minimum(np.outer(t, t), 1.0)
    with np.errstate(divide="ignore"):
        idx = 2.0 * np.arctanh(prod) / grid.delta
    # the output magnitude never exceeds the smaller input; this also caps tanh saturation
    r = np.arange(k + 2, dtype=float)
    idx = np.minimum(idx, np.minimum.outer(r, r))
    lo = np.floor(idx)
    fr = idx - lo
    return lo.astype(np.int32), fr


def check_boxplus(a: LLRDensity, b: LLRDensity) -> LLRDensity:
    """Density of 2 atanh(tanh(l1/2) tanh(l2/2)) for independent l1 ~ a, l2 ~ b."""
    _check_grid(a, b)
    g = a.grid
    k = g.half
    lo, fr = _boxplus_table(g)
    ap, an = a.magnitudes()
    bp, bn = b.magnitudes()
    ia = _support(ap + an)
    ib = _support(bp + bn)
    size = k + 2
    out_p = np.zeros(size)
    out_n = np.zeros(size)
    if ia is not None and ib is not None:
        sa, sb = slice(*ia), slice(*ib)
        L = lo[sa, sb].ravel()
        F = fr[sa, sb].ravel()
        same = (np.outer(ap[sa], bp[sb]) + np.outer(an[sa], bn[sb])).ravel()
        diff = (np.outer(ap[sa], bn[sb]) + np.outer(an[sa], bp[sb])).ravel()
        idx = np.concatenate([L, L + 1, L + size, L + 1 + size])
        w = np.concatenate([same * (1.0 - F), same * F, diff * (1.0 - F), diff * F])
        acc = np.bincount(idx, weights=w, minlength=2 * size + 1)
        out_p = acc[:size].copy()
        out_n = acc[size : 2 * size].copy()
    return LLRDensity.from_magnitudes(g, out_p, out_n)


def _support(x: np.ndarray):
    nz = np.flatnonzero(x)
    if len(nz) == 0:
        return None
    return int(nz[0]), int(nz[-1]) + 1


def mixture(parts: list[tuple[float, LLRDensity]]) -> LLRDensity:
    g = parts[0][1].grid
    m = np.zeros(g.bins)
    pinf = ninf = 0.0
    for w, d in parts:
        _check_grid(parts[0][1], d)
        m += w * d.masses
        pinf += w * d.pinf
        ninf += w * d.ninf
    return LLRDensity(g, m, pinf, ninf)


def _powers(op, base: LLRDensity, exponents: list[int]) -> dict[int, LLRDensity]:
    """base^{op e} for each e >= 1 in ``exponents``."""
    exps = sorted(set(exponents))
    if len(exps) == 1:
        e = exps[0]
        res = None
        sq = base
        while e:
            if e & 1:
                res = sq if res is None else op(res, sq)
            e >>= 1
            if e:
                sq = op(sq, sq)
        return {exps[0]: res}
    out = {}
    cur = base
    for e in range(1, exps[-1] + 1):
        if e > 1:
            cur = op(cur, base)
        if e in exps:
            out[e] = cur
    return out


def erasure_density(grid: LLRGrid) -> LLRDensity:
    return LLRDensity.point_mass(grid, 0.0)


def check_update(rho: DegreePolynomial, v: LLRDensity) -> LLRDensity:
    deg = rho.degrees()
    exps = [d - 1 for d in deg]
    pw = _powers(check_boxplus, v, [e for e in exps if e >= 1])
    parts = [(w, pw[d - 1] if d > 1 else erasure_density(v.grid)) for d, w in deg.items()]
    return mixture(parts)


def variable_update(lam: DegreePolynomial, ch: LLRDensity, c: LLRDensity) -> LLRDensity:
    deg = lam.degrees()
    pw = _powers(var_convolve, c, [d - 1 for d in deg if d > 1])
    parts = [(w, var_convolve(ch, pw[d - 1]) if d > 1 else ch) for d, w in deg.items()]
    return mixture(parts)


def extrinsic_density(lam: DegreePolynomial, c: LLRDensity) -> LLRDensity:
    """Node-perspective extrinsic density: Lambda-mixture of full check neighbourhoods."""
    big = node_perspective(lam).degrees()
    pw = _powers(var_convolve, c, list(big))
    return mixture([(w, pw[d]) for d, w in big.items()])


@dataclass
class DEFixedPoint:
    density: LLRDensity  # variable-to-check messages
    check_density: LLRDensity  # check-to-variable messages
    extrinsic: LLRDensity  # what the bit learns from all its checks
    iterations: int
    residual: float
    history: list[float] = field(default_factory=list)


def de_bms(
    lam: DegreePolynomial,
    rho: DegreePolynomial,
    ch: ChannelModel,
    grid: LLRGrid | None = None,
    tol: float = 1e-8,
    max_iter: int = 2000,
    init: LLRDensity | None = None,
    on_iteration=None,
    raise_on_fail: bool = True,
) -> DEFixedPoint:
    """Iterate check and variable updates until the L1 change is below ``tol``.

    ``init`` seeds the variable-to-check density (defaults to the channel
    density).  ``on_iteration(k, v, c)`` is called after each full iteration.
    """
    grid = grid or LLRGrid()
    chd = LLRDensity.channel(grid, ch).normalized()
    v = chd if init is None else init
    residual = math.inf
    history = []
    c = check_update(rho, v)
    for it in range(1, max_iter + 1):
        nv = variable_update(lam, chd, c).normalized()
        residual = nv.l1_distance(v)
        history.append(residual)
        v = nv
        c = check_update(rho, v).normalized()
        if on_iteration is not None:
            on_iteration(it, v, c)
        if residual < tol:
            break
    fp = DEFixedPoint(v, c, extrinsic_density(lam, c).normalized(), it, residual, history)
    if residual >= tol and raise_on_fail:
        raise NotConverged(f"DE did not converge in {max_iter} iterations (residual {residual:.3g})", v, residual)
    return fp


def bp_decodes(lam, rho, ch, grid=None, target: float = 1e-10, max_iter: int = 5000) -> bool:
    """True if DE drives the message error probability below ``target``."""
    grid = grid or LLRGrid()
    chd = LLRDensity.channel(grid, ch).normalized()
    v = chd
    for _ in range(max_iter):
        c = check_update(rho, v).normalized()
        nv = variable_update(lam, chd, c).normalized()
        if nv.error_probability() < target:
            return True
        if nv.l1_distance(v) < 1e-12:
            return False
        v = nv
    return False


def bsc_bp_threshold(lam, rho, grid=None, lo: float = 0.0, hi: float = 0.5, tol: float = 1e-4) -> float:
    """Largest flip probability at which quantized DE still decodes (bisection)."""
    from .channels import BSC

    lo = max(lo, 1e-6)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bp_decodes(lam, rho, BSC(mid), grid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# exact discrete densities (finite support, used by oracles and property tests)


@dataclass
class AtomicDensity:
    values: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)

    def atoms(self):
        return self.values, self.masses

    def total(self) -> float:
        return float(self.masses.sum())

    @classmethod
    def symmetric(cls, magnitudes, weights, erasure: float = 0.0, perfect: float = 0.0) -> "AtomicDensity":
        """Symmetric density from BSC components: mass w at |l| = m splits as 1/(1+e^-m), e^-m/(1+e^-m)."""
        m = np.asarray(magnitudes, dtype=float)
        w = np.asarray(weights, dtype=float)
        up = w / (1.0 + np.exp(-m))
        vals = np.concatenate([m, -m, [0.0, math.inf]])
        mass = np.concatenate([up, w - up, [erasure, perfect]])
        return cls(vals, mass / mass.sum())

    def compact(self, decimals: int = 12) -> "AtomicDensity":
        keys = np.where(np.isfinite(self.values), np.round(self.values, decimals), self.values)
        uniq, inv = np.unique(keys, return_inverse=True)
        return AtomicDensity(uniq, np.bincount(inv, weights=self.masses, minlength=len(uniq)))


def boxplus_atoms(a: AtomicDensity, b: AtomicDensity) -> AtomicDensity:
    """Exact check-node combination of two finite-support densities."""
    ta = np.tanh(a.values / 2.0)
    tb = np.tanh(b.values / 2.0)
    prod = np.clip(np.outer(ta, tb), -1.0, 1.0)
    with np.errstate(divide="ignore"):
        vals = 2.0 * np.arctanh(prod)
    return AtomicDensity(vals.ravel(), np.outer(a.masses, b.masses).ravel()).compact()
