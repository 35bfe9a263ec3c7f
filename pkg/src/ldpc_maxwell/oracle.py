"""Brute-force ground truth on small codes and on a single Gaussian symbol.

Everything here enumerates: codebooks, output words and extrinsic
observations.  It is meant to be slow and obviously right.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import expit

from .channels import BEC, BSC, ERASURE, ChannelModel
from .density import AtomicDensity
from .tanner import ParityCheckMatrix, enumerate_codewords

MAX_N = 12
MAX_OUTPUTS = 1 << 22
GAUSS_POINTS = 256
_T, _W = np.polynomial.hermite.hermgauss(GAUSS_POINTS)
NODES = math.sqrt(2.0) * _T
WEIGHTS = _W / math.sqrt(math.pi)


class SizeExceeded(ValueError):
    pass


class FiniteDifferenceError(ArithmeticError):
    """One-sided differences disagree: the step is too small (cancellation) or too large."""


# ---------------------------------------------------------------------------
# helpers


def _alphabet(ch: ChannelModel):
    if isinstance(ch, BEC):
        return (0, 1, ERASURE)
    if isinstance(ch, BSC):
        return (0, 1)
    raise TypeError("exact enumeration needs a discrete channel (BEC or BSC)")


def position_channels(ch: ChannelModel, n: int, ws=None) -> list[ChannelModel]:
    """One channel per position; ``ws`` overrides the noise level w_i of each."""
    if ws is None:
        return [ch] * n
    if len(ws) != n:
        raise ValueError("need one noise level per position")
    return [ch.with_entropy(float(w)) for w in ws]


def _tables(chans, alphabet):
    """Q[i, s, b] = Q_i(alphabet[s] | b)."""
    return np.array([[[c.transition(s, b) for b in (0, 1)] for s in alphabet] for c in chans])


def _codebook(H: ParityCheckMatrix) -> np.ndarray:
    if H.n > MAX_N:
        raise SizeExceeded(f"n = {H.n} exceeds the enumeration limit {MAX_N}")
    return enumerate_codewords(H, cap=1 << 20)


def _likelihoods(q: np.ndarray, ys: np.ndarray, words: np.ndarray, positions) -> np.ndarray:
    """P[y, c] = prod over ``positions`` of Q_j(y_j | c_j), for symbol-index rows ``ys``."""
    pos = list(positions)
    out = np.ones((len(ys), len(words)))
    for k, j in enumerate(pos):
        out *= q[j][ys[:, k][:, None], words[:, j][None, :]]
    return out


def _output_words(alphabet_sizes, limit=MAX_OUTPUTS) -> np.ndarray:
    total = math.prod(alphabet_sizes)
    if total > limit:
        raise SizeExceeded(f"{total} output words exceed the enumeration limit")
    if not alphabet_sizes:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*[np.arange(a) for a in alphabet_sizes], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _entropy_bits(p: np.ndarray, axis=-1) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return t.sum(axis=axis)


# ---------------------------------------------------------------------------
# entropies


def exact_conditional_entropy(
    H: ParityCheckMatrix,
    ch: ChannelModel,
    ws=None,
    mode: str = "exact",
    samples: int = 20000,
    seed=0,
) -> float:
    """H(X | Y) in bits for a uniformly chosen codeword.

    The exact mode uses the channel symmetry: only outputs reachable from
    the all-zero codeword are enumerated.  The Monte-Carlo mode averages
    -log2 P(0 | y) over sampled outputs of the all-zero codeword.
    """
    if mode not in ("exact", "monte-carlo"):
        raise ValueError(f"unknown mode {mode!r}")
    words = _codebook(H) if mode == "exact" else enumerate_codewords(H, cap=1 << 20)
    chans = position_channels(ch, H.n, ws)
    alphabet = _alphabet(ch)
    q = _tables(chans, alphabet)
    if mode == "monte-carlo":
        rng = np.random.default_rng(seed)
        p0 = q[:, :, 0]  # (n, |alphabet|)
        cum = np.cumsum(p0, axis=1)
        u = rng.random((samples, H.n))
        ys = (u[:, :, None] > cum[None, :, :]).sum(axis=2)
        lik = _likelihoods(q, ys, words, range(H.n))
        return float(np.mean(-np.log2(lik[:, 0] / lik.sum(axis=1))))
    # symbols reachable from input 0 at every position
    reach = [np.flatnonzero(q[i, :, 0] > 0) for i in range(H.n)]
    idx = _output_words([len(r) for r in reach])
    ys = np.stack([reach[i][idx[:, i]] for i in range(H.n)], axis=1) if H.n else idx
    total = 0.0
    for chunk in np.array_split(np.arange(len(ys)), max(1, len(ys) * len(words) // 2_000_000)):
        lik = _likelihoods(q, ys[chunk], words, range(H.n))
        py0 = lik[:, 0]
        post = lik / lik.sum(axis=1, keepdims=True)
        total += float(np.sum(py0 * _entropy_bits(post)))
    return total


@dataclass
class ExtrinsicView:
    """Full-alphabet enumeration of the extrinsic observation z = y without position i."""

    words: np.ndarray
    q: np.ndarray
    i: int
    zs: np.ndarray  # symbol indices, (N, n - 1)
    pz_given: np.ndarray  # (N, 2): P(z | x_i = b)
    prior: np.ndarray  # P(x_i = b)
    lik: np.ndarray  # (N, |C|): P(z | c)

    @property
    def others(self) -> list[int]:
        n = self.words.shape[1]
        return [j for j in range(n) if j != self.i]

    def posterior_bit(self) -> np.ndarray:
        """P(x_i = b | z), (N, 2); rows with P(z) = 0 are left at the prior."""
        joint = self.pz_given * self.prior[None, :]
        tot = joint.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(tot > 0, joint / np.where(tot > 0, tot, 1.0), self.prior[None, :])
        return out


def extrinsic_view(H: ParityCheckMatrix, ch: ChannelModel, i: int, ws=None) -> ExtrinsicView:
    if not 0 <= i < H.n:
        raise IndexError(f"position {i} outside [0, {H.n})")
    words = _codebook(H)
    alphabet = _alphabet(ch)
    q = _tables(position_channels(ch, H.n, ws), alphabet)
    others = [j for j in range(H.n) if j != i]
    zs = _output_words([len(alphabet)] * len(others))
    lik = _likelihoods(q, zs, words, others)
    bit = words[:, i]
    counts = np.array([np.sum(bit == 0), np.sum(bit == 1)], dtype=float)
    prior = counts / len(words)
    pz = np.zeros((len(zs), 2))
    for b in (0, 1):
        if counts[b]:
            pz[:, b] = lik[:, bit == b].sum(axis=1) / counts[b]
    return ExtrinsicView(words, q, i, zs, pz, prior, lik)


class ExtrinsicDistribution(AtomicDensity):
    """Distribution of the extrinsic LLR at one position, all-zero codeword sent."""

    def symmetry_defect(self) -> float:
        d = self.compact()
        vals, masses = d.values, d.masses
        lookup = {round(v, 9): m for v, m in zip(vals.tolist(), masses.tolist()) if math.isfinite(v)}
        worst = float(masses[np.isneginf(vals)].sum())
        for v, m in lookup.items():
            if v > 0:
                worst = max(worst, abs(lookup.get(-v, 0.0) - math.exp(-v) * m))
        return worst


def extrinsic_distribution(H: ParityCheckMatrix, ch: ChannelModel, i: int, ws=None) -> ExtrinsicDistribution:
    view = extrinsic_view(H, ch, i, ws)
    post = view.posterior_bit()
    with np.errstate(divide="ignore"):
        l = np.log(post[:, 0]) - np.log(post[:, 1])
    mass = view.pz_given[:, 0]
    keep = mass > 0
    d = AtomicDensity(l[keep], mass[keep]).compact()
    return ExtrinsicDistribution(d.values, d.masses)


def extrinsic_ratios_exact(H: ParityCheckMatrix, p: Fraction, i: int) -> dict[Fraction | None, Fraction]:
    """BSC(p) with rational p: exact P0 over likelihood ratios P(z | x_i=0) / P(z | x_i=1).

    ``None`` keys the infinite ratio (bit i frozen by the code).
    """
    words = [tuple(int(b) for b in w) for w in _codebook(H)]
    n = H.n
    others = [j for j in range(n) if j != i]
    out: dict = {}
    for z in itertools.product((0, 1), repeat=n - 1):
        s = [Fraction(0), Fraction(0)]
        for w in words:
            flips = sum(z[k] != w[j] for k, j in enumerate(others))
            s[w[i]] += p**flips * (1 - p) ** (n - 1 - flips)
        # under the all-zero word only the x_i = 0 part of the code matters
        n0 = sum(1 for w in words if w[i] == 0)
        pz0 = s[0] / n0
        if pz0 == 0:
            continue
        n1 = len(words) - n0
        key = None if n1 == 0 or s[1] == 0 else (s[0] / n0) / (s[1] / n1)
        out[key] = out.get(key, Fraction(0)) + pz0
    return out


def exact_symmetry_holds(dist: dict) -> bool:
    """P0(1/r) = P0(r) / r for every finite ratio r."""
    for r, m in dist.items():
        if r is None:
            continue
        if dist.get(1 / r, Fraction(0)) != m / r:
            return False
    return True


# ---------------------------------------------------------------------------
# per-bit EXIT and GEXIT


def exit_i(H: ParityCheckMatrix, ch: ChannelModel, i: int, ws=None) -> float:
    """H(X_i | Y without position i), bits, by enumeration over all z."""
    view = extrinsic_view(H, ch, i, ws)
    pz = view.pz_given @ view.prior
    return float(np.sum(pz * _entropy_bits(view.posterior_bit())))


def gexit_i_formula(H: ParityCheckMatrix, ch: ChannelModel, i: int, ws=None, condition_zero: bool = False) -> float:
    """dH(X|Y)/dw_i from the channel-derivative formula, bits.

    Sums P(x_i) P(z | x_i) Q'(y_i | x_i) log2 [sum_x' Q(y_i | x') P(x' | z) / (Q(y_i | x_i) P(x_i | z))]
    over the full alphabet.  With ``condition_zero`` the x_i sum is replaced
    by x_i = 0 (valid for symmetric channels).
    """
    view = extrinsic_view(H, ch, i, ws)
    chan = position_channels(ch, H.n, ws)[i]
    alphabet = _alphabet(ch)
    post = view.posterior_bit()
    total = 0.0
    bits = (0,) if condition_zero else (0, 1)
    for xi in bits:
        px = 1.0 if condition_zero else view.prior[xi]
        if px == 0.0:
            continue
        w = view.pz_given[:, xi]
        for y in alphabet:
            dq = chan.transition_derivative(y, xi)
            if dq == 0.0:
                continue
            qy = np.array([chan.transition(y, 0), chan.transition(y, 1)])
            num = post @ qy
            den = qy[xi] * post[:, xi]
            ok = w > 0
            total += px * dq * float(np.sum(w[ok] * np.log2(num[ok] / den[ok])))
    return total


def gexit_i_kernel(H: ParityCheckMatrix, ch: ChannelModel, i: int, ws=None) -> float:
    """The same quantity as the integral of the extrinsic distribution against the GEXIT kernel."""
    chan = position_channels(ch, H.n, ws)[i]
    vals, masses = extrinsic_distribution(H, ch, i, ws).atoms()
    return float(np.sum(masses * chan.gexit_kernel(vals)))


def gexit_i_fd(
    H: ParityCheckMatrix,
    ch: ChannelModel,
    i: int,
    delta: float = 1e-4,
    ws=None,
    check: bool = True,
) -> float:
    """Central difference of H(X|Y) in w_i with one Richardson step (delta, delta/2)."""
    base = np.full(H.n, ch.w) if ws is None else np.asarray(ws, dtype=float)
    if not (delta <= base[i] <= 1.0 - delta):
        raise ValueError("w_i too close to the edge of [0, 1] for a central difference")

    def ent(dw):
        v = base.copy()
        v[i] += dw
        return exact_conditional_entropy(H, ch, v)

    h0 = ent(0.0)
    hp, hm = ent(delta), ent(-delta)
    hp2, hm2 = ent(delta / 2), ent(-delta / 2)
    d1 = (hp - hm) / (2 * delta)
    d2 = (hp2 - hm2) / delta
    if check:
        fwd, bwd = (hp - h0) / delta, (h0 - hm) / delta
        roundoff = 1e-15 * max(1.0, abs(h0)) / delta
        if abs(fwd - bwd) > 1e-2 + 1e3 * delta or roundoff > 1e-8:
            raise FiniteDifferenceError(f"one-sided differences {fwd:.6g} and {bwd:.6g} disagree at delta = {delta}")
    return (4.0 * d2 - d1) / 3.0


def entropy_decomposition_check(H: ParityCheckMatrix, ch: ChannelModel, i: int, ws=None) -> float:
    """|H(X|Y) - H(X_i | Y_i, Z_i) - H(X without i | X_i, Z_i)|, each side enumerated separately."""
    lhs = exact_conditional_entropy(H, ch, ws)
    view = extrinsic_view(H, ch, i, ws)
    chan = position_channels(ch, H.n, ws)[i]
    # H(X_i | Y_i, Z_i)
    first = 0.0
    for y in _alphabet(ch):
        qy = np.array([chan.transition(y, 0), chan.transition(y, 1)])
        joint = view.pz_given * view.prior[None, :] * qy[None, :]  # P(x_i, y_i, z)
        py = joint.sum(axis=1)
        ok = py > 0
        first += float(np.sum(py[ok] * _entropy_bits(joint[ok] / py[ok, None])))
    # H(X without i | X_i, Z_i)
    second = 0.0
    bit = view.words[:, i]
    for b in (0, 1):
        sel = bit == b
        if not np.any(sel):
            continue
        lik = view.lik[:, sel]
        pz = lik.sum(axis=1)  # proportional to P(z, x_i = b)
        ok = pz > 0
        cond = lik[ok] / pz[ok, None]
        second += float(np.sum((pz[ok] / len(view.words)) * _entropy_bits(cond)))
    return abs(lhs - first - second)


# ---------------------------------------------------------------------------
# single Gaussian symbol: Y = sqrt(snr) X + W, X in {+1, -1}


def _log_odds(snr: float, y, prior_plus: float):
    return 2.0 * math.sqrt(snr) * np.asarray(y) + math.log(prior_plus / (1.0 - prior_plus))


def gaussian_entropy_nats(snr: float, prior_plus: float = 0.5) -> float:
    """H(X | Y) in nats by Gauss-Hermite quadrature."""
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    if prior_plus in (0.0, 1.0):
        return 0.0
    rs = math.sqrt(snr)
    total = 0.0
    for x, px in ((1.0, prior_plus), (-1.0, 1.0 - prior_plus)):
        lam = _log_odds(snr, rs * x + NODES, prior_plus)
        p = expit(lam)
        h = np.logaddexp(0.0, -lam) + (1.0 - p) * lam  # binary entropy of sigmoid(lam), nats
        total += px * float(np.sum(WEIGHTS * h))
    return total


def posterior_mean(snr: float, y, prior_plus: float = 0.5):
    """E[X | y]."""
    return np.tanh(_log_odds(snr, y, prior_plus) / 2.0)


def posterior_variance(snr: float, y, prior_plus: float = 0.5):
    m = posterior_mean(snr, y, prior_plus)
    return 1.0 - m * m


def gaussian_mmse(snr: float, prior_plus: float = 0.5) -> float:
    rs = math.sqrt(snr)
    total = 0.0
    for x, px in ((1.0, prior_plus), (-1.0, 1.0 - prior_plus)):
        total += px * float(np.sum(WEIGHTS * posterior_variance(snr, rs * x + NODES, prior_plus)))
    return total


def richardson(f, x: float, h: float, one_sided: bool = False) -> float:
    """Derivative of f at x from differences at steps h and h/2."""
    if one_sided:
        def d(s):
            return (-3.0 * f(x) + 4.0 * f(x + s) - f(x + 2 * s)) / (2 * s)
    else:
        def d(s):
            return (f(x + s) - f(x - s)) / (2 * s)
    return (4.0 * d(h / 2) - d(h)) / 3.0


def gaussian_gexit_formula(snr: float, prior_plus: float = 0.5) -> float:
    """Single-symbol channel-derivative formula with Q' = dQ/dsnr, nats."""
    if snr <= 0:
        raise ValueError("the formula route needs snr > 0")
    rs = math.sqrt(snr)
    total = 0.0
    for x, px in ((1.0, prior_plus), (-1.0, 1.0 - prior_plus)):
        y = rs * x + NODES
        # dQ/dsnr (y | x) = Q(y | x) * x * W / (2 rs) with W = y - rs x
        lam = _log_odds(snr, y, prior_plus)
        # log [sum_x' P(x')Q(y|x') / (P(x)Q(y|x))] = log(1 + e^{-x lam})
        g = np.logaddexp(0.0, -x * lam)
        total += px * float(np.sum(WEIGHTS * x * NODES / (2.0 * rs) * g))
    return total


@dataclass(frozen=True)
class GaussianSymbol:
    snr: float
    gexit: float  # dH/dsnr in nats, numerical derivative
    mmse: float
    gexit_formula: float | None


def gaussian_single_symbol(snr: float, prior_plus: float = 0.5, h: float | None = None) -> GaussianSymbol:
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    if math.isinf(snr):
        return GaussianSymbol(snr, 0.0, 0.0, 0.0)
    if snr == 0.0:
        g = richardson(lambda s: gaussian_entropy_nats(s, prior_plus), 0.0, h or 1e-3, one_sided=True)
        return GaussianSymbol(snr, g, gaussian_mmse(0.0, prior_plus), None)
    h = h or min(1e-3, snr / 4)
    g = richardson(lambda s: gaussian_entropy_nats(s, prior_plus), snr, h)
    return GaussianSymbol(snr, g, gaussian_mmse(snr, prior_plus), gaussian_gexit_formula(snr, prior_plus))


def gaussian_density(y, x: float, snr: float):
    return np.exp(-0.5 * (np.asarray(y) - math.sqrt(snr) * x) ** 2) / math.sqrt(2.0 * math.pi)


def two_derivatives_defect(snr: float, ys, h: float = 1e-3) -> float:
    """max |dQ/dsnr + x/(2 sqrt(snr)) dQ/dy| over the grid, both derivatives numerical."""
    worst = 0.0
    for x in (1.0, -1.0):
        for y in ys:
            d_snr = richardson(lambda s: gaussian_density(y, x, s), snr, min(h, snr / 4))
            d_y = richardson(lambda t: gaussian_density(t, x, snr), float(y), h)
            worst = max(worst, abs(d_snr + x / (2.0 * math.sqrt(snr)) * d_y))
    return worst


def fdt_defect(snr: float, ys, prior_plus: float = 0.5, h: float = 1e-3) -> float:
    """max |(1/sqrt(snr)) dE[X|y]/dy - Var(X|y)| over the grid."""
    worst = 0.0
    for y in ys:
        d = richardson(lambda t: float(posterior_mean(snr, t, prior_plus)), float(y), h)
        worst = max(worst, abs(d / math.sqrt(snr) - float(posterior_variance(snr, y, prior_plus))))
    return worst


# ---------------------------------------------------------------------------
# small-code corpus


def repetition_code(n: int) -> ParityCheckMatrix:
    return ParityCheckMatrix(n, tuple(frozenset({0, j}) for j in range(1, n)))


def single_parity_check(n: int) -> ParityCheckMatrix:
    return ParityCheckMatrix(n, (frozenset(range(n)),))


def hamming_7_4() -> ParityCheckMatrix:
    return ParityCheckMatrix.from_dense(
        [
            [1, 0, 1, 0, 1, 0, 1],
            [0, 1, 1, 0, 0, 1, 1],
            [0, 0, 0, 1, 1, 1, 1],
        ]
    )


def random_code(n: int, m: int, seed) -> ParityCheckMatrix:
    rng = np.random.default_rng(seed)
    dens = rng.uniform(0.25, 0.6)
    mat = (rng.random((m, n)) < dens).astype(np.uint8)
    return ParityCheckMatrix.from_dense(mat)


def small_code_corpus(count: int = 50, seed: int = 2005, n_max: int = 10) -> list[tuple[str, ParityCheckMatrix]]:
    """Structured codes plus ``count`` seeded random parity-check matrices with 4 <= n <= n_max."""
    out = [
        ("repetition-3", repetition_code(3)),
        ("repetition-5", repetition_code(5)),
        ("spc-4", single_parity_check(4)),
        ("spc-6", single_parity_check(6)),
        ("hamming-7-4", hamming_7_4()),
    ]
    rng = np.random.default_rng(seed)
    for k in range(count):
        n = int(rng.integers(4, n_max + 1))
        m = int(rng.integers(1, n))
        out.append((f"random-{k}", random_code(n, m, [seed, k])))
    return out


@dataclass
class OracleRow:
    code: str
    channel: str
    position: int
    decomposition_defect: float
    formula_fd_gap: float
    exit_gap: float | None  # BEC only

    def passed(self, fd_tol: float = 1e-6, chain_tol: float = 1e-10, exit_tol: float = 1e-12) -> bool:
        ok = self.decomposition_defect <= chain_tol and self.formula_fd_gap <= fd_tol
        if self.exit_gap is not None:
            ok = ok and self.exit_gap <= exit_tol
        return ok


def check_code(name: str, H: ParityCheckMatrix, channels=(BEC(0.3), BSC(0.11))) -> list[OracleRow]:
    rows = []
    for ch in channels:
        for i in range(H.n):
            dec = entropy_decomposition_check(H, ch, i)
            formula = gexit_i_formula(H, ch, i)
            fd = gexit_i_fd(H, ch, i)
            eg = abs(formula - exit_i(H, ch, i)) if isinstance(ch, BEC) else None
            rows.append(OracleRow(name, ch.spec(), i, dec, abs(formula - fd), eg))
    return rows
