"""Binary-input memoryless symmetric channels: BEC, BSC and BiAWGN.

The unified noise parameter ``w`` is the channel entropy ``1 - C`` in bits.
It is always derived from the native parameter, never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

ERASURE = -1
GH_POINTS = 64
_GH_T, _GH_W = np.polynomial.hermite.hermgauss(GH_POINTS)
# E[f(W)] for W ~ N(0, 1) is sum(GH_WEIGHTS * f(GH_NODES))
GH_NODES = math.sqrt(2.0) * _GH_T
GH_WEIGHTS = _GH_W / math.sqrt(math.pi)


def h2(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    out = np.where((p <= 0) | (p >= 1), 0.0, out)
    return out if out.ndim else float(out)


def h2_inverse(w: float) -> float:
    """Flip probability in [0, 1/2] with binary entropy ``w``."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"entropy {w} outside [0, 1]")
    if w == 0.0:
        return 0.0
    if w == 1.0:
        return 0.5
    return brentq(lambda p: h2(p) - w, 1e-300, 0.5, xtol=1e-300, rtol=4 * np.finfo(float).eps)


def softplus2(x):
    """log2(1 + e^x), stable for large |x|."""
    return np.logaddexp(0.0, x) / math.log(2.0)


class ChannelModel:
    """Shared behaviour; subclasses define the native parameter."""

    name = ""

    @property
    def w(self) -> float:
        return self.entropy()

    def transmit(self, codeword, seed) -> np.ndarray:
        raise NotImplementedError

    def llr(self, y):
        raise NotImplementedError

    def entropy(self) -> float:
        raise NotImplementedError

    def with_entropy(self, w: float) -> "ChannelModel":
        raise NotImplementedError

    def transition(self, y, x: int) -> float:
        raise NotImplementedError

    def transition_derivative(self, y, x: int) -> float:
        raise NotImplementedError

    def reflect(self, y):
        """Output involution mapping Q(y|0) onto Q(reflect(y)|1)."""
        raise NotImplementedError

    def gexit_kernel(self, l):
        raise NotImplementedError

    def llr_atoms(self) -> list[tuple[float, float]]:
        """LLR distribution of the channel output under input 0, as (value, mass) atoms."""
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class BEC(ChannelModel):
    epsilon: float
    name = "bec"

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"erasure probability {self.epsilon} outside [0, 1]")

    outputs = (0, 1, ERASURE)

    def transmit(self, codeword, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        x = np.asarray(codeword, dtype=np.int8)
        y = x.copy()
        y[rng.random(len(x)) < self.epsilon] = ERASURE
        return y

    def llr(self, y):
        if y == ERASURE:
            return 0.0
        return math.inf if y == 0 else -math.inf

    def entropy(self) -> float:
        return self.epsilon

    def with_entropy(self, w: float) -> "BEC":
        return BEC(w)

    def transition(self, y, x: int) -> float:
        if y == ERASURE:
            return self.epsilon
        return 1.0 - self.epsilon if y == x else 0.0

    def transition_derivative(self, y, x: int) -> float:
        if y == ERASURE:
            return 1.0
        return -1.0 if y == x else 0.0

    def reflect(self, y):
        return y if y == ERASURE else 1 - y

    def gexit_kernel(self, l):
        return exit_kernel(l)

    def llr_atoms(self):
        return [(0.0, self.epsilon), (math.inf, 1.0 - self.epsilon)]

    def spec(self) -> str:
        return f"bec:{self.epsilon!r}"


@dataclass(frozen=True)
class BSC(ChannelModel):
    p: float
    name = "bsc"

    def __post_init__(self):
        if not 0.0 <= self.p <= 0.5:
            raise ValueError(f"flip probability {self.p} outside [0, 1/2]")

    outputs = (0, 1)

    def transmit(self, codeword, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        x = np.asarray(codeword, dtype=np.int8)
        return x ^ (rng.random(len(x)) < self.p).astype(np.int8)

    @property
    def l_channel(self) -> float:
        if self.p == 0.0:
            return math.inf
        return math.log((1.0 - self.p) / self.p)

    def llr(self, y):
        return self.l_channel if y == 0 else -self.l_channel

    def entropy(self) -> float:
        return h2(self.p)

    def with_entropy(self, w: float) -> "BSC":
        return BSC(h2_inverse(w))

    def dp_dw(self) -> float:
        if self.p == 0.5:
            raise ZeroDivisionError("dw/dp vanishes at p = 1/2")
        if self.p == 0.0:
            return 0.0
        return 1.0 / math.log2((1.0 - self.p) / self.p)

    def transition(self, y, x: int) -> float:
        return 1.0 - self.p if y == x else self.p

    def transition_derivative(self, y, x: int) -> float:
        d = self.dp_dw()
        return -d if y == x else d

    def reflect(self, y):
        return 1 - y

    def gexit_kernel(self, l):
        """GEXIT kernel in the L domain, entropy in bits per unit of w in bits.

        The bits rescaling cancels between dp/dw and the logarithms, so this
        is the natural-log bracket divided by log((1-p)/p).
        """
        l = np.asarray(l, dtype=float)
        if self.p == 0.0:
            return np.zeros_like(l) if l.ndim else 0.0
        lc = 0.0 if self.p == 0.5 else self.l_channel
        if lc < 1e-3:
            # removable singularity at p = 1/2; the bracket cancels near it, so
            # use its Taylor expansion 2s + lc^2 s(1-s)(1-2s)/3 with s = 1/(1+e^l)
            s = 0.5 * (1.0 - np.tanh(0.5 * l))
            out = 2.0 * s + lc * lc * s * (1.0 - s) * (1.0 - 2.0 * s) / 3.0
            return out if out.ndim else float(out)
        with np.errstate(invalid="ignore"):
            out = (np.logaddexp(0.0, lc - l) - np.logaddexp(0.0, -lc - l)) / lc
        out = np.where(np.isposinf(l), 0.0, np.where(np.isneginf(l), 2.0, out))
        return out if out.ndim else float(out)

    def llr_atoms(self):
        return [(self.l_channel, 1.0 - self.p), (-self.l_channel, self.p)]

    def spec(self) -> str:
        return f"bsc:{self.p!r}"


@dataclass(frozen=True)
class BiAWGN(ChannelModel):
    """Y = sqrt(snr) * s + W with s = +1 for bit 0 and -1 for bit 1."""

    snr: float
    name = "biawgn"

    def __post_init__(self):
        if not self.snr >= 0.0:
            raise ValueError(f"snr {self.snr} must be nonnegative")

    def transmit(self, codeword, seed) -> np.ndarray:
        rng = np.random.default_rng(seed)
        s = 1.0 - 2.0 * np.asarray(codeword, dtype=float)
        return math.sqrt(self.snr) * s + rng.standard_normal(len(s))

    def llr(self, y):
        return 2.0 * math.sqrt(self.snr) * y

    def entropy(self) -> float:
        if math.isinf(self.snr):
            return 0.0
        return biawgn_entropy(self.snr)

    def with_entropy(self, w: float) -> "BiAWGN":
        return BiAWGN(biawgn_snr_for_entropy(w))

    def transition(self, y, x: int) -> float:
        s = 1.0 - 2.0 * x
        return math.exp(-0.5 * (y - math.sqrt(self.snr) * s) ** 2) / math.sqrt(2 * math.pi)

    def dq_dsnr(self, y, x: int) -> float:
        if self.snr == 0.0:
            raise ZeroDivisionError("dQ/dsnr diverges at snr = 0")
        s = 1.0 - 2.0 * x
        rs = math.sqrt(self.snr)
        return self.transition(y, x) * (y - rs * s) * s / (2.0 * rs)

    def dw_dsnr(self, h: float | None = None) -> float:
        """Central difference of the quadrature entropy in snr."""
        h = h or max(1e-4, 1e-4 * self.snr)
        lo = max(self.snr - h, 0.0)
        return (biawgn_entropy(self.snr + h) - biawgn_entropy(lo)) / (self.snr + h - lo)

    def transition_derivative(self, y, x: int) -> float:
        return self.dq_dsnr(y, x) / self.dw_dsnr()

    def reflect(self, y):
        return -y

    def gexit_kernel(self, l):
        """sum_y Q'(y|0) log2(1 + exp(-L(y) - l)) by Gauss-Hermite quadrature."""
        l = np.asarray(l, dtype=float)
        rs = math.sqrt(self.snr)
        y = rs + GH_NODES
        ly = 2.0 * rs * y
        # Q'(y|0) dy = Q(y|0) * W / (2 rs) dy, averaged over W ~ N(0, 1)
        weight = GH_WEIGHTS * GH_NODES / (2.0 * rs) / self.dw_dsnr()
        out = np.sum(weight * softplus2(-ly - l[..., None]), axis=-1)
        return out if out.ndim else float(out)

    def llr_atoms(self):
        rs = math.sqrt(self.snr)
        return list(zip((2.0 * rs * (rs + GH_NODES)).tolist(), GH_WEIGHTS.tolist()))

    def spec(self) -> str:
        return f"biawgn:snr={self.snr!r}"


def biawgn_entropy(snr: float) -> float:
    """1 - C(snr) in bits: E[log2(1 + e^{-L})], L ~ N(2 snr, 4 snr)."""
    rs = math.sqrt(snr)
    return float(np.sum(GH_WEIGHTS * softplus2(-(2.0 * snr + 2.0 * rs * GH_NODES))))


def biawgn_snr_for_entropy(w: float) -> float:
    if not 0.0 < w <= 1.0:
        raise ValueError(f"entropy {w} outside (0, 1]")
    if w == 1.0:
        return 0.0
    hi = 1.0
    while biawgn_entropy(hi) > w:
        hi *= 2.0
        if hi > 1e4:
            raise ValueError(f"entropy {w} too small to invert")
    return brentq(lambda s: biawgn_entropy(s) - w, 0.0, hi, xtol=1e-14)


def exit_kernel(l):
    """Channel-independent EXIT kernel log2(1 + e^{-l})."""
    l = np.asarray(l, dtype=float)
    with np.errstate(invalid="ignore"):
        out = softplus2(-l)
    out = np.where(np.isposinf(l), 0.0, out)
    return out if out.ndim else float(out)


def parse_channel(text: str) -> ChannelModel:
    """``bec:0.47``, ``bsc:0.1``, ``biawgn:snr=1.2``, ``biawgn:w=0.5`` (also ``bec:w=..``)."""
    kind, _, arg = text.strip().lower().partition(":")
    if not arg:
        raise ValueError(f"channel {text!r} needs a parameter, e.g. bsc:0.1")
    key, eq, val = arg.partition("=")
    if not eq:
        key, val = "", key
    try:
        value = float(val)
    except ValueError:
        raise ValueError(f"bad channel parameter in {text!r}") from None
    cls = {"bec": BEC, "bsc": BSC, "biawgn": BiAWGN}.get(kind)
    if cls is None:
        raise ValueError(f"unknown channel {kind!r}")
    if key == "w":
        return family(kind).with_entropy(value)
    native = {"bec": ("", "eps", "epsilon"), "bsc": ("", "p"), "biawgn": ("", "snr")}[kind]
    if key not in native:
        raise ValueError(f"unknown parameter {key!r} for {kind}")
    return cls(value)


def family(kind: str) -> ChannelModel:
    """A representative member, used to build others via ``with_entropy``."""
    return {"bec": BEC(0.5), "bsc": BSC(0.1), "biawgn": BiAWGN(1.0)}[kind]
