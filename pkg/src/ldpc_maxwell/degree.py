"""Degree-distribution polynomials for LDPC ensembles.

Coefficients are stored by power of ``x``.  For an edge-perspective
polynomial the coefficient of ``x**k`` is the fraction of edges attached
to nodes of degree ``k + 1``; for a node-perspective polynomial it is the
fraction of nodes of degree ``k``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

MAX_DEGREE = 64
_NORM_TOL = 1e-12


@dataclass(frozen=True)
class DegreePolynomial:
    coeffs: tuple[float, ...]
    perspective: str = "edge"

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        if self.perspective not in ("edge", "node"):
            raise ValueError(f"unknown perspective {self.perspective!r}")
        if len(c) > MAX_DEGREE + 1:
            raise ValueError(f"degree exceeds the configured maximum {MAX_DEGREE}")
        if any(v < 0.0 or v > 1.0 for v in c):
            raise ValueError("coefficients must lie in [0, 1]")
        if abs(sum(c) - 1.0) > _NORM_TOL:
            raise ValueError(f"coefficients sum to {sum(c)!r}, expected 1")
        if self.perspective == "node" and c[0] != 0.0:
            raise ValueError("node-perspective polynomial has mass at degree 0")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def monomial(cls, power: int, perspective: str = "edge") -> "DegreePolynomial":
        c = [0.0] * (power + 1)
        c[power] = 1.0
        return cls(tuple(c), perspective)

    @classmethod
    def from_degrees(cls, fractions: dict[int, float]) -> "DegreePolynomial":
        """Edge-perspective polynomial from ``{node degree: edge fraction}``."""
        top = max(fractions)
        c = [0.0] * top
        for d, f in fractions.items():
            if d < 1:
                raise ValueError("node degrees must be >= 1")
            c[d - 1] += f
        return cls(tuple(c))

    @classmethod
    def parse(cls, text: str) -> "DegreePolynomial":
        return cls(tuple(parse_polynomial(text)))

    def degrees(self) -> dict[int, float]:
        """Map node degree -> coefficient."""
        shift = 1 if self.perspective == "edge" else 0
        return {k + shift: v for k, v in enumerate(self.coeffs) if v > 0.0}

    @property
    def max_degree(self) -> int:
        return max(self.degrees())

    @property
    def min_degree(self) -> int:
        return min(self.degrees())

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate on [0, 1] (scalar or array)."""
        xa = np.asarray(x, dtype=float)
        if np.any(xa < 0.0) or np.any(xa > 1.0) or np.any(np.isnan(xa)):
            raise ValueError(f"argument outside [0, 1]: {x!r}")
        return self._horner(xa)

    def _horner(self, x):
        out = np.zeros_like(np.asarray(x, dtype=float))
        for c in reversed(self.coeffs):
            out = out * x + c
        return out if out.ndim else float(out)

    def derivative(self, x):
        """First derivative, unchecked domain (used inside [0, 1] by callers)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for k in range(len(self.coeffs) - 1, 0, -1):
            out = out * x + k * self.coeffs[k]
        return out if out.ndim else float(out)

    def integral(self) -> float:
        """Integral over [0, 1]."""
        return sum(c / (k + 1) for k, c in enumerate(self.coeffs))

    def average_degree(self) -> float:
        if self.perspective == "edge":
            return 1.0 / self.integral()
        return sum(k * c for k, c in enumerate(self.coeffs))

    def __str__(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0.0:
                continue
            mono = "1" if k == 0 else ("x" if k == 1 else f"x^{k}")
            terms.append(mono if c == 1.0 else f"{c:g} {mono}")
        return " + ".join(terms)


def parse_polynomial(text: str) -> list[float]:
    """Parse strings like ``"0.5 x^2 + 0.5x^4"`` or ``"x^5"`` into coefficients by power."""
    s = text.replace(" ", "").replace("**", "^")
    if not s:
        raise ValueError("empty polynomial")
    coeffs: dict[int, float] = {}
    pos = 0
    term = re.compile(r"([+-]?)((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?(?:/\d+)?)?\*?(x(?:\^(\d+))?)?")
    while pos < len(s):
        m = term.match(s, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise ValueError(f"cannot parse polynomial {text!r} at position {pos}")
        if pos > 0 and not m.group(1):
            raise ValueError(f"missing '+' in polynomial {text!r} at position {pos}")
        coef = float(Fraction(m.group(2))) if m.group(2) else 1.0
        if m.group(1) == "-":
            coef = -coef
        power = 0 if m.group(3) is None else int(m.group(4) or 1)
        coeffs[power] = coeffs.get(power, 0.0) + coef
        pos = m.end()
    out = [0.0] * (max(coeffs) + 1)
    for k, v in coeffs.items():
        out[k] = v
    return out


def node_perspective(lam: DegreePolynomial) -> DegreePolynomial:
    """Node-perspective distribution: Lambda_i = (lambda_i / i) / int lambda."""
    if lam.perspective != "edge":
        raise ValueError("expected an edge-perspective polynomial")
    total = lam.integral()
    c = [0.0] * (len(lam.coeffs) + 1)
    for k, v in enumerate(lam.coeffs):
        c[k + 1] = v / (k + 1) / total
    # renormalise away the last ulp so the result passes validation
    s = sum(c)
    return DegreePolynomial(tuple(v / s for v in c), "node")


def edge_perspective(big_lambda: DegreePolynomial) -> DegreePolynomial:
    if big_lambda.perspective != "node":
        raise ValueError("expected a node-perspective polynomial")
    mean = sum(k * v for k, v in enumerate(big_lambda.coeffs))
    c = [k * v / mean for k, v in enumerate(big_lambda.coeffs)][1:]
    s = sum(c)
    return DegreePolynomial(tuple(v / s for v in c), "edge")


def design_rate(lam: DegreePolynomial, rho: DegreePolynomial) -> float:
    r = 1.0 - rho.integral() / lam.integral()
    if r <= 0.0:
        raise ValueError(f"design rate {r:g} is not positive")
    return r


@dataclass(frozen=True)
class EnsembleSpec:
    lam: DegreePolynomial
    rho: DegreePolynomial
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("block length must be positive")
        if self.rho.min_degree < 2:
            raise ValueError("check degrees must be at least 2")

    @property
    def rate(self) -> float:
        return design_rate(self.lam, self.rho)

    def variable_counts(self) -> dict[int, int]:
        frac = node_perspective(self.lam).degrees()
        return largest_remainder(frac, self.n)

    def check_counts(self, n_edges: int) -> dict[int, int]:
        """Check-degree counts with exactly ``n_edges`` sockets.

        Rounds the node fractions by largest remainder, then moves single
        checks between degrees until the socket total matches.
        """
        frac = node_perspective(self.rho).degrees()
        m = max(1, round(n_edges * self.rho.integral()))
        counts = largest_remainder(frac, m)
        degs = sorted(frac)
        for _ in range(4 * n_edges + 4):
            diff = n_edges - sum(d * c for d, c in counts.items())
            if diff == 0:
                return counts
            moved = False
            # shift one check to a neighbouring degree that reduces |diff|
            for a in degs:
                if counts.get(a, 0) == 0:
                    continue
                for b in degs:
                    step = b - a
                    if step != 0 and abs(diff - step) < abs(diff):
                        counts[a] -= 1
                        counts[b] = counts.get(b, 0) + 1
                        moved = True
                        break
                if moved:
                    break
            if not moved:
                break
        raise ValueError(
            f"cannot realise {n_edges} check sockets with degrees {degs} (n={self.n})"
        )


def largest_remainder(fractions: dict[int, float], total: int) -> dict[int, int]:
    raw = {k: v * total for k, v in fractions.items()}
    counts = {k: int(np.floor(v)) for k, v in raw.items()}
    short = total - sum(counts.values())
    order = sorted(raw, key=lambda k: (-(raw[k] - counts[k]), k))
    for k in order[:short]:
        counts[k] += 1
    return counts


def parse_ensemble(text: str) -> tuple[DegreePolynomial, DegreePolynomial]:
    """Parse ``"(x^2, x^5)"`` (edge-perspective lambda, rho) or ``"3,6"`` (regular degrees)."""
    s = text.strip()
    if s.startswith("(") and s.endswith(")"):
        s = s[1:-1]
    parts = [p.strip() for p in s.split(",")]
    if len(parts) != 2 or not all(parts):
        raise ValueError(f"ensemble must be '(lambda, rho)', got {text!r}")
    if all(p.isdigit() for p in parts):
        dl, dr = (int(p) for p in parts)
        return DegreePolynomial.from_degrees({dl: 1.0}), DegreePolynomial.from_degrees({dr: 1.0})
    lam, rho = DegreePolynomial.parse(parts[0]), DegreePolynomial.parse(parts[1])
    if rho.min_degree < 2:
        raise ValueError("check degrees must be at least 2")
    return lam, rho


def regular(dl: int, dr: int) -> tuple[DegreePolynomial, DegreePolynomial]:
    return DegreePolynomial.from_degrees({dl: 1.0}), DegreePolynomial.from_degrees({dr: 1.0})
