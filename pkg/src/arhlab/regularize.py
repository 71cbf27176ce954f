"""Bounded surrogates for the inverse of a covariance operator.

Three schemes act diagonally in the eigenbasis of Gamma:

* spectral cut-off: multiplier 1/lambda_l for l <= k, 0 beyond;
* penalized: 1/(lambda_l + alpha);
* Tikhonov: lambda_l / (lambda_l**2 + alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import Curve, EigenSystem, OperatorMatrix, _check_grid

KINDS = ("cutoff", "penalized", "tikhonov")

#: eigenvalues below this fraction of lambda_1 count as zero
EIGEN_FLOOR = 1e-12


@dataclass(frozen=True, order=False)
class RegScheme:
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}; expected one of {KINDS}")
        if self.kind == "cutoff":
            if int(self.value) != self.value or self.value < 1:
                raise ValueError("cut-off rank k must be an integer >= 1")
            object.__setattr__(self, "value", int(self.value))
        elif not self.value > 0:
            raise ValueError("alpha must be positive")

    @classmethod
    def cutoff(cls, k: int) -> "RegScheme":
        return cls("cutoff", k)

    @classmethod
    def penalized(cls, alpha: float) -> "RegScheme":
        return cls("penalized", alpha)

    @classmethod
    def tikhonov(cls, alpha: float) -> "RegScheme":
        return cls("tikhonov", alpha)

    @classmethod
    def parse(cls, text: str) -> "RegScheme":
        """Parse ``cutoff:4``, ``penalized:0.1`` or ``tikhonov:1e-3``."""
        kind, sep, val = text.strip().partition(":")
        if not sep:
            raise ValueError(f"scheme {text!r} must look like kind:value")
        kind = kind.lower()
        return cls(kind, int(val) if kind == "cutoff" else float(val))

    @property
    def k(self) -> int | None:
        return self.value if self.kind == "cutoff" else None

    @property
    def alpha(self) -> float | None:
        return None if self.kind == "cutoff" else self.value

    def regularization_order(self) -> float:
        """Smaller means more regularized (used to break ties)."""
        return float(self.value) if self.kind == "cutoff" else -float(self.value)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k" if self.kind == "cutoff" else "alpha": self.value}

    def __str__(self):
        return f"{self.kind}:{self.value:g}" if self.kind != "cutoff" else f"cutoff:{self.value}"


def positive_count(eigenvalues, floor: float = EIGEN_FLOOR) -> int:
    lam = np.asarray(eigenvalues)
    if lam.size == 0 or lam[0] <= 0:
        return 0
    return int(np.sum(lam > floor * lam[0]))


def multipliers(eigenvalues, scheme: RegScheme) -> np.ndarray:
    """Action of Gamma^dagger on each eigendirection."""
    lam = np.asarray(eigenvalues, dtype=float)
    npos = positive_count(lam)
    if scheme.kind == "cutoff":
        if scheme.k > npos:
            raise ValueError(
                f"cut-off k={scheme.k} exceeds the number of strictly positive eigenvalues; "
                f"largest admissible k is {npos}")
        out = np.zeros_like(lam)
        out[: scheme.k] = 1.0 / lam[: scheme.k]
        return out
    lam = np.where(np.arange(lam.size) < npos, lam, 0.0)
    if scheme.kind == "penalized":
        return 1.0 / (lam + scheme.alpha)
    return lam / (lam**2 + scheme.alpha)


@dataclass(frozen=True, eq=False)
class RegularizedInverse:
    operator: OperatorMatrix
    scheme: RegScheme
    source_eigens: EigenSystem
    multipliers: np.ndarray

    @property
    def bound(self) -> float:
        """Operator norm, i.e. the largest multiplier."""
        return float(np.max(np.abs(self.multipliers))) if self.multipliers.size else 0.0

    def apply(self, x: Curve) -> Curve:
        return self.operator.apply(x)


def reg_inverse(eig: EigenSystem, scheme: RegScheme) -> RegularizedInverse:
    mult = multipliers(eig.eigenvalues, scheme)
    op = OperatorMatrix.from_eigen(eig.grid, mult, eig.functions)
    return RegularizedInverse(op, scheme, eig, mult)


@dataclass(frozen=True)
class PointwiseCheck:
    in_domain: bool
    errors: list | None
    outside_mass: float


def _exact_inverse_coords(eig: EigenSystem, x: Curve, tol: float):
    npos = positive_count(eig.eigenvalues)
    coords = eig.scores(x)
    inside = coords[:npos]
    xn2 = float(np.dot(eig.grid.weights * x.values, x.values))
    outside = max(xn2 - float(np.sum(inside**2)), 0.0)
    ok = xn2 > 0 and outside <= tol * xn2
    return coords, npos, ok, math.sqrt(outside)


def pointwise_limit_check(eig: EigenSystem, x: Curve, schemes, tol: float = 1e-10) -> PointwiseCheck:
    """Distances ||Gamma^dagger x - Gamma^{-1} x|| along a schedule of schemes.

    ``x`` must lie in the span of the eigenfunctions with positive
    eigenvalues; otherwise the domain violation is flagged and no errors are
    returned.
    """
    _check_grid(eig.grid, x.grid)
    coords, npos, ok, outside = _exact_inverse_coords(eig, x, tol)
    if not ok:
        return PointwiseCheck(False, None, outside)
    lam = eig.eigenvalues[:npos]
    exact = coords[:npos] / lam
    errs = []
    for s in schemes:
        mult = multipliers(eig.eigenvalues, s)[:npos]
        errs.append(float(np.sqrt(np.sum((mult * coords[:npos] - exact) ** 2))))
    return PointwiseCheck(True, errs, outside)


def domain_diagnostic(x: Curve, eig: EigenSystem) -> np.ndarray:
    """Partial sums of x_p^2 / lambda_p^2 over the positive part of the spectrum.

    A profile that keeps growing as p increases indicates that x sits outside
    the practical domain of the inverse.
    """
    _check_grid(eig.grid, x.grid)
    npos = positive_count(eig.eigenvalues)
    c = eig.scores(x)[:npos]
    return np.cumsum(c**2 / eig.eigenvalues[:npos] ** 2)


def cutoff_schedule(n: int, c: float = 1.0, max_k: int | None = None) -> int:
    """k = max(1, floor(c n^{1/5})), optionally clipped to ``max_k``.

    n^{1/5} grows more slowly than n^{1/4} / log n, as the predictor CLT requires.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    k = max(1, math.floor(c * n ** 0.2 + 1e-9))
    if max_k is not None:
        k = max(1, min(k, int(max_k)))
    return k


def alpha_grid(lambda1: float, num: int = 20, low: float = 1e-6) -> np.ndarray:
    """Logarithmic grid from lambda_1 down to ``low * lambda_1``."""
    return lambda1 * np.logspace(0.0, math.log10(low), num)
