"""Finite-grid realization of L2[0, 1] and operators acting on it.

Curves are sampled on a :class:`Grid` carrying quadrature weights, so that
``<u, v> = sum_t w_t u(t) v(t)``.  An operator is stored as a kernel ``K`` and
acts through the same quadrature rule::

    (A u)(s) = sum_t K(s, t) w_t u(t)

Spectral computations go through the weight-symmetrized matrix
``W^{1/2} K W^{1/2}``, which has the same spectrum as the operator and is
symmetric whenever the operator is self-adjoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

SPACES = ("L2", "Sobolev21")


class GridMismatchError(ValueError):
    """Raised when objects living on different grids are combined."""


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def trapezoid_weights(points) -> np.ndarray:
    """Trapezoidal quadrature weights for (possibly non-uniform) nodes."""
    t = np.asarray(points, dtype=float)
    dt = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


@dataclass(frozen=True, eq=False)
class Grid:
    """Discretization of [0, 1] with quadrature weights.

    A grid with ``blocks > 1`` is the p-fold product used by companion
    (Markov) representations: the base nodes are repeated ``blocks`` times and
    the inner product is the sum of the block inner products.
    """

    points: np.ndarray
    weights: np.ndarray
    blocks: int = 1

    def __post_init__(self):
        pts = _readonly(self.points)
        wts = _readonly(self.weights)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        if pts.ndim != 1 or pts.shape != wts.shape:
            raise ValueError("points and weights must be 1-d arrays of equal length")
        if self.blocks < 1 or pts.size % self.blocks:
            raise ValueError("grid size is not a multiple of the block count")
        m = pts.size // self.blocks
        if m < 2:
            raise ValueError("a grid needs at least two points")
        base = pts[:m]
        if not np.all(np.diff(base) > 0) or base[0] != 0.0 or base[-1] != 1.0:
            raise ValueError("grid points must increase strictly from 0 to 1")
        if self.blocks > 1 and not np.array_equal(pts, np.tile(base, self.blocks)):
            raise ValueError("product grid blocks must repeat the base nodes")
        if not np.all(wts > 0):
            raise ValueError("quadrature weights must be strictly positive")
        if abs(wts.sum() - self.blocks) > 1e-12 * self.blocks:
            raise ValueError("quadrature weights must sum to 1 on each block")

    @classmethod
    def uniform(cls, m: int = 101) -> "Grid":
        """Uniform nodes on [0, 1] with trapezoidal weights (the default grid)."""
        if m < 2:
            raise ValueError("a grid needs at least two points")
        pts = np.linspace(0.0, 1.0, m)
        return cls(pts, trapezoid_weights(pts))

    @classmethod
    def from_points(cls, points) -> "Grid":
        """Rebuild a grid (or product grid) from its node list.

        Blocks are delimited by nodes equal to 0, matching the sidecar CSV
        format written by :mod:`arhlab.io`.
        """
        pts = np.asarray(points, dtype=float)
        starts = np.flatnonzero(pts == 0.0)
        blocks = max(len(starts), 1)
        base = pts[: pts.size // blocks]
        w = np.tile(trapezoid_weights(base), blocks)
        return cls(pts, w, blocks)

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def block_size(self) -> int:
        return self.size // self.blocks

    @property
    def base(self) -> "Grid":
        if self.blocks == 1:
            return self
        m = self.block_size
        return Grid(self.points[:m], self.weights[:m])

    @property
    def is_uniform(self) -> bool:
        dt = np.diff(self.base.points)
        return bool(np.allclose(dt, dt[0], rtol=1e-10, atol=0))

    def product(self, p: int) -> "Grid":
        if self.blocks != 1:
            raise ValueError("product of a product grid is not supported")
        return Grid(np.tile(self.points, p), np.tile(self.weights, p), p)

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.blocks == other.blocks
            and self.size == other.size
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def __eq__(self, other):
        return isinstance(other, Grid) and self.same_as(other)

    def __hash__(self):
        return hash((self.size, self.blocks, self.points.tobytes()))

    def __repr__(self):
        return f"Grid(m={self.block_size}, blocks={self.blocks})"


def _check_grid(*grids: Grid) -> Grid:
    first = grids[0]
    for g in grids[1:]:
        if not first.same_as(g):
            raise GridMismatchError(f"grid mismatch: {first!r} vs {g!r}")
    return first


@dataclass(frozen=True, eq=False)
class Curve:
    """One functional observation sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "values", v)

    def __add__(self, other: "Curve") -> "Curve":
        _check_grid(self.grid, other.grid)
        return Curve(self.grid, self.values + other.values)

    def __sub__(self, other: "Curve") -> "Curve":
        _check_grid(self.grid, other.grid)
        return Curve(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "Curve":
        return Curve(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "Curve":
        return Curve(self.grid, -self.values)

    def norm(self, space: str = "L2") -> float:
        return float(np.sqrt(inner_product(self, self, space)))

    @classmethod
    def zeros(cls, grid: Grid) -> "Curve":
        return cls(grid, np.zeros(grid.size))

    @classmethod
    def from_function(cls, grid: Grid, f) -> "Curve":
        return cls(grid, f(grid.points))


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered collection of curves X_1, ..., X_n on a common grid.

    ``values`` has shape ``(n, m)``; indexing returns a :class:`Curve`, slicing
    returns a :class:`Sample`.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.ndim != 2 or v.shape[1] != self.grid.size:
            raise ValueError(f"expected shape (n, {self.grid.size}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return Curve(self.grid, self.values[idx])
        return Sample(self.grid, self.values[idx])

    def __iter__(self):
        for row in self.values:
            yield Curve(self.grid, row)

    def scaled(self, c: float) -> "Sample":
        return Sample(self.grid, c * self.values)

    @classmethod
    def from_curves(cls, curves: Sequence[Curve]) -> "Sample":
        if not curves:
            raise ValueError("empty curve list")
        grid = _check_grid(*(c.grid for c in curves))
        return cls(grid, np.vstack([c.values for c in curves]))

    def norms(self) -> np.ndarray:
        """L2 norms of every curve."""
        return np.sqrt(self.values**2 @ self.grid.weights)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Kernel of a linear operator on a grid, acting through quadrature."""

    grid: Grid
    kernel: np.ndarray

    def __post_init__(self):
        k = _readonly(self.kernel)
        m = self.grid.size
        if k.shape != (m, m):
            raise ValueError(f"kernel must be {m}x{m}, got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise ValueError("kernel values must be finite")
        object.__setattr__(self, "kernel", k)

    # -- constructors -----------------------------------------------------
    @classmethod
    def identity(cls, grid: Grid) -> "OperatorMatrix":
        return cls(grid, np.diag(1.0 / grid.weights))

    @classmethod
    def zeros(cls, grid: Grid) -> "OperatorMatrix":
        return cls(grid, np.zeros((grid.size, grid.size)))

    @classmethod
    def from_weighted(cls, grid: Grid, mat) -> "OperatorMatrix":
        """Inverse of :meth:`weighted`."""
        isw = 1.0 / np.sqrt(grid.weights)
        return cls(grid, isw[:, None] * np.asarray(mat) * isw[None, :])

    @classmethod
    def from_action(cls, grid: Grid, mat) -> "OperatorMatrix":
        """Build from the matrix acting on grid values, ``(Au)_i = sum_j M_ij u_j``."""
        return cls(grid, np.asarray(mat) / grid.weights[None, :])

    @classmethod
    def from_eigen(cls, grid: Grid, values, functions) -> "OperatorMatrix":
        """Kernel of ``sum_i values[i] * f_i (x) f_i``; ``functions`` is (k, m)."""
        f = np.asarray(functions, dtype=float)
        return cls(grid, (f.T * np.asarray(values, dtype=float)) @ f)

    # -- views ------------------------------------------------------------
    @property
    def action(self) -> np.ndarray:
        """Matrix acting on grid values: ``K W``."""
        return self.kernel * self.grid.weights[None, :]

    def weighted(self) -> np.ndarray:
        """Weight-symmetrized matrix ``W^{1/2} K W^{1/2}``."""
        sw = np.sqrt(self.grid.weights)
        return sw[:, None] * self.kernel * sw[None, :]

    # -- algebra ----------------------------------------------------------
    def apply(self, x):
        if isinstance(x, Sample):
            _check_grid(self.grid, x.grid)
            return Sample(self.grid, x.values @ self.action.T)
        _check_grid(self.grid, x.grid)
        return Curve(self.grid, self.action @ x.values)

    def compose(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_grid(self.grid, other.grid)
        return OperatorMatrix(self.grid, self.action @ other.kernel)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return self.compose(other)
        return self.apply(other)

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.kernel.T)

    @property
    def T(self) -> "OperatorMatrix":
        return self.adjoint()

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_grid(self.grid, other.grid)
        return OperatorMatrix(self.grid, self.kernel + other.kernel)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_grid(self.grid, other.grid)
        return OperatorMatrix(self.grid, self.kernel - other.kernel)

    def __mul__(self, c: float) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, c * self.kernel)

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, -self.kernel)

    def power(self, k: int) -> "OperatorMatrix":
        out = OperatorMatrix.identity(self.grid)
        for _ in range(k):
            out = self.compose(out)
        return out

    def trace(self) -> float:
        return float(np.sum(self.grid.weights * np.diag(self.kernel)))

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.weighted(), "fro"))

    def op_norm(self) -> float:
        return float(np.linalg.norm(self.weighted(), 2))

    def is_symmetric(self, tol: float = 1e-10) -> bool:
        k = self.kernel
        scale = max(np.abs(k).max(), 1e-300)
        return bool(np.abs(k - k.T).max() <= tol * scale)


class OperatorNorms(NamedTuple):
    operator_norm: float
    hs_norm: float
    trace_norm: float


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Decreasing eigenvalues with weighted-orthonormal eigenfunctions.

    ``functions[i]`` holds the grid values of e_i.
    """

    grid: Grid
    eigenvalues: np.ndarray
    functions: np.ndarray

    def __post_init__(self):
        lam = _readonly(self.eigenvalues)
        f = _readonly(self.functions)
        if f.shape != (lam.size, self.grid.size):
            raise ValueError("eigenfunction array shape does not match eigenvalues/grid")
        if lam.size > 1 and np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues must be nonincreasing")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "functions", f)

    @property
    def count(self) -> int:
        return self.eigenvalues.size

    def eigenfunction(self, i: int) -> Curve:
        return Curve(self.grid, self.functions[i])

    def projector(self, i: int) -> OperatorMatrix:
        return OperatorMatrix.from_eigen(self.grid, [1.0], self.functions[i : i + 1])

    def projector_onto(self, k: int) -> OperatorMatrix:
        """Orthogonal projector on the span of the first ``k`` eigenfunctions."""
        return OperatorMatrix.from_eigen(self.grid, np.ones(k), self.functions[:k])

    def scores(self, x) -> np.ndarray:
        """Coordinates <x, e_i> for a curve (k,) or a sample (n, k)."""
        _check_grid(self.grid, x.grid)
        return (x.values * self.grid.weights) @ self.functions.T

    def reconstruct(self, rank: int | None = None) -> OperatorMatrix:
        r = self.count if rank is None else rank
        return OperatorMatrix.from_eigen(self.grid, self.eigenvalues[:r], self.functions[:r])

    def truncate(self, rank: int) -> "EigenSystem":
        return EigenSystem(self.grid, self.eigenvalues[:rank], self.functions[:rank])


def inner_product(u: Curve, v: Curve, space: str = "L2") -> float:
    """Inner product in L2 or in the Sobolev space W^{2,1}.

    The Sobolev product adds the L2 product of the finite-difference
    derivatives (see :func:`derivative`).
    """
    grid = _check_grid(u.grid, v.grid)
    if space not in SPACES:
        raise ValueError(f"unknown space {space!r}; expected one of {SPACES}")
    # w * (u * v) is exactly symmetric in (u, v)
    val = float(np.dot(grid.weights, u.values * v.values))
    if space == "Sobolev21":
        val += inner_product(derivative(u), derivative(v), "L2")
    return val


def norm(u: Curve, space: str = "L2") -> float:
    return float(np.sqrt(inner_product(u, u, space)))


def apply_operator(A: OperatorMatrix, x: Curve) -> Curve:
    return A.apply(x)


def tensor_product(u: Curve, v: Curve) -> OperatorMatrix:
    """The rank-one operator ``x -> <v, x> u``."""
    grid = _check_grid(u.grid, v.grid)
    return OperatorMatrix(grid, np.outer(u.values, v.values))


def op_norms(A: OperatorMatrix) -> OperatorNorms:
    s = np.linalg.svd(A.weighted(), compute_uv=False)
    return OperatorNorms(float(s[0]) if s.size else 0.0, float(np.sqrt(np.sum(s**2))), float(s.sum()))


def hs_inner(A: OperatorMatrix, B: OperatorMatrix) -> float:
    """Hilbert-Schmidt inner product <A, B>_S."""
    _check_grid(A.grid, B.grid)
    return float(np.sum(A.weighted() * B.weighted()))


def eigendecompose(A: OperatorMatrix, rank: int | None = None, *, sym_tol: float = 1e-10,
                   psd_tol: float = 1e-8) -> EigenSystem:
    """Spectral decomposition of a symmetric positive semidefinite operator.

    Parameters
    ----------
    A : OperatorMatrix
        Self-adjoint operator, ``K(s, t) = K(t, s)``.
    rank : int, optional
        Number of leading eigenpairs to keep (all by default).

    Raises
    ------
    ValueError
        If the kernel is not symmetric, or an eigenvalue is below
        ``-psd_tol * lambda_1``.
    """
    if not A.is_symmetric(sym_tol):
        raise ValueError("eigendecompose requires a symmetric kernel")
    M = A.weighted()
    M = 0.5 * (M + M.T)
    lam, vec = np.linalg.eigh(M)
    lam, vec = lam[::-1], vec[:, ::-1]
    top = max(lam[0], 0.0) if lam.size else 0.0
    if lam.size and lam[-1] < -psd_tol * max(top, 1e-300):
        raise ValueError(f"operator is not positive semidefinite (eigenvalue {lam[-1]:.3e})")
    lam = np.clip(lam, 0.0, None)
    # fix the sign so that the largest-magnitude entry is positive
    idx = np.argmax(np.abs(vec), axis=0)
    signs = np.sign(vec[idx, np.arange(vec.shape[1])])
    signs[signs == 0] = 1.0
    vec = vec * signs
    funcs = (vec / np.sqrt(A.grid.weights)[:, None]).T
    r = lam.size if rank is None else int(rank)
    if r < 1 or r > lam.size:
        raise ValueError(f"rank must be in 1..{lam.size}")
    return EigenSystem(A.grid, lam[:r], funcs[:r])


def derivative_matrix(grid: Grid) -> np.ndarray:
    """Finite-difference differentiation matrix on a uniform grid.

    Central differences inside, one-sided second-order stencils at both ends.
    """
    if grid.blocks != 1:
        raise ValueError("derivative is not defined on a product grid")
    m = grid.size
    if m < 3:
        raise ValueError("derivative needs at least 3 grid points")
    if not grid.is_uniform:
        raise ValueError("derivative requires a uniform grid")
    h = grid.points[1] - grid.points[0]
    D = np.zeros((m, m))
    i = np.arange(1, m - 1)
    D[i, i - 1] = -0.5 / h
    D[i, i + 1] = 0.5 / h
    D[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    D[-1, -3:] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    return D


def derivative(u):
    """Derivative of a curve (or of every curve in a sample)."""
    D = derivative_matrix(u.grid)
    if isinstance(u, Sample):
        return Sample(u.grid, u.values @ D.T)
    return Curve(u.grid, D @ u.values)


def orthonormalize(grid: Grid, functions) -> np.ndarray:
    """Weighted Gram-Schmidt (via QR) of the rows of ``functions``."""
    f = np.atleast_2d(np.asarray(functions, dtype=float))
    sw = np.sqrt(grid.weights)
    q, r = np.linalg.qr((f * sw).T)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return (q * s).T / sw
