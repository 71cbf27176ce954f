"""Samples of Hilbert-valued linear and autoregressive processes.

All generators are deterministic given a seed.  Where a function accepts
``rng`` it may be an integer seed, a :class:`numpy.random.Generator`, or
``None`` (use the seed stored on the ``NoiseSpec``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .hilbert import Curve, Grid, OperatorMatrix, Sample, derivative_matrix, orthonormalize

SQRT3 = math.sqrt(3.0)


class NonStationaryError(ValueError):
    """Raised when an autoregressive operator has spectral radius >= 1."""


def make_rng(rng=None, default_seed: int | None = None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        rng = default_seed
    return np.random.default_rng(rng)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for replication ``index`` of a seeded experiment."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def fourier_basis(grid: Grid, P: int) -> np.ndarray:
    """First ``P`` functions of {1, sqrt2 cos(2 pi p t), sqrt2 sin(2 pi p t)}, orthonormalized on the grid."""
    t = grid.points
    rows = [np.ones_like(t)]
    p = 1
    while len(rows) < P:
        rows.append(math.sqrt(2) * np.cos(2 * np.pi * p * t))
        if len(rows) < P:
            rows.append(math.sqrt(2) * np.sin(2 * np.pi * p * t))
        p += 1
    if P > grid.size:
        raise ValueError("more basis functions than grid points")
    return orthonormalize(grid, np.array(rows[:P]))


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """Strong H-white noise ``eps = sum_p sqrt(gamma_p) xi_p e_p``.

    ``law`` selects the law of the coefficients xi_p: standard Gaussian, or
    uniform on [-sqrt3, sqrt3] (unit variance).
    """

    eigenvalues: np.ndarray
    eigenfunctions: Sample
    seed: int = 0
    law: str = "gaussian"

    def __post_init__(self):
        g = np.asarray(self.eigenvalues, dtype=float)
        object.__setattr__(self, "eigenvalues", g)
        if g.ndim != 1 or g.size != len(self.eigenfunctions):
            raise ValueError("need one eigenvalue per eigenfunction")
        if np.any(g <= 0):
            raise ValueError("noise eigenvalues must be positive")
        if np.any(np.diff(g) > 0):
            raise ValueError("noise eigenvalues must be nonincreasing")
        if self.law not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise law {self.law!r}")

    @classmethod
    def default(cls, grid: Grid, P: int = 20, decay: float = 2.0, seed: int = 0,
                scale: float = 1.0) -> "NoiseSpec":
        """Fourier eigenfunctions with ``gamma_p = scale * p**(-decay)``."""
        gam = scale * np.arange(1, P + 1, dtype=float) ** (-decay)
        return cls(gam, Sample(grid, fourier_basis(grid, P)), seed)

    @classmethod
    def from_operator(cls, cov: OperatorMatrix, seed: int = 0, rel_floor: float = 1e-12) -> "NoiseSpec":
        """Gaussian noise whose covariance operator is ``cov`` (positive part)."""
        from .hilbert import eigendecompose

        eig = eigendecompose(cov)
        keep = eig.eigenvalues > rel_floor * eig.eigenvalues[0]
        return cls(eig.eigenvalues[keep], Sample(cov.grid, eig.functions[keep]), seed)

    @property
    def grid(self) -> Grid:
        return self.eigenfunctions.grid

    def covariance(self) -> OperatorMatrix:
        """Gamma_eps = sum_p gamma_p e_p (x) e_p."""
        return OperatorMatrix.from_eigen(self.grid, self.eigenvalues, self.eigenfunctions.values)

    def with_seed(self, seed: int) -> "NoiseSpec":
        return NoiseSpec(self.eigenvalues, self.eigenfunctions, seed, self.law)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        P = self.eigenvalues.size
        if self.law == "gaussian":
            xi = rng.standard_normal((n, P))
        else:
            xi = rng.uniform(-SQRT3, SQRT3, (n, P))
        return (xi * np.sqrt(self.eigenvalues)) @ self.eigenfunctions.values


def gen_white_noise(spec: NoiseSpec, n: int, rng=None) -> Sample:
    if n < 1:
        raise ValueError("n must be >= 1")
    return Sample(spec.grid, spec.draw(n, make_rng(rng, spec.seed)))


@dataclass(frozen=True, eq=False)
class LinearProcessSpec:
    """X_k = mu + sum_{j=0}^{M} a_j(eps_{k-j}) with a_0 = I.

    ``coefficients`` holds a_1, ..., a_M; the identity a_0 is implicit.
    """

    coefficients: tuple
    noise: NoiseSpec
    mean: Curve | None = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        for a in self.coefficients:
            if not a.grid.same_as(self.noise.grid):
                raise ValueError("coefficient operators must live on the noise grid")

    @property
    def operators(self) -> list[OperatorMatrix]:
        return [OperatorMatrix.identity(self.noise.grid), *self.coefficients]

    @property
    def order(self) -> int:
        return len(self.coefficients)

    def total_operator(self) -> OperatorMatrix:
        """A = sum_j a_j, the operator of the mean CLT."""
        A = OperatorMatrix.identity(self.noise.grid)
        for a in self.coefficients:
            A = A + a
        return A


@dataclass(frozen=True, eq=False)
class ArhSpec:
    rho: OperatorMatrix
    noise: NoiseSpec
    burnin: int = 200

    def __post_init__(self):
        if not self.rho.grid.same_as(self.noise.grid):
            raise ValueError("rho and noise must share a grid")
        if self.burnin < 0:
            raise ValueError("burnin must be nonnegative")


@dataclass(frozen=True, eq=False)
class SegmentedProcess:
    sample: Sample
    innovations: Sample | None = None
    truth: OperatorMatrix | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.innovations is not None and len(self.innovations) != len(self.sample):
            raise ValueError("sample and innovations must be aligned")


def simulate_linear_process(spec: LinearProcessSpec, n: int, rng=None) -> Sample:
    """Truncated linear process; M extra noises are drawn so X_1 is stationary."""
    M = spec.order
    eps = spec.noise.draw(n + M, make_rng(rng, spec.noise.seed))
    X = eps[M:].copy()
    for j, a in enumerate(spec.coefficients, start=1):
        X += eps[M - j : M - j + n] @ a.action.T
    if spec.mean is not None:
        X += spec.mean.values
    return Sample(spec.noise.grid, X)


class StationarityResult(NamedTuple):
    radius: float
    passed: bool


def spectral_radius(rho: OperatorMatrix, levels: int = 12) -> float:
    """Spectral radius from the geometric growth rate of ||rho^k||.

    Powers k = 2^j are formed by repeated squaring of the normalized matrix;
    the rate is read off the last two levels, which cancels the constant in
    ``||rho^k|| ~ C r^k``.
    """
    A = rho.weighted()
    logs = []
    log_scale = 0.0
    for _ in range(levels + 1):
        nrm = np.linalg.norm(A, 2)
        if nrm == 0.0:
            return 0.0
        L = math.log(nrm) + log_scale
        logs.append(L)
        A = A / nrm
        A = A @ A
        log_scale = 2 * L
    k_last = 2 ** levels
    return float(math.exp((logs[-1] - logs[-2]) / (k_last - k_last // 2)))


def stationarity_check(rho: OperatorMatrix) -> StationarityResult:
    r = spectral_radius(rho)
    return StationarityResult(r, bool(r < 1 - 1e-6))


def _require_stationary(rho: OperatorMatrix) -> None:
    res = stationarity_check(rho)
    if not res.passed:
        raise NonStationaryError(
            f"autoregressive operator has spectral radius {res.radius:.6g} >= 1; "
            "no stationary solution")


def _iterate(action: np.ndarray, noise: np.ndarray, burnin: int) -> np.ndarray:
    x = np.zeros(action.shape[0])
    out = np.empty_like(noise)
    for i in range(noise.shape[0]):
        x = action @ x + noise[i]
        out[i] = x
    return out[burnin:]


def simulate_arh1(spec: ArhSpec, n: int, rng=None) -> SegmentedProcess:
    """X_k = rho(X_{k-1}) + eps_k from X_0 = 0, discarding ``burnin`` curves."""
    _require_stationary(spec.rho)
    eps = spec.noise.draw(spec.burnin + n, make_rng(rng, spec.noise.seed))
    X = _iterate(spec.rho.action, eps, spec.burnin)
    grid = spec.noise.grid
    return SegmentedProcess(Sample(grid, X), Sample(grid, eps[spec.burnin:]), spec.rho)


def simulate_arh1_change(spec: ArhSpec, rho_after: OperatorMatrix, n: int, change_at: int,
                         rng=None) -> SegmentedProcess:
    """ARH(1) whose operator switches from ``spec.rho`` to ``rho_after`` at curve ``change_at``.

    Curves 0..change_at-1 follow ``spec.rho`` (after the burn-in), later ones
    ``rho_after``; the innovations are shared.  ``truth`` is ``rho_after``.
    """
    if not rho_after.grid.same_as(spec.noise.grid):
        raise ValueError("rho_after must live on the noise grid")
    if not 0 <= change_at <= n:
        raise ValueError("change_at must lie in 0..n")
    _require_stationary(spec.rho)
    _require_stationary(rho_after)
    eps = spec.noise.draw(spec.burnin + n, make_rng(rng, spec.noise.seed))
    switch = spec.burnin + change_at
    x = np.zeros(eps.shape[1])
    X = np.empty_like(eps)
    for i in range(eps.shape[0]):
        x = (spec.rho.action if i < switch else rho_after.action) @ x + eps[i]
        X[i] = x
    grid = spec.noise.grid
    X = X[spec.burnin:]
    return SegmentedProcess(Sample(grid, X), Sample(grid, eps[spec.burnin:]), rho_after)


def companion_operator(rhos: Sequence[OperatorMatrix]) -> OperatorMatrix:
    """Markov-representation operator on the p-fold product grid."""
    grid = rhos[0].grid
    p, m = len(rhos), grid.size
    C = np.zeros((p * m, p * m))
    for i, r in enumerate(rhos):
        if not r.grid.same_as(grid):
            raise ValueError("all rho_i must share a grid")
        C[:m, i * m : (i + 1) * m] = r.action
    for i in range(1, p):
        C[i * m : (i + 1) * m, (i - 1) * m : i * m] = np.eye(m)
    return OperatorMatrix.from_action(grid.product(p), C)


def simulate_arh_p(rhos: Sequence[OperatorMatrix], noise: NoiseSpec, n: int, burnin: int = 200,
                   rng=None) -> SegmentedProcess:
    """ARH(p) through its companion form Y_k = rho' Y_{k-1} + (eps_k, 0, ..., 0)."""
    if not rhos:
        raise ValueError("need at least one operator")
    comp = companion_operator(rhos)
    _require_stationary(comp)
    m, p = noise.grid.size, len(rhos)
    eps = noise.draw(burnin + n, make_rng(rng, noise.seed))
    big = np.zeros((eps.shape[0], p * m))
    big[:, :m] = eps
    Y = _iterate(comp.action, big, burnin)
    truth = rhos[0] if p == 1 else comp
    return SegmentedProcess(Sample(noise.grid, Y[:, :m]), Sample(noise.grid, eps[burnin:]), truth)


def ou_operator(a: float, grid: Grid) -> OperatorMatrix:
    """rho(x)(t) = exp(-a t) x(1)."""
    K = np.zeros((grid.size, grid.size))
    K[:, -1] = np.exp(-a * grid.points) / grid.weights[-1]
    return OperatorMatrix(grid, K)


def simulate_ou_segments(a: float, n: int, grid: Grid | None = None, seed=None) -> SegmentedProcess:
    """Stationary Ornstein-Uhlenbeck path cut into unit-length segments.

    The path is sampled exactly on the concatenated grid,
    ``eta_{t+d} = exp(-a d) eta_t + N(0, (1 - exp(-2 a d)) / (2 a))`` with
    ``eta_0 ~ N(0, 1/(2a))``, and X_k(t) = eta_{k-1+t}, so consecutive segments
    share their endpoint.
    """
    if a <= 0:
        raise ValueError("the O-U rate a must be positive")
    grid = grid or Grid.uniform()
    rng = make_rng(seed)
    t = grid.points
    dt = np.diff(t)
    decay = np.exp(-a * dt)
    sd = np.sqrt(-np.expm1(-2 * a * dt) / (2 * a))
    z = rng.standard_normal((n, t.size - 1))
    # within-segment noise from a zero start: eps_k(t) = int_{k}^{k+t} e^{-a(k+t-s)} dw_s
    E = np.zeros((n, t.size))
    for i in range(1, t.size):
        E[:, i] = decay[i - 1] * E[:, i - 1] + sd[i - 1] * z[:, i - 1]
    prop = np.exp(-a * t)
    X = np.empty_like(E)
    last = rng.standard_normal() / math.sqrt(2 * a)
    for k in range(n):
        X[k] = prop * last + E[k]
        last = X[k, -1]
    prev_end = np.concatenate([[X[0, 0]], X[:-1, -1]])
    innov = X - prop[None, :] * prev_end[:, None]
    return SegmentedProcess(Sample(grid, X), Sample(grid, innov), ou_operator(a, grid),
                            {"process": "ou", "a": a})


def wong_c(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return (SQRT3 / 2) * np.exp(-SQRT3 * t) * np.expm1(2 * t / SQRT3)


def wong_operator(grid: Grid) -> OperatorMatrix:
    """A = phi + Psi(D) of the Wong process on the grid.

    [phi f](t) = (exp(-sqrt3 t) + sqrt3 c(t)) f(1) and [Psi(D) f](t) = c(t) f'(1),
    with f'(1) taken from the one-sided finite-difference rule.
    """
    t = grid.points
    c = wong_c(t)
    D = derivative_matrix(grid)
    action = np.zeros((grid.size, grid.size))
    action[:, -1] = np.exp(-SQRT3 * t) + SQRT3 * c
    action += np.outer(c, D[-1])
    return OperatorMatrix.from_action(grid, action)


def simulate_wong_segments(n: int, grid: Grid | None = None, seed=None) -> SegmentedProcess:
    """Stationary Wong process cut into unit-length segments.

    Writing T = exp(2t/sqrt3), the pair ``xi_t = sqrt3 T^{-3/2} int_0^T w_u du``
    and ``zeta_t = w_T / sqrt(T)`` is a stationary Gaussian Markov process whose
    transition over a step d is available in closed form (the increment of
    (w, int w) over [T, T e^{2d/sqrt3}] is Gaussian).  The path is sampled
    exactly with that transition; no quadrature in the u-variable is needed.
    """
    grid = grid or Grid.uniform()
    rng = make_rng(seed)
    t = grid.points
    dt = np.diff(t)
    r = np.exp(2 * dt / SQRT3)
    q = r - 1.0
    # Cholesky factor of Cov(dW', J') = [[q, q^2/2], [q^2/2, q^3/3]]
    l11 = np.sqrt(q)
    l21 = q**1.5 / 2
    l22 = q**1.5 / math.sqrt(12.0)
    z = rng.standard_normal((n, t.size - 1, 2))
    nb = np.zeros((n, t.size))
    na = np.zeros((n, t.size))
    for i in range(1, t.size):
        z1, z2 = z[:, i - 1, 0], z[:, i - 1, 1]
        dW = l11[i - 1] * z1
        J = l21[i - 1] * z1 + l22[i - 1] * z2
        ri = r[i - 1]
        nb[:, i] = (nb[:, i - 1] + SQRT3 * na[:, i - 1] * q[i - 1] + SQRT3 * J) * ri**-1.5
        na[:, i] = (na[:, i - 1] + dW) * ri**-0.5
    # homogeneous response to the state (xi, zeta) at the segment start
    hb_xi = np.exp(-SQRT3 * t)
    hb_zeta = SQRT3 * np.expm1(2 * t / SQRT3) * np.exp(-SQRT3 * t)
    ha_zeta = np.exp(-t / SQRT3)
    z0 = rng.standard_normal(2)
    xi, zeta = z0[0], (SQRT3 / 2) * z0[0] + 0.5 * z0[1]
    X = np.empty((n, t.size))
    Z = np.empty((n, t.size))
    for k in range(n):
        X[k] = hb_xi * xi + hb_zeta * zeta + nb[k]
        Z[k] = ha_zeta * zeta + na[k]
        xi, zeta = X[k, -1], Z[k, -1]
    return SegmentedProcess(Sample(grid, X), Sample(grid, nb), wong_operator(grid),
                            {"process": "wong", "zeta": Z})


def segment_path(path, m: int, grid: Grid | None = None, truncate: bool = False) -> Sample:
    """Cut a scalar series into consecutive non-overlapping pieces of length ``m``."""
    x = np.asarray(path, dtype=float).ravel()
    if x.size % m:
        if not truncate:
            raise ValueError(f"series length {x.size} is not a multiple of {m}")
        x = x[: (x.size // m) * m]
    if x.size == 0:
        raise ValueError("series too short for a single segment")
    grid = grid or Grid.uniform(m)
    if grid.size != m:
        raise ValueError("grid size must equal the segment length")
    return Sample(grid, x.reshape(-1, m))


def concatenate_segments(sample: Sample) -> np.ndarray:
    return sample.values.ravel().copy()


class InvertibilityResult(NamedTuple):
    passed: bool
    margin: float


def invertibility_check(norms) -> InvertibilityResult:
    """Sufficient condition sum_j ||a_j|| < 1 for 1 - sum z^j ||a_j|| != 0 on |z| < 1."""
    a = np.asarray(list(norms), dtype=float)
    if np.any(a < 0):
        raise ValueError("operator norms cannot be negative")
    margin = 1.0 - float(a.sum())
    return InvertibilityResult(margin > 0, margin)


def diagonal_operator(noise: NoiseSpec, coefs) -> OperatorMatrix:
    """sum_i coefs[i] e_i (x) e_i in the noise eigenbasis."""
    c = np.asarray(coefs, dtype=float)
    return OperatorMatrix.from_eigen(noise.grid, c, noise.eigenfunctions.values[: c.size])
