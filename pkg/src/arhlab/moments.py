"""Empirical first and second moments of functional samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .hilbert import Curve, EigenSystem, OperatorMatrix, Sample, eigendecompose, _check_grid


@dataclass(frozen=True, eq=False)
class MomentSet:
    mean: Curve
    cov: OperatorMatrix
    crosscov: dict = field(default_factory=dict)
    n: int = 0
    centered: bool = True

    @property
    def delta(self) -> OperatorMatrix:
        """Lag-one cross-covariance Delta_n."""
        return self.crosscov[1]

    def summary(self, k: int = 10) -> dict:
        eig = functional_pca(self.cov)
        return {
            "n": self.n,
            "centered": self.centered,
            "trace": self.cov.trace(),
            "leading_eigenvalues": [float(v) for v in eig.eigenvalues[:k]],
            "lags": sorted(int(h) for h in self.crosscov),
        }


def empirical_mean(sample: Sample) -> Curve:
    if len(sample) == 0:
        raise ValueError("empty sample")
    return Curve(sample.grid, sample.values.mean(axis=0))


def empirical_cov(sample: Sample, h: int = 0, center: bool = True) -> OperatorMatrix:
    """Lag-h (cross-)covariance operator.

    ``(1/(n-h)) sum_{t=1}^{n-h} (X_{t+h} - m) (x) (X_t - m)``, where ``m`` is the
    empirical mean when ``center`` is true and zero otherwise.  For h = 0 the
    kernel is symmetrized exactly.
    """
    n = len(sample)
    if h < 0:
        raise ValueError("lag must be nonnegative")
    if h >= n:
        raise ValueError(f"lag {h} requires more than {n} curves")
    Y = sample.values - sample.values.mean(axis=0) if center else sample.values
    K = Y[h:].T @ Y[: n - h] / (n - h)
    if h == 0:
        K = 0.5 * (K + K.T)
    return OperatorMatrix(sample.grid, K)


def compute_moments(sample: Sample, lags=(1,), center: bool = True) -> MomentSet:
    cross = {int(h): empirical_cov(sample, int(h), center) for h in lags}
    mean = empirical_mean(sample) if center else Curve.zeros(sample.grid)
    return MomentSet(mean, empirical_cov(sample, 0, center), cross, len(sample), center)


def functional_pca(cov: OperatorMatrix, rank: int | None = None) -> EigenSystem:
    return eigendecompose(cov, rank)


KERNELS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "gaussian": lambda u: np.exp(-0.5 * u**2),
    "epanechnikov": lambda u: np.clip(1.0 - u**2, 0.0, None),
    "uniform": lambda u: (np.abs(u) <= 1.0).astype(float),
    "constant": lambda u: np.ones_like(u),
}


def _pairwise_median(sample: Sample) -> float:
    V = sample.values
    w = sample.grid.weights
    G = (V * w) @ V.T
    d2 = np.diag(G)[:, None] + np.diag(G)[None, :] - 2 * G
    iu = np.triu_indices(len(sample), 1)
    return float(np.median(np.sqrt(np.clip(d2[iu], 0, None)))) if iu[0].size else 1.0


def local_cov(sample: Sample, x_ref: Curve | None = None, bandwidth: float | None = None,
              kernel="gaussian") -> OperatorMatrix:
    """Kernel-weighted (uncentered) covariance emphasizing curves close to ``x_ref``.

    The weights are ``K(||X_i - x_ref|| / bandwidth)``; the same index range is
    used in numerator and denominator.  ``x_ref`` defaults to the last curve
    and ``bandwidth`` to the median pairwise L2 distance.
    """
    if x_ref is None:
        x_ref = sample[len(sample) - 1]
    _check_grid(sample.grid, x_ref.grid)
    K = KERNELS[kernel] if isinstance(kernel, str) else kernel
    h = _pairwise_median(sample) if bandwidth is None else float(bandwidth)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    dist = Sample(sample.grid, sample.values - x_ref.values).norms()
    wts = np.asarray(K(dist / h), dtype=float)
    total = wts.sum()
    if not total > 0:
        raise ValueError(
            f"all kernel weights vanish at bandwidth {h:.4g}; nearest curve is at distance "
            f"{dist.min():.4g}, increase the bandwidth")
    V = sample.values
    return OperatorMatrix(sample.grid, (V.T * wts) @ V / total)


def stationary_covariance(rho: OperatorMatrix, gamma_eps: OperatorMatrix, tol: float = 1e-10,
                          max_terms: int = 100_000) -> OperatorMatrix:
    """Gamma = sum_k rho^k Gamma_eps (rho*)^k, truncated at relative increment ``tol``."""
    _check_grid(rho.grid, gamma_eps.grid)
    A = rho.action
    term = gamma_eps.kernel.copy()
    total = term.copy()
    for _ in range(max_terms):
        term = A @ term @ A.T
        total += term
        if np.abs(term).max() <= tol * np.abs(total).max():
            break
    else:
        raise ValueError("geometric series did not converge; is rho stationary?")
    return OperatorMatrix(rho.grid, 0.5 * (total + total.T))


@dataclass(frozen=True, eq=False)
class TensorizedDecomposition:
    max_violation: float
    gamma: OperatorMatrix
    u_mean: OperatorMatrix
    u_hs_norms: np.ndarray
    u: np.ndarray | None = None

    @property
    def relative_violation(self) -> float:
        return self.max_violation / self.gamma.hs_norm()


def tensorized_decomposition(sample: Sample, innovations: Sample, rho: OperatorMatrix,
                             gamma_eps: OperatorMatrix, keep_u: bool = False,
                             tol: float = 1e-10) -> TensorizedDecomposition:
    """Check Z_i = R(Z_{i-1}) + u_i for Z_i = X_i (x) X_i - Gamma and R(S) = rho S rho*.

    ``u_i = rho(X_{i-1}) (x) eps_i + eps_i (x) rho(X_{i-1}) + eps_i (x) eps_i - Gamma_eps``
    for i = 2..n.  The residual of the recursion is measured in HS norm.
    """
    grid = _check_grid(sample.grid, innovations.grid, rho.grid, gamma_eps.grid)
    if len(sample) != len(innovations):
        raise ValueError("sample and innovations are misaligned")
    if len(sample) < 2:
        raise ValueError("need at least two curves")
    gamma = stationary_covariance(rho, gamma_eps, tol)
    X, E = sample.values, innovations.values
    A = rho.action
    rX = X[:-1] @ A.T
    sw = np.sqrt(grid.weights)
    G = gamma.kernel
    Ge = gamma_eps.kernel
    n1 = len(sample) - 1
    u_sum = np.zeros_like(G)
    norms = np.empty(n1)
    us = np.empty((n1,) + G.shape) if keep_u else None
    worst = 0.0
    for i in range(1, len(sample)):
        u = np.outer(rX[i - 1], E[i]) + np.outer(E[i], rX[i - 1]) + np.outer(E[i], E[i]) - Ge
        Z_prev = np.outer(X[i - 1], X[i - 1]) - G
        Z = np.outer(X[i], X[i]) - G
        RZ = A @ Z_prev @ A.T
        resid = (Z - RZ - u) * sw[:, None] * sw[None, :]
        worst = max(worst, float(np.linalg.norm(resid)))
        u_sum += u
        norms[i - 1] = np.linalg.norm(u * sw[:, None] * sw[None, :])
        if keep_u:
            us[i - 1] = u
    return TensorizedDecomposition(worst, gamma, OperatorMatrix(grid, u_sum / n1), norms, us)


def longrun_trace(rho: OperatorMatrix, gamma0: OperatorMatrix, tol: float = 1e-12,
                  max_terms: int = 1_000_000) -> float:
    """trace(Gamma_0) + 2 sum_{k>=1} trace(rho^k Gamma_0), the limit of n E||S_n/n||^2."""
    from .simulate import NonStationaryError, stationarity_check

    _check_grid(rho.grid, gamma0.grid)
    stat = stationarity_check(rho)
    if not stat.passed:
        raise NonStationaryError("longrun_trace requires a stationary operator")
    # remaining terms are bounded by a geometric tail at the spectral radius
    r = max(stat.radius, 1e-3)
    tail = r / (1.0 - r)
    w = rho.grid.weights
    A = rho.action
    T = gamma0.kernel
    total = float(np.sum(w * np.diag(T)))
    for _ in range(max_terms):
        T = A @ T
        inc = 2.0 * float(np.sum(w * np.diag(T)))
        total += inc
        if 2.0 * np.abs(T).max() * w.sum() * tail < 0.5 * tol:
            break
    return total


def hs_noise_floor(left: Sample, right: Sample) -> float:
    """Monte Carlo floor for ||(1/N) sum_k L_k (x) R_k||_HS under noncorrelation.

    If the summands are centered and uncorrelated across k, the expected
    squared HS norm of the average is ``sum_k ||L_k||^2 ||R_k||^2 / N^2``.
    """
    _check_grid(left.grid, right.grid)
    N = len(left)
    return float(np.sqrt(np.sum(left.norms() ** 2 * right.norms() ** 2)) / N)


def cross_moment(left: Sample, right: Sample) -> OperatorMatrix:
    """Uncentered (1/N) sum_k L_k (x) R_k."""
    grid = _check_grid(left.grid, right.grid)
    return OperatorMatrix(grid, left.values.T @ right.values / len(left))
