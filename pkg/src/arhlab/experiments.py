"""Monte Carlo drivers for the large-sample behaviour of functional means."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .hilbert import Grid, OperatorMatrix, eigendecompose
from .moments import longrun_trace, stationary_covariance
from .simulate import (ArhSpec, LinearProcessSpec, NoiseSpec, diagonal_operator, simulate_arh1,
                       simulate_linear_process, stationarity_check, substream, NonStationaryError)

#: diagonal coefficients (in the noise eigenbasis) of the reference operators
REFERENCE_MODELS = {
    "zero": (),
    "rank1": (0.5,),
    "rank2": (0.5, 0.3),
    "rank3": (0.8, 0.6, 0.4),
}


def reference_model(name: str = "rank3", grid: Grid | None = None, noise: NoiseSpec | None = None,
                    burnin: int = 200) -> ArhSpec:
    """ARH(1) with rho = sum_i b_i e_i (x) e_i and the default Fourier noise.

    The noise has gamma_p = p^-2, p = 1..20, on a 101-point grid unless given.
    """
    if name not in REFERENCE_MODELS:
        raise ValueError(f"unknown reference model {name!r}; choose from {sorted(REFERENCE_MODELS)}")
    noise = noise or NoiseSpec.default(grid or Grid.uniform(101))
    coefs = REFERENCE_MODELS[name]
    rho = diagonal_operator(noise, coefs) if coefs else OperatorMatrix.zeros(noise.grid)
    return ArhSpec(rho, noise, burnin)


def _simulate(spec, n: int, rng) -> np.ndarray:
    if isinstance(spec, ArhSpec):
        return simulate_arh1(spec, n, rng=rng).sample.values
    if isinstance(spec, LinearProcessSpec):
        return simulate_linear_process(spec, n, rng=rng).values
    raise ValueError("spec must be an ArhSpec or a LinearProcessSpec")


def _require(spec) -> None:
    if isinstance(spec, ArhSpec) and not stationarity_check(spec.rho).passed:
        raise NonStationaryError("Monte Carlo drivers need a stationary operator")


@dataclass(frozen=True)
class LlnResult:
    estimate: float
    se: float
    longrun: float
    ratio: float
    ratio_se: float
    n: int
    reps: int
    wide_variance: bool

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in self.__dict__.items()}


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def _wide(est: float, se: float, reps: int) -> bool:
    return reps < 10 or not math.isfinite(se) or se > 0.25 * abs(est)


def limit_trace(spec) -> float:
    """lim n E||S_n/n||^2 for the process of ``spec``."""
    if isinstance(spec, ArhSpec):
        g0 = stationary_covariance(spec.rho, spec.noise.covariance())
        return longrun_trace(spec.rho, g0)
    A = spec.total_operator()
    G = A @ spec.noise.covariance() @ A.T
    return G.trace()


def mc_lln_rate(spec, n: int, reps: int, seed: int) -> LlnResult:
    """Monte Carlo estimate of n E||S_n/n||^2 against its analytic limit.

    Replication r uses the independent substream (seed, r); the curves are
    not recentred, so the process mean must be zero.
    """
    _require(spec)
    if n < 1 or reps < 1:
        raise ValueError("n and reps must be positive")
    vals = np.empty(reps)
    for r in range(reps):
        X = _simulate(spec, n, substream(seed, r))
        S = X.sum(axis=0)
        vals[r] = float(np.dot(spec.noise.grid.weights * S, S)) / n
    est, se = _mean_se(vals)
    lim = limit_trace(spec)
    return LlnResult(est, se, lim, est / lim, se / lim, n, reps, _wide(est, se, reps))


@dataclass(frozen=True, eq=False)
class CltResult:
    variances: np.ndarray
    variance_se: np.ndarray
    targets: np.ndarray
    directions: np.ndarray
    scores: np.ndarray
    pvalues: np.ndarray
    level: float
    n: int
    reps: int
    wide_variance: bool

    @property
    def ratios(self) -> np.ndarray:
        return self.variances / self.targets

    @property
    def rejection_rate(self) -> float:
        return float(np.mean(self.pvalues < self.level)) if self.pvalues.size else math.nan

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "reps": self.reps,
            "score_variances": self.variances.tolist(),
            "score_variance_se": [None if not math.isfinite(v) else v for v in self.variance_se],
            "target_variances": self.targets.tolist(),
            "ratios": self.ratios.tolist(),
            "normality_level": self.level,
            "normality_pvalues": self.pvalues.tolist(),
            "normality_rejection_rate": None if math.isnan(self.rejection_rate) else self.rejection_rate,
            "wide_variance": self.wide_variance,
        }


def limit_covariance(spec) -> OperatorMatrix:
    """A Gamma_eps A*, with A = sum_j a_j or A = (I - rho)^{-1} for ARH(1)."""
    G = spec.noise.covariance()
    grid = spec.noise.grid
    if isinstance(spec, ArhSpec):
        A = OperatorMatrix.from_action(grid, np.linalg.inv(np.eye(grid.size) - spec.rho.action))
    else:
        A = spec.total_operator()
    C = A @ G @ A.T
    return OperatorMatrix(grid, 0.5 * (C.kernel + C.kernel.T))


def mc_mean_clt(spec, n: int, reps: int, seed: int, directions: int = 3, batch_size: int = 30,
                level: float = 0.01) -> CltResult:
    """Scores of S_n / sqrt(n) on the leading eigenfunctions of the limit covariance.

    Score variances (mean known to be zero) are compared with the limit
    eigenvalues.  Normality is checked by Shapiro-Wilk on consecutive
    batches of ``batch_size`` replications in every direction.
    """
    _require(spec)
    if reps < 1:
        raise ValueError("reps must be positive")
    C = limit_covariance(spec)
    eig = eigendecompose(C, rank=directions)
    F = eig.functions
    w = spec.noise.grid.weights
    scores = np.empty((reps, F.shape[0]))
    for r in range(reps):
        X = _simulate(spec, n, substream(seed, r))
        s = X.sum(axis=0) / math.sqrt(n)
        scores[r] = (F * w) @ s
    sq = scores**2
    var = sq.mean(axis=0)
    se = sq.std(axis=0, ddof=1) / math.sqrt(reps) if reps > 1 else np.full(var.shape, math.inf)
    nb = reps // batch_size if batch_size >= 3 else 0
    pv = np.array([[stats.shapiro(scores[b * batch_size:(b + 1) * batch_size, j]).pvalue
                    for b in range(nb)] for j in range(F.shape[0])]).reshape(F.shape[0], nb)
    wide = reps < 10 or bool(np.any(~np.isfinite(se)))
    return CltResult(var, se, eig.eigenvalues.copy(), F, scores, pv, level, n, reps, wide)
