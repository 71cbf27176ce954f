"""ARH(1) estimation and prediction: rho_hat = Delta_n Gamma_n^dagger."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .hilbert import Curve, EigenSystem, Grid, OperatorMatrix, Sample, _check_grid
from .moments import MomentSet, compute_moments, empirical_cov, functional_pca
from .regularize import RegScheme, cutoff_schedule, positive_count, reg_inverse
from .simulate import ArhSpec, NoiseSpec, simulate_arh1, stationarity_check, substream


class IdentifiabilityError(ValueError):
    """The sample covariance has no positive eigenvalue, so ker Gamma_n is everything."""


@dataclass(frozen=True, eq=False)
class ArhEstimate:
    rho_hat: OperatorMatrix
    scheme: RegScheme
    eigens: EigenSystem
    projector_rank: int
    moments: MomentSet
    n: int
    gamma_dagger_norm: float = float("nan")

    @property
    def grid(self) -> Grid:
        return self.rho_hat.grid

    @property
    def mean(self) -> Curve:
        return self.moments.mean

    def projector(self) -> OperatorMatrix:
        """Projector on the first ``projector_rank`` empirical eigenfunctions."""
        return self.eigens.projector_onto(self.projector_rank)

    def yule_walker_residual(self) -> float:
        """||Delta_n - rho_hat Gamma_n||_HS."""
        return (self.moments.delta - self.rho_hat @ self.moments.cov).hs_norm()

    def summary(self, k: int = 10) -> dict:
        return {
            "n": self.n,
            "scheme": self.scheme.to_dict(),
            "projector_rank": self.projector_rank,
            "centered": self.moments.centered,
            "leading_eigenvalues": [float(v) for v in self.eigens.eigenvalues[:k]],
            "yule_walker_residual_hs": self.yule_walker_residual(),
            "rho_hat_hs_norm": self.rho_hat.hs_norm(),
            "rho_hat_operator_norm": self.rho_hat.op_norm(),
        }


def estimate_rho(sample: Sample, scheme: RegScheme | None = None, center: bool = True,
                 clip: bool = False) -> ArhEstimate:
    """Fit the autocorrelation operator of an ARH(1) sample.

    Parameters
    ----------
    sample : Sample
        X_1, ..., X_n with n >= 3.
    scheme : RegScheme, optional
        Regularization of Gamma_n^{-1}.  Defaults to the spectral cut-off at
        ``cutoff_schedule(n)``.
    center : bool
        Subtract the empirical mean before forming the moments.
    clip : bool
        Lower a cut-off rank that exceeds the number of positive eigenvalues
        instead of raising.

    Raises
    ------
    IdentifiabilityError
        If Gamma_n vanishes (e.g. a single repeated curve), in which case the
        moment equation Delta = rho Gamma leaves rho unidentified.
    """
    n = len(sample)
    if n < 3:
        raise ValueError("estimation needs at least 3 curves")
    V = sample.values
    scale = float(np.abs(V).max())
    if scale == 0.0 or np.ptp(V, axis=0).max() <= 1e-12 * scale:
        raise IdentifiabilityError(
            "all curves are equal: the centered covariance vanishes, ker Gamma_n is the whole "
            "space and rho is not identifiable from Delta = rho Gamma")
    mom = compute_moments(sample, lags=(1,), center=center)
    eig = functional_pca(mom.cov)
    npos = positive_count(eig.eigenvalues)
    if npos == 0 or eig.eigenvalues[0] <= 1e-24 * scale**2:
        raise IdentifiabilityError(
            "empirical covariance is zero: ker Gamma_n is the whole space, so rho is "
            "not identifiable from Delta = rho Gamma (are all curves identical?)")
    if scheme is None:
        scheme = RegScheme.cutoff(cutoff_schedule(n, max_k=npos))
    elif clip and scheme.kind == "cutoff" and scheme.k > npos:
        scheme = RegScheme.cutoff(npos)
    ginv = reg_inverse(eig, scheme)
    rho_hat = mom.delta @ ginv.operator
    rank = scheme.k if scheme.kind == "cutoff" else npos
    return ArhEstimate(rho_hat, scheme, eig, rank, mom, n, ginv.bound)


def predict(est: ArhEstimate, x):
    """One-step predictor m + rho_hat(x - m) for a curve or every curve of a sample."""
    mu = est.mean.values
    if isinstance(x, Sample):
        _check_grid(est.grid, x.grid)
        return Sample(est.grid, mu + (x.values - mu) @ est.rho_hat.action.T)
    _check_grid(est.grid, x.grid)
    return Curve(est.grid, mu + est.rho_hat.action @ (x.values - mu))


@dataclass(frozen=True, eq=False)
class ResidualSeries:
    """eps_hat_k = X_k - rho_hat(X_{k-1}) for k = 2..n."""

    values: Sample

    def __len__(self):
        return len(self.values)


def residuals(est: ArhEstimate, sample: Sample) -> ResidualSeries:
    if len(sample) < 2:
        raise ValueError("need at least two curves")
    pred = predict(est, sample[:-1])
    return ResidualSeries(Sample(sample.grid, sample.values[1:] - pred.values))


@dataclass(frozen=True, eq=False)
class CvReport:
    candidates: list
    mse: np.ndarray
    selected: RegScheme
    folds: list
    effective: list = field(default_factory=list)

    def table(self) -> list[dict]:
        return [{"scheme": str(c), "mse": float(e)} for c, e in zip(self.candidates, self.mse)]

    def to_dict(self) -> dict:
        return {
            "selected": str(self.selected),
            "table": self.table(),
            "folds": [{"train_end": a, "target": b} for a, b in self.folds],
        }


def _fit_from_eigen(mom: MomentSet, eig: EigenSystem, scheme: RegScheme) -> OperatorMatrix:
    return mom.delta @ reg_inverse(eig, scheme).operator


def cross_validate(sample: Sample, candidates: Sequence[RegScheme], origin: float = 0.75,
                   center: bool = True, tol: float = 1e-12, targets=None, observe=None) -> CvReport:
    """Rolling-origin one-step cross-validation of regularization schemes.

    For each target index t past ``floor(origin * n)``, every candidate is fit
    on X_1..X_{t-1} and used to predict X_t from X_{t-1}; squared L2 errors are
    averaged.  A cut-off rank larger than the training sample supports is
    lowered to the largest admissible value for that fold.  Ties (within
    ``tol`` relative) go to the most regularized candidate.

    With ``targets`` (one row per curve) and ``observe`` (maps predicted grid
    values to a target row), errors are mean squares over the target points
    instead of L2 norms; this scores smoothed fits against raw observations.
    """
    cands = list(candidates)
    if not cands:
        raise ValueError("no candidate schemes")
    n = len(sample)
    start = max(int(math.floor(origin * n)), 3)
    if n - start < 5:
        raise ValueError(f"only {n - start} evaluation points after the origin; need >= 5")
    w = sample.grid.weights
    if (targets is None) != (observe is None):
        raise ValueError("targets and observe must be given together")
    if targets is not None:
        targets = np.asarray(targets, dtype=float)
        if targets.shape[0] != n:
            raise ValueError("need one target row per curve")
    sq = np.zeros(len(cands))
    folds, effective = [], []
    for t in range(start, n):
        train = sample[:t]
        mom = compute_moments(train, lags=(1,), center=center)
        eig = functional_pca(mom.cov)
        npos = positive_count(eig.eigenvalues)
        if npos == 0:
            raise IdentifiabilityError("training window has zero covariance")
        mu = mom.mean.values
        x_prev = sample.values[t - 1] - mu
        used = []
        for j, s in enumerate(cands):
            if s.kind == "cutoff" and s.k > npos:
                s = RegScheme.cutoff(npos)
            used.append(str(s))
            rho = _fit_from_eigen(mom, eig, s)
            pred = mu + rho.action @ x_prev
            if targets is None:
                err = sample.values[t] - pred
                sq[j] += float(np.dot(w * err, err))
            else:
                err = targets[t] - observe(pred)
                sq[j] += float(np.mean(err**2))
        folds.append((t, t))
        effective.append(used)
    mse = sq / (n - start)
    best = mse.min()
    tied = [i for i in range(len(cands)) if mse[i] <= best + tol * max(abs(best), 1e-300)]
    pick = min(tied, key=lambda i: (cands[i].regularization_order(), i))
    return CvReport(cands, mse, cands[pick], folds, effective)


@dataclass(frozen=True, eq=False)
class CusumResult:
    partial_sums: Sample
    bridge_norms: np.ndarray
    max_cusum: float
    argmax: int


def changepoint_statistic(res: ResidualSeries) -> CusumResult:
    """Bridge-normalized partial sums of residual curves.

    S(j) = sum_{k<=j} eps_hat_k and ``max_j ||S(j) - (j/N) S(N)|| / sqrt(N)``
    with N the number of residuals.
    """
    R = res.values
    N = len(R)
    if N < 2:
        raise ValueError("need at least two residuals")
    S = np.cumsum(R.values, axis=0)
    j = np.arange(1, N + 1)[:, None]
    B = S - (j / N) * S[-1]
    norms = np.sqrt(np.clip((B**2) @ R.grid.weights, 0.0, None)) / math.sqrt(N)
    i = int(np.argmax(norms))
    return CusumResult(Sample(R.grid, S), norms, float(norms[i]), i + 1)


def cusum_of_sample(sample: Sample, scheme: RegScheme | None = None, center: bool = True) -> float:
    est = estimate_rho(sample, scheme, center=center, clip=True)
    return changepoint_statistic(residuals(est, sample)).max_cusum


def null_distribution(spec: ArhSpec, n: int, reps: int, seed: int,
                      scheme: RegScheme | None = None, center: bool = True) -> np.ndarray:
    """Monte Carlo distribution of ``max_cusum`` under a constant-operator ARH(1)."""
    out = np.empty(reps)
    for r in range(reps):
        proc = simulate_arh1(spec, n, rng=substream(seed, r))
        out[r] = cusum_of_sample(proc.sample, scheme, center)
    return out


@dataclass(frozen=True, eq=False)
class ChangepointTest:
    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    null: np.ndarray
    cusum: CusumResult
    estimate: ArhEstimate

    def to_dict(self) -> dict:
        return {
            "max_cusum": self.statistic,
            "argmax": self.cusum.argmax,
            "critical_value_95": self.critical_value,
            "p_value": self.p_value,
            "reject_at_5pct": self.reject,
            "null_replications": int(self.null.size),
        }


def changepoint_test(sample: Sample, scheme: RegScheme | None = None, reps: int = 500,
                     seed: int = 0, center: bool = True, level: float = 0.05) -> ChangepointTest:
    """Partial-sum test calibrated by simulating from the fitted null (rho_hat, Gamma_eps_hat)."""
    est = estimate_rho(sample, scheme, center=center, clip=True)
    res = residuals(est, sample)
    cus = changepoint_statistic(res)
    rho = est.rho_hat
    if not stationarity_check(rho).passed:
        raise ValueError("fitted operator is not stationary; cannot simulate the null")
    noise = NoiseSpec.from_operator(empirical_cov(res.values, 0, center=True), seed)
    null = null_distribution(ArhSpec(rho, noise), len(sample), reps, seed, est.scheme, center)
    crit = float(np.quantile(null, 1 - level))
    p = float((1 + np.sum(null >= cus.max_cusum)) / (reps + 1))
    return ChangepointTest(cus.max_cusum, crit, p, cus.max_cusum > crit, null, cus, est)


@dataclass(frozen=True, eq=False)
class PredictorCltResult:
    errors: Sample
    empirical_cov: OperatorMatrix
    gamma_eps: OperatorMatrix
    hs_relative_error: float
    k: int
    leading_scores: np.ndarray
    normality_pvalues: np.ndarray

    def to_dict(self) -> dict:
        return {
            "k_n": self.k,
            "reps": len(self.errors),
            "hs_relative_error": self.hs_relative_error,
            "leading_score_variances": [float(v) for v in self.leading_scores.var(axis=0)],
            "normality_pvalues": [float(p) for p in self.normality_pvalues],
        }


def predictor_clt_experiment(spec: ArhSpec, n: int, reps: int, seed: int = 0, c: float = 1.0,
                             k: int | None = None, center: bool = False,
                             directions: int = 3) -> PredictorCltResult:
    """Scaled prediction errors sqrt(n/k)(rho_hat(X_{n+1}) - rho Pi_k(X_{n+1})).

    Each replication simulates n + 1 curves, fits on the first n with the
    cut-off ``k`` (``cutoff_schedule(n, c)`` by default) and evaluates the
    error at X_{n+1}.  The empirical covariance of the errors (mean zero is
    known) is compared with Gamma_eps in relative HS distance.
    """
    kn = cutoff_schedule(n, c) if k is None else int(k)
    grid = spec.noise.grid
    errs = np.empty((reps, grid.size))
    rho = spec.rho
    for r in range(reps):
        proc = simulate_arh1(spec, n + 1, rng=substream(seed, r))
        sample, x_next = proc.sample[:n], proc.sample[n]
        est = estimate_rho(sample, RegScheme.cutoff(kn), center=center)
        proj = est.projector().apply(x_next)
        diff = est.rho_hat.apply(x_next - est.mean) - rho.apply(proj) if center else \
            est.rho_hat.apply(x_next) - rho.apply(proj)
        errs[r] = math.sqrt(n / kn) * diff.values
    E = Sample(grid, errs)
    C = OperatorMatrix(grid, errs.T @ errs / reps)
    G = spec.noise.covariance()
    rel = (C - G).hs_norm() / G.hs_norm()
    basis = spec.noise.eigenfunctions.values[:directions]
    scores = (errs * grid.weights) @ basis.T
    pvals = np.array([stats.shapiro(scores[:, j]).pvalue for j in range(scores.shape[1])])
    return PredictorCltResult(E, C, G, float(rel), kn, scores, pvals)


def companion_embed(sample: Sample, p: int) -> Sample:
    """Y_k = (X_k, X_{k-1}, ..., X_{k-p+1}) on the p-fold product grid, k = p..n."""
    n = len(sample)
    if p < 1:
        raise ValueError("order must be >= 1")
    if n < p + 2:
        raise ValueError(f"need at least {p + 2} curves for order {p}")
    if p == 1:
        return sample
    X = sample.values
    Y = np.hstack([X[p - 1 - i : n - i] for i in range(p)])
    return Sample(sample.grid.product(p), Y)


def companion_unembed(embedded: Sample, p: int) -> Sample:
    """Recover X_1..X_n from the stacked curves."""
    if p == 1:
        return embedded
    base = embedded.grid.base
    m = base.size
    Y = embedded.values
    head = [Y[0, (p - 1 - i) * m : (p - i) * m] for i in range(p - 1)]
    return Sample(base, np.vstack(head + [Y[:, :m]]) if head else Y[:, :m])


def companion_blocks(op: OperatorMatrix, p: int) -> list[list[OperatorMatrix]]:
    """Split an operator on a p-fold product grid into its p x p block operators."""
    base = op.grid.base
    m = base.size
    K = op.kernel
    return [[OperatorMatrix(base, K[i * m : (i + 1) * m, j * m : (j + 1) * m]) for j in range(p)]
            for i in range(p)]


def estimate_arh_p(sample: Sample, p: int, scheme: RegScheme | None = None,
                   center: bool = True) -> tuple[list[OperatorMatrix], ArhEstimate]:
    """Fit ARH(p) through the ARH(1) pipeline on the companion embedding.

    Returns the first block row (rho_1, ..., rho_p) and the companion estimate.
    """
    emb = companion_embed(sample, p)
    est = estimate_rho(emb, scheme, center=center)
    if p == 1:
        return [est.rho_hat], est
    return companion_blocks(est.rho_hat, p)[0], est
