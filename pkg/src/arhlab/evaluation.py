"""Forecast accuracy criteria and the El Nino one-year-ahead pipeline."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .arh import cross_validate, estimate_rho, predict
from .datasets import (ScalarSeries, curve_at_months, ingest_monthly_csv, series_to_curves)
from .hilbert import Curve, Grid
from .moments import compute_moments, functional_pca
from .regularize import RegScheme, alpha_grid, cutoff_schedule, positive_count

#: reference errors of a seasonal ARIMA forecast of the same year (MSE, RMAE %)
SARIMA_REFERENCE = (1.457, 3.72)

RMAE_ZERO_TOL = 1e-9

PENALIZED_DEFAULTS = {"kind": "penalized", "dim": 8, "penalties": [10.0**e for e in range(-8, 1)]}


@dataclass(frozen=True, eq=False)
class EvalReport:
    mse: float
    rmae: float | None
    predictions: np.ndarray
    actuals: np.ndarray

    @property
    def rmae_defined(self) -> bool:
        return self.rmae is not None

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "rmae_percent": self.rmae,
            "rmae_defined": self.rmae_defined,
            "predictions": [float(v) for v in self.predictions],
            "actuals": [float(v) for v in self.actuals],
        }


def evaluate(pred, actual) -> EvalReport:
    """Mean squared error and relative mean absolute error (percent).

    The relative error divides by ``|actual|``; it is reported as undefined
    (``None``) when any actual value is within 1e-9 of zero.
    """
    p = np.asarray(pred.values if isinstance(pred, Curve) else pred, dtype=float)
    a = np.asarray(actual.values if isinstance(actual, Curve) else actual, dtype=float)
    if p.shape != (12,) or a.shape != (12,):
        raise ValueError(f"expected 12 evaluation points, got {p.shape} and {a.shape}")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(a))):
        raise ValueError("non-finite values in prediction or actuals")
    err = a - p
    mse = float(np.mean(err**2))
    if np.any(np.abs(a) < RMAE_ZERO_TOL):
        rmae = None
    else:
        rmae = float(100.0 * np.mean(np.abs(err) / np.abs(a)))
    return EvalReport(mse, rmae, p.copy(), a.copy())


DEFAULT_ELNINO = {
    "train_first": 1950,
    "train_last": 1985,
    "test_year": 1986,
    # 12 monthly values joined linearly: the trapezoid grid integrates exactly that curve
    "smoothing": "none",
    "grid": 101,
    "origin": 0.75,
    "center": True,
    "max_k": 8,
    "alpha_num": 20,
    "alpha_low": 1e-6,
}


def elnino_config(overrides: dict | None = None) -> dict:
    cfg = copy.deepcopy(DEFAULT_ELNINO)
    for key, val in (overrides or {}).items():
        if key not in cfg:
            raise ValueError(f"unknown El Nino option {key!r}")
        if key == "smoothing" and isinstance(val, dict):
            extra = set(val) - set(PENALIZED_DEFAULTS)
            if extra:
                raise ValueError(f"unknown smoothing option(s) {sorted(extra)}")
            cfg["smoothing"] = {**PENALIZED_DEFAULTS, **val}
        elif key == "smoothing" and val not in ("none", "penalized"):
            raise ValueError(f"smoothing must be 'none' or 'penalized', got {val!r}")
        elif key == "smoothing" and val == "penalized":
            cfg["smoothing"] = dict(PENALIZED_DEFAULTS)
        else:
            cfg[key] = val
    return cfg


@dataclass(eq=False)
class ElNinoResult:
    report: EvalReport
    prediction_curve: Curve
    train_curves: object
    last_curve: Curve
    penalty: float | None
    penalty_table: list = field(default_factory=list)
    cv: object = None
    config: dict = field(default_factory=dict)

    @property
    def n_train_curves(self) -> int:
        return len(self.train_curves)

    def to_dict(self) -> dict:
        sel = self.cv.selected
        return {
            "evaluation": self.report.to_dict(),
            "selected_scheme": sel.to_dict(),
            "selected_penalty": self.penalty,
            "penalty_cv": self.penalty_table,
            "scheme_cv": self.cv.table(),
            "n_train_curves": self.n_train_curves,
            "train_years": [self.config["train_first"], self.config["train_last"]],
            "test_year": self.config["test_year"],
            "sarima_reference": {"mse": SARIMA_REFERENCE[0], "rmae_percent": SARIMA_REFERENCE[1]},
            "config": self.config,
        }


def _curves(series: ScalarSeries, smoothing, grid_m: int, penalty=None):
    if smoothing == "none" or smoothing is None:
        return series_to_curves(series, "none")
    spec = {"kind": "penalized", "dim": smoothing.get("dim", 8), "penalty": penalty}
    return series_to_curves(series, spec, Grid.uniform(grid_m))


def scheme_candidates(eigenvalues, max_k: int, num: int = 20, low: float = 1e-6) -> list[RegScheme]:
    """Cut-off ranks 1..K and logarithmic penalized / Tikhonov alpha grids."""
    npos = positive_count(eigenvalues)
    if npos == 0:
        raise ValueError("training covariance is zero")
    lam1 = float(eigenvalues[0])
    out = [RegScheme.cutoff(k) for k in range(1, min(max_k, npos) + 1)]
    out += [RegScheme.penalized(float(a)) for a in alpha_grid(lam1, num, low)]
    out += [RegScheme.tikhonov(float(a)) for a in alpha_grid(lam1, num, low)]
    return out


def elnino_pipeline(path=None, config: dict | None = None, series: ScalarSeries | None = None
                    ) -> ElNinoResult:
    """Fit on the training years, predict the test year and score it.

    Only the training years enter smoothing-penalty selection, scheme
    selection and the final fit; the test year is used solely for scoring.
    """
    cfg = elnino_config(config)
    if series is None:
        if path is None:
            raise ValueError("give a data path or a series")
        series = ingest_monthly_csv(path)
    first, last, test = cfg["train_first"], cfg["train_last"], cfg["test_year"]
    if test != last + 1:
        raise ValueError("test year must directly follow the training years")
    train = series.select_years(first, last)
    n_years = last - first + 1
    if len(train) != 12 * n_years:
        raise ValueError(f"insufficient years: need complete {first}-{last}, have {len(train) // 12}")
    actual = series.year_values(test)
    raw = train.values.reshape(n_years, 12)
    if n_years < 8:
        raise ValueError("insufficient years: need at least 8 training years")

    smoothing = cfg["smoothing"]
    origin, center = cfg["origin"], cfg["center"]
    grid_m = int(cfg["grid"])

    def observe_for(sample):
        if sample.grid.size == 12:
            return lambda v: v
        return lambda v: curve_at_months(v, sample.grid)

    base = RegScheme.cutoff(cutoff_schedule(n_years))
    penalty, table = None, []
    if smoothing != "none" and smoothing is not None:
        best = None
        for pen in smoothing["penalties"]:
            curves = _curves(train, smoothing, grid_m, float(pen))
            rep = cross_validate(curves, [base], origin, center, targets=raw,
                                 observe=observe_for(curves))
            score = float(rep.mse[0])
            table.append({"penalty": float(pen), "mse": score})
            # ties go to the smoother fit
            if best is None or score <= best[0] * (1 + 1e-12):
                best = (score, float(pen))
        penalty = best[1]
    curves = _curves(train, smoothing, grid_m, penalty)
    eig = functional_pca(compute_moments(curves, center=center).cov)
    cands = scheme_candidates(eig.eigenvalues, int(cfg["max_k"]), int(cfg["alpha_num"]),
                              float(cfg["alpha_low"]))
    cv = cross_validate(curves, cands, origin, center, targets=raw, observe=observe_for(curves))
    est = estimate_rho(curves, cv.selected, center=center)
    last_curve = curves[len(curves) - 1]
    pred_curve = predict(est, last_curve)
    pred = observe_for(curves)(pred_curve.values)
    report = evaluate(pred, actual)
    if not all(math.isfinite(v) for v in report.predictions):
        raise ValueError("non-finite prediction")
    return ElNinoResult(report, pred_curve, curves, last_curve, penalty, table, cv, cfg)
