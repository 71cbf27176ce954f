"""Monthly series ingestion and conversion to yearly curves."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import BSpline

from .hilbert import Grid, Sample

MONTHLY_HEADER = ("year", "month", "value")
BUNDLED_ELNINO = "elnino_nino12.csv"


class IngestError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


@dataclass(frozen=True, eq=False)
class ScalarSeries:
    years: np.ndarray
    months: np.ndarray
    values: np.ndarray

    def __len__(self):
        return self.values.size

    def select_years(self, first: int, last: int) -> "ScalarSeries":
        keep = (self.years >= first) & (self.years <= last)
        return ScalarSeries(self.years[keep], self.months[keep], self.values[keep])

    def year_values(self, year: int) -> np.ndarray:
        keep = self.years == year
        if keep.sum() != 12:
            raise ValueError(f"year {year} is not complete in the series")
        return self.values[keep]


def ingest_monthly_csv(path) -> ScalarSeries:
    """Read a ``year,month,value`` CSV with strictly consecutive months.

    Gaps, duplicates and unparsable rows are rejected with the (1-based,
    header = row 1) row number.
    """
    years, months, values = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty file") from None
        if tuple(h.strip().lower() for h in header) != MONTHLY_HEADER:
            raise IngestError(f"expected header {','.join(MONTHLY_HEADER)}", 1)
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise IngestError(f"expected 3 fields, got {len(row)}", rowno)
            try:
                y, mth, v = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise IngestError(f"cannot parse {row!r}", rowno) from None
            if not 1 <= mth <= 12:
                raise IngestError(f"month {mth} out of range", rowno)
            if not np.isfinite(v):
                raise IngestError("non-finite value", rowno)
            if years:
                py, pm = years[-1], months[-1]
                expect = (py, pm + 1) if pm < 12 else (py + 1, 1)
                if (y, mth) == (py, pm):
                    raise IngestError(f"duplicate entry {y}-{mth:02d}", rowno)
                if (y, mth) != expect:
                    raise IngestError(
                        f"gap: expected {expect[0]}-{expect[1]:02d}, found {y}-{mth:02d}", rowno)
            years.append(y)
            months.append(mth)
            values.append(v)
    if not values:
        raise IngestError("no data rows")
    return ScalarSeries(np.array(years), np.array(months), np.array(values))


def bundled_elnino_path() -> Path:
    """Location of the El Nino data file.

    ``$ARHLAB_DATA_DIR/elnino.csv`` takes precedence over the copy shipped
    with the package (monthly Nino 1+2 SST, 1950-2010, from NOAA).
    """
    env = os.environ.get("ARHLAB_DATA_DIR")
    if env:
        p = Path(env) / "elnino.csv"
        if p.exists():
            return p
    return Path(str(resources.files("arhlab") / "data" / BUNDLED_ELNINO))


class PenalizedSpline:
    """Cubic B-spline regression with a roughness penalty lambda * int f''^2.

    The basis has ``dim`` functions with equally spaced interior knots on
    [0, 1].  Constants and straight lines carry no penalty, so a very large
    ``penalty`` gives the least-squares line.
    """

    def __init__(self, dim: int = 8, penalty: float = 1e-4, degree: int = 3):
        if dim < degree + 1:
            raise ValueError(f"dim must be at least {degree + 1}")
        if dim > 12:
            raise ValueError("dim must not exceed the 12 monthly observations")
        if penalty < 0:
            raise ValueError("penalty must be nonnegative")
        self.dim, self.penalty, self.degree = dim, penalty, degree
        n_inner = dim - degree - 1
        inner = np.linspace(0, 1, n_inner + 2)[1:-1]
        self.knots = np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])
        self._omega = self._roughness()

    def basis(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        return BSpline.design_matrix(x, self.knots, self.degree).toarray()

    def _roughness(self) -> np.ndarray:
        # B'' is piecewise polynomial of degree (degree-2): Gauss-Legendre per knot span is exact
        xs, ws = np.polynomial.legendre.leggauss(self.degree)
        brk = np.unique(self.knots)
        om = np.zeros((self.dim, self.dim))
        eye = np.eye(self.dim)
        d2 = [BSpline(self.knots, eye[i], self.degree).derivative(2) for i in range(self.dim)]
        for a, b in zip(brk[:-1], brk[1:]):
            pts = 0.5 * (b - a) * xs + 0.5 * (a + b)
            vals = np.array([f(pts) for f in d2])
            om += (vals * (0.5 * (b - a) * ws)) @ vals.T
        return om

    def smoother(self, x_obs, x_out) -> np.ndarray:
        """Linear map from observations at ``x_obs`` to fitted values at ``x_out``."""
        B = self.basis(x_obs)
        # Demmler-Reinsch form: the penalty null space (affine functions) stays exact for any penalty
        L = np.linalg.cholesky(B.T @ B)
        Li = np.linalg.solve(L, np.eye(self.dim))
        s, U = np.linalg.eigh(Li @ self._omega @ Li.T)
        s[s < 1e-10 * s.max()] = 0.0
        shrink = 1.0 / (1.0 + self.penalty * s)
        coef_map = Li.T @ U @ (shrink[:, None] * (U.T @ Li @ B.T))
        return self.basis(x_out) @ coef_map


def series_to_curves(series: ScalarSeries, smoothing: str | dict = "none", grid: Grid | None = None
                     ) -> Sample:
    """One curve per calendar year (January to December).

    ``smoothing="none"`` keeps the 12 monthly values on a 12-point grid.  A dict
    ``{"kind": "penalized", "dim": 8, "penalty": 1e-4}`` projects each year on a
    penalized cubic B-spline basis and evaluates it on ``grid`` (101 points by
    default).
    """
    if len(series) % 12 or series.months[0] != 1:
        raise ValueError("series must consist of whole January-December years")
    Y = series.values.reshape(-1, 12)
    if smoothing == "none" or smoothing is None:
        return Sample(Grid.uniform(12), Y)
    spec = dict(smoothing)
    kind = spec.pop("kind", "penalized")
    if kind != "penalized":
        raise ValueError(f"unknown smoothing {kind!r}")
    grid = grid or Grid.uniform(101)
    sm = PenalizedSpline(spec.get("dim", 8), spec.get("penalty", 1e-4))
    S = sm.smoother(month_positions(), grid.points)
    return Sample(grid, Y @ S.T)


def month_positions() -> np.ndarray:
    """Positions of the 12 months on [0, 1]."""
    return np.linspace(0.0, 1.0, 12)


def curve_at_months(values, grid: Grid) -> np.ndarray:
    """Evaluate grid values at the month positions by linear interpolation."""
    return np.interp(month_positions(), grid.points, np.asarray(values))
