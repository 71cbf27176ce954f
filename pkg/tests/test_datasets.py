import numpy as np
import pytest

from arhlab.datasets import (IngestError, PenalizedSpline, ScalarSeries, bundled_elnino_path,
                             ingest_monthly_csv, month_positions, series_to_curves)
from arhlab.hilbert import Grid


def write_rows(path, rows, header="year,month,value"):
    path.write_text(header + "\n" + "".join(f"{y},{m},{v}\n" for y, m, v in rows))
    return path


def year_rows(year, values):
    return [(year, m + 1, v) for m, v in enumerate(values)]


def series(values):
    values = np.asarray(values, dtype=float)
    years = 1950 + np.arange(values.size) // 12
    months = 1 + np.arange(values.size) % 12
    return ScalarSeries(years, months, values)


class TestIngest:
    def test_one_year(self, tmp_path):
        s = ingest_monthly_csv(write_rows(tmp_path / "a.csv", year_rows(1950, range(12))))
        assert len(s) == 12
        assert list(s.months) == list(range(1, 13))

    def test_gap_reported_at_row(self, tmp_path):
        rows = [r for r in year_rows(1950, range(12)) if r[1] != 6]
        with pytest.raises(IngestError) as exc:
            ingest_monthly_csv(write_rows(tmp_path / "a.csv", rows))
        # header is row 1, January row 2, so the row holding July is row 7
        assert exc.value.row == 7
        assert "1950-06" in str(exc.value)

    def test_duplicate_rejected(self, tmp_path):
        rows = year_rows(1950, range(12))
        rows.insert(3, rows[2])
        with pytest.raises(IngestError, match="duplicate") as exc:
            ingest_monthly_csv(write_rows(tmp_path / "a.csv", rows))
        assert exc.value.row == 5

    def test_unparsable_rejected(self, tmp_path):
        rows = year_rows(1950, range(12))
        rows[4] = (1950, 5, "n/a")
        with pytest.raises(IngestError) as exc:
            ingest_monthly_csv(write_rows(tmp_path / "a.csv", rows))
        assert exc.value.row == 6

    def test_bad_header(self, tmp_path):
        with pytest.raises(IngestError, match="header"):
            ingest_monthly_csv(write_rows(tmp_path / "a.csv", year_rows(1950, range(12)), "y,m,v"))

    def test_bundled_selection_length(self):
        s = ingest_monthly_csv(bundled_elnino_path()).select_years(1950, 1986)
        assert len(s) == 444
        assert (s.years[0], s.months[0], s.years[-1], s.months[-1]) == (1950, 1, 1986, 12)

    def test_data_dir_override(self, tmp_path, monkeypatch):
        write_rows(tmp_path / "elnino.csv", year_rows(1950, range(12)))
        monkeypatch.setenv("ARHLAB_DATA_DIR", str(tmp_path))
        assert bundled_elnino_path() == tmp_path / "elnino.csv"


class TestCurves:
    def test_partial_year_rejected(self):
        with pytest.raises(ValueError, match="whole"):
            series_to_curves(series(np.arange(18)))

    @pytest.mark.parametrize("smoothing", ["none", {"kind": "penalized", "dim": 8, "penalty": 1e-4}])
    def test_constant_year_constant_curve(self, smoothing):
        c = series_to_curves(series(np.full(12, 3.5)), smoothing)
        np.testing.assert_allclose(c.values, 3.5, atol=1e-10)

    def test_none_round_trip(self):
        vals = np.random.default_rng(1).normal(size=24)
        c = series_to_curves(series(vals), "none")
        assert c.grid.size == 12
        np.testing.assert_array_equal(c.values.ravel(), vals)

    def test_large_penalty_tends_to_ls_line(self):
        y = np.random.default_rng(2).normal(size=12) + np.linspace(0, 3, 12)
        grid = Grid.uniform(101)
        x = month_positions()
        slope, icpt = np.polyfit(x, y, 1)
        line = icpt + slope * grid.points
        dists = []
        for pen in [1e0, 1e1, 1e2, 1e3, 1e4, 1e10]:
            c = series_to_curves(series(y), {"kind": "penalized", "dim": 8, "penalty": pen}, grid)
            d = c.values[0] - line
            dists.append(float(np.sqrt(np.dot(grid.weights, d**2))))
        assert all(b < a for a, b in zip(dists, dists[1:]))
        assert dists[-1] < 1e-8 * dists[0]

    def test_zero_penalty_interpolates_polynomials(self):
        sm = PenalizedSpline(dim=8, penalty=0.0)
        x = month_positions()
        y = 1 + x - 2 * x**3
        np.testing.assert_allclose(sm.smoother(x, x) @ y, y, atol=1e-10)

    def test_unknown_smoothing(self):
        with pytest.raises(ValueError, match="unknown smoothing"):
            series_to_curves(series(np.zeros(12)), {"kind": "wavelet"})

    def test_spline_arguments_checked(self):
        with pytest.raises(ValueError):
            PenalizedSpline(dim=3)
        with pytest.raises(ValueError):
            PenalizedSpline(dim=13)
        with pytest.raises(ValueError):
            PenalizedSpline(penalty=-1.0)
