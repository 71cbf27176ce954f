import numpy as np
import pytest

from arhlab.datasets import bundled_elnino_path, ingest_monthly_csv
from arhlab.evaluation import (SARIMA_REFERENCE, elnino_config, elnino_pipeline, evaluate,
                               scheme_candidates)
from arhlab.hilbert import Curve, Grid
from arhlab.io import to_json


@pytest.fixture(scope="module")
def elnino():
    return ingest_monthly_csv(bundled_elnino_path())


@pytest.fixture(scope="module")
def result(elnino):
    return elnino_pipeline(series=elnino)


class TestEvaluate:
    def test_perfect_prediction(self):
        a = np.linspace(20, 26, 12)
        rep = evaluate(a, a)
        assert rep.mse == 0.0 and rep.rmae == 0.0

    def test_constant_offset(self):
        a = np.full(12, 10.0)
        rep = evaluate(a + 1, a)
        assert rep.mse == pytest.approx(1.0, abs=1e-12)
        assert rep.rmae == pytest.approx(10.0, abs=1e-12)

    def test_accepts_curves(self):
        g = Grid.uniform(12)
        rep = evaluate(Curve(g, np.full(12, 9.0)), Curve(g, np.full(12, 10.0)))
        assert rep.rmae == pytest.approx(10.0)

    def test_rmae_uses_absolute_actual(self):
        rep = evaluate(np.full(12, -9.0), np.full(12, -10.0))
        assert rep.rmae == pytest.approx(10.0)

    def test_near_zero_actual_flags_rmae(self):
        a = np.full(12, 5.0)
        a[3] = 1e-12
        rep = evaluate(a + 0.5, a)
        assert rep.rmae is None and not rep.rmae_defined
        assert rep.mse == pytest.approx(0.25)

    def test_wrong_length(self):
        with pytest.raises(ValueError, match="12"):
            evaluate(np.zeros(11), np.zeros(11))

    def test_non_finite(self):
        p = np.zeros(12)
        p[0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            evaluate(p, np.ones(12))

    def test_recomputable_from_stored_values(self):
        rng = np.random.default_rng(3)
        a = 20 + rng.normal(size=12)
        rep = evaluate(a + rng.normal(size=12), a)
        d = rep.to_dict()
        p, x = np.array(d["predictions"]), np.array(d["actuals"])
        assert abs(np.mean((x - p) ** 2) - d["mse"]) <= 1e-12
        assert abs(100 * np.mean(np.abs(x - p) / np.abs(x)) - d["rmae_percent"]) <= 1e-12


class TestConfig:
    def test_defaults(self):
        cfg = elnino_config()
        assert cfg["smoothing"] == "none" and cfg["test_year"] == 1986

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown"):
            elnino_config({"horizon": 2})

    def test_penalized_shorthand(self):
        cfg = elnino_config({"smoothing": "penalized"})
        assert cfg["smoothing"]["kind"] == "penalized" and cfg["smoothing"]["dim"] == 8

    def test_bad_smoothing(self):
        with pytest.raises(ValueError, match="smoothing"):
            elnino_config({"smoothing": "wavelet"})
        with pytest.raises(ValueError, match="smoothing option"):
            elnino_config({"smoothing": {"knots": 4}})


class TestPipeline:
    def test_training_window(self, result):
        assert result.n_train_curves == 36
        assert result.config["train_last"] == 1985

    def test_prediction_shape(self, result):
        p = result.report.predictions
        assert p.shape == (12,) and np.all(np.isfinite(p))

    def test_actuals_are_test_year(self, result, elnino):
        np.testing.assert_array_equal(result.report.actuals, elnino.year_values(1986))

    def test_test_year_does_not_leak(self, elnino):
        # replacing the test year changes the score, never the forecast
        vals = elnino.values.copy()
        vals[elnino.years == 1986] += 5.0
        other = type(elnino)(elnino.years, elnino.months, vals)
        a = elnino_pipeline(series=elnino)
        b = elnino_pipeline(series=other)
        np.testing.assert_array_equal(a.report.predictions, b.report.predictions)
        assert b.report.mse != a.report.mse

    def test_deterministic_report(self, result, elnino):
        again = elnino_pipeline(series=elnino)
        assert to_json(again.to_dict()) == to_json(result.to_dict())

    def test_report_contents(self, result):
        d = result.to_dict()
        assert d["sarima_reference"] == {"mse": SARIMA_REFERENCE[0], "rmae_percent": SARIMA_REFERENCE[1]}
        assert d["n_train_curves"] == 36 and d["train_years"] == [1950, 1985]
        assert len(d["scheme_cv"]) > 1

    def test_penalized_option_runs(self, elnino):
        res = elnino_pipeline(series=elnino, config={"smoothing": {"penalties": [1e-6, 1e-2]}})
        assert res.penalty in (1e-6, 1e-2)
        assert res.train_curves.grid.size == 101
        assert len(res.penalty_table) == 2 and np.all(np.isfinite(res.report.predictions))

    def test_insufficient_years(self, elnino):
        with pytest.raises(ValueError, match="insufficient"):
            elnino_pipeline(series=elnino, config={"train_first": 1980})
        with pytest.raises(ValueError, match="insufficient"):
            elnino_pipeline(series=elnino.select_years(1960, 1986), config={"train_first": 1950})

    def test_requires_input(self):
        with pytest.raises(ValueError, match="path"):
            elnino_pipeline()


def test_scheme_candidates():
    c = scheme_candidates(np.array([4.0, 2.0, 1.0, 0.0]), max_k=8, num=5)
    names = [s.to_dict()["kind"] for s in c]
    assert names.count("cutoff") == 3
    assert names.count("penalized") == 5 and names.count("tikhonov") == 5
    with pytest.raises(ValueError):
        scheme_candidates(np.zeros(3), 4)
