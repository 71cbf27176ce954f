import json
import os

import numpy as np
import pytest

from arhlab import io as aio
from arhlab.hilbert import Grid, OperatorMatrix, Sample


@pytest.fixture
def sample(rng):
    return Sample(Grid.uniform(11), rng.normal(size=(4, 11)))


class TestCsv:
    def test_sample_round_trip_exact(self, tmp_path, sample):
        path = aio.write_sample(tmp_path / "s.csv", sample)
        back = aio.read_sample(path)
        np.testing.assert_array_equal(back.values, sample.values)
        assert back.grid.same_as(sample.grid)
        assert (tmp_path / "s.grid.csv").exists()
        assert path.read_text().splitlines()[0] == ",".join(f"t{i}" for i in range(11))

    def test_nonuniform_grid_sidecar(self, tmp_path):
        g = Grid.from_points(np.array([0.0, 0.1, 0.5, 1.0]))
        aio.write_sample(tmp_path / "s.csv", Sample(g, np.ones((2, 4))))
        back = aio.read_sample(tmp_path / "s.csv")
        np.testing.assert_array_equal(back.grid.points, g.points)

    def test_product_grid_sidecar(self, tmp_path):
        g = Grid.product(Grid.uniform(5), 2)
        aio.write_sample(tmp_path / "s.csv", Sample(g, np.ones((1, 10))))
        assert aio.read_grid(tmp_path / "s.grid.csv").blocks == 2

    def test_missing_sidecar_defaults_to_uniform(self, tmp_path):
        (tmp_path / "s.csv").write_text("t0,t1,t2\n1,2,3\n")
        back = aio.read_sample(tmp_path / "s.csv")
        np.testing.assert_array_equal(back.grid.points, [0.0, 0.5, 1.0])

    def test_operator_round_trip(self, tmp_path, rng):
        g = Grid.uniform(7)
        op = OperatorMatrix(g, rng.normal(size=(7, 7)))
        back = aio.read_operator(aio.write_operator(tmp_path / "op.csv", op))
        np.testing.assert_array_equal(back.kernel, op.kernel)

    def test_operator_must_be_square(self, tmp_path):
        (tmp_path / "op.csv").write_text("t0,t1,t2\n1,2,3\n")
        with pytest.raises(ValueError, match="square"):
            aio.read_operator(tmp_path / "op.csv")

    @pytest.mark.parametrize("text,match", [
        ("a,b\n1,2\n", "header"),
        ("t0,t1\n1\n", "row 2"),
        ("t0,t1\n1,x\n", "not numeric"),
        ("t0,t1\n1,nan\n", "non-finite"),
        ("", "empty"),
    ])
    def test_malformed(self, tmp_path, text, match):
        (tmp_path / "bad.csv").write_text(text)
        with pytest.raises(ValueError, match=match):
            aio.read_sample(tmp_path / "bad.csv")

    def test_long_csv(self, tmp_path):
        aio.write_long_csv(tmp_path / "l.csv", {"a": ([0, 1], [2, 3]), "b": ([0], [5])})
        lines = (tmp_path / "l.csv").read_text().splitlines()
        assert lines == ["series,t,value", "a,0.0,2.0", "a,1.0,3.0", "b,0.0,5.0"]


class TestAtomic:
    def test_no_temp_left(self, tmp_path):
        aio.atomic_write(tmp_path / "x.txt", "hello")
        assert os.listdir(tmp_path) == ["x.txt"]

    def test_failed_write_keeps_old_file(self, tmp_path):
        target = tmp_path / "x.txt"
        target.write_text("old")
        with pytest.raises(TypeError):
            aio.atomic_write(target, 12)
        assert target.read_text() == "old"
        assert os.listdir(tmp_path) == ["x.txt"]

    def test_bytes(self, tmp_path):
        aio.atomic_write(tmp_path / "b.bin", b"\x00\x01")
        assert (tmp_path / "b.bin").read_bytes() == b"\x00\x01"


class TestJson:
    def test_cleaning(self):
        obj = {"a": np.float64(1.5), "b": np.arange(3), "c": float("nan"), 2: np.int64(4)}
        assert json.loads(aio.to_json(obj)) == {"a": 1.5, "b": [0, 1, 2], "c": None, "2": 4}

    def test_sorted_and_stable(self):
        assert aio.to_json({"b": 1, "a": 2}) == aio.to_json({"a": 2, "b": 1})

    def test_manifest(self, tmp_path):
        inp = tmp_path / "in.csv"
        inp.write_text("t0\n1\n")
        out = tmp_path / "run"
        out.mkdir()
        f = aio.write_json(out / "r.json", {"x": 1})
        aio.write_manifest(out, "estimate", {"seed": 3}, [inp], [f])
        man = aio.read_json(out / "manifest.json")
        assert man["schema_version"] == aio.SCHEMA_VERSION
        assert man["command"] == "estimate" and man["parameters"] == {"seed": 3}
        assert man["inputs"] == {str(inp): aio.sha256_file(inp)}
        assert man["outputs"] == ["r.json"]
