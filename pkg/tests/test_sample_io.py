"""Tests for sample file reading and writing."""

import numpy as np
import pytest

from entrofunc.errors import InputFileError
from entrofunc.models import Sample, SampleMode
from entrofunc.utils.sample_io import read_sample, write_sample


class TestReadSample:
    """Test CSV sample parsing."""

    def test_one_column(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("0\n0.1\n5\n", encoding="utf-8")
        sample = read_sample(path)
        assert sample.mode is SampleMode.CONTINUOUS
        assert sample.points.tolist() == [[0.0], [0.1], [5.0]]

    def test_header_detected(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1.5,2\n-3,4e-2\n", encoding="utf-8")
        sample = read_sample(path)
        assert sample.d == 2
        assert sample.points.tolist() == [[1.5, 2.0], [-3.0, 0.04]]

    def test_discrete(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1\n1\n2\n", encoding="utf-8")
        sample = read_sample(path, "discrete")
        assert sample.mode is SampleMode.DISCRETE
        assert sample.points.dtype == np.int64
        assert sample.points[:, 0].tolist() == [1, 1, 2]

    def test_discrete_rejects_fractions(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("1\n1.5\n", encoding="utf-8")
        with pytest.raises(InputFileError):
            read_sample(path, SampleMode.DISCRETE)

    @pytest.mark.parametrize(
        "content",
        ["1\nabc\n", "1,2\n3\n", "", "1\ninf\n"],
        ids=["non-numeric", "ragged", "empty", "infinite"],
    )
    def test_malformed(self, tmp_path, content):
        path = tmp_path / "x.csv"
        path.write_text(content, encoding="utf-8")
        with pytest.raises(InputFileError):
            read_sample(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFileError) as excinfo:
            read_sample(tmp_path / "nope.csv")
        assert excinfo.value.exit_code == 2


class TestWriteSample:
    """Test that written samples read back unchanged."""

    def test_continuous_round_trip(self, tmp_path):
        points = np.random.default_rng(0).normal(size=(25, 3))
        path = write_sample(tmp_path / "s.csv", Sample.continuous(points), header=True)
        np.testing.assert_array_equal(read_sample(path).points, points)

    def test_discrete_round_trip(self, tmp_path):
        points = np.array([[0, 1], [1, 1], [-2, 7]])
        path = write_sample(tmp_path / "s.csv", Sample.discrete(points))
        assert path.read_text(encoding="utf-8") == "0,1\n1,1\n-2,7\n"
        np.testing.assert_array_equal(read_sample(path, "discrete").points, points)
