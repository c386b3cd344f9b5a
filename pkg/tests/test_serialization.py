"""
Tests for entrofunc serialization utilities.

Covers JSON conversion of numpy values, estimates and manifests, and the
byte-stable CSV tables written by experiments.
"""

import json
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from entrofunc.models import ConfidenceInterval, FunctionalOrder, PivotKind, SampleMode
from entrofunc.schemas import BernoulliProduct, RunManifest
from entrofunc.utils.serialization import safe_json_dumps, to_jsonable, write_csv, write_json


class TestToJsonable:
    """Test the main to_jsonable function."""

    def test_none_values(self):
        """Test handling of None values."""
        assert to_jsonable(None) is None

    def test_basic_types(self):
        """Test handling of basic JSON-serializable types."""
        assert to_jsonable("string") == "string"
        assert to_jsonable(42) == 42
        assert to_jsonable(True) is True

    def test_numpy_scalars(self):
        """Test handling of numpy scalar types."""
        assert to_jsonable(np.int64(42)) == 42
        assert to_jsonable(np.float64(3.14)) == pytest.approx(3.14)
        assert to_jsonable(np.bool_(True)) is True

    def test_special_values(self):
        """Test handling of NaN and infinity."""
        assert to_jsonable(np.nan) is None
        assert to_jsonable(float("inf")) == "Infinity"
        assert to_jsonable(-np.inf) == "-Infinity"

    def test_numpy_arrays(self):
        """Test handling of numpy arrays."""
        assert to_jsonable(np.array([[1, 2], [3, 4]])) == [[1, 2], [3, 4]]
        assert to_jsonable(np.array([])) == []
        assert to_jsonable(np.array(42)) == 42

    def test_enums_and_fractions(self):
        """Test handling of modes, pivots and exact oracle values."""
        assert to_jsonable(SampleMode.DISCRETE) == "discrete"
        assert to_jsonable(Fraction(4, 9)) == {"numerator": 4, "denominator": 9}

    def test_dataclasses(self):
        """Test handling of result dataclasses."""
        ci = ConfidenceInterval(
            center=1.0, lower=0.5, upper=1.5, level=0.95, pivot=PivotKind.EPSILON_BALL
        )
        assert to_jsonable(ci) == {
            "center": 1.0,
            "lower": 0.5,
            "upper": 1.5,
            "level": 0.95,
            "pivot": "epsilon-ball",
        }
        assert to_jsonable(FunctionalOrder(3, 0)) == {"r1": 3, "r2": 0}

    def test_pydantic_models_use_aliases(self):
        """Test handling of distribution specs."""
        assert to_jsonable(BernoulliProduct(dim=3, p=0.8)) == {
            "family": "bernoulliProduct",
            "dim": 3,
            "p": 0.8,
        }

    def test_paths_and_datetimes(self):
        """Test handling of Path and datetime objects."""
        assert to_jsonable(Path("/tmp/results")) == "/tmp/results"
        assert to_jsonable(datetime(2023, 1, 1, 12, 30)) == "2023-01-01T12:30:00"

    def test_nested_structures(self):
        """Test handling of nested dictionaries and lists."""
        data = {
            "numbers": [1, np.int32(2), np.float64(3.5)],
            "nested": {"array": np.array([1, 2, 3]), "nan_value": np.nan},
            "pair": (FunctionalOrder(1, 1), None),
        }
        assert to_jsonable(data) == {
            "numbers": [1, 2, 3.5],
            "nested": {"array": [1, 2, 3], "nan_value": None},
            "pair": [{"r1": 1, "r2": 1}, None],
        }

    def test_unknown_objects_warn(self):
        """Test fallback to str for unknown objects."""

        class Opaque:
            def __str__(self):
                return "opaque"

        with pytest.warns(UserWarning):
            assert to_jsonable(Opaque()) == "opaque"


class TestSafeJsonDumps:
    """Test the safe_json_dumps function."""

    def test_basic_serialization(self):
        """Test basic JSON serialization."""
        data = {"a": 1, "b": "test"}
        assert json.loads(safe_json_dumps(data)) == data

    def test_numpy_serialization(self):
        """Test serialization of numpy objects."""
        parsed = json.loads(
            safe_json_dumps({"array": np.array([1, 2, 3]), "scalar": np.int32(42), "nan": np.nan})
        )
        assert parsed == {"array": [1, 2, 3], "scalar": 42, "nan": None}

    def test_manifest(self, tmp_path):
        """Test writing a run manifest."""
        manifest = RunManifest(
            command="experiment",
            config={"name": "example1"},
            seed=20100601,
            tool_version="0.1.0",
            started_at=datetime(2024, 5, 1, tzinfo=timezone.utc),
            duration_seconds=1.5,
            outputs=["residuals.csv"],
        )
        path = write_json(tmp_path / "out" / "manifest.json", manifest)
        parsed = json.loads(path.read_text(encoding="utf-8"))
        assert parsed["seed"] == 20100601
        assert parsed["started_at"].startswith("2024-05-01T00:00:00")
        assert parsed["outputs"] == ["residuals.csv"]


class TestWriteCsv:
    """Test result tables."""

    def test_full_precision_and_lf(self, tmp_path):
        """Test 17 significant digits and LF line endings."""
        table = pd.DataFrame({"replication": [0, 1], "estimate": [0.1, 1 / 3]})
        path = write_csv(tmp_path / "residuals.csv", table)
        raw = path.read_bytes()
        assert b"\r\n" not in raw
        assert raw.decode("utf-8").splitlines() == [
            "replication,estimate",
            "0,0.10000000000000001",
            "1,0.33333333333333331",
        ]
        assert pd.read_csv(path)["estimate"].tolist() == [0.1, 1 / 3]

    def test_identical_tables_identical_bytes(self, tmp_path):
        """Test byte-identical output for identical tables."""
        table = pd.DataFrame({"x": np.random.default_rng(0).normal(size=20)})
        first = write_csv(tmp_path / "a.csv", table).read_bytes()
        second = write_csv(tmp_path / "b.csv", table.copy()).read_bytes()
        assert first == second
