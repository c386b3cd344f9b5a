"""Tests for the error taxonomy."""

import pickle

import pytest

from entrofunc.errors import (
    ConfigValidationError,
    ErrorCategory,
    InsufficientSampleError,
    InvalidArgumentError,
    UnsupportedPairError,
)


class TestErrorDetail:
    """Test error details and exit codes."""

    def test_context_and_suggestion(self):
        error = InsufficientSampleError("too few points", n1=2, r1=3)
        assert error.detail.category is ErrorCategory.SAMPLE_SIZE
        assert error.detail.code == "INSUFFICIENT_SAMPLE"
        assert error.detail.context == {"n1": 2, "r1": 3}
        assert error.detail.suggestion
        assert str(error) == "too few points"

    @pytest.mark.parametrize(
        "error, code",
        [
            (InvalidArgumentError("bad"), 2),
            (InsufficientSampleError("small"), 3),
            (ConfigValidationError("bad key", offending_keys=["experiment.n1"]), 4),
            (UnsupportedPairError("no oracle"), 5),
        ],
    )
    def test_exit_codes(self, error, code):
        assert error.exit_code == code

    def test_invalid_argument_is_value_error(self):
        with pytest.raises(ValueError):
            raise InvalidArgumentError("bad")


class TestPickling:
    """Errors raised in worker processes arrive intact."""

    def test_context_survives(self):
        error = pickle.loads(pickle.dumps(InsufficientSampleError("small", replication=4)))
        assert isinstance(error, InsufficientSampleError)
        assert error.detail.context == {"replication": 4}
        assert str(error) == "small"

    def test_offending_keys_survive(self):
        original = ConfigValidationError("bad", offending_keys=["dist_x.p"])
        error = pickle.loads(pickle.dumps(original))
        assert error.offending_keys == ["dist_x.p"]
        assert error.exit_code == 4
