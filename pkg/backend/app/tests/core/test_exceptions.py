# backend/app/tests/core/test_exceptions.py
import pytest

from app.core.exceptions import (
    ConfigError,
    ConfigMismatchError,
    DimensionError,
    DivergedError,
    FormatError,
    FormatVersionError,
    GenerationAbortedError,
    MetricError,
    NotFoundException,
    OutOfDomainError,
    TrainingDivergedError,
    UnisolverError,
)


@pytest.mark.parametrize("cls, default", [
    (DimensionError, "Dimension mismatch"),
    (ConfigError, "Invalid configuration"),
    (DivergedError, "Solver diverged"),
    (GenerationAbortedError, "Dataset generation aborted"),
    (TrainingDivergedError, "Training diverged"),
    (FormatError, "Malformed file"),
    (NotFoundException, "Resource not found"),
    (MetricError, "Metric undefined"),
    (OutOfDomainError, "Point outside the solution domain"),
])
def test_default_messages(cls, default):
    exc = cls()
    assert isinstance(exc, UnisolverError)
    assert exc.message == default
    assert str(exc) == default


def test_dimension_error_lists_shapes():
    exc = DimensionError("cannot add", shapes=[[2, 3], (4,)])
    assert exc.shapes == ((2, 3), (4,))
    assert exc.message == "cannot add (shapes: (2, 3), (4,))"


def test_mismatch_names_fields():
    exc = ConfigMismatchError(["alpha", "patch"])
    assert isinstance(exc, ConfigError)
    assert exc.fields == ["alpha", "patch"]
    assert "alpha, patch" in exc.message


def test_version_error():
    exc = FormatVersionError(3, "checkpoint")
    assert isinstance(exc, FormatError)
    assert exc.version == 3
    assert exc.message == "checkpoint format version 3 unsupported"


def test_diverged_context():
    exc = DivergedError("blow-up", step=12, time=0.25)
    assert (exc.step, exc.time) == (12, 0.25)
    assert TrainingDivergedError(checkpoint_path="runs/a.uckp").checkpoint_path == "runs/a.uckp"
