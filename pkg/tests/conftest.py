import logging
from pathlib import Path

import pytest

from acarmichael.construct import ConstructionParams

SEVEN_BLOCKS = (3, 5, 7, 11, 13, 17, 19)


@pytest.fixture(autouse=True)
def isolated_logging():
    """Drop handlers a CLI run attached to the package logger."""
    yield
    root = logging.getLogger("acarmichael")
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.propagate = True


@pytest.fixture
def fixtures_dir():
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def relaxed_a1_params(fixtures_dir):
    return fixtures_dir / "relaxed_a1.params"


@pytest.fixture
def relaxed_minus1_params(fixtures_dir):
    return fixtures_dir / "relaxed_minus1.params"


@pytest.fixture
def strict_tiny_params(fixtures_dir):
    """Strict mode with y = 3, theta = 1.1: the Q range holds no prime."""
    return fixtures_dir / "strict_tiny.params"


@pytest.fixture
def unknown_key_params(fixtures_dir):
    return fixtures_dir / "unknown_key.params"


@pytest.fixture
def missing_equals_params(fixtures_dir):
    return fixtures_dir / "missing_equals.params"


@pytest.fixture
def relaxed_params():
    """Factory for desk-scale relaxed-mode parameters over seven prime blocks."""

    def _make(a: int, **overrides) -> ConstructionParams:
        values = dict(
            a=a,
            mode="relaxed",
            blocks=SEVEN_BLOCKS,
            k_cap=64,
            kprime_cap=500,
            max_slices=3,
            max_p_attempts=5,
        )
        values.update(overrides)
        return ConstructionParams(**values)

    return _make


@pytest.fixture
def write_params(tmp_path):
    def _write(text: str, name: str = "run.params") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
