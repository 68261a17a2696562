import sys
from pathlib import Path

import hypothesis
import pytest

from tradebo import ParamDomain, SearchSpace

hypothesis.settings.register_profile("desk", deadline=None, max_examples=60)
hypothesis.settings.load_profile("desk")

TRAINER_DIR = Path(__file__).parent / "trainers"


def trainer_command(name: str) -> list[str]:
    """argv for one of the stub trainers shipped with the tests."""
    path = TRAINER_DIR / f"{name}.py"
    assert path.exists(), f"missing trainer stub {path}"
    return [sys.executable, str(path)]


@pytest.fixture
def mixed_space() -> SearchSpace:
    """One dimension of every kind, for encode/decode round-trips."""
    return SearchSpace(
        (
            ParamDomain.continuous("lr", 1e-4, 1.0, scale="log"),
            ParamDomain.continuous("momentum", 0.0, 1.0),
            ParamDomain.integer("layers", 1, 8),
            ParamDomain.categorical("cell", ("gru", "lstm", "rnn")),
            ParamDomain.fraction("train_fraction", (0.2, 0.4, 0.6, 0.8, 1.0)),
        )
    )
