import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from certdec import cli, config  # noqa: E402


@pytest.fixture
def shipped():
    """Load a shipped config by file stem, with optional key=value overrides."""

    def load(name, *overrides):
        return config.load(cli.resolve_config(name), overrides)

    return load
