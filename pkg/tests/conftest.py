import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from terrapath.bench import warm_up


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile/warm the kernels once so timed assertions stay stable."""
    warm_up()
