import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fxlab import synthetic  # noqa: E402
from fxlab.market_data import write_csv  # noqa: E402

INSTRUMENTS = ("EURUSD", "USDJPY", "EURJPY")
GRANULARITIES = ("H1", "H2", "H4", "H8", "H12", "D1")


def write_fixture_dir(path: Path, n: int = 300, seed: int = 0) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    for i, inst in enumerate(INSTRUMENTS):
        for j, gran in enumerate(GRANULARITIES):
            series = synthetic.random_walk(n, seed + 10 * i + j, inst, gran)
            write_csv(series, path / f"{inst}-{gran}.csv")
    return path


@pytest.fixture
def fixture_dir(tmp_path):
    return write_fixture_dir(tmp_path / "data")


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
