"""Session fixtures for the acceptance gate.

The expensive piece is the shipped-profile benchmark grid (4 scenarios x
5 policies x 10 repetitions). The ordering, sublinearity, and determinism
criteria all consume it, so it runs once per session, twice back to back:
run A feeds the statistics, run B exists only for the byte-equality check.
"""

import time
from dataclasses import dataclass
from pathlib import Path

import pytest

from hopebandit.cli import main as cli_main

REPO_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG = REPO_ROOT / "configs" / "default.yaml"


@dataclass(frozen=True)
class GridRuns:
    out_a: Path
    out_b: Path
    seconds_a: float


@pytest.fixture(scope="session")
def grid_runs(tmp_path_factory) -> GridRuns:
    out_a = tmp_path_factory.mktemp("grid-a")
    out_b = tmp_path_factory.mktemp("grid-b")
    started = time.perf_counter()
    code_a = cli_main(["run", "--config", str(DEFAULT_CONFIG), "--out", str(out_a)])
    seconds_a = time.perf_counter() - started
    code_b = cli_main(["run", "--config", str(DEFAULT_CONFIG), "--out", str(out_b)])
    if code_a != 0 or code_b != 0:
        raise RuntimeError(f"grid runs failed with exit codes {code_a}, {code_b}")
    return GridRuns(out_a=out_a, out_b=out_b, seconds_a=seconds_a)
