from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from frugal_judge.schema import CueGroup, CueSpec, ScaleKind, read_csv, validate_dataset

FIXTURES = Path(__file__).parent / "fixtures"


def small_schema(k: int, binary: tuple[int, ...] = ()) -> tuple[CueSpec, ...]:
    return tuple(
        CueSpec(f"c{j}", f"cue {j}", CueGroup.PROJECT, ScaleKind.BINARY if j in binary else ScaleKind.ORDINAL5)
        for j in range(k)
    )


def make_dataset(X, y, schema=None, roles=None, referees=None):
    """Dataset from a score matrix and 0/1 labels (overall 5 or 3)."""
    X = np.asarray(X, dtype=int)
    n, k = X.shape
    schema = schema or small_schema(k)
    rows = []
    for i in range(n):
        role = int(roles[i]) if roles is not None else i % 2 + 1
        row = {
            "proposal_id": f"P{i:04d}" if roles is not None else f"P{i // 2:04d}",
            "referee_id": referees[i] if referees is not None else f"R{i % 3}",
            "referee_role": role,
            "overall": 5 if y[i] else 3,
        }
        row.update({c.id: int(X[i, j]) for j, c in enumerate(schema)})
        rows.append(row)
    return validate_dataset(rows, schema)


def random_dataset(seed: int, n: int, k: int, binary: tuple[int, ...] = (), signal: float = 1.0):
    """Labels loosely driven by the cue sum so trees have something to find."""
    rng = np.random.default_rng(seed)
    schema = small_schema(k, binary)
    X = np.column_stack([rng.integers(c.scale.low, c.scale.high + 1, n) for c in schema])
    z = signal * (X - X.mean(axis=0)).sum(axis=1) + rng.normal(0, 1.5, n)
    y = (z > np.median(z)).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return make_dataset(X, y, schema)


@pytest.fixture(scope="session")
def fixture_csv() -> Path:
    return FIXTURES / "synth_uniform.csv"


@pytest.fixture(scope="session")
def canonical(fixture_csv):
    return read_csv(fixture_csv)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
