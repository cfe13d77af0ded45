import json
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def oracles():
    return json.loads((FIXTURES / "oracles.json").read_text())


@pytest.fixture(scope="session")
def final_table():
    return json.loads((FIXTURES / "final_table.json").read_text())["rows"]


def random_sphere(rng, n, count):
    x = rng.standard_normal((count, n + 1)) + 1j * rng.standard_normal((count, n + 1))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


# criterion label -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE, key=lambda label: [int(x) for x in label.split(".")]):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>4}: {'PASS' if ok else 'FAIL'}  {detail}")
