from pathlib import Path

import numpy as np
import pytest

from edm_select.dataset import AttributeSchema, Dataset, load_table

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def weather():
    return load_table(FIXTURES / "weather.nominal.arff")


def make_dataset(columns, arities=None, names=None, positive=0):
    """Dataset from integer columns; the last column is the class."""
    rows = np.column_stack([np.asarray(c) for c in columns])
    if arities is None:
        arities = [max(int(np.max(c)) + 1, 2) for c in columns]
    if names is None:
        names = [f"a{i}" for i in range(len(columns) - 1)] + ["class"]
    schema = tuple(AttributeSchema(n, tuple(f"v{j}" for j in range(k)), i)
                   for i, (n, k) in enumerate(zip(names, arities)))
    return Dataset(schema, rows, len(columns) - 1, positive)


# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE_RESULTS[number] = (bool(passed), detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
