"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (visible with ``pytest -s``
or in the terminal summary) and asserts the criterion at its stated tolerance.
Run ``python3 -m pytest tests/test_acceptance.py -s`` to see the lines.
"""

import pytest

from tfpme.verification import CRITERIA, run_criterion

_LINES = {}


@pytest.fixture(scope="module", autouse=True)
def summary():
    yield
    if _LINES:
        print("\nacceptance summary")
        for n in sorted(_LINES):
            print(_LINES[n])


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    result = run_criterion(number)
    line = f"{result.line()}  ({result.seconds:.1f}s)"
    _LINES[number] = line
    print(line)
    assert result.passed, line
