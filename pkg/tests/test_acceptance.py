"""Acceptance suite: one check per criterion, each printed as a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import pytest

from unarycm.acceptance import CHECKS, run_check


@pytest.mark.parametrize("key", [c[0] for c in CHECKS])
def test_acceptance(key):
    result = run_check(key, seed=0)
    print(result.line())
    assert result.passed, result.line()
