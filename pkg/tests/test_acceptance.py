"""Acceptance suite: every shipped criterion must pass at its stated
tolerance. Results are computed once per session and printed one line per
criterion (run pytest with -s to see them)."""

import pytest

from codedmr.acceptance import run_all

_RESULTS = None


def results():
    global _RESULTS
    if _RESULTS is None:
        _RESULTS = {r.number: r for r in run_all()}
    return _RESULTS


@pytest.mark.parametrize("number", list(range(1, 11)))
def test_criterion(number):
    res = results()[number]
    print(res.line())
    assert res.passed, res.line()
