"""The ten acceptance criteria at their stated tolerances.

Each test prints one ``[PASS]`` / ``[FAIL]`` line (also visible without ``-s``)
and then asserts the verdict.  ``conesolve verify`` runs the same functions.
"""
from __future__ import annotations

import pytest

from conesolve import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    res = acceptance.CRITERIA[number]()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.as_dict()
