"""Acceptance gate: every packaged criterion, one printed line each.

Run with ``python3 -m pytest tests/test_acceptance.py -v`` (or the whole
suite); each criterion prints a [PASS]/[FAIL] line as it completes, the
same checks ``selfsim verify all`` runs.
"""

import pytest

from selfsim import suites

_NUMBERED = [(i + 1, name) for i, (name, _) in enumerate(suites.CRITERIA)]


@pytest.mark.parametrize(
    "number,name", _NUMBERED, ids=[name for _, name in _NUMBERED])
def test_criterion(number, name, capsys):
    checks, ok = suites.run_criterion(name)
    failing = [label for label, result in checks if not result]
    detail = "%d checks" % len(checks)
    if failing:
        detail += "; failing: " + "; ".join(failing)
    with capsys.disabled():
        print("[%s] criterion %2d/%d %s (%s)"
              % ("PASS" if ok else "FAIL", number, len(_NUMBERED), name,
                 detail))
    assert ok, "failed checks: %s" % "; ".join(failing)


def test_every_criterion_is_in_a_suite():
    covered = set()
    for suite, names in suites.SUITES.items():
        if suite != "all":
            covered.update(names)
    assert covered == set(name for name, _ in suites.CRITERIA)
    assert set(suites.SUITES["all"]) == covered
