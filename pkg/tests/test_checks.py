import math

import pytest

from logic import checks
from logic.checks import CHECKS, CheckContext, format_table, run_checks
from logic.errors import OutOfDomain


@pytest.fixture(scope="module")
def ctx(fast_settings):
    return CheckContext(settings=fast_settings)


@pytest.mark.parametrize("index, name", [(i, name) for i, (name, _) in enumerate(CHECKS)], ids=[n for n, _ in CHECKS])
def test_check_passes(ctx, index, name):
    result = dict(CHECKS)[name](ctx, ctx.rng(index))
    assert result.name == name
    assert result.passed, result.detail


def test_errors_fail_their_check(monkeypatch, fast_settings):
    def broken(ctx, rng):
        raise OutOfDomain("left the box")

    monkeypatch.setattr(checks, "CHECKS", (("broken", broken),) + CHECKS[:1])
    results = run_checks(fast_settings)
    assert [r.name for r in results] == ["broken", CHECKS[0][0]]
    assert not results[0].passed and math.isnan(results[0].value)
    assert results[0].detail == "OutOfDomain: left the box"
    assert results[1].passed
    assert "FAIL" in format_table(results)
