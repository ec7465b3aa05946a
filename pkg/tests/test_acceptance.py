"""Exit criteria. Each test prints one PASS/FAIL line; run with ``pytest -s`` to see them."""
import pytest

from queue_infer import validation

TIME_LIMITS = {1: 5, 2: 60, 3: 300, 4: 5, 5: 5, 6: 600, 7: 60, 8: 60, 9: 60}


@pytest.mark.parametrize("cid", sorted(validation.CRITERIA))
def test_criterion(cid):
    (result,) = validation.run_criteria([cid])
    print(result.line())
    assert result.seconds < TIME_LIMITS[cid], f"runtime {result.seconds:.1f}s over {TIME_LIMITS[cid]}s"
    assert result.passed, result.detail
