"""All sixteen acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line. Criteria 2 and 3 encode values that
disagree with the Hamiltonian flow of W; they fail by design (see the
decisions ledger).
"""
import pytest

from vortexlab.harness.criteria import CRITERIA, run_criterion


@pytest.mark.slow
@pytest.mark.parametrize("cid", [c[0] for c in CRITERIA], ids=[f"{c[0]:02d}_{c[1]}" for c in CRITERIA])
def test_criterion(cid, capsys):
    res = run_criterion(cid)
    with capsys.disabled():
        print("\n" + res.line(), flush=True)
    assert res.passed, res.line()
