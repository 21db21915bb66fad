import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pinchflow.lab.report import LemmaParams, ScanSpec, VerificationReport, csv_text, summarize


def test_summarize_strict_and_ties():
    slack = np.array([0.5, 0.0, 2.0, 0.0])
    strict = summarize("x", slack, True, lambda i: {"i": i})
    assert strict.violations == 2 and not strict.passed and strict.worst_case == {"i": 1}
    loose = summarize("x", slack, False, lambda i: {"i": i})
    assert loose.violations == 0 and loose.ties == 2 and loose.passed


def test_nonfinite_counts_as_violation():
    r = summarize("x", np.array([1.0, np.nan]), False, lambda i: {"i": i})
    assert r.violations == 1 and r.min_slack == -math.inf


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=50))
def test_strict_pass_iff_positive_min(values):
    r = summarize("x", np.array(values), True, lambda i: {})
    assert (r.violations == 0) == (r.min_slack > 0) == r.passed


def test_json_round_trip():
    r = VerificationReport("scalar.ratio", 10, 0, 0.25, {"x": 1.0, "bad": float("nan")}, 12, True, 0, {"k": [1, 2]})
    d = json.loads(r.to_json(include_timing=True))
    assert d["wallclock_ms"] == 12 and d["worst_case"]["bad"] == "nan"
    back = VerificationReport.from_dict(d)
    assert back.min_slack == 0.25 and back.passed
    assert json.loads(r.to_json())["wallclock_ms"] is None


def test_csv_formatting():
    text = csv_text([("a", 8, 2, 1.0, 0.0, 0.1, 0.0, 1.0, 2.0, 1.0, True)])
    assert text.splitlines()[1] == "a,8,2,1.0,0.0,0.1,0.0,1.0,2.0,1.0,true"


def test_scan_spec_validation():
    with pytest.raises(ValueError):
        ScanSpec(grid_points=1)
    with pytest.raises(ValueError):
        ScanSpec(x_max=0.0)


def test_lemma_params():
    p = LemmaParams().resolve(8)
    assert p.c_n == pytest.approx(1 / 6)
    assert p.c_tilde == pytest.approx(14 / 80)
    assert p.a2_young == pytest.approx(20 / 42)
    with pytest.raises(ValueError):
        LemmaParams(delta=0.0).resolve(8)
    with pytest.raises(ValueError):
        LemmaParams(c_n=0.5).resolve(8)
    with pytest.raises(ValueError):
        LemmaParams(a_prime_mode="other").resolve(8)
