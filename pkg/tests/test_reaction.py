import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pinchflow.lab.reaction import (DECAY_IDS, REACTION_IDS, check_decay_chain, check_reaction_lemmas,
                                    coefficient_checks, decay_coefficients, decay_rates, decay_reactions,
                                    pinched_stack, quartic_discriminant, reaction_bracket, traceless_rate_slack)
from pinchflow.lab.report import LemmaParams
from pinchflow.profile import PinchingProfile
from pinchflow.sff import batch_invariants


def test_reaction_lemmas_small_run():
    P = PinchingProfile(8, 2)
    reps = check_reaction_lemmas(P, samples=400, seed=1)
    assert [r.lemma_id for r in reps] == list(REACTION_IDS)
    for r in reps:
        assert r.passed, r.lemma_id


def test_reaction_threshold_guard():
    with pytest.raises(ValueError):
        check_reaction_lemmas(PinchingProfile(8, 2), samples=10, h2=100.0)


def test_coefficient_margins_n8():
    # nc = 4/3 with c_n = 1/(n-2), delta = 1/2
    c = coefficient_checks(8, LemmaParams())
    assert c["estimate_p2_squared"] == pytest.approx(1.5)
    assert c["lower_bound_p2_squared"] == pytest.approx(1.5)
    assert c["estimate_cross"] == pytest.approx(0.0, abs=1e-12)
    assert c["lower_bound_cross"] == pytest.approx(0.0, abs=1e-12)


def test_reaction_bracket_matches_naive_form():
    P = PinchingProfile(8, 3)
    B = pinched_stack(P, 0, np.full(20, 50.0), tag=9)
    inv = batch_invariants(B)
    ap = np.full(20, 0.3)
    hfull2 = inv["hring2"] + inv["h2"] / 8
    naive = ap * inv["h2"] * hfull2 - inv["aa"] - inv["rperp2"]
    np.testing.assert_allclose(reaction_bracket(inv, ap, 8), naive, rtol=1e-9, atol=1e-9 * np.max(inv["aa"]))


def test_decay_identities():
    P = PinchingProfile(10, 3)
    B = pinched_stack(P, 2, np.geomspace(1.0, 1e4, 30), tag=9)
    inv = batch_invariants(B)
    b, Bq = decay_rates(inv, P)
    # b - B = -(n + 2 sqrt(n)(1 - 2 eps n)) K
    np.testing.assert_allclose(b - Bq, -(10 + 2 * math.sqrt(10) * (1 - 2 * P.eps * 10)))
    q = 0.5 * (inv["hring2"] + inv["p2"])
    react_q, _ = decay_reactions(inv, P)
    scale = inv["a2"] ** 2
    np.testing.assert_allclose(traceless_rate_slack(inv, P), 2 * q * b - react_q, atol=1e-9 * scale.max())


def test_traceless_rate_exact_for_hypersurface_data():
    n = 8
    B = np.zeros((1, 2, n, n))
    B[0, 0] = np.diag(np.linspace(1.0, 2.0, n))
    inv = batch_invariants(B)
    assert traceless_rate_slack(inv, PinchingProfile(n, 2))[0] == 0.0


def test_decay_chain_outcome():
    P = PinchingProfile(8, 2)
    reps = {r.lemma_id: r for r in check_decay_chain(P, samples=600, seed=0)}
    assert set(reps) == set(DECAY_IDS)
    assert reps["decay.traceless_rate"].passed
    assert reps["decay.drift"].passed
    assert reps["decay.drift"].min_slack == pytest.approx(16.0, rel=1e-9)  # 2 n K
    gap = reps["decay.gap_rate"]
    assert not gap.passed
    # failures come from both branches
    assert gap.details["violations_with_h_zero"] > 0
    assert gap.details["violations_with_h_nonzero"] > 0
    assert not reps["decay.coefficients"].passed


def test_decay_coefficients_closed_forms():
    for n in (8, 12, 16, 40):
        # with eps = 0 the discriminant collapses to ((n - 4)/2)^2
        assert quartic_discriminant(n, 0.0) == pytest.approx(((n - 4) / 2) ** 2, rel=1e-12)
        c = decay_coefficients(n, 0.0)
        assert c["hring_coefficient"] == pytest.approx((n - 2) / 2 - 3)
        # discarded |H|^2 coefficient: (2 - sqrt n)/(sqrt n (n - 2)) + 1/n = (2 sqrt n - 2)/(n (n - 2))
        assert -c["h2_coefficient"] == pytest.approx((2 * math.sqrt(n) - 2) / (n * (n - 2)), rel=1e-12)
    # n + 2 sqrt n - 4 sqrt n at eps = 0
    assert decay_coefficients(8, 0.0)["drift_dominance"] == pytest.approx(8 - 2 * math.sqrt(8), rel=1e-12)


def test_determinism_of_samples():
    P = PinchingProfile(8, 3)
    a = check_decay_chain(P, samples=100, seed=4)
    b = check_decay_chain(P, samples=100, seed=4)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    c = check_decay_chain(P, samples=100, seed=5)
    assert [r.to_json() for r in a] != [r.to_json() for r in c]


@given(seed=st.integers(0, 10**6), e=st.floats(min_value=4.1, max_value=8.0))
def test_reaction_bounds_hold_at_large_curvature(seed, e):
    P = PinchingProfile(12, 3)
    reps = check_reaction_lemmas(P, samples=20, seed=seed, h2=10.0**e)
    assert reps[0].violations == 0 and reps[1].violations == 0
