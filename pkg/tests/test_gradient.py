from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from pinchflow.lab.gradient import (GRADIENT_IDS, check_gradient_coefficients, check_gradient_lemmas,
                                    check_young_bound, delta_cross_bound, delta_from_cross, delta_from_young,
                                    delta_max, ordering_holds, young_a2, young_a3, young_constants_consistent)
from pinchflow.profile import PinchingProfile


def test_delta_max_n8():
    # (512 - 704 + 192 + 4)/(512 - 448 + 64 + 4) = 4/132
    assert delta_max(8) == Fraction(1, 33)


@pytest.mark.parametrize("n,dmax,cross", [
    (3, Fraction(-1, 2), Fraction(1, 5)),
    (4, Fraction(1), Fraction(3, 4)),
    (5, Fraction(13, 3), Fraction(20, 21)),
    (6, Fraction(-2), Fraction(17, 16)),
    (7, Fraction(-2, 5), Fraction(17, 15)),
    (8, Fraction(1, 33), Fraction(71, 60)),
])
def test_spot_values(n, dmax, cross):
    assert delta_max(n) == dmax
    assert delta_cross_bound(n) == cross


def test_equivalences_symbolically():
    n, d = sp.symbols("n delta", positive=True)
    a2 = 2 * (n + 2) / ((n - 1) * (n - 2))
    a3 = 2 * (n + 2) / ((n - 1) * (n - 2) - 2 * (n + 2))
    cond = sp.Eq(2 * a2 + 2 * a3 * (n + 2) / ((n - 1) * (n - 2)), (1 - d) * (n + 2) / (n - 1))
    sol = sp.solve(cond, d)[0]
    assert sp.simplify(sol - (n**3 - 11 * n**2 + 24 * n + 4) / (n**3 - 7 * n**2 + 8 * n + 4)) == 0
    cross = sp.solve(sp.Eq(2, (n - 1) * (n - 2) / (n + 2) + 2 * (1 - d) * (n - 2)), d)[0]
    assert sp.simplify(cross - (3 * n**2 - 5 * n - 10) / (2 * (n - 2) * (n + 2))) == 0


@given(n=st.integers(min_value=8, max_value=5000))
def test_solved_forms_agree(n):
    assert delta_from_young(n) == delta_max(n)
    assert delta_from_cross(n) == delta_cross_bound(n)
    assert young_constants_consistent(n)


def test_ordering_set():
    holds = [n for n in range(3, 40) if ordering_holds(n)]
    assert holds == [3] + list(range(6, 40))


def test_young_constants():
    assert young_a2(8) == Fraction(20, 42)
    assert young_a3(8) == Fraction(20, 22)


def test_coefficient_reports():
    reps = check_gradient_coefficients(range(4, 400))
    assert [r.lemma_id for r in reps] == list(GRADIENT_IDS[:4])
    for r in reps:
        assert r.passed and r.samples == 396
    assert reps[3].min_slack == pytest.approx(0.25)
    assert reps[0].details["delta_max_8"] == "1/33"
    assert reps[0].details["dimensions_with_nonpositive_delta_max"][:3] == [3, 6, 7]


def test_young_bound_sampled():
    r = check_young_bound(PinchingProfile(8, 2), samples=300, seed=2)
    assert r.lemma_id == "gradient.young_bound"
    assert r.passed and r.min_slack > 0
    with pytest.raises(ValueError):
        check_young_bound(PinchingProfile(5, 2), samples=10)


def test_lemmas_bundle():
    reps = check_gradient_lemmas(PinchingProfile(8, 2), samples=50, n_values=range(6, 20))
    assert [r.lemma_id for r in reps] == list(GRADIENT_IDS)
    assert all(r.passed for r in reps)
