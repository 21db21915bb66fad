import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import loop_sides
from pinchflow.lab.matrix import MATRIX_IDS, check_matrix_lemmas, matrix_sides, sample_blocks
from pinchflow.sff import batch_invariants


@pytest.mark.parametrize("n,m", [(n, m) for n in (2, 3, 4) for m in (2, 3)])
def test_sides_match_index_loops(n, m):
    B = sample_blocks(11, n, m, 0, 20)
    sides = matrix_sides(batch_invariants(B))
    for i in range(B.shape[0]):
        ref = loop_sides(B[i])
        for k in MATRIX_IDS:
            for got, want in zip(sides[k], ref[k]):
                assert got[i] == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_sharp_case_commuting_planes():
    # two blocks on a 2-plane with [A_2, A_3] maximal: the Gram/commutator bound is attained
    n = 4
    B = np.zeros((3, n, n))
    B[0] = np.eye(n)
    B[1, :2, :2] = [[1, 0], [0, -1]]
    B[2, :2, :2] = [[0, 1], [1, 0]]
    inv = batch_invariants(B[None])
    lhs, rhs = matrix_sides(inv)["matrix.commutator_gram"]
    assert lhs[0] == pytest.approx(rhs[0], rel=1e-12)


@given(seed=st.integers(0, 10**6), n=st.integers(2, 9), m=st.integers(2, 5))
def test_bounds_hold_on_random_tensors(seed, n, m):
    B = sample_blocks(seed, n, m, 0, 8)
    inv = batch_invariants(B, allow_degenerate=True)
    scale = np.maximum(inv["a2"] ** 2, 1e-300)
    for lhs, rhs in matrix_sides(inv).values():
        assert np.all((rhs - lhs) / scale >= -1e-12)


def test_small_run_and_thread_independence():
    dims = ((4, 2), (5, 3))
    one = check_matrix_lemmas(samples=1200, seed=3, dims=dims, threads=1)
    many = check_matrix_lemmas(samples=1200, seed=3, dims=dims, threads=3)
    assert [r.to_json() for r in one] == [r.to_json() for r in many]
    for r in one:
        assert r.samples == 2400 and r.violations == 0 and r.min_slack >= 0
        assert r.worst_case["tensor"]


def test_rows_collected():
    rows = []
    check_matrix_lemmas(samples=50, seed=0, dims=((3, 2),), threads=1, rows=rows)
    assert len(rows) == 4 * 50
    assert {r[0] for r in rows} == set(MATRIX_IDS)
