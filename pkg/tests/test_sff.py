import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import loop_invariants
from pinchflow.errors import DegenerateMeanCurvature, DomainError
from pinchflow.profile import PinchingProfile
from pinchflow.sff import (SffTensor, batch_invariants, mean_curvature, normal_curvature, principal_split,
                           random_orthogonal, random_pinched, random_tensor_blocks, random_tensor_stack,
                           reaction_terms, sample_pinched_blocks, traceless_part)

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def sym_blocks(rng, m, n):
    G = rng.standard_normal((m, n, n))
    return 0.5 * (G + G.transpose(0, 2, 1))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_invariants_match_index_loops(n, m):
    rng = np.random.default_rng([n, m])
    for _ in range(5):
        B = sym_blocks(rng, m, n)
        got = batch_invariants(B[None])
        ref = loop_invariants(B.tolist())
        for key, val in ref.items():
            assert got[key][0] == pytest.approx(val, rel=1e-10, abs=1e-12), key


def test_hypersurface_has_no_normal_curvature():
    rng = np.random.default_rng(1)
    B = sym_blocks(rng, 1, 5)
    inv = batch_invariants(B[None])
    assert inv["rperp2"][0] == 0.0
    assert inv["p2"][0] == 0.0
    assert inv["aa"][0] == pytest.approx(inv["a2"][0] ** 2)


def test_umbilic_tensor():
    # A = (lambda) I along one normal: |A|^2 = |H|^2/n, traceless part zero
    B = np.zeros((2, 4, 4))
    B[1] = 3.0 * np.eye(4)
    inv = batch_invariants(B[None])
    assert inv["h2"][0] == pytest.approx(144.0)
    assert inv["a2"][0] == pytest.approx(36.0)
    assert inv["hring2"][0] == pytest.approx(0.0, abs=1e-24)
    assert inv["p2"][0] == pytest.approx(0.0, abs=1e-24)


def test_principal_split_pieces():
    rng = np.random.default_rng(2)
    A = SffTensor.symmetrized(sym_blocks(rng, 3, 5))
    s = principal_split(A)
    H = mean_curvature(A)
    assert s.hnorm == pytest.approx(np.linalg.norm(H))
    assert np.trace(s.h) == pytest.approx(s.hnorm)
    np.testing.assert_allclose(s.frame.T @ s.frame, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(s.frame[:, 0], H / np.linalg.norm(H), atol=1e-14)
    np.testing.assert_allclose(np.trace(s.a_minus, axis1=1, axis2=2), 0.0, atol=1e-12)
    ring = traceless_part(A)
    assert np.sum(ring.blocks**2) == pytest.approx(np.sum(s.h_ring**2) + np.sum(s.a_minus**2))


def test_degenerate_mean_curvature():
    B = np.zeros((2, 3, 3))
    B[0] = np.diag([1.0, -1.0, 0.0])
    B[1] = np.diag([0.0, 2.0, -2.0])
    with pytest.raises(DegenerateMeanCurvature):
        principal_split(SffTensor(B))
    s = principal_split(SffTensor(B), allow_degenerate=True)
    assert s.hnorm == 0.0
    nc = normal_curvature(SffTensor(B))
    assert nc.hat_norm2 is None and nc.nu1_norm2 is None
    assert reaction_terms(SffTensor(B)).r2 == 0.0


def test_totally_geodesic():
    A = SffTensor(np.zeros((2, 4, 4)))
    inv = batch_invariants(A.blocks[None], allow_degenerate=True)
    assert all(float(v[0]) == 0.0 for v in inv.values())


def test_validation():
    with pytest.raises(DomainError):
        SffTensor(np.array([[[1.0, 2.0], [2.5, 0.0]]]))  # not symmetric
    with pytest.raises(DomainError):
        SffTensor(np.full((1, 2, 2), np.nan))
    with pytest.raises(DomainError):
        SffTensor(np.zeros((9, 3, 3)))
    with pytest.raises(DomainError):
        SffTensor(np.zeros((2, 3, 4)))
    with pytest.raises(DomainError):
        SffTensor.from_flat([0.0] * 5, 2, 2)


def test_json_round_trip():
    rng = np.random.default_rng(3)
    A = SffTensor.symmetrized(sym_blocks(rng, 2, 3))
    text = A.to_json()
    assert json.loads(text)["blocks"][:9] == A.blocks[0].ravel().tolist()
    assert SffTensor.from_json(text) == A
    assert hash(SffTensor.from_json(text)) == hash(A)


def test_blocks_immutable():
    A = SffTensor(np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        A.blocks[0, 0, 0] = 1.0


@given(seed=seeds, n=st.integers(2, 6), m=st.integers(1, 4))
def test_invariants_are_frame_independent(seed, n, m):
    rng = np.random.default_rng(seed)
    B = sym_blocks(rng, m, n)
    R = random_orthogonal(rng, m)
    O = random_orthogonal(rng, n)
    C = np.einsum("ab,bij->aij", R, O.T @ B @ O)
    C = 0.5 * (C + C.transpose(0, 2, 1))
    i1, i2 = batch_invariants(B[None]), batch_invariants(C[None])
    for key in i1:
        scale = max(1.0, float(i1["a2"][0]) ** 2)
        assert i2[key][0] == pytest.approx(i1[key][0], abs=1e-9 * scale), key


@given(seed=seeds, n=st.integers(2, 6), m=st.integers(2, 4))
def test_norm_decomposition(seed, n, m):
    B = sym_blocks(np.random.default_rng(seed), m, n)
    inv = batch_invariants(B[None])
    # |A|^2 = |H|^2/n + |h_ring|^2 + |A^-|^2
    assert inv["a2"][0] == pytest.approx(inv["h2"][0] / n + inv["hring2"][0] + inv["p2"][0], rel=1e-10)
    assert inv["a2"][0] >= inv["h2"][0] / n * (1 - 1e-12)


@given(seed=seeds, scale=st.floats(min_value=0.0, max_value=1e4))
def test_pinched_sampler_respects_profile(seed, scale):
    P = PinchingProfile(8, 3)
    B = sample_pinched_blocks(P, np.random.default_rng(seed), scale)
    inv = batch_invariants(B[None], allow_degenerate=True)
    assert inv["h2"][0] == pytest.approx(scale * scale, rel=1e-9, abs=1e-9)
    assert P.gap(max(inv["a2"][0], inv["h2"][0] / 8), inv["h2"][0]) > 0


def test_random_pinched_deterministic():
    P = PinchingProfile(8, 2)
    assert random_pinched(P, 5, 10.0, 3) == random_pinched(P, 5, 10.0, 3)
    assert random_pinched(P, 5, 10.0, 3) != random_pinched(P, 5, 10.0, 4)
    with pytest.raises(DomainError):
        random_pinched(P, 5, 0.0)


def test_stack_matches_single_draws():
    keys = [[7, 4, 2, i] for i in range(6)]
    stack = random_tensor_stack(keys, 4, 2)
    for k, B in zip(keys, stack):
        np.testing.assert_array_equal(B, random_tensor_blocks(np.random.default_rng(k), 4, 2))
    np.testing.assert_array_equal(stack, stack.transpose(0, 1, 3, 2))
