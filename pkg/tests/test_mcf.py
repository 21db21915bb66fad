import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pinchflow.errors import CflViolation, DegenerateMetric, DomainError
from pinchflow.mcf import (MONITOR_HEADER, MeshImmersion, clifford_torus, clifford_torus_curvature,
                           compute_geometry, evolution_identity_residual, great_circle, laplacian, monitors_csv,
                           perturbed_torus, physical_spacing, refinement_residuals, run_flow, run_monitors,
                           small_circle, small_circle_radius, stable_dt, step, twisted_torus)
from pinchflow.profile import PinchingProfile
from pinchflow.sff import random_orthogonal


def test_mesh_validation():
    with pytest.raises(DomainError):
        MeshImmersion(np.ones((16, 3)), (0.1,))  # not unit vectors
    with pytest.raises(DomainError):
        MeshImmersion(np.tile([1.0, 0, 0, 0, 0], (6, 6, 6, 1)), (0.1, 0.1, 0.1))  # three grid axes
    with pytest.raises(DomainError):
        MeshImmersion(np.tile([1.0, 0, 0], (8, 8, 1)), (0.1, 0.1))  # no normal direction left
    with pytest.raises(DomainError):
        MeshImmersion(great_circle(16).positions, (-1.0,))


def test_degenerate_metric():
    mesh = MeshImmersion(np.tile([1.0, 0.0, 0.0], (16, 1)), (0.1,))
    with pytest.raises(DegenerateMetric):
        compute_geometry(mesh)


def test_json_round_trip():
    mesh = clifford_torus(0.6, 12)
    back = MeshImmersion.from_json(mesh.to_json())
    np.testing.assert_array_equal(back.positions, mesh.positions)
    assert back.spacing == mesh.spacing and back.t == mesh.t


def test_small_circle_curvature_converges():
    rho = 0.5
    exact = (1 - rho**2) / rho**2
    errs = [abs(compute_geometry(small_circle(rho, N)).a2[0] - exact) for N in (32, 64, 128)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)
    g = compute_geometry(small_circle(rho, 64))
    np.testing.assert_allclose(g.h2, g.a2, rtol=1e-12)  # curves: |A| = |H|


def test_clifford_torus_curvature():
    for r in (math.sqrt(0.5), 0.6):
        a2, h2 = clifford_torus_curvature(r)
        g = compute_geometry(clifford_torus(r, 128))
        assert g.a2[3, 5] == pytest.approx(a2, rel=2e-3)
        assert g.h2[3, 5] == pytest.approx(h2, rel=2e-3, abs=1e-20)
    assert clifford_torus_curvature(math.sqrt(0.5)) == pytest.approx((2.0, 0.0), abs=1e-15)


def test_great_circle_is_totally_geodesic():
    g = compute_geometry(great_circle(32, 4))
    assert np.max(g.a2) < 1e-24
    assert np.max(np.abs(g.mean_curvature)) < 1e-12
    mesh = great_circle(32, 4)
    nxt = step(mesh, 1e-3)
    assert np.max(np.abs(nxt.positions - mesh.positions)) < 1e-14


def test_twisted_torus_has_normal_curvature():
    g = compute_geometry(twisted_torus(0.6, 0.5, 48))
    assert np.min(g.invariants["rperp2"]) > 0.1
    assert g.normal_frame.shape[-1] == 3


def test_perturbation_enters_quadratically():
    p1 = compute_geometry(perturbed_torus(0.6, 1e-3, 32)).p2
    p2 = compute_geometry(perturbed_torus(0.6, 2e-3, 32)).p2
    assert np.max(p1) > 0
    assert np.max(p2) / np.max(p1) == pytest.approx(4.0, rel=1e-2)
    assert np.max(compute_geometry(clifford_torus(0.6, 32, 5)).p2) < 1e-20


@given(seed=st.integers(0, 10**6))
def test_invariants_survive_ambient_rotation(seed):
    mesh = twisted_torus(0.55, 0.6, 16)
    R = random_orthogonal(np.random.default_rng(seed), 6)
    g1, g2 = compute_geometry(mesh), compute_geometry(mesh.rotated(R))
    for key in ("a2", "h2", "p2", "rperp2", "aa"):
        np.testing.assert_allclose(g2.invariants[key], g1.invariants[key], rtol=1e-9, atol=1e-12)


def test_step_contract():
    mesh = small_circle(0.5, 64)
    assert step(mesh, 0.0).positions is not None
    np.testing.assert_array_equal(step(mesh, 0.0).positions, mesh.positions)
    geom = compute_geometry(mesh)
    limit = stable_dt(geom)
    with pytest.raises(CflViolation):
        step(mesh, 1.01 * limit)
    nxt = step(mesh, 0.5 * limit)
    assert nxt.sphere_deviation() <= 1e-12
    assert nxt.t == pytest.approx(0.5 * limit)
    with pytest.raises(DomainError):
        step(mesh, -1.0)


def test_both_stability_bounds():
    g = compute_geometry(small_circle(0.5, 16))
    assert stable_dt(g, cfl=1e-3) == pytest.approx(1e-3 / np.max(g.a2))
    g = compute_geometry(small_circle(0.8, 256))
    assert stable_dt(g, diffusion=0.2) == pytest.approx(0.2 * physical_spacing(g) ** 2)


def test_shrinking_circle_matches_exact_radius():
    rho0 = 0.6
    mesh = small_circle(rho0, 128)
    dt = 0.1 * physical_spacing(compute_geometry(mesh)) ** 2
    seq = run_flow(mesh, dt, 400, record_every=400)
    rho = float(np.linalg.norm(seq[-1].positions[0, :2]))
    assert rho == pytest.approx(small_circle_radius(rho0, seq[-1].t), rel=1e-4)
    assert rho < rho0


def test_laplacian_on_flat_torus():
    # metric diag(r^2, s^2): Laplace of cos(2u) is -4 cos(2u)/r^2
    r = 0.6
    errs = []
    for N in (32, 64):
        g = compute_geometry(clifford_torus(r, N))
        u = np.cos(2 * np.arange(N) * 2 * math.pi / N)[:, None] * np.ones((1, N))
        errs.append(np.max(np.abs(laplacian(g, u) + 4 * u / r**2)))
    assert errs[1] < errs[0] / 3.5


@pytest.mark.parametrize("builder", [lambda N: small_circle(0.5, N), lambda N: clifford_torus(0.6, N)],
                         ids=["small_circle", "clifford_torus"])
def test_identity_residuals_converge(builder):
    res = refinement_residuals(builder, levels=(16, 32, 64))
    for (_, _, a0, h0), (_, _, a1, h1) in zip(res, res[1:]):
        assert a0 / a1 >= 3.0
        assert h0 / h1 >= 3.0


def test_identity_residual_with_normal_curvature():
    res = refinement_residuals(lambda N: twisted_torus(0.6, 0.5, N), levels=(16, 32, 64))
    assert res[0][2] / res[1][2] >= 3.0 and res[1][2] / res[2][2] >= 3.0


def test_totally_geodesic_residual():
    seq = run_flow(great_circle(64, 4), 1e-4, 2)
    ra, rh = evolution_identity_residual(seq, (5,))
    assert ra <= 1e-12 and rh <= 1e-12


def test_residual_input_checks():
    seq = run_flow(small_circle(0.5, 32), 1e-4, 2)
    with pytest.raises(ValueError):
        evolution_identity_residual(seq[:2], (0,))
    bad = [seq[0], seq[1], step(seq[2], 1e-4)]
    with pytest.raises(ValueError):
        evolution_identity_residual(bad, (0,))


def test_monitors():
    seq = run_flow(small_circle(0.5, 32), 1e-4, 4, record_every=2)
    rows = run_monitors(seq, PinchingProfile(8, 2, eps=0.0))
    assert [r["step"] for r in rows] == [0, 1, 2]
    assert rows[0]["cyl_ratio"] == pytest.approx(1.0)
    assert rows[0]["codim_ratio"] == 0.0
    assert rows[-1]["max_A2"] > rows[0]["max_A2"]
    text = monitors_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == MONITOR_HEADER and len(parsed) == 4
    geo = run_monitors([great_circle(16)], PinchingProfile(8, 2))
    assert math.isnan(geo[0]["cyl_ratio"])
    assert "nan" in monitors_csv(geo)
