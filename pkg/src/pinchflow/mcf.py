"""Finite-difference mean curvature flow of closed curves and surfaces in a round sphere.

An immersion is sampled on a periodic structured grid and stored as unit
vectors in R^N, so it lives in the unit sphere S^{N-1}. Geometry is read off
with central differences:

* tangent vectors are first derivatives of the position,
* the normal space is the orthogonal complement of tangents + position,
* the second fundamental form A_ij is the normal part of the second derivatives,
* H = g^ij A_ij is the mean curvature vector inside the sphere.

A time step moves each node by dt * H and projects back to the sphere.
The module is restricted to intrinsic dimension 1 or 2; higher dimensional
dynamics are covered by the reduced ODE in :mod:`pinchflow.equivariant`.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CflViolation, DegenerateMetric, DomainError
from .profile import PinchingProfile
from .sff import batch_invariants

SPHERE_TOL = 1e-12
DET_FLOOR = 1e-14
MONITOR_HEADER = ["step", "t", "max_A2", "max_H2", "grad_ratio", "codim_ratio", "cyl_ratio"]


@dataclass(frozen=True, eq=False)
class MeshImmersion:
    """Periodic grid of unit vectors, ``positions`` with shape (*grid, ambient_dim)."""

    positions: np.ndarray
    spacing: tuple
    t: float = 0.0

    def __post_init__(self):
        X = np.array(self.positions, dtype=float)
        d = X.ndim - 1
        if d not in (1, 2):
            raise DomainError(f"intrinsic dimension must be 1 or 2, got {d}")
        if X.shape[-1] < d + 2:
            raise DomainError("ambient dimension must leave at least one normal direction inside the sphere")
        if min(X.shape[:-1]) < 5:
            raise DomainError("need at least 5 grid points per axis")
        spacing = tuple(float(h) for h in np.atleast_1d(self.spacing))
        if len(spacing) != d or not all(h > 0 for h in spacing):
            raise DomainError(f"spacing must hold {d} positive steps")
        if not np.all(np.isfinite(X)):
            raise DomainError("positions must be finite")
        dev = float(np.max(np.abs(np.linalg.norm(X, axis=-1) - 1.0)))
        if dev > SPHERE_TOL:
            raise DomainError(f"positions must be unit vectors (max deviation {dev:.3g})")
        X.setflags(write=False)
        object.__setattr__(self, "positions", X)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "t", float(self.t))

    @property
    def intrinsic_dim(self) -> int:
        return self.positions.ndim - 1

    @property
    def ambient_dim(self) -> int:
        return self.positions.shape[-1]

    @property
    def grid_shape(self) -> tuple:
        return self.positions.shape[:-1]

    @property
    def codimension(self) -> int:
        """Normal rank inside the sphere."""
        return self.ambient_dim - 1 - self.intrinsic_dim

    def sphere_deviation(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.positions, axis=-1) - 1.0)))

    def rotated(self, R: np.ndarray) -> "MeshImmersion":
        return MeshImmersion(self.positions @ np.asarray(R).T, self.spacing, self.t)

    def to_dict(self) -> dict:
        return {"intrinsic_dim": self.intrinsic_dim, "ambient_dim": self.ambient_dim,
                "shape": list(self.grid_shape), "spacing": list(self.spacing), "t": self.t,
                "positions": self.positions.ravel().tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MeshImmersion":
        shape = tuple(int(s) for s in d["shape"]) + (int(d["ambient_dim"]),)
        return cls(np.asarray(d["positions"], dtype=float).reshape(shape), tuple(d["spacing"]), d.get("t", 0.0))

    @classmethod
    def from_json(cls, text: str) -> "MeshImmersion":
        return cls.from_dict(json.loads(text))


# -- fixtures ---------------------------------------------------------------------
def _angles(count: int) -> tuple[np.ndarray, float]:
    h = 2.0 * math.pi / count
    return np.arange(count) * h, h


def _pad(X: np.ndarray, ambient_dim: int) -> np.ndarray:
    if ambient_dim < X.shape[-1]:
        raise DomainError(f"ambient_dim must be >= {X.shape[-1]}")
    out = np.zeros(X.shape[:-1] + (ambient_dim,))
    out[..., : X.shape[-1]] = X
    return out


def _unit(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=-1, keepdims=True)


def great_circle(points: int, ambient_dim: int = 3) -> MeshImmersion:
    """Totally geodesic circle."""
    u, h = _angles(points)
    X = np.stack([np.cos(u), np.sin(u)], axis=-1)
    return MeshImmersion(_unit(_pad(X, ambient_dim)), (h,))


def small_circle(rho: float, points: int, ambient_dim: int = 3) -> MeshImmersion:
    """Circle of Euclidean radius rho on the unit sphere; geodesic curvature sqrt(1 - rho^2)/rho."""
    if not 0 < rho < 1:
        raise DomainError("rho must lie in (0, 1)")
    u, h = _angles(points)
    X = np.stack([rho * np.cos(u), rho * np.sin(u), np.full_like(u, math.sqrt(1 - rho * rho))], axis=-1)
    return MeshImmersion(_unit(_pad(X, ambient_dim)), (h,))


def small_circle_radius(rho0: float, t: float) -> float:
    """Exact radius of the shrinking small circle: rho' = -(1 - rho^2)/rho."""
    # d(1 - rho^2)/dt = 2 (1 - rho^2)  =>  1 - rho^2 = (1 - rho0^2) e^{2t}
    return math.sqrt(1.0 - (1.0 - rho0 * rho0) * math.exp(2.0 * t))


def clifford_torus(r: float, points: int, ambient_dim: int = 4, points_v: int | None = None) -> MeshImmersion:
    """S^1(r) x S^1(sqrt(1 - r^2)); minimal for r^2 = 1/2."""
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    s = math.sqrt(1.0 - r * r)
    u, hu = _angles(points)
    v, hv = _angles(points_v or points)
    U, V = np.meshgrid(u, v, indexing="ij")
    X = np.stack([r * np.cos(U), r * np.sin(U), s * np.cos(V), s * np.sin(V)], axis=-1)
    return MeshImmersion(_unit(_pad(X, ambient_dim)), (hu, hv))


def clifford_torus_curvature(r: float) -> tuple[float, float]:
    """(|A|^2, |H|^2) of S^1(r) x S^1(s) in S^3."""
    s2 = 1.0 - r * r
    a2 = s2 / (r * r) + r * r / s2
    h = math.sqrt(s2) / r - r / math.sqrt(s2)
    return a2, h * h


def twisted_torus(a: float, b: float, points: int, ambient_dim: int = 6) -> MeshImmersion:
    """Flat torus (a e^{iu}, b e^{iv}, c e^{i(u+v)}) in S^5 with a^2 + b^2 + c^2 = 1.

    Homogeneous, with nonzero normal curvature, so every term of the
    evolution identities is exercised.
    """
    c2 = 1.0 - a * a - b * b
    if not (a > 0 and b > 0 and c2 > 0):
        raise DomainError("need a, b > 0 and a^2 + b^2 < 1")
    c = math.sqrt(c2)
    u, h = _angles(points)
    U, V = np.meshgrid(u, u, indexing="ij")
    X = np.stack([a * np.cos(U), a * np.sin(U), b * np.cos(V), b * np.sin(V),
                  c * np.cos(U + V), c * np.sin(U + V)], axis=-1)
    return MeshImmersion(_unit(_pad(X, ambient_dim)), (h, h))


def perturbed_torus(r: float, amplitude: float, points: int, ambient_dim: int = 5) -> MeshImmersion:
    """Clifford-type torus in S^3 pushed by ``amplitude * cos(u) sin(2v)`` into a fifth coordinate."""
    if ambient_dim < 5:
        raise DomainError("need ambient_dim >= 5")
    base = clifford_torus(r, points, ambient_dim)
    u, _ = _angles(points)
    U, V = np.meshgrid(u, u, indexing="ij")
    X = np.array(base.positions)
    X[..., 4] = amplitude * np.cos(U) * np.sin(2 * V)
    return MeshImmersion(_unit(X), base.spacing)


# -- geometry ---------------------------------------------------------------------
def _d1(F: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(F, -1, axis) - np.roll(F, 1, axis)) / (2.0 * h)


def _d2(F: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(F, -1, axis) - 2.0 * F + np.roll(F, 1, axis)) / (h * h)


@dataclass
class GeometryField:
    """Per-node geometry. Shapes use G for the grid shape, d the intrinsic and N the ambient dimension."""

    metric: np.ndarray          # (*G, d, d)
    inverse_metric: np.ndarray  # (*G, d, d)
    sqrt_det: np.ndarray        # G
    tangents: np.ndarray        # (*G, d, N) coordinate derivatives
    hessian: np.ndarray         # (*G, d, d, N) raw second derivatives
    normal_frame: np.ndarray    # (*G, N, k) orthonormal normal vectors inside the sphere
    sff: np.ndarray             # (*G, d, d, N) normal-projected second derivatives A_ij
    blocks: np.ndarray          # (*G, k, d, d) A in orthonormal tangent and normal frames
    mean_curvature: np.ndarray  # (*G, N)
    invariants: dict            # batch_invariants output reshaped to G
    spacing: tuple

    @property
    def a2(self) -> np.ndarray:
        return self.invariants["a2"]

    @property
    def h2(self) -> np.ndarray:
        return self.invariants["h2"]

    @property
    def p2(self) -> np.ndarray:
        return self.invariants["p2"]

    @property
    def normal_projector(self) -> np.ndarray:
        return np.einsum("...nk,...mk->...nm", self.normal_frame, self.normal_frame)


def compute_geometry(mesh: MeshImmersion) -> GeometryField:
    X = mesh.positions
    d, N = mesh.intrinsic_dim, mesh.ambient_dim
    G = mesh.grid_shape
    hs = mesh.spacing
    dF = np.stack([_d1(X, k, hs[k]) for k in range(d)], axis=-2)
    dd = np.empty(G + (d, d, N))
    for i in range(d):
        dd[..., i, i, :] = _d2(X, i, hs[i])
        for j in range(i + 1, d):
            mixed = _d1(_d1(X, i, hs[i]), j, hs[j])
            dd[..., i, j, :] = mixed
            dd[..., j, i, :] = mixed
    g = np.einsum("...in,...jn->...ij", dF, dF)
    det = np.linalg.det(g)
    if np.any(det < DET_FLOOR):
        raise DegenerateMetric(f"det g = {float(det.min()):.3g} < {DET_FLOOR:g}")
    ginv = np.linalg.inv(g)
    # QR of [tangents, position, coordinate axes]: the trailing columns of Q
    # span the normal space inside the sphere
    M = np.concatenate([np.swapaxes(dF, -1, -2), X[..., None], np.broadcast_to(np.eye(N), G + (N, N))], axis=-1)
    Q, _ = np.linalg.qr(M)
    frame = Q[..., d + 1:]
    proj = np.einsum("...nk,...mk->...nm", frame, frame)
    A = np.einsum("...nm,...ijm->...ijn", proj, dd)
    H = np.einsum("...ij,...ijn->...n", ginv, A)
    w, V = np.linalg.eigh(g)
    gis = np.einsum("...ia,...a,...ja->...ij", V, 1.0 / np.sqrt(w), V)
    blocks = np.einsum("...nk,...ai,...bj,...ijn->...kab", frame, gis, gis, A)
    blocks = 0.5 * (blocks + np.swapaxes(blocks, -1, -2))
    k = N - 1 - d
    inv = batch_invariants(blocks.reshape((-1, k, d, d)), allow_degenerate=True)
    inv = {key: val.reshape(G) for key, val in inv.items()}
    return GeometryField(g, ginv, np.sqrt(det), dF, dd, frame, A, blocks, H, inv, hs)


def physical_spacing(geom: GeometryField) -> float:
    """Smallest metric length of one grid step over all nodes and axes."""
    d = geom.metric.shape[-1]
    return float(min(np.min(np.sqrt(geom.metric[..., k, k])) * geom.spacing[k] for k in range(d)))


def stable_dt(geom: GeometryField, cfl: float = 0.1, diffusion: float = 0.2) -> float:
    """Largest admissible explicit step: min(cfl / max|A|^2, diffusion * h^2 / d)."""
    amax = float(np.max(geom.a2))
    curv = cfl / amax if amax > 0 else math.inf
    d = geom.metric.shape[-1]
    return min(curv, diffusion * physical_spacing(geom) ** 2 / d)


def step(mesh: MeshImmersion, dt: float, cfl: float = 0.1, diffusion: float = 0.2,
         geometry: GeometryField | None = None) -> MeshImmersion:
    """One explicit step x <- (x + dt H)/|x + dt H|.

    Raises :class:`CflViolation` when dt exceeds either the curvature bound
    cfl / max|A|^2 or the parabolic grid bound diffusion * h^2 / d.
    """
    if dt < 0 or not math.isfinite(dt):
        raise DomainError("dt must be finite and >= 0")
    if dt == 0:
        return MeshImmersion(mesh.positions, mesh.spacing, mesh.t)
    geom = geometry or compute_geometry(mesh)
    limit = stable_dt(geom, cfl, diffusion)
    if dt > limit:
        raise CflViolation(f"dt = {dt:g} exceeds the stability bound {limit:g}")
    Y = mesh.positions + dt * geom.mean_curvature
    return MeshImmersion(_unit(Y), mesh.spacing, mesh.t + dt)


def run_flow(mesh: MeshImmersion, dt: float, steps: int, cfl: float = 0.1, diffusion: float = 0.2,
             record_every: int = 1) -> list[MeshImmersion]:
    """``steps`` uniform steps; returns every ``record_every``-th mesh including the first."""
    out = [mesh]
    cur = mesh
    for i in range(1, steps + 1):
        cur = step(cur, dt, cfl, diffusion)
        if i % record_every == 0:
            out.append(cur)
    return out


# -- evolution identities ------------------------------------------------------------
def laplacian(geom: GeometryField, u: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami in divergence form, (1/sqrt g) d_i (sqrt g g^ij d_j u), central differences at nodes."""
    d = geom.metric.shape[-1]
    du = np.stack([_d1(u, k, geom.spacing[k]) for k in range(d)], axis=-1)
    flux = geom.sqrt_det[..., None] * np.einsum("...ij,...j->...i", geom.inverse_metric, du)
    div = sum(_d1(flux[..., k], k, geom.spacing[k]) for k in range(d))
    return div / geom.sqrt_det


def christoffel(geom: GeometryField) -> np.ndarray:
    """Gamma^l_{ki} = g^{lm} <d_k d_i F, d_m F>, shape (*G, l, k, i)."""
    inner = np.einsum("...kin,...mn->...kim", geom.hessian, geom.tangents)
    return np.einsum("...lm,...kim->...lki", geom.inverse_metric, inner)


def covariant_gradients(geom: GeometryField) -> tuple[np.ndarray, np.ndarray]:
    """(|nabla A|^2, |nabla H|^2) with the normal connection."""
    d = geom.metric.shape[-1]
    P = geom.normal_projector
    gam = christoffel(geom)
    dA = np.stack([_d1(geom.sff, k, geom.spacing[k]) for k in range(d)], axis=-4)  # (*G, k, i, j, N)
    nab = (np.einsum("...nm,...kijm->...kijn", P, dA)
           - np.einsum("...lki,...ljn->...kijn", gam, geom.sff)
           - np.einsum("...lkj,...iln->...kijn", gam, geom.sff))
    gi = geom.inverse_metric
    gradA2 = np.einsum("...ia,...jb,...kc,...kijn,...cabn->...", gi, gi, gi, nab, nab, optimize=True)
    dH = np.stack([_d1(geom.mean_curvature, k, geom.spacing[k]) for k in range(d)], axis=-2)
    nH = np.einsum("...nm,...km->...kn", P, dH)
    gradH2 = np.einsum("...kc,...kn,...cn->...", gi, nH, nH)
    return gradA2, gradH2


def evolution_rhs(geom: GeometryField, kbar: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides of the evolution equations of |A|^2 and |H|^2, per node."""
    inv = geom.invariants
    d = geom.metric.shape[-1]
    gradA2, gradH2 = covariant_gradients(geom)
    a2, h2 = inv["a2"], inv["h2"]
    rhs_a2 = (laplacian(geom, a2) - 2.0 * gradA2 + 2.0 * inv["aa"] + 2.0 * inv["rperp2"]
              + 4.0 * kbar * h2 - 2.0 * d * kbar * a2)
    rhs_h2 = laplacian(geom, h2) - 2.0 * gradH2 + 2.0 * inv["r2"] + 2.0 * d * kbar * h2
    return rhs_a2, rhs_h2


def evolution_identity_residual(mesh_sequence, node) -> tuple[float, float]:
    """|d/dt |A|^2 - rhs| and |d/dt |H|^2 - rhs| at ``node`` of the middle mesh.

    The time derivative is the central difference over three consecutive,
    equally spaced meshes.
    """
    if len(mesh_sequence) != 3:
        raise ValueError("need exactly three consecutive meshes")
    m0, m1, m2 = mesh_sequence
    dt0, dt1 = m1.t - m0.t, m2.t - m1.t
    if not (dt0 > 0 and abs(dt1 - dt0) <= 1e-9 * dt0):
        raise ValueError("meshes must be equally spaced in time")
    g0, g1, g2 = (compute_geometry(m) for m in mesh_sequence)
    node = tuple(np.atleast_1d(node).tolist())
    ddt_a2 = (g2.a2[node] - g0.a2[node]) / (dt0 + dt1)
    ddt_h2 = (g2.h2[node] - g0.h2[node]) / (dt0 + dt1)
    ra, rh = evolution_rhs(g1)
    return float(abs(ddt_a2 - ra[node])), float(abs(ddt_h2 - rh[node]))


def refinement_residuals(builder, levels=(16, 32, 64, 128), dt_factor: float = 0.05, node=0):
    """Residuals under joint refinement: ``builder(points)`` makes the mesh, dt = dt_factor * h^2.

    Halving the spacing quarters dt. Returns a list of (points, dt, residual_A2, residual_H2).
    """
    out = []
    for count in levels:
        mesh = builder(count)
        h = physical_spacing(compute_geometry(mesh))
        dt = dt_factor * h * h
        seq = run_flow(mesh, dt, 2)
        nd = (node,) * mesh.intrinsic_dim
        ra, rh = evolution_identity_residual(seq, nd)
        out.append((count, dt, ra, rh))
    return out


# -- monitors ---------------------------------------------------------------------
def run_monitors(mesh_sequence, profile: PinchingProfile, h2_threshold: float = 1e-8, steps=None) -> list[dict]:
    """Per-mesh maxima of the gradient, codimension and cylindrical ratios.

    * grad_ratio  = max |nabla A|^2 / g^2 over nodes with g = a - |A|^2 - eps omega > 0
    * codim_ratio = max |A^-|^2 / g over the same nodes
    * cyl_ratio   = max |A|^2 / |H|^2 over nodes with |H|^2 > h2_threshold

    ``profile`` supplies the pinching function; the grid dimension is at most
    2, so these are diagnostics only. Undefined maxima are NaN.
    """
    rows = []
    for i, mesh in enumerate(mesh_sequence):
        geom = compute_geometry(mesh)
        a2, h2, p2 = geom.a2, geom.h2, geom.p2
        gap = np.asarray(profile.gap(np.maximum(a2, h2 / profile.n), h2))
        gradA2, _ = covariant_gradients(geom)
        pos = gap > 0
        big = h2 > h2_threshold
        rows.append({
            "step": int(steps[i]) if steps is not None else i,
            "t": mesh.t,
            "max_A2": float(np.max(a2)),
            "max_H2": float(np.max(h2)),
            "grad_ratio": float(np.max(gradA2[pos] / gap[pos] ** 2)) if pos.any() else math.nan,
            "codim_ratio": float(np.max(p2[pos] / gap[pos])) if pos.any() else math.nan,
            "cyl_ratio": float(np.max(a2[big] / h2[big])) if big.any() else math.nan,
        })
    return rows


def monitors_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MONITOR_HEADER)
    for r in rows:
        w.writerow([r[k] if isinstance(r[k], int) else repr(float(r[k])) for k in MONITOR_HEADER])
    return buf.getvalue()
