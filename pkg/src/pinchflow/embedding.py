"""Finite-difference geometry of the explicit embedding of S^p(r) x S^q(s).

This is an independent check on the closed forms in :mod:`pinchflow.profile`
and on the sign of the reduced ODE in :mod:`pinchflow.equivariant`. The
embedding ``(r X(theta), s Y(psi))`` in R^{p+q+2} is differentiated
numerically; nothing here uses the closed-form curvature of the family.
"""
from __future__ import annotations

import numpy as np


def sphere_point(angles: np.ndarray) -> np.ndarray:
    """Hyperspherical coordinates: R^k -> unit sphere S^k in R^{k+1}."""
    angles = np.asarray(angles, dtype=float)
    k = angles.size
    out = np.empty(k + 1)
    sin_prod = 1.0
    for i in range(k):
        out[i] = sin_prod * np.cos(angles[i])
        sin_prod *= np.sin(angles[i])
    out[k] = sin_prod
    return out


def _base_angles(k: int) -> np.ndarray:
    # generic interior angles, away from coordinate singularities
    return 0.6 + 0.37 * np.arange(k) / max(k, 1)


def product_embedding(p: int, q: int, phi: float):
    """Return ``F(u)`` mapping p+q parameters into R^{p+q+2} and a base parameter."""
    r, s = np.cos(phi), np.sin(phi)

    def F(u):
        return np.concatenate([r * sphere_point(u[:p]), s * sphere_point(u[p:])])

    u0 = np.concatenate([_base_angles(p), _base_angles(q)])
    return F, u0


def fd_second_fundamental_form(F, u0, step: float = 1e-4):
    """Central-difference metric and normal-projected second derivatives.

    Returns ``(g, A)`` where ``g`` is the k x k metric and ``A`` has shape
    (k, k, N) holding the second derivatives projected onto the orthogonal
    complement of the tangent space and the position vector.
    """
    u0 = np.asarray(u0, dtype=float)
    k = u0.size
    x0 = F(u0)
    eye = np.eye(k) * step
    d1 = np.array([(F(u0 + eye[i]) - F(u0 - eye[i])) / (2 * step) for i in range(k)])
    d2 = np.empty((k, k, x0.size))
    for i in range(k):
        d2[i, i] = (F(u0 + eye[i]) - 2 * x0 + F(u0 - eye[i])) / step**2
        for j in range(i + 1, k):
            v = (
                F(u0 + eye[i] + eye[j])
                - F(u0 + eye[i] - eye[j])
                - F(u0 - eye[i] + eye[j])
                + F(u0 - eye[i] - eye[j])
            ) / (4 * step**2)
            d2[i, j] = d2[j, i] = v
    g = d1 @ d1.T
    basis, _ = np.linalg.qr(np.vstack([d1, x0]).T)
    proj = np.eye(x0.size) - basis @ basis.T
    A = d2 @ proj
    return g, A


def fd_curvature_norms(p: int, q: int, phi: float, step: float = 1e-4):
    """(|A|^2, |H|^2, H vector, base point) of the product embedding by finite differences."""
    F, u0 = product_embedding(p, q, phi)
    g, A = fd_second_fundamental_form(F, u0, step)
    ginv = np.linalg.inv(g)
    H = np.einsum("ij,ijk->k", ginv, A)
    a2 = float(np.einsum("ik,jl,ijv,klv->", ginv, ginv, A, A))
    return a2, float(H @ H), H, F(u0)


def fd_phi_velocity(p: int, q: int, phi: float, dt: float = 1e-7, step: float = 1e-4) -> float:
    """Move the base point by ``dt * H``, renormalize, and read off d(phi)/dt."""
    _, _, H, x = fd_curvature_norms(p, q, phi, step)
    y = x + dt * H
    y /= np.linalg.norm(y)
    new_phi = np.arctan2(np.linalg.norm(y[p + 1:]), np.linalg.norm(y[: p + 1]))
    return float((new_phi - phi) / dt)
