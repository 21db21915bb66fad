"""Second fundamental forms with values in the normal bundle.

A tensor is stored as an ``(m, n, n)`` array: one symmetric n x n block per
normal direction, expressed in orthonormal tangent and normal frames. The
batched kernels at the bottom operate on stacks ``(N, m, n, n)`` and are what
the inequality lab runs on; the :class:`SffTensor` methods are thin wrappers
around them so both paths share one implementation.
"""
from __future__ import annotations

import json
from typing import NamedTuple

import numpy as np

from .errors import DegenerateMeanCurvature, DomainError, SamplerExhausted
from .profile import PinchingProfile

MAX_N = 64
MAX_M = 8
DEGENERATE_H_RTOL = 1e-12


class SffTensor:
    """Immutable normal-bundle-valued second fundamental form."""

    __slots__ = ("_blocks",)

    def __init__(self, blocks):
        arr = np.array(blocks, dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise DomainError(f"expected blocks of shape (m, n, n), got {arr.shape}")
        m, n, _ = arr.shape
        if not (1 <= n <= MAX_N and 1 <= m <= MAX_M):
            raise DomainError(f"(n, m) = ({n}, {m}) outside the supported envelope n <= {MAX_N}, m <= {MAX_M}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("second fundamental form has non-finite entries")
        if not np.array_equal(arr, arr.transpose(0, 2, 1)):
            raise DomainError("every block must be exactly symmetric")
        arr.setflags(write=False)
        self._blocks = arr

    @classmethod
    def symmetrized(cls, blocks) -> "SffTensor":
        arr = np.asarray(blocks, dtype=float)
        if arr.ndim == 2:
            arr = arr[None]
        return cls(0.5 * (arr + arr.transpose(0, 2, 1)))

    @property
    def blocks(self) -> np.ndarray:
        return self._blocks

    @property
    def n(self) -> int:
        return self._blocks.shape[1]

    @property
    def m(self) -> int:
        return self._blocks.shape[0]

    def norm2(self) -> float:
        """|A|^2."""
        return float(np.sum(self._blocks**2))

    def __eq__(self, other):
        return isinstance(other, SffTensor) and np.array_equal(self._blocks, other._blocks)

    def __hash__(self):
        return hash(self._blocks.tobytes())

    def __repr__(self):
        return f"SffTensor(n={self.n}, m={self.m}, |A|^2={self.norm2():.6g})"

    # -- serialization ------------------------------------------------------
    def to_flat(self) -> list[float]:
        """Row-major blocks, normal index outermost."""
        return self._blocks.ravel().tolist()

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "m": self.m, "blocks": self.to_flat()})

    @classmethod
    def from_flat(cls, flat, n: int, m: int) -> "SffTensor":
        arr = np.asarray(flat, dtype=float)
        if arr.size != m * n * n:
            raise DomainError(f"flat array of length {arr.size} does not match m*n*n = {m * n * n}")
        return cls(arr.reshape(m, n, n))

    @classmethod
    def from_json(cls, text: str) -> "SffTensor":
        obj = json.loads(text)
        return cls.from_flat(obj["blocks"], int(obj["n"]), int(obj["m"]))


class PrincipalSplit(NamedTuple):
    h: np.ndarray  # (n, n) component along the principal normal
    h_ring: np.ndarray  # traceless part of h
    a_minus: np.ndarray  # (m-1, n, n) components orthogonal to the principal normal
    hnorm: float  # |H|
    frame: np.ndarray  # (m, m) orthogonal, column 0 is the principal normal


class NormalCurvature(NamedTuple):
    tensor: np.ndarray  # (n, n, m, m)
    norm2: float  # |R_perp|^2 summed over ordered index pairs
    hat_norm2: float | None  # part with both normal indices orthogonal to the principal normal
    nu1_norm2: float | None  # sum_ij |R_perp_ij(nu_1)|^2


class ReactionTerms(NamedTuple):
    r1: float
    r2: float
    p2: float


# -- single-tensor operations -----------------------------------------------------
def mean_curvature(A: SffTensor) -> np.ndarray:
    """H^alpha = trace of block alpha."""
    return np.trace(A.blocks, axis1=1, axis2=2).copy()


def traceless_part(A: SffTensor) -> SffTensor:
    H = mean_curvature(A)
    eye = np.eye(A.n)
    return SffTensor(A.blocks - H[:, None, None] * eye / A.n)


def principal_split(A: SffTensor, allow_degenerate: bool = False) -> PrincipalSplit:
    """Rotate the normal frame so its first vector is H/|H|.

    With ``allow_degenerate=True`` a vanishing mean curvature is not an error:
    the first frame vector is then the normal direction carrying the largest
    share of |A|^2 (top eigenvector of the Gram matrix of the blocks).
    """
    frame, hnorm = _principal_frames(A.blocks[None], allow_degenerate)
    frame, hnorm = frame[0], float(hnorm[0])
    rotated = np.einsum("ab,aij->bij", frame, A.blocks)
    h = rotated[0]
    h_ring = h - np.trace(h) / A.n * np.eye(A.n)
    return PrincipalSplit(h, h_ring, rotated[1:], hnorm, frame)


def normal_curvature(A: SffTensor) -> NormalCurvature:
    B = A.blocks
    prod = np.einsum("aik,bjk->ijab", B, B)
    R = prod - prod.transpose(0, 1, 3, 2)
    norm2 = float(np.sum(R**2))
    if A.m == 1:
        return NormalCurvature(R, norm2, 0.0, 0.0)
    hn = float(np.linalg.norm(mean_curvature(A)))
    if hn == 0.0 or hn <= DEGENERATE_H_RTOL * np.sqrt(A.norm2()):
        return NormalCurvature(R, norm2, None, None)
    inv = batch_invariants(B[None])
    return NormalCurvature(R, norm2, float(inv["comm_minus"][0]), float(inv["comm_h"][0]))


def reaction_terms(A: SffTensor) -> ReactionTerms:
    """R_1, R_2 and P_2 = |A^-|^2.

    When H vanishes, R_2 = 0 and P_2 is taken relative to the frame chosen by
    ``principal_split(..., allow_degenerate=True)``.
    """
    inv = batch_invariants(A.blocks[None], allow_degenerate=True)
    return ReactionTerms(float(inv["r1"][0]), float(inv["r2"][0]), float(inv["p2"][0]))


# -- batched kernels --------------------------------------------------------------
def _householder_frames(nu: np.ndarray) -> np.ndarray:
    """Orthogonal (N, m, m) matrices whose first column is ``nu`` (unit rows of (N, m))."""
    N, m = nu.shape
    e1 = np.zeros(m)
    e1[0] = 1.0
    sign = np.where(nu[:, 0] >= 0, 1.0, -1.0)
    v = nu + sign[:, None] * e1  # no cancellation in the first entry
    vv = np.einsum("ka,ka->k", v, v)
    Q = np.eye(m)[None] - 2.0 * v[:, :, None] * v[:, None, :] / vv[:, None, None]
    # Q e1 = -sign * nu; flip the first column to get +nu
    Q[:, :, 0] *= -sign[:, None]
    return Q


def _principal_frames(B: np.ndarray, allow_degenerate: bool):
    N, m, n, _ = B.shape
    H = np.trace(B, axis1=2, axis2=3)
    hnorm = np.linalg.norm(H, axis=1)
    anorm = np.sqrt(np.einsum("kaij,kaij->k", B, B))
    degenerate = hnorm <= DEGENERATE_H_RTOL * anorm
    degenerate |= hnorm == 0.0
    if np.any(degenerate) and not allow_degenerate:
        raise DegenerateMeanCurvature(
            f"|H| <= {DEGENERATE_H_RTOL:g} |A|: principal normal undefined"
        )
    nu = np.zeros((N, m))
    ok = ~degenerate
    nu[ok] = H[ok] / hnorm[ok, None]
    if np.any(degenerate):
        gram = np.einsum("kaij,kbij->kab", B[degenerate], B[degenerate])
        _, vecs = np.linalg.eigh(gram)
        top = vecs[:, :, -1]
        # deterministic orientation: largest-magnitude entry positive
        idx = np.argmax(np.abs(top), axis=1)
        top *= np.sign(top[np.arange(top.shape[0]), idx])[:, None]
        nu[degenerate] = top
    return _householder_frames(nu), hnorm


def _pair_commutator_norm2(B: np.ndarray) -> np.ndarray:
    """sum over ordered pairs (a, b) of |[B_a, B_b]|^2 for a stack (N, k, n, n)."""
    k = B.shape[1]
    if k < 2:
        return np.zeros(B.shape[0])
    ia, ib = np.triu_indices(k, 1)
    prod = B[:, ia] @ B[:, ib]
    comm = prod - prod.transpose(0, 1, 3, 2)
    return 2.0 * np.einsum("kpij,kpij->k", comm, comm)


def batch_invariants(B: np.ndarray, allow_degenerate: bool = False) -> dict[str, np.ndarray]:
    """Frame-invariant scalars of a stack of tensors ``B`` with shape (N, m, n, n).

    Keys:
      a2, h2        |A|^2 and |H|^2
      hring2, p2    |h_ring|^2 and |A^-|^2
      aa            sum_{ijpq} <A_ij, A_pq>^2
      rperp2        |R_perp|^2 over ordered normal index pairs
      r1, r2        reaction terms
      ip_h          sum_beta <h_ring, A_beta>^2
      comm_h        sum_beta |[h_ring, A_beta]|^2
      s2_minus      sum_{beta,gamma >= 2} <A_beta, A_gamma>^2
      comm_minus    sum_{beta,gamma >= 2} |[A_beta, A_gamma]|^2
    """
    B = np.asarray(B, dtype=float)
    N, m, n, _ = B.shape
    frames, hnorm = _principal_frames(B, allow_degenerate)
    R = np.einsum("kab,kaij->kbij", frames, B)
    h = R[:, 0]
    tr_h = np.trace(h, axis1=1, axis2=2)
    h_ring = h - (tr_h / n)[:, None, None] * np.eye(n)
    minus = R[:, 1:]
    gram = np.einsum("kaij,kbij->kab", B, B)
    aa = np.einsum("kab,kab->k", gram, gram)
    rperp2 = _pair_commutator_norm2(B)
    a2 = np.einsum("kaij,kaij->k", B, B)
    h2 = hnorm**2
    hring2 = np.einsum("kij,kij->k", h_ring, h_ring)
    p2 = np.einsum("kaij,kaij->k", minus, minus)
    h_full2 = np.einsum("kij,kij->k", h, h)
    r2 = h_full2 * h2
    ip = np.einsum("kij,kbij->kb", h_ring, minus)
    hp = h_ring[:, None] @ minus
    ch = hp - hp.transpose(0, 1, 3, 2)
    mgram = np.einsum("kaij,kbij->kab", minus, minus)
    return {
        "a2": a2,
        "h2": h2,
        "hring2": hring2,
        "p2": p2,
        "aa": aa,
        "rperp2": rperp2,
        "r1": aa + rperp2,
        "r2": r2,
        "ip_h": np.einsum("kb,kb->k", ip, ip),
        "comm_h": np.einsum("kbil,kbil->k", ch, ch),
        "s2_minus": np.einsum("kab,kab->k", mgram, mgram),
        "comm_minus": _pair_commutator_norm2(minus),
    }


# -- sampling ---------------------------------------------------------------------
_MAX_ATTEMPTS = 64


def _traceless_gaussian(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    G = rng.standard_normal((count, n, n))
    G = 0.5 * (G + G.transpose(0, 2, 1))
    tr = np.trace(G, axis1=1, axis2=2)
    return G - (tr / n)[:, None, None] * np.eye(n)


def random_orthogonal(rng: np.random.Generator, m: int) -> np.ndarray:
    Z = rng.standard_normal((m, m))
    Q, R = np.linalg.qr(Z)
    return Q * np.sign(np.diag(R))


def sample_pinched_blocks(profile: PinchingProfile, rng: np.random.Generator, scale: float) -> np.ndarray:
    """One pinched tensor with |H| = scale (scale = 0 allowed) as a raw (m, n, n) array.

    The traceless part is a random mixture of a principal-direction block and
    orthogonal blocks, rescaled so that |A|^2 - |H|^2/n is a random fraction
    of the largest value allowed by the pinching condition. Half of the
    draws put that fraction log-uniformly close to 1 to populate the
    boundary of the pinched region. The normal frame is then rotated at random.
    """
    n, m = profile.n, profile.m
    h2 = scale * scale
    budget = float(profile.a(h2) - profile.eps * profile.omega(h2) - h2 / n)
    if not budget > 0:
        raise SamplerExhausted(f"no pinched tensors with |H|^2 = {h2:g}: budget {budget:g} <= 0")
    for _ in range(_MAX_ATTEMPTS):
        blocks = _traceless_gaussian(rng, m, n)
        weights = np.exp(rng.standard_normal(m))
        mode = rng.integers(8)
        if mode == 0:
            weights[1:] = 0.0  # hypersurface-like: no A^- part
        elif mode == 1:
            weights[0] = 0.0  # h umbilic
        blocks *= weights[:, None, None]
        norm2 = float(np.sum(blocks**2))
        if norm2 == 0.0:
            continue
        if rng.random() < 0.5:
            frac = rng.random()
        else:
            frac = 1.0 - 10.0 ** (-8.0 * rng.random())
        frac = min(frac, 1.0 - 1e-9)
        blocks *= np.sqrt(frac * budget / norm2)
        blocks[0] += (scale / n) * np.eye(n)
        rot = random_orthogonal(rng, m)
        out = np.einsum("ab,bij->aij", rot, blocks)
        out = 0.5 * (out + out.transpose(0, 2, 1))
        a2 = float(np.sum(out**2))
        hh = float(np.sum(np.trace(out, axis1=1, axis2=2) ** 2))
        if profile.gap(max(a2, hh / n), hh) > 0:
            return out
    raise SamplerExhausted(f"no admissible draw after {_MAX_ATTEMPTS} attempts")


def random_pinched(profile: PinchingProfile, seed: int, scale: float, index: int = 0) -> SffTensor:
    """Deterministic pinched sample with |H| = scale > 0.

    The random stream is ``numpy.random.default_rng([seed, index])`` so the
    i-th sample of a sweep does not depend on how the sweep is partitioned.
    """
    if not (np.isfinite(scale) and scale > 0):
        raise DomainError(f"scale must be positive, got {scale!r}")
    rng = np.random.default_rng([int(seed), int(index)])
    return SffTensor(sample_pinched_blocks(profile, rng, float(scale)))


def _stacked_orthogonal(Z: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(Z)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return Q * d[..., None, :]


def _tensor_draw_size(n: int, m: int) -> int:
    return 2 * m * n * n + 2 * n + 4 * m + m + 1 + m * m


def tensors_from_draws(Z: np.ndarray, U: np.ndarray, n: int, m: int) -> np.ndarray:
    """Deterministic map from raw normal draws ``Z`` (N, L) and uniforms ``U`` (N, 2) to tensors.

    Half of the draws (U[:, 0] < 1/2) are dense Gaussian blocks with random
    per-block weights. The other half concentrate every block on a random
    2-plane of the tangent space, where the commutator and Gram bounds are
    sharp, plus a dense perturbation of log-uniform relative size in [1e-3, 1].
    """
    N = Z.shape[0]
    o = 0

    def take(size, shape):
        nonlocal o
        out = Z[:, o:o + size].reshape((N,) + shape)
        o += size
        return out

    dense = take(m * n * n, (m, n, n))
    plane = take(2 * n, (n, 2))
    small = take(4 * m, (m, 2, 2))
    noise = take(m * n * n, (m, n, n))
    weights = take(m, (m,))
    trace = take(1, ())
    rot = take(m * m, (m, m))
    dense = 0.5 * (dense + dense.transpose(0, 1, 3, 2))
    Uq = _stacked_orthogonal(plane)  # (N, n, 2)
    small = 0.5 * (small + small.transpose(0, 1, 3, 2))
    conc = Uq[:, None] @ small @ Uq.transpose(0, 2, 1)[:, None]
    level = 10.0 ** (-3.0 * U[:, 1])
    conc = conc + (level / np.sqrt(n))[:, None, None, None] * 0.5 * (noise + noise.transpose(0, 1, 3, 2))
    G = np.where((U[:, 0] < 0.5)[:, None, None, None], dense, conc)
    G = G * np.exp(weights)[:, :, None, None]
    G[:, 0] += trace[:, None, None] * np.eye(n)
    out = np.einsum("kab,kbij->kaij", _stacked_orthogonal(rot), G)
    return 0.5 * (out + out.transpose(0, 1, 3, 2))


def random_tensor_blocks(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """Unconstrained test tensor for the algebraic inequalities (see :func:`tensors_from_draws`)."""
    Z = rng.standard_normal(_tensor_draw_size(n, m))
    U = rng.random(2)
    return tensors_from_draws(Z[None], U[None], n, m)[0]


def random_tensor_stack(keys, n: int, m: int) -> np.ndarray:
    """One tensor per RNG key; identical to calling :func:`random_tensor_blocks` key by key."""
    L = _tensor_draw_size(n, m)
    Z = np.empty((len(keys), L))
    U = np.empty((len(keys), 2))
    for i, key in enumerate(keys):
        rng = np.random.default_rng(key)
        Z[i] = rng.standard_normal(L)
        U[i] = rng.random(2)
    return tensors_from_draws(Z, U, n, m)
