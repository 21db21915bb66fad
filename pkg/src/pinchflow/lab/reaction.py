"""Reaction-term bounds for the codimension quantity and the decay chain.

All ambient curvature terms are zero (constant curvature ambient). Inputs are
pinched tensors drawn by :func:`pinchflow.sff.sample_pinched_blocks`.

Reaction bounds (large |H| regime, ``X`` below is the reaction bracket of f)::

    X = (1/n + a_ring') |H|^2 |h|^2 - sum <A_ij, A_pq>^2 - |R_perp|^2

* ``reaction.lower_bound``: (P2/f) X  >  -(P2/f) L  +  2/(nc-1) P2^2 + nc/(nc-1) |h_ring|^2 P2
* ``reaction.estimate``:    S2^- + |R_hat|^2 + |R(nu_1)|^2  <  (1-delta) (P2/f) (X + L)

with ``L = 2 sqrt(n) K (P2 + 2 f)/(nc-1) + 2 sqrt(n) K nc/(nc-1) |h_ring|^2`` and
``P2 = |A^-|^2``. Every term of both bounds carries a factor P2 (the left side
of the second one through the matrix bounds), so the slack is reported after
dividing by P2 > 0; this keeps the comparison well conditioned when A^- is tiny.

Decay chain, with ``q = |A_ring|^2/2`` and ``Q = -f/2``::

    b = |h_ring|^2 + k |A^-|^2 + |H|^2/n - n K
    B = |h_ring|^2 + k |A^-|^2 + |H|^2/n + 2 sqrt(n) (1 - 2 eps n) K,   k = (n-2)/(2-eps n)

* ``decay.traceless_rate``  reaction(q) <= 2 q b
* ``decay.gap_rate``        reaction(Q) <= 2 Q B
* ``decay.drift``           2 (b - B) <= -4 sqrt(n) K (1 - 2 eps n)

where reaction(.) is the zeroth-order part of the heat operator applied to
the quantity.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..profile import PinchingProfile
from ..sff import batch_invariants, sample_pinched_blocks
from .report import LemmaParams, VerificationReport, summarize

REACTION_IDS = ("reaction.lower_bound", "reaction.estimate", "reaction.coefficients")
DECAY_IDS = ("decay.traceless_rate", "decay.gap_rate", "decay.drift", "decay.coefficients")


def pinched_stack(profile: PinchingProfile, seed: int, h2: np.ndarray, tag: int) -> np.ndarray:
    """Pinched tensors with |H|^2 = h2[i]; sample i uses rng([seed, tag, n, m, i])."""
    n, m = profile.n, profile.m
    out = np.empty((len(h2), m, n, n))
    for i, x in enumerate(h2):
        rng = np.random.default_rng([int(seed), tag, n, m, i])
        out[i] = sample_pinched_blocks(profile, rng, math.sqrt(float(x)))
    return out


def _a_prime(profile: PinchingProfile, h2: np.ndarray, mode: str) -> np.ndarray:
    """a'(|H|^2) = 1/n + a_ring'; in asymptotic mode a_ring' is frozen at 2/(n(n-2))."""
    n = profile.n
    if mode == "asymptotic":
        return np.full_like(h2, 1.0 / n + 2.0 / (n * (n - 2)))
    return 1.0 / n + np.asarray(profile.a_ring_prime(h2))


def reaction_bracket(inv: dict, a_prime: np.ndarray, n: int) -> np.ndarray:
    """X written without the |H|^4 cancellation.

    With |h|^2 = |h_ring|^2 + |H|^2/n and sum <A,A>^2 = |h|^4 + 2 ip_h + S2^-,
    X = a_ring'|H|^4/n + (a_ring' - 1/n)|H|^2|h_ring|^2 - |h_ring|^4 - 2 ip_h - S2^- - |R_perp|^2.
    """
    ar = a_prime - 1.0 / n
    h2, hr2 = inv["h2"], inv["hring2"]
    return (ar * h2 * h2 / n + (ar - 1.0 / n) * h2 * hr2 - hr2 * hr2
            - 2.0 * inv["ip_h"] - inv["s2_minus"] - inv["rperp2"])


def reaction_sides(inv: dict, profile: PinchingProfile, params: LemmaParams):
    """Per-sample (lhs, rhs) of both reaction bounds, divided by P2."""
    n, K = profile.n, profile.kbar
    p = params.resolve(n)
    nc = n * p.c_n
    h2, p2, hr2 = inv["h2"], inv["p2"], inv["hring2"]
    f = np.asarray(profile.gap(np.maximum(inv["a2"], h2 / n), h2))
    X = reaction_bracket(inv, _a_prime(profile, h2, p.a_prime_mode), n)
    two_root = 2.0 * math.sqrt(n) * K
    L = two_root * (p2 + 2.0 * f) / (nc - 1.0) + two_root * nc / (nc - 1.0) * hr2
    # lower bound: (P2/f) X > -(P2/f) L + 2/(nc-1) P2^2 + nc/(nc-1) hr2 P2
    low_l = X / f
    low_r = -L / f + 2.0 / (nc - 1.0) * p2 + nc / (nc - 1.0) * hr2
    safe = np.where(p2 > 0, p2, 1.0)
    est_l = (inv["s2_minus"] + inv["comm_minus"] + inv["comm_h"]) / safe
    est_r = (1.0 - p.delta) * (X + L) / f
    return {"reaction.lower_bound": (low_l, low_r, low_l - low_r),
            "reaction.estimate": (est_l, est_r, est_r - est_l)}, f


def coefficient_checks(n: int, params: LemmaParams) -> dict[str, float]:
    """Signed margins of the coefficient conditions used by the reaction bounds (>= 0 is good)."""
    p = params.resolve(n)
    nc = n * p.c_n
    d = p.delta
    return {
        "estimate_p2_squared": -(1.5 - 2.0 * (1.0 - d) / (nc - 1.0)),
        "estimate_cross": -(2.0 - nc * (1.0 - d) / (nc - 1.0)),
        "lower_bound_p2_squared": 1.0 / (nc - 1.0) - 1.5,
        "lower_bound_cross": nc / (nc - 1.0) - 4.0,
    }


def check_reaction_lemmas(profile: PinchingProfile, params: LemmaParams | None = None, samples: int = 10_000,
                          seed: int = 0, h2: float = 1e6, rows: list | None = None) -> list[VerificationReport]:
    params = params or LemmaParams()
    p = params.resolve(profile.n)
    if h2 < p.large_h_factor * (profile.n - 2) * profile.kbar:
        raise ValueError(f"|H|^2 = {h2:g} is below the large-|H| threshold "
                         f"{p.large_h_factor * (profile.n - 2) * profile.kbar:g}")
    t0 = time.perf_counter()
    B = pinched_stack(profile, seed, np.full(samples, float(h2)), tag=1)
    inv = batch_invariants(B)
    sides, f = reaction_sides(inv, profile, p)
    premise = f + inv["p2"] - 2.0 * math.sqrt(profile.n) * profile.kbar
    ms = int(round((time.perf_counter() - t0) * 1000))
    meta = {"n": profile.n, "m": profile.m, "kbar": profile.kbar, "eps": profile.eps, "seed": seed}
    reports = []
    for lemma_id, (lhs, rhs, slack) in sides.items():
        def record(i, lhs=lhs, rhs=rhs, slack=slack):
            return dict(meta, index=int(i), h2=float(inv["h2"][i]), p2=float(inv["p2"][i]),
                        hring2=float(inv["hring2"][i]), f=float(f[i]), lhs=float(lhs[i]), rhs=float(rhs[i]),
                        slack=float(slack[i]), tensor=B[i].ravel().tolist())

        details = {"relation": ">" if lemma_id.endswith("lower_bound") else "<", "h2": h2,
                   "normalization": "both sides divided by |A^-|^2",
                   "a_prime_mode": p.a_prime_mode, "delta": p.delta, "c_n": p.c_n,
                   "samples_with_f_plus_p2_below_2sqrt_n_K": int(np.count_nonzero(premise < 0))}
        reports.append(summarize(lemma_id, slack, True, record, ms, details))
        if rows is not None:
            rows.extend((lemma_id, profile.n, profile.m, profile.kbar, profile.eps, float(inv["h2"][i]),
                         float(inv["p2"][i]), float(lhs[i]), float(rhs[i]), float(slack[i]), bool(slack[i] > 0))
                        for i in range(samples))
    coeffs = coefficient_checks(profile.n, p)
    names = list(coeffs)
    vals = np.array([coeffs[k] for k in names])
    reports.append(summarize("reaction.coefficients", vals, False,
                             lambda i: dict(meta, condition=names[i], margin=float(vals[i])), ms,
                             {"relation": ">= 0", "margins": coeffs, "delta": p.delta, "c_n": p.c_n}))
    return reports


# -- decay chain ------------------------------------------------------------------
def decay_rates(inv: dict, profile: PinchingProfile):
    """(b, B) per sample."""
    n, K, eps = profile.n, profile.kbar, profile.eps
    k = (n - 2) / (2.0 - eps * n)
    base = inv["hring2"] + k * inv["p2"] + inv["h2"] / n
    return base - n * K, base + 2.0 * math.sqrt(n) * (1.0 - 2.0 * eps * n) * K


def decay_reactions(inv: dict, profile: PinchingProfile):
    """Zeroth-order parts of the heat operator applied to q and Q.

    reaction(q) = R1 - R2/n - n K |A_ring|^2
    reaction(Q) = sum<A,A>^2 + |R_perp|^2 + 2K|H|^2 - nK|A|^2 - (a' - eps/(n-2)) (R2 + nK|H|^2)
    Both are written through |h|^2 = |h_ring|^2 + |H|^2/n to avoid cancelling |H|^4 terms.
    """
    n, K, eps = profile.n, profile.kbar, profile.eps
    h2, hr2, p2 = inv["h2"], inv["hring2"], inv["p2"]
    hfull2 = hr2 + h2 / n
    rest = 2.0 * inv["ip_h"] + inv["s2_minus"] + inv["rperp2"]
    ring2 = hr2 + p2
    react_q = hfull2 * hr2 + rest - n * K * ring2
    a_prime = 1.0 / n + np.asarray(profile.a_ring_prime(h2))
    coef = a_prime - eps / (n - 2)
    # sum<A,A>^2 - coef*R2 = |h|^2 (|h|^2 - coef |H|^2) + rest', with |h|^2 - coef|H|^2 = hr2 - (coef - 1/n)|H|^2
    react_Q = (hfull2 * (hr2 - (coef - 1.0 / n) * h2) + rest + 2.0 * K * h2
               - n * K * inv["a2"] - coef * n * K * h2)
    return react_q, react_Q


def traceless_rate_slack(inv: dict, profile: PinchingProfile) -> np.ndarray:
    """2 q b - reaction(q), expanded so that the terms cancelling identically never appear.

    2qb - reaction(q) = |A^-|^2 ((k+1)|h_ring|^2 + k|A^-|^2 + |H|^2/n) - 2 ip_h - S2^- - |R_perp|^2,
    which is exactly zero for hypersurface-like data (A^- = 0).
    """
    n, eps = profile.n, profile.eps
    k = (n - 2) / (2.0 - eps * n)
    p2 = inv["p2"]
    return (p2 * ((k + 1.0) * inv["hring2"] + k * p2 + inv["h2"] / n)
            - 2.0 * inv["ip_h"] - inv["s2_minus"] - inv["rperp2"])


def decay_h2_values(profile: PinchingProfile, samples: int, seed: int, h2_max: float, zero_fraction: float):
    """|H|^2 per sample: 0 with probability ``zero_fraction``, else log-uniform in [1e-6, h2_max] * kbar."""
    rng = np.random.default_rng([int(seed), 2, profile.n, profile.m])
    u = rng.random(samples)
    e = rng.uniform(-6.0, math.log10(h2_max), samples)
    return np.where(u < zero_fraction, 0.0, profile.kbar * 10.0 ** e)


def check_decay_chain(profile: PinchingProfile, samples: int = 10_000, seed: int = 0, h2_max: float = 1e6,
                      zero_fraction: float = 0.1, rows: list | None = None) -> list[VerificationReport]:
    t0 = time.perf_counter()
    n, K, eps = profile.n, profile.kbar, profile.eps
    h2 = decay_h2_values(profile, samples, seed, h2_max, zero_fraction)
    B = pinched_stack(profile, seed, h2, tag=2)
    inv = batch_invariants(B, allow_degenerate=True)
    inv["h2"] = np.where(h2 == 0.0, 0.0, inv["h2"])
    f = np.asarray(profile.gap(np.maximum(inv["a2"], inv["h2"] / n), inv["h2"]))
    q = 0.5 * (inv["hring2"] + inv["p2"])
    Q = -0.5 * f
    b, Bq = decay_rates(inv, profile)
    react_q, react_Q = decay_reactions(inv, profile)
    drift = -4.0 * math.sqrt(n) * K * (1.0 - 2.0 * eps * n)
    checks = {
        "decay.traceless_rate": (react_q, 2.0 * q * b, traceless_rate_slack(inv, profile)),
        "decay.gap_rate": (react_Q, 2.0 * Q * Bq, None),
        "decay.drift": (2.0 * (b - Bq), np.full(samples, drift), None),
    }
    shifted = 2.0 * Q * (Bq - n * K) - react_Q
    ms = int(round((time.perf_counter() - t0) * 1000))
    meta = {"n": n, "m": profile.m, "kbar": K, "eps": eps, "seed": seed}
    zero = h2 == 0.0
    reports = []
    for lemma_id, (lhs, rhs, slack) in checks.items():
        slack = rhs - lhs if slack is None else slack

        def record(i, lhs=lhs, rhs=rhs, slack=slack):
            return dict(meta, index=int(i), h2=float(inv["h2"][i]), p2=float(inv["p2"][i]),
                        hring2=float(inv["hring2"][i]), f=float(f[i]), lhs=float(lhs[i]), rhs=float(rhs[i]),
                        slack=float(slack[i]), tensor=B[i].ravel().tolist())

        details = {"relation": "<=", "h2_max": h2_max, "zero_h_samples": int(np.count_nonzero(zero)),
                   "violations_with_h_zero": int(np.count_nonzero((slack < 0) & zero)),
                   "violations_with_h_nonzero": int(np.count_nonzero((slack < 0) & ~zero))}
        if lemma_id == "decay.gap_rate":
            details["violations_with_rate_lowered_by_nK"] = int(np.count_nonzero(shifted < 0))
            details["violations_with_h2_above_1e3"] = int(np.count_nonzero((slack < 0) & (h2 > 1e3)))
        reports.append(summarize(lemma_id, slack, False, record, ms, details))
        if rows is not None:
            rows.extend((lemma_id, n, profile.m, K, eps, float(inv["h2"][i]), float(inv["p2"][i]), float(lhs[i]),
                         float(rhs[i]), float(slack[i]), bool(slack[i] >= 0)) for i in range(samples))
    coeffs = decay_coefficients(n, eps, K)
    names = list(coeffs)
    vals = np.array([coeffs[k] for k in names])
    reports.append(summarize("decay.coefficients", vals, False,
                             lambda i: dict(meta, condition=names[i], margin=float(vals[i])), ms,
                             {"relation": ">= 0", "margins": coeffs}))
    return reports


def decay_coefficients(n: int, eps: float, kbar: float = 1.0) -> dict[str, float]:
    """Signed margins (>= 0 is good) of the scalar facts the decay chain leans on."""
    k = (n - 2) / (2.0 - eps * n)
    r = math.sqrt(n)
    return {
        # |h_ring|^2 coefficient may be dropped
        "hring_coefficient": k - 3.0,
        # n K (1 + 2(1-2 eps n)/sqrt(n)) >= 4 sqrt(n) K (1 - 2 eps n)
        "drift_dominance": n * kbar * (1.0 + 2.0 * (1.0 - 2.0 * eps * n) / r) - 4.0 * r * kbar * (1.0 - 2.0 * eps * n),
        # the |H|^2 coefficient that is discarded must be negative
        "h2_coefficient": -((2.0 - 4.0 * eps * n - r) / r * (1.0 - eps) / (n - 2) + 1.0 / n),
        # the discarded quadratic in |A^-|^2 must have negative discriminant
        "quadratic_discriminant": -quartic_discriminant(n, eps),
    }


def quartic_discriminant(n: int, eps: float) -> float:
    """Discriminant (in units of K^2 n) of the quadratic in |A^-|^2 that the decay argument discards.

    The argument needs this to be negative so the quadratic keeps one sign.
    """
    k = (n - 2) / (2.0 - eps * n)
    c = (1.0 - 2.0 * eps * n) ** 2
    return (-5.0 + 2.0 * k + k * k) * c + (6.0 - 4.0 * k) * (1.0 - eps * n * math.sqrt(n))
