"""Coefficient bookkeeping of the gradient-term estimate for the codimension quantity.

The gradient estimate is assembled from three Young inequalities with
constants ``a1 = 1``, ``a2 = 2(n+2)/((n-1)(n-2))`` and
``a3 = 2(n+2)/((n-1)(n-2) - 2(n+2))``. Two coefficient conditions on the
mixing parameter delta come out of it:

* cross terms |A^-|^2 |grad nu_1|^2:  delta <= (3n^2 - 5n - 10) / (2(n-2)(n+2))
* terms (|A^-|^2/f)|<grad A_ring, nu_1>|^2:
  2 a2 + 2 a3 (n+2)/((n-1)(n-2)) <= (1-delta)(n+2)/(n-1)
  which is equivalent to delta <= delta_max(n) = (n^3-11n^2+24n+4)/(n^3-7n^2+8n+4).

Everything here is exact rational arithmetic except the sampled check of
the combined Young bound, which runs on pinched tensors at large |H|.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from ..profile import PinchingProfile
from ..sff import batch_invariants
from .reaction import pinched_stack
from .report import VerificationReport, summarize

GRADIENT_IDS = ("gradient.young_constants", "gradient.cross_term_bound", "gradient.delta_bound",
                "gradient.delta_ordering", "gradient.young_bound")


def young_a2(n: int) -> Fraction:
    return Fraction(2 * (n + 2), (n - 1) * (n - 2))


def young_a3(n: int) -> Fraction:
    return Fraction(2 * (n + 2), (n - 1) * (n - 2) - 2 * (n + 2))


def delta_max(n: int) -> Fraction:
    """Largest delta allowed by the |<grad A_ring, nu_1>|^2 coefficient condition."""
    return Fraction(n**3 - 11 * n**2 + 24 * n + 4, n**3 - 7 * n**2 + 8 * n + 4)


def delta_cross_bound(n: int) -> Fraction:
    """Largest delta allowed by the |A^-|^2 |grad nu_1|^2 coefficient condition."""
    return Fraction(3 * n**2 - 5 * n - 10, 2 * (n - 2) * (n + 2))


def delta_from_young(n: int) -> Fraction:
    """Solve 2 a2 + 2 a3 (n+2)/((n-1)(n-2)) = (1 - delta)(n+2)/(n-1) for delta."""
    lhs = 2 * young_a2(n) + 2 * young_a3(n) * Fraction(n + 2, (n - 1) * (n - 2))
    return 1 - lhs / Fraction(n + 2, n - 1)


def delta_from_cross(n: int) -> Fraction:
    """Solve 2 = (n-1)(n-2)/(n+2) + 2(1 - delta)(n-2) for delta."""
    return 1 - (2 - Fraction((n - 1) * (n - 2), n + 2)) / (2 * (n - 2))


def young_constants_consistent(n: int) -> bool:
    """The Young constants absorb the |h_ring|^2 and f terms exactly."""
    c = Fraction((n - 1) * (n - 2), n + 2)
    return 2 / young_a3(n) == c - 2 and 2 / young_a2(n) == c


def ordering_holds(n: int) -> bool:
    return delta_max(n) <= delta_cross_bound(n)


def check_gradient_coefficients(n_values=range(4, 10_001)) -> list[VerificationReport]:
    """Exact checks over a range of dimensions.

    ``gradient.delta_ordering`` uses a signed margin that is positive exactly
    when "delta_max <= cross bound" agrees with "n >= 6".
    """
    t0 = time.perf_counter()
    ns = [int(n) for n in n_values]
    if min(ns) < 3:
        raise ValueError("dimensions below 3 make the Young constants undefined")
    young = np.array([0.0 if young_constants_consistent(n) else -1.0 for n in ns])
    cross = np.array([0.0 - abs(float(delta_from_cross(n) - delta_cross_bound(n))) for n in ns])
    bound = np.array([0.0 - abs(float(delta_from_young(n) - delta_max(n))) for n in ns])
    margin = []
    for n in ns:
        gap = delta_cross_bound(n) - delta_max(n)
        margin.append(float(gap if n >= 6 else -gap))
    margin = np.array(margin)
    ms = int(round((time.perf_counter() - t0) * 1000))

    def rec(arr):
        return lambda i: {"n": ns[i], "margin": float(arr[i])}

    spot = {n: {"delta_max": str(delta_max(n)), "cross_bound": str(delta_cross_bound(n))}
            for n in (3, 4, 5, 6, 7, 8)}
    ordering_set = [n for n in range(3, 64) if ordering_holds(n)]
    details = {"n_range": [min(ns), max(ns)], "spot_values": spot,
               "delta_max_8": str(delta_max(8)),
               "dimensions_with_nonpositive_delta_max": [n for n in range(3, 64) if delta_max(n) <= 0],
               "ordering_holds_for_n_below_64": ordering_set}
    return [
        summarize("gradient.young_constants", young, False, rec(young), ms, dict(details, relation="exact")),
        summarize("gradient.cross_term_bound", cross, False, rec(cross), ms, dict(details, relation="exact")),
        summarize("gradient.delta_bound", bound, False, rec(bound), ms, dict(details, relation="exact")),
        summarize("gradient.delta_ordering", margin, True, rec(margin), ms,
                  dict(details, relation="ordering holds iff n >= 6")),
    ]


def young_bound_sides(inv: dict, n: int, grads: np.ndarray, f: np.ndarray):
    """Both sides of the combined Young bound for the Q-A^- cross term.

    ``grads`` holds (X_minus, X_ring, X_H, Y) per sample:
    |<grad A^-, nu_1>|, |<grad A_ring, nu_1>|, |grad |H||, |grad nu_1|.
    The left side is the triangle-inequality bound
    4 (X_ring + X_minus + |h_ring| X_H / |H|) |A^-| Y.
    """
    a2 = float(young_a2(n))
    a3 = float(young_a3(n))
    xm, xr, xh, y = grads.T
    p2, hr2, h2 = inv["p2"], inv["hring2"], inv["h2"]
    lhs = 4.0 * (xr + xm + np.sqrt(hr2) * xh / np.sqrt(h2)) * np.sqrt(p2) * y
    coef = 2.0 * a2 + 2.0 * a3 * (n + 2) / ((n - 1) * (n - 2))
    rhs = (2.0 * xm**2 + coef * p2 / f * xr**2 + 2.0 * p2 * y**2 + 2.0 / a2 * f * y**2
           + 2.0 / a3 * hr2 * y**2)
    return lhs, rhs


def sample_gradients(profile: PinchingProfile, seed: int, samples: int, h2: np.ndarray) -> np.ndarray:
    """Gradient magnitudes obeying |grad|H||^2 <= n(n+2)/(2(n-1)) |<grad A_ring, nu_1>|^2.

    The ceiling is attained on half the samples. Magnitudes are scaled like
    |H|^{3/2}, the parabolic scaling of first derivatives of A.
    """
    n = profile.n
    rng = np.random.default_rng([int(seed), 3, n, profile.m])
    scale = h2 ** 0.75
    raw = scale[:, None] * 10.0 ** rng.uniform(-3.0, 1.0, (samples, 3))
    xm, xr, y = raw.T
    y = y / np.sqrt(h2)  # |grad nu_1| carries one fewer power of curvature
    cap = math.sqrt(n * (n + 2) / (2.0 * (n - 1))) * xr
    frac = np.where(rng.random(samples) < 0.5, 1.0, rng.random(samples))
    return np.stack([xm, xr, frac * cap, y], axis=1)


def check_young_bound(profile: PinchingProfile, samples: int = 10_000, seed: int = 0, h2: float = 1e6,
                      rows: list | None = None) -> VerificationReport:
    if profile.n < 6:
        raise ValueError("the gradient estimate needs n >= 6")
    t0 = time.perf_counter()
    n = profile.n
    B = pinched_stack(profile, seed, np.full(samples, float(h2)), tag=3)
    inv = batch_invariants(B)
    f = np.asarray(profile.gap(np.maximum(inv["a2"], inv["h2"] / n), inv["h2"]))
    grads = sample_gradients(profile, seed, samples, inv["h2"])
    lhs, rhs = young_bound_sides(inv, n, grads, f)
    slack = rhs - lhs
    ms = int(round((time.perf_counter() - t0) * 1000))
    asym = 2.0 * inv["h2"] / (n * (n - 2))
    meta = {"n": n, "m": profile.m, "kbar": profile.kbar, "eps": profile.eps, "seed": seed}

    def record(i):
        return dict(meta, index=int(i), h2=float(inv["h2"][i]), p2=float(inv["p2"][i]), f=float(f[i]),
                    gradients=grads[i].tolist(), lhs=float(lhs[i]), rhs=float(rhs[i]), slack=float(slack[i]))

    if rows is not None:
        rows.extend(("gradient.young_bound", n, profile.m, profile.kbar, profile.eps, float(inv["h2"][i]),
                     float(inv["p2"][i]), float(lhs[i]), float(rhs[i]), float(slack[i]), bool(slack[i] >= 0))
                    for i in range(samples))
    return summarize("gradient.young_bound", slack, False, record, ms,
                     {"relation": "<=", "h2": h2,
                      "samples_with_f_above_asymptote": int(np.count_nonzero(f >= asym))})


def check_gradient_lemmas(profile: PinchingProfile, samples: int = 10_000, seed: int = 0,
                          n_values=range(4, 10_001), rows: list | None = None) -> list[VerificationReport]:
    return check_gradient_coefficients(n_values) + [check_young_bound(profile, samples, seed, rows=rows)]
