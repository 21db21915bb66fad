"""Grid certification of the scalar inequalities satisfied by the pinching profile.

Every check is homogeneous in kbar, so the sides are evaluated at kbar = 1
with ``y = x / kbar`` and rescaled by the appropriate power of kbar.

Two of the bounds hold with equality at ``x = 0`` and one of them is also
asymptotically tight, so plain floating-point subtraction of the two sides
cannot decide their sign near those points. Their slacks are evaluated from
rationalized closed forms in which every cancellation has been carried out
by hand; each is a product and quotient of positive terms (for n >= 8) with
an explicit factor of ``x``, so the tie at ``x = 0`` comes out as exactly 0.
"""
from __future__ import annotations

import time
from typing import Callable, NamedTuple

import numpy as np

from ..profile import PinchingProfile
from .report import ScanSpec, VerificationReport, summarize


class Item(NamedTuple):
    lemma_id: str
    strict: bool
    degree: int  # power of kbar carried by both sides
    relation: str  # displayed relation between lhs and rhs
    fn: Callable[[int, np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


def _base(n: int, y: np.ndarray):
    u = y / (n - 2) + 4.0
    a = np.sqrt(u * u + (4 * n - 16))
    ar = a - y / n
    ap = u / ((n - 2) * a) - 1.0 / n
    app = (4 * n - 16) / ((n - 2) ** 2 * a**3)
    return a, ar, ap, app


def _radical(n: int, y: np.ndarray) -> np.ndarray:
    """(n-2) a(y) = sqrt(y^2 + 8(n-2)y + 4n(n-2)^2)."""
    return np.sqrt(y * y + 8 * (n - 2) * y + 4 * n * (n - 2) ** 2)


def ratio_item(n, y):
    """4 y å'^2 / å < 1."""
    a, ar, ap, _ = _base(n, y)
    lhs = 4 * y * ap * ap / ar
    rhs = np.ones_like(y)
    return lhs, rhs, rhs - lhs


def curvature_item(n, y):
    """2 y å'' + å' < 2(n-1)/(n(n+2))."""
    _, _, ap, app = _base(n, y)
    lhs = 2 * y * app + ap
    rhs = np.full_like(y, 2.0 * (n - 1) / (n * (n + 2)))
    return lhs, rhs, rhs - lhs


def reaction_floor_lhs(n, y):
    """n(å + y å') - a(å - y å') at kbar = 1, without cancellation."""
    A = _radical(n, y)
    N = y * y + 6 * (n - 2) * y + 2 * n * (n - 2) ** 2
    M = y + 2 * (n - 2)
    return 8.0 * n * (n - 4) * (n - 2) ** 2 * (n * (n - 2) + 2 * y) / (A * (N + M * A))


def reaction_floor_item(n, y):
    """n(å + y å') - a(å - y å') >= 8n(n-4)(n-2)^2 / (y + c(n-2))^2, c = sqrt(8 + 2 sqrt(4n))."""
    s = np.sqrt(n)
    r = np.sqrt(s + 2.0)
    c = 2.0 * r  # sqrt(8 + 2 sqrt(4n))
    A = _radical(n, y)
    Asq = y * y + 8 * (n - 2) * y + 4 * n * (n - 2) ** 2
    N = y * y + 6 * (n - 2) * y + 2 * n * (n - 2) ** 2
    M = y + 2 * (n - 2)
    C = 8.0 * n * (n - 4) * (n - 2) ** 2
    shift = y + c * (n - 2)
    lhs = reaction_floor_lhs(n, y)
    rhs = C / shift**2
    # slack = C * (P - N A) / (A (N + M A) shift^2) with P - N A = G / (P + N A)
    P = (n * (n - 2) + 2 * y) * shift**2 - M * Asq
    g0 = 32 * n * (n - 2) ** 3 * (r * s - s - 2)
    g1 = -4 * (s - 2) * (n - 2) ** 2 * (8 * r * s - 6 * n - 19 * s - 18)
    g2 = 8 * (n - 2) * (r * n - 10 * r - n + 5 * s + 6)
    g3 = 8 * r + n - 20
    cubic = ((g3 * y + g2) * y + g1) * y + g0
    G = y * (n - 2) * (n * (n - 2) + 2 * y) * cubic
    slack = C * (G / (P + N * A)) / (A * (N + M * A) * shift**2)
    return lhs, rhs, slack


def drift_coefficient(n, y):
    """2å - y/n + y å' at kbar = 1."""
    A = _radical(n, y)
    num = n * (8 * n**3 - 32 * n**2 + 20 * n * y + 32 * n + 3 * y * y - 40 * y) - 4 * y * (n - 2) * A
    return num / (A * n * (n - 2))


def drift_ceiling_item(n, y):
    """2å - y/n + y å' <= 2 sqrt(4n) - (n-8)y/(n(n-2)) - 6(sqrt(4n)-4) y / (3y + 2 sqrt(4n)(n-2))."""
    s = np.sqrt(n)
    t = np.sqrt(4.0 * n)
    lhs = drift_coefficient(n, y)
    rhs = 2 * t - (n - 8) * y / (n * (n - 2)) - 6 * (t - 4) * y / (3 * y + 2 * t * (n - 2))
    A = _radical(n, y)
    w = 4 * s**3 - 8 * s + 3 * y
    P = -n * w * (8 * n**3 - 32 * n**2 + 20 * n * y + 32 * n + 3 * y * y - 40 * y)
    Q = n * (16 * n**3 - 64 * n**2 + 12 * s**3 * y + 24 * n * y + 64 * n - 24 * s * y + 9 * y * y - 48 * y)
    G = (
        160 * s**7 - 256 * n**3 - 640 * s**5 + 1024 * n**2 + 640 * s**3 - 1024 * n
        + y * (24 * n**2 + 336 * s**3 - 624 * n - 672 * s + 1152)
        + y * y * (45 * s - 54)
    )
    num = -4.0 * n**2 * y * y * (s - 2) * (n - 2) ** 2 * G  # = P^2 - Q^2 A^2
    slack = num / ((P - Q * A) * A * n * (n - 2) * w)
    return lhs, rhs, slack


def omega_mix_item(n, y):
    """y/(n-2)(a+n) - (y/(n-2) + 4n sqrt(n))(å + a - n - y å') < -2y/(n-2)(2n sqrt(n) - n + 2) + 4n sqrt(n)(n-8)."""
    a, ar, ap, _ = _base(n, y)
    s = np.sqrt(n)
    lhs = y / (n - 2) * (a + n) - (y / (n - 2) + 4 * n * s) * (ar + a - n - y * ap)
    rhs = -2 * y / (n - 2) * (2 * n * s - n + 2) + 4 * n * s * (n - 8)
    return lhs, rhs, rhs - lhs


SCALAR_ITEMS = (
    Item("scalar.ratio", True, 0, "<", ratio_item),
    Item("scalar.curvature", True, 0, "<", curvature_item),
    Item("scalar.reaction_floor", False, 2, ">=", reaction_floor_item),
    Item("scalar.drift_ceiling", False, 1, "<=", drift_ceiling_item),
    Item("scalar.omega_mix", True, 2, "<", omega_mix_item),
)
ITEMS_BY_ID = {it.lemma_id: it for it in SCALAR_ITEMS}


def evaluate_item(lemma_id: str, n: int, kbar: float, x):
    """(lhs, rhs, slack) of one scalar item at physical ``x`` and ``kbar``."""
    it = ITEMS_BY_ID[lemma_id]
    x = np.asarray(x, dtype=float)
    lhs, rhs, slack = it.fn(n, x / kbar)
    scale = kbar**it.degree
    return lhs * scale, rhs * scale, slack * scale


def check_scalar_bounds(profile_template: PinchingProfile | None = None, spec: ScanSpec | None = None,
                        rows: list | None = None, items=SCALAR_ITEMS) -> list[VerificationReport]:
    """Scan every scalar item over ``spec.n_set x spec.kbar_set x x-grid``.

    ``profile_template`` only supplies ``m`` and ``eps`` for the records; the
    items themselves depend on n and kbar alone. When ``rows`` is a list,
    one CSV row per evaluated point is appended to it.
    """
    spec = spec or ScanSpec()
    m = profile_template.m if profile_template else 2
    reports = []
    for it in items:
        t0 = time.perf_counter()
        slacks, recs = [], []
        for n in spec.n_set:
            eps = profile_template.eps if (profile_template and profile_template.n == n) else PinchingProfile(n, m).eps
            for kbar in spec.kbar_set:
                x = spec.x_grid(kbar)
                lhs, rhs, slack = evaluate_item(it.lemma_id, n, kbar, x)
                slacks.append(slack)
                recs.append((n, kbar, eps, x, lhs, rhs, slack))
                if rows is not None:
                    ok = slack > 0 if it.strict else slack >= 0
                    rows.extend(
                        (it.lemma_id, n, m, kbar, eps, xi, 0.0, li, ri, si, bool(oi))
                        for xi, li, ri, si, oi in zip(x, lhs, rhs, slack, ok)
                    )
        offsets = np.cumsum([0] + [len(r[3]) for r in recs])

        def record(idx, recs=recs, offsets=offsets):
            block = int(np.searchsorted(offsets, idx, side="right") - 1)
            n, kbar, eps, x, lhs, rhs, slack = recs[block]
            j = idx - offsets[block]
            return {"n": n, "m": m, "kbar": kbar, "eps": eps, "x": float(x[j]), "p2": 0.0,
                    "lhs": float(lhs[j]), "rhs": float(rhs[j]), "slack": float(slack[j])}

        ms = int(round((time.perf_counter() - t0) * 1000))
        rep = summarize(it.lemma_id, np.concatenate(slacks), it.strict, record, ms,
                        {"relation": it.relation})
        reports.append(rep)
    return reports


# -- the quadratic-in-P2 lemma --------------------------------------------------
def quadratic_form(n: int, kbar: float, x, p2):
    """E = a(å - xå') - n kbar (å + xå') + P2 (2å - x/n + xå') - (3/2) P2^2 (broadcasts)."""
    y = np.asarray(x, dtype=float) / kbar
    c = reaction_floor_lhs(n, y) * kbar**2
    b = drift_coefficient(n, y) * kbar
    p2 = np.asarray(p2, dtype=float)
    return -c + p2 * b - 1.5 * p2 * p2


def discriminant(n: int, kbar: float, x):
    """(2å - x/n + xå') - sqrt(6 (n kbar (å + xå') - a(å - xå'))).

    Negative at x exactly when the quadratic in P2 is negative for every P2 >= 0.
    """
    y = np.asarray(x, dtype=float) / kbar
    c = reaction_floor_lhs(n, y)
    b = drift_coefficient(n, y)
    return (b - np.sqrt(6.0 * c)) * kbar


def window_expression(n):
    """(1/2 - 4/n)(sqrt(12(1 - 4/n)) - sqrt(32/n + 16/sqrt(n)))."""
    n = np.asarray(n, dtype=float)
    return (0.5 - 4.0 / n) * (np.sqrt(12 * (1 - 4.0 / n)) - np.sqrt(32.0 / n + 16.0 / np.sqrt(n)))


def gh_expression(n):
    """1 - g(n) h(n) with g = 2 - 4/n - 3/sqrt(n), h = sqrt(2/n + 1/sqrt(n))."""
    n = np.asarray(n, dtype=float)
    return 1.0 - (2 - 4.0 / n - 3.0 / np.sqrt(n)) * np.sqrt(2.0 / n + 1.0 / np.sqrt(n))


WINDOWS = (
    ("quadratic.window_small_n", 8, 100, 2.31, 2.46),
    ("quadratic.window_large_n", 101, 10_000, 1.249, 1.787),
)


def check_quadratic(profile_template: PinchingProfile | None = None, spec: ScanSpec | None = None,
                    p2_max: float = 1e3, p2_points: int = 1000, rows: list | None = None) -> list[VerificationReport]:
    """Scan the quadratic-in-P2 inequality, its discriminant and the printed constant windows."""
    spec = spec or ScanSpec()
    m = profile_template.m if profile_template else 2
    p2 = np.linspace(0.0, p2_max, p2_points)
    reports = []

    t0 = time.perf_counter()
    worst, slack_min_per = [], []
    total = 0
    violations = 0
    for n in spec.n_set:
        eps = PinchingProfile(n, m).eps
        for kbar in spec.kbar_set:
            x = spec.x_grid(kbar)
            y = x / kbar
            c = reaction_floor_lhs(n, y) * kbar**2
            b = drift_coefficient(n, y) * kbar
            # chunk over x to bound memory
            for start in range(0, x.size, 512):
                sl = slice(start, start + 512)
                E = -c[sl, None] + p2[None, :] * b[sl, None] - 1.5 * p2[None, :] ** 2
                slack = -E
                violations += int(np.count_nonzero(slack <= 0))
                total += slack.size
                j = int(np.argmin(slack))
                i, k = divmod(j, p2.size)
                slack_min_per.append(float(slack[i, k]))
                xi = float(x[sl][i])
                worst.append({"n": n, "m": m, "kbar": kbar, "eps": eps, "x": xi, "p2": float(p2[k]),
                              "lhs": float(E[i, k]), "rhs": 0.0, "slack": float(slack[i, k])})
                if rows is not None:
                    for ii in range(E.shape[0]):
                        rows.extend(
                            ("quadratic.negativity", n, m, kbar, eps, float(x[sl][ii]), float(pp), float(e), 0.0,
                             float(-e), bool(-e > 0))
                            for pp, e in zip(p2, E[ii])
                        )
    idx = int(np.argmin(slack_min_per))
    ms = int(round((time.perf_counter() - t0) * 1000))
    reports.append(VerificationReport("quadratic.negativity", total, violations, slack_min_per[idx], worst[idx],
                                      ms, True, 0, {"relation": "<", "p2_max": p2_max, "p2_points": p2_points}))

    # discriminant of the quadratic, one value per x
    t0 = time.perf_counter()
    slacks, recs = [], []
    for n in spec.n_set:
        for kbar in spec.kbar_set:
            x = spec.x_grid(kbar)
            d = discriminant(n, kbar, x)
            slacks.append(-d)
            recs.append((n, kbar, x, d))
    offsets = np.cumsum([0] + [len(r[2]) for r in recs])

    def drec(i):
        blk = int(np.searchsorted(offsets, i, side="right") - 1)
        n, kbar, x, d = recs[blk]
        j = i - offsets[blk]
        return {"n": n, "m": m, "kbar": kbar, "eps": PinchingProfile(n, m).eps, "x": float(x[j]), "p2": 0.0,
                "lhs": float(d[j]), "rhs": 0.0, "slack": float(-d[j])}

    ms = int(round((time.perf_counter() - t0) * 1000))
    reports.append(summarize("quadratic.discriminant", np.concatenate(slacks), True, drec, ms, {"relation": "<"}))

    for lemma_id, lo_n, hi_n, lo, hi in WINDOWS:
        t0 = time.perf_counter()
        ns = np.arange(lo_n, hi_n + 1)
        w = window_expression(ns)
        slack = np.minimum(w - lo, hi - w)

        def wrec(i, ns=ns, w=w, lo=lo, hi=hi):
            return {"n": int(ns[i]), "value": float(w[i]), "lower": lo, "upper": hi,
                    "lower_slack": float(w[i] - lo), "upper_slack": float(hi - w[i])}

        ms = int(round((time.perf_counter() - t0) * 1000))
        det = {
            "relation": "lower < value < upper",
            "value_min": float(w.min()), "value_max": float(w.max()),
            "lower_bound_violations": int(np.count_nonzero(w <= lo)),
            "upper_bound_violations": int(np.count_nonzero(w >= hi)),
        }
        reports.append(summarize(lemma_id, slack, True, wrec, ms, det))
    return reports
