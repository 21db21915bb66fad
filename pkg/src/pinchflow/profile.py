"""Quartic pinching profile and the product-of-spheres comparison family.

The profile bundles the dimensional constants (n, m, kbar, eps) with the
scalar functions built from them:

* ``a(x)``    the quartic pinching function of ``x = |H|^2``,
* ``å(x)``    its shift ``a(x) - x/n`` (written ``a_ring`` in code),
* ``omega``   the linear weight used for the eps-strengthened condition,
* ``f``       the pinching gap ``a(|H|^2) - |A|^2 - eps * omega(|H|^2)``.

All functions broadcast over numpy arrays and return a Python float for
scalar input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# Distance kept from the ends of (0, pi/2) where tan/cot overflow.
PHI_GUARD = 1e-6
# Relative slack allowed when checking the Cauchy-Schwarz floor |A|^2 >= |H|^2/n.
_CS_RTOL = 1e-10


def default_eps(n: int) -> float:
    """Default pinching slack, a fixed small multiple of n^(-5/2)."""
    return 0.01 * float(n) ** -2.5


def _nonneg(x, name: str):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0, got min {arr.min()!r}")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class PinchingProfile:
    """Constants of the quartic pinching condition.

    ``eps=None`` selects :func:`default_eps`. ``eps=0`` is accepted and gives
    the unstrengthened condition. Dimensions below the theorem range are
    accepted and flagged through :attr:`in_theorem_range`.
    """

    n: int
    m: int = 2
    kbar: float = 1.0
    eps: float | None = None
    # cached sqrt(n), kept out of repr/eq
    _sqrt_n: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n!r}")
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise DomainError(f"m must be an integer >= 1, got {self.m!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        kbar = float(self.kbar)
        if not (math.isfinite(kbar) and kbar > 0):
            raise DomainError(f"kbar must be positive and finite, got {self.kbar!r}")
        object.__setattr__(self, "kbar", kbar)
        eps = default_eps(self.n) if self.eps is None else float(self.eps)
        if not (0.0 <= eps < self.n ** -2.5):
            raise DomainError(f"eps must lie in [0, n^-2.5) = [0, {self.n ** -2.5:.3g}), got {eps!r}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "_sqrt_n", math.sqrt(self.n))

    @property
    def in_theorem_range(self) -> bool:
        """True when n >= 8 and m >= 2."""
        return self.n >= 8 and self.m >= 2

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "kbar": self.kbar, "eps": self.eps}

    # -- scalar functions -------------------------------------------------
    def _shift(self, x):
        return x / (self.n - 2) + 4.0 * self.kbar

    def a(self, x):
        """Quartic pinching function a(x), x = |H|^2 >= 0."""
        if self.n <= 2:
            raise DomainError("a(x) needs n > 2")
        x = _nonneg(x, "x")
        u = self._shift(x)
        return _out(np.sqrt(u * u + (4 * self.n - 16) * self.kbar**2))

    def a_ring(self, x):
        """a(x) - x/n."""
        x = _nonneg(x, "x")
        return _out(self.a(x) - x / self.n)

    def a_ring_prime(self, x):
        x = _nonneg(x, "x")
        u = self._shift(x)
        a = np.asarray(self.a(x))
        return _out(u / ((self.n - 2) * a) - 1.0 / self.n)

    def a_ring_double_prime(self, x):
        x = _nonneg(x, "x")
        a = np.asarray(self.a(x))
        return _out((4 * self.n - 16) * self.kbar**2 / ((self.n - 2) ** 2 * a**3))

    def omega(self, h2):
        """Linear weight h2/(n-2) + 4 n sqrt(n) kbar."""
        h2 = _nonneg(h2, "h2")
        return _out(h2 / (self.n - 2) + 4.0 * self.n * self._sqrt_n * self.kbar)

    def gap(self, a2, h2):
        """Pinching gap f = a(h2) - a2 - eps*omega(h2)."""
        h2 = _nonneg(h2, "h2")
        a2 = _nonneg(a2, "a2")
        floor = h2 / self.n
        if np.any(a2 < floor * (1.0 - _CS_RTOL)):
            raise DomainError("a2 < h2/n: inconsistent norms (|A|^2 >= |H|^2/n always)")
        return _out(np.asarray(self.a(h2)) - a2 - self.eps * np.asarray(self.omega(h2)))

    def pinched(self, a2, h2):
        """True iff the (eps-strengthened) quartic pinching condition holds."""
        g = np.asarray(self.gap(a2, h2))
        res = g >= 0
        return bool(res) if res.ndim == 0 else res


# Functional aliases mirroring the operation names used in reports.
def a_of(profile: PinchingProfile, x):
    return profile.a(x)


def a_ring(profile: PinchingProfile, x):
    return profile.a_ring(x)


def a_ring_prime(profile: PinchingProfile, x):
    return profile.a_ring_prime(x)


def a_ring_double_prime(profile: PinchingProfile, x):
    return profile.a_ring_double_prime(x)


def omega_of(profile: PinchingProfile, h2):
    return profile.omega(h2)


def pinching_gap(profile: PinchingProfile, a2, h2):
    return profile.gap(a2, h2)


def quartic_pinched(profile: PinchingProfile, a2, h2):
    return profile.pinched(a2, h2)


# -- product of spheres S^p(cos phi) x S^q(sin phi) in S^{p+q+1} ------------
@dataclass(frozen=True)
class SharpFamilyPoint:
    p: int
    q: int
    phi: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))
        phi = float(self.phi)
        if not (PHI_GUARD <= phi <= math.pi / 2 - PHI_GUARD):
            raise DomainError(f"phi must lie in (0, pi/2) away from the endpoints, got {phi!r}")
        object.__setattr__(self, "phi", phi)

    @property
    def r(self) -> float:
        return math.cos(self.phi)

    @property
    def s(self) -> float:
        return math.sin(self.phi)

    @property
    def n(self) -> int:
        return self.p + self.q


def minimal_angle(p: int, q: int) -> float:
    """Angle of the minimal (Clifford) member, tan^2 phi = q/p."""
    return math.atan(math.sqrt(q / p))


def signed_mean_curvature(point: SharpFamilyPoint) -> float:
    """Component of H along d/dphi: p tan(phi) - q cot(phi)."""
    t = math.tan(point.phi)
    return point.p * t - point.q / t


def sharp_family_geometry(point: SharpFamilyPoint) -> tuple[float, float]:
    """(|A|^2, |H|^2) of S^p(cos phi) x S^q(sin phi) in the unit sphere."""
    t = math.tan(point.phi)
    a2 = point.p * t * t + point.q / (t * t)
    h = point.p * t - point.q / t
    return a2, h * h


class SharpnessDefect(NamedTuple):
    measured: float
    printed_coeff_value: float
    corrected_coeff_value: float
    matches: str  # "corrected", "printed", "both" or "neither"


def sharpness_defect(point: SharpFamilyPoint, kbar: float = 1.0, rtol: float = 1e-10) -> SharpnessDefect:
    """How far S^2(r) x S^{n-2}(s) sits above the quartic pinching curve.

    Returns the measured value ``|A|^4 - (|H|^2/(n-2) + 4)^2 - (4n - 16)``
    together with the two candidate closed forms
    ``4((n-2)^2 - 1)/(n-2)^2 * s^4/r^4`` (as printed) and
    ``4((n-2)^2 - 4)/(n-2)^2 * s^4/r^4`` (from direct expansion),
    and which of them the measurement agrees with at relative tolerance ``rtol``.
    """
    if point.p != 2:
        raise DomainError("sharpness defect is defined for p = 2")
    if kbar != 1.0:
        raise DomainError("the product family lives in the unit sphere: kbar must be 1")
    n = point.n
    if n <= 2:
        raise DomainError("need n > 2")
    a2, h2 = sharp_family_geometry(point)
    measured = a2 * a2 - (h2 / (n - 2) + 4.0) ** 2 - (4 * n - 16)
    t = math.tan(point.phi) ** 2
    k = (n - 2) ** 2
    printed = 4.0 * (k - 1) / k * t * t
    corrected = 4.0 * (k - 4) / k * t * t

    def close(v):
        return abs(measured - v) <= rtol * max(abs(v), abs(measured), 1e-300)

    c, p = close(corrected), close(printed)
    matches = "both" if (c and p) else "corrected" if c else "printed" if p else "neither"
    return SharpnessDefect(measured, printed, corrected, matches)
