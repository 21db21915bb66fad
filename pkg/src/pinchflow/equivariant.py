"""Mean curvature flow of S^p(cos phi) x S^q(sin phi) inside the unit sphere.

The product stays a product of round spheres under the flow, so the whole
evolution reduces to one angle::

    d(phi)/dt = p tan(phi) - q cot(phi)

Below the Clifford angle (tan^2 phi = q/p) the angle decreases and the
S^p factor shrinks to a point in finite time; above it the S^q factor does.
The sign was fixed by moving the explicit embedding along its mean
curvature vector (see :func:`pinchflow.embedding.fd_phi_velocity`).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, RatioUndefined, StepUnderflow
from .parallel import chunked_map
from .profile import PinchingProfile, SharpFamilyPoint, minimal_angle, sharp_family_geometry

TRAJECTORY_HEADER = ["t", "phi", "a2", "h2", "f", "ratio", "pinched"]
DT_FLOOR = 1e-16
FIXED_POINT_TOL = 1e-10
# |H| below this fraction of |A| counts as zero mean curvature
H_RTOL = 1e-12


class Termination(str, Enum):
    CURVATURE_CAP = "CurvatureCap"
    MINIMAL_EQUILIBRIUM = "MinimalEquilibrium"
    TIME_LIMIT = "TimeLimit"


@dataclass(frozen=True)
class EquivariantState:
    p: int
    q: int
    phi: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise DomainError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))
        phi = float(self.phi)
        if not (0.0 < phi < math.pi / 2):
            raise DomainError(f"phi must lie in (0, pi/2), got {phi!r}")
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise DomainError(f"t must be finite and >= 0, got {self.t!r}")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.p + self.q


def _norms(p: int, q: int, phi: float) -> tuple[float, float]:
    t = math.tan(phi)
    h = p * t - q / t
    return p * t * t + q / (t * t), h * h


def geometry(state: EquivariantState) -> tuple[float, float, float]:
    """(|A|^2, |H|^2, |A|^2/|H|^2)."""
    a2, h2 = _norms(state.p, state.q, state.phi)
    if h2 <= (H_RTOL**2) * a2:
        raise RatioUndefined("|H| = 0 on the minimal member")
    return a2, h2, a2 / h2


def rhs(state: EquivariantState) -> float:
    """d(phi)/dt."""
    t = math.tan(state.phi)
    return state.p * t - state.q / t


def clifford_state(p: int, q: int) -> EquivariantState:
    return EquivariantState(p, q, minimal_angle(p, q))


@dataclass
class Trajectory:
    """Sampled solution with per-step monitors.

    Arrays all have the same length; ``ratio`` is NaN where |H| vanishes.
    """

    p: int
    q: int
    profile: PinchingProfile
    t: np.ndarray
    phi: np.ndarray
    a2: np.ndarray
    h2: np.ndarray
    f: np.ndarray
    ratio: np.ndarray
    pinched: np.ndarray
    termination: Termination
    settings: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def states(self) -> list[EquivariantState]:
        return [EquivariantState(self.p, self.q, float(ph), float(tt)) for tt, ph in zip(self.t, self.phi)]

    def monitor(self, index: int) -> dict:
        i = _index(self, index)
        return {"t": float(self.t[i]), "phi": float(self.phi[i]), "a2": float(self.a2[i]),
                "h2": float(self.h2[i]), "f": float(self.f[i]), "ratio": float(self.ratio[i]),
                "pinched": bool(self.pinched[i])}

    def rows(self):
        for i in range(len(self)):
            m = self.monitor(i)
            yield [m[k] for k in TRAJECTORY_HEADER]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for row in self.rows():
            w.writerow(["true" if v is True else "false" if v is False else repr(v) for v in row])
        return buf.getvalue()

    def summary(self) -> dict:
        final = self.monitor(-1)
        return {
            "p": self.p, "q": self.q, "profile": self.profile.to_dict(), "settings": self.settings,
            "termination": self.termination.value, "steps": len(self) - 1,
            "initial": _jsonable(self.monitor(0)), "final": _jsonable(final),
            "min_f": float(np.min(self.f)), "all_pinched": bool(np.all(self.pinched)),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2)


def _jsonable(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def _index(traj: Trajectory, index: int) -> int:
    if not -len(traj) <= index < len(traj):
        raise IndexError(f"index {index} out of range for trajectory of length {len(traj)}")
    return index % len(traj)


def evolve(state0: EquivariantState, profile: PinchingProfile, dt_max: float = 1e-6, t_max: float = 10.0,
           curvature_cap: float = 1e6, cfl: float = 0.1, max_steps: int = 50_000_000) -> Trajectory:
    """Explicit Euler with dt = min(dt_max, cfl/|A|^2, t_max - t).

    Stops when |A|^2 reaches ``curvature_cap`` (in units of the ambient
    curvature), when |d(phi)/dt| < 1e-10 (the Clifford fixed point), or at
    ``t_max``. The profile must describe the same dimension n = p + q and the
    unit sphere (kbar = 1).
    """
    p, q = state0.p, state0.q
    if profile.n != p + q:
        raise DomainError(f"profile has n = {profile.n} but p + q = {p + q}")
    if profile.kbar != 1.0:
        raise DomainError("the product family lives in the unit sphere: kbar must be 1")
    if not (dt_max > 0 and t_max >= state0.t and cfl > 0):
        raise DomainError("need dt_max > 0, cfl > 0 and t_max >= t0")
    a2_0, _ = _norms(p, q, state0.phi)
    if not curvature_cap > a2_0:
        raise DomainError(f"curvature_cap {curvature_cap:g} must exceed the initial |A|^2 = {a2_0:g}")
    ts, phis = [state0.t], [state0.phi]
    t, phi = state0.t, state0.phi
    termination = None
    for _ in range(max_steps):
        tn = math.tan(phi)
        a2 = p * tn * tn + q / (tn * tn)
        speed = p * tn - q / tn
        if a2 >= curvature_cap:
            termination = Termination.CURVATURE_CAP
            break
        if abs(speed) < FIXED_POINT_TOL:
            termination = Termination.MINIMAL_EQUILIBRIUM
            break
        if t >= t_max:
            termination = Termination.TIME_LIMIT
            break
        dt = min(dt_max, cfl / a2, t_max - t)
        if dt < DT_FLOOR:
            if t_max - t < DT_FLOOR:
                termination = Termination.TIME_LIMIT
                break
            raise StepUnderflow(f"time step {dt:g} below {DT_FLOOR:g} at t = {t!r}, phi = {phi!r}")
        phi = phi + dt * speed
        t = t + dt
        if not (0.0 < phi < math.pi / 2):
            raise StepUnderflow(f"angle left (0, pi/2) at t = {t!r}; reduce cfl")
        ts.append(t)
        phis.append(phi)
    if termination is None:
        raise StepUnderflow(f"no stopping rule fired within {max_steps} steps")
    return _build(p, q, profile, np.array(ts), np.array(phis), termination,
                  {"dt_max": dt_max, "t_max": t_max, "curvature_cap": curvature_cap, "cfl": cfl,
                   "phi0": state0.phi, "t0": state0.t})


def _build(p, q, profile, t, phi, termination, settings) -> Trajectory:
    tn = np.tan(phi)
    a2 = p * tn * tn + q / (tn * tn)
    h = p * tn - q / tn
    h2 = h * h
    f = np.asarray(profile.gap(np.maximum(a2, h2 / (p + q)), h2), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(h2 > (H_RTOL**2) * a2, a2 / h2, np.nan)
    return Trajectory(p, q, profile, t, phi, a2, h2, np.atleast_1d(f), ratio, np.atleast_1d(f) >= 0,
                      termination, settings)


def rescale_snapshot(traj: Trajectory, index: int, rhat: float | None = None) -> dict:
    """Parabolic rescaling of one snapshot.

    Lengths are divided by ``rhat`` (metric g/rhat^2), so |A|^2, |H|^2 and f
    are multiplied by rhat^2 and time by 1/rhat^2. The default
    ``rhat = 1/sqrt(f)`` normalizes the rescaled pinching gap to 1.
    """
    m = traj.monitor(index)
    if not m["f"] > 0:
        raise DomainError(f"snapshot {index} has f = {m['f']!r} <= 0")
    if rhat is None:
        rhat = 1.0 / math.sqrt(m["f"])
    if not rhat > 0:
        raise DomainError("rhat must be positive")
    s = rhat * rhat
    ratio = m["a2"] / m["h2"] if m["h2"] > 0 else math.nan
    return {"rhat": rhat, "a2": s * m["a2"], "h2": s * m["h2"], "f": s * m["f"], "t": m["t"] / s,
            "ratio": ratio, "ratio_unscaled": m["ratio"]}


def richardson_agreement(coarse: Trajectory, fine: Trajectory, window: float = 0.9) -> dict[str, float]:
    """Largest relative gap between two runs over the first ``window`` of the coarse run's time span.

    The fine run is interpolated linearly onto the coarse times. Returned per
    monitor as max |fine - coarse| / max(|coarse|, 1).
    """
    t0, t1 = coarse.t[0], coarse.t[-1]
    mask = coarse.t <= t0 + window * (t1 - t0)
    tc = coarse.t[mask]
    out = {}
    for name in ("phi", "a2", "h2", "f"):
        c = getattr(coarse, name)[mask]
        fi = np.interp(tc, fine.t, getattr(fine, name))
        out[name] = float(np.max(np.abs(fi - c) / np.maximum(np.abs(c), 1.0)))
    rc = coarse.ratio[mask]
    rf = np.interp(tc, fine.t, fine.ratio)
    ok = np.isfinite(rc) & np.isfinite(rf)
    out["ratio"] = float(np.max(np.abs(rf[ok] - rc[ok]) / np.maximum(np.abs(rc[ok]), 1.0))) if ok.any() else 0.0
    return out


def sweep(initial: list[EquivariantState], profile_for, threads: int | None = None, **kwargs) -> list[Trajectory]:
    """Evolve several initial states; ``profile_for(state)`` returns the profile for each one."""

    def work(a, b):
        return [evolve(s, profile_for(s), **kwargs) for s in initial[a:b]]

    out = []
    for chunk in chunked_map(work, len(initial), 1, threads):
        out.extend(chunk)
    return out


def pinched_initial_angles(p: int, q: int, profile: PinchingProfile, count: int, margin: float = 1e-3,
                           a2_max: float = 1e3):
    """``count`` evenly spaced angles below the Clifford angle at which the family is pinched (f > 0).

    The pinched set is found on a fine grid and the angles are spread over
    its contiguous run adjoining phi -> 0, restricted to |A|^2 <= ``a2_max``
    and trimmed by ``margin`` at both ends.
    """
    root = minimal_angle(p, q)
    grid = np.linspace(1e-4, root - 1e-4, 20_001)
    a2 = np.array([sharp_family_geometry(SharpFamilyPoint(p, q, g))[0] for g in grid])
    tn = np.tan(grid)
    h2 = (p * tn - q / tn) ** 2
    ok = np.asarray(profile.gap(np.maximum(a2, h2 / (p + q)), h2)) > 0
    if not ok[0]:
        return []
    stop = int(np.argmin(ok)) if not ok.all() else len(ok)
    hi = grid[stop - 1] - margin
    lo = grid[int(np.argmax(a2 <= a2_max))] + margin
    if hi <= lo:
        return []
    return list(np.linspace(lo, hi, count))
