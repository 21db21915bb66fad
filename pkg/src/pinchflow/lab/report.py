"""Verification reports, scan settings and lemma parameters."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

import numpy as np

CSV_HEADER = ["lemma_id", "n", "m", "kbar", "eps", "x", "p2", "lhs", "rhs", "slack", "pass"]


def _clean(value):
    """Convert numpy scalars/arrays to JSON-friendly Python objects."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


@dataclass
class VerificationReport:
    """Outcome of one inequality check.

    ``slack`` is signed so that positive means the inequality holds with room
    to spare. Strict inequalities count ``slack <= 0`` as a violation,
    non-strict ones only ``slack < 0``; ``ties`` counts exact zeros of a
    non-strict inequality.
    """

    lemma_id: str
    samples: int
    violations: int
    min_slack: float
    worst_case: dict[str, Any]
    wallclock_ms: int | None = None
    strict: bool = True
    ties: int = 0
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.violations:
            return False
        return self.min_slack > 0 if self.strict else self.min_slack >= 0

    def to_dict(self, include_timing: bool = False) -> dict[str, Any]:
        d = asdict(self)
        d["passed"] = self.passed
        if not include_timing:
            d["wallclock_ms"] = None
        return _clean(d)

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VerificationReport":
        def num(v):
            if isinstance(v, str):
                return float(v)
            return v

        return cls(
            lemma_id=str(d["lemma_id"]),
            samples=int(d["samples"]),
            violations=int(d["violations"]),
            min_slack=float(num(d["min_slack"])),
            worst_case=dict(d.get("worst_case") or {}),
            wallclock_ms=d.get("wallclock_ms"),
            strict=bool(d.get("strict", True)),
            ties=int(d.get("ties", 0)),
            details=dict(d.get("details") or {}),
        )


@dataclass
class ScanSpec:
    """Grid for the scalar lemmas.

    ``x_max`` is measured in units of kbar: the scan covers
    ``[0, x_max * kbar]`` with ``grid_points`` log-spaced points (plus x = 0),
    and, if ``refine_near_zero`` is set, 1000 extra linear points in [0, 1].
    """

    x_max: float = 1e6
    grid_points: int = 10_000
    refine_near_zero: bool = True
    n_set: tuple[int, ...] = (8, 10, 12, 16, 32, 64, 128)
    kbar_set: tuple[float, ...] = (0.25, 1.0, 4.0)
    log_decades: float = 12.0
    near_zero_points: int = 1000

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if not self.x_max > 0:
            raise ValueError("x_max must be positive")
        self.n_set = tuple(int(v) for v in self.n_set)
        self.kbar_set = tuple(float(v) for v in self.kbar_set)

    def x_grid(self, kbar: float) -> np.ndarray:
        top = self.x_max * kbar
        pts = [np.zeros(1), np.geomspace(top * 10.0 ** -self.log_decades, top, self.grid_points - 1)]
        if self.refine_near_zero:
            pts.append(np.linspace(0.0, 1.0, self.near_zero_points))
        return np.unique(np.concatenate(pts))


@dataclass
class LemmaParams:
    """Constants threaded through the reaction and gradient checks.

    ``None`` fields take their dimension-dependent defaults via :meth:`resolve`.
    """

    delta: float = 0.5
    c_n: float | None = None
    c_tilde: float | None = None
    a2_young: float | None = None
    a3_young: float | None = None
    rbar: float = 0.0
    large_h_factor: float = 1e3
    a_prime_mode: str = "asymptotic"

    def resolve(self, n: int) -> "LemmaParams":
        c_n = 1.0 / (n - 2) if self.c_n is None else float(self.c_n)
        c_t = 2.0 * (n - 1) / (n * (n + 2)) if self.c_tilde is None else float(self.c_tilde)
        a2 = 2.0 * (n + 2) / ((n - 1) * (n - 2)) if self.a2_young is None else float(self.a2_young)
        den = (n - 1) * (n - 2) - 2 * (n + 2)
        a3 = (2.0 * (n + 2) / den if den else math.inf) if self.a3_young is None else float(self.a3_young)
        out = LemmaParams(self.delta, c_n, c_t, a2, a3, self.rbar, self.large_h_factor, self.a_prime_mode)
        out.validate(n)
        return out

    def validate(self, n: int) -> None:
        if not (0 < self.delta <= 1):
            raise ValueError("delta must lie in (0, 1]")
        if self.c_n is not None and not (1.0 / n < self.c_n <= 1.0 / (n - 2) + 1e-15):
            raise ValueError("c_n must lie in (1/n, 1/(n-2)]")
        if self.c_tilde is not None and not (1.0 / n < self.c_tilde <= 3.0 / (n + 2) + 1e-15):
            raise ValueError("c_tilde must lie in (1/n, 3/(n+2)]")
        if self.rbar < 0:
            raise ValueError("rbar must be >= 0")
        if self.a_prime_mode not in ("asymptotic", "exact"):
            raise ValueError("a_prime_mode must be 'asymptotic' or 'exact'")


def summarize(lemma_id: str, slack: np.ndarray, strict: bool, record_of, wallclock_ms: int | None = None,
              details: dict | None = None) -> VerificationReport:
    """Reduce a slack array to a report; ``record_of(i)`` builds the worst-case record.

    Ties in the minimum resolve to the lowest index, so the result does not
    depend on how the samples were partitioned.
    """
    slack = np.asarray(slack, dtype=float).ravel()
    if slack.size == 0:
        raise ValueError("no samples")
    bad = ~np.isfinite(slack)
    viol = (slack <= 0) if strict else (slack < 0)
    viol |= bad
    ties = 0 if strict else int(np.count_nonzero(slack == 0))
    masked = np.where(bad, -np.inf, slack)
    idx = int(np.argmin(masked))
    return VerificationReport(
        lemma_id=lemma_id,
        samples=int(slack.size),
        violations=int(np.count_nonzero(viol)),
        min_slack=float(masked[idx]),
        worst_case=record_of(idx),
        wallclock_ms=wallclock_ms,
        strict=strict,
        ties=ties,
        details=details or {},
    )


def write_csv_rows(handle, rows: Iterable[Iterable[Any]], header: bool = True) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    if header:
        writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(rows, header: bool = True) -> str:
    buf = io.StringIO()
    write_csv_rows(buf, rows, header)
    return buf.getvalue()
