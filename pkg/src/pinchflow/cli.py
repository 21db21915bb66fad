"""Command-line front end: ``pinchflow <command> [flags]``.

Commands: verify, flow-ode, flow-pde, sharpness, report.

Settings come from defaults, then an optional ``--config`` file of
``key = value`` lines (``#`` starts a comment), then flags; later sources win.
Exit codes: 0 when every requested check passes, 2 when a check fails
(counterexample artifacts are written next to ``--out``), 1 on usage or
configuration errors.

JSON artifacts have the shape ``{"config": ..., "reports": [...], ...}``.
CSV artifacts start with a single ``# config: {...}`` comment line.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import equivariant as eq
from . import mcf
from .embedding import fd_curvature_norms
from .errors import PinchflowError
from .lab.gradient import check_gradient_lemmas
from .lab.matrix import check_matrix_lemmas
from .lab.reaction import check_decay_chain, check_reaction_lemmas
from .lab.report import ScanSpec, VerificationReport, _clean, csv_text
from .lab.scalar import check_quadratic, check_scalar_bounds
from .profile import PinchingProfile, SharpFamilyPoint, sharp_family_geometry, sharpness_defect

LEMMA_GROUPS = ("scalar", "quadratic", "matrix", "reaction", "gradient", "decay")
# execution settings that must not leak into artifacts
NOT_EMBEDDED = {"config", "out", "threads", "include_timing"}


class UsageError(Exception):
    pass


def int_list(text) -> tuple[int, ...]:
    """'8' -> (8,), '8,10' -> (8, 10), '8..12' -> (8, 9, 10, 11, 12)."""
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise ValueError("empty list")
    return tuple(out)


def float_list(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    vals = tuple(float(p) for p in str(text).split(",") if p.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


def opt_float(text):
    if text is None or str(text).lower() in ("", "none", "default"):
        return None
    return float(text)


def boolean(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def choice(*options):
    def conv(text):
        v = str(text).strip()
        if v not in options:
            raise ValueError(f"{v!r} is not one of {', '.join(options)}")
        return v
    conv.__name__ = "choice"
    return conv


COMMON = {
    "out": (str, None, "output path"),
    "format": (choice("json", "csv"), "json", "artifact format"),
    "seed": (int, 0, "base seed"),
    "threads": (int, 0, "worker threads (0 = PINCHFLOW_THREADS or one per CPU)"),
    "include_timing": (boolean, False, "store wall-clock times (artifacts then differ between runs)"),
}

OPTIONS = {
    "verify": {
        "lemma": (choice(*LEMMA_GROUPS, "all"), "all", "lemma group"),
        "n": (int_list, (8, 10, 12, 16, 32, 64, 128), "dimensions, e.g. 8..16 or 8,12"),
        "m": (int_list, (2,), "codimensions for sampled checks"),
        "kbar": (float_list, (0.25, 1.0, 4.0), "ambient curvatures for the scalar scans"),
        "eps": (opt_float, None, "pinching slack (default: small multiple of n^-2.5)"),
        "x_max": (float, 1e6, "scan range of |H|^2 in units of kbar"),
        "grid": (int, 10_000, "log-spaced scan points"),
        "p2_max": (float, 1e3, "largest |A^-|^2 in the quadratic scan"),
        "p2_points": (int, 1000, "|A^-|^2 points in the quadratic scan"),
        "samples": (int, 10_000, "random samples per dimension pair"),
        "h2": (float, 1e6, "|H|^2 for the large-curvature checks"),
        **COMMON,
    },
    "flow-ode": {
        "p": (int, 1, "dimension of the first sphere factor"),
        "q": (int, 7, "dimension of the second sphere factor"),
        "phi0": (float, 0.2, "initial angle"),
        "dt": (float, 1e-6, "largest time step"),
        "cfl": (float, 0.1, "step bound cfl/|A|^2"),
        "t_max": (float, 10.0, "final time"),
        "cap": (float, 1e6, "stop once |A|^2 reaches this"),
        "eps": (opt_float, 0.0, "pinching slack of the monitor profile"),
        "require_pinched": (boolean, False, "exit 2 if any step is not pinched"),
        **COMMON,
        "format": (choice("json", "csv"), "csv", "csv trajectory or json summary"),
    },
    "flow-pde": {
        "fixture": (choice("small-circle", "great-circle", "clifford-torus", "twisted-torus", "perturbed-torus"),
                    "small-circle", "initial mesh"),
        "mesh": (str, None, "start from a mesh JSON file instead of a fixture"),
        "points": (int, 64, "grid points per axis"),
        "ambient": (int, 0, "ambient dimension (0 = fixture default)"),
        "rho": (float, 0.5, "small-circle radius"),
        "r": (float, 0.6, "first torus radius"),
        "b": (float, 0.5, "second radius of the twisted torus"),
        "amplitude": (float, 1e-3, "normal perturbation of the perturbed torus"),
        "dt": (float, 0.0, "time step (0 = half the stability bound)"),
        "steps": (int, 100, "number of steps"),
        "record_every": (int, 10, "monitor every k-th step"),
        "cfl": (float, 0.1, "curvature step bound"),
        "monitor_n": (int, 8, "dimension of the pinching profile used by the monitors"),
        "eps": (opt_float, 0.0, "pinching slack of the monitor profile"),
        "mesh_out": (str, None, "write the final mesh as JSON"),
        **COMMON,
        "format": (choice("json", "csv"), "csv", "csv monitors or json"),
    },
    "sharpness": {
        "n": (int_list, (8, 16), "dimensions"),
        "phi": (float, math.pi / 4, "angle of S^2(cos phi) x S^{n-2}(sin phi)"),
        "fd_step": (float, 1e-4, "step of the finite-difference oracle"),
        **COMMON,
    },
    "report": {
        "out": (str, None, "write the summary table as CSV"),
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pinchflow", description="Pinching inequality lab and curvature flow runs.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for cmd, table in OPTIONS.items():
        sp = sub.add_parser(cmd, argument_default=argparse.SUPPRESS)
        if cmd == "report":
            sp.add_argument("paths", nargs="*")
        sp.add_argument("--config", help="key = value settings file")
        for key, (conv, default, help_text) in table.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=str,
                            help=f"{help_text} (default: {default})")
    return parser


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(command: str, flags: dict, file_values: dict | None = None) -> dict:
    """Merge defaults < file < flags and convert each value, naming the key on failure."""
    table = OPTIONS[command]
    file_values = dict(file_values or {})
    if "command" in file_values:
        if file_values.pop("command") != command:
            raise UsageError("config key 'command' does not match the command line")
    cfg = {}
    for key, (conv, default, _) in table.items():
        cfg[key] = default
    for source in (file_values, flags):
        for key, raw in source.items():
            if key not in table:
                raise UsageError(f"unknown key {key!r} for {command}")
            try:
                cfg[key] = table[key][0](raw) if raw is not None else None
            except (TypeError, ValueError) as exc:
                raise UsageError(f"bad value for {key!r}: {exc}") from exc
    if "seed" in cfg and cfg["seed"] is None:
        raise UsageError("key 'seed' is required for sampling")
    if cfg.get("threads", 0) < 0:
        raise UsageError("key 'threads' must be >= 0")
    return cfg


def embedded(command: str, cfg: dict) -> dict:
    d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items() if k not in NOT_EMBEDDED}
    d["command"] = command
    return d


# -- artifact writing ---------------------------------------------------------
def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    if p.parent and not p.parent.exists():
        raise UsageError(f"key 'out': directory {p.parent} does not exist")
    p.write_text(text)


def json_artifact(config: dict, reports: list[VerificationReport], include_timing: bool, **extra) -> str:
    body = {"config": config, "reports": [r.to_dict(include_timing) for r in reports], **extra}
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def csv_artifact(config: dict, body: str) -> str:
    return "# config: " + json.dumps(config, sort_keys=True) + "\n" + body


def _counterexamples(out: str | None, config: dict, reports: list[VerificationReport]) -> str | None:
    failed = [r for r in reports if not r.passed]
    if not failed:
        return None
    path = (str(Path(out).with_suffix("")) + ".counterexamples.json") if out and out != "-" \
        else "pinchflow.counterexamples.json"
    payload = {"config": config, "counterexamples": [{"lemma_id": r.lemma_id, "min_slack": r.min_slack,
                                                      "violations": r.violations, "worst_case": r.worst_case}
                                                     for r in failed]}
    Path(path).write_text(json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n")
    return path


def _print_reports(reports: list[VerificationReport]) -> None:
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.lemma_id:28s} samples={r.samples} violations={r.violations} min_slack={r.min_slack:.6g}",
              file=sys.stderr)


# -- commands -------------------------------------------------------------------
def run_verify(cfg: dict) -> int:
    groups = LEMMA_GROUPS if cfg["lemma"] == "all" else (cfg["lemma"],)
    rows = [] if cfg["format"] == "csv" else None
    threads = cfg["threads"] or None
    reports: list[VerificationReport] = []
    ns, ms = cfg["n"], cfg["m"]
    try:
        spec = ScanSpec(x_max=cfg["x_max"], grid_points=cfg["grid"], n_set=ns, kbar_set=cfg["kbar"])
        profiles = [PinchingProfile(n, m, 1.0, cfg["eps"]) for n in ns for m in ms]
        for group in groups:
            if group == "scalar":
                reports += check_scalar_bounds(None, spec, rows)
            elif group == "quadratic":
                reports += check_quadratic(None, spec, cfg["p2_max"], cfg["p2_points"], rows)
            elif group == "matrix":
                reports += check_matrix_lemmas(cfg["samples"], cfg["seed"], [(n, m) for n in ns for m in ms],
                                               threads, rows)
            elif group == "reaction":
                for prof in profiles:
                    reports += check_reaction_lemmas(prof, None, cfg["samples"], cfg["seed"], cfg["h2"], rows)
            elif group == "gradient":
                for prof in profiles:
                    reports += check_gradient_lemmas(prof, cfg["samples"], cfg["seed"], rows=rows)
            elif group == "decay":
                for prof in profiles:
                    reports += check_decay_chain(prof, cfg["samples"], cfg["seed"], rows=rows)
    except (PinchflowError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    config = embedded("verify", cfg)
    if cfg["format"] == "csv":
        _write(cfg["out"], csv_artifact(config, csv_text(rows)))
    else:
        _write(cfg["out"], json_artifact(config, reports, cfg["include_timing"]))
    _print_reports(reports)
    path = _counterexamples(cfg["out"], config, reports)
    if path:
        print(f"counterexamples written to {path}", file=sys.stderr)
        return 2
    return 0


def run_flow_ode(cfg: dict) -> int:
    try:
        prof = PinchingProfile(cfg["p"] + cfg["q"], 1, 1.0, cfg["eps"])
        state = eq.EquivariantState(cfg["p"], cfg["q"], cfg["phi0"])
        traj = eq.evolve(state, prof, dt_max=cfg["dt"], t_max=cfg["t_max"], curvature_cap=cfg["cap"],
                         cfl=cfg["cfl"])
    except PinchflowError as exc:
        raise UsageError(str(exc)) from exc
    config = embedded("flow-ode", cfg)
    unpinched = int(np.count_nonzero(~traj.pinched))
    report = VerificationReport("flow.equivariant_pinching", len(traj), unpinched, float(np.min(traj.f)),
                                {"index": int(np.argmin(traj.f)), **traj.monitor(int(np.argmin(traj.f)))},
                                None, True, 0, {"termination": traj.termination.value})
    if cfg["format"] == "csv":
        _write(cfg["out"], csv_artifact(config, traj.to_csv()))
    else:
        _write(cfg["out"], json_artifact(config, [report], False, summary=traj.summary()))
    final = traj.monitor(-1)
    print(f"termination={traj.termination.value} steps={len(traj) - 1} final_a2={final['a2']:.6g} "
          f"final_ratio={final['ratio']:.6g} min_f={float(np.min(traj.f)):.6g}", file=sys.stderr)
    if cfg["require_pinched"] and unpinched:
        return 2
    return 0


def _pde_fixture(cfg: dict) -> mcf.MeshImmersion:
    if cfg["mesh"]:
        try:
            return mcf.MeshImmersion.from_json(Path(cfg["mesh"]).read_text())
        except OSError as exc:
            raise UsageError(f"key 'mesh': {exc}") from exc
    name, N, amb = cfg["fixture"], cfg["points"], cfg["ambient"]
    if name == "small-circle":
        return mcf.small_circle(cfg["rho"], N, amb or 3)
    if name == "great-circle":
        return mcf.great_circle(N, amb or 3)
    if name == "clifford-torus":
        return mcf.clifford_torus(cfg["r"], N, amb or 4)
    if name == "twisted-torus":
        return mcf.twisted_torus(cfg["r"], cfg["b"], N, amb or 6)
    return mcf.perturbed_torus(cfg["r"], cfg["amplitude"], N, amb or 5)


def run_flow_pde(cfg: dict) -> int:
    try:
        mesh = _pde_fixture(cfg)
        dt = cfg["dt"] or 0.5 * mcf.stable_dt(mcf.compute_geometry(mesh), cfg["cfl"])
        every = max(1, cfg["record_every"])
        seq = mcf.run_flow(mesh, dt, cfg["steps"], cfg["cfl"], record_every=every)
        prof = PinchingProfile(cfg["monitor_n"], 2, 1.0, cfg["eps"])
        rows = mcf.run_monitors(seq, prof, steps=[i * every for i in range(len(seq))])
    except PinchflowError as exc:
        raise UsageError(str(exc)) from exc
    config = embedded("flow-pde", cfg)
    config["dt_used"] = dt
    if cfg["format"] == "csv":
        _write(cfg["out"], csv_artifact(config, mcf.monitors_csv(rows)))
    else:
        clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in r.items()} for r in rows]
        _write(cfg["out"], json_artifact(config, [], False, monitors=clean))
    if cfg["mesh_out"]:
        _write(cfg["mesh_out"], seq[-1].to_json() + "\n")
    print(f"steps={cfg['steps']} dt={dt:.6g} t={seq[-1].t:.6g} max_A2={rows[-1]['max_A2']:.6g}", file=sys.stderr)
    return 0


def sharpness_report(n: int, phi: float, fd_step: float = 1e-4) -> VerificationReport:
    """Defect of S^2 x S^{n-2} above the pinching curve, with both candidate coefficients and an FD cross-check."""
    point = SharpFamilyPoint(2, n - 2, phi)
    d = sharpness_defect(point)
    a2, h2, _, _ = fd_curvature_norms(2, n - 2, phi, fd_step)
    fd = a2 * a2 - (h2 / (n - 2) + 4.0) ** 2 - (4 * n - 16)
    t4 = math.tan(phi) ** 4
    details = {"measured": d.measured, "printed_value": d.printed_coeff_value, "corrected_value": d.corrected_coeff_value,
               "measured_coefficient": d.measured / t4,
               "printed_coefficient": 4.0 * ((n - 2) ** 2 - 1) / (n - 2) ** 2,
               "corrected_coefficient": 4.0 * ((n - 2) ** 2 - 4) / (n - 2) ** 2,
               "matches": d.matches, "printed_mismatch": d.matches in ("corrected", "neither"),
               "finite_difference": fd, "finite_difference_rel_error": abs(fd - d.measured) / abs(d.measured),
               "closed_form_a2_h2": list(sharp_family_geometry(point))}
    return VerificationReport(f"sharpness.defect_n{n}", 1, 0 if d.measured > 0 else 1, d.measured,
                              {"n": n, "phi": phi}, None, True, 0, details)


def run_sharpness(cfg: dict) -> int:
    try:
        reports = [sharpness_report(n, cfg["phi"], cfg["fd_step"]) for n in cfg["n"]]
    except PinchflowError as exc:
        raise UsageError(str(exc)) from exc
    for r in reports:
        d = r.details
        print(f"n={r.worst_case['n']} phi={cfg['phi']:.6g} measured={d['measured']:.12g} "
              f"corrected={d['corrected_value']:.12g} printed={d['printed_value']:.12g} matches={d['matches']}")
    if cfg["out"]:
        _write(cfg["out"], json_artifact(embedded("sharpness", cfg), reports, False))
    return 0 if all(r.passed for r in reports) else 2


def aggregate(paths) -> tuple[list[dict], list[str]]:
    """Summary rows (sorted by lemma_id) and warnings for skipped files."""
    merged: dict[str, dict] = {}
    warnings = []
    for path in paths:
        try:
            data = json.loads(Path(path).read_text())
            reports = [VerificationReport.from_dict(r) for r in data["reports"]]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            warnings.append(f"skipping {path}: {exc.__class__.__name__}: {exc}")
            continue
        for r in reports:
            row = merged.setdefault(r.lemma_id, {"lemma_id": r.lemma_id, "passed": True, "min_slack": math.inf,
                                                  "violations": 0, "samples": 0, "reports": 0})
            row["passed"] = row["passed"] and r.passed
            row["min_slack"] = min(row["min_slack"], r.min_slack)
            row["violations"] += r.violations
            row["samples"] += r.samples
            row["reports"] += 1
    rows = [merged[k] for k in sorted(merged)]
    return rows, warnings


SUMMARY_HEADER = ["lemma_id", "status", "min_slack", "violations", "samples", "reports"]


def summary_csv(rows: list[dict]) -> str:
    lines = [",".join(SUMMARY_HEADER)]
    for r in rows:
        lines.append(",".join([r["lemma_id"], "pass" if r["passed"] else "fail", repr(float(r["min_slack"])),
                               str(r["violations"]), str(r["samples"]), str(r["reports"])]))
    return "\n".join(lines) + "\n"


def run_report(cfg: dict, paths) -> int:
    if not paths:
        raise UsageError("report needs at least one artifact path")
    rows, warnings = aggregate(paths)
    for w in warnings:
        print("warning: " + w, file=sys.stderr)
    if len(warnings) == len(paths):
        print("error: no readable reports", file=sys.stderr)
        return 1
    text = summary_csv(rows)
    if cfg.get("out"):
        _write(cfg["out"], text)
    sys.stdout.write(text)
    return 0 if all(r["passed"] for r in rows) else 2


RUNNERS = {"verify": run_verify, "flow-ode": run_flow_ode, "flow-pde": run_flow_pde, "sharpness": run_sharpness}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = vars(parser.parse_args(argv))
        command = ns.pop("command", None)
        if command is None:
            raise UsageError("missing command; choose one of " + ", ".join(OPTIONS))
        paths = ns.pop("paths", [])
        file_values = read_config_file(ns.pop("config")) if "config" in ns else {}
        cfg = resolve(command, ns, file_values)
        if command == "report":
            return run_report(cfg, paths)
        return RUNNERS[command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
