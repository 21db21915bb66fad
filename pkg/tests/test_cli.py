import csv
import io
import json

import pytest

from pinchflow.cli import aggregate, int_list, main, resolve, summary_csv


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_int_list_forms():
    assert int_list("8") == (8,)
    assert int_list("8,12") == (8, 12)
    assert int_list("8..11") == (8, 9, 10, 11)
    with pytest.raises(ValueError):
        int_list("9..8")


def test_flags_override_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sampled gradient check\nlemma = gradient\nn = 8\nsamples = 40\nseed = 3\n")
    out = tmp_path / "r.json"
    code, _, _ = run(["verify", "--config", cfg, "--seed", 5, "--out", out], capsys)
    assert code == 0
    data = json.loads(out.read_text())
    assert data["config"]["seed"] == 5
    assert data["config"]["samples"] == 40
    assert data["config"]["lemma"] == "gradient"
    assert "threads" not in data["config"]
    assert all(r["wallclock_ms"] is None for r in data["reports"])


def test_usage_errors_name_the_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("lemmas = scalar\n")
    code, _, err = run(["verify", "--config", cfg], capsys)
    assert code == 1 and "'lemmas'" in err
    code, _, err = run(["verify", "--samples", "many"], capsys)
    assert code == 1 and "'samples'" in err
    code, _, err = run(["verify", "--lemma", "nope"], capsys)
    assert code == 1 and "'lemma'" in err
    assert run(["frobnicate"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    code, _, err = run(["verify", "--out", tmp_path / "missing" / "r.json", "--lemma", "gradient", "--n", 8,
                        "--samples", 10], capsys)
    assert code == 1 and "'out'" in err


def test_resolve_defaults():
    cfg = resolve("flow-ode", {})
    assert cfg["p"] == 1 and cfg["q"] == 7 and cfg["format"] == "csv" and cfg["eps"] == 0.0


def test_violation_exit_code_and_counterexamples(tmp_path, capsys):
    out = tmp_path / "decay.json"
    code, _, err = run(["verify", "--lemma", "decay", "--n", 8, "--samples", 200, "--out", out], capsys)
    assert code == 2
    cex = json.loads((tmp_path / "decay.counterexamples.json").read_text())
    ids = [c["lemma_id"] for c in cex["counterexamples"]]
    assert "decay.gap_rate" in ids and cex["config"]["seed"] == 0
    assert "FAIL" in err


def test_verify_is_byte_identical_across_threads(tmp_path, capsys):
    paths = []
    for threads in (1, 3):
        p = tmp_path / f"m{threads}.json"
        code, _, _ = run(["verify", "--lemma", "matrix", "--n", "4,5", "--m", "2", "--samples", 1200,
                          "--threads", threads, "--out", p], capsys)
        assert code == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_csv_rows(tmp_path, capsys):
    out = tmp_path / "g.csv"
    code, _, _ = run(["verify", "--lemma", "scalar", "--n", 8, "--kbar", 1, "--grid", 20, "--format", "csv",
                      "--out", out], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config: ")
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    assert rows[0] == ["lemma_id", "n", "m", "kbar", "eps", "x", "p2", "lhs", "rhs", "slack", "pass"]
    assert {r[-1] for r in rows[1:]} == {"true"}


def test_flow_ode(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, _ = run(["flow-ode", "--p", 1, "--q", 7, "--phi0", 0.2, "--cap", 1e4, "--out", out], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "t,phi,a2,h2,f,ratio,pinched"
    assert all(line.endswith(",true") for line in lines[2:])
    code, _, _ = run(["flow-ode", "--phi0", 1.2094292028881888, "--require-pinched", "true", "--out",
                      tmp_path / "c.csv"], capsys)
    assert code == 2


def test_flow_pde(tmp_path, capsys):
    out, mesh = tmp_path / "mon.csv", tmp_path / "mesh.json"
    code, _, _ = run(["flow-pde", "--fixture", "clifford-torus", "--points", 16, "--steps", 4, "--record-every", 2,
                      "--out", out, "--mesh-out", mesh], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "step,t,max_A2,max_H2,grad_ratio,codim_ratio,cyl_ratio"
    assert [ln.split(",")[0] for ln in lines[2:]] == ["0", "2", "4"]
    code, _, _ = run(["flow-pde", "--mesh", mesh, "--steps", 2, "--out", tmp_path / "again.csv"], capsys)
    assert code == 0


def test_sharpness_prints_both_coefficients(tmp_path, capsys):
    code, out, _ = run(["sharpness", "--n", 8, "--phi", 0.785398, "--out", tmp_path / "s.json"], capsys)
    assert code == 0
    assert "measured=3.5555" in out and "printed=3.8888" in out and "matches=corrected" in out
    rep = json.loads((tmp_path / "s.json").read_text())["reports"][0]
    assert rep["details"]["printed_mismatch"] is True


def test_report_aggregation(tmp_path, capsys):
    good, bad = tmp_path / "g.json", tmp_path / "d.json"
    assert run(["verify", "--lemma", "gradient", "--n", 8, "--samples", 30, "--out", good], capsys)[0] == 0
    assert run(["verify", "--lemma", "decay", "--n", 8, "--samples", 100, "--out", bad], capsys)[0] == 2
    code, out, _ = run(["report", good], capsys)
    assert code == 0
    code, out, _ = run(["report", bad, good, "--out", tmp_path / "sum.csv"], capsys)
    assert code == 2
    ids = [line.split(",")[0] for line in out.splitlines()[1:]]
    assert ids == sorted(ids) and "decay.gap_rate" in ids and "gradient.young_bound" in ids
    # re-reading the artifacts reproduces the summary exactly
    rows, _ = aggregate([bad, good])
    assert summary_csv(rows) == out == (tmp_path / "sum.csv").read_text()


def test_report_skips_malformed(tmp_path, capsys):
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    good = tmp_path / "g.json"
    run(["verify", "--lemma", "gradient", "--n", 8, "--samples", 20, "--out", good], capsys)
    code, _, err = run(["report", junk, good], capsys)
    assert code == 0 and "skipping" in err
    assert run(["report", junk], capsys)[0] == 1
    assert run(["report"], capsys)[0] == 1
