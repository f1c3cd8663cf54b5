import csv
import io
import json

import numpy as np
import pytest

from adtrw.actrw import mittag_leffler
from adtrw.cli import load_config, run
from adtrw.errors import ParameterError


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(body))))


def header(text):
    out = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            out[key] = json.loads(value)
    return out


def test_analyze_reports_est(capsys):
    code, out, _ = call(capsys, "analyze", "--density", "geometric:p=0.6")
    assert code == 0
    doc = json.loads(out)
    assert doc["report"]["est"] == pytest.approx(5.0, abs=1e-12)
    assert doc["report"]["verdict"] == "transient"
    assert doc["columns"] == ["site", "est_exact", "est_numeric"]
    assert [row[0] for row in doc["rows"]] == list(range(-5, 6))
    assert doc["meta"]["version"] and doc["meta"]["config"]["density"] == "geometric:p=0.6"


def test_sibuya_figure_row(capsys):
    code, out, _ = call(capsys, "sibuya", "--beta", "0.5", "--fig", "3", "--t-max", "100")
    assert code == 0
    rows = csv_rows(out)
    assert rows[0] == ["beta", "t", "expected_position"]
    assert rows[3] == ["0.5", "2", "-0.25"]
    assert len(rows) == 102


def test_density_and_states(capsys):
    code, out, _ = call(capsys, "density", "--density", "sibuya:beta=0.5", "--horizon", "3")
    assert code == 0
    assert csv_rows(out)[1:] == [["1", "0.5", "0.5"], ["2", "0.125", "0.375"], ["3", "0.0625", "0.3125"]]
    code, out, _ = call(capsys, "states", "--density", "geometric:p=0.5", "--t-max", "2")
    probs = {(int(t), int(n)): float(p) for t, n, p in csv_rows(out)[1:]}
    assert probs[(2, 1)] == 0.5


def test_bell_and_walk(capsys):
    code, out, _ = call(capsys, "bell", "--density", "geometric:p=0.5", "--r-max", "3")
    rows = {(int(r), int(n)): float(v) for r, n, v in csv_rows(out)[1:]}
    assert code == 0 and rows[(3, 2)] == 0.25
    code, out, _ = call(capsys, "walk", "--density", "geometric:p=0.5", "--t", "2", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert [r[1:] for r in doc["rows"]] == [[-2, 0.25], [-1, 0.0], [0, 0.5], [1, 0.0], [2, 0.25]]


def test_walk_with_jump_files(capsys, tmp_path):
    (tmp_path / "wp.txt").write_text("0.5\n0.5\n")
    (tmp_path / "wm.txt").write_text("1.0\n")
    code, out, _ = call(
        capsys, "walk", "--density", "trivial", "--t", "2",
        "--wplus", str(tmp_path / "wp.txt"), "--wminus", str(tmp_path / "wm.txt"),
    )
    assert code == 0
    probs = {int(s): float(p) for _, s, p in csv_rows(out)[1:]}
    assert probs[2] == 0.25 and probs[3] == 0.5 and probs[4] == 0.25


def test_mc_metadata_and_determinism(capsys, tmp_path):
    args = ["mc", "--density", "sibuya:beta=0.5", "--t-max", "10", "--samples", "5000", "--seed", "3"]
    _, first, _ = call(capsys, *args)
    _, second, _ = call(capsys, *args)
    assert first == second
    meta = header(first)
    assert meta["seed"] == 3 and meta["sample_count"] == 5000 and meta["shard_count"] == 1
    assert "truncation_count" in meta
    summary_path = tmp_path / "summary.json"
    code, _, _ = call(capsys, *args, "--summary-out", str(summary_path))
    summary = json.loads(summary_path.read_text())["summary"]
    assert code == 0 and summary["sample_count"] == 5000 and "first_return" in summary


def test_mc_needs_seed(capsys):
    code, _, err = call(capsys, "mc", "--density", "geometric:p=0.5", "--t-max", "3", "--samples", "10")
    assert code == 1 and "--seed" in err


def test_out_file_written_atomically(capsys, tmp_path):
    target = tmp_path / "walk.csv"
    code, out, _ = call(capsys, "walk", "--density", "geometric:p=0.6", "--t", "3", "--out", str(target))
    assert code == 0 and out == ""
    assert csv_rows(target.read_text())[0] == ["t", "site", "probability"]
    assert [p.name for p in tmp_path.iterdir()] == ["walk.csv"]


def test_seventeen_digit_output(capsys):
    _, out, _ = call(capsys, "density", "--density", "geometric:p=0.3", "--horizon", "3")
    value = csv_rows(out)[2][1]
    assert float(value) == 0.3 * 0.7
    assert value == f"{0.3 * 0.7:.17g}"


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# mc run\ndensity = geometric:p=0.5\nt-max = 4\nsamples = 100\nseed = 42\n")
    code, out, _ = call(capsys, "mc", "--config", str(cfg), "--seed", "7")
    assert code == 0
    meta = header(out)
    assert meta["seed"] == 7
    assert meta["config"]["samples"] == 100 and meta["config"]["t_max"] == 4


def test_empty_config_gives_defaults(capsys, tmp_path):
    cfg = tmp_path / "empty.cfg"
    cfg.write_text("")
    code, out, _ = call(capsys, "sibuya", "--config", str(cfg), "--t-max", "4")
    assert code == 0
    assert header(out)["config"]["beta"] == [0.1, 0.5, 0.9]


@pytest.mark.parametrize(
    "text, message",
    [
        ("density = geometric:p=0.5\nnot a pair\n", "line 2"),
        ("seed = 1\nseed = 2\n", "duplicate key 'seed'"),
        ("colour = red\n", "unknown key 'colour'"),
        ("samples = many\n", "samples"),
    ],
)
def test_config_errors(capsys, tmp_path, text, message):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = call(capsys, "mc", "--config", str(cfg))
    assert code == 1
    assert message in err


def test_load_config_parses_comments(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# header\n\nseed = 5  \nrecord-times = 0..3\n")
    assert load_config(cfg) == [(3, "seed", "5"), (4, "record_times", "0..3")]
    with pytest.raises(ParameterError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")


def test_exit_codes(capsys):
    code, _, err = call(capsys, "actrw", "--density", "geometric:p=0.5", "--mu", "0.6", "--t", "200")
    assert code == 2 and "envelope" in err
    code, _, err = call(capsys, "density", "--density", "geometric:p=1.5", "--horizon", "3")
    assert code == 1 and "p" in err
    code, _, _ = call(capsys, "density", "--bogus")
    assert code == 1
    code, _, _ = call(capsys, "sibuya", "--fig", "est", "--beta", "0.999")
    assert code == 2


def test_actrw_series_and_mc(capsys):
    code, out, _ = call(capsys, "actrw", "--density", "geometric:p=0.5", "--mu", "0.8", "--t", "0:2:1")
    assert code == 0
    rows = csv_rows(out)[1:]
    zero = {float(t): float(p) for t, n, p in rows if n == "0"}
    assert zero[0.0] == 1.0
    assert zero[1.0] == pytest.approx(mittag_leffler(0.8, -0.5), abs=1e-10)
    meta = header(out)
    assert meta["truncation"]["clock_states_used"][0] == 0
    code, out, _ = call(
        capsys, "actrw", "--density", "geometric:p=0.5", "--mu", "0.8", "--t", "1",
        "--mc", "--samples", "20000", "--seed", "1",
    )
    assert code == 0
    zero = [float(p) for t, n, p in csv_rows(out)[1:] if n == "0"]
    assert zero[0] == pytest.approx(mittag_leffler(0.8, -0.5), abs=0.01)


def test_invert_bias_round_trip(capsys, tmp_path):
    f = tmp_path / "f.txt"
    f.write_text("\n".join(str(0.2 * t) for t in range(1, 33)))
    dens = tmp_path / "psi.txt"
    report = tmp_path / "report.json"
    code, out, _ = call(
        capsys, "invert-bias", "--f", f"file:{f}", "--density-out", str(dens), "--report-out", str(report),
    )
    assert code == 0
    assert json.loads(report.read_text())["meta"]["report"]["admissible"] is True
    psi = [float(p) for _, p in csv_rows(out)[1:]]
    np.testing.assert_allclose(psi, 0.6 * 0.4 ** np.arange(32), atol=1e-13)
    code, out, _ = call(capsys, "density", "--density", f"file:{dens}")
    assert code == 0 and len(csv_rows(out)) == 33


def test_invert_bias_rejects_inadmissible(capsys, tmp_path):
    f = tmp_path / "f.txt"
    f.write_text("0.2\n0.9\n")
    report = tmp_path / "report.json"
    code, _, err = call(capsys, "invert-bias", "--f", f"file:{f}", "--report-out", str(report))
    assert code == 1 and "t=2" in err
    assert json.loads(report.read_text())["meta"]["report"]["first_bad_t"] == 2


def test_verify_subset(capsys):
    code, out, _ = call(capsys, "verify", "--only", "1,4,9")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 4 and all(line.startswith("[PASS]") for line in lines[:3])
    assert lines[-1] == "3/3 criteria passed"
