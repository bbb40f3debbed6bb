import csv
import json

import numpy as np
import pytest

from gmemoments.catalog import MapSpec, UnknownLabel, parse_base_map, parse_state
from gmemoments.cli import main, verify_realization
from gmemoments.states import FAMILIES, ghz
from gmemoments.sweep import (DETECTORS, SweepConfig, bisect_crossing, evaluate, run_detect,
                              run_sweep, sweep_columns)

ALL_COLUMNS = ["mu", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "detH1", "detH2", "detH3",
                "min_eig", "verdict_map", "verdict_H1", "verdict_H2", "verdict_H3"]


@pytest.mark.parametrize("label, n_sites", [
    ("ghz3", 3), ("ghz4", 4), ("w3", 3), ("maximally-mixed-3", 3), ("noisy-ghz3:0.5", 3),
    ("noisy-w3:0.2", 3), ("noisy-ghz4:1", 4), ("ghz-w-mixture:0.3", 3), ("werner:0.4", 2),
    ("random:3,7", 3), ("biseparable:4,3,1", 4),
])
def test_state_labels(label, n_sites):
    assert parse_state(label).shape.n_sites == n_sites


@pytest.mark.parametrize("label", ["nope", "ghz5", "noisy-ghz3", "random:3", "noisy-w3:x"])
def test_unknown_state_labels(label):
    with pytest.raises(UnknownLabel):
        parse_state(label)


def test_map_specs():
    spec = MapSpec.parse("modified-transposition")
    assert spec.post_unitary == "sx" and spec.base == "transposition"
    assert MapSpec.parse("transposition", "sx").label == "modified-transposition"
    assert parse_base_map("lindblad:0.5,-0.5,0.5").kind == "transposition"
    assert MapSpec.parse("reduction", c="2").build(3).c == 2.0
    with pytest.raises(UnknownLabel):
        MapSpec.parse("sideways")
    with pytest.raises(UnknownLabel):
        MapSpec.parse("transposition", "sz")


def test_run_detect_examples():
    rep = run_detect("ghz3", ghz(3), MapSpec.parse("modified-transposition"))
    assert rep.verdicts()["H1"] == "violated"
    rep = run_detect("w3", parse_state("w3"), MapSpec.parse("transposition"))
    assert rep.verdicts()["H1"] == "satisfied" and rep.verdicts()["H2"] == "violated"
    rep = run_detect("mm", parse_state("maximally-mixed-3"), MapSpec.parse("transposition"))
    assert set(rep.verdicts().values()) <= {"satisfied", "not-detected"}
    assert set(rep.to_json()) == {"state", "map", "moments", "hankel_dets", "min_eig", "verdicts"}


def test_sweep_columns_depend_on_detectors():
    assert sweep_columns(DETECTORS) == ALL_COLUMNS
    assert sweep_columns(("map-eig",)) == ["mu", "min_eig", "verdict_map"]
    assert sweep_columns(("H1",)) == ["mu", "s1", "s2", "s3", "detH1", "verdict_H1"]


@pytest.mark.parametrize("kwargs", [
    {"family": "ghz3"},
    {"family": "noisy-ghz3", "grid": (0.0, 1.0, 1)},
    {"family": "noisy-ghz3", "grid": (0.5, 1.5, 11)},
    {"family": "noisy-ghz3", "detectors": ("H9",)},
])
def test_sweep_config_validation(kwargs):
    with pytest.raises(ValueError):
        SweepConfig(**kwargs)


def test_bisect_crossing_width():
    c = bisect_crossing(lambda x: x > 0.3141, 0.3, 0.31 + 0.01, 1e-4)
    assert c.high - c.low <= 1e-4 and c.low <= 0.3141 <= c.high and c.fires_above


def test_sweep_thresholds_bracket_sign_change():
    cfg = SweepConfig("noisy-ghz3", MapSpec.parse("modified-transposition"))
    res = run_sweep(cfg)
    g = cfg.map_spec.build(3)
    for t in res.thresholds:
        for c in t.crossings:
            assert c.high - c.low <= cfg.bisection_tol
            lo = evaluate(g, FAMILIES["noisy-ghz3"](c.threshold - 2 * cfg.bisection_tol), 3)
            hi = evaluate(g, FAMILIES["noisy-ghz3"](c.threshold + 2 * cfg.bisection_tol), 3)
            assert lo.fires(t.detector) != hi.fires(t.detector)


def test_sweep_csv_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        run_sweep(SweepConfig("noisy-w3", MapSpec.parse("transposition"), grid=(0.8, 1.0, 21),
                              output_path=str(p)))
    assert paths[0].read_bytes() == paths[1].read_bytes()
    rows = list(csv.reader(paths[0].open()))
    assert rows[0] == ALL_COLUMNS and len(rows) == 22
    assert rows[1][0] == "0.8"


def test_cli_detect_json(capsys):
    assert main(["detect", "--state", "ghz3", "--map", "transposition", "--modify", "sx",
                 "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdicts"]["H1"] == "violated"
    assert len(out["moments"]) == 7 and len(out["hankel_dets"]) == 3


def test_cli_unknown_label_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["detect", "--state", "bogus"])
    assert exc.value.code == 2
    assert "known:" in capsys.readouterr().err


def test_cli_unwritable_output(capsys):
    code = main(["detect", "--state", "w3", "--out", "/nonexistent/dir/x.txt"])
    assert code == 3


def test_cli_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("state = noisy-ghz3\nmap = transposition\nmodify = sx\n"
                   "detectors = map-eig,H1\ngrid = 0.6,1,41\n")
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--grid", "0.7,1,31"]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["mu", "s1", "s2", "s3", "detH1", "min_eig", "verdict_map", "verdict_H1"]
    assert rows[1][0] == "0.7" and len(rows) == 32
    assert "map-eig: 0.733" in capsys.readouterr().out


def test_cli_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(SystemExit):
        main(["detect", "--config", str(cfg)])


def test_cli_verify_realization_repeatable(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["verify-realization", "--seed", "3", "--out", str(a)]) == 0
    assert main(["verify-realization", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "overall: PASS" in a.read_text()


def test_verify_realization_report():
    text, ok = verify_realization(5, 0)
    assert ok and "max |ds2|" in text


def test_cli_nu(capsys):
    assert main(["nu", "--map", "transposition", "--trials", "50"]) == 0
    out = capsys.readouterr().out
    value = float(out.split("nu: ")[1].split()[0])
    assert abs(value - 0.5) < 1e-6


@pytest.mark.parametrize("observable", ["swap-triple", "phi-hat:1,2", "term:1,2,3"])
def test_cli_sample(observable, capsys):
    assert main(["sample", "--state", "random:3,2", "--observable", observable,
                 "--shots", "20000", "--seed", "1"]) == 0
    out = dict(line.split(": ", 1) for line in capsys.readouterr().out.strip().splitlines())
    mean, err, exact = float(out["mean"]), float(out["stderr"]), float(out["exact"])
    assert abs(mean - exact) < 5 * err


def test_cli_sample_bad_observable():
    with pytest.raises(SystemExit):
        main(["sample", "--observable", "phi-hat:1,1"])


def test_sweep_json_output(tmp_path):
    out = tmp_path / "s.json"
    assert main(["sweep", "--state", "noisy-ghz4", "--map", "transposition", "--modify", "sx",
                 "--detectors", "map-eig,H2", "--grid", "0.8,1,11", "--format", "json",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    th = {t["detector"]: t for t in data["thresholds"]}
    assert abs(th["H2"]["crossings"][0]["threshold"] - 0.873) < 2e-3
    assert np.isclose(float(data["rows"][0]["mu"]), 0.8)
