import csv
import json

import pytest

from lumisec.allocation import read_golden_csv
from lumisec.cli import main
from lumisec.scene import preset_config


def data_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# lumisec ") and "config=" in lines[0] and "seed=" in lines[0]
    return lines[1:]


@pytest.fixture
def one_eve_2x2(tmp_path):
    cfg = preset_config("worst", 2, 2, 3.0)
    cfg["eves"] = cfg["eves"][:1]
    path = tmp_path / "one_eve.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_simulate_rows_sorted_and_deterministic(tmp_path):
    args = ["simulate", "--scenario", "best:3x3", "--power", "6,1,3", "--panels", "1024"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = data_rows(tmp_path / "a" / "rates.csv")
    assert a == data_rows(tmp_path / "b" / "rates.csv")
    assert a[0] == "power_w,user,rate_los_bps,rate_irs_bps,gain_pct"
    rows = list(csv.DictReader(a))
    assert [r["power_w"] for r in rows] == ["1.0"] * 3 + ["3.0"] * 3 + ["6.0"] * 3
    assert [r["user"] for r in rows[:3]] == ["B", "E1", "E2"]
    for r in rows:
        if r["user"] != "B":  # all elements serve Bob
            assert r["rate_los_bps"] == r["rate_irs_bps"] and float(r["gain_pct"]) == 0.0
        else:
            assert float(r["gain_pct"]) > 0


def test_simulate_default_sweep(tmp_path):
    assert main(["simulate", "--scenario", "worst:1x1", "--panels", "256", "--out", str(tmp_path)]) == 0
    powers = [r["power_w"] for r in csv.DictReader(data_rows(tmp_path / "rates.csv"))]
    assert sorted(set(map(float, powers))) == [float(p) for p in range(1, 11)]


def test_empty_sweep_is_an_error_and_writes_nothing(tmp_path):
    assert main(["simulate", "--power", "", "--out", str(tmp_path / "x")]) == 1
    assert not (tmp_path / "x").exists()


@pytest.mark.parametrize("argv", [
    [],
    ["simulate", "--no-such-flag"],
    ["simulate", "--mode", "sneaky"],
    ["simulate", "--power", "a,b"],
])
def test_parser_errors_exit_1(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 1


@pytest.mark.parametrize("argv", [
    ["simulate", "--panels", "7"],
    ["simulate", "--power", "-1"],
    ["optimize", "--scenario", "nowhere.json"],
    ["oracle", "--scenario", "worst"],  # 3^225 allocations
    ["optimize", "--scenario", "best:2x2", "--episodes", "0"],
])
def test_config_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 1


def test_malformed_config_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"irs": {"rows": 2, "cols": 2, "spacing": 1}}))
    assert main(["simulate", "--scenario", str(bad), "--power", "1", "--out", str(tmp_path)]) == 1
    bad.write_text("{")
    assert main(["simulate", "--scenario", str(bad), "--power", "1", "--out", str(tmp_path)]) == 1


def test_numerical_failure_exit_2(tmp_path):
    assert main(["simulate", "--scenario", "best:2x2", "--power", "1", "--panels", "8",
                 "--out", str(tmp_path)]) == 2


def test_bad_thread_cap_exit_1(tmp_path, monkeypatch):
    monkeypatch.setenv("LUMISEC_THREADS", "many")
    assert main(["oracle", "--scenario", "worst:1x1", "--out", str(tmp_path)]) == 1


def test_oracle_one_eve_2x2_has_16_rows(tmp_path, one_eve_2x2):
    assert main(["oracle", "--scenario", one_eve_2x2, "--panels", "1024", "--out", str(tmp_path)]) == 0
    path = tmp_path / "oracle_p3.csv"
    rows = list(csv.DictReader(data_rows(path)))
    assert len(rows) == 16
    flagged = [r for r in rows if r["argmax"] == "1"]
    assert len(flagged) == 1
    all_bob = next(r for r in rows if r["alloc"] == "B.B.B.B")
    assert float(flagged[0]["objective_bits_per_s"]) >= float(all_bob["objective_bits_per_s"])
    allocs, _ = read_golden_csv(path)
    assert len(set(allocs)) == 16


def test_optimize_same_seed_identical_files(tmp_path):
    args = ["optimize", "--scenario", "worst:2x2", "--power", "3", "--seeds", "1,0", "--episodes", "20",
            "--panels", "512"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("convergence_p3_seed0.csv", "convergence_p3_seed1.csv", "best_allocations.csv",
                 "all_bob_reference.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = list(csv.DictReader(data_rows(tmp_path / "a" / "convergence_p3_seed0.csv")))
    assert len(rows) == 20 and rows[0]["episode"] == "1"
    best = list(csv.DictReader(data_rows(tmp_path / "a" / "best_allocations.csv")))
    assert [r["seed"] for r in best] == ["0", "1"]
    ref = float(next(csv.DictReader(data_rows(tmp_path / "a" / "all_bob_reference.csv")))["objective_bits_per_s"])
    assert ref < 0  # worst case: the eavesdroppers out-receive Bob


@pytest.mark.parametrize("optimizer", ["all-bob", "greedy", "random", "brute-force"])
def test_optimize_baselines(tmp_path, optimizer):
    assert main(["optimize", "--scenario", "best:2x1", "--optimizer", optimizer, "--power", "2",
                 "--panels", "512", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(data_rows(tmp_path / "best_allocations.csv")))
    assert len(rows) == 1 and rows[0]["optimizer"] == optimizer
    assert not list(tmp_path.glob("convergence_*"))


def test_optimize_checkpoint(tmp_path):
    assert main(["optimize", "--scenario", "worst:1x1", "--power", "3", "--episodes", "4", "--panels", "256",
                 "--checkpoint", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "checkpoint_p3_seed0.npz").exists()


def test_validate_passes_and_fault_is_caught(capsys):
    assert main(["validate", "--scale", "0.05"]) == 0
    report = capsys.readouterr().out.splitlines()
    names = [line.split()[1].rstrip(":") for line in report]
    assert names == ["expansion-identity", "flat-channel", "mrc-dominance", "single-eve-modes",
                     "gradient-check", "oracle-dominance"]
    assert all(line.startswith("PASS") and "cases=" in line for line in report)
    assert main(["validate", "--scale", "0.05", "--inject-fault", "cross-sign"]) == 3
    faulty = capsys.readouterr().out.splitlines()
    assert faulty[0].startswith("FAIL expansion-identity")
