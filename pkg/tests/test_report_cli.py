"""Report round trips, factor-graph export, and the command-line surface."""

from __future__ import annotations

import json

import pytest

from mcmselect import read_report
from mcmselect.cli import EXIT_CAP, EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


def run(*argv) -> int:
    return main(list(argv))


@pytest.fixture
def three_state_file(tmp_path):
    path = tmp_path / "three.txt"
    code = run(
        "gen", "--n", "9", "--count", "20000", "--seed", "42",
        "--state", "000011011:0.2",
        "--state", "110110000:0.3",
        "--state", "101000101:0.5",
        "--out", str(path),
    )
    assert code == EXIT_OK
    return path


class TestGen:
    def test_writes_loadable_file(self, three_state_file):
        from mcmselect import load_dataset
        d = load_dataset(three_state_file, 9)
        assert d.N == 20000

    def test_identical_seeds_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        for out in (a, b):
            assert run("gen", "--n", "3", "--count", "50", "--seed", "9",
                       "--state", "101:0.5", "--state", "010:0.5",
                       "--out", str(out)) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_bad_state_length(self, tmp_path):
        assert run("gen", "--n", "3", "--count", "5",
                   "--state", "10:1.0",
                   "--out", str(tmp_path / "x.txt")) == EXIT_INPUT


class TestFitVerify:
    def test_pipeline_and_verify(self, three_state_file, tmp_path, capsys):
        report = tmp_path / "report.json"
        dot = tmp_path / "graph.dot"
        basis_out = tmp_path / "basis.txt"
        code = run("fit", "--data", str(three_state_file), "--n", "9",
                   "--mcm", "exhaustive", "--out", str(report),
                   "--dot", str(dot), "--basis-out", str(basis_out),
                   "--workers", "1")
        assert code == EXIT_OK
        rec = read_report(report)
        assert len(rec["partition"]["blocks"]) == 8
        assert rec["input"]["N"] == 20000
        assert len(rec["basis"]["operators"]) == 9
        assert rec["config"]["mcm_mode"] == "exhaustive"
        text = dot.read_text()
        assert "s0 -- b" in text and "-- c0;" in text
        assert basis_out.read_text().count("\n") >= 9
        assert run("verify", "--report", str(report)) == EXIT_OK
        out = capsys.readouterr().out
        assert "verify: OK" in out

    def test_verify_catches_tampering(self, three_state_file, tmp_path):
        report = tmp_path / "report.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--out", str(report)) == EXIT_OK
        rec = json.loads(report.read_text())
        rec["evidence"]["total_log_evidence"] += 1e-3
        report.write_text(json.dumps(rec))
        assert run("verify", "--report", str(report)) == EXIT_FAIL

    def test_identity_basis_mode(self, three_state_file, tmp_path):
        report = tmp_path / "report.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--basis", "identity", "--out", str(report)) == EXIT_OK
        rec = read_report(report)
        assert all(op.count("1") == 1 for op in rec["basis"]["operators"])

    def test_basis_from_file_mode(self, three_state_file, tmp_path):
        report = tmp_path / "r1.json"
        basis_out = tmp_path / "basis.txt"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--out", str(report), "--basis-out", str(basis_out)) == EXIT_OK
        report2 = tmp_path / "r2.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--basis", f"file:{basis_out}",
                   "--out", str(report2)) == EXIT_OK
        a = read_report(report)
        b = read_report(report2)
        assert a["evidence"]["total_log_evidence"] == pytest.approx(
            b["evidence"]["total_log_evidence"], abs=1e-9)

    def test_greedy_matches_exhaustive_on_planted(self, tmp_path):
        data = tmp_path / "d.txt"
        assert run("gen", "--n", "6", "--count", "30000", "--seed", "4",
                   "--state", "111000:0.35", "--state", "000111:0.25",
                   "--state", "110001:0.25", "--state", "001110:0.15",
                   "--out", str(data)) == EXIT_OK
        r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert run("fit", "--data", str(data), "--n", "6",
                   "--mcm", "exhaustive", "--out", str(r1)) == EXIT_OK
        assert run("fit", "--data", str(data), "--n", "6",
                   "--mcm", "greedy", "--out", str(r2)) == EXIT_OK
        a, b = read_report(r1), read_report(r2)
        assert "merge_curve" in b["extras"]
        assert a["evidence"]["total_log_evidence"] >= \
            b["evidence"]["total_log_evidence"] - 1e-9
        # on this planted set the greedy argmax is the exhaustive winner
        assert a["partition"] == b["partition"]

    def test_cap_env_override(self, three_state_file, tmp_path, monkeypatch):
        monkeypatch.setenv("MCMSELECT_MAX_MCM_N", "4")
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--out", str(tmp_path / "r.json")) == EXIT_CAP

    def test_cap_exit_code(self, three_state_file, tmp_path):
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--max-mcm-n", "5",
                   "--out", str(tmp_path / "r.json")) == EXIT_CAP

    def test_missing_file_exit_code(self, tmp_path):
        assert run("fit", "--data", str(data_missing := tmp_path / "no.txt"),
                   "--n", "3", "--out", str(tmp_path / "r.json")) == EXIT_INPUT

    def test_log_base_flag_scales_print(self, three_state_file, tmp_path,
                                        capsys):
        report = tmp_path / "r.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--log-base", "2", "--out", str(report)) == EXIT_OK
        out = capsys.readouterr().out
        assert "log2" in out
        rec = read_report(report)
        import math
        nats = rec["evidence"]["total_log_evidence"]
        printed = [line for line in out.splitlines()
                   if line.startswith("log-evidence")][0]
        shown = float(printed.split(":")[1])
        assert shown == pytest.approx(nats / math.log(2), rel=1e-9)


class TestSampleCommand:
    def test_sample_roundtrip_recovers_model(self, three_state_file, tmp_path):
        report = tmp_path / "report.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--out", str(report)) == EXIT_OK
        sampled = tmp_path / "sampled.txt"
        assert run("sample", "--report", str(report), "--count", "20000",
                   "--seed", "11", "--out", str(sampled)) == EXIT_OK
        report2 = tmp_path / "report2.json"
        assert run("fit", "--data", str(sampled), "--n", "9",
                   "--out", str(report2)) == EXIT_OK
        a, b = read_report(report), read_report(report2)
        ranks = sorted(len(blk["members"])
                       for blk in b["partition"]["blocks"])
        assert ranks == [1] * 7 + [2]
        assert len(a["partition"]["blocks"]) == len(b["partition"]["blocks"])

    def test_same_seed_byte_identical(self, three_state_file, tmp_path):
        report = tmp_path / "report.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--out", str(report)) == EXIT_OK
        outs = []
        for name in ("s1.txt", "s2.txt"):
            out = tmp_path / name
            assert run("sample", "--report", str(report), "--count", "500",
                       "--seed", "3", "--out", str(out)) == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_zero_count_valid_file(self, three_state_file, tmp_path):
        report = tmp_path / "report.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--out", str(report)) == EXIT_OK
        out = tmp_path / "empty.txt"
        assert run("sample", "--report", str(report), "--count", "0",
                   "--seed", "3", "--out", str(out)) == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines and all(line.startswith("#") for line in lines)

    def test_missing_source_dataset(self, three_state_file, tmp_path):
        report = tmp_path / "report.json"
        assert run("fit", "--data", str(three_state_file), "--n", "9",
                   "--out", str(report)) == EXIT_OK
        three_state_file.unlink()
        assert run("sample", "--report", str(report), "--count", "5",
                   "--seed", "3",
                   "--out", str(tmp_path / "s.txt")) == EXIT_INPUT


class TestEnumerateCommand:
    def test_table_contents(self, capsys):
        assert run("enumerate", "--max-n", "9") == EXIT_OK
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0].split() == ["n", "IM", "SCM", "MCM", "MCM*", "Bell",
                                    "pairwise"]
        row9 = [line for line in lines if line.split()[0] == "9"][0]
        assert "115975" in row9.split()
        assert "21147" in row9.split()

    def test_n_zero_row(self, capsys):
        assert run("enumerate", "--max-n", "0") == EXIT_OK
        row = capsys.readouterr().out.splitlines()[1].split()
        assert row == ["0", "1", "1", "1", "1", "1", "1"]

    def test_cap(self):
        assert run("enumerate", "--max-n", "51") == EXIT_CAP


class TestRelabelFlag:
    def test_fit_with_relabel(self, tmp_path):
        data = tmp_path / "d.txt"
        data.write_text("10\n10\n01\n")
        side = tmp_path / "m.txt"
        side.write_text("1 1\n0 1\n")
        report = tmp_path / "r.json"
        assert run("fit", "--data", str(data), "--n", "2",
                   "--relabel", str(side), "--out", str(report)) == EXIT_OK
        rec = read_report(report)
        assert rec["config"]["relabel"] == str(side)
        # verify reloads through the same relabel map
        assert run("verify", "--report", str(report)) == EXIT_OK
