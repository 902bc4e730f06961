"""Experiment-file parsing, batch execution, analysis, reproducibility."""

import csv
from pathlib import Path

import pytest

from hxsim.cli import (
    ConfigError,
    RESULT_COLUMNS,
    expand_points,
    main,
    parse_experiment,
    resolve_faults,
)
from hxsim.topology import HyperXTopology


def write(tmp_path: Path, text: str) -> Path:
    p = tmp_path / "exp.txt"
    p.write_text(text)
    return p


BASE = """
sides = [4, 4]
servers_per_switch = 2
routing = pol_sp
pattern = uniform
load = 0.3
seeds = [1, 2]
warmup = 100
measure = 200
output = out.csv
"""


class TestParsing:
    def test_minimal_config(self, tmp_path):
        cfg = parse_experiment(write(tmp_path, BASE))
        assert cfg["sides"] == [4, 4]
        assert cfg["routing"] == "pol_sp"
        assert len(expand_points(cfg)) == 2  # two seeds

    def test_comments_and_blanks(self, tmp_path):
        cfg = parse_experiment(
            write(tmp_path, "# header\n\nsides = [2]  # inline\nservers_per_switch = 1\n")
        )
        assert cfg["sides"] == [2]

    def test_unknown_key_rejected_with_line(self, tmp_path):
        with pytest.raises(ConfigError, match=r":2: unknown key 'frobnicate'"):
            parse_experiment(write(tmp_path, "sides = [2]\nfrobnicate = 1\n"))

    def test_duplicate_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_experiment(
                write(tmp_path, "sides = [2]\nsides = [4]\nservers_per_switch = 1\n")
            )

    def test_missing_topology_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="required"):
            parse_experiment(write(tmp_path, "routing = pol_sp\n"))

    def test_invalid_routing_rejected_before_any_run(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown routing"):
            parse_experiment(
                write(tmp_path, "sides = [2]\nservers_per_switch = 1\nrouting = bogus\n")
            )

    def test_invalid_load_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="outside"):
            parse_experiment(
                write(tmp_path, "sides = [2]\nservers_per_switch = 1\nload = 1.2\n")
            )

    def test_bad_fault_spec_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="bad fault spec"):
            parse_experiment(
                write(tmp_path, "sides = [2]\nservers_per_switch = 1\nfaults = [\"random:x\"]\n")
            )

    def test_cartesian_product(self, tmp_path):
        cfg = parse_experiment(
            write(
                tmp_path,
                "sides = [4, 4]\nservers_per_switch = 1\n"
                'routings = ["pol_sp", "omni_sp"]\nloads = [0.2, 0.4, 0.6]\n'
                "seeds = [1, 2]\n",
            )
        )
        assert len(expand_points(cfg)) == 2 * 3 * 2


class TestFaultSpecs:
    def test_resolve_none_and_random(self):
        topo = HyperXTopology((4, 4), 1)
        assert resolve_faults(topo, "none", (0, 0)) == frozenset()
        f = resolve_faults(topo, "random:7:5", (0, 0))
        assert len(f) == 5
        assert f == resolve_faults(topo, "random:7:5", (0, 0))  # deterministic

    def test_random_prefix_property(self):
        topo = HyperXTopology((4, 4), 1)
        small = resolve_faults(topo, "random:7:3", (0, 0))
        big = resolve_faults(topo, "random:7:10", (0, 0))
        assert small <= big


class TestExecution:
    def test_single_row_smoke(self, tmp_path, capsys):
        exp = write(tmp_path, BASE)
        rc = main(["--experiment", str(exp), "--out", str(tmp_path)])
        assert rc == 0
        with open(tmp_path / "out.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert tuple(rows[0]) == RESULT_COLUMNS
        assert rows[0]["topology"] == "4x4/2"
        assert float(rows[0]["throughput"]) > 0

    def test_reproducible_byte_identical(self, tmp_path):
        exp = write(tmp_path, BASE)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["--experiment", str(exp), "--out", str(out1)]) == 0
        assert main(["--experiment", str(exp), "--out", str(out2)]) == 0
        assert (out1 / "out.csv").read_bytes() == (out2 / "out.csv").read_bytes()

    def test_aborted_run_nonzero_exit(self, tmp_path, capsys):
        # RPN needs a cubic 3D topology: the point aborts, exit code is 1
        exp = write(
            tmp_path,
            "sides = [4, 4]\nservers_per_switch = 2\npattern = rpn\n"
            "warmup = 50\nmeasure = 50\n",
        )
        rc = main(["--experiment", str(exp), "--out", str(tmp_path)])
        assert rc == 1
        err = capsys.readouterr().err
        assert "ABORTED" in err

    def test_parse_error_exit_2(self, tmp_path, capsys):
        exp = write(tmp_path, "nonsense\n")
        assert main(["--experiment", str(exp)]) == 2

    def test_completion_mode_series(self, tmp_path):
        exp = write(
            tmp_path,
            "sides = [4, 4]\nservers_per_switch = 2\nrouting = pol_sp\n"
            "pattern = server_perm\npattern_seed = 1\nmode = completion\n"
            "packets_per_server = 4\nload = 1.0\nbucket = 64\n",
        )
        assert main(["--experiment", str(exp), "--out", str(tmp_path)]) == 0
        series = list(tmp_path.glob("results_series_*.csv"))
        assert len(series) == 1
        with open(series[0]) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["cycle_bucket", "accepted_phits"]
        assert len(rows) > 1


class TestAnalyze:
    def test_analyze_sweeps_until_disconnection(self, tmp_path, capsys):
        exp = write(
            tmp_path,
            "sides = [4, 4]\nservers_per_switch = 1\nfault_seeds = [3]\n"
            "fault_step = 8\noutput = an.csv\n",
        )
        assert main(["--experiment", str(exp), "--analyze", "--out", str(tmp_path)]) == 0
        with open(tmp_path / "an.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[0]["faults"] == "0"
        assert rows[0]["diameter"] == "2"
        assert rows[-1]["connected"] == "0" or int(rows[-1]["faults"]) >= 40


class TestVerify:
    def test_verify_ok(self, tmp_path, capsys):
        exp = write(
            tmp_path,
            "sides = [4, 4]\nservers_per_switch = 1\n"
            'faults = ["none", "random:2:6", "row"]\nescape_root = [1, 1]\n',
        )
        rc = main(["--experiment", str(exp), "--verify"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.count("escape=ok") == 3

    def test_verify_invalid_shape(self, tmp_path, capsys):
        exp = write(
            tmp_path,
            "sides = [4, 4]\nservers_per_switch = 1\nfaults = [\"cross\"]\n",
        )
        assert main(["--experiment", str(exp), "--verify"]) == 1
        assert "INVALID" in capsys.readouterr().out
