"""Tests for the svepath command line."""

from __future__ import annotations

import subprocess
import sys

import pytest

from svepath.__main__ import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_PARAMETER,
    HANDLERS,
    build_parser,
    cli_main,
)
from svepath.config import RUN_CONFIG_NAME, load_config
from svepath.exceptions import BlowUpError

SMALL = ["--n", "16", "--paths", "8", "--seed", "3"]


class TestCLIBasics:
    """Entry point and argument parsing."""

    def test_module_help(self):
        result = subprocess.run(
            [sys.executable, "-m", "svepath", "--help"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "usage:" in result.stdout.lower()
        assert "verify-pi" in result.stdout

    def test_command_required(self):
        assert cli_main([]) == EXIT_PARAMETER

    def test_unknown_command(self):
        assert cli_main(["integrate"]) == EXIT_PARAMETER

    def test_every_handler_has_a_subcommand(self):
        parser = build_parser()
        for name in HANDLERS:
            args = parser.parse_args([name])
            assert args.command == name


class TestSimulate:
    """simulate writes t,value and the effective configuration."""

    def test_writes_outputs(self, tmp_path):
        assert cli_main(["simulate", *SMALL, "--out", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "simulate.csv").read_text().splitlines()
        assert lines[0] == "t,value"
        assert len(lines) == 18
        saved = load_config(tmp_path / RUN_CONFIG_NAME)
        assert saved["n"] == "16"
        assert saved["seed"] == "3"

    def test_deterministic(self, tmp_path):
        cli_main(["simulate", *SMALL, "--out", str(tmp_path / "a")])
        cli_main(["simulate", *SMALL, "--out", str(tmp_path / "b")])
        first = (tmp_path / "a" / "simulate.csv").read_text()
        assert first == (tmp_path / "b" / "simulate.csv").read_text()
        assert first == (tmp_path / "b" / "simulate.csv").read_text()

    def test_config_file_and_flags(self, tmp_path):
        conf = tmp_path / "exp.conf"
        conf.write_text("# small run\nn = 8\nseed = 1\n")
        out = tmp_path / "out"
        assert cli_main(["simulate", "--config", str(conf), "--n", "32", "--out", str(out)]) == 0
        saved = load_config(out / RUN_CONFIG_NAME)
        assert saved["n"] == "32"
        assert saved["seed"] == "1"


class TestErrors:
    """Exit codes 2 and 3."""

    def test_bad_kernel(self, tmp_path, capsys):
        code = cli_main(["simulate", "--kernel", "cauchy:alpha=0.2", "--out", str(tmp_path)])
        assert code == EXIT_PARAMETER
        assert "unknown kernel variant" in capsys.readouterr().err

    def test_moment_window(self, tmp_path, capsys):
        code = cli_main(["mc-moment", *SMALL, "--p", "3", "--out", str(tmp_path)])
        assert code == EXIT_PARAMETER
        assert "p > 2/(1-2α)" in capsys.readouterr().err

    def test_unknown_fixture(self, tmp_path, capsys):
        code = cli_main(["simulate", "--fixture", "cubic", "--out", str(tmp_path)])
        assert code == EXIT_PARAMETER
        assert "Available fixtures" in capsys.readouterr().err

    def test_numerical_failure(self, tmp_path, capsys, monkeypatch):
        def blow_up(config):
            raise BlowUpError(step=12, value=float("inf"), threshold=1e8)

        monkeypatch.setitem(HANDLERS, "simulate", blow_up)
        assert cli_main(["simulate", "--out", str(tmp_path)]) == EXIT_NUMERICAL
        assert "blew up at step 12" in capsys.readouterr().err


class TestSubcommands:
    """Each experiment writes its CSV under --out."""

    def test_mc_moment(self, tmp_path):
        assert cli_main(["mc-moment", *SMALL, "--out", str(tmp_path)]) == EXIT_OK
        assert (tmp_path / "mc_moment.csv").exists()

    def test_mc_holder(self, tmp_path, capsys):
        assert cli_main(["mc-holder", *SMALL, "--out", str(tmp_path)]) == EXIT_OK
        assert "slope = " in capsys.readouterr().out

    def test_verify_pi(self, tmp_path, capsys):
        args = ["verify-pi", *SMALL, "--levels", "8,16", "--z-probes", "5"]
        assert cli_main([*args, "--out", str(tmp_path)]) == EXIT_OK
        assert "max_residual = " in capsys.readouterr().out
        assert (tmp_path / "report.csv").exists()
        assert (tmp_path / "summary.txt").exists()

    def test_field(self, tmp_path):
        args = ["field", "--n", "16", "--field-points", "11", "--out", str(tmp_path)]
        assert cli_main(args) == EXIT_OK
        lines = (tmp_path / "field.csv").read_text().splitlines()
        assert lines[0] == "x,value"
        assert len(lines) == 12

    def test_convergence(self, tmp_path):
        args = ["convergence", "--paths", "4", "--levels", "8,16", "--out", str(tmp_path)]
        assert cli_main(args) == EXIT_OK
        assert (tmp_path / "convergence.csv").exists()

    @pytest.mark.slow
    def test_selftest(self, capsys):
        assert cli_main(["selftest"]) == EXIT_OK
        assert "checks passed" in capsys.readouterr().out


# The Monte Carlo runs span several path blocks, so the worker count changes their schedule
WORKER_RUNS = {
    "simulate": ["--n", "16", "--seed", "3"],
    "field": ["--n", "16", "--field-points", "11"],
    "mc-moment": ["--n", "16", "--paths", "600", "--seed", "3"],
    "mc-holder": ["--n", "16", "--paths", "600", "--seed", "3"],
    "convergence": ["--paths", "600", "--levels", "8,16", "--seed", "3"],
    "verify-pi": ["--n", "16", "--paths", "16", "--levels", "8,16", "--seed", "3"],
    "verify-field": ["--n", "16", "--paths", "16", "--levels", "8,16", "--m-list", "2,4"],
}


class TestWorkerIndependence:
    """Outputs are byte-identical for any --workers."""

    @pytest.mark.parametrize("command", sorted(WORKER_RUNS))
    def test_csv_bytes(self, tmp_path, command):
        for workers in ("1", "8"):
            out = tmp_path / workers
            args = [command, *WORKER_RUNS[command], "--workers", workers, "--out", str(out)]
            assert cli_main(args) == EXIT_OK
        serial = sorted(path.name for path in (tmp_path / "1").glob("*.csv"))
        assert serial
        for name in serial:
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "8" / name).read_bytes()
