"""Tests for the command-line front end."""

import json

import pytest

from src.deepq_fuzz.bench.cli import (
    EXIT_ABORTED,
    EXIT_OK,
    EXIT_TARGET,
    EXIT_USAGE,
    build_parser,
    main,
    resolve_config,
)
from src.deepq_fuzz.loop import read_report
from src.deepq_fuzz.qnet import load_weights
from src.deepq_fuzz.models import PolicyKind, RewardMode, TargetKind

NEVER_PAYING = """
generations = 40
state_width = 8
policy = "baseline_random"

[target]
kind = "rigged"
length_delta = 1000000000
"""


def fuzz_args(tmp_path, *extra: str) -> list[str]:
    return [
        "fuzz",
        "--target",
        "rigged",
        "--generations",
        "20",
        "--state-width",
        "8",
        "--out",
        str(tmp_path),
        *extra,
    ]


class TestResolveConfig:
    """Tests for turning flags into a LoopConfig."""

    def test_flags_override_defaults(self, tmp_path):
        """Test that flags land in the config."""
        args = build_parser().parse_args(
            fuzz_args(tmp_path, "--reward", "r2", "--policy", "baseline", "--rng-seed", "5")
        )
        config = resolve_config(args)
        assert config.generations == 20
        assert config.reward.mode is RewardMode.TIME
        assert config.policy is PolicyKind.BASELINE
        assert config.target.kind is TargetKind.RIGGED
        assert config.rng_seed == 5
        assert config.findings_dir == tmp_path / "findings"

    def test_command_target(self, tmp_path):
        """Test that anything other than a known target name is split into a command."""
        args = build_parser().parse_args(
            ["fuzz", "--target", "./reader --strict {input}", "--out", str(tmp_path)]
        )
        config = resolve_config(args)
        assert config.target.kind is TargetKind.COMMAND
        assert config.target.command == ["./reader", "--strict", "{input}"]

    def test_file_values_survive_flags(self, tmp_path):
        """Test that unset flags keep the config file's values."""
        path = tmp_path / "run.toml"
        path.write_text(NEVER_PAYING)
        args = build_parser().parse_args(["bench", "--config", str(path), "--rng-seed", "9"])
        config = resolve_config(args)
        assert config.generations == 40
        assert config.target.length_delta == 10**9
        assert config.rng_seed == 9


class TestMain:
    """Tests for subcommands and exit codes."""

    def test_fuzz(self, tmp_path, capsys):
        """Test a short rigged run writes its report and prints a summary."""
        assert main(fuzz_args(tmp_path, "--policy", "baseline")) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["generations"] == 20
        assert not summary["aborted"]
        report = read_report(tmp_path / "report.csv")
        assert len(report.records) == 20

    def test_fuzz_saves_weights(self, tmp_path):
        """Test that --weights-out stores the trained network."""
        weights = tmp_path / "net.npz"
        assert main(fuzz_args(tmp_path, "--weights-out", str(weights))) == EXIT_OK
        assert weights.exists()

    def test_replay(self, tmp_path, capsys):
        """Test that replaying a report reproduces its generations."""
        assert main(fuzz_args(tmp_path, "--policy", "baseline")) == EXIT_OK
        capsys.readouterr()
        assert main(["replay", str(tmp_path / "report.csv")]) == EXIT_OK
        original = read_report(tmp_path / "report.csv")
        replayed = read_report(tmp_path / "replay" / "report.csv")
        assert [r.offset for r in replayed.records] == [r.offset for r in original.records]
        assert [r.action for r in replayed.records] == [r.action for r in original.records]

    def test_replay_writes_to_its_own_directory(self, tmp_path, capsys):
        """Test that a replay keeps the original run's findings and weights untouched."""
        weights = tmp_path / "net.npz"
        assert main(fuzz_args(tmp_path, "--weights-out", str(weights))) == EXIT_OK
        original = load_weights(weights)
        weights.unlink()
        replay_dir = tmp_path / "again"
        argv = ["replay", str(tmp_path / "report.csv"), "--out", str(replay_dir)]
        assert main(argv) == EXIT_OK
        replayed = read_report(replay_dir / "report.csv")
        assert replayed.config.findings_dir == replay_dir / "findings"
        assert replayed.config.weights_out == replay_dir / "net.npz"
        assert not weights.exists()
        assert load_weights(replay_dir / "net.npz").equals(original)

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["fuzz", "--reward", "r9"],
            ["fuzz", "--policy", "greedy"],
            ["fuzz", "--generations", "0"],
            ["sweep", "--dimension", "gamma", "--values", "0.5"],
        ],
    )
    def test_usage_errors(self, argv, tmp_path):
        """Test that bad arguments exit with the usage code."""
        assert main([*argv, "--out", str(tmp_path)] if argv else argv) == EXIT_USAGE

    def test_missing_weights(self, tmp_path):
        """Test that a frozen policy without its weights file is a usage error."""
        argv = fuzz_args(tmp_path, "--policy", f"frozen:{tmp_path / 'absent.npz'}")
        assert main(argv) == EXIT_USAGE

    def test_missing_seed(self, tmp_path):
        """Test that an unreadable seed file is a usage error."""
        assert main(fuzz_args(tmp_path, "--seed", str(tmp_path / "absent.pdf"))) == EXIT_USAGE

    def test_missing_target_program(self, tmp_path):
        """Test that a target that cannot be started exits with the environment code."""
        argv = ["fuzz", "--target", "/nonexistent/deepq-target {input}", "--out", str(tmp_path)]
        assert main(argv) == EXIT_TARGET

    def test_all_trials_invalid(self, tmp_path):
        """Test that a bench whose baseline never scores exits as aborted."""
        path = tmp_path / "run.toml"
        path.write_text(NEVER_PAYING)
        argv = ["bench", "--config", str(path), "--trials", "1", "--out", str(tmp_path)]
        assert main(argv) == EXIT_ABORTED

    def test_sweep_writes_table(self, tmp_path, capsys):
        """Test that a sweep prints one row per value and writes its table."""
        argv = [
            "sweep",
            "--target",
            "rigged",
            "--policy",
            "baseline",
            "--generations",
            "100",
            "--state-width",
            "8",
            "--trials",
            "1",
            "--dimension",
            "state_width",
            "--values",
            "8,16",
            "--out",
            str(tmp_path),
        ]
        assert main(argv) == EXIT_OK
        rows = json.loads(capsys.readouterr().out)["rows"]
        assert [row["value"] for row in rows] == ["8", "16"]
        assert (tmp_path / "sweep.csv").exists()

    def test_calibrate(self, tmp_path, capsys):
        """Test that calibration reports the requested number of runs."""
        assert main(["calibrate", "--runs", "5", "--out", str(tmp_path)]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["runs"] == 5
