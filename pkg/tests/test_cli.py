"""Command-line surface: exit codes, artifacts, and override precedence."""

import json
import os

import numpy as np
import pytest

from fd2k import config, randomness, signals
from fd2k.cli import EXIT_CHECK_FAILED, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    monkeypatch.delenv("FD2K_SEED", raising=False)


def tiny_flags(out_dir, seed=3, e_max=4):
    return [
        "--output-dir", str(out_dir),
        "--seed", str(seed),
        "--M", "4", "--T", "3",
        "--e-max", str(e_max), "--E", "2",
        "--n", "4", "--N-mem", "64",
    ]


def train_tiny(out_dir, extra=(), seed=3, e_max=4):
    return main(["train", *tiny_flags(out_dir, seed=seed, e_max=e_max), *extra])


class TestUsageErrors:
    def test_no_command(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == EXIT_USAGE

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_invalid_parameter_value(self, tmp_path, capsys):
        code = main(["simulate", "--output-dir", str(tmp_path), "--gamma", "1.5"])
        assert code == EXIT_USAGE
        assert "configuration error" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(tmp_path / "none.toml")])
        assert code == EXIT_RUNTIME
        assert "error" in capsys.readouterr().err


class TestSimulate:
    def test_writes_traces_and_config_echo(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["simulate", *tiny_flags(out)])
        assert code == EXIT_OK
        assert "traces.csv" in capsys.readouterr().out

        echoed = config.load_config(out / "config.toml")
        assert echoed.train.M == 4
        assert echoed.seed == 3

        scenario = echoed.scenario
        traces = signals.load_traces(out / "traces.csv", scenario)
        assert set(traces) == {scenario.alice_node, scenario.bob_node, scenario.eve_node}
        assert all(t.samples.size == 12 for t in traces.values())

    def test_seed_determinism(self, tmp_path):
        for name in ("one", "two"):
            assert main(["simulate", *tiny_flags(tmp_path / name, seed=9)]) == EXIT_OK
        first = (tmp_path / "one" / "traces.csv").read_bytes()
        second = (tmp_path / "two" / "traces.csv").read_bytes()
        assert first == second

    def test_env_seed_beats_flag(self, tmp_path, monkeypatch):
        assert main(["simulate", *tiny_flags(tmp_path / "plain", seed=5)]) == EXIT_OK
        monkeypatch.setenv("FD2K_SEED", "5")
        assert main(["simulate", *tiny_flags(tmp_path / "env", seed=99)]) == EXIT_OK
        assert (tmp_path / "env" / "traces.csv").read_bytes() == (
            tmp_path / "plain" / "traces.csv"
        ).read_bytes()
        assert config.load_config(tmp_path / "env" / "config.toml").seed == 5

    def test_env_seed_must_be_integer(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("FD2K_SEED", "abc")
        code = main(["simulate", *tiny_flags(tmp_path)])
        assert code == EXIT_USAGE
        assert "FD2K_SEED" in capsys.readouterr().err

    def test_flag_beats_config_file(self, tmp_path):
        cfg_path = tmp_path / "run.toml"
        cfg_path.write_text("M = 6\nT = 3\nseed = 3\n")
        out = tmp_path / "out"
        code = main(
            ["simulate", "--config", str(cfg_path), "--M", "4", "--output-dir", str(out)]
        )
        assert code == EXIT_OK
        assert config.load_config(out / "config.toml").train.M == 4


class TestTrain:
    def test_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert train_tiny(out) == EXIT_OK
        capsys.readouterr()

        for name in ("actor_A", "actor_B", "critic_A", "critic_B", "global_actor"):
            assert (out / f"{name}.bin").exists()
        assert (out / "checkpoint" / "state.toml").exists()

        rows = (out / "metrics.csv").read_text().strip().split("\n")
        assert rows[0].startswith("epoch,")
        assert [row.split(",")[0] for row in rows[1:]] == ["1", "2", "3", "4"]

    def test_reproducible(self, tmp_path, capsys):
        for name in ("one", "two"):
            assert train_tiny(tmp_path / name) == EXIT_OK
        capsys.readouterr()
        assert (tmp_path / "one" / "metrics.csv").read_bytes() == (
            tmp_path / "two" / "metrics.csv"
        ).read_bytes()
        assert (tmp_path / "one" / "actor_A.bin").read_bytes() == (
            tmp_path / "two" / "actor_A.bin"
        ).read_bytes()

    def test_resume_extends_epoch_numbering(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert train_tiny(out, e_max=4) == EXIT_OK
        assert train_tiny(out, extra=["--resume", str(out / "checkpoint")], e_max=8) == EXIT_OK
        capsys.readouterr()

        rows = (out / "metrics.csv").read_text().strip().split("\n")
        assert rows[0].startswith("epoch,")
        assert [row.split(",")[0] for row in rows[1:]] == [str(e) for e in range(1, 9)]

        state = config.loads((out / "checkpoint" / "state.toml").read_text())
        assert state["epoch"] == 8

    def test_resume_past_budget_is_noop(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert train_tiny(out, e_max=4) == EXIT_OK
        assert train_tiny(out, extra=["--resume", str(out / "checkpoint")], e_max=4) == EXIT_OK
        assert "nothing to do" in capsys.readouterr().out

    def test_federated_spool(self, tmp_path, capsys):
        out = tmp_path / "out"
        spool = tmp_path / "spool"
        assert train_tiny(out, extra=["--federated-dir", str(spool)]) == EXIT_OK
        capsys.readouterr()
        names = sorted(os.listdir(spool))
        assert names == [
            "actor_A_round1.bin", "actor_A_round2.bin",
            "actor_B_round1.bin", "actor_B_round2.bin",
            "global_round1.bin", "global_round2.bin",
        ]

    def test_train_from_trace_file(self, tmp_path, capsys):
        sim = tmp_path / "sim"
        assert main(["simulate", *tiny_flags(sim)]) == EXIT_OK
        out = tmp_path / "out"
        code = train_tiny(out, extra=["--traces", str(sim / "traces.csv")])
        assert code == EXIT_OK
        capsys.readouterr()
        assert (out / "actor_A.bin").exists()


class TestEvaluate:
    @pytest.fixture()
    def trained(self, tmp_path, capsys):
        out = tmp_path / "train"
        assert train_tiny(out) == EXIT_OK
        capsys.readouterr()
        return out

    def test_artifacts(self, tmp_path, trained, capsys):
        out = tmp_path / "eval"
        code = main(
            ["evaluate", *tiny_flags(out), "--eval-episodes", "2", "--models", str(trained)]
        )
        assert code == EXIT_OK
        assert "KAR(A,B)" in capsys.readouterr().out

        summary = json.loads((out / "eval_report.json").read_text())
        assert summary["episodes"] == 2
        assert summary["keystream_bits"] == 2 * 3 * 4
        assert 0.0 <= summary["mean_kar_ab"] <= 1.0
        assert len(summary["per_episode"]) == 2

        csv_rows = (out / "eval_report.csv").read_text().strip().split("\n")
        assert csv_rows[0] == "episode,ts,kar_ab,kar_ae,gap"
        assert len(csv_rows) == 1 + 2 * 3

        for owner in ("A", "B", "E"):
            stream = randomness.read_bitstream(out / f"keystream_{owner}.txt")
            assert stream.size == 24
            key_lines = (out / f"keys_{owner}.txt").read_text().strip().split("\n")
            assert len(key_lines) == 6

    def test_single_trace_file_episode(self, tmp_path, trained, capsys):
        sim = tmp_path / "sim"
        assert main(["simulate", *tiny_flags(sim)]) == EXIT_OK
        out = tmp_path / "eval"
        code = main(
            [
                "evaluate", *tiny_flags(out),
                "--models", str(trained),
                "--traces", str(sim / "traces.csv"),
            ]
        )
        assert code == EXIT_OK
        capsys.readouterr()
        summary = json.loads((out / "eval_report.json").read_text())
        assert summary["episodes"] == 1

    def test_missing_models(self, tmp_path, capsys):
        code = main(["evaluate", *tiny_flags(tmp_path / "eval"), "--models", str(tmp_path)])
        assert code == EXIT_RUNTIME
        assert "error" in capsys.readouterr().err


class TestNist:
    def write_bits(self, path, bits):
        randomness.write_bitstream(path, np.asarray(bits, dtype=np.int8))

    def test_random_stream_passes(self, tmp_path, capsys):
        path = tmp_path / "bits.txt"
        rng = np.random.default_rng(12345)
        self.write_bits(path, rng.integers(0, 2, size=10_000))
        report_path = tmp_path / "report.csv"
        code = main(["nist", str(path), "--output", str(report_path)])
        assert code == EXIT_OK

        stdout = capsys.readouterr().out
        assert stdout.startswith("test,p_value,pass,applicable")
        assert len(stdout.strip().split("\n")) == 9
        assert report_path.read_text() == stdout

    def test_biased_stream_fails(self, tmp_path, capsys):
        path = tmp_path / "bits.txt"
        self.write_bits(path, np.ones(10_000))
        code = main(["nist", str(path)])
        assert code == EXIT_CHECK_FAILED
        assert "failed tests" in capsys.readouterr().err

    def test_short_stream_has_no_applicable_tests(self, tmp_path, capsys):
        path = tmp_path / "bits.txt"
        self.write_bits(path, np.zeros(50))
        code = main(["nist", str(path)])
        assert code == EXIT_CHECK_FAILED
        assert "no test was applicable" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        code = main(["nist", str(tmp_path / "none.txt")])
        assert code == EXIT_RUNTIME
        assert "error" in capsys.readouterr().err
