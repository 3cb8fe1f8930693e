import configparser
import shutil
import subprocess

import pytest

from carepath import cli
from carepath.errors import DataError, NumericError
from carepath.pipeline import StageError


def synth_dir(tmp_path, n=40, seed=1):
    out = tmp_path / "cohort"
    assert cli.main(["synth", "--n", str(n), "--seed", str(seed), "--out", str(out)]) == 0
    return out


class TestExitCodes:
    def test_no_arguments_is_a_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.main([])
        assert excinfo.value.code == 1

    def test_unknown_command_is_a_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["frobnicate"])
        assert excinfo.value.code == 1

    def test_malformed_weights_flag_is_a_usage_error(self, tmp_path):
        for bad in ("1,2", "a,b,c,d", "40,55,75,85"):
            with pytest.raises(SystemExit) as excinfo:
                cli.main(
                    ["dist", "--trajectories", "x.csv", "--weights", bad, "--out", "y.csv"]
                )
            assert excinfo.value.code == 1

    def test_missing_input_file_is_a_data_error(self, tmp_path):
        assert cli.main(["mine", "--trajectories", str(tmp_path / "nope.csv")]) == 2

    def test_numeric_failures_map_to_exit_3(self, monkeypatch):
        def boom(args):
            raise NumericError("unstable")

        monkeypatch.setitem(cli._COMMANDS, "mine", boom)
        assert cli.main(["mine", "--trajectories", "x"]) == 3

    def test_stage_errors_keep_their_cause_code(self, monkeypatch):
        def data_stage(args):
            raise StageError("clustering", DataError("bad k"))

        def numeric_stage(args):
            raise StageError("survival", NumericError("diverged"))

        monkeypatch.setitem(cli._COMMANDS, "mine", data_stage)
        assert cli.main(["mine", "--trajectories", "x"]) == 2
        monkeypatch.setitem(cli._COMMANDS, "mine", numeric_stage)
        assert cli.main(["mine", "--trajectories", "x"]) == 3


class TestCommands:
    def test_synth_writes_cohort_files(self, tmp_path, capsys):
        out = synth_dir(tmp_path)
        assert (out / "trajectories.csv").exists()
        assert (out / "covariates.csv").exists()
        assert "wrote 40 patients" in capsys.readouterr().out

    def test_mine_prints_pattern_rows(self, tmp_path, capsys):
        out = synth_dir(tmp_path)
        capsys.readouterr()  # drop the synth chatter
        code = cli.main(
            ["mine", "--trajectories", str(out / "trajectories.csv"), "--min-support", "5"]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "count,frequency,pattern"
        assert len(lines) > 1

    def test_mine_writes_csv_when_asked(self, tmp_path):
        out = synth_dir(tmp_path)
        target = tmp_path / "patterns.csv"
        code = cli.main(
            [
                "mine",
                "--trajectories",
                str(out / "trajectories.csv"),
                "--out",
                str(target),
            ]
        )
        assert code == 0
        assert target.read_text().startswith("count,frequency,pattern")

    def test_dist_writes_matrix_and_binary(self, tmp_path):
        out = synth_dir(tmp_path, n=20)
        mpath = tmp_path / "m.csv"
        bpath = tmp_path / "m.bin"
        code = cli.main(
            [
                "dist",
                "--trajectories",
                str(out / "trajectories.csv"),
                "--out",
                str(mpath),
                "--binary",
                str(bpath),
            ]
        )
        assert code == 0
        assert mpath.exists() and bpath.exists()

    def test_cluster_writes_assignments(self, tmp_path, capsys):
        out = synth_dir(tmp_path, n=20)
        apath = tmp_path / "assign.csv"
        code = cli.main(
            [
                "cluster",
                "--trajectories",
                str(out / "trajectories.csv"),
                "--k",
                "3",
                "--out",
                str(apath),
            ]
        )
        assert code == 0
        lines = apath.read_text().strip().splitlines()
        assert lines[0] == "patient_id,cluster,distance_to_medoid,is_medoid"
        assert len(lines) == 21
        assert "total distance" in capsys.readouterr().out

    def test_tune_reports_best_trial(self, tmp_path, capsys):
        out = synth_dir(tmp_path)
        log = tmp_path / "trials.csv"
        code = cli.main(
            [
                "tune",
                "--trajectories",
                str(out / "trajectories.csv"),
                "--budget",
                "1",
                "--out",
                str(log),
            ]
        )
        assert code == 0
        assert "best trial 0" in capsys.readouterr().out
        assert log.read_text().startswith("trial_index,")

    def test_survival_reports_cohort_metrics(self, tmp_path, capsys):
        out = synth_dir(tmp_path, n=60)
        code = cli.main(
            [
                "survival",
                "--trajectories",
                str(out / "trajectories.csv"),
                "--covariates",
                str(out / "covariates.csv"),
                "--trees",
                "10",
            ]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "cox_aic" in text
        assert "rsf_c_index" in text

    def test_export_sankey(self, tmp_path):
        out = synth_dir(tmp_path)
        target = tmp_path / "sankey.csv"
        code = cli.main(
            [
                "export-sankey",
                "--trajectories",
                str(out / "trajectories.csv"),
                "--out",
                str(target),
            ]
        )
        assert code == 0
        assert target.read_text().startswith(
            "source_pos,source_code,target_pos,target_code,count"
        )


class TestRunCommand:
    def test_flag_driven_run(self, tmp_path, capsys):
        out = tmp_path / "artifacts"
        code = cli.main(
            [
                "run",
                "--synth",
                "40",
                "--seed",
                "3",
                "--k",
                "3",
                "--trees",
                "5",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert (out / "manifest.ini").exists()
        text = capsys.readouterr().out
        assert "wrote artifacts" in text
        assert text.count("cluster ") == 3

    def test_config_file_run_with_flag_override(self, tmp_path):
        config = tmp_path / "run.ini"
        config.write_text(
            "[run]\nseed = 9\n\n[data]\nsynth_patients = 40\n\n"
            "[cluster]\nk = 3\n\n[survival]\ntrees = 5\n"
        )
        out = tmp_path / "artifacts"
        code = cli.main(
            ["run", "--config", str(config), "--k", "2", "--out", str(out)]
        )
        assert code == 0
        manifest = configparser.ConfigParser()
        manifest.read(out / "manifest.ini")
        assert manifest["run"]["seed"] == "9"
        assert manifest["cluster"]["k"] == "2"  # flag beats the file

    def test_unknown_config_key_is_a_data_error(self, tmp_path):
        config = tmp_path / "run.ini"
        config.write_text("[run]\nseed = 1\n\n[cluster]\nsize = 3\n")
        assert cli.main(["run", "--config", str(config)]) == 2

    def test_unreadable_config_is_a_data_error(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "none.ini")]) == 2

    def test_conflicting_sources_fail(self, tmp_path):
        code = cli.main(
            [
                "run",
                "--synth",
                "40",
                "--trajectories",
                "t.csv",
                "--covariates",
                "c.csv",
                "--out",
                str(tmp_path / "x"),
            ]
        )
        assert code == 2


def test_console_script_is_installed(tmp_path):
    exe = shutil.which("carepath")
    assert exe, "console script should be on PATH after installation"
    proc = subprocess.run(
        [exe, "synth", "--n", "8", "--seed", "0", "--out", str(tmp_path / "c")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert (tmp_path / "c" / "trajectories.csv").exists()
