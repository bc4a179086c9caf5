import json

import numpy as np
import pytest

from samplesynth.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from samplesynth.reference import reference_sample


def test_learn_command(tmp_path, capsys):
    code = main(
        [
            "learn",
            "--target",
            "bernoulli",
            "--chains",
            "1",
            "--iterations",
            "30",
            "--seed",
            "4",
            "--out",
            str(tmp_path),
            "--workers",
            "1",
        ]
    )
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "best program:" in out
    assert (tmp_path / "report.json").exists()


def test_learn_bad_target_exits_2(tmp_path, capsys):
    code = main(["learn", "--target", "weibull", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_generalize_missing_data_exits_3(tmp_path):
    code = main(["generalize", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path)])
    assert code == EXIT_DATA


def test_generalize_bad_csv_exits_3(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(["1.0"] * 25 + ["oops"]))
    code = main(["generalize", "--data", str(bad), "--out", str(tmp_path)])
    assert code == EXIT_DATA


def test_generalize_command(tmp_path, capsys):
    data = reference_sample("stdnormal", (), 60, seed=8)
    csv_path = tmp_path / "data.csv"
    csv_path.write_text("\n".join(repr(float(v)) for v in data))
    code = main(
        [
            "generalize",
            "--data",
            str(csv_path),
            "--chains",
            "1",
            "--iterations",
            "30",
            "--out",
            str(tmp_path / "out"),
            "--workers",
            "1",
        ]
    )
    assert code == EXIT_OK
    assert "held-out KS" in capsys.readouterr().out


def test_showcase_command(tmp_path, capsys):
    code = main(
        ["showcase", "--count", "3", "--samples", "100", "--seed", "2", "--out", str(tmp_path)]
    )
    assert code == EXIT_OK
    assert "skip rate" in capsys.readouterr().out


def test_config_file_and_flag_override(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"chains": 1, "iterations": 25, "workers": 1, "hist_samples": 100}))
    code = main(
        [
            "learn",
            "--target",
            "bernoulli",
            "--config",
            str(config),
            "--seed",
            "6",
            "--out",
            str(tmp_path / "o"),
        ]
    )
    assert code == EXIT_OK
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["config"]["iterations"] == 25
    assert report["config"]["seed"] == 6


def test_missing_config_file_exits_2(tmp_path):
    with pytest.raises(SystemExit) as err:
        main(["learn", "--target", "bernoulli", "--config", str(tmp_path / "nope.json")])
    assert err.value.code == EXIT_CONFIG


def test_bad_config_keys_exit_2(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"not_a_key": 1}))
    code = main(["learn", "--target", "bernoulli", "--config", str(config), "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
