import json

import pytest

from compevo.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main


def test_run_plot_pareto(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", "--experiment", "exp3", "--data", "synth:noisy_xor:60:0.1", "--reps", "1",
                 "--seed-base", "4", "--generations", "2", "--out", str(out)])
    assert code == EXIT_OK
    assert "gpcomp_free" in capsys.readouterr().out
    assert json.loads((out / "spec.json").read_text())["seeds"] == [4]
    assert main(["plot", "--in", str(out)]) == EXIT_OK
    assert (out / "plots" / "pareto.svg").is_file()
    capsys.readouterr()
    assert main(["pareto", "--in", str(out), "--variant", "steady_state"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("objective_0,objective_1,genotype_json")


def test_config_file_with_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "baseline", "data": "synth:noisy_xor:60:0", "repetitions": 3,
                               "seeds": [7, 8, 9]}))
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--reps", "1", "--out", str(out)]) == EXIT_OK
    assert json.loads((out / "spec.json").read_text())["seeds"] == [0]
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "p")]) == EXIT_OK
    assert json.loads((tmp_path / "p" / "spec.json").read_text())["seeds"] == [7, 8, 9]


@pytest.mark.parametrize("argv", [
    ["run", "--experiment", "exp1", "--data", "synth:noisy_xor:60:0", "--reps", "0", "--out", "x"],
    ["run", "--experiment", "exp1", "--data", "synth:noisy_xor:60:0"],
    ["run", "--data", "synth:noisy_xor:60:0", "--out", "x"],
    ["pareto", "--in", ".", "--variant", "nothing"],
])
def test_config_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_CONFIG


def test_plot_without_traces(tmp_path):
    (tmp_path / "traces").mkdir()
    assert main(["plot", "--in", str(tmp_path)]) == EXIT_CONFIG


def test_bad_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_argparse_error_exits_two():
    with pytest.raises(SystemExit) as info:
        main(["run", "--experiment", "exp9"])
    assert info.value.code == 2


@pytest.mark.parametrize("data", ["synth:spirals:60:0", "/no/such/file.csv"])
def test_data_errors(data, tmp_path):
    argv = ["run", "--experiment", "baseline", "--data", data, "--task", "classification",
            "--reps", "1", "--out", str(tmp_path / "o")]
    assert main(argv) == EXIT_DATA


def test_missing_value_in_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,y\n1,0\nNA,1\n")
    argv = ["run", "--experiment", "baseline", "--data", str(p), "--task", "classification", "--target", "y",
            "--reps", "1", "--out", str(tmp_path / "o")]
    assert main(argv) == EXIT_DATA
