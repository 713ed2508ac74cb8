"""Exit codes, config file parsing, and subcommand output."""

import numpy as np
import pytest

from gradline import ConfigError
from gradline.cli import main, parse_config_file


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# comment line\n"
        "problem = noisy-quadratic-1d\n"
        "gamma = 0.5  # trailing comment\n"
        "\n"
        "gamma = 0.25\n"
    )
    mapping = parse_config_file(path)
    assert mapping == {"problem": "noisy-quadratic-1d", "gamma": "0.25"}


def test_parse_config_file_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("just some words\n")
    with pytest.raises(ConfigError, match="expected key = value"):
        parse_config_file(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config_file(tmp_path / "missing.cfg")


def test_train_success_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = main([
        "train", "--problem", "noisy-quadratic-1d", "--strategy", "gos",
        "--batch-size", "10", "--eval-budget", "20", "--seed", "1",
        "--sigma", "0.5", "--n-samples", "100", "--output", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("iter,")
    assert len(lines) > 1
    captured = capsys.readouterr()
    assert f"wrote {out}" in captured.out
    assert "train_loss=" in captured.out


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "problem = noisy-quadratic-1d\nstrategy = fixed\ngamma = 10\n"
        "batch_size = 10\neval_budget = 300\nsigma = 0.5\nn_samples = 100\n"
    )
    with np.errstate(over="ignore", invalid="ignore"):
        assert main(["train", "--config", str(cfg)]) == 3
    assert main(["train", "--config", str(cfg), "--gamma", "0.01"]) == 0


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("learning_rate = 0.1\n")
    assert main(["train", "--config", str(cfg)]) == 1
    assert "config error" in capsys.readouterr().err
    assert main(["train", "--no-such-flag"]) == 1


def test_diverged_run_exits_three(capsys):
    with np.errstate(over="ignore", invalid="ignore"):
        code = main([
            "train", "--problem", "noisy-quadratic-1d", "--strategy", "fixed",
            "--gamma", "10", "--batch-size", "5", "--eval-budget", "400",
            "--seed", "0", "--sigma", "0.5", "--n-samples", "50",
        ])
    assert code == 3
    assert "diverged" in capsys.readouterr().err


def test_sweep_writes_summaries(tmp_path, capsys):
    code = main([
        "sweep", "--problem", "noisy-quadratic-1d", "--sigma", "0.5",
        "--n-samples", "100", "--eval-budget", "20",
        "--strategies", "fixed,gos", "--batch-sizes", "5,10",
        "--seeds", "0,1", "--out-dir", str(tmp_path),
    ])
    assert code == 0
    for name in ("summary_train.csv", "summary_test.csv"):
        lines = (tmp_path / name).read_text().splitlines()
        assert lines[0] == "strategy,problem,optimizer,accuracy"
        assert len(lines) == 5
    assert (tmp_path / "run_gos_b5_s1.csv").exists()


def _accuracy_csv(path, rows):
    lines = ["strategy,problem,optimizer,accuracy"]
    lines += [",".join(map(str, row)) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def test_robustness_prints_overall(tmp_path, capsys):
    csv_path = tmp_path / "acc.csv"
    _accuracy_csv(csv_path, [
        ("a", "p1", "sgd", 90.0), ("b", "p1", "sgd", 95.0),
        ("a", "p2", "sgd", 80.0), ("b", "p2", "sgd", 70.0),
    ])
    out = tmp_path / "table.csv"
    code = main(["robustness", "--input", str(csv_path), "--output", str(out)])
    assert code == 0
    captured = capsys.readouterr()
    assert "R[a] = 5" in captured.out
    assert "R[b] = 10" in captured.out
    assert out.read_text().splitlines()[0] == "strategy,problem,optimizer,accuracy,psi"


def test_robustness_data_errors(tmp_path, capsys):
    assert main(["robustness", "--input", str(tmp_path / "missing.csv")]) == 2
    assert "data error" in capsys.readouterr().err
    partial = tmp_path / "partial.csv"
    _accuracy_csv(partial, [
        ("a", "p1", "sgd", 90.0), ("b", "p1", "sgd", 95.0),
        ("a", "p2", "sgd", 80.0),
    ])
    assert main(["robustness", "--input", str(partial)]) == 2
    assert "data error" in capsys.readouterr().err


def test_histogram_rows_match_bins(tmp_path, capsys):
    out = tmp_path / "hist.csv"
    code = main([
        "histogram", "--bins", "20", "--trials", "50", "--seed", "3",
        "--output", str(out),
    ])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "alpha_lo,alpha_hi,count"
    assert len(lines) == 21
    assert "sign changes over 50 trials" in capsys.readouterr().out
    assert main(["histogram", "--lo", "2", "--hi", "1"]) == 1


def test_gradcheck_passes(capsys):
    assert main(["gradcheck", "--layers", "4,8,3", "--coords", "10"]) == 0
    assert "max relative error" in capsys.readouterr().out
