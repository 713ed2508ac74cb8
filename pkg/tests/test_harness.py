"""Run configuration, training loop accounting, and benchmark metrics."""

import math

import numpy as np
import pytest

from gradline import (
    CSV_HEADER,
    ConfigError,
    Dataset,
    IncompleteTableError,
    MlpArchitecture,
    N2_LAYERS,
    RunConfig,
    StochasticOracle,
    build_problem,
    config_from_mapping,
    make_noisy_quadratic,
    moving_average,
    relative_robustness,
    run_sweep,
    snngpp_histogram,
    train_run,
)


def test_config_from_mapping_converts_strings():
    config = config_from_mapping({
        "problem": "noisy-bowl-nd", "strategy": "goals-2", "batch_size": "25",
        "gamma": "0.05", "carry_alpha": "true", "metric_every": "7",
    })
    assert config.problem == "noisy-bowl-nd"
    assert config.batch_size == 25
    assert config.gamma == 0.05
    assert config.carry_alpha is True
    assert config.metric_every == 7


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ConfigError, match="unknown config key"):
        config_from_mapping({"learning_rate": "0.1"})
    with pytest.raises(ConfigError, match="bad value"):
        config_from_mapping({"batch_size": "ten"})
    with pytest.raises(ConfigError, match="bad value"):
        config_from_mapping({"carry_alpha": "probably"})


def test_validate_catches_bad_fields():
    bad = [
        dict(problem="cifar"), dict(strategy="newton"), dict(direction="lbfgs"),
        dict(batch_size=0), dict(eval_budget=0), dict(gamma=-0.1),
        dict(c=1.0), dict(alpha_min=0.0), dict(dtype="float16"),
        dict(t0_epochs=0.0), dict(sigma=-1.0), dict(metric_every=-1),
    ]
    for kwargs in bad:
        with pytest.raises(ConfigError):
            RunConfig(**kwargs).validate()
    RunConfig().validate()


def test_resolved_gamma_follows_direction_rule():
    assert RunConfig(direction="sgd").resolved_gamma() == 0.01
    assert RunConfig(direction="adam").resolved_gamma() == 0.001
    assert RunConfig(direction="adam", gamma=0.5).resolved_gamma() == 0.5


def test_fixed_strategy_spends_exactly_one_eval_per_iteration():
    config = RunConfig(problem="noisy-quadratic-1d", strategy="fixed",
                       batch_size=10, eval_budget=100, seed=1,
                       sigma=0.5, n_samples=200)
    log = train_run(config)
    assert not log.diverged
    assert len(log.records) == 100
    assert all(r.evals_iter == 1 for r in log.records)
    assert log.records[-1].evals == 100
    assert all(r.alpha == 0.01 for r in log.records)


def test_accepted_gradient_is_reused_as_next_origin():
    # deterministic bowl, immediate acceptance every time: only the first
    # iteration pays for an origin gradient
    config = RunConfig(problem="noisy-bowl-nd", strategy="goals-1",
                       gamma=0.2, sigma=0.0, mu=1.0, dim=4, n_samples=20,
                       batch_size=20, eval_budget=12, seed=0)
    log = train_run(config)
    assert log.records[0].evals_iter == 2
    assert all(r.evals_iter == 1 for r in log.records[1:])
    assert all(r.termination == "immediate-accept" for r in log.records)
    assert all(r.alpha == 0.2 for r in log.records)
    assert log.records[-1].evals == 12


def test_budget_is_never_exceeded():
    config = RunConfig(problem="noisy-quadratic-1d", strategy="goals-2",
                       batch_size=10, eval_budget=37, seed=3,
                       sigma=0.5, n_samples=200, gamma=0.02)
    log = train_run(config)
    assert log.records[-1].evals <= 37
    assert sum(r.evals_iter for r in log.records) == log.records[-1].evals


def test_divergence_is_flagged_and_cut_short():
    # fixed step far above the stable limit blows the iterate up
    config = RunConfig(problem="noisy-quadratic-1d", strategy="fixed",
                       gamma=10.0, batch_size=5, eval_budget=500, seed=0,
                       sigma=0.5, n_samples=50)
    with np.errstate(over="ignore"):
        log = train_run(config)
    assert log.diverged
    assert 0 < len(log.records) < 500


def test_final_record_reflects_final_iterate(tmp_path):
    config = RunConfig(problem="noisy-quadratic-1d", strategy="gos",
                       batch_size=10, eval_budget=40, seed=5,
                       sigma=0.5, n_samples=100, metric_every=10 ** 9)
    log = train_run(config)
    # between metric passes the rows carry the previous values
    assert log.records[1].train_loss == log.records[0].train_loss
    problem_seed = np.random.SeedSequence(config.seed).spawn(3)[0]
    problem = make_noisy_quadratic(config.mu, config.sigma, config.n_samples,
                                   problem_seed)
    assert log.records[-1].train_loss == pytest.approx(problem.full_loss(log.final_x))


def test_csv_round_trip(tmp_path):
    config = RunConfig(problem="noisy-quadratic-1d", strategy="fixed",
                       batch_size=10, eval_budget=20, seed=2,
                       sigma=0.5, n_samples=100)
    log = train_run(config)
    path = tmp_path / "run.csv"
    log.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(log.records)
    first = lines[1].split(",")
    assert int(first[0]) == 1
    # repr formatting round-trips every float exactly
    assert float(first[2]) == log.records[0].train_loss
    assert first[8] == log.records[0].termination


def test_build_problem_synthetic_metrics_have_no_accuracy():
    config = RunConfig(problem="noisy-quadratic-1d", sigma=0.5, n_samples=50)
    bundle = build_problem(config, problem_seed=1, init_seed=2)
    train_loss, test_loss, train_acc, test_acc = bundle.metrics(bundle.x0)
    assert train_loss == test_loss
    assert math.isnan(train_acc) and math.isnan(test_acc)


def _fake_mnist(n_train=40, n_test=20, seed=0):
    rng = np.random.default_rng(seed)
    make = lambda n, split: Dataset(
        rng.random((n, 784), dtype=np.float32),
        rng.integers(0, 10, n).astype(np.int64),
        split,
    )
    return make(n_train, "train"), make(n_test, "test")


def test_build_problem_with_injected_datasets():
    train, test = _fake_mnist()
    config = RunConfig(problem="mnist-n2", dtype="float32", train_subset=25)
    bundle = build_problem(config, problem_seed=1, init_seed=2, mnist=(train, test))
    assert bundle.problem.n_samples == 25
    arch = MlpArchitecture(N2_LAYERS, np.float32)
    assert bundle.x0.shape == (arch.n_params,)
    train_loss, test_loss, train_acc, test_acc = bundle.metrics(bundle.x0)
    assert 0.0 <= train_acc <= 1.0 and 0.0 <= test_acc <= 1.0
    assert train_loss > 0.0 and test_loss > 0.0


def test_run_sweep_grid_and_files(tmp_path):
    base = RunConfig(problem="noisy-quadratic-1d", batch_size=10,
                     eval_budget=25, sigma=0.5, n_samples=100)
    train_table, test_table = run_sweep(
        base, ["fixed", "gos"], [5, 10], [0, 1], out_dir=tmp_path)
    keys = {("fixed", "noisy-quadratic-1d:b5", "sgd"),
            ("fixed", "noisy-quadratic-1d:b10", "sgd"),
            ("gos", "noisy-quadratic-1d:b5", "sgd"),
            ("gos", "noisy-quadratic-1d:b10", "sgd")}
    assert set(train_table) == keys and set(test_table) == keys
    for strategy in ("fixed", "gos"):
        for b in (5, 10):
            for seed in (0, 1):
                assert (tmp_path / f"run_{strategy}_b{b}_s{seed}.csv").exists()
    # synthetic problems have no classification accuracy
    assert all(math.isnan(v) for v in test_table.values())


def test_snngpp_histogram_deterministic_crossing():
    problem = make_noisy_quadratic(1.0, 0.0, 30)
    oracle = StochasticOracle(problem, 30)
    counts = snngpp_histogram(oracle, np.zeros(1), np.ones(1),
                              [0.0, 0.5, 1.5, 2.0], trials=7)
    assert np.array_equal(counts, [0, 7, 0])


def test_snngpp_histogram_validation():
    problem = make_noisy_quadratic(1.0, 0.0, 30)
    oracle = StochasticOracle(problem, 30)
    x, d = np.zeros(1), np.ones(1)
    with pytest.raises(ValueError):
        snngpp_histogram(oracle, x, d, [0.0, 1.0, 0.5], trials=1)
    with pytest.raises(ValueError):
        snngpp_histogram(oracle, x, d, [0.0], trials=1)
    with pytest.raises(ValueError):
        snngpp_histogram(oracle, x, d, [0.0, 1.0], trials=0)


def test_relative_robustness_hand_table():
    accuracies = {
        ("a", "p1", "sgd"): 90.0, ("b", "p1", "sgd"): 95.0,
        ("a", "p2", "sgd"): 80.0, ("b", "p2", "sgd"): 70.0,
    }
    table = relative_robustness(accuracies)
    assert table.best[("p1", "sgd")] == 95.0
    assert table.psi[("a", "p1", "sgd")] == 5.0
    assert table.psi[("b", "p2", "sgd")] == 10.0
    assert table.per_problem[("a", "p1")] == 5.0
    assert table.overall == {"a": 5.0, "b": 10.0}


def test_relative_robustness_requires_complete_grid():
    accuracies = {
        ("a", "p1", "sgd"): 90.0, ("b", "p1", "sgd"): 95.0,
        ("a", "p2", "sgd"): 80.0,
    }
    with pytest.raises(IncompleteTableError, match="b, p2, sgd"):
        relative_robustness(accuracies)


def test_moving_average_hand_values():
    out = moving_average([1.0, 2.0, 3.0, 4.0], window=2)
    assert np.allclose(out, [1.0, 1.5, 2.5, 3.5])
    assert np.allclose(moving_average([5.0, 7.0], window=1), [5.0, 7.0])
    # a window longer than the series produces running means
    assert np.allclose(moving_average([2.0, 4.0, 6.0], window=10), [2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        moving_average([1.0], window=0)
    with pytest.raises(ValueError):
        moving_average(np.zeros((2, 2)), window=2)
