"""Acceptance band, initial guesses, and the grow/shrink bracket."""

import numpy as np
import pytest

from gradline import (
    GOALS_PRESETS,
    GoalsConfig,
    NonFiniteLossError,
    StochasticOracle,
    bracket,
    check_armijo,
    check_curvature,
    check_iac,
    goals_preset,
    goals_step,
    initial_guess,
    make_noisy_quadratic,
)


def _quadratic_oracle(t, n=8):
    """Deterministic slice with f'(alpha) = 2 * (alpha - t) along d = [1]."""
    problem = make_noisy_quadratic(t, 0.0, n)
    return StochasticOracle(problem, n)


def test_config_validation():
    bad = [
        dict(c=0.0), dict(c=1.0), dict(c1=1.5), dict(c2=0.0),
        dict(gamma=0.0), dict(initial_guess="adaptive"),
        dict(alpha_min=0.0), dict(alpha_min=2.0, alpha_max=1.0),
        dict(epsilon=0.0), dict(omega=-1.0),
    ]
    for kwargs in bad:
        with pytest.raises(ValueError):
            GoalsConfig(**kwargs)


def test_split_constants_default_to_c():
    config = GoalsConfig(c=0.7)
    assert config.c_lower == 0.7 and config.c_upper == 0.7
    config = GoalsConfig(c=0.7, c1=0.5, c2=0.9)
    assert config.c_lower == 0.5 and config.c_upper == 0.9


def test_presets():
    assert GOALS_PRESETS == {
        "goals-1": ("fixed-gamma", False),
        "goals-2": ("fixed-gamma", True),
        "goals-3": ("inverse-direction-norm", True),
        "goals-4": ("inverse-direction-norm", False),
    }
    config = goals_preset("goals-3", gamma=0.05)
    assert config.initial_guess == "inverse-direction-norm"
    assert config.carry_alpha
    assert config.gamma == 0.05
    assert config.c == 0.9
    with pytest.raises(ValueError):
        goals_preset("goals-5")


def test_immediate_acceptance_band():
    # symmetric band: |f'1| <= c * |f'0| for a descent origin
    assert check_iac(-2.0, -1.8, c=0.9)
    assert check_iac(-2.0, 1.8, c=0.9)
    assert not check_iac(-2.0, -1.81, c=0.9)
    assert not check_iac(-2.0, 1.81, c=0.9)
    # split constants move the two sides independently
    assert check_iac(-2.0, -1.0, c=0.9, c1=0.5, c2=0.9)
    assert not check_iac(-2.0, -1.01, c=0.9, c1=0.5, c2=0.9)
    assert check_iac(-2.0, 1.8, c=0.9, c1=0.5, c2=0.9)
    assert not check_iac(-2.0, 1.81, c=0.9, c1=0.5, c2=0.9)


def test_wolfe_checks():
    assert check_curvature(-2.0, -1.7, c=0.9)
    assert not check_curvature(-2.0, -1.9, c=0.9)
    assert check_armijo(1.0, 0.9998, 1.0, -2.0, omega=1e-4)
    assert not check_armijo(1.0, 1.0001, 1.0, -2.0, omega=1e-4)


def test_initial_guess_modes():
    d = np.array([3.0, 4.0])
    assert initial_guess(GoalsConfig(gamma=0.3), d) == 0.3
    inv = GoalsConfig(initial_guess="inverse-direction-norm")
    assert initial_guess(inv, d) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        initial_guess(inv, np.zeros(2))


def test_initial_guess_carry():
    config = GoalsConfig(gamma=0.3, carry_alpha=True)
    d = np.ones(2)
    assert initial_guess(config, d, alpha_prev=0.7) == 0.7
    # a zero carried step marks a restart and falls back to gamma
    assert initial_guess(config, d, alpha_prev=0.0) == 0.3
    assert initial_guess(config, d, alpha_prev=None) == 0.3


def test_initial_guess_clamps():
    config = GoalsConfig(gamma=1e-12, alpha_min=1e-8, alpha_max=10.0)
    assert initial_guess(config, np.ones(1)) == 1e-8
    inv = GoalsConfig(initial_guess="inverse-direction-norm", alpha_max=10.0)
    assert initial_guess(inv, np.full(1, 1e-9)) == 10.0


def test_degenerate_origin_restarts_in_place():
    oracle = _quadratic_oracle(1.0)
    result = goals_step(oracle, np.zeros(1), np.ones(1), np.array([0.0]),
                        GoalsConfig())
    assert result.termination == "degenerate-restart"
    assert result.alpha_star == 0.0
    assert result.evals_used == 1
    assert result.gradient_star[0] == pytest.approx(-2.0)


def test_non_finite_origin_gradient_raises():
    oracle = _quadratic_oracle(1.0)
    with pytest.raises(NonFiniteLossError):
        goals_step(oracle, np.zeros(1), np.ones(1), np.array([np.nan]),
                   GoalsConfig())


def test_immediate_accept_spends_one_evaluation():
    # gamma lands exactly on the crossing where f' = 0
    oracle = _quadratic_oracle(1.0)
    result = goals_step(oracle, np.zeros(1), np.ones(1), np.array([-2.0]),
                        GoalsConfig(gamma=1.0))
    assert result.termination == "immediate-accept"
    assert result.alpha_star == 1.0
    assert result.evals_used == 1
    assert oracle.evals == 1
    assert result.gradient_star[0] == pytest.approx(0.0)


def test_growth_doubles_onto_the_crossing():
    # f'(alpha) = 2 (alpha - 2), gamma = 1/8 of the crossing, c = 0.4:
    # three doublings land exactly on alpha = 2 where f' = 0
    oracle = _quadratic_oracle(2.0)
    trace = []
    result = goals_step(oracle, np.zeros(1), np.ones(1), np.array([-4.0]),
                        GoalsConfig(c=0.4, gamma=0.25), trace=trace)
    assert result.termination == "bracket-converged"
    assert result.alpha_star == 2.0
    # guess + three growth evaluations + final gradient
    assert result.evals_used == 5
    assert oracle.evals == 5
    assert [t[0] for t in trace] == ["grow", "grow", "grow"]
    steps = [(t[1], t[2], t[3], t[4]) for t in trace]
    assert steps == [
        (0.25, 0.5, -3.5, -3.0),
        (0.5, 1.0, -3.0, -2.0),
        (1.0, 2.0, -2.0, 0.0),
    ]
    assert result.gradient_star[0] == pytest.approx(0.0)


def test_single_interpolation_from_overshoot():
    # guess far past the crossing: one Regula-Falsi step lands exactly on it
    oracle = _quadratic_oracle(1.0)
    trace = []
    result = goals_step(oracle, np.zeros(1), np.ones(1), np.array([-2.0]),
                        GoalsConfig(c=0.9, gamma=4.0), trace=trace)
    assert result.termination == "bracket-converged"
    assert result.alpha_star == pytest.approx(1.0, abs=1e-12)
    assert result.evals_used == 3
    assert trace == [("regula-falsi", 0.0, 4.0, -2.0, 6.0, 1.0)]


def test_growth_cap_returns_last_doubled_step():
    # alpha_max stops the doubling while the derivative is still steep
    oracle = _quadratic_oracle(2.0)
    result = goals_step(oracle, np.zeros(1), np.ones(1), np.array([-4.0]),
                        GoalsConfig(c=0.4, gamma=0.25, alpha_max=0.6))
    assert result.termination == "bracket-capped"
    assert result.alpha_star == 0.5
    assert result.evals_used == 3


def test_bracket_validates_interval():
    oracle = _quadratic_oracle(1.0)
    with pytest.raises(ValueError):
        bracket(oracle, np.zeros(1), np.ones(1), 0.5, 0.5, -2.0, -1.0, GoalsConfig())
    with pytest.raises(ValueError):
        bracket(oracle, np.zeros(1), np.ones(1), -0.1, 0.5, -2.0, -1.0, GoalsConfig())


def test_noisy_search_accounts_every_evaluation():
    problem = make_noisy_quadratic(1.0, 0.5, 500, seed=9)
    oracle = StochasticOracle(problem, 10, seed=10)
    config = GoalsConfig(c=0.9, gamma=0.02)
    x, d = np.zeros(1), np.ones(1)
    for _ in range(50):
        before = oracle.evals
        ev0 = oracle.evaluate_fresh_at(x)[1]
        trace = []
        result = goals_step(oracle, x, d, ev0, config, trace=trace)
        assert oracle.evals - before - 1 == result.evals_used
        for step in trace:
            if step[0] == "regula-falsi":
                # ends must straddle the sign change when interpolating
                assert step[3] * step[4] < 0.0
