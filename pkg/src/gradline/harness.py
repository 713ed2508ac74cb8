"""Training harness and benchmark metrics.

One run pairs a problem with a direction rule and a step-size strategy,
spends a budget counted in fresh gradient evaluations, and logs one record
per iteration.  Metric passes (train/test loss and accuracy) run outside
the budget on a configurable cadence; records between passes carry the
last computed values so every row is populated.

Also here: the directional sign-change histogram and the relative
robustness table used to compare strategies across problems and direction
rules.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import CosineSchedule, GolsiState, cosine_lr, fixed_step, golsi_step
from .data import Dataset, load_mnist, make_noisy_bowl, make_noisy_quadratic
from .directions import DIRECTION_KINDS, GAMMA_DEFAULTS, make_direction_state, next_direction
from .errors import (
    BudgetExhaustedError,
    ConfigError,
    IncompleteTableError,
    NonFiniteLossError,
    NotADescentDirectionError,
)
from .goals import GOALS_PRESETS, GoalsConfig, goals_step
from .network import MlpArchitecture, MlpProblem, evaluate_metrics, xavier_init
from .oracle import DirectionalSlice, StochasticOracle
from .surrogate import DEGENERATE_RESTART, IMMEDIATE_ACCEPT, LineSearchResult, gos_step

log = logging.getLogger(__name__)

PROBLEMS = ("mnist-n2", "noisy-quadratic-1d", "noisy-bowl-nd")
STRATEGIES = ("fixed", "cosine", "gols-i", "gos",
              "goals-1", "goals-2", "goals-3", "goals-4", "goals-custom")

# the two-hidden-block classifier used by the image benchmark
N2_LAYERS = (784, 1000, 500, 250, 10)

CSV_HEADER = "iter,evals,train_loss,test_loss,train_acc,test_acc,alpha,evals_iter,termination"


def _to_bool(raw: str) -> bool:
    low = str(raw).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


@dataclass
class RunConfig:
    """Flat, file-friendly description of one training run."""

    problem: str = "noisy-quadratic-1d"
    strategy: str = "fixed"
    direction: str = "sgd"
    batch_size: int = 100
    eval_budget: int = 1000
    seed: int = 0
    gamma: float | None = None          # None -> the direction rule's default
    c: float = 0.9
    c1: float | None = None
    c2: float | None = None
    alpha_min: float = 1e-8
    alpha_max: float = 1e7
    epsilon: float = 1e-8
    omega: float = 1e-4
    initial_guess: str | None = None    # goals-custom only
    carry_alpha: bool = False           # goals-custom only
    t0_epochs: float = 1.0
    t_mult: int = 2
    eta_min: float = 0.0
    mu: float = 1.0
    sigma: float = 0.5
    n_samples: int = 1000
    dim: int = 10
    data_dir: str = "data/mnist"
    train_subset: int = 0               # 0 -> whole split
    dtype: str = "float64"
    metric_every: int = 0               # evals between metric passes; 0 -> auto
    output: str | None = None

    def validate(self) -> None:
        checks = [
            (self.problem in PROBLEMS, f"problem must be one of {PROBLEMS}, got {self.problem!r}"),
            (self.strategy in STRATEGIES, f"strategy must be one of {STRATEGIES}, got {self.strategy!r}"),
            (self.direction in DIRECTION_KINDS,
             f"direction must be one of {DIRECTION_KINDS}, got {self.direction!r}"),
            (self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}"),
            (self.eval_budget >= 1, f"eval_budget must be >= 1, got {self.eval_budget}"),
            (self.gamma is None or self.gamma > 0, f"gamma must be positive, got {self.gamma}"),
            (0.0 < self.c < 1.0, f"c must be in (0, 1), got {self.c}"),
            (self.c1 is None or 0.0 < self.c1 < 1.0, f"c1 must be in (0, 1), got {self.c1}"),
            (self.c2 is None or 0.0 < self.c2 < 1.0, f"c2 must be in (0, 1), got {self.c2}"),
            (0.0 < self.alpha_min < self.alpha_max,
             f"need 0 < alpha_min < alpha_max, got {self.alpha_min}, {self.alpha_max}"),
            (self.epsilon > 0, f"epsilon must be positive, got {self.epsilon}"),
            (self.omega > 0, f"omega must be positive, got {self.omega}"),
            (self.initial_guess in (None, "fixed-gamma", "inverse-direction-norm"),
             f"bad initial_guess {self.initial_guess!r}"),
            (self.t0_epochs > 0, f"t0_epochs must be positive, got {self.t0_epochs}"),
            (self.t_mult >= 1, f"t_mult must be >= 1, got {self.t_mult}"),
            (0.0 <= self.eta_min, f"eta_min must be >= 0, got {self.eta_min}"),
            (self.sigma >= 0, f"sigma must be >= 0, got {self.sigma}"),
            (self.n_samples >= 1, f"n_samples must be >= 1, got {self.n_samples}"),
            (self.dim >= 1, f"dim must be >= 1, got {self.dim}"),
            (self.train_subset >= 0, f"train_subset must be >= 0, got {self.train_subset}"),
            (self.dtype in ("float64", "float32"), f"dtype must be float64 or float32, got {self.dtype!r}"),
            (self.metric_every >= 0, f"metric_every must be >= 0, got {self.metric_every}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def resolved_gamma(self) -> float:
        return self.gamma if self.gamma is not None else GAMMA_DEFAULTS[self.direction]


_CONVERTERS = {
    "problem": str, "strategy": str, "direction": str,
    "batch_size": int, "eval_budget": int, "seed": int,
    "gamma": float, "c": float, "c1": float, "c2": float,
    "alpha_min": float, "alpha_max": float, "epsilon": float, "omega": float,
    "initial_guess": str, "carry_alpha": _to_bool,
    "t0_epochs": float, "t_mult": int, "eta_min": float,
    "mu": float, "sigma": float, "n_samples": int, "dim": int,
    "data_dir": str, "train_subset": int, "dtype": str,
    "metric_every": int, "output": str,
}


def config_from_mapping(mapping) -> RunConfig:
    """Build and validate a RunConfig from string (or typed) values.

    Unknown keys are configuration errors rather than silent typos.
    """
    kwargs = {}
    for key, raw in mapping.items():
        converter = _CONVERTERS.get(key)
        if converter is None:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            kwargs[key] = converter(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    config = RunConfig(**kwargs)
    config.validate()
    return config


@dataclass
class RunRecord:
    iteration: int
    evals: int
    train_loss: float
    test_loss: float
    train_acc: float
    test_acc: float
    alpha: float
    evals_iter: int
    termination: str


@dataclass
class RunLog:
    config: RunConfig
    records: list[RunRecord]
    diverged: bool = False
    final_x: np.ndarray | None = field(default=None, repr=False)

    @property
    def final_record(self) -> RunRecord | None:
        return self.records[-1] if self.records else None

    def write_csv(self, path) -> None:
        lines = [CSV_HEADER]
        for r in self.records:
            lines.append(
                f"{r.iteration},{r.evals},{r.train_loss!r},{r.test_loss!r},"
                f"{r.train_acc!r},{r.test_acc!r},{r.alpha!r},{r.evals_iter},{r.termination}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class ProblemBundle:
    """A problem plus its start point and split-level metric pass."""

    problem: object
    x0: np.ndarray
    metrics: object     # callable x -> (train_loss, test_loss, train_acc, test_acc)


def build_problem(config: RunConfig, problem_seed=None, init_seed=None,
                  mnist: tuple[Dataset, Dataset] | None = None) -> ProblemBundle:
    """Materialise the configured problem.

    ``mnist`` optionally injects already-loaded (train, test) datasets so
    sweeps do not re-read files; the configured subset still applies.
    Synthetic problems report their full-batch loss for both metric slots
    and nan accuracies, since they have no classification semantics.
    """
    if config.problem == "noisy-quadratic-1d":
        problem = make_noisy_quadratic(config.mu, config.sigma, config.n_samples, problem_seed)
        x0 = np.zeros(1)
    elif config.problem == "noisy-bowl-nd":
        center = np.full(config.dim, config.mu)
        problem = make_noisy_bowl(center, config.sigma, config.n_samples, problem_seed)
        x0 = np.zeros(config.dim)
    else:
        dtype = np.float32 if config.dtype == "float32" else np.float64
        if mnist is not None:
            train, test = mnist
        else:
            train = load_mnist(config.data_dir, "train", dtype)
            test = load_mnist(config.data_dir, "test", dtype)
        if config.train_subset:
            train = train.subset(config.train_subset)
        arch = MlpArchitecture(N2_LAYERS, dtype)
        problem = MlpProblem(arch, train.inputs, train.labels)
        x0 = xavier_init(arch, np.random.default_rng(init_seed))

        def metrics(x):
            train_loss, train_acc = evaluate_metrics(arch, x, problem.inputs, problem.labels)
            test_loss, test_acc = evaluate_metrics(arch, x, test.inputs, test.labels)
            return train_loss, test_loss, train_acc, test_acc

        return ProblemBundle(problem, x0, metrics)

    def metrics(x):
        full = problem.full_loss(x)
        return full, full, math.nan, math.nan

    return ProblemBundle(problem, x0, metrics)


def _goals_config(config: RunConfig, gamma: float) -> GoalsConfig:
    if config.strategy == "goals-custom":
        mode = config.initial_guess or "fixed-gamma"
        carry = config.carry_alpha
    else:
        mode, carry = GOALS_PRESETS[config.strategy]
    return GoalsConfig(
        c=config.c, c1=config.c1, c2=config.c2, gamma=gamma,
        initial_guess=mode, carry_alpha=carry,
        alpha_min=config.alpha_min, alpha_max=config.alpha_max,
        epsilon=config.epsilon, omega=config.omega,
    )


def _make_stepper(config: RunConfig, gamma: float, n_train: int):
    """Uniform per-iteration callable (oracle, x, d, g0, alpha_prev) -> result."""
    if config.strategy == "fixed":
        rate = fixed_step(gamma)

        def step(oracle, x, d, g0, alpha_prev):
            return LineSearchResult(rate, None, 0, IMMEDIATE_ACCEPT)
    elif config.strategy == "cosine":
        period = max(1, math.ceil(config.t0_epochs * n_train / config.batch_size))
        schedule = CosineSchedule(eta_max=gamma, period=period,
                                  eta_min=config.eta_min, t_mult=config.t_mult)

        def step(oracle, x, d, g0, alpha_prev):
            rate = cosine_lr(schedule)
            schedule.advance()
            return LineSearchResult(rate, None, 0, IMMEDIATE_ACCEPT)
    elif config.strategy == "gols-i":
        start = min(max(gamma, config.alpha_min), config.alpha_max)
        state = GolsiState(start, config.alpha_min, config.alpha_max)

        def step(oracle, x, d, g0, alpha_prev):
            return golsi_step(oracle, x, d, g0, state)
    elif config.strategy == "gos":
        def step(oracle, x, d, g0, alpha_prev):
            norm = float(np.linalg.norm(d))
            if norm == 0.0:
                raise NotADescentDirectionError("zero direction")
            alpha1 = min(max(1.0 / norm, config.alpha_min), config.alpha_max)
            return gos_step(oracle, x, d, alpha1, origin_gradient=g0)
    else:
        goals_cfg = _goals_config(config, gamma)

        def step(oracle, x, d, g0, alpha_prev):
            return goals_step(oracle, x, d, g0, goals_cfg, alpha_prev)
    return step


def train_run(config: RunConfig, mnist: tuple[Dataset, Dataset] | None = None) -> RunLog:
    """Run one configuration to budget exhaustion (or divergence).

    The budget counts fresh oracle evaluations; an iteration that cannot
    finish within the budget is discarded, so the log never contains a
    partial search.  Gradients evaluated at accepted points are carried
    into the next iteration as its origin gradient, and the iterate only
    moves by alpha_star * d, so strategies stay comparable under one
    budget.
    """
    config.validate()
    problem_seed, init_seed, oracle_seed = np.random.SeedSequence(config.seed).spawn(3)
    bundle = build_problem(config, problem_seed, init_seed, mnist=mnist)
    oracle = StochasticOracle(
        bundle.problem, config.batch_size,
        rng=np.random.default_rng(oracle_seed), max_evals=config.eval_budget,
    )
    gamma = config.resolved_gamma()
    direction_state = make_direction_state(config.direction)
    step = _make_stepper(config, gamma, int(bundle.problem.n_samples))
    metric_every = config.metric_every or max(1, math.ceil(config.eval_budget / 200))

    records: list[RunRecord] = []
    diverged = False
    x = bundle.x0.copy()
    g_carry = None
    alpha_prev = None
    last_metrics = (math.nan, math.nan, math.nan, math.nan)
    metrics_mark = 0
    metrics_at = -1     # iteration index of the last fresh metric pass
    n = 0
    while oracle.evals < config.eval_budget:
        n += 1
        evals_before = oracle.evals
        try:
            if g_carry is None:
                _, g0 = oracle.evaluate_fresh_at(x)
            else:
                g0 = g_carry
            d = next_direction(direction_state, g0)
            try:
                result = step(oracle, x, d, g0, alpha_prev)
            except NotADescentDirectionError:
                # the carried gradient points uphill along d under this
                # batch: take no step, refresh the gradient instead
                _, g_new = oracle.evaluate_fresh_at(x)
                result = LineSearchResult(0.0, g_new, 1, DEGENERATE_RESTART)
        except BudgetExhaustedError:
            break
        except NonFiniteLossError as exc:
            log.warning("diverged at iteration %d: %s", n, exc)
            diverged = True
            break
        x = x + result.alpha_star * d
        g_carry = result.gradient_star
        alpha_prev = result.alpha_star
        if oracle.evals >= metrics_mark or oracle.evals >= config.eval_budget:
            last_metrics = bundle.metrics(x)
            metrics_mark = oracle.evals + metric_every
            metrics_at = n
        records.append(RunRecord(
            n, oracle.evals,
            float(last_metrics[0]), float(last_metrics[1]),
            float(last_metrics[2]), float(last_metrics[3]),
            float(result.alpha_star), oracle.evals - evals_before,
            result.termination,
        ))
    if records and not diverged and metrics_at != records[-1].iteration:
        # final row always reflects the final iterate
        tr_l, te_l, tr_a, te_a = bundle.metrics(x)
        last = records[-1]
        last.train_loss, last.test_loss = float(tr_l), float(te_l)
        last.train_acc, last.test_acc = float(tr_a), float(te_a)
    return RunLog(config, records, diverged, x)


def run_sweep(base: RunConfig, strategies, batch_sizes, seeds,
              out_dir=None, mnist: tuple[Dataset, Dataset] | None = None):
    """Strategy x batch-size x seed grid on one problem/direction pair.

    Returns (train_table, test_table): mappings from
    (strategy, "problem:bN", direction) to each run's best accuracy
    averaged over seeds, directly consumable by relative_robustness.
    Per-run CSVs land in out_dir when given.
    """
    train_table = {}
    test_table = {}
    for strategy in strategies:
        for batch_size in batch_sizes:
            best_train = []
            best_test = []
            for seed in seeds:
                config = replace(base, strategy=strategy, batch_size=batch_size, seed=seed)
                run_log = train_run(config, mnist=mnist)
                if out_dir is not None:
                    name = f"run_{strategy}_b{batch_size}_s{seed}.csv"
                    run_log.write_csv(Path(out_dir) / name)
                if run_log.records:
                    best_train.append(max(r.train_acc for r in run_log.records))
                    best_test.append(max(r.test_acc for r in run_log.records))
                else:
                    best_train.append(math.nan)
                    best_test.append(math.nan)
            key = (strategy, f"{base.problem}:b{batch_size}", base.direction)
            train_table[key] = float(np.mean(best_train))
            test_table[key] = float(np.mean(best_test))
    return train_table, test_table


def snngpp_histogram(oracle: StochasticOracle, x: np.ndarray, d: np.ndarray,
                     alpha_grid, trials: int) -> np.ndarray:
    """Histogram of directional-derivative sign changes along d.

    Each trial walks the grid once, re-sampling the batch at every node,
    and counts interval i whenever the derivative is negative at
    alpha_grid[i] and non-negative at alpha_grid[i+1].  A trial can
    contribute to several intervals; under heavy noise that is the point.
    Returns counts with length len(alpha_grid) - 1.
    """
    grid = np.asarray(alpha_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("alpha_grid must be 1-D with at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("alpha_grid must be strictly increasing")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    slc = DirectionalSlice(x, d, float(grid[0]))
    counts = np.zeros(grid.size - 1, dtype=np.int64)
    for _ in range(trials):
        prev = oracle.evaluate_fresh(slc.at(float(grid[0]))).dderiv
        for i in range(1, grid.size):
            cur = oracle.evaluate_fresh(slc.at(float(grid[i]))).dderiv
            if prev < 0.0 <= cur:
                counts[i - 1] += 1
            prev = cur
    return counts


@dataclass
class RobustnessTable:
    """Per-cell accuracy gaps and their sums.

    psi[(strategy, problem, optimizer)] is the gap to the best strategy in
    that (problem, optimizer) cell; per_problem sums psi over optimizers;
    overall sums over problems and optimizers.  Lower is better: it means
    the strategy stays close to the per-cell winner everywhere.
    """

    psi: dict
    best: dict
    per_problem: dict
    overall: dict


def relative_robustness(accuracies) -> RobustnessTable:
    """Build the robustness table from (strategy, problem, optimizer) -> accuracy.

    The observed strategies, problems and optimizers must form a complete
    grid, otherwise sums would silently compare different workloads.
    """
    strategies = sorted({key[0] for key in accuracies})
    problems = sorted({key[1] for key in accuracies})
    optimizers = sorted({key[2] for key in accuracies})
    for strategy in strategies:
        for problem in problems:
            for optimizer in optimizers:
                if (strategy, problem, optimizer) not in accuracies:
                    raise IncompleteTableError(
                        f"missing accuracy for ({strategy}, {problem}, {optimizer})"
                    )
    best = {}
    for problem in problems:
        for optimizer in optimizers:
            best[(problem, optimizer)] = max(
                accuracies[(strategy, problem, optimizer)] for strategy in strategies
            )
    psi = {}
    for key, accuracy in accuracies.items():
        psi[key] = abs(best[(key[1], key[2])] - accuracy)
    per_problem = {}
    overall = {strategy: 0.0 for strategy in strategies}
    for strategy in strategies:
        for problem in problems:
            total = sum(psi[(strategy, problem, optimizer)] for optimizer in optimizers)
            per_problem[(strategy, problem)] = total
            overall[strategy] += total
    return RobustnessTable(psi, best, per_problem, overall)


def moving_average(series, window: int) -> np.ndarray:
    """Trailing mean with truncated warm-up.

    out[i] averages series[max(0, i - window + 1) : i + 1], so early
    entries average what exists instead of padding.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("series must be 1-D")
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(values.size)
    starts = np.maximum(0, idx - window + 1)
    return (csum[idx + 1] - csum[starts]) / (idx + 1 - starts)
