"""Command line interface.

Subcommands:
    train       one training run from a config file and/or flag overrides
    sweep       strategy x batch-size x seed grid with summary accuracy tables
    robustness  relative robustness table from accuracy CSVs
    histogram   directional sign-change histogram on the noisy quadratic
    gradcheck   finite-difference check of the network gradient

Config files are flat ``key = value`` lines, ``#`` starts a comment, and
unknown keys are errors.  Flags override file values.  Exit codes:
0 success, 1 configuration error, 2 data error, 3 diverged run.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .data import make_noisy_quadratic
from .errors import ConfigError, DataError, IncompleteTableError
from .harness import (
    RunConfig,
    config_from_mapping,
    relative_robustness,
    run_sweep,
    snngpp_histogram,
    train_run,
)
from .network import MlpArchitecture, loss_and_grad, one_hot
from .oracle import StochasticOracle


class _Parser(argparse.ArgumentParser):
    # argparse exits with its own codes; route everything through ConfigError
    def error(self, message):
        raise ConfigError(message)


def parse_config_file(path) -> dict:
    """Flat key = value lines with # comments; later keys win."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {line.strip()!r}")
        key, _, value = body.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


_CONFIG_FLAGS = (
    "problem", "strategy", "direction", "batch_size", "eval_budget", "seed",
    "gamma", "c", "c1", "c2", "alpha_min", "alpha_max", "epsilon", "omega",
    "initial_guess", "carry_alpha", "t0_epochs", "t_mult", "eta_min",
    "mu", "sigma", "n_samples", "dim", "data_dir", "train_subset",
    "dtype", "metric_every", "output",
)


def _add_config_flags(parser) -> None:
    group = parser.add_argument_group("run configuration (override config file)")
    for key in _CONFIG_FLAGS:
        group.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)


def _merged_config(args) -> RunConfig:
    mapping = parse_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _CONFIG_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return config_from_mapping(mapping)


def _cmd_train(args) -> int:
    config = _merged_config(args)
    run_log = train_run(config)
    if config.output:
        run_log.write_csv(config.output)
        print(f"wrote {config.output}")
    final = run_log.final_record
    if final is None:
        print("no iterations completed")
    else:
        print(
            f"iterations={final.iteration} evals={final.evals} "
            f"train_loss={final.train_loss:.6g} test_loss={final.test_loss:.6g} "
            f"train_acc={final.train_acc:.4f} test_acc={final.test_acc:.4f}"
        )
    if run_log.diverged:
        print("run diverged", file=sys.stderr)
        return 3
    return 0


def _split_list(raw: str, converter):
    try:
        items = [converter(part.strip()) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {raw!r}: {exc}") from exc
    if not items:
        raise ConfigError(f"empty list {raw!r}")
    return items


def _cmd_sweep(args) -> int:
    base = _merged_config(args)
    strategies = _split_list(args.strategies, str)
    batch_sizes = _split_list(args.batch_sizes, int)
    seeds = _split_list(args.seeds, int)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_table, test_table = run_sweep(base, strategies, batch_sizes, seeds, out_dir=out_dir)
    for name, table in (("summary_train.csv", train_table), ("summary_test.csv", test_table)):
        lines = ["strategy,problem,optimizer,accuracy"]
        for (strategy, problem, optimizer), accuracy in sorted(table.items()):
            lines.append(f"{strategy},{problem},{optimizer},{accuracy!r}")
        (out_dir / name).write_text("\n".join(lines) + "\n")
        print(f"wrote {out_dir / name}")
    return 0


def _read_accuracy_csv(path) -> dict:
    accuracies = {}
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            required = {"strategy", "problem", "optimizer", "accuracy"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise DataError(
                    f"{path}: expected columns {sorted(required)}, got {reader.fieldnames}"
                )
            for row in reader:
                key = (row["strategy"], row["problem"], row["optimizer"])
                try:
                    accuracies[key] = float(row["accuracy"])
                except (TypeError, ValueError) as exc:
                    raise DataError(f"{path}: bad accuracy in row {row}") from exc
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not accuracies:
        raise DataError(f"{path}: no accuracy rows")
    return accuracies


def _cmd_robustness(args) -> int:
    accuracies = {}
    for path in args.input:
        accuracies.update(_read_accuracy_csv(path))
    table = relative_robustness(accuracies)
    lines = ["strategy,problem,optimizer,accuracy,psi"]
    for key in sorted(accuracies):
        lines.append(f"{key[0]},{key[1]},{key[2]},{accuracies[key]!r},{table.psi[key]!r}")
    for strategy in sorted(table.overall):
        lines.append(f"{strategy},{table.overall[strategy]!r}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}")
    for strategy, value in sorted(table.overall.items(), key=lambda kv: kv[1]):
        print(f"R[{strategy}] = {value:.6g}")
    return 0


def _cmd_histogram(args) -> int:
    if args.lo < 0 or args.hi <= args.lo:
        raise ConfigError(f"need 0 <= lo < hi, got {args.lo}, {args.hi}")
    if args.bins < 1:
        raise ConfigError(f"bins must be >= 1, got {args.bins}")
    problem = make_noisy_quadratic(args.mu, args.sigma, args.n_samples, args.seed)
    oracle = StochasticOracle(problem, args.batch_size, seed=args.seed + 1)
    grid = np.linspace(args.lo, args.hi, args.bins + 1)
    counts = snngpp_histogram(oracle, np.zeros(1), np.ones(1), grid, args.trials)
    lines = ["alpha_lo,alpha_hi,count"]
    for i, count in enumerate(counts):
        lines.append(f"{float(grid[i])!r},{float(grid[i + 1])!r},{int(count)}")
    if args.output:
        Path(args.output).write_text("\n".join(lines) + "\n")
        print(f"wrote {args.output}")
    total = int(counts.sum())
    peak = int(np.argmax(counts))
    print(
        f"{total} sign changes over {args.trials} trials; "
        f"peak interval [{grid[peak]:.4g}, {grid[peak + 1]:.4g}] "
        f"(full-batch optimum at {problem.full_batch_optimum:.4g})"
    )
    return 0


def _cmd_gradcheck(args) -> int:
    layers = tuple(_split_list(args.layers, int))
    if len(layers) < 2:
        raise ConfigError(f"need at least two layer sizes, got {args.layers!r}")
    rng = np.random.default_rng(args.seed)
    arch = MlpArchitecture(layers, np.float64)
    params = rng.standard_normal(arch.n_params) * 0.3
    inputs = rng.standard_normal((args.samples, layers[0]))
    targets = one_hot(rng.integers(0, layers[-1], args.samples), layers[-1])
    _, grad = loss_and_grad(arch, params, inputs, targets)
    coords = rng.choice(arch.n_params, size=min(args.coords, arch.n_params), replace=False)
    h = 1e-6
    worst = 0.0
    for coord in coords:
        probe = params.copy()
        probe[coord] += h
        up, _ = loss_and_grad(arch, probe, inputs, targets)
        probe[coord] -= 2 * h
        down, _ = loss_and_grad(arch, probe, inputs, targets)
        numeric = (up - down) / (2 * h)
        scale = max(abs(numeric), abs(grad[coord]), 1e-12)
        worst = max(worst, abs(numeric - grad[coord]) / scale)
    print(f"max relative error over {len(coords)} coordinates: {worst:.3e}")
    return 0 if worst <= 1e-6 else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="gradline", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_train = sub.add_parser("train", help="run one training configuration")
    p_train.add_argument("--config", help="flat key = value config file")
    _add_config_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_sweep = sub.add_parser("sweep", help="grid of runs plus summary accuracy tables")
    p_sweep.add_argument("--config", help="flat key = value config file")
    p_sweep.add_argument("--strategies", required=True, help="comma separated strategy names")
    p_sweep.add_argument("--batch-sizes", required=True, help="comma separated batch sizes")
    p_sweep.add_argument("--seeds", required=True, help="comma separated seeds")
    p_sweep.add_argument("--out-dir", required=True, help="directory for per-run and summary CSVs")
    _add_config_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_rob = sub.add_parser("robustness", help="relative robustness from accuracy CSVs")
    p_rob.add_argument("--input", action="append", required=True,
                       help="accuracy CSV (strategy,problem,optimizer,accuracy); repeatable")
    p_rob.add_argument("--output", help="output CSV path")
    p_rob.set_defaults(func=_cmd_robustness)

    p_hist = sub.add_parser("histogram", help="sign-change histogram on the noisy quadratic")
    p_hist.add_argument("--mu", type=float, default=1.0)
    p_hist.add_argument("--sigma", type=float, default=0.5)
    p_hist.add_argument("--n-samples", type=int, default=100)
    p_hist.add_argument("--batch-size", type=int, default=10)
    p_hist.add_argument("--lo", type=float, default=0.0)
    p_hist.add_argument("--hi", type=float, default=2.0)
    p_hist.add_argument("--bins", type=int, default=100)
    p_hist.add_argument("--trials", type=int, default=1000)
    p_hist.add_argument("--seed", type=int, default=0)
    p_hist.add_argument("--output", help="output CSV path")
    p_hist.set_defaults(func=_cmd_histogram)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p_grad.add_argument("--layers", default="6,16,8,3", help="comma separated layer sizes")
    p_grad.add_argument("--samples", type=int, default=5)
    p_grad.add_argument("--coords", type=int, default=40)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=_cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (DataError, IncompleteTableError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
