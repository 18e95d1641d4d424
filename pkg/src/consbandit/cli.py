"""Command-line entry points.

Subcommands:
  run-synthetic   squared-distance environment with Gaussian context forecasts
  run-bilinear    yield-model environment on fitted bilinear factors
  train-bilinear  fit the bilinear reward model (CSV or generated surrogate)
  report          re-aggregate previously written trace CSVs

Configs are JSON files whose keys mirror ExperimentConfig; command-line
flags override file values.
"""

import argparse
import json
import sys

import numpy as np

from . import bilinear as bl
from .harness import ExperimentConfig, report_from_traces, run_experiment


def _load_config(path, environment, overrides, defaults=None):
    data = dict(defaults or {})
    if path:
        with open(path, encoding="utf-8") as fh:
            data.update(json.load(fh))
    data["environment"] = environment
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def _add_run_flags(parser):
    parser.add_argument("--config", help="JSON config file (ExperimentConfig fields)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--alpha", action="append", type=float,
                        help="constraint fraction; repeat for several values")
    parser.add_argument("--policies", nargs="+", choices=["linucb", "clucb", "cslucb"])
    parser.add_argument("--no-traces", action="store_true", help="skip per-trial CSVs")


def _overrides(args):
    return {
        "seed": args.seed,
        "out_dir": args.out_dir,
        "trials": args.trials,
        "horizon": args.horizon,
        "alphas": args.alpha,
        "policies": args.policies,
        "write_traces": False if args.no_traces else None,
    }


def _print_cell_table(summary):
    print(f"{'cell':>16} {'trials':>6} {'R_T mean':>12} {'R_T/T':>10} {'n_T mean':>9} {'violations':>10}")
    for name, cell in summary["cells"].items():
        fin = cell["final"]
        viol = cell["constraint_violations"]
        print(f"{name:>16} {cell['trials']:>6} {fin['regret_realized_mean']:>12.3f} "
              f"{fin['per_step_mean']:>10.4f} {fin['n_mean']:>9.1f} "
              f"{viol if viol is not None else '-':>10}")
    for failure in summary.get("failed_cells", []):
        print(f"FAILED {failure['cell']}: {failure['error']}")


def _cmd_run(args, environment):
    overrides = _overrides(args)
    overrides["baseline_rank"] = args.baseline_rank
    defaults = {}
    if environment == "bilinear":
        overrides["dataset_path"] = args.dataset
        defaults["baseline_rank"] = 16  # config file / flag take precedence
    config = _load_config(args.config, environment, overrides, defaults)
    summary = run_experiment(config)
    _print_cell_table(summary)
    if config.out_dir:
        print(f"summary written to {config.out_dir}/summary.json")
    return 1 if summary["failed_cells"] else 0


def _cmd_train(args):
    if args.dataset:
        data = bl.load_dataset(args.dataset)
        print(f"loaded {len(data)} rows from {args.dataset}")
    else:
        data, _, _ = bl.make_surrogate(n=args.surrogate_n, latent=args.latent,
                                       noise=args.surrogate_noise, seed=args.seed)
        print(f"generated surrogate dataset with {len(data)} rows (seed {args.seed})")
        if args.save_dataset:
            bl.save_dataset(data, args.save_dataset)
            print(f"surrogate CSV written to {args.save_dataset}")
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(4,)))
    model, traces = bl.sgd_fit(data, lr=args.lr, lam_v=args.lam_v, lam_w=args.lam_w,
                               epochs=args.epochs, latent=args.latent, rng=rng)
    mse = bl.dataset_mse(model, data)
    print(f"final training MSE: {mse:.6f} (loss {traces['loss'][-1]:.4f})")
    if args.out:
        np.savez(args.out, W=model.W, V=model.V, loss=traces["loss"], mse=traces["mse"])
        print(f"model written to {args.out}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="consbandit",
                                     description="Conservative bandit experiments under context distributions")
    sub = parser.add_subparsers(dest="command", required=True)

    p_syn = sub.add_parser("run-synthetic", help="run the synthetic quadratic-reward protocol")
    _add_run_flags(p_syn)
    p_syn.add_argument("--baseline-rank", type=int, help="baseline plays the k-th best action")

    p_bil = sub.add_parser("run-bilinear", help="run the bilinear yield-model protocol")
    _add_run_flags(p_bil)
    p_bil.add_argument("--baseline-rank", type=int)
    p_bil.add_argument("--dataset", help="yield CSV to fit instead of a surrogate")

    p_train = sub.add_parser("train-bilinear", help="fit the bilinear reward model")
    p_train.add_argument("--dataset", help="yield CSV (omit to generate a surrogate)")
    p_train.add_argument("--out", help="write fitted factors to this .npz")
    p_train.add_argument("--save-dataset", help="also write the generated surrogate CSV here")
    p_train.add_argument("--epochs", type=int, default=300)
    p_train.add_argument("--lr", type=float, default=0.015)
    p_train.add_argument("--lam-v", type=float, default=0.001)
    p_train.add_argument("--lam-w", type=float, default=0.001)
    p_train.add_argument("--latent", type=int, default=10)
    p_train.add_argument("--seed", type=int, default=7)
    p_train.add_argument("--surrogate-n", type=int, default=2000)
    p_train.add_argument("--surrogate-noise", type=float, default=0.01)

    p_rep = sub.add_parser("report", help="re-aggregate trace CSVs into report.json")
    p_rep.add_argument("--out-dir", required=True)

    args = parser.parse_args(argv)
    if args.command == "run-synthetic":
        return _cmd_run(args, "synthetic")
    if args.command == "run-bilinear":
        return _cmd_run(args, "bilinear")
    if args.command == "train-bilinear":
        return _cmd_train(args)
    if args.command == "report":
        report = report_from_traces(args.out_dir)
        _print_cell_table(report)
        print(f"report written to {args.out_dir}/report.json")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
