"""Seeded experiment runner: trials, regret accounting, traces, summaries.

A trial plays one policy for T rounds against one environment.  Each round:
the environment announces a context distribution and privately realizes a
context; the learner's action-feature set is built (expected features for
the distribution-only policy, realized-context features otherwise); the
baseline strategy is queried; the policy decides; the realized reward is
drawn and absorbed on optimistic rounds only.

Regret is accounted against the action that is best in expectation under
the announced distribution, in two currencies: realized-context expected
reward (can dip below zero for context-observing policies) and expected
features (nonnegative by construction).  The cumulative safety constraint
is tracked in the reward currency the policy's gate operates in.

Trial seeds derive from the master seed by spawn keys, so adding or
removing trials never changes another trial's trace.
"""

import csv
import json
import math
import os
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import bilinear as bl
from .bounds import TheoryParams, nT_lower_bound, nT_upper_bound, total_regret_bound
from .confidence import BetaParams, contains
from .environments import BilinearEnv, SyntheticQuadraticEnv
from .features import expected_feature_matrix
from .policies import PolicyState, absorb_reward, baseline_kth_best, clucb_step, cslucb_step, linucb_step

TRACE_HEADER = ["t", "policy", "alpha", "trial", "action", "play_type", "reward",
                "regret_realized", "regret_expected", "constraint_slack", "m_t", "n_t"]
SLACK_TOL = 1e-9
POLICIES = ("linucb", "clucb", "cslucb")


@dataclass
class ExperimentConfig:
    """Everything a run needs; JSON (de)serializable, flag-overridable."""

    environment: str = "synthetic"          # "synthetic" | "bilinear"
    policies: tuple = ("linucb", "cslucb")
    alphas: tuple = (0.1, 0.3, 0.5, 0.8)
    horizon: int = 2000
    trials: int = 100
    delta: float = 0.05
    lam: float = 1.0
    noise_sigma: float = 0.1
    baseline_rank: int = 10
    seed: int = 7
    mc_budget: int = 1000
    out_dir: Optional[str] = None
    write_traces: bool = True
    # synthetic environment
    p: int = 5
    n_actions: int = 20
    dirac_contexts: bool = False
    # bilinear environment (surrogate data + SGD fit + forecast noise)
    forecast_std: float = 0.25
    surrogate_n: int = 2000
    surrogate_noise: float = 0.01
    latent: int = 10
    sgd_lr: float = 0.015
    sgd_lam_v: float = 0.001
    sgd_lam_w: float = 0.001
    sgd_epochs: int = 300
    dataset_path: Optional[str] = None      # fit on this CSV instead of a surrogate
    # reporting constants
    r_l: float = 0.5
    prepass_draws: int = 10000

    def __post_init__(self):
        self.policies = tuple(self.policies)
        self.alphas = tuple(float(a) for a in self.alphas)
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError(f"alpha {a} outside (0, 1)")
        for pol in self.policies:
            if pol not in POLICIES:
                raise ValueError(f"unknown policy {pol!r}")
        if self.environment not in ("synthetic", "bilinear"):
            raise ValueError(f"unknown environment {self.environment!r}")
        if self.baseline_rank < 1:
            raise ValueError("baseline_rank must be >= 1")

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        bad = set(data) - known
        if bad:
            raise ValueError(f"unknown config fields: {sorted(bad)}")
        return cls(**data)

    def to_dict(self):
        out = asdict(self)
        out["policies"] = list(self.policies)
        out["alphas"] = list(self.alphas)
        return out


@dataclass
class RegretTrace:
    """Per-round record of one trial."""

    policy: str
    alpha: Optional[float]
    trial: int
    actions: np.ndarray            # played action index
    optimistic: np.ndarray         # bool per round
    rewards: np.ndarray            # realized noisy reward
    regret_realized: np.ndarray    # cumulative, realized-context accounting
    regret_expected: np.ndarray    # cumulative, expected-feature accounting
    slack: np.ndarray              # cumulative constraint slack (nan for linucb)
    m: np.ndarray                  # optimistic plays through round t
    n: np.ndarray                  # baseline plays through round t
    lcbs: np.ndarray = None        # pessimistic gate values (nan for linucb)
    coverage_ok: Optional[bool] = None

    @property
    def horizon(self):
        return len(self.rewards)

    def play_types(self):
        return np.where(self.optimistic, "optimistic", "baseline")


def trial_rng(master_seed, trial):
    """Independent generator for one trial; stable under trial-count changes."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(1, trial)))


def build_env(config):
    """Deterministically build the configured environment from the master seed.

    Returns (env, info) where info records fit diagnostics for the bilinear
    path (training MSE of the reward model, final loss).
    """
    if config.environment == "synthetic":
        env = SyntheticQuadraticEnv(
            seed=np.random.SeedSequence(config.seed, spawn_key=(0,)),
            p=config.p, n_actions=config.n_actions,
            noise_sigma=config.noise_sigma, dirac=config.dirac_contexts)
        return env, {}
    if config.dataset_path:
        data = bl.load_dataset(config.dataset_path)
    else:
        data, _, _ = bl.make_surrogate(n=config.surrogate_n, latent=config.latent,
                                       noise=config.surrogate_noise,
                                       seed=np.random.SeedSequence(config.seed, spawn_key=(3,)))
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(4,)))
    model, traces = bl.sgd_fit(data, lr=config.sgd_lr, lam_v=config.sgd_lam_v,
                               lam_w=config.sgd_lam_w, epochs=config.sgd_epochs,
                               latent=config.latent, rng=rng)
    env = BilinearEnv(model.W, model.V, noise_sigma=config.noise_sigma,
                      numeric_dim=len(bl.DEFAULT_SCHEMA.numeric_names),
                      forecast_std=config.forecast_std)
    info = {"fit_mse": bl.dataset_mse(model, data),
            "fit_loss_final": float(traces["loss"][-1]) if config.sgd_epochs else None,
            "n_rows": len(data)}
    return env, info


def measure_constants(env, config):
    """Pre-pass: parameter-norm bound A and feature-norm scales D.

    A is the exact parameter norm (simulation privilege).  D is the 99.9th
    percentile of feature norms over a seeded pre-pass, measured separately
    for the expected-feature and realized-feature channels.
    """
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(2,)))
    rounds = max(100, config.prepass_draws // len(env.action_set))
    exp_norms = []
    real_norms = []
    for _ in range(rounds):
        mu, c = env.sample_round(rng)
        psis = expected_feature_matrix(env.feature_map, env.action_set, mu,
                                       mc_budget=config.mc_budget, rng=rng)
        phis = env.feature_map.feature_matrix(env.action_set, c)
        exp_norms.append(np.linalg.norm(psis, axis=1))
        real_norms.append(np.linalg.norm(phis, axis=1))
    exp_norms = np.concatenate(exp_norms)
    real_norms = np.concatenate(real_norms)
    return {
        "A": float(np.linalg.norm(env.theta_star)),
        "D_expected": float(np.percentile(exp_norms, 99.9)),
        "D_realized": float(np.percentile(real_norms, 99.9)),
    }


def beta_params_for(policy, constants, config, d):
    dval = constants["D_expected"] if policy == "cslucb" else constants["D_realized"]
    return BetaParams(sigma=config.noise_sigma, d=d, D=dval,
                      lam=config.lam, A=constants["A"], delta=config.delta)


def simulate(env, policy, alpha, params, horizon, rng, baseline_rank,
             mc_budget=1000, track_coverage=True, trial=0):
    """Run one policy for `horizon` rounds; returns the full trace.

    The realized reward is formed from the already-computed feature matrix
    plus one Gaussian draw, which matches env.realize_reward value for value
    and draw for draw.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    if policy != "linucb" and not (alpha and 0 < alpha < 1):
        raise ValueError("gated policies need alpha in (0, 1)")
    fmap = env.feature_map
    actions = env.action_set
    theta = env.theta_star
    state = PolicyState(fmap.d, params)
    T = int(horizon)
    acts = np.zeros(T, dtype=np.int64)
    opti = np.zeros(T, dtype=bool)
    rewards = np.zeros(T)
    cum_real = np.zeros(T)
    cum_exp = np.zeros(T)
    slack = np.full(T, np.nan)
    lcbs = np.full(T, np.nan)
    m_arr = np.zeros(T, dtype=np.int64)
    n_arr = np.zeros(T, dtype=np.int64)
    covered = True
    run_real = 0.0
    run_exp = 0.0
    played_sum = 0.0
    base_sum = 0.0
    for t in range(T):
        if track_coverage and covered:
            covered = contains(state.ellipsoid, theta)
        mu, c = env.sample_round(rng)
        psis = expected_feature_matrix(fmap, actions, mu, mc_budget=mc_budget, rng=rng)
        phis = fmap.feature_matrix(actions, c)
        exp_rewards = psis @ theta
        real_rewards = phis @ theta
        b_idx = baseline_kth_best(theta, psis, baseline_rank)
        x_star = int(np.argmax(exp_rewards))
        if policy == "linucb":
            dec = linucb_step(state, phis)
        elif policy == "clucb":
            dec = clucb_step(state, phis, b_idx, float(real_rewards[b_idx]), alpha)
        else:
            dec = cslucb_step(state, psis, b_idx, float(exp_rewards[b_idx]), alpha)
        y = float(real_rewards[dec.action]) + env.noise_sigma * rng.standard_normal()
        if not math.isfinite(y):
            raise RuntimeError(f"non-finite reward at round {t + 1}")
        if dec.play_type == "optimistic":
            absorb_reward(state, y)
        acts[t] = dec.action
        opti[t] = dec.play_type == "optimistic"
        rewards[t] = y
        run_real += float(real_rewards[x_star] - real_rewards[dec.action])
        run_exp += float(exp_rewards[x_star] - exp_rewards[dec.action])
        cum_real[t] = run_real
        cum_exp[t] = run_exp
        if policy != "linucb":
            if policy == "clucb":
                played_sum += float(real_rewards[dec.action])
                base_sum += float(real_rewards[b_idx])
            else:
                played_sum += float(exp_rewards[dec.action])
                base_sum += float(exp_rewards[b_idx])
            slack[t] = played_sum - (1.0 - alpha) * base_sum
            lcbs[t] = dec.lcb
            if not math.isfinite(lcbs[t]):
                raise RuntimeError(f"non-finite gate value at round {t + 1}")
        m_arr[t] = state.m
        n_arr[t] = state.n
    return RegretTrace(policy=policy, alpha=alpha, trial=trial, actions=acts,
                       optimistic=opti, rewards=rewards, regret_realized=cum_real,
                       regret_expected=cum_exp, slack=slack, m=m_arr, n=n_arr,
                       lcbs=lcbs, coverage_ok=covered if track_coverage else None)


def run_trial(config, trial, policy=None, alpha=None, env=None, constants=None):
    """One seeded trial under the configuration.

    `trial` indexes the per-trial seed derived from config.seed.  Policy and
    alpha default to the first configured ones.  Building the environment
    can be expensive for the bilinear path; pass `env` and `constants` to
    amortize across trials.
    """
    policy = policy or config.policies[0]
    alpha = alpha if alpha is not None else (config.alphas[0] if policy != "linucb" else None)
    if env is None:
        env, _ = build_env(config)
    if constants is None:
        constants = measure_constants(env, config)
    params = beta_params_for(policy, constants, config, env.feature_map.d)
    return simulate(env, policy, alpha, params, config.horizon,
                    trial_rng(config.seed, trial), config.baseline_rank,
                    mc_budget=config.mc_budget, trial=trial)


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------

def write_trace(trace, path):
    """Emit one trial as CSV; floats use repr so parsing round-trips exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        alpha = repr(float(trace.alpha)) if trace.alpha is not None else "nan"
        types = trace.play_types()
        for t in range(trace.horizon):
            writer.writerow([
                t + 1, trace.policy, alpha, trace.trial, int(trace.actions[t]), types[t],
                repr(float(trace.rewards[t])), repr(float(trace.regret_realized[t])),
                repr(float(trace.regret_expected[t])), repr(float(trace.slack[t])),
                int(trace.m[t]), int(trace.n[t]),
            ])


def read_trace(path):
    """Parse a trace CSV back into a RegretTrace."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: empty trace")
    policy = rows[0][1]
    alpha_val = float(rows[0][2])
    alpha = None if math.isnan(alpha_val) else alpha_val
    trial = int(rows[0][3])
    cols = list(zip(*rows))
    return RegretTrace(
        policy=policy, alpha=alpha, trial=trial,
        actions=np.array([int(v) for v in cols[4]]),
        optimistic=np.array([v == "optimistic" for v in cols[5]]),
        rewards=np.array([float(v) for v in cols[6]]),
        regret_realized=np.array([float(v) for v in cols[7]]),
        regret_expected=np.array([float(v) for v in cols[8]]),
        slack=np.array([float(v) for v in cols[9]]),
        m=np.array([int(v) for v in cols[10]]),
        n=np.array([int(v) for v in cols[11]]),
    )


def cell_name(policy, alpha):
    return policy if alpha is None else f"{policy}@{alpha:g}"


def experiment_cells(config):
    cells = []
    for pol in config.policies:
        if pol == "linucb":
            cells.append((pol, None))
        else:
            cells.extend((pol, a) for a in config.alphas)
    return cells


def _checkpoints(horizon):
    pts = sorted({c for c in (500, 1000, 2000) if c <= horizon} | {horizon})
    return pts


class _CellAggregate:
    """Streaming mean/SE accumulator over the trials of one cell."""

    def __init__(self, horizon):
        self.horizon = horizon
        self.count = 0
        self.sum_real = np.zeros(horizon)
        self.sq_real = np.zeros(horizon)
        self.sum_exp = np.zeros(horizon)
        self.sq_exp = np.zeros(horizon)
        self.finals = {key: [] for key in (
            "regret_realized_final", "regret_expected_final", "n_final", "m_final",
            "min_slack", "coverage")}
        self.at = {t: {"regret_realized": [], "n": []} for t in _checkpoints(horizon)}

    def add(self, trace):
        self.count += 1
        self.sum_real += trace.regret_realized
        self.sq_real += trace.regret_realized ** 2
        self.sum_exp += trace.regret_expected
        self.sq_exp += trace.regret_expected ** 2
        f = self.finals
        f["regret_realized_final"].append(float(trace.regret_realized[-1]))
        f["regret_expected_final"].append(float(trace.regret_expected[-1]))
        f["n_final"].append(int(trace.n[-1]))
        f["m_final"].append(int(trace.m[-1]))
        slack = trace.slack
        f["min_slack"].append(float(np.nanmin(slack)) if not np.all(np.isnan(slack)) else float("nan"))
        f["coverage"].append(bool(trace.coverage_ok) if trace.coverage_ok is not None else None)
        for t, rec in self.at.items():
            rec["regret_realized"].append(float(trace.regret_realized[t - 1]))
            rec["n"].append(int(trace.n[t - 1]))

    @staticmethod
    def _mean_se(sums, sqs, count):
        mean = sums / count
        if count > 1:
            var = np.clip((sqs - count * mean ** 2) / (count - 1), 0.0, None)
            se = np.sqrt(var / count)
        else:
            se = np.zeros_like(mean)
        return mean, se

    def summarize(self, policy, alpha):
        rounds = np.unique(np.linspace(1, self.horizon, min(self.horizon, 500)).astype(int))
        mean_r, se_r = self._mean_se(self.sum_real, self.sq_real, self.count)
        mean_e, se_e = self._mean_se(self.sum_exp, self.sq_exp, self.count)
        fin = self.finals
        reals = np.array(fin["regret_realized_final"])
        slacks = np.array(fin["min_slack"])
        violations = None
        if not np.all(np.isnan(slacks)):
            violations = int(np.sum(slacks < -SLACK_TOL))
        coverage = [c for c in fin["coverage"] if c is not None]
        out = {
            "policy": policy,
            "alpha": alpha,
            "trials": self.count,
            "rounds": rounds.tolist(),
            "regret_realized_mean": mean_r[rounds - 1].tolist(),
            "regret_realized_se": se_r[rounds - 1].tolist(),
            "regret_expected_mean": mean_e[rounds - 1].tolist(),
            "regret_expected_se": se_e[rounds - 1].tolist(),
            "final": {
                "regret_realized_mean": float(reals.mean()),
                "regret_realized_se": float(reals.std(ddof=1) / np.sqrt(self.count)) if self.count > 1 else 0.0,
                "per_step_mean": float(reals.mean() / self.horizon),
                "regret_expected_mean": float(np.mean(fin["regret_expected_final"])),
                "n_mean": float(np.mean(fin["n_final"])),
                "n_sd": float(np.std(fin["n_final"], ddof=1)) if self.count > 1 else 0.0,
                "m_mean": float(np.mean(fin["m_final"])),
            },
            "checkpoints": {
                str(t): {
                    "regret_realized_mean": float(np.mean(rec["regret_realized"])),
                    "per_step_mean": float(np.mean(rec["regret_realized"]) / t),
                    "n_mean": float(np.mean(rec["n"])),
                }
                for t, rec in self.at.items()
            },
            "constraint_violations": violations,
            "coverage_fraction": float(np.mean(coverage)) if coverage else None,
            "per_trial": {
                "regret_realized_final": fin["regret_realized_final"],
                "regret_expected_final": fin["regret_expected_final"],
                "n_final": fin["n_final"],
                "min_slack": fin["min_slack"],
                "coverage": fin["coverage"],
                "regret_realized_at": {str(t): rec["regret_realized"] for t, rec in self.at.items()},
                "n_at": {str(t): rec["n"] for t, rec in self.at.items()},
            },
        }
        return out


def _bound_report(config, constants, d, cells=None):
    report = {}
    for alpha in config.alphas or (0.5,):
        entry = {}
        if cells:
            observed = {
                name: cell["final"]["n_mean"]
                for name, cell in cells.items()
                if cell["alpha"] == alpha and cell["policy"] != "linucb"
            }
            if observed:
                entry["observed_mean_baseline_plays"] = observed
        for label, lam in (("at_config_lambda", config.lam),
                           ("at_normalized_lambda", max(1.0, constants["D_expected"] ** 2))):
            try:
                p = TheoryParams(d=d, A=constants["A"], D=constants["D_expected"],
                                 lam=lam, sigma=config.noise_sigma, delta=config.delta,
                                 alpha=alpha, r_l=config.r_l, T=config.horizon)
                entry[label] = {
                    "lambda": lam,
                    "n_T_upper": nT_upper_bound(p),
                    "n_T_lower": nT_lower_bound(p),
                    "total_regret": total_regret_bound(p),
                }
            except ValueError as exc:
                entry[label] = {"lambda": lam, "error": str(exc)}
        report[f"alpha={alpha:g}"] = entry
    return report


def run_experiment(config):
    """Run every (policy, alpha, trial) cell and aggregate.

    Returns the summary dict (also written to out_dir/summary.json when an
    output directory is configured, next to per-trial trace CSVs).  Cells
    that raise are recorded under "failed_cells" and do not abort the rest.
    """
    env, env_info = build_env(config)
    constants = measure_constants(env, config)
    d = env.feature_map.d
    summary = {
        "config": config.to_dict(),
        "constants": constants,
        "environment_info": env_info,
        "cells": {},
        "failed_cells": [],
    }
    trace_dir = None
    if config.out_dir:
        trace_dir = os.path.join(config.out_dir, "traces")
        os.makedirs(trace_dir, exist_ok=True)
    for policy, alpha in experiment_cells(config):
        name = cell_name(policy, alpha)
        params = beta_params_for(policy, constants, config, d)
        agg = _CellAggregate(config.horizon)
        try:
            for trial in range(config.trials):
                trace = simulate(env, policy, alpha, params, config.horizon,
                                 trial_rng(config.seed, trial), config.baseline_rank,
                                 mc_budget=config.mc_budget, trial=trial)
                agg.add(trace)
                if trace_dir and config.write_traces:
                    write_trace(trace, os.path.join(trace_dir, f"{name}_trial{trial:03d}.csv"))
            summary["cells"][name] = agg.summarize(policy, alpha)
        except Exception as exc:  # record and continue with remaining cells
            summary["failed_cells"].append({"cell": name, "error": f"{type(exc).__name__}: {exc}"})
    summary["bound_report"] = _bound_report(config, constants, d, summary["cells"])
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        with open(os.path.join(config.out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
    return summary


def report_from_traces(out_dir):
    """Re-aggregate written trace CSVs into a fresh summary.

    Groups trace files by (policy, alpha) and recomputes the aggregate
    curves, final table, and violation counts directly from the files.
    """
    trace_dir = os.path.join(out_dir, "traces")
    if not os.path.isdir(trace_dir):
        raise FileNotFoundError(f"no trace directory at {trace_dir}")
    groups = {}
    for fname in sorted(os.listdir(trace_dir)):
        if not fname.endswith(".csv"):
            continue
        trace = read_trace(os.path.join(trace_dir, fname))
        key = cell_name(trace.policy, trace.alpha)
        groups.setdefault(key, []).append(trace)
    if not groups:
        raise ValueError(f"no trace files found under {trace_dir}")
    report = {"cells": {}}
    for name, traces in groups.items():
        agg = _CellAggregate(traces[0].horizon)
        for trace in sorted(traces, key=lambda tr: tr.trial):
            agg.add(trace)
        report["cells"][name] = agg.summarize(traces[0].policy, traces[0].alpha)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    return report
