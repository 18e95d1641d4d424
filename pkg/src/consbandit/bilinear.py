"""Bilinear yield model y ~ c^T W V_x: SGD fitting and CSV ingestion.

The model couples a site-feature projection W (context_dim x latent) with one
latent vector per crop/action.  Fitting minimizes squared error plus ridge
penalties on V_x and W via per-example stochastic gradient steps.  A
synthetic surrogate generator stands in for real field data, which is not
distributed with this package.
"""

import csv
from dataclasses import dataclass

import numpy as np


@dataclass
class CsvSchema:
    """Column layout of a yield CSV: numeric block, one-hot block, action, yield."""

    numeric_names: tuple = tuple(f"f{i}" for i in range(1, 7))
    onehot_names: tuple = tuple(f"loc{i}" for i in range(22))
    action_col: str = "action"
    yield_col: str = "yield"
    n_actions: int = 24

    @property
    def header(self):
        return list(self.numeric_names) + list(self.onehot_names) + [self.action_col, self.yield_col]

    @property
    def context_dim(self):
        return len(self.numeric_names) + len(self.onehot_names)


DEFAULT_SCHEMA = CsvSchema()


@dataclass
class YieldDataset:
    """Validated rows of (context, action id, yield)."""

    contexts: np.ndarray   # n x context_dim
    actions: np.ndarray    # n, integer ids
    yields: np.ndarray     # n
    n_actions: int = 24

    def __post_init__(self):
        self.contexts = np.asarray(self.contexts, dtype=np.float64)
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.yields = np.asarray(self.yields, dtype=np.float64)
        if len(self.contexts) == 0:
            raise ValueError("empty dataset")
        if not (len(self.contexts) == len(self.actions) == len(self.yields)):
            raise ValueError("context/action/yield lengths disagree")
        if self.actions.min() < 0 or self.actions.max() >= self.n_actions:
            bad = int(np.argmax((self.actions < 0) | (self.actions >= self.n_actions)))
            raise ValueError(f"row {bad}: action id {self.actions[bad]} out of range")
        if not (np.all(np.isfinite(self.contexts)) and np.all(np.isfinite(self.yields))):
            raise ValueError("non-finite values in dataset")

    def __len__(self):
        return len(self.yields)


@dataclass
class BilinearModel:
    """Fitted factors: site projection W and per-action latent vectors."""

    W: np.ndarray        # context_dim x latent
    V: np.ndarray        # n_actions x latent

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.V = np.asarray(self.V, dtype=np.float64)
        if self.W.shape[1] != self.V.shape[1]:
            raise ValueError("W and V disagree on latent dimension")
        if not (np.all(np.isfinite(self.W)) and np.all(np.isfinite(self.V))):
            raise ValueError("non-finite model entries")

    @property
    def latent(self):
        return self.W.shape[1]


def predict(model, context, action):
    """c^T W V_x."""
    context = np.asarray(context, dtype=np.float64)
    if context.shape != (model.W.shape[0],):
        raise ValueError(f"context has shape {context.shape}, expected ({model.W.shape[0]},)")
    if not 0 <= int(action) < model.V.shape[0]:
        raise ValueError(f"action id {action} out of range")
    return float(context @ model.W @ model.V[int(action)])


def dataset_mse(model, data):
    """Mean squared prediction error over the dataset."""
    preds = np.einsum("ij,jk,ik->i", data.contexts, model.W, model.V[data.actions])
    return float(np.mean((data.yields - preds) ** 2))


def example_loss_and_grads(model, context, action, y, lam_v, lam_w_step):
    """Per-example loss and its analytic gradients in (W, V_action).

    loss = (y - c^T W V_x)^2 + lam_v ||V_x||^2 + lam_w_step ||W||^2, where
    lam_w_step is the per-step share of the global W penalty.
    """
    c = np.asarray(context, dtype=np.float64)
    vx = model.V[int(action)]
    z = model.W.T @ c
    err = y - float(z @ vx)
    loss = err * err + lam_v * float(vx @ vx) + lam_w_step * float(np.sum(model.W * model.W))
    grad_w = -2.0 * err * np.outer(c, vx) + 2.0 * lam_w_step * model.W
    grad_v = -2.0 * err * z + 2.0 * lam_v * vx
    return loss, grad_w, grad_v


def sgd_fit(data, lr=0.015, lam_v=0.001, lam_w=0.001, epochs=300, latent=10,
            rng=None, init_scale=0.1):
    """Fit the bilinear model by per-example SGD.

    One epoch is a full shuffled pass over the data; the W penalty is spread
    over the n per-example steps of an epoch (lam_w / n per step) so that a
    pass applies the full lam_w ||W||^2 pressure once.  Entries initialize
    as Normal(0, init_scale^2).  Returns the model and per-epoch traces of
    the full objective and the training MSE.  Raises on divergence, naming
    the epoch.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if rng is None:
        rng = np.random.default_rng()
    n = len(data)
    dim = data.contexts.shape[1]
    model = BilinearModel(
        W=init_scale * rng.standard_normal((dim, latent)),
        V=init_scale * rng.standard_normal((data.n_actions, latent)),
    )
    lam_w_step = lam_w / n
    w_decay = 1.0 - 2.0 * lr * lam_w_step
    v_decay = 1.0 - 2.0 * lr * lam_v
    loss_trace = np.zeros(epochs)
    mse_trace = np.zeros(epochs)
    for epoch in range(epochs):
        order = rng.permutation(n)
        for i in order:
            c = data.contexts[i]
            a = data.actions[i]
            vx = model.V[a]
            z = model.W.T @ c
            err = data.yields[i] - float(z @ vx)
            step = 2.0 * lr * err
            model.V[a] = v_decay * vx + step * z
            model.W *= w_decay
            model.W += step * np.outer(c, vx)
        sq = dataset_mse(model, data) * n
        reg = lam_v * float(np.sum(model.V[data.actions] ** 2)) + lam_w * float(np.sum(model.W ** 2))
        loss_trace[epoch] = sq + reg
        mse_trace[epoch] = sq / n
        if not np.isfinite(loss_trace[epoch]):
            raise RuntimeError(f"SGD diverged at epoch {epoch}")
    return model, {"loss": loss_trace, "mse": mse_trace}


def load_dataset(path, schema=DEFAULT_SCHEMA):
    """Read and validate a yield CSV; errors name the offending row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty dataset: no header row") from None
        if header != schema.header:
            missing = set(schema.header) - set(header)
            raise ValueError(f"bad header; missing columns {sorted(missing)}" if missing
                             else f"bad header order: {header[:4]}...")
        rows = list(reader)
    if not rows:
        raise ValueError("empty dataset: no data rows")
    dim = schema.context_dim
    n_onehot = len(schema.onehot_names)
    contexts = np.zeros((len(rows), dim))
    actions = np.zeros(len(rows), dtype=np.int64)
    yields = np.zeros(len(rows))
    for i, row in enumerate(rows):
        if len(row) != dim + 2:
            raise ValueError(f"row {i}: expected {dim + 2} cells, got {len(row)}")
        try:
            vals = [float(cell) for cell in row]
        except ValueError:
            raise ValueError(f"row {i}: non-numeric cell") from None
        contexts[i] = vals[:dim]
        a = vals[dim]
        if a != int(a) or not 0 <= int(a) < schema.n_actions:
            raise ValueError(f"row {i}: action id {a!r} out of range [0, {schema.n_actions})")
        actions[i] = int(a)
        yields[i] = vals[dim + 1]
        onehot = contexts[i, dim - n_onehot:]
        if abs(onehot.sum() - 1.0) > 1e-9 or onehot.min() < -1e-12:
            raise ValueError(f"row {i}: one-hot block does not sum to 1")
    return YieldDataset(contexts, actions, yields, n_actions=schema.n_actions)


def save_dataset(data, path, schema=DEFAULT_SCHEMA):
    """Write a dataset in the CSV schema (floats round-trip exactly)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema.header)
        for i in range(len(data)):
            writer.writerow([repr(float(v)) for v in data.contexts[i]]
                            + [int(data.actions[i]), repr(float(data.yields[i]))])


def make_surrogate(n=2000, latent=10, noise=0.01, seed=0, schema=DEFAULT_SCHEMA):
    """Synthesize a yield dataset from known factors.

    The one-hot rows of W and all crop vectors share a common latent
    direction, so yields sit around 0.8 with moderate spread across crops
    and fields: everything stays positive, mirroring normalized yields, and
    the scale keeps per-example SGD stable at the default learning rate.
    Returns (dataset, true_W, true_V).
    """
    rng = np.random.default_rng(seed)
    numeric_dim = len(schema.numeric_names)
    n_fields = len(schema.onehot_names)
    shared = np.ones(latent) / np.sqrt(latent)
    W = np.zeros((schema.context_dim, latent))
    W[:numeric_dim] = 0.045 * rng.standard_normal((numeric_dim, latent))
    W[numeric_dim:] = 0.9 * shared + 0.05 * rng.standard_normal((n_fields, latent))
    V = 0.9 * shared + 0.15 * rng.standard_normal((schema.n_actions, latent))
    contexts = np.zeros((n, schema.context_dim))
    contexts[:, :numeric_dim] = rng.standard_normal((n, numeric_dim))
    fields = rng.integers(n_fields, size=n)
    contexts[np.arange(n), numeric_dim + fields] = 1.0
    actions = rng.integers(schema.n_actions, size=n)
    clean = np.einsum("ij,jk,ik->i", contexts, W, V[actions])
    yields = clean + noise * rng.standard_normal(n)
    return YieldDataset(contexts, actions, yields, n_actions=schema.n_actions), W, V
