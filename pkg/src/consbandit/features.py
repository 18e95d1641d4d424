"""Feature maps, action sets, context distributions, and expected features.

A feature map sends an (action, context) pair to a d-dimensional vector;
rewards are linear in that vector.  When the environment reveals only a
distribution mu over contexts instead of the context itself, each action is
represented by its expected feature vector E_{c~mu}[phi(x, c)], which this
module computes exactly where possible (point masses, finite mixtures,
Gaussian moments of the quadratic map) and by seeded Monte-Carlo otherwise.
"""

from dataclasses import dataclass, field

import numpy as np


def _finite(arr, name):
    arr = np.asarray(arr, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# context distributions
# ---------------------------------------------------------------------------

class ContextDistribution:
    """Base class for the distribution mu the learner observes each round."""

    def mean(self):
        raise NotImplementedError

    def sample(self, rng, size=None):
        raise NotImplementedError


class Dirac(ContextDistribution):
    """Point mass at a single context."""

    def __init__(self, point):
        self.point = _finite(point, "context")

    def mean(self):
        return self.point

    def sample(self, rng, size=None):
        if size is None:
            return self.point.copy()
        return np.broadcast_to(self.point, (size, self.point.shape[0])).copy()


class Gaussian(ContextDistribution):
    """Multivariate normal with symmetric PSD covariance."""

    def __init__(self, mean, cov):
        self.mu = _finite(mean, "mean")
        cov = _finite(cov, "covariance")
        if cov.shape != (self.mu.shape[0], self.mu.shape[0]):
            raise ValueError(f"covariance shape {cov.shape} does not match mean")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > 1e-10 * scale:
            raise ValueError("covariance is not symmetric")
        w = np.linalg.eigvalsh(cov)
        if w.min() < -1e-10 * scale:
            raise ValueError(f"covariance is not PSD (min eigenvalue {w.min():.3e})")
        self.cov = cov
        self._factor = None

    @classmethod
    def _prevalidated(cls, mean, cov, factor=None):
        # hot-path constructor for environments that reuse one covariance:
        # skips the per-round symmetry/PSD checks already done on a template
        obj = cls.__new__(cls)
        obj.mu = mean
        obj.cov = cov
        obj._factor = factor
        return obj

    def mean(self):
        return self.mu

    def _sampling_factor(self):
        # eigh-based square root; tolerates singular covariances
        if self._factor is None:
            w, u = np.linalg.eigh(self.cov)
            self._factor = u * np.sqrt(np.clip(w, 0.0, None))
        return self._factor

    def sample(self, rng, size=None):
        fac = self._sampling_factor()
        n = 1 if size is None else size
        z = rng.standard_normal((n, self.mu.shape[0]))
        out = self.mu + z @ fac.T
        return out[0] if size is None else out


class Discrete(ContextDistribution):
    """Finite mixture over explicit support points."""

    def __init__(self, support, weights):
        self.support = np.atleast_2d(_finite(support, "support"))
        self.weights = _finite(weights, "weights")
        if self.weights.ndim != 1 or len(self.weights) != len(self.support):
            raise ValueError("weights must align with support points")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {self.weights.sum()!r}, not 1")

    def mean(self):
        return self.weights @ self.support

    def sample(self, rng, size=None):
        n = 1 if size is None else size
        idx = rng.choice(len(self.support), size=n, p=self.weights)
        out = self.support[idx]
        return out[0] if size is None else out


# ---------------------------------------------------------------------------
# action sets and feature maps
# ---------------------------------------------------------------------------

@dataclass
class ActionSet:
    """Ordered, duplicate-free collection of actions.

    Actions are either p-dimensional vectors (stored as a K x p matrix) or
    opaque integer identifiers; indices 0..K-1 are stable across rounds.
    """

    actions: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.actions) < 1:
            raise ValueError("action set must contain at least one action")
        keys = []
        for a in self.actions:
            if isinstance(a, (int, np.integer)):
                keys.append(("id", int(a)))
            else:
                keys.append(("vec", _finite(a, "action").tobytes()))
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate actions in action set")

    def __len__(self):
        return len(self.actions)

    def __getitem__(self, idx):
        return self.actions[idx]

    def as_matrix(self):
        """K x p matrix of action vectors (vector-valued actions only)."""
        return np.asarray(self.actions, dtype=np.float64)

    @classmethod
    def from_matrix(cls, mat):
        mat = _finite(mat, "action matrix")
        return cls([mat[i] for i in range(mat.shape[0])])

    @classmethod
    def from_ids(cls, count):
        return cls(list(range(count)))


class FeatureMap:
    """Map from (action, context) to a d-dimensional feature vector.

    Subclasses implement `_evaluate`; they may also provide `moments`, an
    analytic evaluator of E_{c~mu}[phi(x, c)] for the distribution families
    they support (return None to decline).
    """

    d = None

    def _evaluate(self, action, context):
        raise NotImplementedError

    def features(self, action, context):
        out = _finite(self._evaluate(action, context), "feature vector")
        if out.shape != (self.d,):
            raise ValueError(f"feature map produced shape {out.shape}, expected ({self.d},)")
        return out

    def moments(self, action, mu):
        return None

    def feature_matrix(self, action_set, context):
        """K x d features of every action at one context."""
        return np.stack([self.features(a, context) for a in action_set.actions])

    def moment_matrix(self, action_set, mu):
        """K x d analytic expected features, or None if unsupported."""
        rows = [self.moments(a, mu) for a in action_set.actions]
        if any(r is None for r in rows):
            return None
        return np.stack(rows)


class QuadraticFeatureMap(FeatureMap):
    """phi(x, c) = [x_1^2..x_p^2, c_1^2..c_p^2, x_1 c_1..x_p c_p].

    With parameter theta = (1,...,1, 1,...,1, -2,...,-2) the induced reward
    is the squared distance sum_i (x_i - c_i)^2.  Gaussian expectations are
    closed-form: E[c_i^2] = m_i^2 + Cov_ii and E[x_i c_i] = x_i m_i.
    """

    def __init__(self, p):
        if p < 1:
            raise ValueError("p must be >= 1")
        self.p = int(p)
        self.d = 3 * self.p

    def _check(self, vec, name):
        vec = _finite(vec, name)
        if vec.shape != (self.p,):
            raise ValueError(f"{name} has shape {vec.shape}, expected ({self.p},)")
        return vec

    def _evaluate(self, action, context):
        x = self._check(action, "action")
        c = self._check(context, "context")
        return np.concatenate([x * x, c * c, x * c])

    def moments(self, action, mu):
        x = self._check(action, "action")
        if isinstance(mu, Gaussian):
            m = mu.mean()
            c2 = m * m + np.diag(mu.cov)
            return np.concatenate([x * x, c2, x * m])
        return None

    def feature_matrix(self, action_set, context):
        xs = action_set.as_matrix()
        c = self._check(context, "context")
        k = xs.shape[0]
        return np.hstack([xs * xs, np.tile(c * c, (k, 1)), xs * c])

    def moment_matrix(self, action_set, mu):
        if not isinstance(mu, Gaussian):
            return None
        xs = action_set.as_matrix()
        m = mu.mean()
        c2 = m * m + np.diag(mu.cov)
        k = xs.shape[0]
        return np.hstack([xs * xs, np.tile(c2, (k, 1)), xs * m])


class BilinearEmbeddingMap(FeatureMap):
    """Block embedding phi(x, c) = e_x (x) (W^T c) for integer action ids.

    With theta = (V_1, ..., V_K) stacked, <theta, phi(x, c)> = c^T W V_x,
    so a bilinear reward model becomes linear in these features.  The map is
    linear in c, hence E[phi(x, c)] = phi(x, E[c]) for any distribution.
    """

    def __init__(self, site_matrix, n_actions):
        self.W = _finite(site_matrix, "site matrix")
        if self.W.ndim != 2:
            raise ValueError("site matrix must be 2-D")
        self.n_actions = int(n_actions)
        self.latent = self.W.shape[1]
        self.context_dim = self.W.shape[0]
        self.d = self.n_actions * self.latent

    def _check_action(self, action):
        a = int(action)
        if not 0 <= a < self.n_actions:
            raise ValueError(f"action id {a} out of range [0, {self.n_actions})")
        return a

    def _embed(self, a, z):
        out = np.zeros(self.d)
        out[a * self.latent : (a + 1) * self.latent] = z
        return out

    def _evaluate(self, action, context):
        a = self._check_action(action)
        c = _finite(context, "context")
        if c.shape != (self.context_dim,):
            raise ValueError(f"context has shape {c.shape}, expected ({self.context_dim},)")
        return self._embed(a, self.W.T @ c)

    def moments(self, action, mu):
        a = self._check_action(action)
        return self._embed(a, self.W.T @ mu.mean())

    def feature_matrix(self, action_set, context):
        c = _finite(context, "context")
        z = self.W.T @ c
        k = len(action_set)
        ids = np.asarray(action_set.actions, dtype=np.int64)
        if ids.min() < 0 or ids.max() >= self.n_actions:
            raise ValueError("action id out of range")
        out = np.zeros((k, self.d))
        out.reshape(k, self.n_actions, self.latent)[np.arange(k), ids] = z
        return out

    def moment_matrix(self, action_set, mu):
        return self.feature_matrix(action_set, mu.mean())


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def features(feature_map, action, context):
    """phi(action, context); deterministic, validated."""
    return feature_map.features(action, context)


def expected_features(feature_map, action, mu, mc_budget=1000, rng=None):
    """E_{c~mu}[phi(action, c)].

    Exact for Dirac and Discrete, analytic where the map supports the
    distribution family, otherwise a Monte-Carlo average of `mc_budget`
    draws (deterministic given the rng).
    """
    if not isinstance(mu, ContextDistribution):
        raise ValueError(f"invalid distribution: {mu!r}")
    if isinstance(mu, Dirac):
        return feature_map.features(action, mu.point)
    if isinstance(mu, Discrete):
        acc = np.zeros(feature_map.d)
        for w, c in zip(mu.weights, mu.support):
            acc += w * feature_map.features(action, c)
        return acc
    analytic = feature_map.moments(action, mu)
    if analytic is not None:
        return analytic
    if mc_budget < 1:
        raise ValueError("mc_budget must be >= 1 on the Monte-Carlo path")
    if rng is None:
        raise ValueError("Monte-Carlo path needs an explicit rng")
    draws = mu.sample(rng, size=mc_budget)
    acc = np.zeros(feature_map.d)
    for c in draws:
        acc += feature_map.features(action, c)
    return acc / mc_budget


def expected_feature_matrix(feature_map, action_set, mu, mc_budget=1000, rng=None):
    """K x d expected features of every action under mu (vectorized)."""
    if isinstance(mu, Dirac):
        return feature_map.feature_matrix(action_set, mu.point)
    if isinstance(mu, Discrete):
        acc = np.zeros((len(action_set), feature_map.d))
        for w, c in zip(mu.weights, mu.support):
            acc += w * feature_map.feature_matrix(action_set, c)
        return acc
    analytic = feature_map.moment_matrix(action_set, mu)
    if analytic is not None:
        return analytic
    if mc_budget < 1:
        raise ValueError("mc_budget must be >= 1 on the Monte-Carlo path")
    if rng is None:
        raise ValueError("Monte-Carlo path needs an explicit rng")
    draws = mu.sample(rng, size=mc_budget)
    acc = np.zeros((len(action_set), feature_map.d))
    for c in draws:
        acc += feature_map.feature_matrix(action_set, c)
    return acc / mc_budget
