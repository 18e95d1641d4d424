"""Simulated environments producing (context distribution, context, reward).

Each round an environment picks a context distribution mu_t, realizes a
context c_t, and pays noisy linear rewards <theta_star, phi(x, c_t)> + noise.
The learner sees mu_t (and, for observed-context policies, c_t); theta_star
stays environment-private and is used only for baseline oracles, regret
accounting, and simulation-privilege constants.

Environments are deterministic given the generator passed in: replaying the
same seed reproduces the trace byte for byte.
"""

import numpy as np

from .features import (
    ActionSet,
    BilinearEmbeddingMap,
    Dirac,
    Gaussian,
    QuadraticFeatureMap,
    expected_feature_matrix,
)


class LinearBanditEnv:
    """Base class: linear rewards over a feature map with Gaussian noise.

    Subclasses set `theta_star`, `action_set`, `feature_map`, `noise_sigma`
    and implement `sample_round`.
    """

    theta_star = None
    action_set = None
    feature_map = None
    noise_sigma = 0.0

    def sample_round(self, rng):
        """Return (mu_t, c_t); c_t is the environment-private realization."""
        raise NotImplementedError

    def mean_reward(self, action_index, context):
        phi = self.feature_map.features(self.action_set[action_index], context)
        return float(self.theta_star @ phi)

    def realize_reward(self, action_index, context, rng):
        """Noisy reward <theta_star, phi(x, c)> + Normal(0, sigma^2)."""
        return self.mean_reward(action_index, context) + self.noise_sigma * rng.standard_normal()

    def expected_rewards_under(self, mu, mc_budget=1000, rng=None):
        """Per-action expected rewards <theta_star, psi_bar_{x,mu}>."""
        psis = expected_feature_matrix(self.feature_map, self.action_set, mu,
                                       mc_budget=mc_budget, rng=rng)
        return psis @ self.theta_star

    def best_action_under_mu(self, mu, mc_budget=1000, rng=None):
        """argmax_x of the expected reward under mu; ties -> lowest index."""
        return int(np.argmax(self.expected_rewards_under(mu, mc_budget, rng)))


class SyntheticQuadraticEnv(LinearBanditEnv):
    """Squared-distance rewards over Gaussian context forecasts.

    Contexts and actions live in R^p; the reward of playing x at context c
    is sum_i (x_i - c_i)^2 plus noise, which is linear in the quadratic
    feature map with parameter (1,...,1, 1,...,1, -2,...,-2).  Each round a
    context is drawn from a multivariate normal and the learner is shown the
    distribution N(c_t, mu_cov) centered on it; the realized context is the
    center itself.  In dirac mode the learner observes c_t exactly.
    """

    def __init__(self, seed=0, p=5, n_actions=20, noise_sigma=0.1,
                 context_cov=None, mu_cov=None, dirac=False):
        self.p = int(p)
        rng = np.random.default_rng(seed)
        self.action_set = ActionSet.from_matrix(rng.standard_normal((n_actions, self.p)))
        self.feature_map = QuadraticFeatureMap(self.p)
        self.theta_star = np.concatenate([np.ones(2 * self.p), -2.0 * np.ones(self.p)])
        self.noise_sigma = float(noise_sigma)
        self.context_cov = np.eye(self.p) if context_cov is None else np.asarray(context_cov, float)
        self.mu_cov = np.eye(self.p) if mu_cov is None else np.asarray(mu_cov, float)
        self._context_factor = np.linalg.cholesky(self.context_cov)
        self.dirac = bool(dirac)
        template = Gaussian(np.zeros(self.p), self.mu_cov)  # validates once
        self._mu_factor = template._sampling_factor()

    def sample_round(self, rng):
        c = self._context_factor @ rng.standard_normal(self.p)
        if self.dirac:
            return Dirac(c), c
        return Gaussian._prevalidated(c, self.mu_cov, self._mu_factor), c


class BilinearEnv(LinearBanditEnv):
    """Yield-style rewards c^T W V_x over site/crop latent factors.

    Contexts are 28-dimensional: a numeric block (weather/soil summaries,
    standardized) followed by a one-hot field-identifier block.  The reward
    model is bilinear in the context and a per-action latent vector, which
    the block-embedding feature map makes linear with parameter
    theta_star = (V_1, ..., V_K) stacked.

    Each round the environment draws a field uniformly and numeric features
    from a standard normal, announces the forecast distribution (Gaussian on
    the numeric block with standard deviation `forecast_std`, exact on the
    one-hot block), and realizes the context as a draw from that forecast.
    """

    def __init__(self, site_matrix, crop_factors, noise_sigma=0.1,
                 numeric_dim=6, forecast_std=0.25):
        self.W = np.asarray(site_matrix, dtype=np.float64)
        self.Vmat = np.asarray(crop_factors, dtype=np.float64)
        n_actions, latent = self.Vmat.shape
        if self.W.shape[1] != latent:
            raise ValueError("site matrix and crop factors disagree on latent dimension")
        self.numeric_dim = int(numeric_dim)
        self.n_fields = self.W.shape[0] - self.numeric_dim
        if self.n_fields < 1:
            raise ValueError("context dimension leaves no room for the one-hot block")
        self.action_set = ActionSet.from_ids(n_actions)
        self.feature_map = BilinearEmbeddingMap(self.W, n_actions)
        self.theta_star = self.Vmat.reshape(-1).copy()
        self.noise_sigma = float(noise_sigma)
        self.forecast_std = float(forecast_std)
        cov = np.zeros(self.W.shape[0])
        cov[: self.numeric_dim] = self.forecast_std ** 2
        self._mu_cov = np.diag(cov)
        template = Gaussian(np.zeros(self.W.shape[0]), self._mu_cov)  # validates once
        self._mu_factor = template._sampling_factor()

    def sample_round(self, rng):
        center = np.zeros(self.W.shape[0])
        center[: self.numeric_dim] = rng.standard_normal(self.numeric_dim)
        center[self.numeric_dim + rng.integers(self.n_fields)] = 1.0
        mu = Gaussian._prevalidated(center, self._mu_cov, self._mu_factor)
        realized = mu.sample(rng)
        return mu, realized

    def bilinear_reward(self, action_index, context):
        """Direct c^T W V_x evaluation (cross-check for the feature path)."""
        return float(context @ self.W @ self.Vmat[action_index])


def sample_round(env, rng):
    """(mu_t, c_t) from the environment; c_t stays environment-private."""
    return env.sample_round(rng)


def realize_reward(env, action_index, context, rng):
    """Noisy realized reward of playing the action at the given context."""
    return env.realize_reward(action_index, context, rng)


def best_action_under_mu(env, mu, mc_budget=1000, rng=None):
    """Best action knowing mu but not the realized context."""
    return env.best_action_under_mu(mu, mc_budget=mc_budget, rng=rng)
