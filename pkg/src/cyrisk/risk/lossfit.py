"""Zero-inflated gamma mixture for annual losses."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import optimize, special, stats
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

__all__ = ["ZeroInflatedGammaMixture", "fit_loss", "weighted_gamma_mle", "check_losses"]


def check_losses(X, min_samples=1):
    """Validate a loss sample: 1-D (or single column), finite, non-negative."""
    x = check_array(np.asarray(X, dtype=float).reshape(-1, 1), ensure_min_samples=min_samples).ravel()
    if np.any(x < 0):
        raise ValueError("losses must be non-negative")
    return x


def weighted_gamma_mle(x, w=None):
    """Gamma (shape, scale) maximising the ``w``-weighted log-likelihood of ``x > 0``.

    Solves ``log(a) - digamma(a) = log(mean) - mean(log x)`` by Newton steps
    in ``log a``.
    """
    x = np.asarray(x, dtype=float)
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float)
    sw = w.sum()
    m = (w * x).sum() / sw
    s = np.log(m) - (w * np.log(x)).sum() / sw
    if not s > 1e-12:
        return 1e8, m / 1e8
    a = (3.0 - s + np.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(100):
        f = np.log(a) - special.digamma(a) - s
        df = 1.0 - a * special.polygamma(1, a)   # derivative w.r.t. log a
        step = f / df
        a = a * np.exp(-np.clip(step, -5, 5))
        if abs(step) < 1e-12:
            break
    return float(a), float(m / a)


class ZeroInflatedGammaMixture(BaseEstimator):
    """Point mass at zero plus a mixture of gammas on the positive losses.

    Parameters
    ----------
    n_components : int
        Number of gamma components for the positive part (1 to 3).  One
        component is a direct maximum-likelihood fit; more use EM.
    max_iter : int
        EM iteration cap per restart.
    tol : float
        Relative log-likelihood change that counts as converged.
    n_init : int
        EM restarts from k-means initialisations; the best likelihood wins.
    random_state : int
        Seed for the k-means initialisations.

    Attributes
    ----------
    zero_mass_ : float
        Fraction of zero losses.
    weights_, shapes_, scales_ : ndarray
        Component weights (summing to 1), gamma shapes and scales.
    loglik_ : float
        Log-likelihood of the whole sample (zeros included).
    """

    def __init__(self, n_components=1, max_iter=200, tol=1e-8, n_init=5, random_state=0):
        self.n_components = n_components
        self.max_iter = max_iter
        self.tol = tol
        self.n_init = n_init
        self.random_state = random_state

    def fit(self, X, y=None):
        x = check_losses(X)
        if not 1 <= int(self.n_components) <= 3:
            raise ValueError("n_components must be 1, 2 or 3")
        pos = x[x > 0]
        self.n_samples_ = x.size
        self.zero_mass_ = 1.0 - pos.size / x.size
        self.converged_ = True
        self.n_iter_ = 0
        if pos.size == 0:
            self.weights_ = self.shapes_ = self.scales_ = np.zeros(0)
        elif self.n_components == 1 or pos.size < 10 * self.n_components:
            a, th = weighted_gamma_mle(pos)
            self.weights_, self.shapes_, self.scales_ = np.ones(1), np.array([a]), np.array([th])
        else:
            self._fit_em(pos)
        self.loglik_ = self._loglik(x)
        return self

    def _fit_em(self, pos):
        rng = np.random.default_rng(self.random_state)
        best = None
        logx = np.log(pos)
        k = int(self.n_components)
        for _ in range(self.n_init):
            params = self._kmeans_init(logx, pos, k, rng)
            if params is None:
                continue
            res = self._em(pos, *params)
            if res[4] and (best is None or res[3] > best[3]):
                best = res
        if best is None:
            warnings.warn("gamma mixture EM did not converge; falling back to one component",
                          RuntimeWarning, stacklevel=3)
            a, th = weighted_gamma_mle(pos)
            self.weights_, self.shapes_, self.scales_ = np.ones(1), np.array([a]), np.array([th])
            self.converged_ = False
            return
        w, a, th, _, _, it = best
        order = np.argsort(a * th)
        self.weights_, self.shapes_, self.scales_ = w[order], a[order], th[order]
        self.n_iter_ = it

    @staticmethod
    def _kmeans_init(logx, pos, k, rng):
        centers = np.sort(rng.choice(logx, size=k, replace=False))
        for _ in range(50):
            label = np.argmin(np.abs(logx[:, None] - centers[None, :]), axis=1)
            new = np.array([logx[label == j].mean() if np.any(label == j) else centers[j] for j in range(k)])
            if np.allclose(new, centers):
                break
            centers = new
        w, a, th = np.zeros(k), np.zeros(k), np.zeros(k)
        for j in range(k):
            part = pos[label == j]
            if part.size < 2 or part.var() <= 0:
                return None
            w[j] = part.size / pos.size
            a[j] = part.mean() ** 2 / part.var()
            th[j] = part.var() / part.mean()
        return w, a, th

    def _em(self, x, w, a, th):
        prev = -np.inf
        for it in range(1, self.max_iter + 1):
            logp = np.log(w)[None, :] + stats.gamma.logpdf(x[:, None], a[None, :], scale=th[None, :])
            ll = special.logsumexp(logp, axis=1)
            total = ll.sum()
            r = np.exp(logp - ll[:, None])
            w = r.mean(axis=0)
            if np.any(w < 1e-10):
                return w, a, th, total, False, it
            for j in range(a.size):
                a[j], th[j] = weighted_gamma_mle(x, r[:, j])
            if abs(total - prev) <= self.tol * abs(total):
                return w, a, th, total, True, it
            prev = total
        return w, a, th, total, False, self.max_iter

    def _pos_logpdf(self, x):
        logp = np.log(self.weights_)[None, :] + stats.gamma.logpdf(
            x[:, None], self.shapes_[None, :], scale=self.scales_[None, :])
        return special.logsumexp(logp, axis=1)

    def _loglik(self, x):
        return float(self.score_samples(x).sum())

    @property
    def components(self):
        """``[(weight, shape, scale), ...]`` for the positive part."""
        check_is_fitted(self, "zero_mass_")
        return list(zip(self.weights_.tolist(), self.shapes_.tolist(), self.scales_.tolist()))

    def score_samples(self, X):
        """Log-likelihood per observation (log zero-mass for zeros, log density otherwise)."""
        check_is_fitted(self, "zero_mass_")
        x = check_losses(X)
        out = np.empty_like(x)
        zero = x == 0
        with np.errstate(divide="ignore"):
            out[zero] = np.log(self.zero_mass_)
            if np.any(~zero):
                out[~zero] = np.log1p(-self.zero_mass_) + (
                    self._pos_logpdf(x[~zero]) if self.weights_.size else -np.inf)
        return out

    def score(self, X, y=None):
        return float(self.score_samples(X).mean())

    def cdf(self, x):
        check_is_fitted(self, "zero_mass_")
        x = np.asarray(x, dtype=float)
        if self.weights_.size == 0:
            return np.where(x >= 0, 1.0, 0.0)
        g = sum(w * stats.gamma.cdf(x, a, scale=t) for w, a, t in self.components)
        return np.where(x >= 0, self.zero_mass_ + (1.0 - self.zero_mass_) * g, 0.0)

    def mean(self):
        check_is_fitted(self, "zero_mass_")
        return float((1.0 - self.zero_mass_) * np.sum(self.weights_ * self.shapes_ * self.scales_))

    def var(self, level):
        """Level-quantile of the fitted loss (0 when the zero mass covers ``level``)."""
        check_is_fitted(self, "zero_mass_")
        if not 0 < level < 1:
            raise ValueError("level must be in (0, 1)")
        if level <= self.zero_mass_ or self.weights_.size == 0:
            return 0.0
        target = (level - self.zero_mass_) / (1.0 - self.zero_mass_)

        def f(v):
            return sum(w * stats.gamma.cdf(v, a, scale=t) for w, a, t in self.components) - target

        hi = max(a * t for _, a, t in self.components)
        while f(hi) < 0:
            hi *= 2.0
        return float(optimize.brentq(f, 0.0, hi, xtol=1e-12, rtol=1e-12, maxiter=500))

    def cvar(self, level):
        """Tail mean beyond the fitted level-quantile: ``VaR + E[(L - VaR)+] / (1 - level)``."""
        v = self.var(level)
        excess = 0.0
        for w, a, t in self.components:
            excess += w * (a * t * stats.gamma.sf(v, a + 1, scale=t) - v * stats.gamma.sf(v, a, scale=t))
        return float(v + (1.0 - self.zero_mass_) * excess / (1.0 - level))

    def sample(self, n, random_state=None):
        check_is_fitted(self, "zero_mass_")
        rng = np.random.default_rng(random_state)
        out = np.zeros(n)
        pos = rng.random(n) >= self.zero_mass_
        if self.weights_.size and pos.any():
            comp = rng.choice(self.weights_.size, size=pos.sum(), p=self.weights_)
            out[pos] = rng.gamma(self.shapes_[comp], self.scales_[comp])
        return out


def fit_loss(sample, n_components=1, **kwargs):
    """Fit the zero-inflated gamma mixture to an annual-loss sample (at least 100 values)."""
    x = check_losses(getattr(sample, "losses", sample), min_samples=100)
    return ZeroInflatedGammaMixture(n_components=n_components, **kwargs).fit(x)
