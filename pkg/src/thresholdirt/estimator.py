"""scikit-learn compatible front end to threshold model estimation."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .difficulty import DifficultySpec, ItemParams
from .estimation import Dataset, FitOptions, _arrays_from_items, _Likelihood, eap_scores, fit_mml, lr_test
from .kernel import ModelSpec, ObservationMode, simulate_responses, transformed_total_scores


class ThresholdIRT(TransformerMixin, BaseEstimator):
    """Threshold item response model fitted by marginal maximum likelihood.

    ``fit`` estimates item parameters and the latent standard deviation from a
    persons-by-items response matrix (NaN marks a missing response).
    ``transform`` returns expected a posteriori trait estimates and their
    posterior standard deviations; ``score`` is the mean marginal
    log-likelihood per person.

    Parameters
    ----------
    family : {"normal", "gumbel", "gompertz"}
        Response function F.
    difficulty : {"linear", "log", "logit"}
        Shared transform of the item difficulty functions.
    lo, hi, margin : float
        Response bounds and boundary margin for ``logit`` difficulty.
    mode : {"continuous", "discrete"}
        Treat responses as continuous values or as category codes ``1..n_categories``.
    n_categories : int, optional
        Number of categories in discrete mode.
    common_slope : bool
        Constrain all difficulty slopes to be equal.
    fixed_alpha : bool
        Fix all discrimination parameters at one.
    gh_nodes, max_iter, tol, rtol :
        Quadrature size and optimizer tolerances (gradient norm and relative
        log-likelihood change).
    random_state : int, optional
        Seed for jittered restarts.
    """

    def __init__(self, family="normal", difficulty="linear", lo=None, hi=None, margin=0.10,
                 mode="continuous", n_categories=None, common_slope=False, fixed_alpha=False,
                 gh_nodes=40, max_iter=1000, tol=1e-5, rtol=1e-8, random_state=0):
        self.family = family
        self.difficulty = difficulty
        self.lo = lo
        self.hi = hi
        self.margin = margin
        self.mode = mode
        self.n_categories = n_categories
        self.common_slope = common_slope
        self.fixed_alpha = fixed_alpha
        self.gh_nodes = gh_nodes
        self.max_iter = max_iter
        self.tol = tol
        self.rtol = rtol
        self.random_state = random_state

    def _difficulty_spec(self):
        if isinstance(self.difficulty, DifficultySpec):
            return self.difficulty
        return DifficultySpec(self.difficulty, self.lo, self.hi, self.margin)

    def _structure(self, n_items, n_cov):
        mode = ObservationMode(self.mode, self.n_categories)
        return ModelSpec(self.family, self._difficulty_spec(), (ItemParams(),) * n_items, n_cov, mode)

    def _options(self):
        return FitOptions(gh_nodes=self.gh_nodes, max_iterations=self.max_iter,
                          gradient_tolerance=self.tol, relative_loglik_tolerance=self.rtol,
                          common_slope=self.common_slope, fixed_alpha=self.fixed_alpha,
                          seed=self.random_state)

    @staticmethod
    def _check_X(X):
        return check_array(X, dtype=float, ensure_all_finite="allow-nan")

    def _dataset(self, X, covariates):
        X = self._check_X(X)
        if covariates is not None:
            covariates = check_array(covariates, dtype=float, ensure_2d=False)
        return Dataset(X, covariates)

    def fit(self, X, y=None, covariates=None):
        data = self._dataset(X, covariates)
        structure = self._structure(data.n_items, data.n_covariates)
        self.fit_ = fit_mml(structure, data, self._options())
        self.spec_ = self.fit_.spec
        self.items_ = self.fit_.spec.items
        self.sigma_theta_ = self.fit_.sigma_theta
        self.loglik_ = self.fit_.loglik
        self.n_features_in_ = data.n_items
        self.n_covariates_ = data.n_covariates
        self.converged_ = self.fit_.converged
        return self

    def _fitted_data(self, X, covariates):
        check_is_fitted(self, "fit_")
        data = self._dataset(X, covariates)
        if data.n_items != self.n_features_in_:
            raise ValueError(f"X has {data.n_items} items, model was fitted with {self.n_features_in_}")
        return data

    def transform(self, X, covariates=None):
        data = self._fitted_data(X, covariates)
        eap, sd = eap_scores(None, self.fit_, data)
        return np.column_stack([eap, sd])

    def get_feature_names_out(self, input_features=None):
        return np.array(["theta_eap", "theta_sd"], dtype=object)

    def score_samples(self, X, covariates=None):
        """Per-person marginal log-likelihood."""
        data = self._fitted_data(X, covariates)
        lik = _Likelihood(self.spec_, data, self.gh_nodes)
        res = lik.evaluate(*_arrays_from_items(self.spec_.items, self.spec_.covariate_dim),
                           self.sigma_theta_, grad=False)
        return res["person_loglik"]

    def score(self, X, y=None, covariates=None):
        return float(np.mean(self.score_samples(X, covariates)))

    def transformed_total_score(self, X):
        check_is_fitted(self, "fit_")
        return transformed_total_scores(self.spec_, self._check_X(X))

    def sample(self, n_persons, covariates=None, random_state=None):
        """Simulate responses of ``n_persons`` new persons from the fitted model."""
        check_is_fitted(self, "fit_")
        rng = np.random.default_rng(random_state)
        theta = rng.normal(0.0, self.sigma_theta_, size=n_persons)
        return simulate_responses(self.spec_, theta, covariates, rng)

    def lr_test(self, restricted: "ThresholdIRT"):
        """Likelihood ratio test of ``restricted`` against this (larger) fit."""
        check_is_fitted(self, "fit_")
        check_is_fitted(restricted, "fit_")
        return lr_test(restricted.fit_, self.fit_)
