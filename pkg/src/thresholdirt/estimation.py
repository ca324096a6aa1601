"""Marginal maximum likelihood estimation of threshold models.

The latent trait is integrated out against ``N(0, sigma_theta**2)`` with
Gauss-Hermite quadrature.  Items are conditionally independent given the
trait, so each person's likelihood is a product over observed items, and
missing cells simply drop out of the product.

Parameters are optimized on an unconstrained scale: ``log alpha``,
``delta0``, ``log delta``, ``gamma`` and ``log sigma_theta``.  The first
item's discrimination is fixed at one for identification.  Gradients are
analytic; the Hessian used for standard errors is a central difference of
the analytic gradient.
"""
from __future__ import annotations

import hashlib
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from scipy.special import logsumexp

from .difficulty import ItemParams
from .exceptions import DataError, DomainError, NotNestedError, NumericalError
from .kernel import ModelSpec, _cell_logprob
from .quadrature import gauss_hermite_normal

__all__ = [
    "Dataset",
    "FitOptions",
    "FitResult",
    "ParamLayout",
    "marginal_loglik",
    "fit_mml",
    "eap_scores",
    "standard_errors",
    "lr_test",
    "LRTestResult",
]

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# data


@dataclass
class Dataset:
    """Responses of ``P`` persons on ``I`` items.

    Args:
        responses: ``P x I`` array.  Missing cells are NaN.  In discrete mode
            the observed values are category codes ``1..m``.
        covariates: Optional ``P x q`` person covariates (no missing values).
        item_names, covariate_names: Optional labels.
    """

    responses: np.ndarray
    covariates: np.ndarray | None = None
    item_names: list[str] | None = None
    covariate_names: list[str] | None = None

    def __post_init__(self):
        Y = np.array(self.responses, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.size == 0:
            raise DataError("responses must be a non-empty P x I matrix")
        self.responses = Y
        observed = ~np.isnan(Y)
        empty = np.flatnonzero(~observed.any(axis=1))
        if empty.size:
            raise DataError(f"person {int(empty[0])} (0-based row) has no observed responses")
        if self.covariates is not None:
            X = np.array(self.covariates, dtype=float)
            if X.ndim == 1:
                X = X[:, None]
            if X.shape[0] != Y.shape[0]:
                raise DataError(f"covariates have {X.shape[0]} rows, responses have {Y.shape[0]}")
            if not np.all(np.isfinite(X)):
                raise DataError("covariates must be finite (missing covariates are not supported)")
            self.covariates = X
        if self.item_names is None:
            self.item_names = [f"item{i + 1}" for i in range(Y.shape[1])]
        if self.covariate_names is None and self.covariates is not None:
            self.covariate_names = [f"x{j + 1}" for j in range(self.covariates.shape[1])]

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.responses)

    @property
    def n_persons(self) -> int:
        return self.responses.shape[0]

    @property
    def n_items(self) -> int:
        return self.responses.shape[1]

    @property
    def n_covariates(self) -> int:
        return 0 if self.covariates is None else self.covariates.shape[1]

    def fingerprint(self) -> str:
        """Hash of the response matrix.

        Covariates are left out so that fits with and without covariates on the
        same responses can be compared; nesting of covariate sets is checked
        by name.
        """
        h = hashlib.sha256(np.ascontiguousarray(self.responses).tobytes())
        return h.hexdigest()[:16]

    def validate_for(self, spec: ModelSpec) -> None:
        """Raise :class:`DataError` if the data cannot be modelled by ``spec``."""
        if self.n_items != spec.n_items:
            raise DataError(f"data have {self.n_items} items, model has {spec.n_items}")
        if self.n_covariates != spec.covariate_dim:
            raise DataError(f"data have {self.n_covariates} covariates, model expects {spec.covariate_dim}")
        Y = self.responses
        obs = ~np.isnan(Y)
        if spec.mode.is_discrete:
            codes = Y[obs]
            bad = (codes != np.round(codes)) | (codes < 1) | (codes > spec.mode.m)
            if np.any(bad):
                p, i = np.argwhere(obs)[np.flatnonzero(bad)[0]]
                raise DataError(
                    f"response at row {p}, item {i} is {Y[p, i]!r}; expected a category code in 1..{spec.mode.m}"
                )
        else:
            inside = spec.difficulty.in_support(np.where(obs, Y, np.nan))
            bad = obs & ~inside
            if np.any(bad):
                p, i = np.argwhere(bad)[0]
                a, b = spec.difficulty.support
                raise DataError(
                    f"response {Y[p, i]!r} at row {p}, item {i} lies outside the support ({a}, {b})"
                )

    def check_variation(self) -> None:
        """Raise :class:`DataError` for items whose observed responses are all equal."""
        Y = self.responses
        obs = ~np.isnan(Y)
        for i in range(self.n_items):
            col = Y[obs[:, i], i]
            if col.size < 2 or np.all(col == col[0]):
                raise DataError(f"item {i} ({self.item_names[i]}) has zero variance in the observed responses")


# --------------------------------------------------------------------------
# options, layout, results


@dataclass
class FitOptions:
    gh_nodes: int = 40
    max_iterations: int = 1000
    gradient_tolerance: float = 1e-5
    relative_loglik_tolerance: float = 1e-8
    common_slope: bool = False
    fixed_alpha: bool = False
    seed: int | None = 0
    n_restarts: int = 3
    compute_se: bool = True
    polish: bool = True

    def __post_init__(self):
        if int(self.gh_nodes) < 5:
            raise ValueError("gh_nodes must be at least 5")
        self.gh_nodes = int(self.gh_nodes)


class ParamLayout:
    """Maps between item parameters and the unconstrained optimization vector.

    Vector order: ``log alpha`` for items 2..I (absent with ``fixed_alpha``),
    ``delta0`` for all items, ``log delta`` (one entry with
    ``common_slope``), ``gamma`` row by row, ``log sigma_theta``.
    """

    def __init__(self, n_items: int, n_cov: int = 0, fixed_alpha: bool = False, common_slope: bool = False):
        self.I = int(n_items)
        self.q = int(n_cov)
        self.fixed_alpha = bool(fixed_alpha)
        self.common_slope = bool(common_slope)
        n_alpha = 0 if self.fixed_alpha else self.I - 1
        n_delta = 1 if self.common_slope else self.I
        sizes = [n_alpha, self.I, n_delta, self.I * self.q, 1]
        edges = np.cumsum([0] + sizes)
        self._alpha = slice(edges[0], edges[1])
        self._delta0 = slice(edges[1], edges[2])
        self._delta = slice(edges[2], edges[3])
        self._gamma = slice(edges[3], edges[4])
        self._sigma = edges[4]
        self.size = int(edges[5])

    def unpack(self, x):
        x = np.asarray(x, dtype=float)
        alpha = np.ones(self.I)
        if not self.fixed_alpha:
            alpha[1:] = np.exp(x[self._alpha])
        delta0 = x[self._delta0].copy()
        delta = np.exp(np.broadcast_to(x[self._delta], (self.I,))).copy()
        gamma = x[self._gamma].reshape(self.I, self.q)
        sigma = float(np.exp(x[self._sigma]))
        return alpha, delta0, delta, gamma, sigma

    def pack(self, alpha, delta0, delta, gamma, sigma):
        x = np.empty(self.size)
        if not self.fixed_alpha:
            x[self._alpha] = np.log(np.asarray(alpha, float)[1:])
        x[self._delta0] = delta0
        ld = np.log(np.asarray(delta, float))
        x[self._delta] = ld.mean() if self.common_slope else ld
        x[self._gamma] = np.asarray(gamma, float).reshape(-1)
        x[self._sigma] = np.log(sigma)
        return x

    def reduce_gradient(self, g_logalpha, g_delta0, g_logdelta, g_gamma, g_logsigma):
        """Chain full per-item gradients down to the free parameters."""
        g = np.empty(self.size)
        if not self.fixed_alpha:
            g[self._alpha] = g_logalpha[1:]
        g[self._delta0] = g_delta0
        g[self._delta] = g_logdelta.sum() if self.common_slope else g_logdelta
        g[self._gamma] = g_gamma.reshape(-1)
        g[self._sigma] = g_logsigma
        return g

    def names(self, item_names=None, covariate_names=None):
        items = item_names or [f"item{i + 1}" for i in range(self.I)]
        covs = covariate_names or [f"x{j + 1}" for j in range(self.q)]
        out = []
        if not self.fixed_alpha:
            out += [f"alpha[{items[i]}]" for i in range(1, self.I)]
        out += [f"delta0[{it}]" for it in items]
        out += ["delta[common]"] if self.common_slope else [f"delta[{it}]" for it in items]
        out += [f"gamma[{it},{c}]" for it in items for c in covs]
        out += ["sigma_theta"]
        return out

    def log_scaled(self) -> np.ndarray:
        """Boolean mask of entries stored on the log scale."""
        m = np.zeros(self.size, dtype=bool)
        m[self._alpha] = True
        m[self._delta] = True
        m[self._sigma] = True
        return m


@dataclass
class FitResult:
    spec: ModelSpec
    sigma_theta: float
    loglik: float
    n_free_params: int
    converged: bool
    iterations: int
    gradient_norm: float
    param_names: list[str]
    x: np.ndarray
    std_errors: dict[str, float] = field(default_factory=dict)
    z_values: dict[str, float] = field(default_factory=dict)
    se_available: bool = False
    common_slope: bool = False
    fixed_alpha: bool = False
    gh_nodes: int = 40
    n_persons: int = 0
    data_fingerprint: str = ""
    item_names: list[str] | None = None
    covariate_names: list[str] | None = None
    message: str = ""
    loglik_history: list[float] = field(default_factory=list)
    n_starts: int = 1

    @property
    def item_estimates(self) -> tuple[ItemParams, ...]:
        return self.spec.items

    @property
    def layout(self) -> ParamLayout:
        return ParamLayout(self.spec.n_items, self.spec.covariate_dim, self.fixed_alpha, self.common_slope)

    @property
    def aic(self) -> float:
        return -2.0 * self.loglik + 2.0 * self.n_free_params

    def natural_estimates(self) -> dict[str, float]:
        """Free parameters on their natural scale, keyed by name."""
        lay = self.layout
        vals = np.where(lay.log_scaled(), np.exp(self.x), self.x)
        return dict(zip(self.param_names, map(float, vals)))

    def to_dict(self) -> dict:
        items = self.item_names or [f"item{i + 1}" for i in range(self.spec.n_items)]
        covs = self.covariate_names or [f"x{j + 1}" for j in range(self.spec.covariate_dim)]
        return {
            "model": self.spec.to_dict(),
            "constraints": {"alpha1_fixed": True, "fixed_alpha": self.fixed_alpha,
                            "common_slope": self.common_slope},
            "item_names": items,
            "covariate_names": covs,
            "estimates": [
                {"item": items[i], "alpha": it.alpha, "delta0": it.delta0, "delta": it.delta,
                 "gamma": dict(zip(covs, it.gamma))}
                for i, it in enumerate(self.spec.items)
            ],
            "sigma_theta": self.sigma_theta,
            "loglik": self.loglik,
            "n_free_params": self.n_free_params,
            "aic": self.aic,
            "parameters": [
                {"name": n, "estimate": v, "std_error": self.std_errors.get(n),
                 "z_value": self.z_values.get(n)}
                for n, v in self.natural_estimates().items()
            ],
            "se_available": self.se_available,
            "convergence": {"converged": self.converged, "iterations": self.iterations,
                            "gradient_norm": self.gradient_norm, "message": self.message,
                            "n_starts": self.n_starts},
            "gh_nodes": self.gh_nodes,
            "n_persons": self.n_persons,
            "data_fingerprint": self.data_fingerprint,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        model = dict(d["model"])
        covs = d.get("covariate_names") or []
        items = []
        for e in d["estimates"]:
            g = e.get("gamma", {})
            gamma = [g[c] for c in covs] if isinstance(g, dict) else list(g)
            items.append({"alpha": e["alpha"], "delta0": e["delta0"], "delta": e["delta"], "gamma": gamma})
        model["items"] = items
        spec = ModelSpec.from_dict(model)
        c = d.get("constraints", {})
        lay = ParamLayout(spec.n_items, spec.covariate_dim, c.get("fixed_alpha", False),
                          c.get("common_slope", False))
        x = lay.pack(spec.alpha, spec.delta0, spec.delta, spec.gamma, d["sigma_theta"])
        params = d.get("parameters", [])
        conv = d.get("convergence", {})
        return cls(
            spec=spec, sigma_theta=float(d["sigma_theta"]), loglik=float(d["loglik"]),
            n_free_params=int(d["n_free_params"]), converged=bool(conv.get("converged", False)),
            iterations=int(conv.get("iterations", 0)), gradient_norm=float(conv.get("gradient_norm", np.nan)),
            param_names=[p["name"] for p in params] or lay.names(d.get("item_names"), covs),
            x=x,
            std_errors={p["name"]: p["std_error"] for p in params if p.get("std_error") is not None},
            z_values={p["name"]: p["z_value"] for p in params if p.get("z_value") is not None},
            se_available=bool(d.get("se_available", False)),
            common_slope=bool(c.get("common_slope", False)), fixed_alpha=bool(c.get("fixed_alpha", False)),
            gh_nodes=int(d.get("gh_nodes", 40)), n_persons=int(d.get("n_persons", 0)),
            data_fingerprint=d.get("data_fingerprint", ""), item_names=d.get("item_names"),
            covariate_names=covs or None, message=conv.get("message", ""),
            n_starts=int(conv.get("n_starts", 1)),
        )


# --------------------------------------------------------------------------
# likelihood engine


class _Likelihood:
    """Marginal log-likelihood and gradient for one model structure and dataset."""

    def __init__(self, spec: ModelSpec, data: Dataset, gh_nodes: int):
        data.validate_for(spec)
        self.family = spec.family
        self.difficulty = spec.difficulty
        self.discrete = spec.mode.is_discrete
        unit, self.w = gauss_hermite_normal(gh_nodes, 1.0)
        self.z = unit / np.sqrt(2.0)
        self.logw = np.log(self.w)
        Y = data.responses
        self.M = ~np.isnan(Y)
        self.X = data.covariates
        self.P, self.I = Y.shape
        self.q = spec.covariate_dim
        if self.discrete:
            m = spec.mode.m
            codes = np.where(self.M, Y, 1).astype(int)
            gb = self.difficulty._g(spec.mode.boundaries)
            gb_ext = np.concatenate([[np.nan], gb, [np.nan]])  # index = boundary number 0..m
            self.G_up = gb_ext[codes - 1]
            self.G_lo = gb_ext[codes]
            self.top = codes == 1       # no upper-margin term
            self.bottom = codes == m    # no lower-margin term
        else:
            Yo = np.where(self.M, Y, 1.0 if self.difficulty.kind != "logit" else
                          0.5 * (self.difficulty.lo + self.difficulty.hi))
            self.G = np.where(self.M, self.difficulty._g(Yo), 0.0)
            self.logJ = np.where(self.M, self.difficulty._log_g_prime(Yo), 0.0)

    def _shift(self, gamma):
        if self.q == 0:
            return np.zeros((self.P, self.I))
        return self.X @ gamma.T

    def evaluate(self, alpha, delta0, delta, gamma, sigma, grad=True, posterior=False):
        theta = np.sqrt(2.0) * sigma * self.z
        base = -self._shift(gamma) - delta0
        a3 = alpha[None, :, None]
        fam = self.family
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.discrete:
                eta_up = a3 * (theta[None, None, :] + (base - delta * self.G_up)[:, :, None])
                eta_lo = a3 * (theta[None, None, :] + (base - delta * self.G_lo)[:, :, None])
                eta_up = np.where(self.top[:, :, None], np.inf, eta_up)
                eta_lo = np.where(self.bottom[:, :, None], -np.inf, eta_lo)
                cell = _cell_logprob(fam, eta_up, eta_lo)
            else:
                eta = a3 * (theta[None, None, :] + (base - delta * self.G)[:, :, None])
                cell = fam._logpdf(eta) + (np.log(alpha) + np.log(delta))[None, :, None] + self.logJ[:, :, None]
            cell = np.where(self.M[:, :, None], cell, 0.0)
        ell = cell.sum(axis=1)
        a = self.logw[None, :] + ell
        L = logsumexp(a, axis=1)
        if not np.all(np.isfinite(L)):
            p = int(np.flatnonzero(~np.isfinite(L))[0])
            bad_items = np.flatnonzero(np.all(~np.isfinite(cell[p]), axis=1))
            item = int(bad_items[0]) if bad_items.size else -1
            raise NumericalError(f"non-finite marginal likelihood for person {p} (item {item})")
        total = float(L.sum())
        post = np.exp(a - L[:, None])
        out = {"loglik": total, "person_loglik": L}
        if posterior:
            out["posterior"] = post
            out["theta"] = theta
        if not grad:
            return out

        M = self.M
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.discrete:
                r_up = np.where(np.isfinite(eta_up), np.exp(fam._logpdf(eta_up) - cell), 0.0)
                r_lo = np.where(np.isfinite(eta_lo), np.exp(fam._logpdf(eta_lo) - cell), 0.0)
                D = r_up - r_lo
                E = np.where(r_up > 0, r_up * eta_up, 0.0) - np.where(r_lo > 0, r_lo * eta_lo, 0.0)
                H = np.where(r_up > 0, r_up * self.G_up[:, :, None], 0.0) \
                    - np.where(r_lo > 0, r_lo * self.G_lo[:, :, None], 0.0)
                w = post[:, None, :]
                A = _wsum(w, D, M)
                B = _wsum(w, E, M)
                Hs = _wsum(w, H, M)
                C = _wsum(w, D * theta[None, None, :], M)
                g_logalpha = B.sum(axis=0)
                g_delta0 = -alpha * A.sum(axis=0)
                g_logdelta = -alpha * delta * Hs.sum(axis=0)
            else:
                psi = fam._dlogpdf(eta)
                w = post[:, None, :]
                A = _wsum(w, psi, M)
                B = _wsum(w, psi * eta, M)
                C = _wsum(w, psi * theta[None, None, :], M)
                n_obs = M.sum(axis=0)
                g_logalpha = B.sum(axis=0) + n_obs
                g_delta0 = -alpha * A.sum(axis=0)
                g_logdelta = -alpha * delta * (self.G * A).sum(axis=0) + n_obs
        g_gamma = -(alpha[:, None] * (A.T @ self.X)) if self.q else np.zeros((self.I, 0))
        g_logsigma = float((alpha * C.sum(axis=0)).sum())
        out["grad"] = (g_logalpha, g_delta0, g_logdelta, g_gamma, g_logsigma)
        return out


def _wsum(w, v, M):
    """Posterior-weighted node sum, zero for missing cells and zero weights."""
    out = np.einsum("pn,pin->pi", w[:, 0, :], v)
    if not np.all(np.isfinite(out[M])):
        # overflowed scores at nodes with vanishing posterior weight
        out = np.where(w > 0, w * v, 0.0).sum(axis=2)
    return np.where(M, out, 0.0)


def _arrays_from_items(items, q):
    alpha = np.array([it.alpha for it in items])
    delta0 = np.array([it.delta0 for it in items])
    delta = np.array([it.delta for it in items])
    gamma = np.array([it.gamma for it in items], dtype=float).reshape(len(items), q)
    return alpha, delta0, delta, gamma


def marginal_loglik(spec: ModelSpec, params, sigma_theta: float, dataset: Dataset, gh_nodes: int = 40) -> float:
    """Marginal log-likelihood of ``dataset``.

    Args:
        spec: Model structure; its items are used when ``params`` is None.
        params: Optional sequence of :class:`ItemParams` overriding ``spec.items``.
        sigma_theta: Standard deviation of the latent trait.
        dataset: Observed responses.
        gh_nodes: Number of Gauss-Hermite nodes.
    """
    if not sigma_theta > 0:
        raise ValueError("sigma_theta must be positive")
    if params is not None:
        spec = spec.replace(items=tuple(params))
    lik = _Likelihood(spec, dataset, gh_nodes)
    return lik.evaluate(*_arrays_from_items(spec.items, spec.covariate_dim), sigma_theta, grad=False)["loglik"]


# --------------------------------------------------------------------------
# fitting


class _Objective:
    """Negative log-likelihood on the free-parameter vector, with a one-point cache."""

    def __init__(self, lik: _Likelihood, layout: ParamLayout):
        self.lik = lik
        self.layout = layout
        self._key = None
        self._val = None
        self.n_eval = 0

    def __call__(self, x):
        key = x.tobytes()
        if key != self._key:
            alpha, delta0, delta, gamma, sigma = self.layout.unpack(x)
            try:
                res = self.lik.evaluate(alpha, delta0, delta, gamma, sigma)
                f = -res["loglik"]
                g = -self.layout.reduce_gradient(*res["grad"])
                if not np.all(np.isfinite(g)):
                    raise NumericalError("non-finite gradient")
            except (NumericalError, FloatingPointError):
                f, g = np.inf, np.zeros_like(x)
            self._key, self._val = key, (f, g)
            self.n_eval += 1
        f, g = self._val
        return f, g.copy()

    def hessian(self, x, rel_step=1e-5):
        n = x.size
        H = np.empty((n, n))
        for j in range(n):
            h = rel_step * max(1.0, abs(x[j]))
            e = np.zeros(n)
            e[j] = h
            gp = self(x + e)[1]
            gm = self(x - e)[1]
            H[:, j] = (gp - gm) / (2.0 * h)
        return 0.5 * (H + H.T)


def _start_values(spec: ModelSpec, data: Dataset, layout: ParamLayout):
    Y = data.responses
    obs = ~np.isnan(Y)
    d = spec.difficulty
    if spec.mode.is_discrete:
        m = spec.mode.m
        vals = np.clip(np.where(obs, Y, 1.0), 1.25, m - 0.25)
        G = d._g(vals)
    else:
        G = d._g(np.where(obs, Y, np.nanmean(Y, axis=0)))
    gbar = np.array([G[obs[:, i], i].mean() for i in range(spec.n_items)])
    # E(delta_i(Y)) = theta - mu_F / alpha with alpha = delta = 1 and E(theta) = 0
    delta0 = -spec.family.mean - gbar
    I, q = spec.n_items, spec.covariate_dim
    return layout.pack(np.ones(I), delta0, np.ones(I), np.zeros((I, q)), 1.0)


def _newton_polish(obj: _Objective, x, max_steps=8, gtol=1e-9):
    f, g = obj(x)
    if np.max(np.abs(g)) < gtol:
        return x, f, g
    try:
        L = np.linalg.cholesky(obj.hessian(x))
    except np.linalg.LinAlgError:
        return x, f, g
    # Newton-chord iterations with the Hessian held fixed
    for _ in range(max_steps):
        if np.max(np.abs(g)) < gtol:
            break
        step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        t = 1.0
        while t > 1e-4:
            f_new, g_new = obj(x + t * step)
            if f_new <= f + 1e-12 * max(1.0, abs(f)):
                break
            t *= 0.5
        else:
            break
        if f_new > f:
            break
        x, f, g = x + t * step, f_new, g_new
    return x, f, g


def _run_quasi_newton(obj: _Objective, x0, options: FitOptions):
    history = []

    def callback(xk):
        history.append(-obj(xk)[0])

    res = optimize.minimize(
        obj, x0, jac=True, method="L-BFGS-B", callback=callback,
        options={"maxiter": options.max_iterations, "gtol": options.gradient_tolerance,
                 "ftol": options.relative_loglik_tolerance, "maxcor": 20},
    )
    x, f, g = res.x, *obj(res.x)
    rel_change = np.inf
    if len(history) >= 2:
        rel_change = abs(history[-1] - history[-2]) / max(abs(history[-1]), abs(history[-2]), 1.0)
    if options.polish and np.isfinite(f):
        x_p, f_p, g_p = _newton_polish(obj, x)
        if f_p <= f:
            if f_p < f:
                rel_change = min(rel_change, (f - f_p) / max(abs(f), 1.0))
                history.append(-f_p)
            x, f, g = x_p, f_p, g_p
    gnorm = float(np.max(np.abs(g))) if np.isfinite(f) else np.inf
    converged = bool(np.isfinite(f) and (gnorm < options.gradient_tolerance
                                         or rel_change < options.relative_loglik_tolerance))
    return x, f, gnorm, converged, int(res.nit), str(res.message), history


def fit_mml(spec: ModelSpec, dataset: Dataset, options: FitOptions | None = None) -> FitResult:
    """Fit item parameters and ``sigma_theta`` by marginal maximum likelihood.

    ``spec`` supplies the family, difficulty transform, observation mode and
    covariate dimension; its item values are ignored.  If the first run does
    not converge, up to ``options.n_restarts`` jittered restarts are tried
    and the best iterate is returned.

    Raises:
        DataError: if the data do not fit the model's support or an item has
            zero variance.
    """
    options = options or FitOptions()
    dataset.check_variation()
    lik = _Likelihood(spec, dataset, options.gh_nodes)
    layout = ParamLayout(spec.n_items, spec.covariate_dim, options.fixed_alpha, options.common_slope)
    obj = _Objective(lik, layout)
    x0 = _start_values(spec, dataset, layout)
    if not np.isfinite(obj(x0)[0]):
        raise NumericalError("log-likelihood is not finite at the starting values")

    best = _run_quasi_newton(obj, x0, options)
    n_starts = 1
    if not best[3] and options.n_restarts > 0:
        rng = np.random.default_rng(options.seed)
        for _ in range(options.n_restarts):
            n_starts += 1
            trial = _run_quasi_newton(obj, x0 + rng.normal(0.0, 0.1, size=x0.size), options)
            if trial[1] < best[1] or (trial[3] and not best[3] and trial[1] <= best[1] + 1e-9):
                best = trial
            if best[3]:
                break
    x, f, gnorm, converged, nit, message, history = best
    if not converged:
        warnings.warn(f"MML fit did not converge: {message} (gradient norm {gnorm:.3g})", stacklevel=2)

    alpha, delta0, delta, gamma, sigma = layout.unpack(x)
    items = tuple(ItemParams(alpha[i], delta0[i], delta[i], tuple(gamma[i])) for i in range(spec.n_items))
    fitted = spec.replace(items=items)
    result = FitResult(
        spec=fitted, sigma_theta=sigma, loglik=-float(f), n_free_params=layout.size,
        converged=converged, iterations=nit, gradient_norm=gnorm,
        param_names=layout.names(dataset.item_names, dataset.covariate_names), x=x,
        common_slope=options.common_slope, fixed_alpha=options.fixed_alpha, gh_nodes=options.gh_nodes,
        n_persons=dataset.n_persons, data_fingerprint=dataset.fingerprint(),
        item_names=list(dataset.item_names), covariate_names=dataset.covariate_names,
        message=message, loglik_history=history, n_starts=n_starts,
    )
    if options.compute_se:
        se, z, ok = _standard_errors_from(obj, layout, x, result.param_names)
        result.std_errors, result.z_values, result.se_available = se, z, ok
    return result


def _standard_errors_from(obj: _Objective, layout: ParamLayout, x, names):
    H = obj.hessian(x)  # Hessian of the negative log-likelihood
    try:
        np.linalg.cholesky(H)
        cov = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        warnings.warn("Hessian is not positive definite; standard errors unavailable", stacklevel=3)
        return {}, {}, False
    se_t = np.sqrt(np.diag(cov))
    logm = layout.log_scaled()
    est = np.where(logm, np.exp(x), x)
    se = np.where(logm, est * se_t, se_t)  # delta method for log-scale entries
    z = est / se
    return dict(zip(names, map(float, se))), dict(zip(names, map(float, z))), True


def standard_errors(spec: ModelSpec, fit: FitResult, dataset: Dataset):
    """Standard errors and z-values of the free parameters of ``fit``.

    Computed from a central-difference Hessian of the marginal log-likelihood
    on the optimization scale, then mapped to the natural scale by the delta
    method.  Fixed parameters (the first discrimination) have no entry.

    Returns:
        ``(std_errors, z_values)`` dictionaries keyed by parameter name; both
        are empty if the Hessian is not positive definite.
    """
    lik = _Likelihood(spec if spec is not None else fit.spec, dataset, fit.gh_nodes)
    obj = _Objective(lik, fit.layout)
    se, z, _ = _standard_errors_from(obj, fit.layout, fit.x, fit.param_names)
    return se, z


def eap_scores(spec: ModelSpec | None, fit: FitResult, dataset: Dataset):
    """Posterior means and standard deviations of the latent trait.

    The posterior is evaluated on the Gauss-Hermite grid of the fit.
    Returns ``(eap, posterior_sd)``.
    """
    spec = fit.spec if spec is None else spec.replace(items=fit.spec.items)
    lik = _Likelihood(spec, dataset, fit.gh_nodes)
    res = lik.evaluate(*_arrays_from_items(spec.items, spec.covariate_dim), fit.sigma_theta,
                       grad=False, posterior=True)
    post, theta = res["posterior"], res["theta"]
    eap = post @ theta
    var = np.maximum(post @ theta**2 - eap**2, 0.0)
    return eap, np.sqrt(var)


# --------------------------------------------------------------------------
# likelihood ratio tests


@dataclass(frozen=True)
class LRTestResult:
    statistic: float
    df: int
    p_value: float


def lr_test(fit_restricted: FitResult, fit_full: FitResult, slack: float = 1e-6) -> LRTestResult:
    """Likelihood ratio test of a restricted model against a larger one.

    Raises:
        NotNestedError: if the fits use different data, observation mode,
            response function or difficulty transform, or the restricted
            model is not a restriction of the full one.
    """
    r, f = fit_restricted, fit_full
    if r.spec.mode != f.spec.mode:
        raise NotNestedError("fits use different observation modes")
    if r.spec.family != f.spec.family or r.spec.difficulty != f.spec.difficulty:
        raise NotNestedError("fits use different response or difficulty functions")
    if r.n_persons != f.n_persons or (r.data_fingerprint and f.data_fingerprint
                                      and r.data_fingerprint != f.data_fingerprint):
        raise NotNestedError("fits were obtained on different datasets")
    if r.spec.n_items != f.spec.n_items:
        raise NotNestedError("fits have different numbers of items")
    if (f.fixed_alpha and not r.fixed_alpha) or (f.common_slope and not r.common_slope):
        raise NotNestedError("restricted fit relaxes a constraint of the full fit")
    r_cov = set(r.covariate_names or [])
    f_cov = set(f.covariate_names or [])
    if not r_cov <= f_cov:
        raise NotNestedError("restricted fit uses covariates absent from the full fit")
    df = f.n_free_params - r.n_free_params
    if df < 0:
        raise NotNestedError("restricted fit has more free parameters than the full fit")
    stat = 2.0 * (f.loglik - r.loglik)
    if stat < 0:
        if stat < -2.0 * slack * max(1.0, abs(f.loglik)):
            warnings.warn(f"negative likelihood ratio statistic {stat:.3g}; full fit may not be optimal",
                          stacklevel=2)
        stat = 0.0
    p = 1.0 if df == 0 or stat == 0 else float(stats.chi2.sf(stat, df))
    return LRTestResult(statistic=stat, df=df, p_value=p)
