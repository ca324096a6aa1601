"""The threshold model ``P(Y_pi > y | theta) = F(alpha_i (theta - x'gamma_i - delta_i(y)))``.

This module holds the model description (:class:`ModelSpec`) and the
per-item response distribution: survival function, cdf, density, quantile
function, moments, simulation, category probabilities for discretized
responses and the transformed total score.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .difficulty import DifficultySpec, ItemParams
from .exceptions import DomainError, MomentDivergenceError
from .families import Gompertz, Gumbel, Normal, ResponseFamily, get_family
from .quadrature import unit_interval_rule

__all__ = [
    "ObservationMode",
    "ModelSpec",
    "PersonContext",
    "survival",
    "response_cdf",
    "response_pdf",
    "response_logpdf",
    "response_quantile",
    "central_moment",
    "simulate",
    "simulate_responses",
    "discrete_pmf",
    "transformed_total_score",
    "density_grid",
]


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class ObservationMode:
    """How responses are observed.

    ``continuous`` responses are modelled through the density.  ``discrete``
    responses are category codes ``1..m`` obtained by cutting the latent
    continuous response at the half-integers ``1.5, ..., m - 0.5``.
    """

    kind: str = "continuous"
    m: int | None = None

    def __post_init__(self):
        kind = str(self.kind).strip().lower()
        if kind not in ("continuous", "discrete"):
            raise ValueError(f"observation mode must be 'continuous' or 'discrete', got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == "discrete":
            if self.m is None or int(self.m) != self.m or int(self.m) < 2:
                raise ValueError("discrete mode requires an integer category count m >= 2")
            object.__setattr__(self, "m", int(self.m))
        else:
            object.__setattr__(self, "m", None)

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    @property
    def boundaries(self) -> np.ndarray:
        """Interior category boundaries ``k + 1/2`` for ``k = 1..m-1``."""
        return np.arange(1, self.m) + 0.5

    def to_dict(self) -> dict:
        return {"kind": self.kind, "m": self.m} if self.is_discrete else {"kind": self.kind}

    @classmethod
    def continuous(cls):
        return cls("continuous")

    @classmethod
    def discrete(cls, m: int):
        return cls("discrete", m)


@dataclass(frozen=True)
class PersonContext:
    theta: float = 0.0
    covariates: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        cov = tuple(float(v) for v in np.atleast_1d(np.asarray(self.covariates, dtype=float)))
        object.__setattr__(self, "covariates", cov)


@dataclass(frozen=True)
class ModelSpec:
    """A fully specified threshold model TM(F, {delta_i}).

    Args:
        family: Response function, a :class:`ResponseFamily` or its name.
        difficulty: Shared difficulty transform.
        items: Item parameters, one entry per item.
        covariate_dim: Number of person covariates; every item carries a
            ``gamma`` vector of this length.
        mode: Continuous or discrete observation.
    """

    family: ResponseFamily
    difficulty: DifficultySpec
    items: tuple[ItemParams, ...]
    covariate_dim: int = 0
    mode: ObservationMode = field(default_factory=ObservationMode)

    def __post_init__(self):
        object.__setattr__(self, "family", get_family(self.family))
        difficulty = self.difficulty
        if isinstance(difficulty, str):
            difficulty = DifficultySpec(difficulty)
        elif isinstance(difficulty, dict):
            difficulty = DifficultySpec(**difficulty)
        object.__setattr__(self, "difficulty", difficulty)
        mode = self.mode
        if isinstance(mode, str):
            mode = ObservationMode(mode)
        object.__setattr__(self, "mode", mode)
        q = int(self.covariate_dim)
        items = []
        for it in self.items:
            if isinstance(it, dict):
                it = ItemParams(**it)
            if len(it.gamma) == 0 and q > 0:
                it = ItemParams(it.alpha, it.delta0, it.delta, (0.0,) * q)
            if len(it.gamma) != q:
                raise ValueError(f"item has {len(it.gamma)} covariate effects, expected {q}")
            items.append(it)
        if not items:
            raise ValueError("a model needs at least one item")
        object.__setattr__(self, "items", tuple(items))
        object.__setattr__(self, "covariate_dim", q)
        if mode.is_discrete:
            lo, hi = difficulty.support
            if difficulty.kind == "logit" and (difficulty.lo != 1.0 or difficulty.hi != mode.m):
                raise ValueError(
                    f"discrete mode with m={mode.m} categories needs logit bounds lo=1, hi={mode.m}"
                )
            if not (lo < 1.5 and mode.m - 0.5 < hi):
                raise ValueError("category boundaries fall outside the difficulty support")

    @property
    def n_items(self) -> int:
        return len(self.items)

    @cached_property
    def alpha(self) -> np.ndarray:
        return np.array([it.alpha for it in self.items])

    @cached_property
    def delta0(self) -> np.ndarray:
        return np.array([it.delta0 for it in self.items])

    @cached_property
    def delta(self) -> np.ndarray:
        return np.array([it.delta for it in self.items])

    @cached_property
    def gamma(self) -> np.ndarray:
        return np.array([it.gamma for it in self.items], dtype=float).reshape(self.n_items, self.covariate_dim)

    def replace(self, **changes) -> "ModelSpec":
        kw = dict(family=self.family, difficulty=self.difficulty, items=self.items,
                  covariate_dim=self.covariate_dim, mode=self.mode)
        kw.update(changes)
        return ModelSpec(**kw)

    def to_dict(self) -> dict:
        return {
            "family": self.family.name,
            "difficulty": self.difficulty.to_dict(),
            "observation_mode": self.mode.to_dict(),
            "covariate_dim": self.covariate_dim,
            "items": [it.to_dict() for it in self.items],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        mode = d.get("observation_mode", {"kind": "continuous"})
        if isinstance(mode, dict):
            mode = ObservationMode(**mode)
        return cls(
            family=d["family"],
            difficulty=DifficultySpec(**d["difficulty"]) if isinstance(d["difficulty"], dict)
            else DifficultySpec(d["difficulty"]),
            items=tuple(ItemParams(**it) for it in d["items"]),
            covariate_dim=int(d.get("covariate_dim", 0)),
            mode=mode,
        )


# --------------------------------------------------------------------------
# helpers


def _effective_theta(spec: ModelSpec, i: int, person) -> np.ndarray:
    """``theta - x'gamma_i``; ``person`` may be a PersonContext, a number or an array."""
    if isinstance(person, PersonContext):
        x = np.asarray(person.covariates, dtype=float)
        if x.size != spec.covariate_dim:
            raise ValueError(f"person has {x.size} covariates, model expects {spec.covariate_dim}")
        shift = float(x @ spec.gamma[i]) if x.size else 0.0
        return np.asarray(person.theta - shift)
    return np.asarray(person, dtype=float)


def _item(spec: ModelSpec, i: int) -> ItemParams:
    if not 0 <= i < spec.n_items:
        raise IndexError(f"item index {i} out of range for {spec.n_items} items")
    return spec.items[i]


def _margin(spec, i, theta_eff, gy):
    it = spec.items[i]
    return it.alpha * (theta_eff - it.delta0 - it.delta * gy)


# --------------------------------------------------------------------------
# distribution of a single response


def survival(spec: ModelSpec, item_index: int, person, y):
    """``P(Y > y)``."""
    _item(spec, item_index)
    gy = spec.difficulty._g(spec.difficulty.check_support(y))
    eta = _margin(spec, item_index, _effective_theta(spec, item_index, person), gy)
    return _out(spec.family._cdf(eta))


def response_cdf(spec: ModelSpec, item_index: int, person, y):
    """``P(Y <= y)``, computed as the upper tail of F to avoid cancellation."""
    _item(spec, item_index)
    gy = spec.difficulty._g(spec.difficulty.check_support(y))
    eta = _margin(spec, item_index, _effective_theta(spec, item_index, person), gy)
    return _out(spec.family._sf(eta))


def response_logpdf(spec: ModelSpec, item_index: int, person, y):
    it = _item(spec, item_index)
    d = spec.difficulty
    y = d.check_support(y)
    eta = _margin(spec, item_index, _effective_theta(spec, item_index, person), d._g(y))
    return _out(spec.family._logpdf(eta) + np.log(it.alpha * it.delta) + d._log_g_prime(y))


def response_pdf(spec: ModelSpec, item_index: int, person, y):
    """Density ``f(eta) * alpha * delta * g'(y)``."""
    return _out(np.exp(response_logpdf(spec, item_index, person, y)))


def _quantile_from_pair(spec, i, theta_eff, q, qc):
    it = spec.items[i]
    # F^{-1}(1 - q) evaluated from the complement pair (qc, q)
    z = spec.family._quantile_pair(qc, q)
    x = theta_eff - z / it.alpha
    return spec.difficulty._g_inv((x - it.delta0) / it.delta)


def response_quantile(spec: ModelSpec, item_index: int, person, q):
    """Quantile function ``delta_i^{-1}(theta - F^{-1}(1 - q) / alpha_i)``."""
    _item(spec, item_index)
    q = np.asarray(q, dtype=float)
    if np.any(~(q > 0)) or np.any(~(q < 1)):
        raise DomainError("quantile level must lie in (0, 1)")
    theta_eff = _effective_theta(spec, item_index, person)
    return _out(_quantile_from_pair(spec, item_index, theta_eff, q, 1.0 - q))


# --------------------------------------------------------------------------
# moments


def _mgf(family: ResponseFamily, s: float, strict: bool = True) -> float:
    """``E exp(s Z)`` for ``Z ~ F``."""
    if isinstance(family, Normal):
        return math.exp(0.5 * s * s)
    if isinstance(family, Gumbel):
        if s >= 1:
            raise MomentDivergenceError("Gumbel moment generating function diverges for s >= 1")
        return float(gamma_fn(1.0 - s))
    if isinstance(family, Gompertz):
        if s <= -1:
            raise MomentDivergenceError(
                "moment diverges: Gompertz response function with log difficulty "
                "needs k < alpha * delta"
            )
        return float(gamma_fn(1.0 + s))
    raise TypeError(f"no closed form for {family!r}")


def _family_central_moment(family: ResponseFamily, k: int) -> float:
    """``E (mu_F - Z)^k`` for ``Z ~ F``."""
    if k == 1:
        return 0.0
    if k == 2:
        return family.var
    if isinstance(family, Normal):
        return 0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2)))
    q, qc, w = unit_interval_rule()
    z = family._quantile_pair(q, qc)
    return float(np.sum(w * (family.mean - z) ** k))


def _closed_form_moment(spec, i, theta_eff, k):
    it = spec.items[i]
    fam = spec.family
    ad = it.alpha * it.delta
    kind = spec.difficulty.kind
    if kind == "linear":
        if k == 1:
            return (theta_eff - it.delta0) / it.delta - fam.mean / ad
        return np.full_like(theta_eff, _family_central_moment(fam, k) / ad**k, dtype=float)
    if kind == "log":
        s = -1.0 / ad
        scale = np.exp((theta_eff - it.delta0) / it.delta)
        c1 = _mgf(fam, s)
        if k == 1:
            return c1 * scale
        # E(e^{sZ} - c1)^k by binomial expansion
        ck = sum(math.comb(k, j) * _mgf(fam, j * s) * (-c1) ** (k - j) for j in range(k + 1))
        return ck * scale**k
    raise TypeError("closed form moments exist only for linear and log difficulty")


def _quadrature_moment(spec, i, theta_eff, k, h=1.0 / 16, chunk=4096):
    q, qc, w = unit_interval_rule(h)
    theta_eff = np.atleast_1d(theta_eff)
    out = np.empty(theta_eff.shape, dtype=float)
    flat_t = theta_eff.reshape(-1)
    flat_o = out.reshape(-1)
    for start in range(0, flat_t.size, chunk):
        t = flat_t[start:start + chunk, None]
        Q = _quantile_from_pair(spec, i, t, q[None, :], qc[None, :])
        with np.errstate(over="ignore", invalid="ignore"):
            mu = Q @ w
            if k == 1:
                flat_o[start:start + chunk] = mu
            else:
                flat_o[start:start + chunk] = ((Q - mu[:, None]) ** k) @ w
    return out


def _check_moment_exists(spec, i, k):
    if spec.difficulty.kind == "log" and isinstance(spec.family, Gompertz):
        it = spec.items[i]
        if k >= it.alpha * it.delta:
            raise MomentDivergenceError(
                f"moment of order {k} does not exist for item {i}: Gompertz response "
                f"function with log difficulty requires k < alpha*delta = {it.alpha * it.delta:g}"
            )


def central_moment(spec: ModelSpec, item_index: int, person, k: int = 1, method: str = "auto"):
    """Mean (``k=1``) or ``k``-th central moment of the response.

    Moments are integrals of the quantile function over ``(0, 1)``.  With
    ``method="quadrature"`` they are evaluated numerically with a
    double-exponential rule; ``"closed"`` uses the analytic expressions
    available for linear and log difficulty; ``"auto"`` picks the closed
    form when it exists.

    Raises:
        MomentDivergenceError: if the moment is infinite or the quadrature
            does not settle.
    """
    _item(spec, item_index)
    k = int(k)
    if k < 1:
        raise ValueError("moment order must be >= 1")
    _check_moment_exists(spec, item_index, k)
    theta_eff = _effective_theta(spec, item_index, person)
    if method == "auto":
        method = "closed" if spec.difficulty.kind in ("linear", "log") else "quadrature"
    if method == "closed":
        return _out(_closed_form_moment(spec, item_index, np.asarray(theta_eff, float), k))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    fine = _quadrature_moment(spec, item_index, theta_eff, k, h=1.0 / 16)
    coarse = _quadrature_moment(spec, item_index, theta_eff, k, h=1.0 / 8)
    scale = np.maximum(np.abs(fine), 1.0)
    if not np.all(np.isfinite(fine)) or np.any(np.abs(fine - coarse) > 1e-6 * scale):
        raise MomentDivergenceError(f"quadrature for moment of order {k} did not converge")
    return _out(fine.reshape(np.shape(theta_eff)))


# --------------------------------------------------------------------------
# discrete observation


def _cell_logprob(family: ResponseFamily, upper, lower):
    """``log(F(upper) - F(lower))`` for ``upper > lower``, accurate in both tails.

    ``upper`` may be ``+inf`` and ``lower`` may be ``-inf``.
    """
    upper, lower = np.broadcast_arrays(np.asarray(upper, float), np.asarray(lower, float))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # lower tail: log F(u) + log(1 - F(l)/F(u))
        lfu = family._logcdf(upper)
        lfl = family._logcdf(lower)
        via_cdf = lfu + np.log(-np.expm1(lfl - lfu))
        # upper tail: log S(l) + log(1 - S(u)/S(l))
        lsu = family._logsf(upper)
        lsl = family._logsf(lower)
        via_sf = lsl + np.log(-np.expm1(lsu - lsl))
    use_sf = (lower + upper) > 2.0 * family.mean
    out = np.where(use_sf, via_sf, via_cdf)
    out = np.where(np.isneginf(lower), lfu, out)
    out = np.where(np.isposinf(upper), lsl, out)
    return out


def _discrete_logpmf_all(spec: ModelSpec, i: int, theta_eff) -> np.ndarray:
    """Log category probabilities, shape ``theta_eff.shape + (m,)``."""
    it = spec.items[i]
    gb = spec.difficulty._g(spec.mode.boundaries)
    theta_eff = np.asarray(theta_eff, dtype=float)[..., None]
    eta = it.alpha * (theta_eff - it.delta0 - it.delta * gb)  # decreasing in k
    inf = np.full(theta_eff.shape, np.inf)
    upper = np.concatenate([inf, eta], axis=-1)
    lower = np.concatenate([eta, -inf], axis=-1)
    return _cell_logprob(spec.family, upper, lower)


def discrete_pmf(spec: ModelSpec, item_index: int, person) -> np.ndarray:
    """Category probabilities ``P(Y = k)``, ``k = 1..m``."""
    if not spec.mode.is_discrete:
        raise ValueError("discrete_pmf requires a model in discrete observation mode")
    _item(spec, item_index)
    theta_eff = _effective_theta(spec, item_index, person)
    return np.exp(_discrete_logpmf_all(spec, item_index, theta_eff))


# --------------------------------------------------------------------------
# simulation


def _person_arrays(spec, persons):
    theta = np.array([p.theta if isinstance(p, PersonContext) else float(p) for p in persons])
    x = np.zeros((theta.size, spec.covariate_dim))
    for r, p in enumerate(persons):
        if isinstance(p, PersonContext):
            if len(p.covariates) != spec.covariate_dim:
                raise ValueError(
                    f"person {r} has {len(p.covariates)} covariates, model expects {spec.covariate_dim}"
                )
            if spec.covariate_dim:
                x[r] = p.covariates
        elif spec.covariate_dim:
            raise ValueError("persons must be PersonContext objects when the model has covariates")
    return theta, x


def simulate_responses(spec: ModelSpec, theta, covariates=None, rng=None) -> np.ndarray:
    """Draw a ``P x I`` response matrix by inverse transform sampling.

    Continuous draws are ``Q(U)`` with ``U`` uniform; discrete draws are
    category codes sampled from :func:`discrete_pmf`.
    """
    rng = np.random.default_rng(rng)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    n = theta.size
    if covariates is None:
        if spec.covariate_dim:
            raise ValueError("model has covariates but none were supplied")
        shift = np.zeros((n, spec.n_items))
    else:
        covariates = np.asarray(covariates, dtype=float).reshape(n, spec.covariate_dim)
        shift = covariates @ spec.gamma.T
    theta_eff = theta[:, None] - shift
    u = rng.random((n, spec.n_items))
    u = np.where(u > 0, u, np.finfo(float).tiny)
    out = np.empty((n, spec.n_items))
    if spec.mode.is_discrete:
        for i in range(spec.n_items):
            pmf = np.exp(_discrete_logpmf_all(spec, i, theta_eff[:, i]))
            cum = np.cumsum(pmf, axis=1)[:, :-1]
            out[:, i] = 1 + np.sum(u[:, i, None] > cum, axis=1)
        return out
    for i in range(spec.n_items):
        out[:, i] = _quantile_from_pair(spec, i, theta_eff[:, i], u[:, i], 1.0 - u[:, i])
    return out


def simulate(spec: ModelSpec, persons: Sequence, seed=None) -> np.ndarray:
    """Simulate one response per person and item; deterministic given ``seed``."""
    theta, x = _person_arrays(spec, persons)
    return simulate_responses(spec, theta, x if spec.covariate_dim else None, np.random.default_rng(seed))


# --------------------------------------------------------------------------
# scores and plotting grids


def transformed_total_score(spec: ModelSpec, responses_row) -> float:
    """Sum of item difficulties evaluated at the responses.

    Missing responses (NaN) are skipped.
    """
    row = np.asarray(responses_row, dtype=float).reshape(-1)
    if row.size != spec.n_items:
        raise ValueError(f"expected {spec.n_items} responses, got {row.size}")
    obs = ~np.isnan(row)
    y = spec.difficulty.check_support(row[obs])
    return float(np.sum(spec.delta0[obs] + spec.delta[obs] * spec.difficulty._g(y)))


def transformed_total_scores(spec: ModelSpec, responses) -> np.ndarray:
    """Row-wise :func:`transformed_total_score` for a response matrix."""
    Y = np.asarray(responses, dtype=float)
    obs = ~np.isnan(Y)
    spec.difficulty.check_support(Y[obs])
    G = np.zeros_like(Y)
    G[obs] = spec.difficulty._g(Y[obs])
    return np.sum(np.where(obs, spec.delta0 + spec.delta * G, 0.0), axis=1)


def density_grid(spec: ModelSpec, thetas, y_grid, items=None) -> list[tuple[float, int, float, float]]:
    """Long-format ``(theta, item, y, density)`` rows for plotting.

    Grid points outside the open support are dropped with a warning.
    Covariates are taken as zero.
    """
    y_grid = np.asarray(y_grid, dtype=float).reshape(-1)
    keep = spec.difficulty.in_support(y_grid)
    if not np.all(keep):
        warnings.warn(
            f"{int(np.sum(~keep))} grid points outside the support {spec.difficulty.support} were trimmed",
            stacklevel=2,
        )
    y = y_grid[keep]
    items = range(spec.n_items) if items is None else items
    rows = []
    for t in np.atleast_1d(thetas):
        for i in items:
            dens = response_pdf(spec, i, float(t), y) if y.size else np.array([])
            rows.extend((float(t), int(i) + 1, float(a), float(b)) for a, b in zip(y, np.atleast_1d(dens)))
    return rows
