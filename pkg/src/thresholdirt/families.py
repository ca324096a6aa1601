"""Response functions F for threshold models.

Three standardized families are supported: the standard normal, the Gumbel
(maximum value) law with ``F(y) = exp(-exp(-y))`` and the Gompertz (minimum
value) law with ``F(y) = 1 - exp(-exp(y))``.  The two extreme value laws are
mirror images: if ``Y`` has the Gumbel distribution then ``-Y`` is Gompertz,
so ``Gompertz.cdf(y) == 1 - Gumbel.cdf(-y)``.

All methods are vectorized over numpy arrays.  Besides the usual cdf, pdf and
quantile, each family exposes log-scale versions and the score
``d/dy log f(y)`` which the likelihood code needs for analytic gradients.
"""
from __future__ import annotations

import numpy as np
from scipy import special

from .exceptions import DomainError

__all__ = [
    "ResponseFamily",
    "Normal",
    "Gumbel",
    "Gompertz",
    "FAMILIES",
    "get_family",
    "cdf",
    "pdf",
    "quantile",
    "moments",
]

EULER_GAMMA = 0.57721566490153286061
PI2_6 = np.pi**2 / 6.0
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _finite(y):
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("response function argument must be finite")
    return y


def _probability(p, name="q"):
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0.0)) or np.any(~(p < 1.0)):
        raise DomainError(f"{name} must lie in the open interval (0, 1)")
    return p


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


class ResponseFamily:
    """A fixed, strictly increasing distribution function on the real line.

    Subclasses implement the ``_raw`` methods without argument checking; the
    public methods validate input and return floats for scalar input.
    """

    name: str = ""
    mean: float = 0.0
    var: float = 1.0

    # public, validated -------------------------------------------------
    def cdf(self, y):
        return _out(self._cdf(_finite(y)))

    def sf(self, y):
        return _out(self._sf(_finite(y)))

    def pdf(self, y):
        return _out(np.exp(self._logpdf(_finite(y))))

    def logpdf(self, y):
        return _out(self._logpdf(_finite(y)))

    def quantile(self, p):
        return _out(self._quantile(_probability(p)))

    def isf(self, s):
        """Inverse survival function, ``quantile(1 - s)`` without cancellation."""
        return _out(self._isf(_probability(s, "s")))

    def moments(self):
        return self.mean, self.var

    # raw, vectorized ---------------------------------------------------
    def _cdf(self, y):
        raise NotImplementedError

    def _sf(self, y):
        raise NotImplementedError

    def _logcdf(self, y):
        raise NotImplementedError

    def _logsf(self, y):
        raise NotImplementedError

    def _logpdf(self, y):
        raise NotImplementedError

    def _dlogpdf(self, y):
        raise NotImplementedError

    def _quantile(self, p):
        raise NotImplementedError

    def _isf(self, s):
        raise NotImplementedError

    def _quantile_pair(self, p, pc):
        """Quantile at ``p`` where ``pc = 1 - p`` is supplied separately.

        Keeps full relative precision in both tails, which matters for
        quadrature nodes that crowd against 0 and 1.
        """
        p = np.asarray(p, dtype=float)
        pc = np.asarray(pc, dtype=float)
        lower = p < 0.5
        out = np.empty(np.broadcast(p, pc).shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            out[...] = np.where(lower, self._quantile(np.where(lower, p, 0.5)),
                                self._isf(np.where(lower, 0.5, pc)))
        return out

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self).__name__)


class Normal(ResponseFamily):
    name = "normal"
    mean = 0.0
    var = 1.0

    def _cdf(self, y):
        return special.ndtr(y)

    def _sf(self, y):
        return special.ndtr(-y)

    def _logcdf(self, y):
        return special.log_ndtr(y)

    def _logsf(self, y):
        return special.log_ndtr(-y)

    def _logpdf(self, y):
        return -0.5 * y * y - _LOG_SQRT_2PI

    def _dlogpdf(self, y):
        return -y

    def _quantile(self, p):
        return special.ndtri(p)

    def _isf(self, s):
        return -special.ndtri(s)


class Gumbel(ResponseFamily):
    """Maximum value law, ``F(y) = exp(-exp(-y))``."""

    name = "gumbel"
    mean = EULER_GAMMA
    var = PI2_6

    def _cdf(self, y):
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(-y))

    def _sf(self, y):
        with np.errstate(over="ignore"):
            return -np.expm1(-np.exp(-y))

    def _logcdf(self, y):
        with np.errstate(over="ignore"):
            return -np.exp(-y)

    def _logsf(self, y):
        with np.errstate(over="ignore", divide="ignore"):
            return np.log(-np.expm1(-np.exp(-y)))

    def _logpdf(self, y):
        with np.errstate(over="ignore"):
            return -y - np.exp(-y)

    def _dlogpdf(self, y):
        with np.errstate(over="ignore"):
            return np.expm1(-y)

    def _quantile(self, p):
        return -np.log(-np.log(p))

    def _isf(self, s):
        return -np.log(-np.log1p(-s))


class Gompertz(ResponseFamily):
    """Minimum value law, ``F(y) = 1 - exp(-exp(y))``."""

    name = "gompertz"
    mean = -EULER_GAMMA
    var = PI2_6

    def _cdf(self, y):
        with np.errstate(over="ignore"):
            return -np.expm1(-np.exp(y))

    def _sf(self, y):
        with np.errstate(over="ignore"):
            return np.exp(-np.exp(y))

    def _logcdf(self, y):
        with np.errstate(over="ignore", divide="ignore"):
            return np.log(-np.expm1(-np.exp(y)))

    def _logsf(self, y):
        with np.errstate(over="ignore"):
            return -np.exp(y)

    def _logpdf(self, y):
        with np.errstate(over="ignore"):
            return y - np.exp(y)

    def _dlogpdf(self, y):
        with np.errstate(over="ignore"):
            return -np.expm1(y)

    def _quantile(self, p):
        return np.log(-np.log1p(-p))

    def _isf(self, s):
        return np.log(-np.log(s))


FAMILIES = {cls.name: cls() for cls in (Normal, Gumbel, Gompertz)}


def get_family(family) -> ResponseFamily:
    """Resolve a family instance or a case-insensitive name."""
    if isinstance(family, ResponseFamily):
        return family
    try:
        return FAMILIES[str(family).strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown response family {family!r}; expected one of {sorted(FAMILIES)}"
        ) from None


def cdf(family, y):
    return get_family(family).cdf(y)


def pdf(family, y):
    return get_family(family).pdf(y)


def quantile(family, q):
    return get_family(family).quantile(q)


def moments(family):
    """Return ``(mean, variance)`` of the response function."""
    return get_family(family).moments()
