"""Item difficulty functions ``delta_i(y) = delta0_i + delta_i * g(y)``.

``g`` is a fixed, strictly increasing transform shared by all items of a
model.  Three transforms are available:

* ``linear``: ``g(y) = y`` on the real line,
* ``log``: ``g(y) = log(y)`` on ``(0, inf)``,
* ``logit``: ``g(y) = log((y - a) / (b - y))`` on ``(a, b)`` where
  ``a = lo - c`` and ``b = hi + c``.

The margin ``c`` widens the nominal response interval ``[lo, hi]`` so that
responses observed exactly at the bounds stay inside the open support.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import DomainError

__all__ = [
    "DifficultySpec",
    "ItemParams",
    "g_eval",
    "g_inverse",
    "g_derivative",
    "delta_eval",
    "delta_inverse",
]

KINDS = ("linear", "log", "logit")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class DifficultySpec:
    """The shared transform ``g`` of a model's difficulty functions.

    Args:
        kind: One of ``"linear"``, ``"log"`` or ``"logit"`` (case-insensitive).
        lo, hi: Nominal response bounds, required for ``logit``.
        c: Non-negative boundary margin for ``logit``.
    """

    kind: str = "linear"
    lo: float | None = None
    hi: float | None = None
    c: float = 0.10

    def __post_init__(self):
        kind = str(self.kind).strip().lower()
        if kind not in KINDS:
            raise ValueError(f"unknown difficulty kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "logit":
            if self.lo is None or self.hi is None:
                raise ValueError("logit difficulty requires lo and hi")
            lo, hi, c = float(self.lo), float(self.hi), float(self.c)
            if not lo < hi:
                raise ValueError(f"logit difficulty requires lo < hi, got lo={lo}, hi={hi}")
            if not c >= 0:
                raise ValueError(f"logit margin c must be non-negative, got {c}")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
            object.__setattr__(self, "c", c)
        else:
            object.__setattr__(self, "lo", None)
            object.__setattr__(self, "hi", None)

    @property
    def support(self) -> tuple[float, float]:
        """Open support interval of the response."""
        if self.kind == "linear":
            return -np.inf, np.inf
        if self.kind == "log":
            return 0.0, np.inf
        return self.lo - self.c, self.hi + self.c

    def label(self) -> str:
        if self.kind == "logit":
            return f"logit(c={self.c:.2f})"
        return self.kind

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "logit":
            d.update(lo=self.lo, hi=self.hi, c=self.c)
        return d

    # validation --------------------------------------------------------
    def check_support(self, y) -> np.ndarray:
        """Return ``y`` as an array, raising if any value is outside the support."""
        y = np.asarray(y, dtype=float)
        if np.any(np.isnan(y)):
            raise DomainError("difficulty argument is NaN")
        a, b = self.support
        if self.kind == "linear":
            if not np.all(np.isfinite(y)):
                raise DomainError("linear difficulty requires finite responses")
            return y
        if np.any(y <= a):
            bad = float(np.min(y))
            raise DomainError(f"response {bad!r} violates lower support bound {a!r} ({self.label()})")
        if np.any(y >= b):
            bad = float(np.max(y))
            raise DomainError(f"response {bad!r} violates upper support bound {b!r} ({self.label()})")
        return y

    def in_support(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        a, b = self.support
        return (y > a) & (y < b)

    # raw transforms, no checking ---------------------------------------
    def _g(self, y):
        if self.kind == "linear":
            return y
        if self.kind == "log":
            return np.log(y)
        a, b = self.support
        return np.log(y - a) - np.log(b - y)

    def _g_inv(self, x):
        if self.kind == "linear":
            return x
        if self.kind == "log":
            return np.exp(x)
        a, b = self.support
        w = b - a
        y = np.where(x > 0, b - w * expit(-x), a + w * expit(x))
        # for |x| beyond ~37 the result rounds onto the bound; keep it in the open support
        return np.clip(y, np.nextafter(a, b), np.nextafter(b, a))

    def _log_g_prime(self, y):
        if self.kind == "linear":
            return np.zeros_like(y)
        if self.kind == "log":
            return -np.log(y)
        a, b = self.support
        return np.log(b - a) - np.log(y - a) - np.log(b - y)

    # public ------------------------------------------------------------
    def g(self, y):
        return _out(self._g(self.check_support(y)))

    def g_inverse(self, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("g_inverse requires finite arguments")
        return _out(self._g_inv(x))

    def g_derivative(self, y):
        y = self.check_support(y)
        return _out(np.exp(self._log_g_prime(y)))


@dataclass(frozen=True)
class ItemParams:
    """Parameters of one item.

    ``alpha`` is the discrimination, ``delta0`` and ``delta`` the intercept
    and slope of the difficulty function and ``gamma`` the item-specific
    covariate effects.
    """

    alpha: float = 1.0
    delta0: float = 0.0
    delta: float = 1.0
    gamma: tuple[float, ...] = field(default=())

    def __post_init__(self):
        alpha, delta0, delta = float(self.alpha), float(self.delta0), float(self.delta)
        if not (np.isfinite(alpha) and alpha > 0):
            raise ValueError(f"discrimination alpha must be positive, got {alpha}")
        if not (np.isfinite(delta) and delta > 0):
            raise ValueError(f"difficulty slope delta must be positive, got {delta}")
        if not np.isfinite(delta0):
            raise ValueError("difficulty intercept delta0 must be finite")
        gamma = tuple(float(v) for v in np.atleast_1d(np.asarray(self.gamma, dtype=float)))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "delta0", delta0)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "gamma", gamma)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "delta0": self.delta0, "delta": self.delta,
                "gamma": list(self.gamma)}


def g_eval(spec: DifficultySpec, y):
    return spec.g(y)


def g_inverse(spec: DifficultySpec, x):
    return spec.g_inverse(x)


def g_derivative(spec: DifficultySpec, y):
    return spec.g_derivative(y)


def delta_eval(item: ItemParams, spec: DifficultySpec, y):
    """Item difficulty ``delta0 + delta * g(y)``."""
    return item.delta0 + item.delta * spec.g(y)


def delta_inverse(item: ItemParams, spec: DifficultySpec, x):
    """Response value at which the item difficulty equals ``x``."""
    x = np.asarray(x, dtype=float)
    return spec.g_inverse((x - item.delta0) / item.delta)
