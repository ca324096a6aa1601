"""Classical test theory quantities implied by a threshold model.

With true scores ``T_i(theta) = E(Y_i | theta)`` and errors
``eps_i = Y_i - T_i`` every threshold model satisfies the CTT axioms: errors
have mean zero and are uncorrelated with each other and with all true
scores.  :func:`ctt_diagnostics` checks these by Monte Carlo and classifies
the true score structure (congeneric, essentially tau-equivalent, parallel).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernel import ModelSpec, central_moment, simulate_responses

__all__ = ["CTTReport", "ctt_diagnostics", "true_scores"]


@dataclass
class CTTReport:
    n: int
    error_mean: np.ndarray
    error_mean_se: np.ndarray
    error_cov: np.ndarray
    error_cov_se: np.ndarray
    error_true_cov: np.ndarray
    error_true_cov_se: np.ndarray
    congeneric_r2: np.ndarray
    congeneric: bool
    affine_a: np.ndarray | None = None
    affine_b: np.ndarray | None = None
    tau_equivalent: bool | None = None
    parallel: bool | None = None
    error_variance: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def max_z(self) -> dict[str, float]:
        """Largest |estimate| / MC standard error for each axiom."""
        off = ~np.eye(self.error_cov.shape[0], dtype=bool)
        return {
            "E(eps)": float(np.max(np.abs(self.error_mean) / self.error_mean_se)),
            "Cov(eps_i,eps_j)": float(np.max(np.abs(self.error_cov[off]) / self.error_cov_se[off]))
            if off.any() else 0.0,
            "Cov(eps_i,T_j)": float(np.max(np.abs(self.error_true_cov) / self.error_true_cov_se)),
        }


def true_scores(spec: ModelSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).reshape(-1)
    return np.column_stack([central_moment(spec, i, theta, 1) for i in range(spec.n_items)])


def _cov_with_se(a, b):
    da = a - a.mean()
    db = b - b.mean()
    prod = da * db
    return prod.mean(), prod.std(ddof=1) / np.sqrt(prod.size)


def ctt_diagnostics(spec: ModelSpec, theta_sample, seed=None) -> CTTReport:
    """Monte Carlo check of the CTT decomposition for ``spec``.

    One response per item is drawn for every value in ``theta_sample``.
    """
    if spec.mode.is_discrete:
        raise ValueError("CTT diagnostics are defined for continuous responses")
    if spec.covariate_dim:
        raise ValueError("CTT diagnostics do not support covariates")
    theta = np.asarray(theta_sample, dtype=float).reshape(-1)
    n, I = theta.size, spec.n_items
    Y = simulate_responses(spec, theta, rng=np.random.default_rng(seed))
    T = true_scores(spec, theta)
    E = Y - T

    e_mean = E.mean(axis=0)
    e_mean_se = E.std(axis=0, ddof=1) / np.sqrt(n)
    ee = np.zeros((I, I))
    ee_se = np.zeros((I, I))
    et = np.zeros((I, I))
    et_se = np.zeros((I, I))
    for i in range(I):
        for j in range(I):
            ee[i, j], ee_se[i, j] = _cov_with_se(E[:, i], E[:, j])
            et[i, j], et_se[i, j] = _cov_with_se(E[:, i], T[:, j])

    r2 = np.ones(I)
    t0 = T[:, 0]
    design = np.column_stack([np.ones(n), t0])
    for j in range(1, I):
        coef, *_ = np.linalg.lstsq(design, T[:, j], rcond=None)
        resid = T[:, j] - design @ coef
        tss = np.sum((T[:, j] - T[:, j].mean()) ** 2)
        r2[j] = 1.0 - np.sum(resid**2) / tss if tss > 0 else 1.0
    report = CTTReport(
        n=n, error_mean=e_mean, error_mean_se=e_mean_se, error_cov=ee, error_cov_se=ee_se,
        error_true_cov=et, error_true_cov_se=et_se, congeneric_r2=r2,
        congeneric=bool(np.all(r2 > 1.0 - 1e-10)),
    )
    if spec.difficulty.kind == "linear":
        mu_f, var_f = spec.family.moments()
        a = 1.0 / spec.delta
        b = -(mu_f / spec.alpha + spec.delta0) / spec.delta
        err_var = var_f / (spec.alpha * spec.delta) ** 2
        report.affine_a = a
        report.affine_b = b
        report.error_variance = err_var
        report.congeneric = True
        report.tau_equivalent = bool(np.allclose(a, a[0], rtol=0, atol=1e-12))
        report.parallel = bool(report.tau_equivalent and np.allclose(err_var, err_var[0], rtol=1e-12))
    return report
