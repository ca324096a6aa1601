"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Seeds and true parameter values below were fixed before the first run.
"""
import time

import numpy as np
import pytest
from scipy import stats

from conftest import (
    DIFFICULTIES,
    FAMILIES,
    LOGIT17,
    concordance_discrete,
    equivalence_log,
    one_item,
    recovery_discrete,
    recovery_normal,
    simulate_data,
)
from thresholdirt import (
    Dataset,
    DifficultySpec,
    FitOptions,
    ItemParams,
    ModelSpec,
    ObservationMode,
    central_moment,
    ctt_diagnostics,
    delta_eval,
    eap_scores,
    fit_mml,
    get_family,
    lr_test,
    marginal_loglik,
    response_cdf,
    response_pdf,
    response_quantile,
    simulate_responses,
)


def report(acceptance, number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}  {detail}"
    print(line)
    acceptance(number, title, passed, detail)
    assert passed, line


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0
        return False


def test_criterion_01_closed_form_marginal(acceptance):
    with Timer() as t:
        spec = one_item()
        value = marginal_loglik(spec, None, 1.0, Dataset([[0.0]]), gh_nodes=40)
    exact = stats.norm(0.0, np.sqrt(2.0)).logpdf(0.0)
    err = abs(value - exact)
    report(acceptance, 1, "closed-form marginal log-likelihood", err < 1e-6 and t.seconds < 1,
           f"loglik={value:.9f} exact={exact:.9f} |err|={err:.2e} time={t.seconds:.2f}s")


def test_criterion_02_lognormal_equivalence(acceptance):
    with Timer() as t:
        worst = 0.0
        for alpha, d0, delta, theta in [(1.0, 0.0, 1.0, 0.0), (1.3, -0.4, 0.8, 0.5), (0.7, 1.2, 1.5, -1.0)]:
            spec = one_item("normal", "log", alpha=alpha, delta0=d0, delta=delta)
            mu, sd = (theta - d0) / delta, 1.0 / (alpha * delta)
            ref = stats.lognorm(s=sd, scale=np.exp(mu))
            y = np.linspace(ref.ppf(1e-6), ref.ppf(1 - 1e-6), 1000)
            worst = max(worst, float(np.max(np.abs(response_pdf(spec, 0, theta, y) - ref.pdf(y)))))
    report(acceptance, 2, "lognormal equivalence", worst < 1e-10 and t.seconds < 1,
           f"max|err|={worst:.2e} over 3x1000 points time={t.seconds:.2f}s")


def test_criterion_03_quantile_cdf_roundtrip(acceptance):
    q = np.linspace(0.01, 0.99, 99)
    with Timer() as t:
        worst = 0.0
        for fam in FAMILIES:
            for diff in DIFFICULTIES:
                spec = one_item(fam, diff, alpha=1.3, delta0=-0.4, delta=0.8)
                for theta in (-2.0, 0.0, 2.0):
                    y = response_quantile(spec, 0, theta, q)
                    worst = max(worst, float(np.max(np.abs(response_cdf(spec, 0, theta, y) - q))))
    report(acceptance, 3, "quantile/cdf roundtrip", worst < 1e-8 and t.seconds < 5,
           f"max|F(Q(q))-q|={worst:.2e} over 3 families x 3 transforms x 3 thetas x 99 q time={t.seconds:.2f}s")


def test_criterion_04_moment_identities(acceptance):
    rng = np.random.default_rng(404)
    theta, n = 0.4, 1_000_000
    with Timer() as t:
        lin_err = log_err = 0.0
        worst_z = 0.0
        for fam in FAMILIES:
            mu_f, var_f = get_family(fam).moments()
            spec = one_item(fam, "linear", alpha=1.3, delta0=0.5, delta=0.7)
            mean = central_moment(spec, 0, theta, 1, method="quadrature")
            var = central_moment(spec, 0, theta, 2, method="quadrature")
            lin_err = max(lin_err, abs(mean - (theta - 0.5 - mu_f / 1.3) / 0.7), abs(var - var_f / (1.3 * 0.7) ** 2))

            alpha, delta = (1.5, 3.0) if fam == "gompertz" else (1.2, 0.9)
            spec = one_item(fam, "log", alpha=alpha, delta0=0.2, delta=delta)
            log_err = max(log_err, abs(central_moment(spec, 0, theta, 1, method="quadrature")
                                       - central_moment(spec, 0, theta, 1, method="closed")))

            for diff in DIFFICULTIES:
                a, d = (alpha, delta) if diff.kind == "log" else (1.2, 0.9)
                spec = one_item(fam, diff, alpha=a, delta0=0.2, delta=d)
                y = simulate_responses(spec, np.full(n, theta), rng=rng)[:, 0]
                m = central_moment(spec, 0, theta, 1, method="quadrature")
                v = central_moment(spec, 0, theta, 2, method="quadrature")
                sq = (y - y.mean()) ** 2
                z_mean = abs(y.mean() - m) / (y.std() / np.sqrt(n))
                z_var = abs(sq.mean() - v) / (sq.std() / np.sqrt(n))
                worst_z = max(worst_z, z_mean, z_var)
    ok = lin_err < 1e-8 and log_err < 1e-6 and worst_z < 3 and t.seconds < 30
    report(acceptance, 4, "moment identities", ok,
           f"linear |err|={lin_err:.1e} log-mean |err|={log_err:.1e} max MC z={worst_z:.2f} time={t.seconds:.1f}s")


def test_criterion_05_distributional_theorems(acceptance):
    rng = np.random.default_rng(505)
    n = 100_000
    with Timer() as t:
        pvals = {}
        for fam in FAMILIES:
            F = get_family(fam)
            for diff in DIFFICULTIES:
                spec = one_item(fam, diff, alpha=1.3, delta0=0.4, delta=0.8)
                y = simulate_responses(spec, np.full(n, 0.5), rng=rng)[:, 0]
                d = delta_eval(spec.items[0], diff, y)
                # delta(Y) ~ theta - Z / alpha:  P(. <= x) = 1 - F(alpha (theta - x))
                pvals[f"{fam}/{diff.kind}"] = stats.kstest(d, lambda x: F.sf(1.3 * (0.5 - x))).pvalue
        y = simulate_responses(one_item("gompertz"), np.zeros(n), rng=rng)[:, 0]
        duality = stats.kstest(y, get_family("gumbel").cdf)
    crit = stats.kstwo.ppf(0.99, n)
    ok = min(pvals.values()) > 0.01 and duality.statistic < crit and t.seconds < 30
    report(acceptance, 5, "distributional theorems (KS, 99%)", ok,
           f"min p(transform law)={min(pvals.values()):.3f} over 9 cases; "
           f"duality KS={duality.statistic:.4f} < {crit:.4f} time={t.seconds:.1f}s")


def test_criterion_06_ctt_axioms(acceptance):
    theta = np.random.default_rng(606).normal(size=100_000)
    specs = {
        "linear": ModelSpec("gumbel", "linear", (ItemParams(1, 0.5, 0.8), ItemParams(1.2, 0, 1.0), ItemParams(0.9, -0.5, 1.3))),
        "log": ModelSpec("normal", "log", (ItemParams(1, 0, 1), ItemParams(1.2, 0.3, 2.0), ItemParams(0.8, -0.2, 1.5))),
    }
    with Timer() as t:
        zs = {k: ctt_diagnostics(s, theta, seed=607).max_z() for k, s in specs.items()}
    worst = max(max(z.values()) for z in zs.values())
    detail = "; ".join(f"{k}: " + ", ".join(f"{a}={b:.2f}" for a, b in z.items()) for k, z in zs.items())
    report(acceptance, 6, "CTT axioms (max |est|/MC SE)", worst < 3 and t.seconds < 60,
           f"{detail} time={t.seconds:.1f}s")


def _recovery(spec, data, sigma):
    with Timer() as t:
        fit = fit_mml(spec, data)
    truth = {}
    for i, it in enumerate(spec.items):
        if i > 0:
            truth[f"alpha[item{i + 1}]"] = it.alpha
        truth[f"delta0[item{i + 1}]"] = it.delta0
        truth[f"delta[item{i + 1}]"] = it.delta
    truth["sigma_theta"] = sigma
    est = fit.natural_estimates()
    z = np.array([(est[k] - v) / fit.std_errors[k] for k, v in truth.items()])
    return fit, z, t.seconds


@pytest.mark.slow
def test_criterion_07_parameter_recovery(acceptance):
    parts, ok = [], True
    for name, (spec, data) in (("normal/linear", recovery_normal()), ("gumbel/logit m=7", recovery_discrete())):
        fit, z, secs = _recovery(spec, data, 1.0)
        within3 = bool(np.all(np.abs(z) < 3))
        frac2 = float(np.mean(np.abs(z) < 2))
        ok &= fit.converged and within3 and frac2 >= 0.9 and secs < 120
        parts.append(f"{name}: {z.size} params, max|z|={np.max(np.abs(z)):.2f}, within 2 SE={frac2:.0%}, "
                     f"fit {secs:.1f}s")
    report(acceptance, 7, "parameter recovery", ok, "; ".join(parts))


def test_criterion_08_transform_equivalence(acceptance):
    spec, data = equivalence_log()
    with Timer() as t:
        on_y = fit_mml(spec, data)
        on_log = fit_mml(spec.replace(difficulty=DifficultySpec("linear")), Dataset(np.log(data.responses)))
    est_y, est_log = on_y.natural_estimates(), on_log.natural_estimates()
    diff = max(abs(est_y[k] - est_log[k]) for k in est_y)
    jac = float(np.sum(np.log(data.responses)))
    gap = abs(on_y.loglik - (on_log.loglik - jac))
    ok = diff < 1e-4 and gap < 1e-6 and t.seconds < 120
    report(acceptance, 8, "log-transform equivalence", ok,
           f"max|estimate diff|={diff:.1e}, |loglik_Y - (loglik_logY - sum log y)|={gap:.1e} time={t.seconds:.1f}s")


def test_criterion_09_continuous_discrete_concordance(acceptance):
    discrete, data = concordance_discrete()
    with Timer() as t:
        fit_d = fit_mml(discrete, data)
        fit_c = fit_mml(discrete.replace(mode=ObservationMode(), difficulty=LOGIT17), data)
        r = np.corrcoef(eap_scores(None, fit_d, data)[0], eap_scores(None, fit_c, data)[0])[0, 1]
    ok = r > 0.98 and t.seconds < 180
    report(acceptance, 9, "continuous vs discrete EAP concordance", ok, f"corr={r:.4f} time={t.seconds:.1f}s")


def test_criterion_10_lr_df_conventions(acceptance):
    rng = np.random.default_rng(1010)
    with Timer() as t:
        items10 = tuple(ItemParams(a, d0, d) for a, d0, d in zip(
            np.r_[1.0, rng.uniform(0.8, 1.2, 9)], rng.uniform(-1, 1, 10), rng.uniform(0.8, 1.2, 10)))
        spec10 = ModelSpec("normal", "linear", items10)
        data10 = simulate_data(spec10, 500, 1.0, seed=1011)
        full = fit_mml(spec10, data10)
        slopes = lr_test(fit_mml(spec10, data10, FitOptions(common_slope=True)), full)
        discr = lr_test(fit_mml(spec10, data10, FitOptions(fixed_alpha=True)), full)

        items5 = tuple(ItemParams(a, d0, d, tuple(g)) for a, d0, d, g in zip(
            np.r_[1.0, rng.uniform(0.8, 1.2, 4)], rng.uniform(-1, 1, 5), rng.uniform(0.8, 1.2, 5),
            rng.uniform(-0.3, 0.3, (5, 2))))
        spec5 = ModelSpec("normal", "linear", items5, 2)
        X = rng.normal(size=(500, 2))
        data5 = simulate_data(spec5, 500, 1.0, seed=1012, covariates=X)
        with_cov = fit_mml(spec5, data5)
        without = fit_mml(ModelSpec("normal", "linear", (ItemParams(),) * 5), Dataset(data5.responses))
        cov = lr_test(without, with_cov)
    ok = (slopes.df, discr.df, cov.df) == (9, 9, 10) and min(slopes.statistic, discr.statistic, cov.statistic) >= 0
    ok &= t.seconds < 300
    report(acceptance, 10, "LR df conventions", ok,
           f"slopes: {slopes.statistic:.3f} on {slopes.df} df; discriminations: {discr.statistic:.3f} on {discr.df} df; "
           f"covariates: {cov.statistic:.3f} on {cov.df} df time={t.seconds:.1f}s")
