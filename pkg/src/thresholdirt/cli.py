"""Command line interface.

Subcommands: ``fit``, ``simulate``, ``score``, ``density`` and ``compare``.
Every option may also be given in a YAML file passed with ``--config``
(keys are the option names with dashes replaced by underscores); explicit
command line flags take precedence.

Exit codes: 0 success, 1 usage or data error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .difficulty import DifficultySpec, ItemParams
from .estimation import Dataset, FitOptions, eap_scores, fit_mml, lr_test
from .exceptions import DataError, DomainError, MomentDivergenceError, NotNestedError, NumericalError
from .io import atomic_open, load_fit, load_model, read_config, read_dataset, save_fit, write_dataset, write_json
from .kernel import ModelSpec, ObservationMode, density_grid, simulate_responses, transformed_total_scores

log = logging.getLogger("thresholdirt")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _list(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _floats(value):
    return None if value is None else [float(v) for v in _list(value)]


class _Settings:
    """Command line values layered over a config file over defaults."""

    def __init__(self, args):
        self.args = vars(args)
        self.cfg = read_config(self.args.get("config"))

    def get(self, key, default=None):
        v = self.args.get(key)
        if v is not None and v is not False:
            return v
        if key in self.cfg and self.cfg[key] is not None:
            return self.cfg[key]
        return default if v is None else v

    def require(self, key):
        v = self.get(key)
        if v is None:
            raise UsageError(f"missing required option --{key.replace('_', '-')}")
        return v


def _mode(s: _Settings) -> ObservationMode:
    kind = s.get("mode", "continuous")
    if kind == "discrete":
        m = s.get("categories")
        if m is None:
            raise UsageError("discrete mode needs --categories")
        return ObservationMode("discrete", int(m))
    return ObservationMode(kind)


def _difficulty(s: _Settings, kind: str, mode: ObservationMode) -> DifficultySpec:
    kind = kind.lower()
    if kind != "logit":
        return DifficultySpec(kind)
    lo, hi = s.get("lo"), s.get("hi")
    if mode.is_discrete:
        lo = 1.0 if lo is None else lo
        hi = float(mode.m) if hi is None else hi
    if lo is None or hi is None:
        raise UsageError("logit difficulty needs --lo and --hi")
    return DifficultySpec("logit", float(lo), float(hi), float(s.get("margin", 0.10)))


def _fit_options(s: _Settings) -> FitOptions:
    return FitOptions(
        gh_nodes=int(s.get("gh_nodes", 40)),
        max_iterations=int(s.get("max_iterations", 1000)),
        gradient_tolerance=float(s.get("gradient_tolerance", 1e-5)),
        relative_loglik_tolerance=float(s.get("relative_loglik_tolerance", 1e-8)),
        common_slope=bool(s.get("common_slope", False)),
        fixed_alpha=bool(s.get("fixed_alpha", False)),
        seed=int(s.get("seed", 0)),
    )


# --------------------------------------------------------------------------
# fit


def _fit_cell(family, difficulty, mode, data, options, outdir):
    label = f"{family}_{difficulty.kind}"
    row = {"family": family, "difficulty": difficulty.label(), "loglik": "", "sigma_theta": "",
           "n_params": "", "aic": "", "converged": "", "best": "", "file": "", "error": ""}
    try:
        spec = ModelSpec(family, difficulty, (ItemParams(),) * data.n_items, data.n_covariates, mode)
        fit = fit_mml(spec, data, options)
    except (DataError, DomainError, NumericalError, ValueError) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row, None
    row.update(loglik=repr(fit.loglik), sigma_theta=repr(fit.sigma_theta), n_params=fit.n_free_params,
               aic=repr(fit.aic), converged=fit.converged)
    if outdir is not None:
        path = Path(outdir) / f"fit_{label}.json"
        save_fit(path, fit)
        row["file"] = path.name
    return row, fit


def fit_grid(cells, mode, data, options, outdir=None, jobs=1):
    """Fit every ``(family, DifficultySpec)`` cell; the best log-likelihood row is starred.

    Returns the summary rows and the fits (None for failed cells).
    """
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(lambda c: _fit_cell(c[0], c[1], mode, data, options, outdir), cells))
    rows = [r for r, _ in results]
    fits = [f for _, f in results]
    ok = [i for i, f in enumerate(fits) if f is not None]
    if ok:
        rows[max(ok, key=lambda i: fits[i].loglik)]["best"] = "*"
    return rows, fits


def cmd_fit(args) -> int:
    s = _Settings(args)
    data = read_dataset(s.require("data"), _list(s.get("item_columns")), _list(s.get("covariate_columns")))
    families = _list(s.get("families", "normal"))
    kinds = _list(s.get("difficulties", "linear"))
    if not families or not kinds:
        raise UsageError("model grid is empty")
    mode = _mode(s)
    options = _fit_options(s)
    outdir = Path(s.get("output", "fit_output"))
    outdir.mkdir(parents=True, exist_ok=True)
    cells = [(f.lower(), _difficulty(s, k, mode)) for f in families for k in kinds]
    rows, fits = fit_grid(cells, mode, data, options, outdir, jobs=max(1, int(s.get("jobs", 1))))
    ok = [f for f in fits if f is not None]
    fields = ["family", "difficulty", "loglik", "sigma_theta", "n_params", "aic", "converged", "best",
              "file", "error"]
    with atomic_open(outdir / "summary.csv") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        if r["error"]:
            print(f"{r['family']:<9} {r['difficulty']:<14} FAILED  {r['error']}")
        else:
            print(f"{r['family']:<9} {r['difficulty']:<14} loglik={float(r['loglik']):.3f} "
                  f"sigma={float(r['sigma_theta']):.3f} k={r['n_params']} {r['best']}")
    return EXIT_OK if ok else EXIT_NUMERIC


# --------------------------------------------------------------------------
# simulate


def _random_spec(rng, n_items, family, difficulty, n_cov, mode):
    alpha = np.concatenate([[1.0], rng.uniform(0.8, 1.2, n_items - 1)])
    delta0 = rng.uniform(-1.0, 1.0, n_items)
    delta = rng.uniform(0.8, 1.2, n_items)
    gamma = rng.uniform(-0.3, 0.3, (n_items, n_cov))
    items = tuple(ItemParams(alpha[i], delta0[i], delta[i], tuple(gamma[i])) for i in range(n_items))
    return ModelSpec(family, difficulty, items, n_cov, mode)


def cmd_simulate(args) -> int:
    s = _Settings(args)
    seed = int(s.get("seed", 0))
    rng = np.random.default_rng(seed)
    n = int(s.require("persons"))
    if s.get("params"):
        spec, sigma = load_model(s.get("params"))
        if s.get("sigma") is not None:
            sigma = float(s.get("sigma"))
    else:
        mode = _mode(s)
        kind = s.get("difficulty", "linear")
        n_items = int(s.require("items"))
        if n_items < 1:
            raise UsageError("--items must be positive")
        spec = _random_spec(rng, n_items, s.get("family", "normal"), _difficulty(s, kind, mode),
                            int(s.get("covariates", 0)), mode)
        sigma = float(s.get("sigma", 1.0))
    theta = rng.normal(0.0, sigma, n)
    X = rng.normal(size=(n, spec.covariate_dim)) if spec.covariate_dim else None
    Y = simulate_responses(spec, theta, X, rng)
    data = Dataset(Y, X)
    out = Path(s.get("output", "simulated.csv"))
    write_dataset(out, data)
    truth = Path(s.get("truth") or out.with_suffix(".truth.json"))
    write_json(truth, {"model": spec.to_dict(), "sigma_theta": sigma, "seed": seed, "n_persons": n,
                       "item_names": data.item_names, "covariate_names": data.covariate_names or []})
    print(f"wrote {n} x {spec.n_items} responses to {out} and generating parameters to {truth}")
    return EXIT_OK


# --------------------------------------------------------------------------
# score


def cmd_score(args) -> int:
    s = _Settings(args)
    fit = load_fit(s.require("fit"))
    covs = _list(s.get("covariate_columns")) or fit.covariate_names
    items = _list(s.get("item_columns")) or fit.item_names
    data = read_dataset(s.require("data"), items, covs)
    if data.n_items != fit.spec.n_items or data.n_covariates != fit.spec.covariate_dim:
        raise DataError("data do not match the fitted model (items or covariates differ)")
    eap, sd = eap_scores(None, fit, data)
    raw = np.nansum(data.responses, axis=1)
    if fit.spec.mode.is_discrete:
        transformed = np.full(data.n_persons, np.nan)
    else:
        transformed = transformed_total_scores(fit.spec, data.responses)
    out = Path(s.get("output", "scores.csv"))
    with atomic_open(out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["person", "eap", "posterior_sd", "total_score", "transformed_total_score"])
        for p in range(data.n_persons):
            w.writerow([p + 1, repr(float(eap[p])), repr(float(sd[p])), repr(float(raw[p])),
                        "" if np.isnan(transformed[p]) else repr(float(transformed[p]))])
    if not fit.spec.mode.is_discrete:
        r = np.corrcoef(eap, transformed)[0, 1]
        print(f"scored {data.n_persons} persons; corr(EAP, transformed total) = {r:.4f}")
    else:
        print(f"scored {data.n_persons} persons")
    return EXIT_OK


# --------------------------------------------------------------------------
# density


def _parse_items(specs):
    items = []
    for text in specs:
        vals = [float(v) for v in text.split(",")]
        if len(vals) == 2:
            items.append(ItemParams(1.0, vals[0], vals[1]))
        elif len(vals) == 3:
            items.append(ItemParams(vals[2], vals[0], vals[1]))
        else:
            raise UsageError(f"--item expects 'delta0,delta[,alpha]', got {text!r}")
    return items


def cmd_density(args) -> int:
    s = _Settings(args)
    if s.get("fit"):
        spec, _ = load_model(s.get("fit"))
        if spec.covariate_dim:
            spec = spec.replace(items=tuple(ItemParams(i.alpha, i.delta0, i.delta) for i in spec.items),
                                covariate_dim=0)
        spec = spec.replace(mode=ObservationMode())
    else:
        item_specs = s.get("item")
        if not item_specs:
            raise UsageError("density needs --fit or at least one --item")
        item_specs = item_specs if isinstance(item_specs, list) else [item_specs]
        mode = ObservationMode()
        spec = ModelSpec(s.get("family", "normal"), _difficulty(s, s.get("difficulty", "linear"), mode),
                         tuple(_parse_items(item_specs)))
    thetas = _floats(s.get("theta", "0"))
    grid = _floats(s.require("grid"))
    if len(grid) != 3 or grid[2] < 2:
        raise UsageError("--grid expects 'start,stop,n'")
    y = np.linspace(grid[0], grid[1], int(grid[2]))
    rows = density_grid(spec, thetas, y)
    out = Path(s.get("output", "density.csv"))
    with atomic_open(out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "item", "y", "density"])
        for t, i, yy, d in rows:
            w.writerow([repr(t), i, repr(yy), repr(d)])
    print(f"wrote {len(rows)} density rows to {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# compare


def cmd_compare(args) -> int:
    s = _Settings(args)
    restricted = load_fit(s.require("restricted"))
    full = load_fit(s.require("full"))
    res = lr_test(restricted, full)
    print(f"LR statistic {res.statistic:.3f} on {res.df} df, p = {res.p_value:.4g}")
    if s.get("output"):
        write_json(s.get("output"), {"statistic": res.statistic, "df": res.df, "p_value": res.p_value})
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="thresholdirt", description="Threshold item response models for continuous responses")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def model_opts(p, grid=False):
        if grid:
            p.add_argument("--families", help="comma separated response functions")
            p.add_argument("--difficulties", help="comma separated difficulty transforms")
        else:
            p.add_argument("--family")
            p.add_argument("--difficulty")
        p.add_argument("--lo", type=float)
        p.add_argument("--hi", type=float)
        p.add_argument("--margin", type=float)
        p.add_argument("--mode", choices=["continuous", "discrete"])
        p.add_argument("--categories", type=int)

    p = sub.add_parser("fit", help="fit a grid of models to a CSV dataset")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--item-columns", help="comma separated response columns (default item1..itemI)")
    p.add_argument("--covariate-columns", help="comma separated covariate columns")
    model_opts(p, grid=True)
    p.add_argument("--common-slope", action="store_true", default=None)
    p.add_argument("--fixed-alpha", action="store_true", default=None)
    p.add_argument("--gh-nodes", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--gradient-tolerance", type=float)
    p.add_argument("--relative-loglik-tolerance", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--output", help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="simulate a dataset")
    p.add_argument("--config")
    p.add_argument("--persons", type=int)
    p.add_argument("--items", type=int)
    model_opts(p)
    p.add_argument("--covariates", type=int, help="number of standard normal covariates")
    p.add_argument("--sigma", type=float)
    p.add_argument("--params", help="JSON with generating parameters (fit or truth file)")
    p.add_argument("--seed", type=int)
    p.add_argument("--output", help="CSV path")
    p.add_argument("--truth", help="JSON path for the generating parameters")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", help="EAP person scores and total scores")
    p.add_argument("--config")
    p.add_argument("--fit")
    p.add_argument("--data")
    p.add_argument("--item-columns")
    p.add_argument("--covariate-columns")
    p.add_argument("--output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("density", help="response densities on a grid")
    p.add_argument("--config")
    p.add_argument("--fit", help="fit or truth JSON")
    model_opts(p)
    p.add_argument("--item", action="append", help="delta0,delta[,alpha]; repeat per item")
    p.add_argument("--theta", help="comma separated trait values")
    p.add_argument("--grid", help="start,stop,n")
    p.add_argument("--output")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("compare", help="likelihood ratio test of two nested fits")
    p.add_argument("--config")
    p.add_argument("--restricted")
    p.add_argument("--full")
    p.add_argument("--output")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (NumericalError, MomentDivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, DataError, DomainError, NotNestedError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
