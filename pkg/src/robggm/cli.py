"""Command-line interface: generate, estimate, select, evaluate, run, plot."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ._base import ConfigurationError, ConvergenceError, DegenerateScaleError
from .covmat import assemble_cov, psd_project, read_matrix_csv, write_matrix_csv
from .datagen import GRAPH_KINDS, ContaminationSpec, contaminate, generate_graph, sample_clean
from .evalmetrics import compare_edges, matrix_errors
from .graphest import edges_from_nodewise, edges_from_precision, glasso, nodewise_lasso
from .harness.config import (ExperimentConfig, canonical_tag, config_from_mapping, load_config,
                             parse_estimator)
from .harness.csvio import CsvParseError, fmt, ingest_csv, read_edges, write_data_csv, write_edges
from .harness.experiment import run_experiment
from .harness.plots import emit_plots
from .select import cv2_select, lambda_for_edges, lambda_grid, stars_select

log = logging.getLogger("robggm")


class _DefaultsFormatter(argparse.HelpFormatter):
    """Show defaults for every option, including those without help text."""

    def _get_help_string(self, action):
        text = action.help or ""
        hidden = action.default is None or action.default is False
        if not hidden and action.default != argparse.SUPPRESS and "%(default)" not in text:
            text += " (default: %(default)s)"
        return text


def _expand_estimators(tags, gammas):
    """Bare ``gamma`` expands to one estimator per ``--gamma``; with only
    ``--gamma`` given, the gamma estimators are added."""
    tags = list(tags or [])
    gammas = list(gammas or [])
    if not gammas:
        return tags
    out = [t for t in tags if t != "gamma"]
    return [f"gamma@{g:g}" for g in gammas] + out


def _estimator_kw(tag):
    method, gamma = parse_estimator(tag)
    return method, ({} if gamma is None else {"gamma": gamma})


def _single_estimator(args):
    tags = _expand_estimators(args.estimator or ["gamma"], args.gamma)
    if len(tags) != 1:
        raise ConfigurationError("this command takes exactly one estimator")
    return canonical_tag(tags[0])


def cmd_generate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = generate_graph(args.graph, args.p, args.seed, hub_size=args.hub_size)
    data = sample_clean(model, args.n, args.seed)
    if args.eps > 0:
        data = contaminate(data, ContaminationSpec(args.eps, args.scenario), args.seed)
    write_data_csv(out / "data.csv", data)
    write_matrix_csv(out / "omega.csv", model.omega)
    write_matrix_csv(out / "sigma.csv", model.sigma)
    write_edges(out / "edges.txt", model.edges, model.p)
    print(f"wrote {out}/data.csv ({args.n} x {args.p}), {len(model.edges)} true edges")


def cmd_estimate(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = ingest_csv(args.data, has_header=args.header)
    tag = _single_estimator(args)
    method, kw = _estimator_kw(tag)
    s = assemble_cov(data, method, **kw)
    write_matrix_csv(out / "sigma_hat.csv", s.matrix, names=data.names)
    sp = psd_project(s, args.delta)
    lam = args.lam
    if args.target_edges is not None:
        est = lambda_for_edges(sp, args.target_edges)
        lam = est.lam
    if lam is None:
        print(f"{tag}: wrote sigma_hat.csv (min eigenvalue {s.min_eigenvalue:.4g})")
        return
    if args.graph_method == "glasso":
        est = glasso(sp, lam)
        write_matrix_csv(out / "omega_hat.csv", est.omega, names=data.names)
        edges = edges_from_precision(est)
    else:
        B = nodewise_lasso(sp, lam)
        write_matrix_csv(out / "beta_hat.csv", B, names=data.names)
        edges = edges_from_nodewise(B, args.rule)
    write_edges(out / "edges.txt", edges)
    print(f"{tag}: lambda={fmt(lam)} edges={len(edges)}")


def cmd_select(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = ingest_csv(args.data, has_header=args.header)
    tag = _single_estimator(args)
    method, kw = _estimator_kw(tag)
    sp = psd_project(assemble_cov(data, method, **kw), 0.0)
    grid = lambda_grid(sp, args.lambda_count, args.lambda_ratio)
    if args.selection == "cv2":
        lam, scores = cv2_select(data, method, grid, args.seed, **kw)
        label = "cv_loss"
    else:
        lam, info = stars_select(data, method, grid, args.subsamples, args.cut, args.seed,
                                 full_output=True, **kw)
        scores = info["instability"]
        label = "instability"
    with open(out / "selection.csv", "w", newline="\n") as fh:
        fh.write(f"lambda_index,lambda,{label},selected\n")
        for k, (g, v) in enumerate(zip(grid, scores)):
            fh.write(f"{k},{fmt(g)},{fmt(v)},{int(g == lam)}\n")
    print(f"{tag}: selected lambda={fmt(lam)}")


def cmd_evaluate(args):
    truth = read_edges(args.truth_edges)
    if args.omega_hat:
        omega_hat = read_matrix_csv(args.omega_hat)
        est = edges_from_precision(omega_hat, args.zero_tol)
    else:
        est = read_edges(args.edges)
    tpr, fpr = compare_edges(est, truth, truth.p)
    result = {"tpr": tpr, "fpr": fpr, "n_edges": len(est)}
    # matrix_errors computes both; an empty pair stands in for the missing one
    blank = np.zeros((0, 0))
    if args.omega_hat and args.omega:
        result["mse"] = matrix_errors(omega_hat, read_matrix_csv(args.omega), blank, blank)[0]
    if args.sigma_hat and args.sigma:
        result["supnorm"] = matrix_errors(np.eye(1), np.eye(1), read_matrix_csv(args.sigma_hat),
                                          read_matrix_csv(args.sigma))[1]
    print(json.dumps(result, sort_keys=True))


def _run_config(args) -> ExperimentConfig:
    base = load_config(args.config).to_dict() if args.config else ExperimentConfig().to_dict()
    overrides = {
        "seed": args.seed, "out": args.out, "threads": args.threads, "graph": args.graph,
        "eps": args.eps, "scenario": args.scenario, "p": args.p, "n": args.n,
        "replicates": args.replicates, "graph_method": args.graph_method,
        "selection": args.selection,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if args.estimator or args.gamma:
        base["estimators"] = _expand_estimators(args.estimator or base["estimators"], args.gamma)
    return config_from_mapping(base)


def cmd_run(args):
    cfg = _run_config(args)
    result = run_experiment(cfg, plots=not args.no_plots)
    if result.failed:
        print(f"campaign failed: {result.error}", file=sys.stderr)
        return 1
    print(f"wrote results to {result.out}")
    for tag, (_, auc) in sorted(result.roc.items()):
        print(f"  {tag}: AUC {auc:.3f}")
    return 0


def cmd_plot(args):
    for path in emit_plots(args.out):
        print(f"wrote {path}")


def _add_data_args(p):
    p.add_argument("--data", required=True, help="input CSV, rows are observations")
    p.add_argument("--header", action="store_true", help="first CSV row holds column names")
    p.add_argument("--estimator", action="append", help="estimator tag (default gamma@0.3)")
    p.add_argument("--gamma", action="append", type=float, help="gamma value for the gamma estimator")
    p.add_argument("--out", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robggm",
        description="Robust Gaussian graphical models under cell-wise contamination.",
        formatter_class=_DefaultsFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a graph and (contaminated) data",
                       formatter_class=_DefaultsFormatter)
    g.add_argument("--graph", choices=GRAPH_KINDS, default="chain", help="graph topology")
    g.add_argument("--p", type=int, default=100, help="number of variables")
    g.add_argument("--n", type=int, default=200, help="number of observations")
    g.add_argument("--eps", type=float, default=0.0, help="cell contamination probability")
    g.add_argument("--scenario", choices=["asym", "sym"], default="asym",
                   help="outliers at +mean only, or at +/-mean")
    g.add_argument("--seed", type=int, default=0, help="seed for graph, data and outliers")
    g.add_argument("--hub-size", type=int, default=20, help="group size of the hub graph")
    g.add_argument("--out", default=".", help="output directory")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="robust covariance and optional sparse precision",
                       formatter_class=_DefaultsFormatter)
    _add_data_args(e)
    e.add_argument("--lambda", dest="lam", type=float, help="penalty for the graph estimate")
    e.add_argument("--target-edges", type=int, help="pick the glasso penalty by bisection")
    e.add_argument("--graph-method", choices=["glasso", "nodewise"], default="glasso",
                   help="graph estimator used with --lambda")
    e.add_argument("--rule", choices=["and", "or"], default="or", help="node-wise edge rule")
    e.add_argument("--delta", type=float, default=0.0, help="eigenvalue floor for projection")
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("select", help="choose the penalty by 2-fold CV or StARS",
                       formatter_class=_DefaultsFormatter)
    _add_data_args(s)
    s.add_argument("--selection", choices=["cv2", "stars"], default="cv2", help="criterion")
    s.add_argument("--seed", type=int, default=0, help="seed for the split or subsamples")
    s.add_argument("--lambda-count", type=int, default=10, help="grid size")
    s.add_argument("--lambda-ratio", type=float, default=0.05, help="smallest / largest penalty")
    s.add_argument("--subsamples", type=int, default=10, help="StARS subsample count")
    s.add_argument("--cut", type=float, default=0.2, help="StARS instability cut")
    s.set_defaults(func=cmd_select)

    v = sub.add_parser("evaluate", help="TPR/FPR (and errors) against a true graph",
                       formatter_class=_DefaultsFormatter)
    v.add_argument("--truth-edges", required=True, help="true edge list")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--omega-hat", help="estimated precision CSV")
    src.add_argument("--edges", help="estimated edge list")
    v.add_argument("--omega", help="true precision CSV, for MSE")
    v.add_argument("--sigma-hat", help="estimated covariance CSV")
    v.add_argument("--sigma", help="true covariance CSV, for the sup-norm error")
    v.add_argument("--zero-tol", type=float, default=1e-8, help="threshold for a nonzero entry")
    v.set_defaults(func=cmd_evaluate)

    d = ExperimentConfig()
    r = sub.add_parser("run", help="full simulation campaign", formatter_class=_DefaultsFormatter,
                       description="Flags override the configuration file; values in "
                                   "brackets are the built-in defaults.")
    r.add_argument("--config", help="INI (key = value) or JSON experiment file")
    r.add_argument("--seed", type=int, help=f"base seed [{d.seed}]")
    r.add_argument("--out", help=f"results directory [{d.out}]")
    r.add_argument("--threads", type=int, help=f"worker processes [{d.threads}]")
    r.add_argument("--estimator", action="append",
                   help="gamma[@g], kendall, spearman, gauss_rank, gk_qn or sample; repeatable "
                        f"[{','.join(d.estimators)}]")
    r.add_argument("--gamma", action="append", type=float,
                   help="gamma value, repeatable; expands a bare 'gamma' estimator")
    r.add_argument("--graph", choices=GRAPH_KINDS, help=f"graph topology [{d.graph}]")
    r.add_argument("--eps", type=float, help=f"cell contamination probability [{d.eps}]")
    r.add_argument("--scenario", choices=["asym", "sym"], help="contamination scenario [asym]")
    r.add_argument("--p", type=int, help=f"number of variables [{d.p}]")
    r.add_argument("--n", type=int, help=f"observations per replicate [{d.n}]")
    r.add_argument("--replicates", type=int, help=f"number of data sets [{d.replicates}]")
    r.add_argument("--graph-method", choices=["glasso", "nodewise"],
                   help=f"graph estimator [{d.graph_method}]")
    r.add_argument("--selection", choices=["cv2", "stars", "roc"],
                   help=f"penalty selection, or the whole grid [{d.selection}]")
    r.add_argument("--no-plots", action="store_true", help="skip the SVG figures")
    r.set_defaults(func=cmd_run)

    pl = sub.add_parser("plot", help="render SVG figures from a results directory",
                        formatter_class=_DefaultsFormatter)
    pl.add_argument("--out", required=True, help="results directory")
    pl.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = args.func(args)
    except (ConfigurationError, DegenerateScaleError, ConvergenceError, CsvParseError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return int(code or 0)


if __name__ == "__main__":
    sys.exit(main())
