"""Command-line interface: ``factortree {fit,select,simulate,compare,diagnose}``.

Exit codes: 0 success, 2 input/output problem, 3 model or numerical failure.
"""

import argparse
import os
import sys
import warnings

import numpy as np

from . import __version__
from .copula import family_from_name
from .data import estimate_cutpoints, read_csv, write_csv
from .diagnose import discrepancies, model_corr_matrix, vuong
from .errors import DataError, FactorTreeError
from .estimate import FitOptions, fit_ifm
from .polychoric import polychoric_matrix
from .quadrature import DEFAULT_NQ, gauss_legendre_unit
from .report import (SCHEMA_VERSION, fit_from_dict, fit_to_dict, read_json, spec_from_dict,
                     spec_to_dict, tree_source, write_json_atomic)
from .select import FACTOR_CANDIDATES, TREE_CANDIDATES, select_families, select_tree
from .semicorr import observed_semi_corr, theoretical_semi_corr
from .simulate import draw, builtin_designs

EXIT_OK, EXIT_IO, EXIT_NUMERIC = 0, 2, 3


class _IOFailure(Exception):
    pass


def _load_data(path):
    try:
        return read_csv(path)
    except (OSError, DataError) as exc:
        raise _IOFailure(str(exc)) from exc


def _load_json(path):
    try:
        return read_json(path)
    except (OSError, ValueError) as exc:
        raise _IOFailure(f"{path}: {exc}") from exc


def _options(args):
    return FitOptions(maxiter=args.maxiter, gtol=args.gtol, identification=args.identification)


def _header(command, args):
    return {"schema_version": SCHEMA_VERSION, "command": command,
            "version": __version__, "nq": getattr(args, "nq", None)}


def _resolve_tree(spec_obj, args, data, cut, rule, options):
    source = args.tree or tree_source(spec_obj)
    if source in (None, "explicit"):
        if args.tree == "explicit" and not isinstance(spec_obj.get("tree"), list):
            raise FactorTreeError("--tree explicit needs an edge list in the spec file")
        return spec_from_dict(spec_obj, data.d), None
    base = dict(spec_obj)
    base.pop("tree", None)
    p = int(spec_obj["p"])
    variant = "polychoric" if source == "polychoric" or p == 0 else f"partial-{p}f"
    edges = select_tree(data, cut, variant, rule, options=options)
    base["tree"] = [[j + 1, k + 1] for j, k in edges]
    return spec_from_dict(base, data.d), variant


def cmd_fit(args):
    data, remap = _load_data(args.input)
    spec_obj = _load_json(args.spec)
    rule = gauss_legendre_unit(args.nq)
    options = _options(args)
    options.compute_se = not args.no_se
    cut = estimate_cutpoints(data)
    spec, variant = _resolve_tree(spec_obj, args, data, cut, rule, options)
    fit = fit_ifm(data, spec, rule, options, cut=cut)
    report = _header("fit", args)
    report.update({"input": os.path.abspath(args.input), "label_remap": remap,
                   "tree_source": variant or ("explicit" if spec.has_tree else None),
                   "model": fit_to_dict(fit, data.item_names)})
    write_json_atomic(report, args.out)
    return EXIT_OK


def cmd_select(args):
    data, remap = _load_data(args.input)
    spec_obj = _load_json(args.spec) if args.spec else {"p": args.p}
    p = int(spec_obj.get("p", args.p))
    rule = gauss_legendre_unit(args.nq)
    options = _options(args)
    fc = [family_from_name(f) for f in spec_obj.get("factor_candidates", [])] or FACTOR_CANDIDATES
    tc = [family_from_name(f) for f in spec_obj.get("tree_candidates", [])] or TREE_CANDIDATES
    tree = None
    if args.tree == "explicit" or isinstance(spec_obj.get("tree"), list):
        tree = [(a - 1, b - 1) for a, b in spec_obj["tree"]]
    elif spec_obj.get("tree") is False:
        tree = False
    res = select_families(data, p, rule=rule, options=options, factor_candidates=fc,
                          tree_candidates=tc, tree=tree, threads=args.threads)
    report = _header("select", args)
    report.update({
        "input": os.path.abspath(args.input), "label_remap": remap,
        "steps": [{"stage": s.stage, "winner": s.winner, "candidates": s.candidates}
                  for s in res.steps],
        "trees": {v: {"edges": [[j + 1, k + 1] for j, k in e], "provenance": e.provenance}
                  for v, e in res.trees.items()},
        "tree_fits": {v: {"spec": spec_to_dict(f.spec), "loglik": f.loglik, "aic": f.aic,
                          "n_params": f.n_params} for v, f in res.tree_fits.items()},
        "winner_tree": next((v for v, f in res.tree_fits.items() if f is res.fit), None),
        "model": fit_to_dict(res.fit, data.item_names),
    })
    write_json_atomic(report, args.out)
    return EXIT_OK


def cmd_simulate(args):
    designs = builtin_designs(n=args.n, seed=args.seed, replications=args.reps)
    if args.design == "list":
        for name, des in designs.items():
            print(f"{name}\tn={des.n}\td={des.spec.d}\tedges={[(j + 1, k + 1) for j, k in des.spec.tree]}")
        return EXIT_OK
    if args.design not in designs:
        print(f"unknown design {args.design!r}; use --design list", file=sys.stderr)
        return EXIT_IO
    des = designs[args.design]
    os.makedirs(args.out, exist_ok=True)
    for r in range(args.reps):
        path = os.path.join(args.out, f"{des.name}_seed{args.seed}_rep{r:04d}.csv")
        tmp = path + ".tmp"
        write_csv(draw(des, r), tmp)
        os.replace(tmp, path)
    return EXIT_OK


def cmd_compare(args):
    data, _ = _load_data(args.input)
    fit1 = fit_from_dict(_load_json(args.model1))
    fit2 = fit_from_dict(_load_json(args.model2))
    rule = gauss_legendre_unit(args.nq)
    res = vuong(data, fit1, fit2, rule)
    report = _header("compare", args)
    report.update({"model1": os.path.abspath(args.model1), "model2": os.path.abspath(args.model2),
                   "aic1": fit1.aic, "aic2": fit2.aic, "vuong": res.to_dict()})
    write_json_atomic(report, args.out)
    return EXIT_OK


def cmd_diagnose(args):
    data, _ = _load_data(args.input)
    cut = estimate_cutpoints(data)
    report = _header("diagnose", args)
    rho, lo, hi = observed_semi_corr(data, cut)
    report["semi_correlations"] = {
        "observed": {"rho_n": rho, "lower": lo, "upper": hi, "estimator": "experimental"},
        "theoretical": {}}
    for fam in ("bvn", "t2", "t5", "frank", "gumbel", "sgumbel"):
        low, up = theoretical_semi_corr(fam, args.rho_n)
        report["semi_correlations"]["theoretical"][fam] = {"lower": low, "upper": up}
    if args.model:
        fit = fit_from_dict(_load_json(args.model))
        report["aic"] = fit.aic
        if fit.spec.is_gaussian():
            R_obs = polychoric_matrix(data, cut)
            d1, d2, d3 = discrepancies(model_corr_matrix(fit.spec, fit.params), R_obs)
            report["discrepancies"] = {"D1": d1, "D2": d2, "D3": d3}
        else:
            report["discrepancies"] = None
    write_json_atomic(report, args.out)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="factortree", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="CSV with a header row of item names")
        p.add_argument("--nq", type=int, default=DEFAULT_NQ, help="quadrature points (default 15)")
        p.add_argument("--seed", type=int, default=1, help="random seed (default 1)")
        p.add_argument("--threads", type=int, default=1, help="worker cap (default 1)")
        p.add_argument("--out", required=True, help="output path")

    def fitting(p):
        p.add_argument("--maxiter", type=int, default=500, help="optimizer iterations (default 500)")
        p.add_argument("--gtol", type=float, default=1e-6, help="gradient tolerance (default 1e-6)")
        p.add_argument("--identification", choices=["pilot", "last"], default="pilot",
                       help="2-factor BVN identification rule (default pilot)")
        p.add_argument("--tree", choices=["explicit", "polychoric", "partial"], default=None,
                       help="tree source; default taken from the spec file")

    p = sub.add_parser("fit", help="fit one model")
    common(p)
    fitting(p)
    p.add_argument("--spec", required=True, help="JSON model spec")
    p.add_argument("--no-se", action="store_true", help="skip standard errors")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="sequential family and tree selection")
    common(p)
    fitting(p)
    p.add_argument("--spec", help="JSON with p and optional candidate lists")
    p.add_argument("--p", type=int, default=1, help="number of factors when no spec (default 1)")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="draw data sets from a built-in design")
    common(p, needs_input=False)
    p.add_argument("--design", required=True, help="design name, or 'list'")
    p.add_argument("--reps", type=int, default=1, help="replications (default 1)")
    p.add_argument("--n", type=int, default=500, help="sample size (default 500)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="AIC-adjusted Vuong comparison of two fit reports")
    common(p)
    p.add_argument("--model1", required=True, help="fit report of model 1")
    p.add_argument("--model2", required=True, help="fit report of model 2")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("diagnose", help="semi-correlations and discrepancy measures")
    common(p)
    p.add_argument("--model", help="fit report of an all-BVN model for D1-D3")
    p.add_argument("--rho-n", type=float, default=0.35, dest="rho_n",
                   help="normal-scores correlation for theoretical semi-correlations")
    p.set_defaults(func=cmd_diagnose)
    return ap


def _error_report(args, exc):
    report = {"schema_version": SCHEMA_VERSION, "command": args.command, "status": "error",
              "error": type(exc).__name__, "message": str(exc),
              "diagnostics": getattr(exc, "diagnostics", {})}
    try:
        write_json_atomic(report, args.out)
    except OSError:
        pass


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads > 0:
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except _IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FactorTreeError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.command != "simulate":
            _error_report(args, exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
