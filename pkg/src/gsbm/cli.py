"""Command-line interface tying generation, fitting, analysis and the
replication harness together.

Exit codes: 0 success, 1 usage error, 2 data/configuration error,
3 numerical failure. All output files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import graph_io
from .exceptions import ConvergenceError, GsbmError
from .graph_io import (
    ObservedGraph,
    format_edge_list,
    format_pair_list,
    largest_connected_component,
    load_fit,
    parse_edge_list,
    parse_mask,
    save_fit,
    write_text_atomic,
)
from .harness import ExperimentSpec, missing_pairs, run_experiment
from .inference import detect_outliers, predict_links, resolve_lambdas, spectral_communities
from .simulate import (
    OutlierConfig,
    SbmConfig,
    build_ground_truth,
    sample_adjacency,
    sample_mask,
    split_seeds,
)
from .solver import SolverConfig, fit as solver_fit

log = logging.getLogger("gsbm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x):
    return repr(float(x))


def _csv_cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return _fmt(x)
    return str(x)


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_csv_cell(x) for x in row) for row in rows]
    write_text_atomic(path, "\n".join(lines) + "\n")


def _read_text(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_graph(args):
    graph = parse_edge_list(_read_text(args.graph))
    if getattr(args, "lcc", False):
        before = graph.n
        graph = largest_connected_component(graph)
        log.info("largest connected component: %d of %d nodes kept", graph.n, before)
    if getattr(args, "mask", None):
        mask = _mask_from_file(args.mask, graph, args.mask_mode)
        graph = ObservedGraph(
            n=graph.n, adjacency=graph.adjacency, mask=mask, node_names=graph.node_names
        )
    return graph


def _mask_from_file(path, graph, mode):
    """Mask pair lists may reference node labels; fall back to dense indices
    when some token is not a known label."""
    text = _read_text(path)
    name_to_idx = {name: i for i, name in enumerate(graph.node_names)}
    entries = list(graph_io._content_lines(text))
    tokens = [tok for _, toks in entries for tok in toks]
    if tokens and all(tok in name_to_idx for tok in tokens):
        text = "\n".join(
            " ".join(str(name_to_idx[tok]) for tok in toks) for _, toks in entries
        )
    return parse_mask(text, graph.n, mode)


def _names_or_indices(names, n):
    return names if names is not None else [str(i) for i in range(n)]


# ---------------------------------------------------------------- generate

def _run_generate(args):
    kind = "hub" if args.outliers == "none" else args.outliers
    s = 0 if args.outliers == "none" else args.s
    outlier = OutlierConfig(kind=kind, s=s, pi_hub=args.pi_hub, pi_mix=args.pi_mix)
    seed_truth, seed_adj, seed_mask = split_seeds(args.seed, 0, 3)

    truth = build_ground_truth(
        SbmConfig(args.n, args.k, args.p_in, args.p_out, seed_truth), outlier
    )
    A = sample_adjacency(truth, seed_adj)
    omega = sample_mask(truth.n, args.p_observe, seed_mask)
    names = [str(i) for i in range(truth.n)]
    graph = ObservedGraph(n=truth.n, adjacency=A, mask=omega, node_names=names)

    write_text_atomic(args.out, format_edge_list(graph))
    log.info("wrote %d-node edge list to %s", truth.n, args.out)

    if args.mask:
        hidden = missing_pairs(omega)
        write_text_atomic(args.mask, format_pair_list(hidden, names))
        log.info("wrote %d missing dyads to %s", len(hidden), args.mask)

    if args.truth:
        payload = {
            "n": truth.n,
            "n_inliers": truth.n_inliers,
            "communities": [int(c) for c in truth.communities],
            "outliers": [int(i) for i in truth.outliers],
            "config": {
                "n": args.n, "k": args.k, "p_in": args.p_in, "p_out": args.p_out,
                "outliers": args.outliers, "s": s, "pi_hub": args.pi_hub,
                "pi_mix": args.pi_mix, "p_observe": args.p_observe, "seed": args.seed,
            },
        }
        write_text_atomic(args.truth, json.dumps(payload, indent=1) + "\n")
        log.info("wrote ground truth to %s", args.truth)

    log.info("seed=%d outliers=%s s=%d", args.seed, args.outliers, s)
    return 0


# ---------------------------------------------------------------- fit

def _run_fit(args):
    graph = _load_graph(args)
    lam1, lam2 = resolve_lambdas(args.lambda1, args.lambda2, graph.adjacency, graph.mask)
    cfg = SolverConfig(
        lambda1=lam1, lambda2=lam2, epsilon=args.epsilon, eta=args.eta,
        max_iters=args.max_iters, rel_tol=args.rel_tol, svd_tol=args.svd_tol,
    )
    log.info("n=%d observed_dyads=%d", graph.n, int(graph.mask.sum()) // 2)
    log.info("lambda1=%s lambda2=%s epsilon=%s eta=%s rel_tol=%s svd_tol=%s max_iters=%d",
             _fmt(lam1), _fmt(lam2), _fmt(cfg.epsilon), _fmt(cfg.eta),
             _fmt(cfg.rel_tol), _fmt(cfg.svd_tol), cfg.max_iters)
    result = solver_fit(graph.adjacency, graph.mask, cfg)
    save_fit(result, args.out, node_names=graph.node_names)
    log.info("iterations=%d converged=%s final_objective=%s",
             result.iterations, result.converged, _fmt(result.objective_trace[-1]))
    log.info("wrote fit to %s", args.out)
    return 0


# ---------------------------------------------------------------- detect

def _run_detect(args):
    result, names = load_fit(args.fit)
    n = result.L_hat.shape[0]
    names = _names_or_indices(names, n)
    A = omega = None
    if args.graph:
        graph = _load_graph(args)
        if graph.n != n:
            raise UsageError(f"graph has {graph.n} nodes but fit has {n}")
        if graph.node_names != names:
            raise UsageError("graph node labels do not line up with the fit's")
        A, omega = graph.adjacency, graph.mask
    report = detect_outliers(result, zero_tol=args.zero_tol, A=A, omega=omega)
    detected = set(int(i) for i in report.detected)
    rows = []
    for i in range(n):
        lhs = float("nan") if report.certificate_lhs is None else report.certificate_lhs[i]
        rows.append((names[i], float(report.column_norms[i]), lhs, int(i in detected)))
    _write_csv(args.out, ["node", "col_norm", "cert_lhs", "detected"], rows)
    log.info("detected %d outliers (threshold lambda2/2 = %s)",
             len(detected), _fmt(report.threshold))
    log.info("wrote outlier report to %s", args.out)
    return 0


# ---------------------------------------------------------------- predict

def _run_predict(args):
    result, names = load_fit(args.fit)
    n = result.L_hat.shape[0]
    names = _names_or_indices(names, n)
    name_to_idx = {name: i for i, name in enumerate(names)}

    if args.missing:
        if not args.graph or not args.mask:
            raise UsageError("--missing needs --graph and --mask to locate unexamined dyads")
        graph = _load_graph(args)
        if graph.n != n:
            raise UsageError(f"graph has {graph.n} nodes but fit has {n}")
        if graph.node_names != names:
            raise UsageError("graph node labels do not line up with the fit's")
        pairs = missing_pairs(graph.mask)
    elif args.pairs:
        entries = list(graph_io._content_lines(_read_text(args.pairs)))
        pairs = []
        for line_no, tokens in entries:
            if len(tokens) != 2:
                raise UsageError(f"pairs file line {line_no}: expected two labels")
            try:
                pairs.append([name_to_idx[tokens[0]], name_to_idx[tokens[1]]])
            except KeyError as missing_label:
                raise UsageError(
                    f"pairs file line {line_no}: unknown node {missing_label}"
                ) from None
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    else:
        raise UsageError("predict needs --pairs or --missing")

    prediction = predict_links(result, pairs)
    rows = [
        (names[i], names[j], float(score))
        for (i, j), score in zip(prediction.pairs, prediction.scores)
    ]
    _write_csv(args.out, ["i", "j", "score"], rows)
    log.info("wrote %d predictions to %s", len(rows), args.out)
    return 0


# ---------------------------------------------------------------- communities

def _run_communities(args):
    result, names = load_fit(args.fit)
    n = result.L_hat.shape[0]
    names = _names_or_indices(names, n)
    report = spectral_communities(result, k=args.k)
    if report.degenerate:
        log.warning("spectral gap is degenerate; assignment may be arbitrary")
    if args.k == 2:
        rows = [(names[i], int(report.labels[i])) for i in range(n)]
        _write_csv(args.out, ["node", "label"], rows)
    else:
        header = ["node"] + [f"v{j + 1}" for j in range(args.k)]
        rows = [
            tuple([names[i]] + [float(x) for x in report.eigenvectors[i]])
            for i in range(n)
        ]
        _write_csv(args.out, header, rows)
    log.info("outliers excluded from labels: %d", len(report.outliers))
    log.info("wrote community assignment to %s", args.out)
    return 0


# ---------------------------------------------------------------- bench

def _parse_float_list(text):
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _parse_int_list(text):
    return [int(x) for x in _parse_float_list(text)]


def _run_bench(args):
    s_values = _parse_int_list(args.s)
    pi_values = _parse_float_list(args.pi)
    kind = args.outlier_kind or ("mixed" if args.scenario == "mixed" else "hub")
    p_observe = args.p_observe
    if p_observe is None:
        p_observe = 0.8 if args.scenario == "prediction" else 1.0

    summary_rows = []
    rep_rows = []
    for s in s_values:
        for pi in pi_values:
            outlier = OutlierConfig(
                kind=kind, s=s,
                pi_hub=pi if kind == "hub" else 0.5,
                pi_mix=pi if kind == "mixed" else 0.6,
            )
            spec = ExperimentSpec(
                scenario=args.scenario,
                sbm=SbmConfig(args.n, args.k, args.p_in, args.p_out, seed=0),
                outlier=outlier,
                p_observe=p_observe,
                replications=args.reps,
                base_seed=args.seed,
                lambda1=args.lambda1,
                lambda2=args.lambda2,
            )
            log.info("cell scenario=%s s=%d pi=%g reps=%d seed=%d",
                     args.scenario, s, pi, args.reps, args.seed)
            report = run_experiment(spec, workers=args.workers)
            summary_rows.append({
                "scenario": args.scenario, "s": s, "pi": pi, "p_observe": p_observe,
                "replications": args.reps, "failures": report.failures,
                "power": report.power, "fdr": report.fdr,
                "pred_mse_model": report.pred_mse_model,
                "pred_mse_baseline": report.pred_mse_baseline,
            })
            for rec in report.per_rep:
                rep_rows.append((
                    args.scenario, s, pi, p_observe, rec.rep, int(rec.converged),
                    rec.iterations, rec.n_detected, rec.power, rec.fdr,
                    rec.pred_mse_model, rec.pred_mse_baseline, rec.error or "",
                ))

    os.makedirs(args.out_dir, exist_ok=True)
    summary_path = os.path.join(args.out_dir, "summary.csv")
    header = ["scenario", "s", "pi", "p_observe", "replications", "failures",
              "power", "fdr", "pred_mse_model", "pred_mse_baseline"]
    _write_csv(summary_path, header, [tuple(row[h] for h in header) for row in summary_rows])
    reps_path = os.path.join(args.out_dir, "reps.csv")
    _write_csv(reps_path, ["scenario", "s", "pi", "p_observe", "rep", "converged",
                           "iterations", "n_detected", "power", "fdr",
                           "pred_mse_model", "pred_mse_baseline", "error"], rep_rows)
    log.info("wrote %s and %s", summary_path, reps_path)

    if not args.no_figure:
        from . import plots

        figure_path = os.path.join(args.out_dir, f"summary_{args.scenario}.png")
        if args.scenario == "prediction":
            plots.save_prediction_figure(summary_rows, figure_path, args.scenario)
        else:
            plots.save_detection_figure(summary_rows, figure_path, args.scenario)
        log.info("wrote %s", figure_path)
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    parser = _Parser(prog="gsbm", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    g = sub.add_parser("generate", help="write a synthetic graph, mask and ground truth")
    g.add_argument("--n", type=int, required=True, help="number of inlier nodes")
    g.add_argument("--k", type=int, required=True, help="number of communities")
    g.add_argument("--p-in", type=float, required=True)
    g.add_argument("--p-out", type=float, required=True)
    g.add_argument("--outliers", choices=["hub", "mixed", "none"], default="none")
    g.add_argument("--s", type=int, default=0, help="number of outlier nodes")
    g.add_argument("--pi-hub", type=float, default=0.5)
    g.add_argument("--pi-mix", type=float, default=0.6)
    g.add_argument("--p-observe", type=float, default=1.0)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="edge list output path")
    g.add_argument("--mask", default=None, help="missing-dyad pair list output path")
    g.add_argument("--truth", default=None, help="ground-truth JSON output path")
    g.set_defaults(func=_run_generate)

    f = sub.add_parser("fit", help="estimate the decomposition of an observed graph")
    f.add_argument("--graph", required=True, help="edge list path")
    f.add_argument("--mask", default=None, help="pair list of dyads (see --mask-mode)")
    f.add_argument("--mask-mode", choices=["missing", "observed"], default="missing")
    f.add_argument("--lcc", action="store_true",
                   help="restrict to the largest connected component")
    f.add_argument("--lambda1", default="auto", help="number, 'auto', or 'c<mult>'")
    f.add_argument("--lambda2", default="auto", help="number, 'auto', or 'c<mult>'")
    f.add_argument("--epsilon", type=float, default=1e-3)
    f.add_argument("--eta", type=float, default=None)
    f.add_argument("--max-iters", type=int, default=500)
    f.add_argument("--rel-tol", type=float, default=1e-6)
    f.add_argument("--svd-tol", type=float, default=1e-9)
    f.add_argument("--out", required=True, help="fit artifact output path")
    f.set_defaults(func=_run_fit)

    d = sub.add_parser("detect", help="extract outliers from a saved fit")
    d.add_argument("--fit", required=True)
    d.add_argument("--graph", default=None, help="edge list (fills the certificate column)")
    d.add_argument("--mask", default=None)
    d.add_argument("--mask-mode", choices=["missing", "observed"], default="missing")
    d.add_argument("--zero-tol", type=float, default=None)
    d.add_argument("--out", required=True)
    d.set_defaults(func=_run_detect)

    pr = sub.add_parser("predict", help="score node pairs from a saved fit")
    pr.add_argument("--fit", required=True)
    pr.add_argument("--pairs", default=None, help="file of label pairs to score")
    pr.add_argument("--missing", action="store_true",
                    help="score all unexamined dyads instead")
    pr.add_argument("--graph", default=None)
    pr.add_argument("--mask", default=None)
    pr.add_argument("--mask-mode", choices=["missing", "observed"], default="missing")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=_run_predict)

    c = sub.add_parser("communities", help="sign-rule community assignment from a fit")
    c.add_argument("--fit", required=True)
    c.add_argument("--k", type=int, default=2)
    c.add_argument("--out", required=True)
    c.set_defaults(func=_run_communities)

    b = sub.add_parser("bench", help="seeded replication experiments with CSV reports")
    b.add_argument("--scenario", choices=["hub", "mixed", "prediction"], required=True)
    b.add_argument("--n", type=int, default=200)
    b.add_argument("--k", type=int, default=3)
    b.add_argument("--p-in", type=float, default=0.5)
    b.add_argument("--p-out", type=float, default=0.2)
    b.add_argument("--s", default="2,5,10", help="comma-separated outlier counts")
    b.add_argument("--pi", default=None, help="comma-separated signal levels")
    b.add_argument("--outlier-kind", choices=["hub", "mixed"], default=None,
                   help="outlier type for the prediction scenario")
    b.add_argument("--p-observe", type=float, default=None)
    b.add_argument("--reps", type=int, default=20)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--lambda1", default=None,
                   help="number, 'auto', or 'c<mult>'; default: calibrated per scenario")
    b.add_argument("--lambda2", default=None,
                   help="number, 'auto', or 'c<mult>'; default: calibrated per scenario")
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--out-dir", required=True)
    b.add_argument("--no-figure", action="store_true")
    b.set_defaults(func=_run_bench)

    return parser


def cli_dispatch(argv):
    """Run one CLI invocation; returns the process exit code."""
    parser = build_parser()
    if not logging.getLogger().handlers:
        logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            parser.error("a subcommand is required")
        if getattr(args, "pi", None) is None and getattr(args, "scenario", None):
            args.pi = {"hub": "0.2,0.5,0.8", "mixed": "0.4,0.6,0.8",
                       "prediction": "0.2"}[args.scenario]
        return args.func(args)
    except SystemExit as err:  # argparse --help
        return int(err.code or 0)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except ConvergenceError as err:
        log.error("numerical failure: %s", err)
        return 3
    except (GsbmError, OSError) as err:
        log.error("data error: %s", err)
        return 2


def main():
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
