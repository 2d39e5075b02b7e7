"""Command-line interface.

Commands: simulate, fit, transform, query, eval, cv. Every command writes
its outputs into --out and finishes with a manifest.txt recording the
resolved configuration, input digests, seeds, and the produced files.
Data rows use 0-based domain ids and item indices; component columns are
numbered from 1. All floats are written with 17 significant digits, so a
rerun with identical inputs and seed reproduces every CSV byte for byte.
"""

import argparse
import hashlib
import sys
import time
from pathlib import Path

import numpy as np

from .crossval import CvConfig, cv_error
from .data import (
    BlockDataMatrix,
    load_domain_table,
    save_domain_table,
    standardize_columns,
)
from .embedding import project_tables, query_knn, rescale_unit_variance
from .evaluation import normalize_weights, per_pc_error, weighted_rescale
from .model import fit, load_model, save_model
from .solver import SolverConfig
from .synth import (
    SynthConfig,
    generate,
    grid_index,
    latent_points,
    load_provenance,
    save_provenance,
)
from .weights import load_weights, save_weights

FLOAT_FMT = "%.17g"


def _fmt(value):
    return FLOAT_FMT % value


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir, command, config_items, inputs, outputs, started):
    lines = [f"command {command}"]
    lines += [f"config {key} {value}" for key, value in config_items]
    lines += [f"input {path} sha256={_sha256(path)}" for path in inputs]
    lines += [f"output {name}" for name in outputs]
    lines.append(f"duration_seconds {time.monotonic() - started:.3f}")
    (out_dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _data_paths(arg):
    return [p for p in arg.split(",") if p]


def _load_tables(paths):
    return [load_domain_table(path, domain=d) for d, path in enumerate(paths)]


def _int_list(arg):
    return [int(v) for v in arg.split(",") if v]


def _float_list(arg):
    return [float(v) for v in arg.split(",") if v]


def cmd_simulate(args):
    started = time.monotonic()
    out = _out_dir(args)
    config = SynthConfig(
        grid_side=args.grid_side,
        dims=tuple(_int_list(args.dims)),
        replicates=tuple(_int_list(args.replicates)),
        noise=args.noise,
        link_prob=args.link_prob,
        seed=args.seed,
    )
    dataset = generate(config)
    outputs = []
    for d, table in enumerate(dataset.tables):
        name = f"data_d{d}.csv"
        save_domain_table(out / name, table.values)
        outputs.append(name)
    save_weights(out / "weights_true.csv", dataset.true_graph)
    save_weights(out / "weights_observed.csv", dataset.observed_graph)
    save_provenance(out / "provenance.txt", config)
    outputs += ["weights_true.csv", "weights_observed.csv", "provenance.txt"]
    _write_manifest(
        out,
        "simulate",
        [
            ("grid_side", config.grid_side),
            ("dims", ",".join(map(str, config.dims))),
            ("replicates", ",".join(map(str, config.replicates))),
            ("noise", _fmt(config.noise)),
            ("link_prob", _fmt(config.link_prob)),
            ("seed", config.seed),
        ],
        [],
        outputs,
        started,
    )
    print(
        f"simulated {config.num_domains} domains, n={dataset.layout.n}, "
        f"true edges {dataset.true_graph.n_entries}, "
        f"observed edges {dataset.observed_graph.n_entries}"
    )
    return 0


def _solver_config(args, k):
    return SolverConfig(
        k=k,
        gamma_m=args.gamma_m,
        gamma_w=args.gamma_w,
        regularizer=args.regularizer,
    )


def cmd_fit(args):
    started = time.monotonic()
    out = _out_dir(args)
    paths = _data_paths(args.data)
    tables = _load_tables(paths)
    layout_p = sum(t.n_features for t in tables)
    k = args.k if args.k is not None else layout_p
    if k > layout_p:
        raise ValueError(f"k={k} exceeds the stacked feature count {layout_p}")
    layout = BlockDataMatrix.from_tables(tables).layout
    graph = load_weights(args.weights, layout)
    model, solution = fit(tables, graph, _solver_config(args, k))
    save_model(out / "model.txt", model)
    with open(out / "eigenvalues.csv", "w") as fh:
        fh.write("k,lambda\n")
        for rank, lam in enumerate(solution.eigenvalues, start=1):
            fh.write(f"{rank},{_fmt(lam)}\n")
    _write_manifest(
        out,
        "fit",
        [
            ("k", k),
            ("gamma_m", _fmt(args.gamma_m)),
            ("gamma_w", _fmt(args.gamma_w)),
            ("regularizer", args.regularizer),
        ],
        paths + [args.weights],
        ["model.txt", "eigenvalues.csv"],
        started,
    )
    print(
        f"fit k={k} gamma_m={_fmt(args.gamma_m)}: "
        f"{solution.n_positive} eigenvalues above threshold"
        + (", ties present" if solution.has_ties else "")
    )
    return 0


def _rescaled(emb, args, graph=None):
    if args.rescale == "unit-variance":
        return rescale_unit_variance(emb)
    if args.rescale == "weighted":
        if graph is None:
            raise ValueError("weighted rescaling needs --weights")
        return weighted_rescale(emb, graph)
    return emb


def cmd_transform(args):
    started = time.monotonic()
    out = _out_dir(args)
    model = load_model(args.model)
    paths = _data_paths(args.data)
    tables = _load_tables(paths)
    emb = _rescaled(project_tables(model, tables), args)
    with open(out / "embedding.csv", "w") as fh:
        fh.write("domain,index," + ",".join(f"y_{j + 1}" for j in range(emb.k)) + "\n")
        for d in range(emb.layout.num_domains):
            block = emb.block(d)
            for i, row in enumerate(block):
                fh.write(f"{d},{i}," + ",".join(_fmt(v) for v in row) + "\n")
    _write_manifest(
        out,
        "transform",
        [("rescale", args.rescale)],
        [args.model] + paths,
        ["embedding.csv"],
        started,
    )
    print(f"transformed {emb.layout.total_items} items into {emb.k} coordinates")
    return 0


def cmd_query(args):
    started = time.monotonic()
    out = _out_dir(args)
    model = load_model(args.model)
    paths = _data_paths(args.data)
    tables = _load_tables(paths)
    emb = _rescaled(project_tables(model, tables), args)
    k_dims = args.kprime if args.kprime is not None else emb.k
    y_query = emb.row(args.domain, args.index)
    domains = _int_list(args.candidate_domains) if args.candidate_domains else None
    result = query_knn(emb, y_query, k_dims=k_dims, top=args.top, domains=domains)
    truth = None
    if args.truth:
        config = load_provenance(args.truth)
        if config.layout().n != emb.layout.n:
            raise ValueError(
                "provenance describes different item counts than the given data"
            )
        grid = latent_points(config.grid_side)
        q_point = grid[grid_index(config, args.index)]
        truth = np.linalg.norm(
            grid[grid_index(config, result.indices)] - q_point, axis=1
        )
    with open(out / "query.csv", "w") as fh:
        fh.write("rank,domain,index,distance" + (",truth" if truth is not None else "") + "\n")
        for pos, (d, i, dist) in enumerate(result, start=1):
            line = f"{pos},{d},{i},{_fmt(dist)}"
            if truth is not None:
                line += f",{_fmt(truth[pos - 1])}"
            fh.write(line + "\n")
    _write_manifest(
        out,
        "query",
        [
            ("domain", args.domain),
            ("index", args.index),
            ("kprime", k_dims),
            ("rescale", args.rescale),
        ],
        [args.model] + paths + ([args.truth] if args.truth else []),
        ["query.csv"],
        started,
    )
    print(f"query (domain {args.domain}, item {args.index}): ranked {len(result)} items")
    return 0


def cmd_eval(args):
    started = time.monotonic()
    out = _out_dir(args)
    model = load_model(args.model)
    paths = _data_paths(args.data)
    tables = _load_tables(paths)
    emb = project_tables(model, tables)
    graph = load_weights(args.weights, emb.layout)
    emb = _rescaled(emb, args, graph=graph)
    report = per_pc_error(emb, normalize_weights(graph))
    with open(out / "error.csv", "w") as fh:
        fh.write("pc,error\n")
        for pc, value in enumerate(report.per_pc, start=1):
            fh.write(f"{pc},{_fmt(value)}\n")
    _write_manifest(
        out,
        "eval",
        [("rescale", args.rescale)],
        [args.model] + paths + [args.weights],
        ["error.csv"],
        started,
    )
    print(f"matching error over {emb.k} components: {_fmt(report.total)}")
    return 0


def cmd_cv(args):
    started = time.monotonic()
    out = _out_dir(args)
    paths = _data_paths(args.data)
    tables = _load_tables(paths)
    tables = [standardize_columns(t) for t in tables]
    block = BlockDataMatrix.from_tables(tables)
    graph = load_weights(args.weights, block.layout)
    config = CvConfig(
        holdout_prob=args.holdout,
        repeats=args.repeats,
        gamma_grid=tuple(_float_list(args.grid)),
        gamma_w=args.gamma_w,
        regularizer=args.regularizer,
        max_pcs=args.max_pcs,
        knee_threshold=args.knee_theta,
        seed=args.seed,
        jobs=args.jobs,
    )
    report = cv_error(block, graph, config)
    with open(out / "cv.csv", "w") as fh:
        fh.write("gamma_m,pc,mean_error,se_error\n")
        for gi, gamma in enumerate(report.gamma_grid):
            for pc in range(config.max_pcs):
                fh.write(
                    f"{_fmt(gamma)},{pc + 1},"
                    f"{_fmt(report.mean_error[gi, pc])},{_fmt(report.se_error[gi, pc])}\n"
                )
    selection = (
        f"selected_k {report.selected_k}\n"
        f"selected_gamma_m {_fmt(report.selected_gamma_m)}\n"
        f"rule knee\n"
        f"knee_threshold {_fmt(config.knee_threshold)}\n"
        f"successful_repeats {report.n_success} of {config.repeats}\n"
    )
    (out / "selection.txt").write_text(selection)
    _write_manifest(
        out,
        "cv",
        [
            ("holdout", _fmt(config.holdout_prob)),
            ("repeats", config.repeats),
            ("grid", ",".join(_fmt(g) for g in config.gamma_grid)),
            ("gamma_w", _fmt(config.gamma_w)),
            ("regularizer", config.regularizer),
            ("max_pcs", config.max_pcs),
            ("knee_threshold", _fmt(config.knee_threshold)),
            ("seed", config.seed),
            ("jobs", config.jobs),
        ],
        paths + [args.weights],
        ["cv.csv", "selection.txt"],
        started,
    )
    print(
        f"cv selected k={report.selected_k} gamma_m={_fmt(report.selected_gamma_m)} "
        f"({report.n_success}/{config.repeats} repeats)"
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cdmca",
        description=(
            "Cross-domain matching correlation analysis: embed items from "
            "several feature spaces into one shared space using match weights."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a synthetic multi-domain dataset")
    sim.add_argument("--grid-side", type=int, default=5)
    sim.add_argument("--dims", default="10,30,100", help="features per domain")
    sim.add_argument("--replicates", default="5,10,20", help="grid passes per domain")
    sim.add_argument("--noise", type=float, default=0.5)
    sim.add_argument("--link-prob", type=float, default=0.02)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    fit_p = sub.add_parser("fit", help="fit projections from data and weights")
    fit_p.add_argument("--data", required=True, help="comma-separated domain CSVs")
    fit_p.add_argument("--weights", required=True)
    fit_p.add_argument("--k", type=int, default=None, help="components (default: all)")
    fit_p.add_argument("--gamma-m", type=float, default=0.1)
    fit_p.add_argument("--gamma-w", type=float, default=0.0)
    fit_p.add_argument(
        "--regularizer", choices=("identity", "alpha-scaled"), default="alpha-scaled"
    )
    fit_p.add_argument("--out", required=True)
    fit_p.set_defaults(func=cmd_fit)

    tr = sub.add_parser("transform", help="project tables with a fitted model")
    tr.add_argument("--model", required=True)
    tr.add_argument("--data", required=True)
    tr.add_argument("--rescale", choices=("none", "unit-variance"), default="none")
    tr.add_argument("--out", required=True)
    tr.set_defaults(func=cmd_transform)

    qr = sub.add_parser("query", help="rank items by distance to a training item")
    qr.add_argument("--model", required=True)
    qr.add_argument("--data", required=True)
    qr.add_argument("--domain", type=int, required=True)
    qr.add_argument("--index", type=int, required=True)
    qr.add_argument("--kprime", type=int, default=None, help="coordinates used")
    qr.add_argument("--top", type=int, default=None)
    qr.add_argument("--candidate-domains", default=None)
    qr.add_argument("--truth", default=None, help="synthetic provenance file")
    qr.add_argument("--rescale", choices=("none", "unit-variance"), default="unit-variance")
    qr.add_argument("--out", required=True)
    qr.set_defaults(func=cmd_query)

    ev = sub.add_parser("eval", help="per-component matching error of a model")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--weights", required=True, help="observed, true, or held-out CSV")
    ev.add_argument(
        "--rescale", choices=("none", "unit-variance", "weighted"), default="none"
    )
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_eval)

    cv = sub.add_parser("cv", help="holdout cross-validation over gamma_m")
    cv.add_argument("--data", required=True)
    cv.add_argument("--weights", required=True)
    cv.add_argument("--grid", default="0,0.001,0.01,0.1,1.0")
    cv.add_argument("--holdout", type=float, default=0.1)
    cv.add_argument("--repeats", type=int, default=30)
    cv.add_argument("--max-pcs", type=int, default=10)
    cv.add_argument("--gamma-w", type=float, default=0.0)
    cv.add_argument(
        "--regularizer", choices=("identity", "alpha-scaled"), default="alpha-scaled"
    )
    cv.add_argument("--knee-theta", type=float, default=0.5)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--jobs", type=int, default=1)
    cv.add_argument("--out", required=True)
    cv.set_defaults(func=cmd_cv)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
