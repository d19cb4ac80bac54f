"""Command-line interface.

Exit status is 0 on success, 2 for configuration or input errors and 3 for
numerical failures (eigensolver non-convergence, rank-deficient sampling).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .bench import ConfigError, RunConfig, emit_spectrum_report, random_baseline_select, run_benchmark
from .graph import dense_spectral_basis, read_edge_list, write_edge_list
from .knn import (
    GraphBuildConfig,
    build_graph,
    make_blobs,
    make_two_circles,
    read_features_csv,
    read_labels,
    read_term_counts,
    tfidf_features,
    write_features_csv,
    write_labels,
)
from .reconstruct import (
    PocsConfig,
    RankDeficiencyError,
    least_squares_reconstruct,
    pocs_reconstruct,
    read_sampled_signal,
    write_signal,
)
from .sampling import greedy_select, read_sampling_set, write_sampling_set
from .solver import ConvergenceError, SolverConfig
from .ssl import LabeledOracle, predict, write_predictions

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _cmd_generate(a):
    if a.kind == "two_circles":
        X, y = make_two_circles(a.n, (a.r1, a.r2), a.noise, a.seed)
    else:
        X, y = make_blobs(a.n, a.classes, a.dim, a.spread, a.std, a.seed)
    write_features_csv(X, a.features)
    write_labels(y, a.labels)
    print(f"wrote {X.shape[0]} points to {a.features} and labels to {a.labels}")


def _cmd_build(a):
    config = GraphBuildConfig(K=a.K, kernel=a.kernel, sigma_override=a.sigma)
    if a.term_counts:
        X, vocab = tfidf_features(read_term_counts(a.features), a.min_doc_freq, a.vocab_cap)
        print(f"tf-idf features over {vocab.size} terms")
    else:
        X = read_features_csv(a.features)
    g = build_graph(X, config)
    write_edge_list(g, a.out)
    print(f"{g} written to {a.out}")


def _solver(a) -> SolverConfig:
    return SolverConfig(seed=a.solver_seed)


def _cmd_select(a):
    g = read_edge_list(a.graph)
    if a.method == "greedy":
        sset = greedy_select(g, a.m, a.k, _solver(a))
    else:
        sset = random_baseline_select(g.n, a.m, a.seed, g, a.k, _solver(a))
    write_sampling_set(sset, a.out)
    print(f"selected {len(sset)} nodes, omega = {sset.omega:.6g}; written to {a.out}")


def _pocs_config(a) -> PocsConfig:
    return PocsConfig(max_iters=a.max_iters, stop_tol=a.stop_tol, kernel=a.kernel,
                      alpha=a.alpha, degree=a.degree)


def _cmd_reconstruct(a):
    g = read_edge_list(a.graph)
    samples = read_sampled_signal(a.samples)
    omega = a.omega
    if omega is None:
        if a.set is None:
            raise ConfigError("give --omega or a --set file carrying the cutoff")
        omega = read_sampling_set(a.set).omega
    if a.mode == "exact":
        f = least_squares_reconstruct(dense_spectral_basis(g), samples, omega)
    else:
        basis = dense_spectral_basis(g) if a.kernel == "ideal" else None
        res = pocs_reconstruct(g, samples, omega, _pocs_config(a), basis=basis)
        f = res.signal
        if not res.converged:
            print(f"warning: POCS stopped after {res.iterations} iterations without reaching "
                  f"stop_tol", file=sys.stderr)
    write_signal(f, a.out)
    print(f"reconstructed signal written to {a.out}")


def _cmd_classify(a):
    g = read_edge_list(a.graph)
    labels = read_labels(a.labels)
    if labels.size != g.n:
        raise ConfigError(f"{labels.size} labels for a graph of {g.n} nodes")
    if a.set is not None:
        sset = read_sampling_set(a.set)
    elif a.m is not None:
        sset = greedy_select(g, a.m, a.k, _solver(a))
    else:
        raise ConfigError("give --m or --set")
    pred = predict(g, sset, LabeledOracle(labels), a.mode, _pocs_config(a), omega=a.omega)
    write_predictions(pred, a.out)
    acc = pred.accuracy(labels, exclude=sset.nodes)
    print(f"accuracy on {g.n - len(sset)} unlabeled nodes: {acc:.4f}; predictions in {a.out}")


def _cmd_bench(a):
    config = RunConfig.from_json(a.config)
    if a.out_dir is not None:
        config.out_dir = a.out_dir
    if config.out_dir is None:
        raise ConfigError("no output directory: set outputs.dir or pass --out-dir")
    progress = (lambda msg: print(msg, file=sys.stderr)) if a.verbose else None
    result = run_benchmark(config, progress=progress)
    for row in result.summary():
        print(f"{row['method']:>6} k={row['k']:<2} budget={row['budget_pct']:g}% "
              f"accuracy={row['mean']:.4f} +- {row['std']:.4f} ({row['trials']} trials)")


def _cmd_spectrum(a):
    emit_spectrum_report(RunConfig.from_json(a.config), a.out)
    print(f"energy CDFs written to {a.out}")


def _add_pocs_args(p):
    p.add_argument("--mode", choices=("pocs", "exact"), default="pocs")
    p.add_argument("--kernel", choices=("sigmoid", "ideal"), default="sigmoid")
    p.add_argument("--alpha", type=float, default=8.0)
    p.add_argument("--degree", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--stop-tol", type=float, default=1e-7)
    p.add_argument("--omega", type=float, default=None, help="override the cutoff")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsampling",
                                     description="Graph sampling-set selection and label prediction.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset (features + labels)")
    p.add_argument("kind", choices=("two_circles", "blobs"))
    p.add_argument("--n", type=int, default=None, help="points per circle / total points")
    p.add_argument("--r1", type=float, default=1.0)
    p.add_argument("--r2", type=float, default=1.5)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--spread", type=float, default=1.5)
    p.add_argument("--std", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("build", help="features -> kNN edge list")
    p.add_argument("--features", required=True, help="CSV rows, or 'doc term count' lines with --term-counts")
    p.add_argument("--term-counts", action="store_true")
    p.add_argument("--min-doc-freq", type=int, default=20)
    p.add_argument("--vocab-cap", type=int, default=3000)
    p.add_argument("--K", type=int, default=10)
    p.add_argument("--kernel", choices=("gaussian", "cosine"), default="gaussian")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("select", help="edge list -> sampling set")
    p.add_argument("--graph", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--method", choices=("greedy", "random"), default="greedy")
    p.add_argument("--seed", type=int, default=0, help="random baseline seed")
    p.add_argument("--solver-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("reconstruct", help="sampling set + samples -> signal")
    p.add_argument("--graph", required=True)
    p.add_argument("--samples", required=True, help="'index value' lines")
    p.add_argument("--set", default=None, help="sampling-set file supplying the cutoff")
    _add_pocs_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("classify", help="select, query labels, predict")
    p.add_argument("--graph", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--set", default=None)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--solver-seed", type=int, default=0)
    _add_pocs_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("bench", help="run a benchmark config -> metrics CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("spectrum", help="GFT energy CDF of each class signal")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_spectrum)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "n", None) is None and args.command == "generate":
        args.n = 100 if args.kind == "two_circles" else 500
    try:
        args.func(args)
    except (ConvergenceError, RankDeficiencyError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
