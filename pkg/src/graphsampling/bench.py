"""Benchmark harness: label budgets, selection methods, trials and metric files.

A run is described by one JSON document (see :class:`RunConfig`). For every
dataset instance the graph is built once; greedy selection runs once per
instance and ``k`` up to the largest budget, and smaller budgets use prefixes
of that run. Random sets are drawn per (trial, budget) from seeded
generators. Every trial reports accuracy on the unlabeled nodes only.
"""

from __future__ import annotations

import csv
import io
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .filters import DEFAULT_ALPHA, DEFAULT_DEGREE
from .graph import Graph, dense_spectral_basis, read_edge_list
from .knn import (
    GraphBuildConfig,
    build_graph,
    make_blobs,
    make_two_circles,
    read_features_csv,
    read_labels,
    read_term_counts,
    tfidf_features,
)
from .reconstruct import PocsConfig
from .sampling import DEFAULT_K, SamplingSet, estimate_cutoff, greedy_select, write_sampling_set
from .solver import SolverConfig
from .ssl import AbsentClassWarning, LabeledOracle, gft_energy_cdf, predict

METRICS_HEADER = ["dataset", "method", "k", "budget_pct", "trial", "accuracy", "omega",
                  "select_ms", "recon_ms"]
K_STUDY = (1, 2, 4, 8, 16)
METHODS = ("greedy", "random")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def _take(d: dict, key: str, default, kind=None):
    v = d.pop(key, default)
    if kind is not None and v is not None:
        try:
            v = kind(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key!r} must be {kind.__name__}, got {v!r}") from None
    return v


def _reject_unknown(section: str, d: dict):
    if d:
        raise ConfigError(f"unknown key(s) in {section!r}: {sorted(d)}")


@dataclass
class RunConfig:
    """Parsed run configuration.

    JSON layout (every section optional except ``dataset``)::

        {"dataset": {"kind": "blobs" | "two_circles" | "features" | "graph", ...},
         "graph": {"K": 10, "kernel": "gaussian", "sigma_override": null},
         "selection": {"methods": ["greedy", "random"], "budgets": [1, 2, 5],
                       "sizes": null, "k": 8, "k_values": null, "seed": 0,
                       "trials": 10, "random_trials": 30},
         "reconstruction": {"mode": "pocs", "kernel": {"kind": "sigmoid", "alpha": 8,
                            "degree": 10}, "max_iters": 2000, "stop_tol": 1e-7},
         "solver": {"tol": 1e-8, "max_iters": 5000, "seed": 0},
         "outputs": {"dir": "bench_out", "timing": false, "write_sets": true}}

    ``budgets`` are percentages of the node count; ``sizes`` gives absolute
    label counts instead. ``trials`` applies to greedy and ``random_trials``
    to the random baseline; trial ``t`` uses dataset instance
    ``t mod instances``.
    """

    dataset: dict
    graph: GraphBuildConfig = field(default_factory=GraphBuildConfig)
    methods: tuple = METHODS
    budgets: tuple = tuple(range(1, 11))
    sizes: tuple | None = None
    k_values: tuple = (DEFAULT_K,)
    seed: int = 0
    trials: int = 10
    random_trials: int = 30
    reconstruction: str = "pocs"
    pocs: PocsConfig = field(default_factory=PocsConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    out_dir: str | None = None
    timing: bool = False
    write_sets: bool = True
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def dataset_name(self) -> str:
        return str(self.dataset.get("name", self.dataset.get("kind", "dataset")))

    @property
    def instances(self) -> int:
        return int(self.dataset.get("instances", 1))

    @classmethod
    def from_dict(cls, raw: dict, base_dir=None) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw = json.loads(json.dumps(raw))  # private deep copy
        try:
            return cls._parse(raw, Path(base_dir) if base_dir else Path.cwd())
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def _parse(cls, raw: dict, base_dir: Path) -> "RunConfig":
        if "dataset" not in raw:
            raise ConfigError("config needs a 'dataset' section")
        dataset = raw.pop("dataset")
        if not isinstance(dataset, dict) or "kind" not in dataset:
            raise ConfigError("'dataset' must be an object with a 'kind'")
        if dataset["kind"] not in ("blobs", "two_circles", "features", "graph"):
            raise ConfigError(f"unknown dataset kind {dataset['kind']!r}")
        if int(dataset.get("instances", 1)) < 1:
            raise ConfigError("'instances' must be >= 1")

        g = dict(raw.pop("graph", {}))
        graph = GraphBuildConfig(K=_take(g, "K", 10, int), kernel=_take(g, "kernel", "gaussian"),
                                 sigma_override=_take(g, "sigma_override", None, float))
        _reject_unknown("graph", g)

        s = dict(raw.pop("selection", {}))
        methods = tuple(_take(s, "methods", list(METHODS)))
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise ConfigError(f"selection methods must be drawn from {METHODS}, got {list(methods)}")
        budgets = tuple(float(b) for b in _take(s, "budgets", list(range(1, 11))))
        sizes = _take(s, "sizes", None)
        if sizes is not None:
            sizes = tuple(int(m) for m in sizes)
            if not sizes or min(sizes) < 1:
                raise ConfigError("'sizes' must be positive label counts")
        elif not budgets or not all(0 < b < 100 for b in budgets):
            raise ConfigError(f"budgets must lie in (0, 100), got {list(budgets)}")
        k = _take(s, "k", DEFAULT_K, int)
        k_values = _take(s, "k_values", None)
        if k_values == "study":
            k_values = K_STUDY
        k_values = tuple(int(v) for v in (k_values or (k,)))
        if not all(1 <= v <= 16 for v in k_values):
            raise ConfigError(f"k must lie in 1..16, got {list(k_values)}")
        seed = _take(s, "seed", 0, int)
        trials = _take(s, "trials", 10, int)
        random_trials = _take(s, "random_trials", 30, int)
        if trials < 1 or random_trials < 1:
            raise ConfigError("trials must be >= 1")
        _reject_unknown("selection", s)

        r = dict(raw.pop("reconstruction", {}))
        mode = _take(r, "mode", "pocs")
        if mode not in ("pocs", "exact"):
            raise ConfigError(f"reconstruction mode must be 'pocs' or 'exact', got {mode!r}")
        kspec = dict(_take(r, "kernel", {}))
        pocs = PocsConfig(max_iters=_take(r, "max_iters", 2000, int),
                          stop_tol=_take(r, "stop_tol", 1e-7, float),
                          kernel=_take(kspec, "kind", "sigmoid"),
                          alpha=_take(kspec, "alpha", DEFAULT_ALPHA, float),
                          degree=_take(kspec, "degree", DEFAULT_DEGREE, int))
        _reject_unknown("reconstruction.kernel", kspec)
        _reject_unknown("reconstruction", r)

        sv = dict(raw.pop("solver", {}))
        try:
            solver = SolverConfig(**sv)
        except TypeError as exc:
            raise ConfigError(f"bad 'solver' section: {exc}") from None

        o = dict(raw.pop("outputs", {}))
        out_dir = _take(o, "dir", None)
        timing = bool(_take(o, "timing", False))
        write_sets = bool(_take(o, "write_sets", True))
        _reject_unknown("outputs", o)
        _reject_unknown("config", raw)

        return cls(dataset=dataset, graph=graph, methods=methods, budgets=budgets, sizes=sizes,
                   k_values=k_values, seed=seed, trials=trials, random_trials=random_trials,
                   reconstruction=mode, pocs=pocs, solver=solver, out_dir=out_dir,
                   timing=timing, write_sets=write_sets, base_dir=base_dir)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def budget_sizes(self, n: int) -> list[tuple[float, int]]:
        """``(budget_pct, m)`` pairs; percentages round to at least one label."""
        if self.sizes is not None:
            out = [(100.0 * m / n, m) for m in self.sizes]
        else:
            out = [(b, max(1, int(round(b * n / 100.0)))) for b in self.budgets]
        too_big = [m for _, m in out if m >= n]
        if too_big:
            raise ConfigError(f"label budget {too_big[0]} leaves no unlabeled node (n={n})")
        return out


# --- datasets --------------------------------------------------------------

def _resolve(config: RunConfig, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else config.base_dir / p


def load_instance(config: RunConfig, instance: int) -> tuple[Graph, np.ndarray]:
    """Graph and ground-truth labels of one dataset instance."""
    d = dict(config.dataset)
    kind = d.pop("kind")
    for key in ("name", "instances"):
        d.pop(key, None)
    if kind in ("blobs", "two_circles"):
        seed = int(d.pop("seed", 0)) + instance
        maker = make_blobs if kind == "blobs" else make_two_circles
        if "radii" in d:
            d["radii"] = tuple(d["radii"])
        try:
            X, y = maker(seed=seed, **d)
        except TypeError as exc:
            raise ConfigError(f"bad {kind} parameters: {exc}") from None
        return build_graph(X, config.graph), y

    if "labels" not in d:
        raise ConfigError(f"dataset kind {kind!r} needs a 'labels' file")
    labels = read_labels(_resolve(config, d["labels"]))
    if kind == "graph":
        graph = read_edge_list(_resolve(config, d["edges"]))
    else:
        fmt = d.get("format", "csv")
        if fmt == "csv":
            X = read_features_csv(_resolve(config, d["features"]))
        elif fmt == "term_counts":
            C = read_term_counts(_resolve(config, d["features"]), n_docs=labels.size)
            opts = d.get("tfidf", {})
            X, _ = tfidf_features(C, int(opts.get("min_doc_freq", 20)),
                                  int(opts.get("vocab_cap", 3000)))
        else:
            raise ConfigError(f"unknown feature format {fmt!r}")
        graph = build_graph(X, config.graph)
    if labels.size != graph.n:
        raise ConfigError(f"{labels.size} labels for a graph of {graph.n} nodes")
    return graph, labels


# --- selection -------------------------------------------------------------

def random_baseline_select(n: int, m: int, seed: int, graph: Graph | None = None,
                           k: int = DEFAULT_K, solver: SolverConfig | None = None) -> SamplingSet:
    """``m`` nodes drawn uniformly without replacement.

    With a graph, the cutoff estimate of the whole set is recorded in the last
    cutoff slot; the per-prefix slots are ``nan`` since the set has no
    meaningful selection order.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n (m={m}, n={n})")
    nodes = np.random.default_rng(seed).choice(n, size=m, replace=False)
    nodes = [int(v) for v in nodes]
    cutoffs = [float("nan")] * m
    if graph is not None:
        if graph.n != n:
            raise ValueError("graph size does not match n")
        cutoffs[-1], _ = estimate_cutoff(graph, nodes, k, solver)
    return SamplingSet(nodes, cutoffs, k)


@dataclass
class TrialRecord:
    dataset: str
    method: str
    k: int
    budget_pct: float
    trial: int
    accuracy: float
    omega: float
    select_ms: float
    recon_ms: float
    nodes: list = field(default_factory=list, repr=False)


@dataclass
class BenchmarkResult:
    records: list[TrialRecord]
    phase_seconds: dict

    def summary(self) -> list[dict]:
        """Mean and standard deviation of accuracy per (method, k, budget)."""
        groups: dict = {}
        for r in self.records:
            groups.setdefault((r.method, r.k, r.budget_pct), []).append(r.accuracy)
        out = []
        for (method, k, b), accs in groups.items():
            a = np.array(accs)
            out.append({"method": method, "k": k, "budget_pct": b, "trials": a.size,
                        "mean": float(a.mean()), "std": float(a.std())})
        return out

    def mean_accuracy(self, method: str, k: int | None = None) -> dict:
        """``{budget_pct: mean accuracy}`` for one method (and ``k`` when given)."""
        return {row["budget_pct"]: row["mean"] for row in self.summary()
                if row["method"] == method and (k is None or row["k"] == k)}

    def metrics_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in self.records:
            w.writerow([r.dataset, r.method, r.k, repr(float(r.budget_pct)), r.trial,
                        repr(float(r.accuracy)), repr(float(r.omega)),
                        f"{r.select_ms:.3f}" if timing else "",
                        f"{r.recon_ms:.3f}" if timing else ""])
        return buf.getvalue()


def _evaluate(graph, labels, oracle, sset, config: RunConfig) -> tuple[float, float]:
    t = time.perf_counter()
    pred = predict(graph, sset, oracle, config.reconstruction, config.pocs)
    ms = 1e3 * (time.perf_counter() - t)
    return pred.accuracy(labels, exclude=sset.nodes), ms


def run_benchmark(config: RunConfig, progress=None) -> BenchmarkResult:
    """Run every (method, k, budget, trial) combination and write the metric files.

    Rows are ordered by method, k, budget and trial regardless of the order
    in which they were computed. ``progress(message)`` receives one line per
    finished block when given.
    """
    records: list[TrialRecord] = []
    phases = {"graph": 0.0, "select": 0.0, "reconstruct": 0.0}
    cache: dict = {}

    def instance(i):
        if i not in cache:
            t = time.perf_counter()
            cache[i] = load_instance(config, i)
            phases["graph"] += time.perf_counter() - t
        return cache[i]

    greedy_runs: dict = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AbsentClassWarning)
        for method in config.methods:
            n_trials = config.trials if method == "greedy" else config.random_trials
            for k in config.k_values:
                for trial in range(n_trials):
                    inst = trial % config.instances
                    graph, labels = instance(inst)
                    oracle = LabeledOracle(labels)
                    budgets = config.budget_sizes(graph.n)
                    if method == "greedy":
                        key = (inst, k)
                        if key not in greedy_runs:
                            t0 = time.perf_counter()
                            stamps = []
                            run = greedy_select(graph, max(m for _, m in budgets), k, config.solver,
                                                callback=lambda *_: stamps.append(time.perf_counter()))
                            greedy_runs[key] = (run, [1e3 * (t - t0) for t in stamps])
                            phases["select"] += stamps[-1] - t0
                        run, elapsed = greedy_runs[key]
                    for pct, m in budgets:
                        if method == "greedy":
                            # a prefix of the greedy run costs the time to reach it
                            sset, sel_ms = run.prefix(m), elapsed[m - 1]
                        else:
                            t = time.perf_counter()
                            sset = random_baseline_select(graph.n, m, _random_seed(config.seed, trial, m),
                                                          graph, k, config.solver)
                            sel_ms = 1e3 * (time.perf_counter() - t)
                            phases["select"] += sel_ms / 1e3
                        acc, rec_ms = _evaluate(graph, labels, oracle, sset, config)
                        phases["reconstruct"] += rec_ms / 1e3
                        records.append(TrialRecord(config.dataset_name, method, k, pct, trial, acc,
                                                   sset.omega, sel_ms, rec_ms, list(sset.nodes)))
                    if progress is not None:
                        progress(f"{method} k={k} trial={trial} done")

    order = {m: i for i, m in enumerate(METHODS)}
    records.sort(key=lambda r: (order[r.method], r.k, r.budget_pct, r.trial))
    result = BenchmarkResult(records, phases)
    if config.out_dir is not None:
        write_outputs(result, config)
    return result


def _random_seed(seed: int, trial: int, m: int) -> int:
    # one independent stream per (trial, budget)
    return int(np.random.SeedSequence([seed, trial, m]).generate_state(1)[0])


def write_outputs(result: BenchmarkResult, config: RunConfig) -> Path:
    out = _resolve(config, config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.csv").write_text(result.metrics_csv(config.timing))
    lines = ["method,k,budget_pct,trials,mean,std"]
    for row in result.summary():
        lines.append(f"{row['method']},{row['k']},{float(row['budget_pct'])!r},{row['trials']},"
                     f"{float(row['mean'])!r},{float(row['std'])!r}")
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    if config.timing:
        (out / "timing.json").write_text(json.dumps(result.phase_seconds, indent=2) + "\n")
    if config.write_sets:
        sets = out / "sets"
        sets.mkdir(exist_ok=True)
        for r in result.records:
            name = f"{r.method}_k{r.k}_b{r.budget_pct:g}_t{r.trial}.txt"
            cut = [float("nan")] * (len(r.nodes) - 1) + [r.omega]
            write_sampling_set(SamplingSet(r.nodes, cut, r.k), sets / name)
    return out


# --- spectrum report -------------------------------------------------------

def spectrum_rows(graph: Graph, labels) -> list[tuple[int, int, float, float]]:
    """``(class, index, lambda, cdf)`` rows of the GFT energy CDF of every class membership signal."""
    basis = dense_spectral_basis(graph)
    labels = np.asarray(labels, dtype=int)
    rows = []
    for c in range(int(labels.max()) + 1):
        f = (labels == c).astype(float)
        if not f.any():
            continue
        lam, cdf = gft_energy_cdf(basis, f)
        rows.extend((c, i, float(l), float(v)) for i, (l, v) in enumerate(zip(lam, cdf)))
    return rows


def emit_spectrum_report(config: RunConfig, path=None) -> str:
    """CSV ``class,index,lambda,cdf`` for dataset instance 0; written to ``path`` when given.

    Needs the dense eigenbasis, so graphs above the oracle size limit are refused.
    """
    graph, labels = load_instance(config, 0)
    text = "class,index,lambda,cdf\n" + "".join(
        f"{c},{i},{lam!r},{v!r}\n" for c, i, lam, v in spectrum_rows(graph, labels)
    )
    if path is not None:
        Path(path).write_text(text)
    return text


__all__ = [
    "BenchmarkResult", "ConfigError", "K_STUDY", "METRICS_HEADER", "RunConfig", "TrialRecord",
    "emit_spectrum_report", "load_instance", "random_baseline_select", "run_benchmark",
    "spectrum_rows", "write_outputs",
]
