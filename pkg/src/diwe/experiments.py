"""Experiment runners producing CSV/JSON reports and figures."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import Stream
from .diversity import select_from_matrix
from .ensemble import DiweClassifier, DiweConfig, diwe_init, diwe_step, save_checkpoint
from .evaluation import PrequentialTrace, prequential_run, sliding_window_knn, write_json
from .generators import GeneratorSpec, gen_oned_drift, generate
from .regions import RegionSet

log = logging.getLogger(__name__)

EXPERIMENTS = ("exp1_removal", "exp2_synthetic", "exp4_maxrdd_vs_random", "exp5_sensitivity")
SYNTHETIC_KINDS = ("sea_sudden", "sea_gradual", "hyperplane", "rbf", "rbf_regional")


class UnknownExperimentError(ValueError):
    pass


def _seeds(runs: int, seeds: Sequence[int] | None) -> list[int]:
    if seeds is not None:
        return sorted(int(s) for s in seeds)
    if runs < 1:
        raise ValueError("runs must be >= 1")
    return list(range(1, runs + 1))


def _map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def split_initial(stream: Stream, init_size: int):
    """First ``init_size`` instances as the initial training set, rest as the stream."""
    head = stream.head(init_size)
    rest = (stream[i] for i in range(init_size, len(stream)))
    return head, rest


def mean_sd(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0


# -- single runs -----------------------------------------------------------------


def buffer_trace(stream: Stream, phi: float = 0.1, max_buffer: int = 1000, alpha: float = 0.01) -> np.ndarray:
    """Region-set size after each arrival; entry ``t - 1`` is the size after step t."""
    rs = RegionSet(phi, max_buffer, stream.schema.n, alpha)
    out = np.empty(len(stream), dtype=np.int64)
    for i, inst in enumerate(stream):
        rs.update(inst)
        out[i] = len(rs)
    return out


def run_diwe(stream: Stream, config: DiweConfig, trace_path=None, timing: bool = True,
             init_size: int = 0, state_path=None) -> PrequentialTrace:
    training, rest = split_initial(stream, init_size)
    clf = DiweClassifier(config, training=training)
    trace = prequential_run(clf, rest, schema=stream.schema, trace_path=trace_path, timing=timing)
    if state_path is not None:
        save_checkpoint(clf.state, state_path)
    trace.meta.update(config=config.to_dict(), init_size=init_size)
    return trace


def run_baseline(stream: Stream, window: int, k: int, init_size: int = 0,
                 trace_path=None, timing: bool = True) -> PrequentialTrace:
    training, rest = split_initial(stream, init_size)
    learner = sliding_window_knn(window, k)
    learner.reset(stream.schema)
    for inst in training:
        learner.learn(inst)
    trace = prequential_run(learner, rest, schema=stream.schema, trace_path=trace_path,
                            timing=timing, reset=False)
    trace.meta.update(window=window, k=k, init_size=init_size)
    return trace


def policy_pass(
    stream: Stream,
    config: DiweConfig,
    voting_sizes: Sequence[int] | None = None,
    n_random: int = 0,
    random_seed: int = 0,
    init_size: int = 0,
) -> dict:
    """Score several selection policies on one pass of the ensemble.

    Member updates never depend on which members vote, so every policy sees
    the same member predictions. Max-RDD is scored for each size in
    ``voting_sizes``; ``n_random`` independent random policies each draw a
    uniform ``config.voting_size`` subset whenever a reselection is due.
    Returns correct counts.
    """
    if voting_sizes is None:
        voting_sizes = (config.voting_size,)
    voting_sizes = sorted(set(int(v) for v in voting_sizes) | {config.voting_size})
    training, rest = split_initial(stream, init_size)
    state = diwe_init(config, training, stream.schema)
    S = len(state.family)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(random_seed)))
    maxrdd = {v: 0 for v in voting_sizes}
    rand = np.zeros(n_random, dtype=np.int64)
    diwe_correct = 0
    n = 0
    cached: dict[int, tuple[int, ...]] = {}
    subsets = np.zeros((n_random, config.voting_size), dtype=np.int64)
    for inst in rest:
        if state.step % config.select_every == 0:
            R = state.family.pairwise_rdd()
            sels = {v: select_from_matrix(R, v) for v in voting_sizes}
            cached = {v: s.indices for v, s in sels.items()}
            if n_random:
                subsets = np.argsort(rng.random((n_random, S)), axis=1)[:, : config.voting_size]
            chosen = sels[config.voting_size]
            selector = lambda _st, s=chosen: s  # noqa: E731
        else:
            selector = None
        label, _, state = diwe_step(state, inst, record_members=True, selector=selector)
        probs = state.info.member_probs
        y = inst.label
        diwe_correct += int(label == y)
        for v, idx in cached.items():
            maxrdd[v] += int(np.argmax(probs[list(idx)].sum(axis=0)) == y)
        if n_random:
            votes = probs[subsets].sum(axis=1)
            rand += np.argmax(votes, axis=1) == y
        n += 1
    return {"n": n, "diwe": diwe_correct, "maxrdd": maxrdd, "random": rand}


# -- experiments ---------------------------------------------------------------------


def exp1_removal(out_dir, runs: int = 50, seeds=None, phi: float = 0.1,
                 max_buffer: int = 1000, alpha: float = 0.01, jobs: int = 1) -> dict:
    """Buffer size of one region set on the 1-D sudden/incremental stream."""
    from .plotting import plot_buffer_traces

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _seeds(runs, seeds)
    traces = _map(_exp1_one, [(s, phi, max_buffer, alpha) for s in seeds], jobs)
    T = traces[0].size
    with open(out / "exp1_buffers.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *(f"seed_{s}" for s in seeds), "window"])
        for i in range(T):
            w.writerow([i + 1, *(int(tr[i]) for tr in traces), min(i + 1, max_buffer)])
    checks = []
    for s, tr in zip(seeds, traces):
        a, b, c = int(tr[2399]), int(tr[2749]), int(tr[3999])
        checks.append({"seed": s, "t2400": a, "t2750": b, "t4000": c,
                       "dropped": b < a, "recovered": abs(c - a) <= 0.1 * a})
    summary = {
        "experiment": "exp1_removal", "phi": phi, "max_buffer": max_buffer, "alpha": alpha,
        "seeds": seeds, "runs": checks,
        "n_dropped": sum(r["dropped"] for r in checks),
        "n_recovered": sum(r["recovered"] for r in checks),
        "n_both": sum(r["dropped"] and r["recovered"] for r in checks),
    }
    write_json(summary, out / "exp1_summary.json")
    plot_buffer_traces(np.vstack(traces), max_buffer, out / "exp1_buffers.png")
    return summary


def _exp1_one(args) -> np.ndarray:
    seed, phi, max_buffer, alpha = args
    return buffer_trace(gen_oned_drift(seed), phi, max_buffer, alpha)


def _exp2_one(args):
    kind, seed, length, config, out, init_size = args
    stream = generate(GeneratorSpec(kind, seed, length))
    trace = run_diwe(stream, config, trace_path=out / f"exp2_{kind}_seed{seed}.csv", init_size=init_size)
    return kind, seed, trace.correct, len(trace), trace.running_accuracy


def exp2_synthetic(out_dir, runs: int = 10, seeds=None, config: DiweConfig | None = None,
                   kinds: Sequence[str] = SYNTHETIC_KINDS, length: int | None = None,
                   init_size: int = 0, jobs: int = 1) -> dict:
    """Prequential accuracy of the ensemble over seeded synthetic streams."""
    from .plotting import plot_accuracy_curves

    config = config or DiweConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _seeds(runs, seeds)
    jobs_list = [(k, s, length, config, out, init_size) for k in kinds for s in seeds]
    results = _map(_exp2_one, jobs_list, jobs)
    per_kind: dict[str, dict] = {}
    curves: dict[str, list] = {}
    for kind, seed, correct, n, curve in results:
        d = per_kind.setdefault(kind, {"seeds": [], "accuracy": []})
        d["seeds"].append(seed)
        d["accuracy"].append(correct / n)
        curves.setdefault(kind, []).append(curve)
    with open(out / "exp2_summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "runs", "mean_acc", "sd_acc"])
        for kind, d in per_kind.items():
            m, sd = mean_sd(d["accuracy"])
            d["mean"], d["sd"] = m, sd
            w.writerow([kind, len(d["accuracy"]), repr(m), repr(sd)])
    summary = {"experiment": "exp2_synthetic", "config": config.to_dict(), "length": length,
               "init_size": init_size, "kinds": per_kind}
    write_json(summary, out / "exp2_summary.json")
    plot_accuracy_curves({k: np.mean(np.vstack(v), axis=0) for k, v in curves.items()},
                         out / "exp2_accuracy.png")
    return summary


def _exp4_one(args):
    kind, seed, length, config, n_random, init_size = args
    stream = generate(GeneratorSpec(kind, seed, length))
    res = policy_pass(stream, config, n_random=n_random, random_seed=seed, init_size=init_size)
    return kind, seed, res


def exp4_maxrdd_vs_random(out_dir, runs: int = 10, seeds=None, config: DiweConfig | None = None,
                          kinds: Sequence[str] = SYNTHETIC_KINDS, length: int | None = None,
                          n_random: int = 50, init_size: int = 0, jobs: int = 1) -> dict:
    """Max-RDD selection against uniformly random selection of the same size."""
    from .plotting import plot_policy_gap

    config = config or DiweConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _seeds(runs, seeds)
    results = _map(_exp4_one, [(k, s, length, config, n_random, init_size) for k in kinds for s in seeds], jobs)
    per_kind: dict[str, dict] = {}
    with open(out / "exp4_runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "seed", "n", "maxrdd_acc", "random_mean_acc", "random_sd_acc", "gap"])
        for kind, seed, res in results:
            n = res["n"]
            m_acc = res["maxrdd"][config.voting_size] / n
            r_acc = res["random"] / n
            r_mean, r_sd = mean_sd(r_acc)
            w.writerow([kind, seed, n, repr(m_acc), repr(r_mean), repr(r_sd), repr(m_acc - r_mean)])
            d = per_kind.setdefault(kind, {"seeds": [], "maxrdd": [], "random": []})
            d["seeds"].append(seed)
            d["maxrdd"].append(m_acc)
            d["random"].append(r_mean)
    for d in per_kind.values():
        d["maxrdd_mean"], d["maxrdd_sd"] = mean_sd(d["maxrdd"])
        d["random_mean"], d["random_sd"] = mean_sd(d["random"])
        d["gap"] = d["maxrdd_mean"] - d["random_mean"]
    summary = {"experiment": "exp4_maxrdd_vs_random", "config": config.to_dict(),
               "n_random": n_random, "length": length, "kinds": per_kind}
    write_json(summary, out / "exp4_summary.json")
    plot_policy_gap(per_kind, out / "exp4_gap.png")
    return summary


def _exp5_one(args):
    kind, seed, length, config, voting_sizes, init_size = args
    stream = generate(GeneratorSpec(kind, seed, length))
    res = policy_pass(stream, config, voting_sizes=voting_sizes, init_size=init_size)
    return kind, seed, config.max_buffer, res


def exp5_sensitivity(out_dir, runs: int = 10, seeds=None, config: DiweConfig | None = None,
                     kinds: Sequence[str] = ("sea_sudden",), length: int | None = None,
                     voting_sizes: Sequence[int] = tuple(range(5, 17)),
                     max_buffers: Sequence[int] = (500, 1000, 2000),
                     init_size: int = 0, jobs: int = 1) -> dict:
    """Accuracy over a grid of voting sizes and buffer limits."""
    from .plotting import plot_sensitivity

    config = config or DiweConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = _seeds(runs, seeds)
    tasks = [
        (k, s, length, replace(config, max_buffer=wm), tuple(voting_sizes), init_size)
        for k in kinds for wm in max_buffers for s in seeds
    ]
    results = _map(_exp5_one, tasks, jobs)
    acc: dict[str, dict[int, dict[int, list]]] = {}
    with open(out / "exp5_runs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "seed", "max_buffer", "voting_size", "accuracy"])
        for kind, seed, wm, res in results:
            for v in voting_sizes:
                a = res["maxrdd"][v] / res["n"]
                w.writerow([kind, seed, wm, v, repr(a)])
                acc.setdefault(kind, {}).setdefault(wm, {}).setdefault(v, []).append(a)
    table = {
        kind: {str(wm): {str(v): mean_sd(a)[0] for v, a in by_v.items()} for wm, by_v in by_wm.items()}
        for kind, by_wm in acc.items()
    }
    summary = {"experiment": "exp5_sensitivity", "config": config.to_dict(), "length": length,
               "voting_sizes": list(voting_sizes), "max_buffers": list(max_buffers),
               "seeds": seeds, "mean_accuracy": table}
    write_json(summary, out / "exp5_summary.json")
    plot_sensitivity(table, out / "exp5_sensitivity.png")
    return summary


def run_experiment(name: str, out_dir, runs: int = 10, **kw) -> dict:
    runners = {
        "exp1_removal": exp1_removal,
        "exp2_synthetic": exp2_synthetic,
        "exp4_maxrdd_vs_random": exp4_maxrdd_vs_random,
        "exp5_sensitivity": exp5_sensitivity,
    }
    if name not in runners:
        raise UnknownExperimentError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    log.info("running %s with %d runs into %s", name, runs, out_dir)
    return runners[name](out_dir, runs=runs, **kw)
