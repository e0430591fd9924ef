"""Prequential evaluation, a sliding-window k-NN baseline and CSV ingestion."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from . import _kernels as K
from .core import InvalidInstanceError, LabeledInstance, Stream, StreamSchema, validate_instance


class DataError(ValueError):
    """Input data cannot be read or does not fit the declared schema."""


class StreamSchemaError(DataError):
    pass


class Learner(Protocol):
    def reset(self, schema: StreamSchema) -> None: ...

    def test_then_train(self, inst: LabeledInstance) -> tuple[int, np.ndarray]: ...

    def trace_fields(self) -> dict: ...

    def buffer_labels(self) -> list[str]: ...


# -- prequential loop ---------------------------------------------------------


TRACE_HEAD = ("t", "pred", "true", "acc", "div", "selected")


def _fmt_float(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return ""
    return repr(float(v))


class TraceWriter:
    """Row-at-a-time trace CSV; rows are flushed as they are produced."""

    def __init__(self, path, buffer_labels: Sequence[str]):
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow([*TRACE_HEAD, *buffer_labels, "step_ms"])

    def write(self, t, pred, true, acc, div, selected, buffers, step_ms) -> None:
        self._w.writerow([
            t, pred, true, _fmt_float(acc), _fmt_float(div),
            ";".join(str(i) for i in selected), *buffers, f"{step_ms:.4f}",
        ])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class PrequentialTrace:
    """Per-step records of a test-then-train run."""

    t: np.ndarray
    pred: np.ndarray
    true: np.ndarray
    correct_count: np.ndarray
    div: np.ndarray
    selected: list[tuple[int, ...]]
    buffers: np.ndarray
    buffer_labels: list[str]
    step_ms: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.size

    @property
    def correct(self) -> int:
        return int(self.correct_count[-1]) if len(self) else 0

    @property
    def accuracy(self) -> float:
        """Correct predictions over instances seen, as one exact division."""
        return self.correct / len(self) if len(self) else float("nan")

    def accuracy_fraction(self) -> Fraction:
        return Fraction(self.correct, len(self))

    @property
    def running_accuracy(self) -> np.ndarray:
        # each entry is a single integer division, so no error accumulates
        return self.correct_count / np.arange(1, len(self) + 1)

    def write_csv(self, path) -> None:
        with TraceWriter(path, self.buffer_labels) as w:
            acc = self.running_accuracy
            for i in range(len(self)):
                w.write(self.t[i], self.pred[i], self.true[i], acc[i], self.div[i],
                        self.selected[i], self.buffers[i].tolist(), self.step_ms[i])

    def summary(self) -> dict:
        return {
            "n": len(self),
            "correct": self.correct,
            "accuracy": self.accuracy,
            "mean_step_ms": float(self.step_ms.mean()) if len(self) else None,
            **self.meta,
        }


def prequential_run(
    learner: Learner,
    stream: Stream | Iterable[LabeledInstance],
    schema: StreamSchema | None = None,
    trace_path=None,
    timing: bool = True,
    reset: bool = True,
) -> PrequentialTrace:
    """Predict each instance from the learner's current state, then train on it.

    Every instance is checked against ``schema`` (the stream's own schema by
    default) before the learner sees it; the first mismatch raises
    :class:`StreamSchemaError` naming its position. With ``timing=False``
    the recorded step times are zero, which makes trace files byte-stable.
    """
    if schema is None:
        if not isinstance(stream, Stream):
            raise ValueError("schema is required for a plain instance iterable")
        schema = stream.schema
    if reset:
        learner.reset(schema)
    labels = learner.buffer_labels()
    writer = TraceWriter(trace_path, labels) if trace_path is not None else None
    ts, preds, trues, counts, divs, sels, bufs, ms = [], [], [], [], [], [], [], []
    correct = 0
    try:
        for pos, inst in enumerate(stream, 1):
            try:
                validate_instance(inst, schema)
            except InvalidInstanceError as exc:
                raise StreamSchemaError(f"instance #{pos} (t={inst.t}): {exc}") from exc
            t0 = time.perf_counter()
            pred, _ = learner.test_then_train(inst)
            step = (time.perf_counter() - t0) * 1e3 if timing else 0.0
            correct += int(pred == inst.label)
            info = learner.trace_fields()
            ts.append(inst.t)
            preds.append(pred)
            trues.append(inst.label)
            counts.append(correct)
            divs.append(info.get("div", float("nan")))
            sels.append(tuple(info.get("selected", ())))
            bufs.append(info.get("buffers", []))
            ms.append(step)
            if writer is not None:
                writer.write(inst.t, pred, inst.label, correct / pos, divs[-1],
                             sels[-1], bufs[-1], step)
    finally:
        if writer is not None:
            writer.close()
    return PrequentialTrace(
        np.asarray(ts, dtype=np.int64), np.asarray(preds, dtype=np.int64),
        np.asarray(trues, dtype=np.int64), np.asarray(counts, dtype=np.int64),
        np.asarray(divs, dtype=float), sels,
        np.asarray(bufs, dtype=np.int64).reshape(len(ts), len(labels)), labels,
        np.asarray(ms, dtype=float),
    )


# -- baseline -------------------------------------------------------------------


class SlidingWindowKNN:
    """IBk over the most recent ``window`` labeled instances."""

    def __init__(self, window: int, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        if window < k:
            raise ValueError("window must be >= k")
        self.window = int(window)
        self.k = int(k)
        self.schema: StreamSchema | None = None

    def reset(self, schema: StreamSchema) -> None:
        self.schema = schema
        w = self.window
        self._X = np.zeros((w, schema.n))
        self._y = np.zeros(w, dtype=np.int64)
        self._t = np.zeros(w, dtype=np.int64)
        self._dist = np.zeros(w)
        self._out = np.zeros(schema.c)
        self._nbr = np.zeros(self.k, dtype=np.int64)
        self._size = 0
        self._head = 0

    def predict(self, x) -> tuple[int, np.ndarray]:
        if self.schema is None:
            raise RuntimeError("call reset(schema) before streaming")
        x = np.ascontiguousarray(x, dtype=np.float64)
        K.row_distances(self._X, self._size, x, self._dist)
        K.knn_proba(self._dist, self._y, self._t, self._size, self.k, self.schema.c,
                    self._out, self._nbr)
        # argmax keeps the lowest class on ties
        return int(np.argmax(self._out)), self._out.copy()

    def learn(self, inst: LabeledInstance) -> None:
        # ring buffer: slot order is irrelevant because neighbour ties rank by t
        j = self._head
        self._X[j] = inst.features
        self._y[j] = inst.label
        self._t[j] = inst.t
        self._head = (j + 1) % self.window
        self._size = min(self._size + 1, self.window)

    def test_then_train(self, inst: LabeledInstance) -> tuple[int, np.ndarray]:
        out = self.predict(inst.features)
        self.learn(inst)
        return out

    def trace_fields(self) -> dict:
        return {"div": float("nan"), "selected": (), "buffers": [self._size]}

    def buffer_labels(self) -> list[str]:
        return ["buf_window"]


def sliding_window_knn(window: int, k: int) -> SlidingWindowKNN:
    return SlidingWindowKNN(window, k)


# -- CSV ingestion ------------------------------------------------------------------


@dataclass(frozen=True)
class IngestionSpec:
    """How to turn a delimited file into a numeric stream.

    ``feature_columns`` defaults to every column except the label. Nominal
    columns are one-hot expanded (levels in sorted order, learned from the
    fit range) before min-max scaling. ``normalize`` is ``"full"`` (fit on
    every row), ``"prefix"`` (fit on the first ``fit_prefix`` rows) or
    ``"none"``.
    """

    path: str | Path
    label_column: str = "label"
    feature_columns: tuple[str, ...] | None = None
    nominal_columns: tuple[str, ...] = ()
    normalize: str = "full"
    fit_prefix: int | None = None
    delimiter: str = ","

    def __post_init__(self):
        if self.normalize not in ("full", "prefix", "none"):
            raise ValueError(f"unknown normalization {self.normalize!r}")
        if self.normalize == "prefix" and (self.fit_prefix is None or self.fit_prefix < 1):
            raise ValueError("prefix normalization needs fit_prefix >= 1")


def _read_rows(spec: IngestionSpec):
    try:
        fh = open(spec.path, newline="")
    except OSError as exc:
        raise DataError(f"cannot open {spec.path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh, delimiter=spec.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{spec.path}: empty file") from None
        header = [h.strip() for h in header]
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{spec.path} line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append((reader.line_num, [c.strip() for c in row]))
    return header, rows


def ingest_csv(spec: IngestionSpec) -> Stream:
    """Read, validate, one-hot expand and min-max scale a delimited file."""
    header, rows = _read_rows(spec)
    if spec.label_column not in header:
        raise DataError(f"{spec.path}: no label column {spec.label_column!r}")
    if spec.feature_columns is None:
        features = [h for h in header if h != spec.label_column]
    else:
        features = list(spec.feature_columns)
    missing = [c for c in [*features, *spec.nominal_columns] if c not in header]
    if missing:
        raise DataError(f"{spec.path}: unknown columns {missing}")
    if not features:
        raise DataError(f"{spec.path}: no feature columns")
    col = {h: i for i, h in enumerate(header)}
    nominal = set(spec.nominal_columns)
    if not rows:
        raise DataError(f"{spec.path}: no data rows")
    fit_rows = len(rows) if spec.normalize != "prefix" else min(spec.fit_prefix, len(rows))

    levels: dict[str, list[str]] = {
        c: sorted({r[col[c]] for _, r in rows[:fit_rows]}) for c in features if c in nominal
    }
    names: list[str] = []
    for c in features:
        if c in nominal:
            names.extend(f"{c}={lv}" for lv in levels[c])
        else:
            names.append(c)

    raw_labels = [r[col[spec.label_column]] for _, r in rows]
    if all(v.isdigit() for v in raw_labels):
        y = np.array([int(v) for v in raw_labels], dtype=np.int64)
        class_names = None
        c = max(int(y.max()) + 1, 2)
    else:
        class_names = tuple(sorted(set(raw_labels)))
        index = {v: i for i, v in enumerate(class_names)}
        y = np.array([index[v] for v in raw_labels], dtype=np.int64)
        c = max(len(class_names), 2)

    X = np.empty((len(rows), len(names)))
    for i, (line, r) in enumerate(rows):
        j = 0
        for cname in features:
            v = r[col[cname]]
            if cname in nominal:
                lv = levels[cname]
                try:
                    hot = lv.index(v)
                except ValueError:
                    raise DataError(
                        f"{spec.path} line {line}: level {v!r} of {cname!r} was not seen in the fit range"
                    ) from None
                X[i, j:j + len(lv)] = 0.0
                X[i, j + hot] = 1.0
                j += len(lv)
            else:
                try:
                    X[i, j] = float(v)
                except ValueError:
                    raise DataError(f"{spec.path} line {line}: column {cname!r} is not numeric: {v!r}") from None
                if not np.isfinite(X[i, j]):
                    raise DataError(f"{spec.path} line {line}: column {cname!r} is not finite")
                j += 1

    norm = {"mode": spec.normalize, "fit_rows": fit_rows if spec.normalize != "none" else 0}
    if spec.normalize != "none":
        lo = X[:fit_rows].min(axis=0)
        hi = X[:fit_rows].max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        X = (X - lo) / span
        norm["min"] = lo.tolist()
        norm["max"] = hi.tolist()
    return Stream(
        X, y, StreamSchema(len(names), c, class_names),
        meta={"source": str(spec.path), "columns": names, "normalization": norm},
    )


def read_stream_csv(path, normalize: str = "none", fit_prefix: int | None = None) -> Stream:
    """Read a ``f0..f{n-1},label`` stream file."""
    return ingest_csv(IngestionSpec(path, normalize=normalize, fit_prefix=fit_prefix))


def write_stream_csv(stream: Stream, path) -> None:
    n = stream.schema.n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*(f"f{i}" for i in range(n)), "label"])
        for x, lab in zip(stream.X, stream.y):
            w.writerow([*(repr(float(v)) for v in x), int(lab)])


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
