"""Instances, stream schemas and the Euclidean metric.

Every other module consumes streams as a `Stream`: a dense feature matrix,
an integer label vector and a schema. Iterating a stream yields
`LabeledInstance` values with 1-based arrival indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np


class InvalidInstanceError(ValueError):
    """Raised when an instance does not conform to its stream schema."""


class DimensionMismatchError(InvalidInstanceError):
    pass


class LabelOutOfRangeError(InvalidInstanceError):
    pass


@dataclass(frozen=True)
class StreamSchema:
    n: int
    c: int
    class_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"feature count must be >= 1, got {self.n}")
        if self.c < 2:
            raise ValueError(f"class count must be >= 2, got {self.c}")
        if self.class_names is not None and len(self.class_names) != self.c:
            raise ValueError("class_names must have one entry per class")


@dataclass(frozen=True, eq=False)
class LabeledInstance:
    """One stream element: feature vector, class label and arrival index."""

    features: np.ndarray
    label: int
    t: int

    def __post_init__(self):
        x = np.array(self.features, dtype=np.float64)
        if x.ndim != 1:
            raise DimensionMismatchError("features must be a 1-D vector")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "label", int(self.label))
        object.__setattr__(self, "t", int(self.t))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def __eq__(self, other):
        if not isinstance(other, LabeledInstance):
            return NotImplemented
        return (
            self.t == other.t
            and self.label == other.label
            and np.array_equal(self.features, other.features)
        )

    def __hash__(self):
        return hash((self.t, self.label, self.features.tobytes()))


def euclidean_distance(a, b) -> float:
    """Euclidean distance between two equal-length real vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(
            f"cannot compare vectors of shape {a.shape} and {b.shape}"
        )
    # accumulate in index order so that d(a, b) and d(b, a) are bit-identical
    total = 0.0
    for ai, bi in zip(a.tolist(), b.tolist()):
        diff = ai - bi
        total += diff * diff
    return math.sqrt(total)


def validate_instance(inst: LabeledInstance, schema: StreamSchema) -> None:
    if inst.n != schema.n:
        raise DimensionMismatchError(
            f"instance t={inst.t} has {inst.n} features, schema expects {schema.n}"
        )
    if not 0 <= inst.label < schema.c:
        raise LabelOutOfRangeError(
            f"instance t={inst.t} has label {inst.label}, schema has {schema.c} classes"
        )


def stack_instances(instances: Sequence[LabeledInstance], n: int | None = None):
    """Return ``(X, y, t)`` arrays for a collection of instances."""
    if len(instances) == 0:
        width = 0 if n is None else n
        return (
            np.empty((0, width), dtype=np.float64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
        )
    X = np.vstack([inst.features for inst in instances])
    y = np.fromiter((inst.label for inst in instances), dtype=np.int64, count=len(instances))
    t = np.fromiter((inst.t for inst in instances), dtype=np.int64, count=len(instances))
    return X, y, t


@dataclass
class Stream:
    """A finite labeled stream held in memory.

    Row ``i`` of ``X`` arrives at time ``t = i + 1``.
    """

    X: np.ndarray
    y: np.ndarray
    schema: StreamSchema
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.y = np.ascontiguousarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[1] != self.schema.n:
            raise DimensionMismatchError(
                f"feature matrix shape {self.X.shape} does not match n={self.schema.n}"
            )
        if self.y.shape != (self.X.shape[0],):
            raise DimensionMismatchError("label vector length differs from row count")
        if self.y.size:
            bad = np.flatnonzero((self.y < 0) | (self.y >= self.schema.c))
            if bad.size:
                i = int(bad[0])
                raise LabelOutOfRangeError(
                    f"instance t={i + 1} has label {int(self.y[i])}, "
                    f"schema has {self.schema.c} classes"
                )

    def __len__(self) -> int:
        return self.X.shape[0]

    def __iter__(self) -> Iterator[LabeledInstance]:
        for i in range(len(self)):
            yield LabeledInstance(self.X[i], int(self.y[i]), i + 1)

    def __getitem__(self, i: int) -> LabeledInstance:
        if i < 0:
            i += len(self)
        return LabeledInstance(self.X[i], int(self.y[i]), i + 1)

    def head(self, m: int) -> list[LabeledInstance]:
        return [self[i] for i in range(min(m, len(self)))]
