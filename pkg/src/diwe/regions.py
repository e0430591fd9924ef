"""phi-level region sets with incremental drift-risk weighting.

A region is an n-ball around a stored (core) instance whose radius is the
distance to its ceil(phi * m)-th nearest neighbour among the stored cores, so
that under a stationary stream each new arrival lands inside it with
probability about phi. Every arrival that misses a region multiplies its
weight by (1 - phi); a hit resets the weight to 1 and re-estimates the
radius. A region whose weight falls below alpha has gone a statistically
surprising number of steps without a hit and is dropped as drifted.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .core import LabeledInstance, stack_instances

INF = math.inf
SNAPSHOT_VERSION = 1


class InsufficientDataError(ValueError):
    """The pool is too small to rank the requested neighbour."""


def _check_phi(phi: float, upper: float = 1.0) -> None:
    if not 0.0 < phi < upper:
        raise ValueError(f"phi must lie in (0, {upper}), got {phi}")


def min_training_size(phi: float) -> int:
    """Smallest pool size for which m*phi and m*(1-phi) both reach 10."""
    _check_phi(phi)
    bound = max(10.0 / phi, 10.0 / (1.0 - phi))
    return int(math.ceil(bound - 1e-9))


def neighbour_rank(phi: float, m: int) -> int:
    return K.ceil_rank(phi, m)


def zero_hit_probability(phi: float, tau: int) -> float:
    """Probability that none of the next ``tau`` arrivals hits a region."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return (1.0 - phi) ** tau


def drift_horizon(phi: float, alpha: float) -> int:
    """Smallest number of consecutive misses that drives the weight below alpha."""
    _check_phi(phi)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    tau = max(1, math.ceil(math.log(alpha) / math.log1p(-phi)))
    # the closed form can be off by one near exact powers; settle it on the
    # same arithmetic the weights use
    while tau > 1 and zero_hit_probability(phi, tau - 1) < alpha:
        tau -= 1
    while zero_hit_probability(phi, tau) >= alpha:
        tau += 1
    return tau


def region_radius(core: LabeledInstance, pool: Sequence[LabeledInstance], phi: float) -> float:
    """Distance from ``core`` to its ceil(phi*|pool|)-th nearest neighbour.

    The core itself (matched by arrival index) is never counted as its own
    neighbour, but does count towards ``|pool|``.
    """
    if len(pool) == 0:
        raise InsufficientDataError("empty pool")
    X, _, t = stack_instances(pool)
    k = neighbour_rank(phi, len(pool))
    dist = np.empty(len(pool))
    K.row_distances(X, len(pool), core.features, dist)
    candidates = dist[t != core.t]
    if k > candidates.size:
        raise InsufficientDataError(
            f"rank {k} requested from {candidates.size} candidates"
        )
    return float(np.partition(candidates, k - 1)[k - 1])


@dataclass(frozen=True)
class Region:
    core: LabeledInstance
    radius: float
    weight: float
    misses: int

    @property
    def unbounded(self) -> bool:
        return self.radius == INF


class RegionSet:
    """All regions for one phi value, capped at ``max_buffer`` entries.

    The set is single-writer; :meth:`update` mutates it in place.
    """

    def __init__(self, phi: float, max_buffer: int, n_features: int, alpha: float = 0.01):
        _check_phi(phi, 0.5 + 1e-12)
        if max_buffer < 1:
            raise ValueError("max_buffer must be positive")
        self.phi = float(phi)
        self.max_buffer = int(max_buffer)
        self.n_features = int(n_features)
        self.min_size = min_training_size(self.phi)
        self._set_alpha(alpha)
        self.size = 0
        self._allocate(min(self.max_buffer + 1, 64))

    # -- storage ---------------------------------------------------------

    def _set_alpha(self, alpha: float) -> None:
        self.alpha = float(alpha)
        self.horizon = drift_horizon(self.phi, self.alpha)
        self._pw = np.array(
            [zero_hit_probability(self.phi, tau) for tau in range(self.horizon + 1)]
        )

    def _allocate(self, cap: int) -> None:
        n = self.n_features
        old = self.size
        X = np.zeros((cap, n))
        y = np.zeros(cap, dtype=np.int64)
        t = np.zeros(cap, dtype=np.int64)
        radius = np.zeros(cap)
        misses = np.zeros(cap, dtype=np.int64)
        weight = np.zeros(cap)
        D = np.zeros((cap, cap))
        if old:
            X[:old] = self._X[:old]
            y[:old] = self._y[:old]
            t[:old] = self._t[:old]
            radius[:old] = self._radius[:old]
            misses[:old] = self._misses[:old]
            weight[:old] = self._weight[:old]
            D[:old, :old] = self._D[:old, :old]
        self._X, self._y, self._t = X, y, t
        self._radius, self._misses, self._weight, self._D = radius, misses, weight, D
        self._dist = np.zeros(cap)
        self._tmp = np.zeros(cap)
        self._buf = np.zeros(K._SMALL_OFFSET + 1)
        self._removed = np.zeros(cap + 1, dtype=np.int64)
        self._cap = cap

    def _reserve(self, needed: int) -> None:
        if needed > self._cap:
            self._allocate(min(max(needed, 2 * self._cap), self.max_buffer + 1))

    def __len__(self) -> int:
        return self.size

    # -- views -------------------------------------------------------------

    def _order(self) -> np.ndarray:
        return np.argsort(self._t[: self.size], kind="stable")

    @property
    def arrival_indices(self) -> np.ndarray:
        """Arrival indices of the stored cores, ascending."""
        return np.sort(self._t[: self.size])

    @property
    def regions(self) -> list[Region]:
        out = []
        for i in self._order():
            core = LabeledInstance(self._X[i], int(self._y[i]), int(self._t[i]))
            out.append(
                Region(core, float(self._radius[i]), float(self._weight[i]), int(self._misses[i]))
            )
        return out

    def core_instances(self) -> list[LabeledInstance]:
        return [
            LabeledInstance(self._X[i], int(self._y[i]), int(self._t[i]))
            for i in self._order()
        ]

    def core_arrays(self):
        """``(X, y, t)`` copies of the stored cores in arrival order."""
        order = self._order()
        return self._X[order].copy(), self._y[order].copy(), self._t[order].copy()

    # -- hot path ------------------------------------------------------------

    def distances_to(self, x: np.ndarray) -> np.ndarray:
        """Distances from ``x`` to every stored core (slot order, internal buffer)."""
        self._reserve(self.size + 1)
        K.row_distances(self._X, self.size, x, self._dist)
        return self._dist

    def predict_proba(self, x, k: int, c: int, out: np.ndarray, nbr: np.ndarray, fresh: bool = True):
        if fresh:
            self.distances_to(x)
        K.knn_proba(self._dist, self._y, self._t, self.size, k, c, out, nbr)
        return out

    def update(self, inst: LabeledInstance, alpha: float | None = None, fresh: bool = True) -> np.ndarray:
        """Apply one labeled arrival; returns the arrival indices removed.

        ``fresh=False`` reuses the distances left by the last
        :meth:`distances_to` call, which must have been made for ``inst``
        against the current state.
        """
        if alpha is not None and alpha != self.alpha:
            self._set_alpha(alpha)
        if fresh:
            self.distances_to(inst.features)
        else:
            self._reserve(self.size + 1)
        self.size, nrem = K.update_kernel(
            self._X, self._y, self._t, self._radius, self._misses, self._weight,
            self._D, self.size, self._dist,
            inst.features, inst.label, inst.t,
            self.phi, self.alpha, self._pw, self.min_size, self.max_buffer,
            self._removed, self._tmp, self._buf,
        )
        return self._removed[:nrem].copy()

    # -- construction ----------------------------------------------------------

    @classmethod
    def from_training(
        cls, phi: float, training: Sequence[LabeledInstance], max_buffer: int,
        n_features: int | None = None, alpha: float = 0.01,
    ) -> "RegionSet":
        if n_features is None:
            if not training:
                raise ValueError("n_features is required for an empty training set")
            n_features = training[0].n
        rs = cls(phi, max_buffer, n_features, alpha)
        m0 = len(training)
        if m0 == 0:
            return rs
        X, y, t = stack_instances(training, n_features)
        rs._allocate(max(m0, min(max_buffer + 1, 64)))
        rs._X[:m0] = X
        rs._y[:m0] = y
        rs._t[:m0] = t
        rs._misses[:m0] = 0
        rs._weight[:m0] = 1.0
        rs.size = m0
        K.fill_distance_matrix(rs._X, m0, rs._D, rs._tmp)
        if m0 < rs.min_size:
            rs._radius[:m0] = INF
        else:
            K.init_radii(rs._D, m0, neighbour_rank(phi, m0), rs._radius, rs._tmp, rs._buf)
        if m0 > max_buffer:
            # all weights are 1: keep the newest max_buffer cores
            keep = np.argsort(t, kind="stable")[m0 - max_buffer:]
            rs._compact(np.sort(keep))
        return rs

    def _compact(self, keep: np.ndarray) -> None:
        n = keep.size
        X, y, t = self._X[keep], self._y[keep], self._t[keep]
        radius, misses, weight = self._radius[keep], self._misses[keep], self._weight[keep]
        D = self._D[np.ix_(keep, keep)]
        self.size = 0
        self._allocate(min(max(n + 1, 64), self.max_buffer + 1))
        self._X[:n], self._y[:n], self._t[:n] = X, y, t
        self._radius[:n], self._misses[:n], self._weight[:n] = radius, misses, weight
        self._D[:n, :n] = D
        self.size = n

    # -- checks and persistence --------------------------------------------

    def check_invariants(self) -> None:
        s = self.size
        assert s <= self.max_buffer
        expected = self._pw[self._misses[:s]]
        assert np.array_equal(self._weight[:s], expected), "weight != (1-phi)^misses"
        assert np.all(self._weight[:s] >= self.alpha)
        assert np.unique(self._t[:s]).size == s

    def to_arrays(self) -> dict:
        order = self._order()
        prefix = f"phi_{self.phi!r}"
        return {
            f"{prefix}/X": self._X[order].copy(),
            f"{prefix}/y": self._y[order].copy(),
            f"{prefix}/t": self._t[order].copy(),
            f"{prefix}/radius": self._radius[order].copy(),
            f"{prefix}/misses": self._misses[order].copy(),
            f"{prefix}/weight": self._weight[order].copy(),
        }

    def meta(self) -> dict:
        return {
            "phi": self.phi,
            "max_buffer": self.max_buffer,
            "n_features": self.n_features,
            "alpha": self.alpha,
        }

    @classmethod
    def from_arrays(cls, meta: dict, arrays: dict) -> "RegionSet":
        rs = cls(meta["phi"], meta["max_buffer"], meta["n_features"], meta["alpha"])
        prefix = f"phi_{rs.phi!r}"
        X = np.asarray(arrays[f"{prefix}/X"], dtype=np.float64)
        n = X.shape[0]
        rs._allocate(min(max(n + 1, 64), rs.max_buffer + 1))
        rs._X[:n] = X
        rs._y[:n] = arrays[f"{prefix}/y"]
        rs._t[:n] = arrays[f"{prefix}/t"]
        rs._radius[:n] = arrays[f"{prefix}/radius"]
        rs._misses[:n] = arrays[f"{prefix}/misses"]
        rs._weight[:n] = arrays[f"{prefix}/weight"]
        rs.size = n
        K.fill_distance_matrix(rs._X, n, rs._D, rs._tmp)
        return rs

    def save(self, path) -> None:
        arrays = self.to_arrays()
        arrays["meta"] = np.frombuffer(
            json.dumps({"version": SNAPSHOT_VERSION, "kind": "region_set", **self.meta()}).encode(),
            dtype=np.uint8,
        )
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "RegionSet":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode())
            if meta.get("version") != SNAPSHOT_VERSION or meta.get("kind") != "region_set":
                raise ValueError(f"unsupported snapshot: {meta.get('kind')} v{meta.get('version')}")
            return cls.from_arrays(meta, {k: data[k] for k in data.files})

    def state_equal(self, other: "RegionSet") -> bool:
        a, b = self.to_arrays(), other.to_arrays()
        return self.meta() == other.meta() and a.keys() == b.keys() and all(
            np.array_equal(a[k], b[k]) for k in a
        )


def init_region_set(
    phi: float, training: Sequence[LabeledInstance], max_buffer: int,
    n_features: int | None = None, alpha: float = 0.01,
) -> RegionSet:
    """Build a region set with one region per training instance.

    Below :func:`min_training_size` every radius is unbounded, so the next
    arrivals hit every region and trigger re-estimation once the pool is
    large enough.
    """
    return RegionSet.from_training(phi, training, max_buffer, n_features, alpha)


def update_on_instance(rs: RegionSet, inst: LabeledInstance, alpha: float) -> RegionSet:
    rs.update(inst, alpha)
    return rs


def core_instances(rs: RegionSet) -> list[LabeledInstance]:
    return rs.core_instances()
