"""Region drift disagreement (RDD) and max-diversity ensembler selection.

Two region sets disagree about drift exactly where one has dropped a core
that the other still keeps, so their disagreement is the Jaccard distance
between their core sets (cores keyed by arrival index).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .core import LabeledInstance
from .regions import RegionSet

# incremental candidate sums stay within ~1e-13 of the exact j<k sum for any
# practical grid; anything closer than this to the incumbent is re-scored
_TIE_EPS = 1e-9


def jaccard_distance(inter: int, union: int) -> float:
    if union == 0:
        return 0.0
    return 1.0 - inter / union


def rdd(a: RegionSet, b: RegionSet) -> float:
    ta, tb = a.arrival_indices, b.arrival_indices
    inter = np.intersect1d(ta, tb, assume_unique=True).size
    return jaccard_distance(inter, ta.size + tb.size - inter)


def average_diversity(subset: Sequence[RegionSet]) -> float:
    k = len(subset)
    if k < 2:
        raise ValueError("diversity needs at least two region sets")
    total = 0.0
    for j in range(k - 1):
        for i in range(j + 1, k):
            total += rdd(subset[j], subset[i])
    return 2.0 * total / (k * (k - 1))


@dataclass(frozen=True)
class EnsembleSelection:
    indices: tuple[int, ...]
    diversity: float


class RegionSetFamily:
    """Region sets over a phi grid fed the identical instance sequence.

    The family tracks pairwise core-set intersection counts incrementally
    (one O(|grid|) correction per added or removed core), so the full RDD
    matrix is available every step without set operations.
    """

    def __init__(self, members: Sequence[RegionSet]):
        self.members = list(members)
        phis = [m.phi for m in self.members]
        if phis != sorted(phis):
            raise ValueError("members must be ordered by ascending phi")
        if len({m.max_buffer for m in self.members}) > 1:
            raise ValueError("members must share max_buffer")
        if len(self.members) > 62:
            raise ValueError("at most 62 members are supported")
        self.recount()

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i: int) -> RegionSet:
        return self.members[i]

    @property
    def phis(self) -> list[float]:
        return [m.phi for m in self.members]

    def recount(self) -> None:
        """Rebuild membership masks and intersection counts from scratch."""
        top = max((int(rs.arrival_indices.max()) for rs in self.members if len(rs)), default=0)
        self._mask = np.zeros(max(2 * top, 1024), dtype=np.int64)
        for s, rs in enumerate(self.members):
            self._mask[rs.arrival_indices] |= 1 << s
        S = len(self.members)
        inter = np.zeros((S, S), dtype=np.int64)
        for s in range(S):
            for r in range(s, S):
                inter[s, r] = inter[r, s] = rdd_counts(self.members[s], self.members[r])[0]
        self._inter = inter

    def observe(self, s: int, added: int, removed: np.ndarray) -> None:
        """Record that member ``s`` gained core ``added`` and lost ``removed``."""
        if added >= self._mask.size:
            grown = np.zeros(2 * added, dtype=np.int64)
            grown[: self._mask.size] = self._mask
            self._mask = grown
        removed = np.ascontiguousarray(removed, dtype=np.int64)
        K.observe_kernel(self._mask, self._inter, s, added, removed, removed.size)

    def update(self, inst: LabeledInstance, alpha: float, fresh: bool = True) -> None:
        for s, rs in enumerate(self.members):
            removed = rs.update(inst, alpha, fresh=fresh)
            self.observe(s, inst.t, removed)

    def intersections(self) -> np.ndarray:
        return self._inter.copy()

    def pairwise_rdd(self) -> np.ndarray:
        """Symmetric matrix of RDD values between all members."""
        inter = self._inter
        sizes = np.diag(inter)
        union = sizes[:, None] + sizes[None, :] - inter
        with np.errstate(divide="ignore", invalid="ignore"):
            R = np.where(union == 0, 0.0, 1.0 - inter / np.where(union == 0, 1, union))
        np.fill_diagonal(R, 0.0)
        return R


def rdd_counts(a: RegionSet, b: RegionSet) -> tuple[int, int]:
    ta, tb = a.arrival_indices, b.arrival_indices
    inter = np.intersect1d(ta, tb, assume_unique=True).size
    return inter, ta.size + tb.size - inter


def select_from_matrix(R: np.ndarray, voting_size: int) -> EnsembleSelection:
    """Max-RDD selection given a precomputed pairwise RDD matrix."""
    m = R.shape[0]
    if not 1 <= voting_size <= m:
        raise ValueError(f"voting_size must lie in [1, {m}], got {voting_size}")
    if voting_size == 1:
        return EnsembleSelection((0,), 0.0)
    idx, value = K.best_combination(np.ascontiguousarray(R, dtype=np.float64), voting_size, _TIE_EPS)
    return EnsembleSelection(tuple(int(i) for i in idx), float(value))


def max_rdd_select(family: RegionSetFamily | Sequence[RegionSet], voting_size: int) -> EnsembleSelection:
    """Exhaustively choose the ``voting_size`` members with maximum mean RDD.

    Ties go to the first combination in lexicographic order. A voting size
    of one has no pairs; it selects the first member with diversity 0.
    """
    if not isinstance(family, RegionSetFamily):
        family = RegionSetFamily(family)
    return select_from_matrix(family.pairwise_rdd(), voting_size)

