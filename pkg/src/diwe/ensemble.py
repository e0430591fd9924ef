"""IBk base learner, soft voting and the diverse instance-weighting ensemble.

Each ensembler is one region set read as a training set: an inverse-distance
weighted k-NN over its surviving core instances. At every step the members
whose core sets disagree most (max-RDD) vote on the prediction; afterwards
every member, selected or not, absorbs the labeled instance.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels as K
from .core import LabeledInstance, StreamSchema, stack_instances
from .diversity import EnsembleSelection, RegionSetFamily, select_from_matrix
from .regions import RegionSet

CHECKPOINT_VERSION = 1
DEFAULT_PHI_GRID = tuple(round(0.025 * i, 3) for i in range(1, 21))


class ConfigError(ValueError):
    pass


def ibk_predict_arrays(X, y, t, query, k: int, c: int) -> np.ndarray:
    """IBk over ``(X, y, t)`` arrays; see :func:`ibk_predict`."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    t = np.ascontiguousarray(t, dtype=np.int64)
    m = X.shape[0]
    dist = np.empty(m)
    q = np.ascontiguousarray(query, dtype=np.float64)
    if m:
        K.row_distances(X, m, q, dist)
    out = np.empty(c)
    K.knn_proba(dist, y, t, m, k, c, out, np.empty(max(k, 1), dtype=np.int64))
    return out


def ibk_predict(training: Sequence[LabeledInstance], query, k: int, c: int) -> np.ndarray:
    """Class probabilities from the k nearest training instances.

    Neighbours are weighted by inverse distance and ranked by (distance,
    arrival index). A neighbour at distance zero yields a one-hot vector on
    its class; an empty training set yields the uniform vector.
    """
    X, y, t = stack_instances(training, len(query))
    return ibk_predict_arrays(X, y, t, query, k, c)


def soft_majority_vote(vectors: Sequence[np.ndarray]) -> tuple[int, np.ndarray]:
    """Sum probability vectors; the label is the argmax, lowest index on ties."""
    if len(vectors) == 0:
        raise ValueError("soft vote needs at least one vector")
    combined = np.zeros(len(vectors[0]))
    for v in vectors:
        if len(v) != combined.size:
            raise ValueError("probability vectors differ in length")
        combined += v
    return int(np.argmax(combined)), combined


@dataclass(frozen=True)
class DiweConfig:
    phi_grid: tuple[float, ...] = DEFAULT_PHI_GRID
    voting_size: int = 10
    k: int = 5
    max_buffer: int = 1000
    alpha: float = 0.01
    select_every: int = 1

    def __post_init__(self):
        grid = tuple(float(p) for p in self.phi_grid)
        object.__setattr__(self, "phi_grid", grid)
        if not grid:
            raise ConfigError("phi_grid is empty")
        if any(not 0.0 < p <= 0.5 for p in grid):
            raise ConfigError("phi_grid values must lie in (0, 0.5]")
        if list(grid) != sorted(set(grid)):
            raise ConfigError("phi_grid must be strictly ascending")
        if not 1 <= self.voting_size <= len(grid):
            raise ConfigError(f"voting_size must lie in [1, {len(grid)}]")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.max_buffer < 1:
            raise ConfigError("max_buffer must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.select_every < 1:
            raise ConfigError("select_every must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "DiweConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "DiweConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["phi_grid"] = list(self.phi_grid)
        return d


@dataclass
class StepInfo:
    """What one ensemble step did, for traces."""

    selection: EnsembleSelection
    reselected: bool
    member_probs: np.ndarray | None = None


@dataclass
class DiweState:
    family: RegionSetFamily
    config: DiweConfig
    schema: StreamSchema
    current_selection: EnsembleSelection
    step: int = 0
    last_t: int = 0
    info: StepInfo | None = field(default=None, repr=False)


def _select(family: RegionSetFamily, voting_size: int) -> EnsembleSelection:
    return select_from_matrix(family.pairwise_rdd(), voting_size)


def diwe_init(
    config: DiweConfig, training: Sequence[LabeledInstance], schema: StreamSchema
) -> DiweState:
    members = [
        RegionSet.from_training(phi, training, config.max_buffer, schema.n, config.alpha)
        for phi in config.phi_grid
    ]
    family = RegionSetFamily(members)
    last_t = max((inst.t for inst in training), default=0)
    return DiweState(family, config, schema, _select(family, config.voting_size), 0, last_t)


def diwe_step(
    state: DiweState,
    inst: LabeledInstance,
    record_members: bool = False,
    selector: Callable[[DiweState], EnsembleSelection] | None = None,
) -> tuple[int, np.ndarray, DiweState]:
    """Predict ``inst`` from the state after the previous instance, then learn it.

    ``selector`` replaces max-RDD (used to compare selection strategies);
    ``record_members`` keeps every member's probability vector in
    ``state.info``.
    """
    cfg = state.config
    c = state.schema.c
    reselect = state.step % cfg.select_every == 0
    if reselect:
        state.current_selection = (
            selector(state) if selector is not None else _select(state.family, cfg.voting_size)
        )
    selected = state.current_selection.indices
    chosen = set(selected)
    x = inst.features
    S = len(state.family)
    probs = np.empty((S, c))
    nbr = np.empty(cfg.k, dtype=np.int64)
    # per member: distances once, predict from the pre-update state, then learn
    for s, rs in enumerate(state.family.members):
        rs.distances_to(x)
        if record_members or s in chosen:
            rs.predict_proba(x, cfg.k, c, probs[s], nbr, fresh=False)
        removed = rs.update(inst, cfg.alpha, fresh=False)
        state.family.observe(s, inst.t, removed)
    label, combined = soft_majority_vote([probs[s] for s in selected])
    state.step += 1
    state.last_t = inst.t
    state.info = StepInfo(
        state.current_selection, reselect, probs.copy() if record_members else None
    )
    return label, combined / len(selected), state


def predict_only(state: DiweState, x) -> tuple[int, np.ndarray]:
    """Vote on ``x`` from the current state without learning anything.

    A due reselection is stored in ``state`` so that a later learn step sees
    the same selection :func:`diwe_step` would have used.
    """
    cfg = state.config
    if state.step % cfg.select_every == 0:
        state.current_selection = _select(state.family, cfg.voting_size)
    sel = state.current_selection
    c = state.schema.c
    nbr = np.empty(cfg.k, dtype=np.int64)
    vecs = []
    x = np.asarray(x, dtype=np.float64)
    for s in sel.indices:
        vecs.append(state.family[s].predict_proba(x, cfg.k, c, np.empty(c), nbr))
    label, combined = soft_majority_vote(vecs)
    return label, combined / len(vecs)


# -- checkpoints ------------------------------------------------------------


def save_checkpoint(state: DiweState, path) -> None:
    arrays = {}
    members = []
    for rs in state.family.members:
        arrays.update(rs.to_arrays())
        members.append(rs.meta())
    meta = {
        "version": CHECKPOINT_VERSION,
        "kind": "diwe_state",
        "config": state.config.to_dict(),
        "schema": {"n": state.schema.n, "c": state.schema.c,
                   "class_names": list(state.schema.class_names) if state.schema.class_names else None},
        "step": state.step,
        "last_t": state.last_t,
        "selection": {"indices": list(state.current_selection.indices),
                      "diversity": state.current_selection.diversity.hex()},
        "members": members,
    }
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    np.savez(path, **arrays)


def load_checkpoint(path) -> DiweState:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("kind") != "diwe_state" or meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint: {meta.get('kind')} v{meta.get('version')}")
        arrays = {k: data[k] for k in data.files}
    members = [RegionSet.from_arrays(m, arrays) for m in meta["members"]]
    sch = meta["schema"]
    schema = StreamSchema(sch["n"], sch["c"], tuple(sch["class_names"]) if sch["class_names"] else None)
    sel = EnsembleSelection(
        tuple(meta["selection"]["indices"]), float.fromhex(meta["selection"]["diversity"])
    )
    return DiweState(
        RegionSetFamily(members), DiweConfig.from_dict(meta["config"]), schema, sel,
        meta["step"], meta["last_t"],
    )


class DiweClassifier:
    """Stream learner wrapper exposing predict / learn / test_then_train."""

    def __init__(self, config: DiweConfig | None = None, schema: StreamSchema | None = None,
                 training: Sequence[LabeledInstance] = (), record_members: bool = False):
        self.config = config or DiweConfig()
        self.schema = schema
        self.training = list(training)
        self.record_members = record_members
        self.state: DiweState | None = None
        if schema is not None:
            self.reset(schema)

    def reset(self, schema: StreamSchema) -> None:
        self.schema = schema
        self.state = diwe_init(self.config, self.training, schema)

    def _ensure(self) -> None:
        if self.state is None:
            raise RuntimeError("call reset(schema) before streaming")

    def predict(self, x) -> tuple[int, np.ndarray]:
        if self.state is None:
            raise RuntimeError("call reset(schema) before streaming")
        return predict_only(self.state, x)

    def learn(self, inst: LabeledInstance) -> None:
        self._ensure()
        self.state.family.update(inst, self.config.alpha)
        self.state.step += 1
        self.state.last_t = inst.t

    def test_then_train(self, inst: LabeledInstance) -> tuple[int, np.ndarray]:
        self._ensure()
        label, probs, _ = diwe_step(self.state, inst, self.record_members)
        return label, probs

    # trace hooks
    def trace_fields(self) -> dict:
        st = self.state
        return {
            "div": st.current_selection.diversity,
            "selected": st.current_selection.indices,
            "buffers": [len(rs) for rs in st.family.members],
        }

    def buffer_labels(self) -> list[str]:
        return [f"buf_phi_{phi:g}" for phi in self.config.phi_grid]
