import numpy as np
import pytest
from conftest import make_instances
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import hard_vote, ibk

from diwe.core import LabeledInstance, StreamSchema
from diwe.ensemble import (
    ConfigError,
    DiweClassifier,
    DiweConfig,
    diwe_init,
    diwe_step,
    ibk_predict,
    load_checkpoint,
    predict_only,
    save_checkpoint,
    soft_majority_vote,
)
from diwe.generators import gen_sea


def test_ibk_equal_weights_fraction():
    # five neighbours on a circle of radius 1 around the query
    ang = np.linspace(0, 2 * np.pi, 5, endpoint=False)
    X = np.c_[np.cos(ang), np.sin(ang)]
    tr = make_instances(X, [0, 0, 0, 1, 1])
    p = ibk_predict(tr, np.zeros(2), 5, 2)
    assert p == pytest.approx([0.6, 0.4], abs=1e-12)


def test_ibk_exact_match_one_hot():
    tr = make_instances([[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]], [0, 1, 0])
    assert ibk_predict(tr, [1.0, 1.0], 3, 2).tolist() == [0.0, 1.0]


def test_ibk_inverse_distance():
    tr = make_instances([[1.0], [2.0]], [0, 1])
    assert ibk_predict(tr, [0.0], 5, 2) == pytest.approx([2 / 3, 1 / 3], abs=1e-15)


def test_ibk_empty_is_uniform():
    assert ibk_predict([], [0.3, 0.2], 5, 4).tolist() == [0.25] * 4


def test_ibk_distance_ties_rank_by_arrival():
    # three points at distance 1; k=2 keeps the two earliest arrivals
    tr = [LabeledInstance(np.array([1.0]), 1, 3), LabeledInstance(np.array([-1.0]), 0, 1),
          LabeledInstance(np.array([1.0]), 0, 2)]
    assert ibk_predict(tr, [0.0], 2, 2).tolist() == [1.0, 0.0]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 40), st.integers(1, 9), st.integers(2, 5))
def test_ibk_matches_oracle(seed, m, k, c):
    r = np.random.default_rng(seed)
    X = r.integers(0, 5, (m, 2)).astype(float) / 4  # coarse grid -> ties and exact hits
    y = r.integers(0, c, m)
    tr = make_instances(X, y)
    q = r.integers(0, 5, 2).astype(float) / 4
    got = ibk_predict(tr, q, k, c)
    want = ibk([(i.features, i.label, i.t) for i in tr], q, k, c)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-15)
    assert abs(got.sum() - 1.0) <= 1e-9 and np.all(got >= 0)


def test_soft_vote_examples():
    vecs = [np.array(v) for v in ([0.6, 0.4], [0.7, 0.3], [0.1, 0.9])]
    label, combined = soft_majority_vote(vecs)
    assert combined == pytest.approx([1.4, 1.6], abs=1e-15) and label == 1
    assert soft_majority_vote([np.array([0.2, 0.8])])[0] == 1
    assert soft_majority_vote([np.array([0.5, 0.5])] * 2)[0] == 0
    with pytest.raises(ValueError):
        soft_majority_vote([])


def test_hard_vote_oracle_disagrees_on_same_vectors():
    counts, label = hard_vote([[0.6, 0.4], [0.7, 0.3], [0.1, 0.9]])
    assert counts == [2, 1] and label == 0


@given(st.lists(st.lists(st.floats(0, 1), min_size=3, max_size=3), min_size=1, max_size=6),
       st.floats(1e-3, 1e3))
def test_vote_argmax_scale_invariant(vectors, scale):
    vecs = [np.array(v) for v in vectors]
    a, _ = soft_majority_vote(vecs)
    b, _ = soft_majority_vote([scale * v for v in vecs])
    combined = sum(vecs)
    if np.sort(combined)[-1] - np.sort(combined)[-2] > 1e-9 * (1 + combined.max()):
        assert a == b


def test_config_validation_and_json(tmp_path):
    cfg = DiweConfig()
    assert len(cfg.phi_grid) == 20 and cfg.phi_grid[0] == 0.025 and cfg.phi_grid[-1] == 0.5
    assert (cfg.voting_size, cfg.k, cfg.max_buffer, cfg.alpha, cfg.select_every) == (10, 5, 1000, 0.01, 1)
    for bad in ({"voting_size": 21}, {"alpha": 1.0}, {"k": 0}, {"phi_grid": [0.3, 0.2]},
                {"phi_grid": [0.6]}, {"select_every": 0}, {"surprise": 1}):
        with pytest.raises(ConfigError):
            DiweConfig.from_dict(bad)
    p = tmp_path / "c.json"
    p.write_text('{"voting_size": 3, "phi_grid": [0.1, 0.2, 0.3, 0.4]}')
    cfg = DiweConfig.from_json(p)
    assert cfg.voting_size == 3 and DiweConfig.from_dict(cfg.to_dict()) == cfg


SMALL = DiweConfig(phi_grid=(0.1, 0.2, 0.3, 0.4, 0.5), voting_size=3, max_buffer=80)


def test_init_empty_family():
    st_ = diwe_init(DiweConfig(), [], StreamSchema(2, 2))
    assert len(st_.family) == 20 and all(len(rs) == 0 for rs in st_.family.members)
    assert st_.current_selection.indices == tuple(range(10))


def test_init_400_gives_finite_radii(rng):
    tr = make_instances(rng.random((400, 2)), rng.integers(0, 2, 400))
    st_ = diwe_init(DiweConfig(), tr, StreamSchema(2, 2))
    for rs in st_.family.members:
        assert all(np.isfinite(r.radius) for r in rs.regions)


def test_single_member_equals_ibk(rng):
    cfg = DiweConfig(phi_grid=(0.2,), voting_size=1)
    schema = StreamSchema(2, 3)
    state = diwe_init(cfg, [], schema)
    assert state.current_selection.indices == (0,)
    for inst in make_instances(rng.random((150, 2)), rng.integers(0, 3, 150)):
        want = ibk_predict(state.family[0].core_instances(), inst.features, cfg.k, 3)
        label, probs, state = diwe_step(state, inst)
        assert probs.tolist() == want.tolist()
        assert label == int(np.argmax(want))


def test_all_members_updated_every_step(rng):
    state = diwe_init(SMALL, [], StreamSchema(2, 2))
    for inst in make_instances(rng.random((60, 2)), rng.integers(0, 2, 60)):
        diwe_step(state, inst)
        assert all(inst.t in rs.arrival_indices for rs in state.family.members)


def test_prediction_ignores_current_label(rng):
    """Scrambling the label of instance t cannot change its prediction."""
    X = rng.random((200, 2))
    y = rng.integers(0, 2, 200)
    a = diwe_init(SMALL, [], StreamSchema(2, 2))
    b = diwe_init(SMALL, [], StreamSchema(2, 2))
    for inst in make_instances(X, y):
        scrambled = LabeledInstance(inst.features, 1 - inst.label, inst.t)
        la, pa, a = diwe_step(a, inst)
        # b sees the scrambled label for the prediction step only, on a copy
        path_b = load_roundtrip(b)
        lb, pb, _ = diwe_step(path_b, scrambled)
        assert (la, pa.tolist()) == (lb, pb.tolist())
        diwe_step(b, inst)


def load_roundtrip(state, _cache={}):
    import os
    import tempfile

    fd, path = tempfile.mkstemp(suffix=".npz")
    os.close(fd)
    try:
        save_checkpoint(state, path)
        return load_checkpoint(path)
    finally:
        os.remove(path)


def test_vectors_normalised(rng):
    state = diwe_init(SMALL, [], StreamSchema(3, 4))
    for inst in make_instances(rng.random((150, 3)), rng.integers(0, 4, 150)):
        _, probs, state = diwe_step(state, inst)
        assert abs(probs.sum() - 1.0) <= 1e-9 and np.all(probs >= 0)


def test_determinism():
    s = gen_sea("sudden", 7, length=400)
    runs = []
    for _ in range(2):
        state = diwe_init(SMALL, [], s.schema)
        runs.append([diwe_step(state, inst)[0] for inst in s])
    assert runs[0] == runs[1]


def test_checkpoint_resumes_bit_identically(tmp_path):
    s = gen_sea("sudden", 3, length=600)
    insts = list(s)
    state = diwe_init(SMALL, [], s.schema)
    for inst in insts[:300]:
        diwe_step(state, inst)
    path = tmp_path / "state.npz"
    save_checkpoint(state, path)
    restored = load_checkpoint(path)
    assert restored.step == state.step and restored.current_selection == state.current_selection
    for inst in insts[300:]:
        la, pa, state = diwe_step(state, inst)
        lb, pb, restored = diwe_step(restored, inst)
        assert la == lb and pa.tobytes() == pb.tobytes()
        assert state.current_selection == restored.current_selection
    for a, b in zip(state.family.members, restored.family.members):
        assert a.state_equal(b)


def test_select_every_reuses_selection():
    s = gen_sea("sudden", 5, length=300)
    cfg = DiweConfig(phi_grid=SMALL.phi_grid, voting_size=3, max_buffer=80, select_every=25)
    state = diwe_init(cfg, [], s.schema)
    changes = []
    for i, inst in enumerate(s):
        diwe_step(state, inst)
        changes.append(state.info.reselected)
    assert [i for i, c in enumerate(changes) if c] == list(range(0, 300, 25))


def test_predict_then_learn_equals_step():
    s = gen_sea("gradual", 2, length=400)
    a = DiweClassifier(SMALL, s.schema)
    b = DiweClassifier(SMALL, s.schema)
    for inst in s:
        la, pa = a.test_then_train(inst)
        lb, pb = b.predict(inst.features)
        b.learn(inst)
        assert la == lb and pa.tolist() == pb.tolist()


def test_stationary_buffers_bounded(rng):
    cfg = DiweConfig(phi_grid=(0.025, 0.05, 0.25, 0.5), voting_size=2)
    state = diwe_init(cfg, [], StreamSchema(2, 2))
    for inst in make_instances(rng.random((1500, 2)), rng.integers(0, 2, 1500)):
        diwe_step(state, inst)
    sizes = [len(rs) for rs in state.family.members]
    assert all(sz <= 1000 for sz in sizes)
    # the smallest phi has a long drift horizon and fills up; large phi does not
    assert sizes[0] == 1000
    assert sizes[-1] < 1000


def test_classifier_requires_reset():
    clf = DiweClassifier(SMALL)
    with pytest.raises(RuntimeError):
        clf.predict([0.0, 0.0])
