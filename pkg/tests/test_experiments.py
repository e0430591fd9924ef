import json

import numpy as np
import pytest

from diwe.ensemble import DiweConfig
from diwe.experiments import (
    UnknownExperimentError,
    buffer_trace,
    mean_sd,
    policy_pass,
    run_diwe,
    run_experiment,
)
from diwe.generators import gen_oned_drift, gen_sea

TINY = DiweConfig(phi_grid=(0.1, 0.2, 0.3, 0.4, 0.5), voting_size=3, max_buffer=100)


def test_buffer_trace_bounded_and_starts_at_one():
    tr = buffer_trace(gen_oned_drift(1), max_buffer=300)
    assert tr.size == 4000 and tr[0] == 1 and tr.max() <= 300


def test_policy_pass_matches_classifier():
    s = gen_sea("sudden", 3, length=400)
    res = policy_pass(s, TINY, voting_sizes=(2, 3, 4), n_random=5, random_seed=1)
    trace = run_diwe(s, TINY)
    assert res["n"] == 400
    assert res["diwe"] == trace.correct == res["maxrdd"][3]
    assert set(res["maxrdd"]) == {2, 3, 4}
    assert res["random"].shape == (5,) and np.all((res["random"] >= 0) & (res["random"] <= 400))


def test_policy_pass_all_members_random_equals_maxrdd():
    # with voting_size == |Phi| every policy picks the full family
    cfg = DiweConfig(phi_grid=(0.2, 0.3, 0.5), voting_size=3, max_buffer=100)
    res = policy_pass(gen_sea("gradual", 1, length=300), cfg, n_random=4)
    assert np.all(res["random"] == res["maxrdd"][3])


def test_mean_sd():
    assert mean_sd([1.0, 3.0]) == (2.0, pytest.approx(np.sqrt(2.0)))
    assert mean_sd([5.0])[1] == 0.0


def test_exp1_outputs(tmp_path):
    summary = run_experiment("exp1_removal", tmp_path, runs=2, max_buffer=500)
    for f in ("exp1_buffers.csv", "exp1_summary.json", "exp1_buffers.png"):
        assert (tmp_path / f).stat().st_size > 0
    assert len(summary["runs"]) == 2
    assert json.loads((tmp_path / "exp1_summary.json").read_text())["n_both"] == summary["n_both"]


def test_exp2_outputs(tmp_path):
    summary = run_experiment("exp2_synthetic", tmp_path, runs=2, config=TINY,
                             kinds=("sea_sudden", "rbf"), length=200)
    assert set(summary["kinds"]) == {"sea_sudden", "rbf"}
    assert (tmp_path / "exp2_sea_sudden_seed1.csv").exists()
    for f in ("exp2_summary.csv", "exp2_summary.json", "exp2_accuracy.png"):
        assert (tmp_path / f).stat().st_size > 0


def test_exp4_outputs(tmp_path):
    summary = run_experiment("exp4_maxrdd_vs_random", tmp_path, runs=2, config=TINY,
                             kinds=("hyperplane",), length=200, n_random=3)
    k = summary["kinds"]["hyperplane"]
    assert len(k["maxrdd"]) == 2 and k["gap"] == pytest.approx(k["maxrdd_mean"] - k["random_mean"])
    for f in ("exp4_runs.csv", "exp4_summary.json", "exp4_gap.png"):
        assert (tmp_path / f).stat().st_size > 0


def test_exp5_outputs(tmp_path):
    summary = run_experiment("exp5_sensitivity", tmp_path, runs=1, config=TINY, length=150,
                             voting_sizes=(2, 3), max_buffers=(50, 100))
    assert set(summary["mean_accuracy"]["sea_sudden"]) == {"50", "100"}
    for f in ("exp5_runs.csv", "exp5_summary.json", "exp5_sensitivity.png"):
        assert (tmp_path / f).stat().st_size > 0


def test_unknown_experiment(tmp_path):
    with pytest.raises(UnknownExperimentError):
        run_experiment("exp3_real", tmp_path)
