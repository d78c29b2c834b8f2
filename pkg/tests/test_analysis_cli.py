import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ranho.analysis import cosine_matrix, pca_project_2d, percentiles, power_iteration_top2
from ranho.cli import ExperimentSpec, run
from ranho.sim.config import ConfigError


def test_percentiles_nearest_rank():
    assert percentiles(range(1, 101), [95]) == [95.0]
    assert percentiles(range(1, 101), [50, 90, 99]) == [50.0, 90.0, 99.0]


def test_percentiles_single_sample():
    assert percentiles([7.0], [1, 50, 95, 100]) == [7.0] * 4


def test_percentiles_order_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=101)
    shuffled = x.copy()
    rng.shuffle(shuffled)
    assert percentiles(x, [50, 95]) == percentiles(shuffled, [50, 95])


def test_percentiles_empty_error():
    with pytest.raises(ValueError):
        percentiles([], [50])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_percentile_monotone(samples):
    p50, p90, p95, p99 = percentiles(samples, [50, 90, 95, 99])
    assert p50 <= p90 <= p95 <= p99


def test_pca_rank2_reconstruction():
    rng = np.random.default_rng(1)
    basis = rng.normal(size=(2, 8))
    coeffs = rng.normal(size=(40, 2)) * np.array([3.0, 1.0])
    x = coeffs @ basis + rng.normal(size=8) * 0.0 + 5.0
    scores, eigvals, comps = pca_project_2d(x)
    centered = x - x.mean(axis=0)
    recon = scores @ comps.T
    assert np.max(np.abs(recon - centered)) < 1e-8


def test_power_iteration_matches_dense_eigensolver():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(8, 8))
    cov = a @ a.T
    eigvals, vecs = power_iteration_top2(cov)
    ref = np.sort(np.linalg.eigvalsh(cov))[::-1][:2]
    assert np.allclose(np.sort(eigvals)[::-1], ref, atol=1e-6)


def test_pca_needs_three_samples():
    with pytest.raises(ValueError):
        pca_project_2d(np.zeros((2, 4)))


def test_cosine_self_similarity_one():
    z = np.random.default_rng(3).normal(size=(5, 16))
    sim = cosine_matrix(z)
    assert np.allclose(np.diag(sim), 1.0)
    assert np.allclose(sim, sim.T)


# ---------------------------------------------------------------------------
# CLI


def compare_spec_dict(seeds, duration=4_000):
    return {
        "scenario": {"factory": "crossing_2cell",
                     "args": {"agent_dl_mbps": 1.0, "agent_ul_mbps": 0.3,
                              "target_bg_mbps": 1.0}},
        "mode": "compare",
        "compare": ["a3", "nomm"],
        "seeds": seeds,
        "duration_ms": duration,
    }


def test_compare_mode_row_count(tmp_path):
    spec = ExperimentSpec.from_dict(compare_spec_dict([1, 2, 3]))
    out = run(spec, tmp_path / "out")
    lines = (out / "summary.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + 2 * 3    # header + controllers x seeds
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["mode"] == "compare"
    assert len(manifest["config_hash"]) == 64


def test_duplicate_seed_rerun_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        spec = ExperimentSpec.from_dict(compare_spec_dict([5]))
        out = run(spec, tmp_path / name)
        outs.append((out / "summary.csv").read_bytes())
        outs.append((out / "manifest.json").read_bytes())
    assert outs[0] == outs[2]
    assert outs[1] == outs[3]


def test_invalid_spec_field_error_names_path():
    with pytest.raises(ConfigError, match="spec.mode"):
        ExperimentSpec.from_dict({"scenario": {"factory": "quiescent_2cell"},
                                  "mode": "bogus"})
    with pytest.raises(ConfigError, match="factory"):
        ExperimentSpec.from_dict({"scenario": {"factory": "nope"}})


def test_invalid_scenario_json_line_precise(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"sim": {"n_cells": 1}}')
    spec = {"scenario": "bad.json", "mode": "eval", "seeds": [1]}
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    with pytest.raises(ConfigError, match="n_cells"):
        ExperimentSpec.load(spec_path)


def test_cli_entry_point(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(compare_spec_dict([1], duration=2_000)))
    result = subprocess.run(
        [sys.executable, "-m", "ranho.cli", "run", "--spec", str(spec_path),
         "--out", str(tmp_path / "out"), "--seeds", "2"],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    summary = (tmp_path / "out" / "summary.csv").read_text()
    assert "a3,2" in summary


def test_analyze_mode(tmp_path):
    rng = np.random.default_rng(4)
    trace = tmp_path / "embeddings.csv"
    with open(trace, "w") as fh:
        fh.write("ue_id,t_ms,z0,z1,z2,z3\n")
        for t in range(30):
            z = rng.normal(size=4)
            fh.write(f"0,{t * 120}," + ",".join(f"{v:.6f}" for v in z) + "\n")
    spec = ExperimentSpec.from_dict({
        "scenario": {"factory": "quiescent_2cell"},
        "mode": "analyze",
        "seeds": [0],
        "embedding_trace": str(trace),
    })
    out = run(spec, tmp_path / "out")
    pca = (out / "pca_trajectories.csv").read_text().splitlines()
    assert pca[0] == "ue_id,t_ms,pc1,pc2"
    assert len(pca) == 31
    cos = (out / "cosine_similarity.csv").read_text().splitlines()
    assert len(cos) == 31


def test_traffic_case_scales_background(tmp_path):
    base = ExperimentSpec.from_dict({
        "scenario": {"factory": "heavy_3cell"}, "mode": "eval", "seeds": [1]})
    light = ExperimentSpec.from_dict({
        "scenario": {"factory": "heavy_3cell"}, "mode": "eval", "seeds": [1],
        "traffic_case": "light"})
    total = lambda sc: sum(u.traffic.dl_rate_mbps for u in sc.scenario.ues
                           if u.controller == "static")
    assert total(light) < total(base)
