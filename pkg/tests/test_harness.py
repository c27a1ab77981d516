import json
import math
import os

import numpy as np
import pytest

from jacspec import harness
from jacspec.errors import ConfigError


@pytest.fixture(autouse=True)
def _no_thread_env(monkeypatch):
    monkeypatch.delenv("JACSPEC_THREADS", raising=False)


def _depth_cfg(**over):
    base = {
        "experiment_id": "t.depth", "kind": "depth_sweep", "n": 16,
        "depths": [3, 5], "seeds": 2, "sigma_w2": [2.0],
    }
    base.update(over)
    return harness.config_from_dict(base)


def test_csv_header_is_pinned():
    assert harness.CSV_HEADER == (
        "experiment_id,kind,seed,n,L,sigma_w2,method,sparsity,scaling_mode,"
        "scale_value,eta,k,log_jac_norm,converged,wall_time_ms"
    )
    assert harness.APPROX_CSV_HEADER == "experiment_id,kind,replicate,n,L,layer,statistic,value"


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        harness.config_from_dict({"experiment_id": "x", "kind": "depth_sweep", "n": 8,
                                  "depths": [2], "seeds": 1, "sigmas": [2.0]})


def test_config_requires_core_keys():
    with pytest.raises(ConfigError):
        harness.config_from_dict({"kind": "depth_sweep", "n": 8, "depths": [2], "seeds": 1})


def test_config_validates_values():
    with pytest.raises(ConfigError):
        _depth_cfg(kind="volume_sweep")
    with pytest.raises(ConfigError):
        _depth_cfg(experiment_id="has space")
    with pytest.raises(ConfigError):
        _depth_cfg(depths=[])
    with pytest.raises(ConfigError):
        _depth_cfg(sigma_w2=[0.0])
    with pytest.raises(ConfigError):
        _depth_cfg(k=4)  # exceeds min depth
    with pytest.raises(ConfigError):
        harness.config_from_dict({"experiment_id": "x", "kind": "corr_sweep", "n": 8,
                                  "depths": [2], "seeds": 1})  # no eta array


def test_pruning_entry_validation():
    def cfg(entry):
        return harness.config_from_dict({
            "experiment_id": "p", "kind": "prune_sweep", "n": 8, "depths": [2],
            "seeds": 1, "pruning": [entry],
        })
    with pytest.raises(ConfigError):
        cfg({"method": "random"})  # missing s
    with pytest.raises(ConfigError):
        cfg({"method": "random", "s": 0.5, "t": 0.1})  # extra parameter
    with pytest.raises(ConfigError):
        cfg({"method": "magnitude_top_r", "r": 4, "retention": 0.5})
    with pytest.raises(ConfigError):
        cfg({"method": "random", "s": 0.5, "scaling": "magic"})
    c = cfg({"method": "magnitude_top_r", "retention": 0.5})
    assert c.pruning[0].r == 32  # round(0.5 * 64)


def test_load_config_toml(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(
        'experiment_id = "toml.depth"\n'
        'kind = "depth_sweep"\n'
        "n = 12\n"
        "depths = [3, 4]\n"
        "seeds = 2\n"
        "sigma_w2 = [0.5, 2.0]\n"
        "threads = 2\n"
        "[[pruning]]\n"
        'method = "random"\ns = 0.5\nscaling = "analytic"\n'
    )
    cfg = harness.load_config(p)
    assert cfg.experiment_id == "toml.depth"
    assert cfg.sigma_w2 == [0.5, 2.0]
    assert cfg.threads == 2
    assert cfg.pruning[0].scaling == "analytic"


def test_load_config_missing_file_and_bad_toml(tmp_path):
    with pytest.raises(ConfigError):
        harness.load_config(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("experiment_id = [unterminated\n")
    with pytest.raises(ConfigError):
        harness.load_config(bad)


def test_row_format_parse_roundtrip():
    rows = [
        harness.SweepRow("e", "depth_sweep", 3, 16, 20, 2.0, "none", None, "none",
                         None, None, 1, -1.2345678901234567, True),
        harness.SweepRow("e", "prune_sweep", 0, 16, 20, 2.0, "random", 0.9, "analytic",
                         1.0 / math.sqrt(0.1), None, 1, harness.NEG_INF, False),
        harness.SweepRow("e", "corr_sweep", 1, 16, 20, 2.0, "none", None, "none",
                         None, 2.0**-7, 2, 0.25, True),
    ]
    for r in rows:
        line = harness.format_row(r)
        assert harness.parse_row(line) == r
    assert "neg_inf" in harness.format_row(rows[1])
    assert harness.format_row(rows[0]).endswith(",true,0")


def test_parse_csv_rejects_wrong_header():
    with pytest.raises(ConfigError):
        harness.parse_csv("a,b,c\n1,2,3\n")


def test_rows_are_sorted_depth_then_seed():
    cfg = _depth_cfg(depths=[5, 3], sigma_w2=[4.0, 0.5])  # deliberately unsorted
    rows = harness.run_depth_sweep(cfg, master_seed=1).rows
    keys = [(r.sigma_w2, r.L, r.seed) for r in rows]
    assert keys == sorted(keys)
    assert keys[0][0] == 0.5


def test_rerun_is_byte_identical_across_thread_counts(tmp_path):
    cfg = _depth_cfg()
    bodies = []
    for threads in (1, 4):
        res = harness.run_depth_sweep(cfg, master_seed=9, threads=threads)
        bodies.append(res.csv_body)
    assert bodies[0] == bodies[1]


def test_thread_resolution_env_overrides(monkeypatch):
    cfg = _depth_cfg(threads=3)
    assert harness.resolve_threads(cfg, None) == 3
    assert harness.resolve_threads(cfg, 5) == 5
    monkeypatch.setenv("JACSPEC_THREADS", "7")
    assert harness.resolve_threads(cfg, 5) == 7
    monkeypatch.setenv("JACSPEC_THREADS", "zero")
    with pytest.raises(ConfigError):
        harness.resolve_threads(cfg, None)


def test_outputs_and_manifest(tmp_path):
    cfg = _depth_cfg()
    out = tmp_path / "depth.csv"
    res = harness.run_depth_sweep(cfg, master_seed=2, out_path=out)
    text = out.read_text()
    assert text == res.csv_body
    assert text.splitlines()[0] == harness.CSV_HEADER
    manifest = json.loads((tmp_path / "depth.csv.manifest.json").read_text())
    assert manifest["rows"] == 4
    assert manifest["kind"] == "depth_sweep"
    assert manifest["master_seed"] == 2
    import hashlib
    assert manifest["csv_sha256"] == hashlib.sha256(text.encode()).hexdigest()
    assert not os.path.exists(str(out) + ".partial")


def test_resume_from_partial_gives_identical_csv(tmp_path):
    cfg = _depth_cfg(depths=[3, 4, 5])
    out_a = tmp_path / "oneshot.csv"
    full = harness.run_depth_sweep(cfg, master_seed=5, out_path=out_a)

    out_b = tmp_path / "resumed.csv"
    partial = harness.run_depth_sweep(cfg, master_seed=5, out_path=out_b, max_tasks=2)
    assert len(partial.rows) == 2
    assert os.path.exists(str(out_b) + ".partial")
    assert not os.path.exists(out_b)
    resumed = harness.run_depth_sweep(cfg, master_seed=5, out_path=out_b)
    assert resumed.csv_body == full.csv_body
    assert not os.path.exists(str(out_b) + ".partial")


def test_partial_with_different_seed_is_discarded(tmp_path):
    cfg = _depth_cfg()
    out = tmp_path / "sweep.csv"
    harness.run_depth_sweep(cfg, master_seed=1, out_path=out, max_tasks=1)
    res = harness.run_depth_sweep(cfg, master_seed=2, out_path=out)
    fresh = harness.run_depth_sweep(cfg, master_seed=2)
    assert res.csv_body == fresh.csv_body


def test_corr_sweep_at_zero_eta_equals_critical_depth_sweep():
    dep = _depth_cfg(experiment_id="pair", sigma_w2=[2.0])
    cor = harness.config_from_dict({
        "experiment_id": "pair", "kind": "corr_sweep", "n": 16,
        "depths": [3, 5], "seeds": 2, "eta": [0.0],
    })
    a = harness.run_depth_sweep(dep, master_seed=3).rows
    b = harness.run_correlation_sweep(cor, master_seed=3).rows
    assert [r.log_jac_norm for r in a] == [r.log_jac_norm for r in b]


def test_prune_sweep_with_zero_sparsity_equals_unpruned():
    dep = _depth_cfg()
    prn = harness.config_from_dict({
        "experiment_id": "t.prune", "kind": "prune_sweep", "n": 16,
        "depths": [3, 5], "seeds": 2,
        "pruning": [{"method": "random", "s": 0.0, "scaling": "none"}],
    })
    a = harness.run_depth_sweep(dep, master_seed=4).rows
    b = harness.run_pruning_sweep(prn, master_seed=4).rows
    assert [r.log_jac_norm for r in a] == [r.log_jac_norm for r in b]
    assert all(r.scale_value == 1.0 and r.sparsity == 0.0 for r in b)


def test_prune_rows_record_mean_realized_scale():
    cfg = harness.config_from_dict({
        "experiment_id": "t.cal", "kind": "prune_sweep", "n": 24, "depths": [4],
        "seeds": 1, "pruning": [{"method": "random", "s": 0.5, "scaling": "calibrated"}],
    })
    row = harness.run_pruning_sweep(cfg, master_seed=6).rows[0]
    assert row.scaling_mode == "calibrated"
    # calibrated factors vary per layer; the row carries their mean
    assert 1.0 < row.scale_value < 2.5
    assert row.method == "random"


def test_top_r_sparsity_column_is_exact():
    cfg = harness.config_from_dict({
        "experiment_id": "t.r", "kind": "prune_sweep", "n": 8, "depths": [3], "seeds": 1,
        "pruning": [{"method": "magnitude_top_r", "r": 16, "scaling": "none"}],
    })
    row = harness.run_pruning_sweep(cfg, master_seed=7).rows[0]
    assert row.sparsity == 1.0 - 16 / 64


def test_approx_verification_blocks_and_csv(tmp_path):
    cfg = harness.config_from_dict({
        "experiment_id": "t.approx", "kind": "approx_verify", "n": 16, "depths": [6],
        "seeds": 8, "layer": 2, "replicates": 4, "members": 30, "pair_seeds": 10,
    })
    out = tmp_path / "approx.csv"
    rep = harness.run_approx_verification(cfg, master_seed=8, out_path=out)
    assert 0.0 < rep.pooled_fraction < 1.0
    assert rep.ks_stat is not None and rep.corr_t_w_t_d is not None
    lines = out.read_text().splitlines()
    assert lines[0] == harness.APPROX_CSV_HEADER
    stats = [ln.split(",")[6] for ln in lines[1:]]
    assert stats.count("d_fraction") == 8
    assert stats.count("chi2_p") == 4
    assert stats.count("t_w") == 10
    manifest = json.loads((tmp_path / "approx.csv.manifest.json").read_text())
    assert manifest["report"]["pooled_fraction"] == rep.pooled_fraction


def test_approx_verification_sub_blocks_skippable():
    cfg = harness.config_from_dict({
        "experiment_id": "t.approx2", "kind": "approx_verify", "n": 12, "depths": [5],
        "seeds": 5, "layer": 2, "replicates": 0, "members": 30, "pair_seeds": 0,
    })
    rep = harness.run_approx_verification(cfg, master_seed=9)
    assert rep.pooled_fraction is not None
    assert rep.ks_stat is None and rep.corr_t_w_t_d is None
    with pytest.raises(ConfigError):
        bad = harness.config_from_dict({
            "experiment_id": "t.approx3", "kind": "approx_verify", "n": 12, "depths": [5],
            "seeds": 0, "layer": 2, "replicates": 0, "pair_seeds": 0,
        })
        harness.run_approx_verification(bad, master_seed=0)


def test_approx_verification_layer_must_be_inside():
    cfg = harness.config_from_dict({
        "experiment_id": "t.approx4", "kind": "approx_verify", "n": 12, "depths": [5],
        "seeds": 2, "layer": 5, "replicates": 0, "pair_seeds": 0,
    })
    with pytest.raises(ConfigError):
        harness.run_approx_verification(cfg, master_seed=0)


def test_condition_check_returns_labeled_reports():
    cfg = harness.config_from_dict({
        "experiment_id": "t.cond", "kind": "condition_check", "n": 32, "depths": [1],
        "seeds": 0, "mc_samples": 40,
        "pruning": [{"method": "random", "s": 0.5, "scaling": "analytic"}],
    })
    out = harness.run_condition_check(cfg, master_seed=10)
    assert len(out) == 1
    label, rep = out[0]
    assert label == "random:s=0.5:scaling=analytic"
    assert rep.mc_samples == 40
    empty = harness.config_from_dict({
        "experiment_id": "t.cond2", "kind": "condition_check", "n": 16, "depths": [1],
        "seeds": 0, "mc_samples": 10,
    })
    assert harness.run_condition_check(empty, master_seed=0)[0][0] == "keep_all"


def test_kind_runner_mismatch_raises():
    cfg = _depth_cfg()
    with pytest.raises(ConfigError):
        harness.run_pruning_sweep(cfg, master_seed=0)
    with pytest.raises(ConfigError):
        harness.run_correlation_sweep(cfg, master_seed=0)


def test_input_from_file_is_shared_across_grid(tmp_path):
    xp = tmp_path / "x.txt"
    xp.write_text("\n".join(str(0.1 * (i + 1)) for i in range(16)) + "\n")
    cfg = _depth_cfg(input=str(xp))
    rows = harness.run_depth_sweep(cfg, master_seed=11).rows
    assert len(rows) == 4
    synth = harness.run_depth_sweep(_depth_cfg(), master_seed=11).rows
    assert [r.log_jac_norm for r in rows] != [r.log_jac_norm for r in synth]
