import numpy as np
import pytest

from hamflow.errors import ConfigError, NumericalError
from hamflow.pipeline import dataset_preset, generate_dataset, load_dataset, split_records
from hamflow.pipeline.dataset import DatasetConfig


def tiny(kind="RABI_X", n_train=6, n_val=2, n_test=2, seed=11, **over):
    return dataset_preset(kind, n_train, n_val, n_test, seed=seed, **over)


def test_preset_rejects_unknown_kind():
    with pytest.raises(ConfigError):
        dataset_preset("HEISENBERG", 1, 1, 1, seed=0)


def test_preset_rejects_unknown_override():
    with pytest.raises(TypeError):
        dataset_preset("RABI_X", 1, 1, 1, seed=0, horizon=3.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        tiny(n_train=-1)
    with pytest.raises(ConfigError):
        tiny(kind="TFIM_RING", n_qubits=2)  # ring needs >= 3 sites
    with pytest.raises(ConfigError):
        tiny(full_horizon=1.0, train_horizon=2.0)  # full grid must contain train grid


def test_empty_dataset_has_valid_hash(tmp_path):
    manifest = generate_dataset(tiny(n_train=0, n_val=0, n_test=0), tmp_path / "d")
    assert manifest["n_records"] == 0
    assert len(manifest["content_hash"]) == 64
    loaded, records = load_dataset(tmp_path / "d")
    assert records == []
    assert loaded["content_hash"] == manifest["content_hash"]


def test_same_seed_same_hash_different_seed_differs(tmp_path):
    a = generate_dataset(tiny(seed=3), tmp_path / "a")
    b = generate_dataset(tiny(seed=3), tmp_path / "b")
    c = generate_dataset(tiny(seed=4), tmp_path / "c")
    assert a["content_hash"] == b["content_hash"]
    assert a["content_hash"] != c["content_hash"]


def test_splits_disjoint_and_cover_everything(tmp_path):
    manifest = generate_dataset(tiny(), tmp_path / "d")
    _, records = load_dataset(tmp_path / "d")
    spans = manifest["splits"]
    seen = []
    for name in ("train", "val", "test"):
        lo, hi = spans[name]
        seen.extend(range(lo, hi))
        for rec in split_records(manifest, records, name):
            assert rec["split"] == name
    assert seen == [rec["index"] for rec in records]


def test_test_split_uses_full_grid(tmp_path):
    config = tiny(kind="TFIM_RING", n_qubits=3, n_train=2, n_val=1, n_test=1)
    manifest = generate_dataset(config, tmp_path / "d")
    _, records = load_dataset(tmp_path / "d")
    n_train_pts = len(manifest["times_train"])
    n_full_pts = len(manifest["times_full"])
    assert n_full_pts > n_train_pts
    for rec in records:
        expected = n_full_pts if rec["split"] == "test" else n_train_pts
        assert len(rec["observables"]) == expected
        assert len(rec["field"]["B"]) == expected


def test_record_observable_names_match_default_set(tmp_path):
    manifest = generate_dataset(tiny(kind="TFIM_RING", n_qubits=3, n_train=1, n_val=0, n_test=0), tmp_path / "d")
    # 3 + 9*floor(N/2) strings for the ring set
    assert len(manifest["observable_names"]) == 12
    assert manifest["observable_names"][:3] == ["X0", "Y0", "Z0"]


def test_load_detects_tampering(tmp_path):
    generate_dataset(tiny(), tmp_path / "d")
    path = tmp_path / "d" / "records.jsonl"
    path.write_text(path.read_text().replace("0.", "1.", 1))
    with pytest.raises(ConfigError):
        load_dataset(tmp_path / "d")
    load_dataset(tmp_path / "d", verify=False)  # opt-out still reads


def test_noise_flag_switches_propagator(tmp_path):
    clean = generate_dataset(tiny(kind="TFIM_RING", n_qubits=3, n_train=2, n_val=0, n_test=0), tmp_path / "c")
    noisy = generate_dataset(
        tiny(kind="TFIM_RING", n_qubits=3, n_train=2, n_val=0, n_test=0, noise=True, gamma=0.05),
        tmp_path / "n",
    )
    assert clean["content_hash"] != noisy["content_hash"]
    _, recs_c = load_dataset(tmp_path / "c")
    _, recs_n = load_dataset(tmp_path / "n")
    # identical draws, damped propagation: same fields, different observables
    assert recs_c[0]["field"] == recs_n[0]["field"]
    assert recs_c[0]["init_bloch"] == recs_n[0]["init_bloch"]
    assert not np.allclose(recs_c[0]["observables"], recs_n[0]["observables"])


def test_rejected_record_is_regenerated_with_fresh_subseed(tmp_path, monkeypatch):
    import hamflow.pipeline.dataset as ds

    real = ds._simulate_single
    calls = {"n": 0}

    def flaky(config, blochs, fields, grid, obs):
        calls["n"] += 1
        if calls["n"] == 1:
            raise NumericalError("synthetic tolerance failure")
        return real(config, blochs, fields, grid, obs)

    monkeypatch.setattr(ds, "_simulate_batch", lambda *a, **k: (_ for _ in ()).throw(NumericalError("batch down")))
    monkeypatch.setattr(ds, "_simulate_single", flaky)
    manifest = generate_dataset(tiny(n_train=2, n_val=0, n_test=0), tmp_path / "d")
    _, records = load_dataset(tmp_path / "d")
    assert records[0]["retries"] == 1
    assert records[1]["retries"] == 0
    events = manifest["retries"]
    assert any(e["retry"] == 1 and e["index"] == 0 for e in events)
    # fresh sub-seed means the retried record drew a different field
    clean = generate_dataset(tiny(n_train=2, n_val=0, n_test=0), tmp_path / "clean")
    assert manifest["content_hash"] != clean["content_hash"]


def test_generation_exhausts_retries(tmp_path, monkeypatch):
    import hamflow.pipeline.dataset as ds

    def always_fail(*a, **k):
        raise NumericalError("synthetic failure")

    monkeypatch.setattr(ds, "_simulate_batch", always_fail)
    monkeypatch.setattr(ds, "_simulate_single", always_fail)
    with pytest.raises(NumericalError):
        generate_dataset(tiny(n_train=1, n_val=0, n_test=0), tmp_path / "d")


def test_nmr_preset_shape(tmp_path):
    manifest = generate_dataset(tiny(kind="NMR_ZZ", n_train=2, n_val=0, n_test=1), tmp_path / "d")
    assert manifest["moment_width"] == 6
    assert len(manifest["observable_names"]) == 15
    assert len(manifest["times_full"]) == 250
    assert len(manifest["times_train"]) == 101


def test_sc_preset_has_two_drives(tmp_path):
    manifest = generate_dataset(tiny(kind="SC_SWAP_DETUNED", n_train=2, n_val=0, n_test=0), tmp_path / "d")
    assert manifest["drive_names"] == ["delta1", "delta2"]
    assert len(manifest["times_train"]) == 11
    _, records = load_dataset(tmp_path / "d")
    assert records[0]["init_bloch"] == [[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]]


def test_paired_noise_study_draws_identical_inputs(tmp_path):
    """Same seed, noise flag flipped: record k must carry the same field and state."""
    shared = dict(kind="TFIM_RING", n_qubits=3, n_train=3, n_val=0, n_test=0, seed=8)
    generate_dataset(tiny(**shared), tmp_path / "c")
    generate_dataset(tiny(**shared, noise=True, gamma=0.01), tmp_path / "n")
    _, recs_c = load_dataset(tmp_path / "c")
    _, recs_n = load_dataset(tmp_path / "n")
    for rc, rn in zip(recs_c, recs_n):
        assert rc["field"] == rn["field"]
        assert rc["init_bloch"] == rn["init_bloch"]


def test_frozen_config_is_hashable_and_immutable():
    config = tiny()
    assert isinstance(hash(config), int)
    with pytest.raises(Exception):
        config.seed = 99
    assert isinstance(config, DatasetConfig)
