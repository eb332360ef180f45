import hashlib

import numpy as np
import pytest

from evrnet import NetworkConfig, evrnet_forward, init_random, initial_state, load_weights, save_weights
from evrnet.graph import expected_entries
from evrnet.weights import WeightStore

from conftest import rand_nchw


CFG = NetworkConfig(d=8, depths=(1, 1, 1), cu_variant="single", use_se=True, upsample_factor=1)


def test_save_load_round_trip(tmp_path):
    store = init_random(CFG, 7)
    path = tmp_path / "w.evrw"
    save_weights(store, path)
    loaded = load_weights(path, expected=CFG)
    assert loaded.equals(store)


def test_two_saves_identical_checksums(tmp_path):
    store = init_random(CFG, 7)
    p1, p2 = tmp_path / "a.evrw", tmp_path / "b.evrw"
    save_weights(store, p1)
    save_weights(store, p2)
    h1 = hashlib.sha256(p1.read_bytes()).hexdigest()
    h2 = hashlib.sha256(p2.read_bytes()).hexdigest()
    assert h1 == h2


def test_empty_store_errors(tmp_path):
    empty = WeightStore(config=CFG, entries={})
    with pytest.raises(ValueError, match="no entries"):
        save_weights(empty, tmp_path / "e.evrw")


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.evrw"
    p.write_bytes(b"WHAT" + bytes(64))
    with pytest.raises(ValueError, match="magic"):
        load_weights(p)


def test_renamed_entry_is_named_in_error(tmp_path):
    store = init_random(CFG, 0)
    arr = store.entries.pop("projection.bias")
    store.entries["projection.extra"] = arr
    with pytest.raises(ValueError, match="projection"):
        store.validate()


def test_shape_mismatch_names_entry():
    store = init_random(CFG, 0)
    store.entries["head.latent.weight"] = np.zeros((2, 8, 3, 3), dtype=np.float32)
    with pytest.raises(ValueError, match="head.latent.weight"):
        store.validate()


def test_truncated_file(tmp_path):
    store = init_random(CFG, 0)
    p = tmp_path / "t.evrw"
    save_weights(store, p)
    p.write_bytes(p.read_bytes()[:-100])
    with pytest.raises(ValueError, match="truncated|match"):
        load_weights(p)


def test_config_mismatch_rejected(tmp_path):
    store = init_random(CFG, 0)
    p = tmp_path / "c.evrw"
    save_weights(store, p)
    other = NetworkConfig(d=8, depths=(1, 1, 1), cu_variant="multi", use_se=True)
    with pytest.raises(ValueError, match="config"):
        load_weights(p, expected=other)


def test_init_deterministic():
    assert init_random(CFG, 123).equals(init_random(CFG, 123))


def test_init_seed_sensitivity():
    a, b = init_random(CFG, 1), init_random(CFG, 2)
    assert not a.equals(b)
    assert any(not np.array_equal(a[n], b[n]) for n in a.entries)


def test_init_conventions():
    store = init_random(CFG, 5)
    assert np.all(store["projection.bias"] == 0.0)
    assert np.all(store["alignment.enc1.act.slope"] == 0.25)
    w = store["alignment.enc1.weight"]
    fan_in = 8 * 5 * 5
    bound = np.sqrt(6.0 / fan_in)
    assert np.abs(w).max() <= bound and w.mean() == pytest.approx(0.0, abs=bound / 10)


def test_init_smoke_forward(rng):
    cfg = NetworkConfig(d=8, depths=(1, 1, 1), cu_variant="single", use_se=True)
    store = init_random(cfg, 0)
    frame = rand_nchw(rng, 1, 3, 16, 16, 0.0, 1.0)
    restored, latent = evrnet_forward(frame, initial_state(frame), store, cfg)
    assert np.all(np.isfinite(restored)) and np.all(np.isfinite(latent))


def test_entry_enumeration_matches_plan():
    store = init_random(CFG, 0)
    assert list(store.entries) == list(expected_entries(CFG))
