import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from evrnet import GaussianNoise, MixedNoise, NetworkConfig, SaltPepperNoise, VideoRestorer
from evrnet import add_awgn, init_random, restore_sequence
from evrnet.estimators import BlockCompression

from conftest import rand_nchw


def frames(rng, t=3, h=16, w=16):
    return rand_nchw(rng, t, 3, h, w, 0.0, 1.0)


def test_restorer_get_set_params_round_trip():
    est = VideoRestorer(d=8, depths=(1, 1, 1), cu_variant="single", use_se=True, seed=3)
    params = est.get_params()
    assert params["d"] == 8 and params["seed"] == 3
    cloned = clone(est)
    assert cloned.get_params() == params
    cloned.set_params(seed=5)
    assert cloned.seed == 5


def test_restorer_transform_matches_library(rng):
    X = frames(rng)
    est = VideoRestorer(d=8, depths=(1, 1, 1), cu_variant="single", use_se=True, seed=0).fit()
    out = est.transform(X)
    cfg = NetworkConfig(d=8, depths=(1, 1, 1), cu_variant="single", use_se=True)
    store = init_random(cfg, 0)
    expected = restore_sequence([X[i][None] for i in range(len(X))], store, cfg)
    assert np.array_equal(out, np.concatenate(expected, axis=0))
    assert np.array_equal(est.predict(X), out)


def test_restorer_defaults_to_flagship_config():
    est = VideoRestorer(seed=0).fit()
    assert est.config_ == NetworkConfig()


def test_restorer_config_conflict_with_weights(tmp_path, rng):
    from evrnet import save_weights

    cfg = NetworkConfig(d=8, depths=(1, 1, 1), cu_variant="single", use_se=True)
    path = tmp_path / "w.evrw"
    save_weights(init_random(cfg, 0), path)
    est = VideoRestorer(weights=str(path)).fit()
    assert est.config_ == cfg
    with pytest.raises(ValueError, match="conflict"):
        VideoRestorer(weights=str(path), d=16).fit()


def test_gaussian_noise_transformer_matches_function(rng):
    X = frames(rng, t=2)
    noisy = GaussianNoise(variance=0.01, seed=4).fit_transform(X)
    f0 = add_awgn(X[:1], 0.01, seed=4, frame_offset=0)
    f1 = add_awgn(X[1:], 0.01, seed=4, frame_offset=1)
    assert np.array_equal(noisy, np.concatenate([f0, f1], axis=0))


def test_transformers_are_deterministic(rng):
    X = frames(rng, t=2)
    for est in (GaussianNoise(0.01, seed=1), SaltPepperNoise(0.1, seed=1),
                MixedNoise(0.001, 0.1, seed=1), BlockCompression(quality=30)):
        a = est.fit_transform(X)
        b = clone(est).fit_transform(X)
        assert np.array_equal(a, b)


def test_pipeline_composition(rng):
    X = frames(rng, t=2)
    pipe = Pipeline([
        ("compress", BlockCompression(quality=40)),
        ("noise", GaussianNoise(variance=0.001, seed=9)),
    ])
    out = pipe.fit_transform(X)
    assert out.shape == X.shape
    assert not np.array_equal(out, X)
