import numpy as np
import pytest

from evrnet import NetworkConfig, ShapeError, StreamState, evrnet_forward, init_random, initial_state, restore_sequence
from evrnet.graph import LATENT_CHANNELS, SE_REDUCTION, cu_forward, ed_module_forward, expected_entries, iter_plan
from evrnet.weights import WeightStore

from conftest import rand_nchw
from oracles import conv2d_ref, prelu_ref, se_ref, upsample2x_ref


def small_config(**kw):
    base = dict(d=8, depths=(1, 1, 1), cu_variant="single", use_se=True, upsample_factor=1)
    base.update(kw)
    return NetworkConfig(**base)


def zero_store(config):
    entries = {name: np.zeros(shape, dtype=np.float32)
               for name, shape in expected_entries(config).items()}
    return WeightStore(config=config, entries=entries)


def scaled_store(store, factor):
    """Shrink all multiplicative weights; biases/slopes untouched."""
    entries = {}
    for name, arr in store.entries.items():
        if name.rsplit(".", 1)[-1] in ("weight", "w1", "w2"):
            entries[name] = (arr * factor).astype(np.float32)
        else:
            entries[name] = arr
    return WeightStore(config=store.config, entries=entries)


# ----------------------------------------------------------- CU forward

def test_cu_zero_weights_is_passthrough(rng):
    for variant in ("single", "multi"):
        cfg = small_config(cu_variant=variant)
        store = zero_store(cfg)
        x = rand_nchw(rng, 1, 8, 6, 6)
        out = cu_forward(x, store, cfg, "alignment.cu0")
        assert np.array_equal(out, x)


def test_cu_multi_with_nulled_branches_equals_single(rng):
    cfg_s = small_config(cu_variant="single", use_se=False)
    cfg_m = small_config(cu_variant="multi", use_se=False)
    store_s = init_random(cfg_s, 3)
    store_m = zero_store(cfg_m)
    prefix = "alignment.cu0"
    for leaf in ("dw7.weight", "dw7.bias", "act.slope", "pw.weight", "pw.bias"):
        store_m.entries[f"{prefix}.{leaf}"] = store_s[f"{prefix}.{leaf}"]
    x = rand_nchw(rng, 1, 8, 6, 6)
    out_s = cu_forward(x, store_s, cfg_s, prefix)
    out_m = cu_forward(x, store_m, cfg_m, prefix)
    assert np.array_equal(out_s, out_m)


def _cu_ref(x, store, cfg, prefix):
    """Chained float64 oracle for one CU."""
    d = cfg.d
    if cfg.cu_variant == "single":
        y = conv2d_ref(x, store[f"{prefix}.dw7.weight"], store[f"{prefix}.dw7.bias"].ravel(), groups=d)
    else:
        y = sum(
            conv2d_ref(x, store[f"{prefix}.{k}.weight"], store[f"{prefix}.{k}.bias"].ravel(), groups=d)
            for k in ("dw3", "dw5", "dw7")
        )
    y = prelu_ref(y, store[f"{prefix}.act.slope"].ravel())
    if cfg.use_se:
        c, r = d, SE_REDUCTION
        y = se_ref(y, store[f"{prefix}.se.w1"].reshape(c // r, c),
                   store[f"{prefix}.se.w2"].reshape(c, c // r),
                   store[f"{prefix}.se.b1"].ravel(), store[f"{prefix}.se.b2"].ravel())
    y = conv2d_ref(y, store[f"{prefix}.pw.weight"], store[f"{prefix}.pw.bias"].ravel())
    return np.asarray(x, dtype=np.float64) + y


@pytest.mark.parametrize("variant", ["single", "multi"])
def test_cu_matches_chained_oracle(rng, variant):
    cfg = small_config(cu_variant=variant)
    store = init_random(cfg, 11)
    x = rand_nchw(rng, 1, 8, 6, 6)
    out = cu_forward(x, store, cfg, "fusion.cu0")
    ref = _cu_ref(x, store, cfg, "fusion.cu0")
    np.testing.assert_allclose(out, ref, rtol=1e-4, atol=1e-5)


def test_cu_channel_mismatch(rng):
    cfg = small_config()
    store = init_random(cfg, 0)
    with pytest.raises(ShapeError):
        cu_forward(rand_nchw(rng, 1, 4, 6, 6), store, cfg, "alignment.cu0")


# --------------------------------------------------- encoder-decoder

def _ed_ref(x, store, cfg, name, n_cu):
    d = cfg.d
    skip = prelu_ref(conv2d_ref(x, store[f"{name}.enc1.weight"], store[f"{name}.enc1.bias"].ravel()),
                     store[f"{name}.enc1.act.slope"].ravel())
    y = prelu_ref(conv2d_ref(skip, store[f"{name}.enc2.weight"], store[f"{name}.enc2.bias"].ravel(), stride=2),
                  store[f"{name}.enc2.act.slope"].ravel())
    y = prelu_ref(conv2d_ref(y, store[f"{name}.enc3.weight"], store[f"{name}.enc3.bias"].ravel()),
                  store[f"{name}.enc3.act.slope"].ravel())
    for i in range(n_cu):
        y = _cu_ref(y, store, cfg, f"{name}.cu{i}")
    up = upsample2x_ref(y)
    dh, dw = up.shape[2] - skip.shape[2], up.shape[3] - skip.shape[3]
    t, l = dh // 2, dw // 2
    up = up[:, :, t : t + skip.shape[2], l : l + skip.shape[3]]
    y = np.concatenate([up, skip], axis=1)
    return prelu_ref(conv2d_ref(y, store[f"{name}.dec.weight"], store[f"{name}.dec.bias"].ravel()),
                     store[f"{name}.dec.act.slope"].ravel())


def test_ed_shape_contract(rng):
    cfg = small_config(d=12, depths=(1, 1, 1), use_se=True)
    store = init_random(cfg, 5)
    x = rand_nchw(rng, 1, 8, 16, 16)
    out = ed_module_forward(x, store, cfg, "alignment", 1)
    assert out.shape == (1, 12, 16, 16)


def test_ed_zero_weights_zero_output(rng):
    cfg = small_config()
    store = zero_store(cfg)
    x = rand_nchw(rng, 1, 8, 8, 8)
    out = ed_module_forward(x, store, cfg, "alignment", 1)
    assert np.all(out == 0.0)


@pytest.mark.parametrize("variant", ["single", "multi"])
def test_ed_matches_chained_oracle(rng, variant):
    cfg = small_config(cu_variant=variant, depths=(2, 1, 1))
    store = init_random(cfg, 9)
    x = rand_nchw(rng, 1, 8, 8, 8)
    out = ed_module_forward(x, store, cfg, "alignment", 2)
    ref = _ed_ref(x, store, cfg, "alignment", 2)
    np.testing.assert_allclose(out, ref, rtol=1e-4, atol=1e-5)


def test_ed_handles_odd_sizes(rng):
    cfg = small_config()
    store = init_random(cfg, 2)
    for h, w in [(9, 9), (11, 17), (8, 13)]:
        x = rand_nchw(rng, 1, 8, h, w)
        assert ed_module_forward(x, store, cfg, "differential", 1).shape == (1, 8, h, w)


# ------------------------------------------------------- full network

@pytest.mark.parametrize("s", [1, 2, 4])
def test_forward_shape_contract(rng, s):
    cfg = NetworkConfig(d=16, depths=(1, 1, 1), cu_variant="single", use_se=True, upsample_factor=s)
    store = init_random(cfg, 0)
    for h, w in [(8, 8), (17, 17), (32, 24)]:
        frame = rand_nchw(rng, 1, 3, h, w, 0.0, 1.0)
        restored, latent = evrnet_forward(frame, initial_state(frame), store, cfg)
        assert restored.shape == (1, 3, s * h, s * w)
        assert latent.shape == (1, LATENT_CHANNELS, h, w)


def test_forward_s4_32px(rng):
    cfg = NetworkConfig(d=16, depths=(1, 1, 1), cu_variant="single", use_se=False, upsample_factor=4)
    store = init_random(cfg, 1)
    frame = rand_nchw(rng, 1, 3, 32, 32, 0.0, 1.0)
    restored, _ = evrnet_forward(frame, initial_state(frame), store, cfg)
    assert restored.shape == (1, 3, 128, 128)


def test_forward_bit_identical_across_runs(rng):
    cfg = small_config(cu_variant="multi")
    store = init_random(cfg, 42)
    frame = rand_nchw(rng, 1, 3, 16, 16, 0.0, 1.0)
    state = initial_state(frame)
    first_restored, first_latent = evrnet_forward(frame, state, store, cfg)
    for _ in range(9):
        restored, latent = evrnet_forward(frame, state, store, cfg)
        assert np.array_equal(restored, first_restored)
        assert np.array_equal(latent, first_latent)


def test_forward_state_mismatch(rng):
    cfg = small_config()
    store = init_random(cfg, 0)
    frame = rand_nchw(rng, 1, 3, 16, 16, 0.0, 1.0)
    other = initial_state(rand_nchw(rng, 1, 3, 8, 8, 0.0, 1.0))
    with pytest.raises(ShapeError):
        evrnet_forward(frame, other, store, cfg)


# -------------------------------------------------------- sequences

def test_sequence_single_frame_uses_zero_latent(rng):
    cfg = small_config()
    store = init_random(cfg, 0)
    frame = rand_nchw(rng, 1, 3, 16, 16, 0.0, 1.0)
    outs = restore_sequence([frame], store, cfg)
    assert len(outs) == 1
    state = StreamState(prev_frame=frame,
                        prev_latent=np.zeros((1, 2, 16, 16), np.float32))
    manual, _ = evrnet_forward(frame, state, store, cfg)
    assert np.array_equal(outs[0], manual)


def test_sequence_repeated_frame_reaches_fixed_point(rng):
    # contracting regime: shrunken weights make the latent influence vanish
    # below float32 resolution after the first state update
    cfg = small_config()
    store = scaled_store(init_random(cfg, 0), 0.05)
    frame = np.full((1, 3, 16, 16), 0.4, dtype=np.float32)
    outs = restore_sequence([frame] * 3, store, cfg)
    assert np.array_equal(outs[1], outs[2])


def test_sequence_latent_converges_in_contracting_regime(rng):
    cfg = small_config()
    store = scaled_store(init_random(cfg, 0), 0.05)
    frame = np.full((1, 3, 16, 16), 0.6, dtype=np.float32)
    state = initial_state(frame)
    latents = []
    for _ in range(4):
        _, latent = evrnet_forward(frame, state, store, cfg)
        state = StreamState(prev_frame=frame, prev_latent=latent)
        latents.append(latent)
    assert np.array_equal(latents[2], latents[3])  # fixed by frame 3


def test_sequence_causality_probe(rng):
    cfg = small_config(cu_variant="multi")
    store = init_random(cfg, 0)
    frames = [rand_nchw(rng, 1, 3, 16, 16, 0.0, 1.0) for _ in range(8)]
    base = restore_sequence(frames, store, cfg)
    for k in (0, 3, 6):
        perturbed = [f.copy() for f in frames]
        perturbed[k] = np.clip(perturbed[k] + 0.2, 0.0, 1.0).astype(np.float32)
        outs = restore_sequence(perturbed, store, cfg)
        for i in range(k):
            assert np.array_equal(outs[i], base[i]), f"output {i} changed before frame {k}"
        for i in range(k, 8):
            assert not np.array_equal(outs[i], base[i]), f"output {i} unaffected by frame {k}"


def test_sequence_empty_and_drift_errors(rng):
    cfg = small_config()
    store = init_random(cfg, 0)
    with pytest.raises(ValueError, match="empty"):
        restore_sequence([], store, cfg)
    frames = [rand_nchw(rng, 1, 3, 16, 16, 0.0, 1.0),
              rand_nchw(rng, 1, 3, 16, 18, 0.0, 1.0)]
    with pytest.raises(ShapeError, match="frame 1"):
        restore_sequence(frames, store, cfg)


# ------------------------------------------------------- plan sanity

def test_plan_enumeration_order():
    cfg = small_config(depths=(2, 1, 1))
    names = [e.name for e in iter_plan(cfg)]
    modules = []
    for n in names:
        top = n.split(".", 1)[0]
        if top not in modules:
            modules.append(top)
    assert modules == ["alignment", "projection", "differential", "fusion", "head"]
    a_names = [n for n in names if n.startswith("alignment")]
    assert a_names.index("alignment.enc1") < a_names.index("alignment.cu0.dw7")
    assert a_names.index("alignment.cu1.pw") < a_names.index("alignment.dec")


def test_config_validation():
    with pytest.raises(ValueError):
        NetworkConfig(depths=(0, 1, 1))
    with pytest.raises(ValueError):
        NetworkConfig(cu_variant="triple")
    with pytest.raises(ValueError):
        NetworkConfig(upsample_factor=3)
    with pytest.raises(ValueError):
        NetworkConfig(d=6, upsample_factor=2, use_se=False)  # d not divisible by s^2
    with pytest.raises(ValueError):
        NetworkConfig(d=10)  # SE reduction divisibility
