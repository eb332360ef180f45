import numpy as np
import pytest

from evrnet import DegradeSpec, add_awgn, add_mixed, add_salt_pepper, block_compress, psnr
from evrnet.degrade import apply_spec, counter_uniform, quant_step


def constant_image(value=0.5, size=256):
    return np.full((1, 3, size, size), value, dtype=np.float32)


def natural_image(size=128):
    """Deterministic synthetic test image: gradients, edges, and texture."""
    y, x = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = 0.4 + 0.3 * np.sin(7 * np.pi * x) * np.cos(5 * np.pi * y) + 0.2 * x
    img[size // 4 : size // 2, size // 4 : size // 2] = 0.9
    img[size // 2 : 3 * size // 4, size // 3 : size // 2] = 0.1
    img += 0.05 * np.sin(37.0 * x * y * size)
    rgb = np.stack([img, np.roll(img, 5, axis=0), np.roll(img, 9, axis=1)])
    return np.clip(rgb, 0.0, 1.0).astype(np.float32)[None]


# ------------------------------------------------------------- RNG core

def test_counter_uniform_range_and_determinism():
    idx = np.arange(10_000, dtype=np.uint64)
    u = counter_uniform(42, 1, 0, idx, 0)
    assert np.all((u > 0) & (u < 1))
    assert np.array_equal(u, counter_uniform(42, 1, 0, idx, 0))
    assert not np.array_equal(u, counter_uniform(43, 1, 0, idx, 0))
    assert not np.array_equal(u, counter_uniform(42, 2, 0, idx, 0))
    assert not np.array_equal(u, counter_uniform(42, 1, 1, idx, 0))
    assert abs(float(u.mean()) - 0.5) < 0.01


def test_counter_uniform_known_values():
    # frozen reference draws pin the generator definition for other implementations
    u = counter_uniform(0, 1, 0, np.arange(4, dtype=np.uint64), 0)
    expected = [0.45748982240911573, 0.5285312329651788, 0.25809949438553303, 0.3162141760112718]
    np.testing.assert_allclose(u, expected, rtol=0, atol=1e-15)


# ---------------------------------------------------------------- AWGN

def test_awgn_zero_variance_is_identity():
    x = constant_image(0.3, 32)
    assert np.array_equal(add_awgn(x, 0.0, seed=1), x)


def test_awgn_seed_determinism():
    x = constant_image(0.5, 64)
    a = add_awgn(x, 0.01, seed=9)
    b = add_awgn(x, 0.01, seed=9)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, add_awgn(x, 0.01, seed=10))


def test_awgn_sample_variance():
    x = constant_image(0.5, 256)
    out = add_awgn(x, 0.01, seed=3)
    sample_var = float(np.var(out.astype(np.float64) - 0.5))
    assert abs(sample_var - 0.01) / 0.01 < 0.05


def test_awgn_stays_in_range_and_rejects_negative_var():
    x = constant_image(0.95, 64)
    out = add_awgn(x, 0.1, seed=0)
    assert out.min() >= 0.0 and out.max() <= 1.0
    with pytest.raises(ValueError):
        add_awgn(x, -0.1, seed=0)


def test_awgn_frame_offset_decouples_frames():
    x = constant_image(0.5, 32)
    batch = np.concatenate([x, x], axis=0)
    joint = add_awgn(batch, 0.01, seed=5)
    f0 = add_awgn(x, 0.01, seed=5, frame_offset=0)
    f1 = add_awgn(x, 0.01, seed=5, frame_offset=1)
    assert np.array_equal(joint[:1], f0)
    assert np.array_equal(joint[1:], f1)
    assert not np.array_equal(f0, f1)


# ------------------------------------------------------------------ S&P

def test_snp_zero_density_identity():
    x = constant_image(0.4, 32)
    assert np.array_equal(add_salt_pepper(x, 0.0, seed=0), x)


def test_snp_full_density_saturates():
    x = constant_image(0.4, 32)
    out = add_salt_pepper(x, 1.0, seed=0)
    assert np.all((out == 0.0) | (out == 1.0))


def test_snp_replaced_fraction():
    x = constant_image(0.5, 256)
    out = add_salt_pepper(x, 0.1, seed=7)
    changed = np.any(out != x, axis=1)  # per-pixel
    frac = float(changed.mean())
    assert abs(frac - 0.1) <= 0.01


def test_snp_joint_across_channels():
    x = constant_image(0.5, 64)
    out = add_salt_pepper(x, 0.2, seed=1)
    changed = out != x
    # a hit pixel changes in all three channels to the same value
    hit = changed.any(axis=1)
    assert np.array_equal(changed[0, 0], hit[0])
    assert np.array_equal(changed[0, 1], hit[0])
    vals = out[0, :, hit[0]]
    assert np.all((vals == 0.0) | (vals == 1.0))
    assert np.all(vals == vals[:, :1])


def test_snp_density_validation():
    with pytest.raises(ValueError):
        add_salt_pepper(constant_image(0.5, 16), 1.5, seed=0)


# ---------------------------------------------------------------- mixed

def test_mixed_degenerate_compositions():
    x = natural_image(64)
    assert np.array_equal(add_mixed(x, 0.0, 0.0, seed=2), x)
    assert np.array_equal(add_mixed(x, 0.0, 0.1, seed=2), add_salt_pepper(x, 0.1, seed=2))


def test_mixed_paper_evaluation_recipe():
    # sigma^2 = 0.001 with rho = 0.1, reproducible from spec fields
    spec = DegradeSpec(awgn_var=0.001, snp_density=0.1, seed=11)
    x = natural_image(64)
    out1 = apply_spec(x, spec)
    out2 = add_mixed(x, 0.001, 0.1, seed=11)
    assert np.array_equal(out1, out2)
    assert out1.min() >= 0.0 and out1.max() <= 1.0


def test_degrade_spec_validation():
    with pytest.raises(ValueError):
        DegradeSpec(awgn_var=-1.0)
    with pytest.raises(ValueError):
        DegradeSpec(snp_density=2.0)
    with pytest.raises(ValueError):
        DegradeSpec(quality=0)


# ---------------------------------------------------------- compression

def test_compress_q100_near_lossless():
    x = natural_image(64)
    out = block_compress(x, 100)
    # 64 coefficients each move at most step/2; orthonormal inverse bounds
    # the spatial error by the coefficient-error l2 norm = 8 * step/2
    bound = 4.0 * quant_step(100)
    assert float(np.abs(out.astype(np.float64) - x).max()) <= bound + 1e-7


def test_compress_constant_stays_constant():
    # only the DC coefficient is nonzero, so the block reconstructs flat;
    # its value may move by the quantized DC error (<= step/16 per pixel)
    for q in (10, 55, 100):
        x = constant_image(0.5, 40)
        out = block_compress(x, q)
        assert float(np.ptp(out)) == 0.0
        assert abs(float(out[0, 0, 0, 0]) - 0.5) <= quant_step(q) / 16.0 + 1e-6


def test_compress_psnr_monotone_in_quality():
    x = natural_image(128)
    values = [psnr(block_compress(x, q), x) for q in (15, 30, 45, 60, 75, 90)]
    assert all(b >= a for a, b in zip(values, values[1:])), values
    assert values[0] < values[-1]


def test_compress_padding_path_for_odd_sizes():
    x = natural_image(64)[:, :, :61, :53]
    out = block_compress(x, 40)
    assert out.shape == x.shape
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_compress_quality_validation():
    with pytest.raises(ValueError):
        block_compress(constant_image(0.5, 16), 0)
    with pytest.raises(ValueError):
        block_compress(constant_image(0.5, 16), 101)


# ------------------------------------------------------------ generics

def test_degradations_require_unit_range():
    bad = np.full((1, 3, 16, 16), 1.5, dtype=np.float32)
    for fn in (lambda: add_awgn(bad, 0.01, 0), lambda: add_salt_pepper(bad, 0.1, 0),
               lambda: block_compress(bad, 50)):
        with pytest.raises(ValueError):
            fn()


def test_frame_order_commutes():
    # degrading a sequence frame-by-frame equals degrading each frame alone
    frames = [natural_image(32), np.flip(natural_image(32), axis=3).copy()]
    spec = DegradeSpec(awgn_var=0.005, snp_density=0.05, quality=40, seed=6)
    seq = [apply_spec(f, spec, frame_offset=i) for i, f in enumerate(frames)]
    solo = [apply_spec(frames[i], spec, frame_offset=i) for i in (0, 1)]
    for a, b in zip(seq, solo):
        assert np.array_equal(a, b)
