import mpmath
import numpy as np
import pytest
import pywt

from vmdforecast.autodiff import Tensor
from vmdforecast.forecasters import DB4_HIGH, DB4_LOW, MwdnCascade, MwdnConfig, MwdnLevel, filter_matrix, mwdn_layer


def daubechies_lowpass(N=4):
    """Minimum-phase Daubechies low-pass by spectral factorisation (high precision)."""
    mpmath.mp.dps = 50
    # P(y) = sum_k C(N-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z) / 4.
    coeffs = [mpmath.binomial(N - 1 + k, k) for k in range(N)]
    y_roots = mpmath.polyroots(coeffs[::-1], maxsteps=200, extraprec=200)
    z_roots = []
    for y in y_roots:
        # z^2 - (2 - 4y) z + 1 = 0; keep the root inside the unit circle.
        b = 2 - 4 * y
        disc = mpmath.sqrt(b * b - 4)
        z1, z2 = (b + disc) / 2, (b - disc) / 2
        z_roots.append(z1 if abs(z1) < 1 else z2)
    poly = [mpmath.mpf(1)]
    for _ in range(N):
        poly = [a + b for a, b in zip(poly + [0], [0] + poly)]  # times (1 + z)
    for r in z_roots:
        poly = [a - r * b for a, b in zip(poly + [0], [0] + poly)]  # times (z - r)
    h = [mpmath.re(c) for c in poly]
    s = sum(h)
    return np.array([float(c * mpmath.sqrt(2) / s) for c in h])


def test_db4_matches_spectral_factorisation():
    h = daubechies_lowpass(4)
    # The factorisation yields either ordering depending on convention.
    err = min(np.max(np.abs(h - DB4_LOW)), np.max(np.abs(h[::-1] - DB4_LOW)))
    assert err < 1e-15


def test_db4_matches_pywavelets():
    w = pywt.Wavelet("db4")
    np.testing.assert_allclose(DB4_LOW, w.rec_lo, atol=1e-15)
    np.testing.assert_allclose(DB4_HIGH, w.rec_hi, atol=1e-15)


def test_filter_properties():
    assert abs(DB4_LOW.sum() - np.sqrt(2)) < 1e-14
    assert abs(DB4_HIGH.sum()) < 1e-14
    assert abs(DB4_LOW @ DB4_LOW - 1) < 1e-14
    assert abs(DB4_LOW @ DB4_HIGH) < 1e-14


def _linear_cascade(levels=4, length=48, noise=0.0):
    cfg = MwdnConfig(levels=levels, noise_scale=noise, test_linear_mode=True)
    return MwdnCascade(length, cfg, np.random.default_rng(0))


def test_impulse_reproduces_filter_taps():
    level = _linear_cascade(1).levels[0]
    for pos in (0, 10, 30):
        x = np.zeros((1, 48))
        x[0, pos + 7] = 1.0
        low, high = level.pre_activations(Tensor(x))
        # Row ``pos`` sees the impulse at tap 7; rows pos..pos+7 see every tap once.
        np.testing.assert_allclose(low.data[0, pos:pos + 8], DB4_LOW[::-1], atol=1e-15)
        np.testing.assert_allclose(high.data[0, pos:pos + 8], DB4_HIGH[::-1], atol=1e-15)


def test_constant_input():
    level = _linear_cascade(1).levels[0]
    low, high = level.pre_activations(Tensor(np.full((1, 48), 3.0)))
    interior = slice(0, 48 - 7)  # rows untouched by right-edge truncation
    np.testing.assert_allclose(high.data[0, interior], 0.0, atol=1e-13)
    np.testing.assert_allclose(low.data[0, interior], 3.0 * DB4_LOW.sum(), atol=1e-13)


def test_layer_halves_length_and_rejects_odd():
    level = MwdnLevel(48, MwdnConfig(), np.random.default_rng(0))
    a, d = mwdn_layer(Tensor(np.ones((2, 48))), level)
    assert a.shape == d.shape == (2, 24)
    odd = MwdnLevel(47, MwdnConfig(), np.random.default_rng(0))
    with pytest.raises(ValueError):
        mwdn_layer(Tensor(np.ones((2, 47))), odd)


def classical_filter_bank(x, levels):
    """Zero-extended analysis filtering with pairwise averaging between levels."""
    out = []
    e = x
    for _ in range(levels):
        n = len(e)
        ext = np.r_[e, np.zeros(len(DB4_LOW) - 1)]
        low = np.array([sum(DB4_LOW[k] * ext[i + k] for k in range(8)) for i in range(n)])
        high = np.array([sum(DB4_HIGH[k] * ext[i + k] for k in range(8)) for i in range(n)])
        out.append((low, high))
        if n % 2:
            low = np.r_[low, 0.0]
        e = low.reshape(-1, 2).mean(axis=1)
    return out


@pytest.mark.parametrize("levels", [1, 2, 3, 4])
def test_cascade_equals_filter_bank(levels):
    x = np.random.default_rng(levels).normal(size=(3, 48))
    casc = _linear_cascade(levels)
    got = casc.pre_pool_outputs(Tensor(x))
    for b in range(3):
        want = classical_filter_bank(x[b], levels)
        for (gl, gh), (wl, wh) in zip(got, want):
            np.testing.assert_allclose(gl[b], wl, atol=1e-9)
            np.testing.assert_allclose(gh[b], wh, atol=1e-9)


def test_five_levels_pads_odd_lengths():
    cfg = MwdnConfig(levels=5)
    assert cfg.level_lengths(48) == [(48, 24), (24, 12), (12, 6), (6, 3), (4, 2)]
    casc = MwdnCascade(48, cfg, np.random.default_rng(0))
    time = np.random.default_rng(1).integers(0, 24, (2, 2, 48)).astype(float)
    seqs, times = casc(Tensor(np.random.default_rng(2).normal(size=(2, 48))), time)
    assert [s.shape[1] for s in seqs] == [24, 12, 6, 3, 2, 2]
    assert [t.shape[2] for t in times] == [24, 12, 6, 3, 2, 2]


def test_time_channels_average_pooled():
    casc = MwdnCascade(48, MwdnConfig(levels=2), np.random.default_rng(0))
    time = np.arange(48.0)[None, None, :].repeat(2, axis=1)
    _, times = casc(Tensor(np.zeros((1, 48))), time)
    np.testing.assert_allclose(times[0][0, 0], np.arange(48.0).reshape(24, 2).mean(axis=1))
    np.testing.assert_allclose(times[1][0, 0], np.arange(48.0).reshape(12, 4).mean(axis=1))


def test_noise_init_bounded():
    cfg = MwdnConfig(noise_scale=0.5)
    level = MwdnLevel(16, cfg, np.random.default_rng(0))
    scale = 0.5 * np.mean(np.abs(np.r_[DB4_LOW, DB4_HIGH]))
    diff = level.W_low.data - filter_matrix(DB4_LOW, 16)
    assert np.all(np.abs(diff) <= scale) and np.any(diff != 0)


def test_table_pooling_variant_preserves_length():
    cfg = MwdnConfig.table_pooling(levels=3)
    assert cfg.level_lengths(48) == [(48, 48)] * 3
    casc = MwdnCascade(48, cfg, np.random.default_rng(0))
    seqs, _ = casc(Tensor(np.ones((1, 48))))
    assert all(s.shape == (1, 48) for s in seqs)


def test_sigmoid_mode_applies_activation():
    cfg = MwdnConfig(levels=1, noise_scale=0.0)
    level = MwdnLevel(8, cfg, np.random.default_rng(0))
    x = np.random.default_rng(1).normal(size=(1, 8))
    a, _ = level(Tensor(x))
    pre = filter_matrix(DB4_LOW, 8) @ x[0]
    np.testing.assert_allclose(a.data[0], (1 / (1 + np.exp(-pre))).reshape(4, 2).mean(axis=1), atol=1e-14)
