import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from analogfft import fixtures, sigproc
from analogfft.device import HardwareModel
from analogfft.engine import ideal_config
from analogfft.errors import AnalogFFTError, InvalidSizeError
from analogfft.plan import Leaf, Split, plan_factorization


@settings(max_examples=300)
@given(length=st.integers(2, 5000), window=st.integers(2, 512), hop=st.integers(1, 300))
def test_spectrogram_column_count(length, window, hop):
    if length < window:
        with pytest.raises(InvalidSizeError):
            sigproc.frame_signal(np.zeros(length), window, hop)
        return
    frames = sigproc.frame_signal(np.zeros(length), window, hop)
    assert frames.shape == ((length - window) // hop + 1, window)
    assert frames.shape[0] == sigproc.frame_count(length, window, hop)


def test_frame_signal_pad():
    frames = sigproc.frame_signal(np.arange(10.0), 4, 3, pad=True)
    assert frames.shape == (3, 4)
    assert frames[-1].tolist() == [6, 7, 8, 9]
    frames = sigproc.frame_signal(np.arange(11.0), 4, 3, pad=True)
    assert frames[-1].tolist() == [9, 10, 0, 0]
    assert sigproc.frame_signal(np.ones(2), 4, 2, pad=True).shape == (1, 4)


def test_config_validation():
    with pytest.raises(InvalidSizeError):
        sigproc.SpectrogramConfig(hop=0)
    with pytest.raises(InvalidSizeError):
        sigproc.SpectrogramConfig(window=256, fft_plan=Leaf(128))


def test_quantize_waveform():
    q, step = sigproc.quantize_waveform(np.array([0.0, 4095.0, -1.2, 2.6]))
    assert step == 1.0
    assert q.tolist() == [0, 4095, -1, 3]
    z, s0 = sigproc.quantize_waveform(np.zeros(4))
    assert s0 == 0.0 and not z.any()


def test_reference_spectrogram_and_dbfs():
    t = np.arange(4096) / 16000
    x = np.sin(2 * np.pi * 1000 * t) * 1000
    res = sigproc.spectrogram(x, sigproc.SpectrogramConfig(256, 128))
    assert res.magnitude.shape == (128, 31)
    assert np.argmax(res.magnitude[:, 5]) == 16          # 1 kHz at 62.5 Hz per bin
    db = res.dbfs()
    assert db.max() == 0.0
    assert db.min() >= -80.0
    assert np.all(res.dbfs(floor=-40) >= -40)


def test_ideal_analog_spectrogram_matches_reference():
    x, _ = fixtures.speech_fixture()
    x = sigproc.quantize_waveform(x[:8192])[0]
    plan = Split(16, 16, Leaf(16), Leaf(16))
    cfg = sigproc.SpectrogramConfig(256, 128, plan)
    ideal = sigproc.spectrogram(x, cfg, None)
    analog = sigproc.spectrogram(x, cfg, ideal_config([16]))
    assert sigproc.spectrogram_psnr(analog, ideal) > 60
    assert analog.trace.adc_conversions == analog.spectra.shape[0] * 4 * 256 * 48


def test_full_spectrum_bins_and_padding():
    x, rate = fixtures.speech_fixture()
    res = sigproc.full_spectrum(x[:60000], None, None)
    assert res.padded
    assert res.magnitude.shape == (32768,)
    assert rate / 65536 == pytest.approx(0.24414, abs=1e-5)
    res = sigproc.full_spectrum(x, None, None)
    assert not res.padded
    with pytest.raises(InvalidSizeError):
        sigproc.full_spectrum(np.ones(300), Leaf(256), None)


def test_reconstruct_audio_round_trip():
    r = np.random.default_rng(0)
    x = r.normal(size=2048)
    frames = sigproc.frame_signal(x, 256, 128)
    rec = sigproc.reconstruct_audio(np.fft.fft(frames, axis=1), 128, len(x))
    assert np.allclose(rec, x, atol=1e-12)
    with pytest.raises(InvalidSizeError):
        sigproc.reconstruct_audio(np.ones((2, 8)), 9)


def test_spectral_flatness_white_vs_tone():
    r = np.random.default_rng(1)
    white = sigproc.spectral_flatness_db(r.normal(size=65536))
    tone = sigproc.spectral_flatness_db(np.sin(np.arange(65536) * 0.3) + 1e-3 * r.normal(size=65536))
    assert white < 3 < tone


def test_parseval_correct():
    img = np.full((4, 4), 2.0)
    out, f = sigproc.parseval_correct(img * 0.5, float(np.sum(img ** 2)),
                                      float(np.sum(np.abs(np.fft.fft2(img * 0.5)) ** 2)), 16)
    assert f == pytest.approx(2.0)
    assert np.allclose(out, img)
    with pytest.raises(AnalogFFTError):
        sigproc.parseval_correct(img, 1.0, 0.0, 16)


def test_ideal_image_reconstruction_identical():
    # 8-bit integer inputs and 24-bit intermediates: the digital inverse rounds back exactly
    img = fixtures.image_fixture()[::4, ::4]
    cfg = sigproc.image_config("vr", HardwareModel.ideal(), k=8)
    cfg.intermediate_bits = 24
    res = sigproc.image_spectrum_and_reconstruct(img, "vr", cfg, (8, 8, 8, 8))
    assert np.array_equal(res.reconstruction, img)
    assert res.quality.psnr_db == math.inf
    assert res.quality.ssim == pytest.approx(1.0)
    assert res.factors == pytest.approx([1, 1, 1], abs=1e-6)


def test_image_grayscale_and_errors():
    img = fixtures.image_fixture()[::8, ::8, 0]
    cfg = sigproc.image_config("direct", HardwareModel.ideal(), k_max=32)
    res = sigproc.image_spectrum_and_reconstruct(img, "direct", cfg, k_max=32)
    assert res.reconstruction.shape == (32, 32, 1)
    with pytest.raises(InvalidSizeError):
        sigproc.image_spectrum_and_reconstruct(np.zeros(5))


def test_radix_plan():
    assert sigproc.radix_plan(256, 1) == Leaf(256)
    assert sigproc.radix_plan(32, 8).leaves() == [32, 8]


def test_bundled_fixtures_match_generators():
    x, rate = fixtures.speech_fixture()
    assert rate == 16000 and len(x) == 65536
    assert np.array_equal(x, fixtures.synth_speech())
    assert np.array_equal(fixtures.image_fixture(), fixtures.synth_scene())
