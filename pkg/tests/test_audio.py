import math
import struct
import wave

import numpy as np
import pytest

from becr.audio import (
    AudioBuffer,
    CqtConfig,
    Spectrogram,
    StftConfig,
    cqt,
    hz_to_mel,
    load_wav,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    quality_factor,
    stft,
    window,
    write_wav,
)
from becr.errors import InvalidInputError, UnsupportedFormatError, WavParseError

from conftest import sine


def naive_dft(frame):
    m = len(frame)
    n = np.arange(m)
    return np.array([np.sum(frame * np.exp(-2j * np.pi * k * n / m)) for k in range(m)])


def naive_cqt_bin(x, sample_rate, f_min, b, k, center, kind="hann"):
    """One coefficient, summed term by term, for the kernel centered at ``center``."""
    q = 1.0 / (2 ** (1.0 / b) - 1)
    f_k = f_min * 2 ** (k / b)
    n_k = math.ceil(q * sample_rate / f_k)
    start = center - n_k // 2
    total = 0j
    for n in range(n_k):
        w = 1.0 if kind == "rectangular" else 0.5 * (1 - math.cos(2 * math.pi * n / (n_k - 1)))
        idx = start + n
        sample = x[idx] if 0 <= idx < len(x) else 0.0
        total += w * sample * complex(math.cos(2 * math.pi * q * n / n_k), -math.sin(2 * math.pi * q * n / n_k))
    return abs(total / n_k)


def write_pcm16_stdlib(path, frames, sample_rate, channels=1):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(np.asarray(frames, dtype="<i2").tobytes())


# ---- windows -------------------------------------------------------------

def test_window_examples():
    np.testing.assert_array_equal(window("rectangular", 4), [1, 1, 1, 1])
    np.testing.assert_allclose(window("hann", 5), [0, 0.5, 1, 0.5, 0], atol=1e-16)


@pytest.mark.parametrize("length", [2, 3, 64, 1025])
def test_hann_symmetric(length):
    w = window("hann", length)
    np.testing.assert_array_equal(w, w[::-1])
    assert w[0] == 0 and w.min() >= 0 and w.max() <= 1


def test_window_errors():
    with pytest.raises(InvalidInputError):
        window("hann", 1)
    with pytest.raises(InvalidInputError):
        window("kaiser", 8)


# ---- WAV -----------------------------------------------------------------

def test_load_silence(tmp_path):
    path = tmp_path / "silence.wav"
    write_pcm16_stdlib(path, np.zeros(44100), 44100)
    audio = load_wav(path)
    assert audio.sample_rate == 44100
    assert audio.samples.size == 44100 and not np.any(audio.samples)


def test_stereo_downmix(tmp_path):
    path = tmp_path / "stereo.wav"
    frames = np.tile([16384, -16384], 100)
    write_pcm16_stdlib(path, frames, 8000, channels=2)
    audio = load_wav(path)
    assert audio.samples.size == 100 and not np.any(audio.samples)


def test_pcm16_scaling(tmp_path):
    path = tmp_path / "half.wav"
    write_pcm16_stdlib(path, [16384, -32768, 32767], 16000)
    audio = load_wav(path)
    assert abs(audio.samples[0] - 0.5) <= 2**-15
    assert audio.samples[1] == -1.0


def test_float32_round_trip(tmp_path, rng):
    path = tmp_path / "f32.wav"
    x = rng.uniform(-1, 1, 333)
    write_wav(path, x, 22050, sample_format="float32")
    audio = load_wav(path)
    np.testing.assert_allclose(audio.samples, x.astype(np.float32), rtol=0, atol=0)
    assert audio.sample_rate == 22050


def test_pcm16_writer_matches_stdlib_reader(tmp_path):
    path = tmp_path / "w.wav"
    write_wav(path, [0.0, 0.5, -0.25, -1.0], 8000)
    with wave.open(str(path), "rb") as w:
        assert (w.getnchannels(), w.getsampwidth(), w.getframerate()) == (1, 2, 8000)
        assert np.frombuffer(w.readframes(4), "<i2").tolist() == [0, 16384, -8192, -32768]


def test_extensible_float_header(tmp_path):
    data = np.array([0.25, -0.5], dtype="<f4").tobytes()
    guid = struct.pack("<H", 3) + b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"
    fmt = struct.pack("<HHIIHHHHI", 0xFFFE, 1, 8000, 32000, 4, 32, 22, 32, 4) + guid
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(data)) + data
    path = tmp_path / "ext.wav"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    np.testing.assert_array_equal(load_wav(path).samples, [0.25, -0.5])


def test_unsupported_bit_depth(tmp_path):
    path = tmp_path / "u8.wav"
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(1)
        w.setframerate(8000)
        w.writeframes(bytes([128] * 10))
    with pytest.raises(UnsupportedFormatError):
        load_wav(path)


def test_too_many_channels(tmp_path):
    path = tmp_path / "3ch.wav"
    write_pcm16_stdlib(path, np.zeros(30), 8000, channels=3)
    with pytest.raises(UnsupportedFormatError):
        load_wav(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "cut.wav"
    write_pcm16_stdlib(path, np.arange(1000), 8000)
    raw = path.read_bytes()
    path.write_bytes(raw[:-101])
    with pytest.raises(WavParseError):
        load_wav(path)
    path.write_bytes(raw[:20])
    with pytest.raises(WavParseError):
        load_wav(path)


def test_not_a_wav(tmp_path):
    path = tmp_path / "x.wav"
    path.write_bytes(b"ID3\x03" + b"\x00" * 64)
    with pytest.raises(UnsupportedFormatError):
        load_wav(path)


def test_float_samples_out_of_range(tmp_path):
    path = tmp_path / "loud.wav"
    write_wav(path, [0.1, 1.5], 8000, sample_format="float32")
    with pytest.raises(InvalidInputError):
        load_wav(path)


# ---- STFT ----------------------------------------------------------------

def test_stft_constant_signal():
    m = 64
    spec = stft(AudioBuffer(np.ones(256), 8000), StftConfig(m, hop=32, window="rectangular"))
    assert spec.magnitudes.shape == (1 + (256 - m) // 32, m // 2 + 1)
    np.testing.assert_allclose(spec.magnitudes[:, 0], m, rtol=1e-12)
    assert np.max(spec.magnitudes[:, 1:]) < 1e-9


@pytest.mark.parametrize("j", [1, 5, 17, 31])
def test_stft_sine_at_bin(j):
    m, fs = 64, 6400
    x = 0.9 * np.sin(2 * np.pi * (j * fs / m) * np.arange(640) / fs)
    spec = stft(AudioBuffer(x, fs), StftConfig(m, window="rectangular"))
    np.testing.assert_allclose(spec.magnitudes[:, j], 0.9 * m / 2, rtol=1e-9)
    others = np.delete(spec.magnitudes, j, axis=1)
    assert np.max(others) < 1e-9
    np.testing.assert_allclose(spec.bin_frequencies[j], j * fs / m)


def test_stft_silence():
    spec = stft(AudioBuffer(np.zeros(4096), 16000))
    assert not np.any(spec.magnitudes)


def test_stft_matches_naive_dft(rng):
    x = rng.uniform(-1, 1, 256 * 4)
    for kind in ("rectangular", "hann"):
        spec = stft(AudioBuffer(x, 16000), StftConfig(256, hop=256, window=kind))
        for f in range(spec.n_frames):
            frame = x[f * 256 : (f + 1) * 256] * window(kind, 256)
            ref = np.abs(naive_dft(frame)[:129])
            np.testing.assert_allclose(spec.magnitudes[f], ref, rtol=1e-9, atol=1e-9 * ref.max())


def test_stft_parseval(rng):
    m = 128
    x = rng.uniform(-1, 1, 1000)
    spec = stft(AudioBuffer(x, 8000), StftConfig(m, hop=50, window="rectangular"))
    for f in range(spec.n_frames):
        mags = spec.magnitudes[f]
        two_sided = mags[0] ** 2 + mags[-1] ** 2 + 2 * np.sum(mags[1:-1] ** 2)
        energy = np.sum(x[f * 50 : f * 50 + m] ** 2)
        assert two_sided == pytest.approx(m * energy, rel=1e-6)


def test_stft_linear_in_amplitude(rng):
    x = rng.uniform(-0.3, 0.3, 2048)
    base = stft(AudioBuffer(x, 8000)).magnitudes
    scaled = stft(AudioBuffer(2.5 * x, 8000)).magnitudes
    np.testing.assert_allclose(scaled, 2.5 * base, rtol=1e-9, atol=1e-12)


def test_stft_errors():
    with pytest.raises(InvalidInputError):
        stft(AudioBuffer(np.zeros(100), 8000), StftConfig(128))
    with pytest.raises(InvalidInputError):
        StftConfig(window_size=1000)
    with pytest.raises(InvalidInputError):
        StftConfig(window_size=256, hop=300)
    assert StftConfig().hop == 256


# ---- mel -----------------------------------------------------------------

def test_hz_to_mel_examples():
    assert hz_to_mel(0) == 0
    assert hz_to_mel(700) == pytest.approx(2595 * math.log10(2), abs=1e-12)
    assert hz_to_mel(700) == pytest.approx(781.17, abs=0.01)
    assert hz_to_mel(1000) == pytest.approx(999.99, abs=0.01)
    with pytest.raises(InvalidInputError):
        hz_to_mel(-1)


def test_mel_round_trip_and_monotone():
    f = np.linspace(0, 22050, 500)
    mel = hz_to_mel(f)
    assert np.all(np.diff(mel) > 0)
    np.testing.assert_allclose(mel_to_hz(mel), f, atol=1e-9)


def linear_spec(mags, fs=16000, m=512):
    mags = np.atleast_2d(mags)
    return Spectrogram(mags, "linear_hz", np.arange(m // 2 + 1) * fs / m, 0.01)


def test_mel_silence():
    out = mel_spectrogram(linear_spec(np.zeros((3, 257))), n_mels=20)
    assert out.magnitudes.shape == (3, 20) and not np.any(out.magnitudes)
    assert out.axis == "mel"


def test_filterbank_shape_properties():
    freqs = np.arange(257) * 16000 / 512
    weights, centers = mel_filterbank(freqs, 40, 0.0, 8000.0)
    assert np.all(weights >= 0)
    assert np.all(np.diff(centers) > 0)
    for row in weights:
        assert row.sum() > 0 and row.max() == 1.0
        support = np.flatnonzero(row)
        assert np.array_equal(support, np.arange(support[0], support[-1] + 1))
        peak = int(np.argmax(row))
        assert np.all(np.diff(row[: peak + 1]) >= 0) and np.all(np.diff(row[peak:]) <= 0)


def test_mel_impulse_at_filter_center():
    freqs = np.arange(257) * 16000 / 512
    weights, _ = mel_filterbank(freqs, 30, 0.0, 8000.0)
    for i in (3, 15, 28):
        center = int(np.argmax(weights[i]))
        mags = np.zeros(257)
        mags[center] = 3.0
        out = mel_spectrogram(linear_spec(mags), n_mels=30).magnitudes[0]
        assert out[i] == pytest.approx(9.0, rel=1e-15)
        assert out[i - 1] < out[i] and out[i + 1] < out[i]


def test_mel_matches_dense_oracle(rng):
    freqs = np.arange(257) * 16000 / 512
    weights, _ = mel_filterbank(freqs, 24, 100.0, 7000.0)
    mags = np.ones((2, 257)) + rng.uniform(0, 0.1, (2, 257))
    out = mel_spectrogram(linear_spec(mags), 24, 100.0, 7000.0).magnitudes
    for f in range(2):
        for i in range(24):
            ref = sum(weights[i, j] * mags[f, j] ** 2 for j in range(257))
            assert out[f, i] == pytest.approx(ref, rel=1e-12)
    # white frame: each band sums its weights
    flat = mel_spectrogram(linear_spec(np.ones(257)), 24, 100.0, 7000.0).magnitudes[0]
    np.testing.assert_allclose(flat, weights.sum(axis=1), rtol=1e-12)


def test_mel_errors():
    spec = linear_spec(np.ones(257))
    with pytest.raises(InvalidInputError):
        mel_spectrogram(spec, 10, 4000.0, 3000.0)
    with pytest.raises(InvalidInputError):
        mel_spectrogram(spec, 10, 0.0, 9000.0)
    with pytest.raises(InvalidInputError):
        mel_spectrogram(spec, 0)
    cq = Spectrogram(np.ones((1, 3)), "log_cqt", [1.0, 2.0, 4.0], 0.1)
    with pytest.raises(InvalidInputError):
        mel_spectrogram(cq, 2)


# ---- CQT -----------------------------------------------------------------

def test_quality_factor():
    assert quality_factor(12) == pytest.approx(16.817, abs=1e-3)


def test_cqt_center_frequencies():
    cfg = CqtConfig(f_min=32.70, bins_per_octave=12, n_bins=84)
    f = cfg.center_frequencies()
    assert f[12] == pytest.approx(65.40, abs=1e-12)
    np.testing.assert_array_equal(f[12:] / f[:-12], 2.0)
    for b in (3, 7, 24):
        g = CqtConfig(f_min=27.5, bins_per_octave=b, n_bins=4 * b).center_frequencies()
        assert np.all(g[b:] == 2.0 * g[:-b])


def test_cqt_constant_q_lengths():
    cfg = CqtConfig(f_min=40.0, bins_per_octave=24, n_bins=120)
    fs = 22050
    ratio = cfg.kernel_lengths(fs) * cfg.center_frequencies() / fs
    q = cfg.quality
    assert np.all(ratio >= q - 1e-12)
    assert np.all(ratio <= q + cfg.center_frequencies() / fs + 1e-12)


@pytest.mark.parametrize("k", [0, 12, 30, 47])
def test_cqt_pure_tone_argmax(k):
    fs = 8000
    cfg = CqtConfig(f_min=55.0, bins_per_octave=12, n_bins=48)
    f_k = cfg.center_frequencies()[k]
    spec = cqt(AudioBuffer(sine(f_k, fs, 2.0), fs), cfg)
    assert int(np.argmax(spec.magnitudes.mean(axis=0))) == k


def test_cqt_matches_naive_evaluation(rng):
    fs = 4000
    cfg = CqtConfig(f_min=100.0, bins_per_octave=6, n_bins=12)
    x = rng.uniform(-1, 1, 600)
    spec = cqt(AudioBuffer(x, fs), cfg)
    hop = cfg.kernel_lengths(fs)[0] // 2
    assert spec.frame_hop_seconds == hop / fs
    for frame in (0, 1, spec.n_frames - 1):
        for k in (0, 5, 11):
            ref = naive_cqt_bin(x, fs, 100.0, 6, k, frame * hop)
            assert spec.magnitudes[frame, k] == pytest.approx(ref, rel=1e-9, abs=1e-13)


def test_cqt_silence():
    spec = cqt(AudioBuffer(np.zeros(8000), 8000), CqtConfig(f_min=100.0, n_bins=24))
    assert not np.any(spec.magnitudes)
    assert spec.axis == "log_cqt"


def test_cqt_errors():
    with pytest.raises(InvalidInputError):
        cqt(AudioBuffer(np.zeros(8000), 8000), CqtConfig(f_min=32.7, n_bins=120))
    with pytest.raises(InvalidInputError):
        cqt(AudioBuffer(np.zeros(10), 8000), CqtConfig(f_min=100.0, n_bins=12))
    with pytest.raises(InvalidInputError):
        CqtConfig(f_min=-1.0)


def test_audio_buffer_validation():
    with pytest.raises(InvalidInputError):
        AudioBuffer(np.array([]), 8000)
    with pytest.raises(InvalidInputError):
        AudioBuffer(np.array([0.0, 2.0]), 8000)
    with pytest.raises(InvalidInputError):
        AudioBuffer(np.zeros(4), 0)
