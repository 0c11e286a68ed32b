"""Short-time Fourier transform and mel filterbank."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .base import WINDOWS, AudioBuffer, Spectrogram, window


@dataclass(frozen=True)
class StftConfig:
    window_size: int = 1024
    hop: int | None = None
    window: str = "hann"

    def __post_init__(self):
        m = int(self.window_size)
        if m < 2 or m & (m - 1):
            raise InvalidInputError(f"window size must be a power of two >= 2, got {self.window_size}")
        hop = m // 4 if self.hop is None else int(self.hop)
        if not 0 < hop <= m:
            raise InvalidInputError(f"hop must be in (0, {m}], got {hop}")
        if self.window not in WINDOWS:
            raise InvalidInputError(f"unknown window {self.window!r}")
        object.__setattr__(self, "window_size", m)
        object.__setattr__(self, "hop", hop)


def frame_count(n_samples: int, window_size: int, hop: int) -> int:
    return 1 + (n_samples - window_size) // hop


def stft(audio: AudioBuffer, config: StftConfig = StftConfig()) -> Spectrogram:
    """Magnitude STFT: frame ``m`` covers samples ``[m*hop, m*hop + M)``, no padding.

    Returns ``1 + (len - M) // hop`` frames and ``M // 2 + 1`` one-sided bins
    at ``bin * sample_rate / M`` Hz.
    """
    x = audio.samples
    m = config.window_size
    if x.size < m:
        raise InvalidInputError(f"audio has {x.size} samples, fewer than window size {m}")
    frames = np.lib.stride_tricks.sliding_window_view(x, m)[:: config.hop]
    spectrum = np.fft.rfft(frames * window(config.window, m), axis=1)
    return Spectrogram(
        magnitudes=np.abs(spectrum),
        axis="linear_hz",
        bin_frequencies=np.arange(m // 2 + 1) * audio.sample_rate / m,
        frame_hop_seconds=config.hop / audio.sample_rate,
    )


def hz_to_mel(f):
    """HTK mel scale, ``2595 * log10(1 + f / 700)``."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0) or not np.all(np.isfinite(f)):
        raise InvalidInputError("frequency must be finite and nonnegative")
    mel = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(mel) if mel.ndim == 0 else mel


def mel_to_hz(mel):
    mel = np.asarray(mel, dtype=np.float64)
    f = 700.0 * (10.0 ** (mel / 2595.0) - 1.0)
    return float(f) if f.ndim == 0 else f


def mel_filterbank(bin_frequencies, n_mels: int, f_lo: float, f_hi: float):
    """Triangular filters with centers evenly spaced in mel over ``[f_lo, f_hi]``.

    Filter ``i`` rises from edge ``i`` to center ``i + 1`` and falls to edge
    ``i + 2`` (edges are ``n_mels + 2`` mel-spaced points). Each row is scaled
    so its largest weight is exactly 1; a filter too narrow to contain any
    bin gets a single unit weight at the bin nearest its center.

    Returns ``(weights, center_mels)`` with ``weights`` of shape
    ``(n_mels, n_bins)``.
    """
    freqs = np.asarray(bin_frequencies, dtype=np.float64)
    edges_mel = np.linspace(hz_to_mel(f_lo), hz_to_mel(f_hi), n_mels + 2)
    edges = mel_to_hz(edges_mel)
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lo) / (mid - lo)
    falling = (hi - freqs[None, :]) / (hi - mid)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    peak = weights.max(axis=1)
    for i in np.flatnonzero(peak == 0.0):
        weights[i, np.argmin(np.abs(freqs - edges[i + 1]))] = 1.0
    peak[peak == 0.0] = 1.0
    return weights / peak[:, None], edges_mel[1:-1]


def mel_spectrogram(
    spec: Spectrogram, n_mels: int = 64, f_lo: float = 0.0, f_hi: float | None = None
) -> Spectrogram:
    """Apply the mel filterbank to the squared STFT magnitudes (band power)."""
    if spec.axis != "linear_hz":
        raise InvalidInputError(f"mel spectrogram needs a linear_hz input, got {spec.axis}")
    nyquist = float(spec.bin_frequencies[-1])
    f_hi = nyquist if f_hi is None else float(f_hi)
    if n_mels < 1:
        raise InvalidInputError("n_mels must be positive")
    if not 0.0 <= f_lo < f_hi <= nyquist:
        raise InvalidInputError(
            f"need 0 <= f_lo < f_hi <= {nyquist:g} Hz, got f_lo={f_lo:g}, f_hi={f_hi:g}"
        )
    weights, centers = mel_filterbank(spec.bin_frequencies, n_mels, f_lo, f_hi)
    return Spectrogram(
        magnitudes=(spec.magnitudes**2) @ weights.T,
        axis="mel",
        bin_frequencies=centers,
        frame_hop_seconds=spec.frame_hop_seconds,
    )
