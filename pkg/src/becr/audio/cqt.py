"""Constant-Q transform by direct per-frame evaluation.

For bin ``k`` with center ``f_k = f_min * 2**(k / b)``::

    Q    = 1 / (2**(1/b) - 1)
    N[k] = ceil(Q * sample_rate / f_k)
    X[k] = (1 / N[k]) * sum_{n < N[k]} W[k, n] x[n] exp(-2j pi Q n / N[k])

Frames sit every ``N[0] // 2`` samples (half the longest kernel). Each bin's
kernel is centered on the frame position; samples outside the signal are
zero. No FFT acceleration: cost is ``O(frames * sum_k N[k])``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .base import WINDOWS, AudioBuffer, Spectrogram, window


@dataclass(frozen=True)
class CqtConfig:
    f_min: float = 32.70
    bins_per_octave: int = 12
    n_bins: int = 84
    window: str = "hann"

    def __post_init__(self):
        if not (self.f_min > 0 and math.isfinite(self.f_min)):
            raise InvalidInputError(f"f_min must be positive, got {self.f_min}")
        if int(self.bins_per_octave) < 1 or int(self.n_bins) < 1:
            raise InvalidInputError("bins_per_octave and n_bins must be positive")
        if self.window not in WINDOWS:
            raise InvalidInputError(f"unknown window {self.window!r}")
        object.__setattr__(self, "bins_per_octave", int(self.bins_per_octave))
        object.__setattr__(self, "n_bins", int(self.n_bins))

    @property
    def quality(self) -> float:
        return quality_factor(self.bins_per_octave)

    def center_frequencies(self) -> np.ndarray:
        # octave factor applied via ldexp so f[k + b] == 2 * f[k] holds bitwise
        k = np.arange(self.n_bins)
        octave, step = np.divmod(k, self.bins_per_octave)
        return np.ldexp(self.f_min * np.exp2(step / self.bins_per_octave), octave)

    def kernel_lengths(self, sample_rate: int) -> np.ndarray:
        return np.ceil(self.quality * sample_rate / self.center_frequencies()).astype(np.int64)

    def check_nyquist(self, sample_rate: int) -> None:
        top = self.center_frequencies()[-1]
        if top >= sample_rate / 2:
            raise InvalidInputError(
                f"highest CQT bin {top:.2f} Hz is not below Nyquist ({sample_rate / 2:g} Hz)"
            )


def quality_factor(bins_per_octave: int) -> float:
    return 1.0 / (2.0 ** (1.0 / bins_per_octave) - 1.0)


def cqt(audio: AudioBuffer, config: CqtConfig = CqtConfig()) -> Spectrogram:
    rate = audio.sample_rate
    config.check_nyquist(rate)
    lengths = config.kernel_lengths(rate)
    x = audio.samples
    if x.size < lengths[-1]:
        raise InvalidInputError(
            f"audio has {x.size} samples; the shortest CQT kernel needs {lengths[-1]}"
        )
    q = config.quality
    longest = int(lengths[0])
    hop = max(1, longest // 2)
    positions = np.arange(0, x.size, hop)
    padded = np.concatenate([np.zeros(longest), x, np.zeros(longest)])

    mags = np.empty((positions.size, config.n_bins))
    for k, n_k in enumerate(lengths):
        n_k = int(n_k)
        n = np.arange(n_k)
        kernel = window(config.window, n_k) * np.exp(-2j * np.pi * q * n / n_k) / n_k
        starts = positions - n_k // 2 + longest
        segments = np.lib.stride_tricks.sliding_window_view(padded, n_k)[starts]
        mags[:, k] = np.abs(segments @ kernel)

    return Spectrogram(
        magnitudes=mags,
        axis="log_cqt",
        bin_frequencies=config.center_frequencies(),
        frame_hop_seconds=hop / rate,
    )
