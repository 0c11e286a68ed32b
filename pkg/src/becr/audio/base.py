"""Containers shared by the audio front-ends, plus analysis windows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError

AXES = ("linear_hz", "mel", "log_cqt")
WINDOWS = ("hann", "rectangular")


@dataclass(frozen=True)
class AudioBuffer:
    """Mono samples in [-1, 1] at an integer sample rate (Hz)."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1 or x.size == 0:
            raise InvalidInputError("audio must be a non-empty 1-D sample sequence")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("audio contains NaN or Inf")
        if np.max(np.abs(x)) > 1.0 + 1e-6:
            raise InvalidInputError(f"audio sample magnitude {np.max(np.abs(x)):.6g} exceeds 1")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InvalidInputError(f"sample rate must be a positive integer, got {self.sample_rate}")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class Spectrogram:
    """``frames x bins`` nonnegative matrix with its frequency axis.

    ``bin_frequencies`` are in Hz for ``linear_hz`` and ``log_cqt`` axes and
    in mel for the ``mel`` axis.
    """

    magnitudes: np.ndarray
    axis: str
    bin_frequencies: np.ndarray
    frame_hop_seconds: float

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        freqs = np.asarray(self.bin_frequencies, dtype=np.float64)
        if self.axis not in AXES:
            raise InvalidInputError(f"unknown frequency axis {self.axis!r}")
        if mags.ndim != 2 or mags.shape[1] != freqs.size:
            raise InvalidInputError(
                f"magnitudes {mags.shape} do not match {freqs.size} bin frequencies"
            )
        if np.any(mags < 0):
            raise InvalidInputError("spectrogram magnitudes must be nonnegative")
        if np.any(np.diff(freqs) <= 0):
            raise InvalidInputError("bin frequencies must be strictly increasing")
        object.__setattr__(self, "magnitudes", mags)
        object.__setattr__(self, "bin_frequencies", freqs)

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def n_bins(self) -> int:
        return self.magnitudes.shape[1]


def window(kind: str, length: int) -> np.ndarray:
    """Symmetric analysis window.

    ``hann``: ``0.5 * (1 - cos(2 pi n / (L - 1)))``, zero at both ends.
    ``rectangular``: all ones.
    """
    length = int(length)
    if kind == "rectangular":
        if length < 1:
            raise InvalidInputError("window length must be positive")
        return np.ones(length)
    if kind == "hann":
        if length < 2:
            raise InvalidInputError("hann window needs length >= 2")
        n = np.arange(length)
        w = 0.5 * (1.0 - np.cos(2.0 * np.pi * n / (length - 1)))
        # exact symmetry, regardless of cos rounding
        return 0.5 * (w + w[::-1])
    raise InvalidInputError(f"unknown window {kind!r}; expected one of {WINDOWS}")
