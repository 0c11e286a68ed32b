from .base import AudioBuffer, Spectrogram, window
from .cqt import CqtConfig, cqt, quality_factor
from .stft import StftConfig, hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, stft
from .wav import load_wav, read_wav, write_wav

__all__ = [
    "AudioBuffer",
    "Spectrogram",
    "window",
    "CqtConfig",
    "cqt",
    "quality_factor",
    "StftConfig",
    "stft",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "mel_spectrogram",
    "load_wav",
    "read_wav",
    "write_wav",
]
