"""WAV I/O, framing and mel-cepstral analysis."""

from collections.abc import Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Union

import librosa
import numpy as np
import soundfile as sf
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct
from scipy.signal import get_window

from .artifacts import atomic_path
from .config_schema import AnalysisConfig
from .constants import PCM16_SCALE
from .errors import InputError, InvariantViolation, MenderError, MissingFile
from .timeline import to_seconds

TimeValue = Union[Decimal, int, float]


class UnsupportedFormat(InputError):
    """WAV file is not 16-bit PCM mono."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"Unsupported audio format in {path}: {reason}", path=path)


class CorruptHeader(InputError):
    """File is not a readable RIFF/WAVE file."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"Corrupt WAV header in {path}: {reason}", path=path)


class WavIoError(MenderError):
    """WAV file could not be written."""

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"Cannot write {path}: {reason}", path=path)


class SpanOutOfRange(InputError):
    """Time span outside the waveform."""

    def __init__(self, start: Decimal, end: Decimal, duration: Decimal) -> None:
        super().__init__(
            f"Span [{start}, {end}] outside [0, {duration}]",
            start=float(start),
            end=float(end),
            duration=float(duration),
        )


@dataclass(frozen=True)
class Waveform:
    """Mono signal with amplitudes nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        if self.sample_rate <= 0:
            raise InvariantViolation(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvariantViolation(f"expected mono samples, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise InvariantViolation("waveform has non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> Decimal:
        return to_seconds(Decimal(len(self)) / Decimal(self.sample_rate))


@dataclass(frozen=True)
class MelCepstra:
    """Frames x K mel-cepstral coefficients c1..cK."""

    coefficients: np.ndarray
    config: AnalysisConfig

    @property
    def frames(self) -> int:
        return int(self.coefficients.shape[0])


def read_wav(path: Path) -> Waveform:
    """Read a 16-bit PCM mono WAV file.

    Raises:
        MissingFile: If the path does not exist.
        CorruptHeader: If libsndfile cannot parse the file.
        UnsupportedFormat: For stereo, non-PCM or non-16-bit files.
    """
    if not path.is_file():
        raise MissingFile(str(path))
    try:
        info = sf.info(str(path))
    except RuntimeError as e:
        raise CorruptHeader(str(path), str(e)) from e

    if info.format != "WAV":
        raise UnsupportedFormat(str(path), f"container {info.format}")
    if info.subtype != "PCM_16":
        raise UnsupportedFormat(str(path), f"encoding {info.subtype}")
    if info.channels != 1:
        raise UnsupportedFormat(str(path), f"{info.channels} channels")

    try:
        data, sample_rate = sf.read(str(path), dtype="int16", always_2d=False)
    except RuntimeError as e:
        raise CorruptHeader(str(path), str(e)) from e
    return Waveform(data.astype(np.float64) / PCM16_SCALE, int(sample_rate))


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Clamp to [-1, 1], scale and round half away from zero."""
    scaled = np.clip(samples, -1.0, 1.0) * PCM16_SCALE
    rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(rounded, -PCM16_SCALE, PCM16_SCALE - 1).astype(np.int16)


def write_wav(waveform: Waveform, path: Path) -> Path:
    """Write a 16-bit PCM mono WAV file atomically."""
    try:
        with atomic_path(path) as tmp_path:
            sf.write(
                str(tmp_path),
                quantize_pcm16(waveform.samples),
                waveform.sample_rate,
                format="WAV",
                subtype="PCM_16",
            )
    except (RuntimeError, OSError) as e:
        raise WavIoError(str(path), str(e)) from e
    return path


def frame_signal(samples: np.ndarray, window_samples: int, hop_samples: int) -> np.ndarray:
    """Overlapping frames, one per row; no padding."""
    if samples.shape[0] < window_samples:
        return np.empty((0, window_samples))
    return sliding_window_view(samples, window_samples)[::hop_samples]


def mel_filterbank(sample_rate: int, fft_size: int, mel_bands: int) -> np.ndarray:
    """Triangular HTK-scale filters from 0 Hz to Nyquist, unnormalized."""
    return librosa.filters.mel(
        sr=sample_rate,
        n_fft=fft_size,
        n_mels=mel_bands,
        fmin=0.0,
        fmax=sample_rate / 2,
        htk=True,
        norm=None,
        dtype=np.float64,
    )


def mel_cepstra(waveform: Waveform, config: AnalysisConfig) -> MelCepstra:
    """Hann-windowed magnitude STFT -> mel filterbank -> log -> DCT-II, c1..cK.

    Signals shorter than one window give zero frames.
    """
    sample_rate = waveform.sample_rate
    window_samples = config.window_samples(sample_rate)
    fft_size = config.fft_size(sample_rate)
    if config.mel_bands >= fft_size // 2:
        raise InputError(
            f"mel_bands ({config.mel_bands}) must be below fft_size/2 ({fft_size // 2})"
        )

    frames = frame_signal(waveform.samples, window_samples, config.hop_samples(sample_rate))
    if frames.shape[0] == 0:
        return MelCepstra(np.empty((0, config.cepstral_coeffs)), config)

    window = get_window("hann", window_samples, fftbins=True)
    magnitude = np.abs(np.fft.rfft(frames * window, n=fft_size, axis=1))
    energies = magnitude @ mel_filterbank(sample_rate, fft_size, config.mel_bands).T
    log_mel = np.log(np.maximum(energies, config.log_floor))
    cepstra = dct(log_mel, type=2, norm="ortho", axis=1)
    return MelCepstra(cepstra[:, 1 : config.cepstral_coeffs + 1], config)


def seconds_to_sample(seconds: TimeValue, sample_rate: int) -> int:
    """Nearest sample index of a time point."""
    exact = to_seconds(seconds) * sample_rate
    return int(exact.to_integral_value(rounding=ROUND_HALF_EVEN))


def extract_segment(waveform: Waveform, start: TimeValue, end: TimeValue) -> Waveform:
    """Samples in [round(start*sr), round(end*sr)).

    Raises:
        SpanOutOfRange: Unless 0 <= start <= end <= duration.
    """
    start, end = to_seconds(start), to_seconds(end)
    if not Decimal(0) <= start <= end <= waveform.duration:
        raise SpanOutOfRange(start, end, waveform.duration)
    first = seconds_to_sample(start, waveform.sample_rate)
    last = min(seconds_to_sample(end, waveform.sample_rate), len(waveform))
    return Waveform(waveform.samples[first:last], waveform.sample_rate)


def concatenate(waveforms: Sequence[Waveform], sample_rate: int) -> Waveform:
    """Join waveforms end to end."""
    for waveform in waveforms:
        if waveform.sample_rate != sample_rate:
            raise InvariantViolation(
                f"sample rate {waveform.sample_rate} differs from {sample_rate}"
            )
    if not waveforms:
        return Waveform(np.zeros(0), sample_rate)
    return Waveform(np.concatenate([w.samples for w in waveforms]), sample_rate)
