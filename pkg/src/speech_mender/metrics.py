"""Objective evaluation: PER / s-PER, time-stamp gap statistics and MCD."""

import math
from collections.abc import Sequence
from dataclasses import dataclass
from decimal import Decimal

import librosa
import numpy as np

from .audio import Waveform, mel_cepstra
from .config_schema import AnalysisConfig
from .constants import DEFAULT_TOLERANCE_MS
from .errors import InputError, MenderError
from .lexicon import Phone, strip_stress
from .seqalign import EditOp, align
from .timeline import TimedUnit, spoken

MCD_SCALE = 10.0 / math.log(10.0)


class EmptyReference(InputError):
    """Error rate against an empty reference."""

    def __init__(self) -> None:
        super().__init__("Reference phone sequence is empty")


class NoMatchedPhones(MenderError):
    """Gap statistics need at least one label-matched phone pair."""

    def __init__(self) -> None:
        super().__init__("No phones matched between hypothesis and reference")


class TooShort(MenderError):
    """A waveform yields no analysis frames."""

    def __init__(self, samples: int) -> None:
        super().__init__(
            f"Waveform of {samples} samples is shorter than one frame", samples=samples
        )


@dataclass(frozen=True)
class ErrorRate:
    substitutions: int
    insertions: int
    deletions: int
    ref_length: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def rate(self) -> float:
        return self.errors / self.ref_length


@dataclass(frozen=True)
class GapStats:
    """Boundary gaps over label-matched phone pairs, in milliseconds."""

    avg_start_gap_ms: float
    avg_end_gap_ms: float
    tolerable_start_ratio: float
    tolerable_end_ratio: float
    tolerance_ms: float
    matched_count: int


def per(ref: Sequence[Phone], hyp: Sequence[Phone], stressed: bool = False) -> ErrorRate:
    """Phone error rate; ``stressed=True`` gives s-PER.

    Raises:
        EmptyReference: If ``ref`` is empty.
    """
    if not ref:
        raise EmptyReference()
    if not stressed:
        ref = [strip_stress(p) for p in ref]
        hyp = [strip_stress(p) for p in hyp]

    # align() converts hyp into ref: its inserts are recognizer deletions
    alignment = align([str(p) for p in hyp], [str(p) for p in ref])
    return ErrorRate(
        substitutions=alignment.count(EditOp.REPLACE),
        insertions=alignment.count(EditOp.DELETE),
        deletions=alignment.count(EditOp.INSERT),
        ref_length=len(ref),
    )


def gap_stats(
    hyp: Sequence[TimedUnit],
    ref: Sequence[TimedUnit],
    tolerance_ms: float = DEFAULT_TOLERANCE_MS,
) -> GapStats:
    """Start/end time gaps between matched hypothesis and reference phones.

    Raises:
        NoMatchedPhones: If no aligned pair carries the same label.
    """
    hyp, ref = spoken(hyp), spoken(ref)
    alignment = align([u.label for u in hyp], [u.label for u in ref])
    matched = [
        (hyp[pair.hyp_index], ref[pair.ref_index])
        for pair in alignment.pairs
        if pair.op is EditOp.UNCHANGE
    ]
    if not matched:
        raise NoMatchedPhones()

    to_ms = Decimal(1000)
    tolerance = Decimal(str(tolerance_ms))
    start_gaps = [abs(h.start - r.start) * to_ms for h, r in matched]
    end_gaps = [abs(h.end - r.end) * to_ms for h, r in matched]
    count = len(matched)
    return GapStats(
        avg_start_gap_ms=float(sum(start_gaps) / count),
        avg_end_gap_ms=float(sum(end_gaps) / count),
        tolerable_start_ratio=sum(1 for g in start_gaps if g <= tolerance) / count,
        tolerable_end_ratio=sum(1 for g in end_gaps if g <= tolerance) / count,
        tolerance_ms=tolerance_ms,
        matched_count=count,
    )


def _canonical(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Order a pair of cepstra so that DTW sees both argument orders alike."""
    key_a = (a.shape[0], a.tobytes())
    key_b = (b.shape[0], b.tobytes())
    return (a, b) if key_a <= key_b else (b, a)


def mcd(a: Waveform, b: Waveform, cfg: AnalysisConfig) -> float:
    """Mel-cepstral distortion in dB over a DTW alignment of c1..cK.

    Raises:
        TooShort: If either waveform yields no frames.
    """
    cepstra_a = mel_cepstra(a, cfg).coefficients
    cepstra_b = mel_cepstra(b, cfg).coefficients
    for waveform, cepstra in ((a, cepstra_a), (b, cepstra_b)):
        if cepstra.shape[0] == 0:
            raise TooShort(len(waveform))

    first, second = _canonical(cepstra_a, cepstra_b)
    _, path = librosa.sequence.dtw(X=first.T, Y=second.T, metric="euclidean")
    diffs = first[path[:, 0]] - second[path[:, 1]]
    per_frame = np.sqrt(2.0 * np.sum(diffs**2, axis=1))
    return float(MCD_SCALE * np.mean(per_frame))
