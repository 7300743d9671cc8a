"""Greedy CTC decoding of per-frame logit matrices into timed phones."""

import itertools
import math
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from decimal import Decimal
from typing import BinaryIO

import numpy as np

from .constants import LOGITS_MAGIC, LOGITS_VERSION, SIL_LABEL, SOURCE_CTC
from .errors import InputError
from .lexicon import Phone, UnknownPhone
from .timeline import TimedUnit, Transcript

_HEADER_RE = re.compile(
    rf"^{LOGITS_MAGIC} {LOGITS_VERSION} frames=(\d+) vocab=(\d+) frame_rate_us=(\d+)$"
)
_MAX_HEADER_BYTES = 256
_FLOAT = np.dtype("<f4")


class BadHeader(InputError):
    """Logit file header is missing or malformed."""

    def __init__(self, reason: str) -> None:
        super().__init__(f"Bad logits header: {reason}")


class BadVocab(InputError):
    """Vocabulary file disagrees with the logit header."""

    def __init__(self, reason: str) -> None:
        super().__init__(f"Bad vocabulary: {reason}")


class SizeMismatch(InputError):
    """Payload length differs from frames x (vocab + 1) floats."""

    def __init__(self, expected: int, actual: int) -> None:
        super().__init__(
            f"Logit payload has {actual} bytes, expected {expected}",
            expected=expected,
            actual=actual,
        )


@dataclass(frozen=True)
class LogitMatrix:
    """Per-frame scores over the phone vocabulary plus a trailing blank."""

    scores: np.ndarray
    vocab: tuple[str, ...]
    frame_rate: Decimal

    @property
    def frames(self) -> int:
        return int(self.scores.shape[0])

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    @property
    def blank(self) -> int:
        return len(self.vocab)


@dataclass(frozen=True)
class DecodedPhone:
    """Decoded phone with the frame run it was read from."""

    phone: TimedUnit
    first_frame: int
    last_frame: int


@dataclass(frozen=True)
class FrameSpan:
    """Label occupying frames first..last inclusive."""

    label: str
    first_frame: int
    last_frame: int


def greedy_decode(matrix: LogitMatrix) -> list[DecodedPhone]:
    """Greedy CTC decoding with run-extent timestamps.

    Per frame the argmax wins (ties go to the lowest index, blank is last);
    runs of the same label collapse to one phone, blanks are dropped.
    """
    if matrix.frames == 0:
        return []
    best = np.argmax(matrix.scores, axis=1)
    decoded = []
    frame = 0
    for class_index, run in itertools.groupby(best.tolist()):
        length = sum(1 for _ in run)
        if class_index != matrix.blank:
            first, last = frame, frame + length - 1
            decoded.append(
                DecodedPhone(
                    phone=TimedUnit(
                        label=matrix.vocab[class_index],
                        start=first * matrix.frame_rate,
                        end=(last + 1) * matrix.frame_rate,
                    ),
                    first_frame=first,
                    last_frame=last,
                )
            )
        frame += length
    return decoded


def to_transcript(
    utterance_id: str, decoded: Sequence[DecodedPhone], frame_rate: Decimal
) -> Transcript:
    """Wrap decoded phones in a ctc-source transcript."""
    return Transcript(
        utterance_id=utterance_id,
        source=SOURCE_CTC,
        frame_rate=frame_rate,
        phones=tuple(d.phone for d in decoded),
    )


def load_vocab(lines: Iterable[str]) -> tuple[str, ...]:
    """Read a vocabulary file: one phone label per line, line i = class i."""
    vocab = tuple(line.strip() for line in lines if line.strip())
    for label in vocab:
        Phone.parse(label)
    if len(set(vocab)) != len(vocab):
        raise BadVocab("duplicate phone labels")
    return vocab


def parse_logits(stream: BinaryIO, vocab: Sequence[str]) -> LogitMatrix:
    """Read a CTCLOGITS v1 stream.

    Raises:
        BadHeader: On a malformed header.
        BadVocab: When the vocabulary size differs from the header.
        UnknownPhone: On a vocabulary label outside the phone inventory.
        SizeMismatch: When the payload is not frames x (vocab + 1) floats.
    """
    raw_header = stream.readline(_MAX_HEADER_BYTES)
    if not raw_header.endswith(b"\n"):
        raise BadHeader("header line is missing or too long")
    try:
        header = raw_header.decode("ascii").rstrip("\n")
    except UnicodeDecodeError as e:
        raise BadHeader("header is not ASCII") from e

    match = _HEADER_RE.match(header)
    if not match:
        raise BadHeader(repr(header))
    frames, vocab_size, frame_rate_us = (int(g) for g in match.groups())
    if vocab_size < 1:
        raise BadHeader("vocab must be at least 1")
    if frame_rate_us <= 0:
        raise BadHeader("frame_rate_us must be positive")

    labels = tuple(vocab)
    if len(labels) != vocab_size:
        raise BadVocab(f"header declares {vocab_size} phones, vocabulary lists {len(labels)}")
    for label in labels:
        Phone.parse(label)
    if len(set(labels)) != len(labels):
        raise BadVocab("duplicate phone labels")

    payload = stream.read()
    expected = frames * (vocab_size + 1) * _FLOAT.itemsize
    if len(payload) != expected:
        raise SizeMismatch(expected, len(payload))

    scores = np.frombuffer(payload, dtype=_FLOAT).reshape(frames, vocab_size + 1)
    return LogitMatrix(
        scores=scores.astype(np.float32),
        vocab=labels,
        frame_rate=Decimal(frame_rate_us) / Decimal(1_000_000),
    )


def write_logits(matrix: LogitMatrix, stream: BinaryIO) -> None:
    """Write a CTCLOGITS v1 stream (inverse of parse_logits)."""
    frame_rate_us = int((matrix.frame_rate * 1_000_000).to_integral_value())
    header = (
        f"{LOGITS_MAGIC} {LOGITS_VERSION} frames={matrix.frames} "
        f"vocab={matrix.vocab_size} frame_rate_us={frame_rate_us}\n"
    )
    stream.write(header.encode("ascii"))
    stream.write(np.ascontiguousarray(matrix.scores, dtype=_FLOAT).tobytes())


def synthesize_logits(
    spans: Sequence[FrameSpan], vocab: Sequence[str], frames: int, frame_rate: Decimal
) -> LogitMatrix:
    """Build a matrix whose per-frame argmax spells out the given spans.

    Frames outside every span are blank. Consecutive equal labels must be
    separated by at least one blank frame.
    """
    index = {label: i for i, label in enumerate(vocab)}
    blank = len(vocab)
    scores = np.zeros((frames, len(vocab) + 1), dtype=np.float32)
    scores[:, blank] = 1.0
    previous = None
    for span in spans:
        if span.label not in index:
            raise UnknownPhone(span.label)
        if not 0 <= span.first_frame <= span.last_frame < frames:
            raise ValueError(f"span {span} outside 0..{frames - 1}")
        if previous is not None:
            if span.first_frame <= previous.last_frame:
                raise ValueError(f"span {span} overlaps {previous}")
            if span.label == previous.label and span.first_frame == previous.last_frame + 1:
                raise ValueError(f"span {span} needs a blank after {previous}")
        rows = slice(span.first_frame, span.last_frame + 1)
        scores[rows, blank] = 0.0
        scores[rows, index[span.label]] = 1.0
        previous = span
    return LogitMatrix(scores=scores, vocab=tuple(vocab), frame_rate=frame_rate)


def frame_spans_from_units(units: Sequence[TimedUnit], frame_rate: Decimal) -> list[FrameSpan]:
    """Quantize timed phones onto a CTC frame grid.

    Each phone keeps at least one frame; a phone that no longer fits after
    its predecessor, or that would touch an equal predecessor label without
    a blank in between, is dropped.
    """
    spans: list[FrameSpan] = []
    for unit in units:
        if unit.label == SIL_LABEL:
            continue
        first = int((unit.start / frame_rate).to_integral_value())
        last = max(first, int((unit.end / frame_rate).to_integral_value()) - 1)
        if spans:
            previous = spans[-1]
            gap = 2 if previous.label == unit.label else 1
            first = max(first, previous.last_frame + gap)
            if first > last:
                continue
        spans.append(FrameSpan(unit.label, first, last))
    return spans


def frames_for_duration(duration: Decimal, frame_rate: Decimal) -> int:
    """Number of frames needed to cover a duration."""
    return int(math.ceil(duration / frame_rate))
