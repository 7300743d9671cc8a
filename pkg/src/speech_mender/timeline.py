"""Timed transcripts: data model, validation and JSON interchange."""

import json
from collections.abc import Iterable, Sequence
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path
from typing import Annotated, Any, Literal, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, ValidationError, model_validator

from .artifacts import atomic_write_text, read_json_document
from .constants import SIL_LABEL, SOURCE_CTC, TIME_QUANTUM
from .errors import InputError, InvariantViolation, SchemaError
from .lexicon import is_phone_label


class NoPhones(InputError):
    """Transcript carries neither a phone tier nor word-level phones."""

    def __init__(self, utterance_id: str) -> None:
        super().__init__(f"Transcript {utterance_id!r} has no phones", utterance_id=utterance_id)


def to_seconds(value: Any) -> Decimal:
    """Coerce a JSON number to seconds quantized to 1 µs."""
    if isinstance(value, bool) or not isinstance(value, (int, float, Decimal)):
        raise ValueError("expected a number of seconds")
    seconds = Decimal(str(value)) if isinstance(value, float) else Decimal(value)
    if not seconds.is_finite():
        raise ValueError("time must be finite")
    return seconds.quantize(TIME_QUANTUM, rounding=ROUND_HALF_EVEN)


Seconds = Annotated[Decimal, BeforeValidator(to_seconds)]


class TimedUnit(BaseModel):
    """Symbol with start/end times in seconds."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    start: Seconds
    end: Seconds

    @model_validator(mode="after")
    def _check_times(self) -> "TimedUnit":
        if self.start < 0:
            raise InvariantViolation(f"unit {self.label!r} starts before 0: {self.start}")
        if self.end < self.start:
            raise InvariantViolation(
                f"unit {self.label!r} ends before it starts: [{self.start}, {self.end}]"
            )
        return self

    @property
    def duration(self) -> Decimal:
        return self.end - self.start


class TimedWord(BaseModel):
    """Word unit with its constituent timed phones."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    start: Seconds
    end: Seconds
    phones: tuple[TimedUnit, ...] = ()

    @model_validator(mode="after")
    def _check_word(self) -> "TimedWord":
        if self.start < 0 or self.end < self.start:
            raise InvariantViolation(
                f"word {self.label!r} has invalid span [{self.start}, {self.end}]"
            )
        if self.phones:
            if self.phones[0].start != self.start or self.phones[-1].end != self.end:
                raise InvariantViolation(
                    f"word {self.label!r} span [{self.start}, {self.end}] does not match "
                    f"its phones [{self.phones[0].start}, {self.phones[-1].end}]"
                )
            _check_labels(self.phones, f"word {self.label!r}")
        return self

    @property
    def unit(self) -> TimedUnit:
        return TimedUnit(label=self.label, start=self.start, end=self.end)

    @property
    def is_silence(self) -> bool:
        return self.label == SIL_LABEL


class Transcript(BaseModel):
    """Timed transcript from a forced aligner, a CTC decoder or an oracle."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    utterance_id: str
    source: Literal["forced", "ctc", "oracle"]
    frame_rate: Optional[Seconds] = None
    words: Optional[tuple[TimedWord, ...]] = None
    phones: Optional[tuple[TimedUnit, ...]] = None

    @model_validator(mode="after")
    def _check_transcript(self) -> "Transcript":
        if self.words is None and self.phones is None:
            raise InvariantViolation("transcript needs words or phones")
        if self.source == SOURCE_CTC and self.words is not None:
            raise InvariantViolation("ctc transcripts carry phones only, found words")
        if self.frame_rate is not None and self.frame_rate <= 0:
            raise InvariantViolation(f"frame_rate must be positive, got {self.frame_rate}")

        if self.phones is not None:
            _check_labels(self.phones, "phone tier")
            _check_order(self.phones, "phone tier")

        if self.words is not None:
            _check_order(self.words, "word tier")
            spoken_words = [w for w in self.words if not w.is_silence]
            with_phones = [w for w in spoken_words if w.phones]
            if with_phones and len(with_phones) != len(spoken_words):
                raise InvariantViolation("either every spoken word carries phones or none does")
            word_phones = [p for w in self.words for p in w.phones]
            _check_order(word_phones, "word-level phones")
            if self.phones is not None and with_phones:
                if spoken(word_phones) != spoken(self.phones):
                    raise InvariantViolation("word-level phones differ from the phone tier")
        return self


def _check_labels(units: Iterable[TimedUnit], where: str) -> None:
    for unit in units:
        if unit.label != SIL_LABEL and not is_phone_label(unit.label):
            raise InvariantViolation(f"{where}: {unit.label!r} is not a phone")


def _check_order(units: Sequence[Any], where: str) -> None:
    for previous, current in zip(units, units[1:]):
        if current.start < previous.end:
            raise InvariantViolation(
                f"{where}: {current.label!r} at {current.start} overlaps "
                f"{previous.label!r} ending at {previous.end}"
            )


def spoken(units: Iterable[TimedUnit]) -> list[TimedUnit]:
    """Drop silence units."""
    return [u for u in units if u.label != SIL_LABEL]


def phone_sequence(transcript: Transcript) -> list[TimedUnit]:
    """Flat phone list, derived from the word tier when absent.

    Raises:
        NoPhones: If neither representation carries phones.
    """
    if transcript.phones is not None:
        return list(transcript.phones)
    words = transcript.words or ()
    phones = [p for w in words for p in w.phones]
    if not phones and any(not w.is_silence for w in words):
        raise NoPhones(transcript.utterance_id)
    return phones


def transcript_end(transcript: Transcript) -> Decimal:
    """Latest end time over both tiers."""
    ends = [u.end for u in transcript.phones or ()]
    ends += [w.end for w in transcript.words or ()]
    return max(ends, default=Decimal(0))


def parse_transcript(document: str) -> Transcript:
    """Parse and validate a transcript JSON document.

    Raises:
        SchemaError: On malformed JSON or a schema mismatch.
        InvariantViolation: On timing or tier inconsistencies.
    """
    try:
        data = json.loads(document, parse_float=Decimal)
    except json.JSONDecodeError as e:
        raise SchemaError("$", str(e)) from e
    return transcript_from_data(data)


def transcript_from_data(data: Any) -> Transcript:
    """Validate an already decoded JSON value."""
    try:
        return Transcript.model_validate(data)
    except ValidationError as e:
        raise schema_error_from(e) from e


def schema_error_from(error: ValidationError) -> SchemaError:
    """Map the first pydantic error to a SchemaError with a dotted path."""
    first = error.errors()[0]
    path = ".".join(str(part) for part in first["loc"]) or "$"
    return SchemaError(path, first["msg"])


def json_default(value: Any) -> Any:
    """JSON encoder hook for Decimal times."""
    if isinstance(value, Decimal):
        return float(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def _unit_data(unit: TimedUnit) -> dict[str, Any]:
    return {"label": unit.label, "start": unit.start, "end": unit.end}


def emit_transcript(transcript: Transcript) -> str:
    """Serialize a transcript to its canonical JSON document."""
    data: dict[str, Any] = {
        "utterance_id": transcript.utterance_id,
        "source": transcript.source,
        "frame_rate": transcript.frame_rate,
        "words": None,
        "phones": None,
    }
    if transcript.words is not None:
        data["words"] = [
            {**_unit_data(w.unit), "phones": [_unit_data(p) for p in w.phones]}
            for w in transcript.words
        ]
    if transcript.phones is not None:
        data["phones"] = [_unit_data(p) for p in transcript.phones]
    return json.dumps(data, indent=2, default=json_default) + "\n"


def read_transcript(path: Path) -> Transcript:
    """Read a transcript JSON file."""
    return transcript_from_data(read_json_document(path))


def write_transcript(transcript: Transcript, path: Path) -> Path:
    """Write a transcript JSON file atomically."""
    atomic_write_text(path, emit_transcript(transcript))
    return path
