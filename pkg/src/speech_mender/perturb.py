"""Perturbed-corpus construction with ground-truth oracle transcripts.

Each spoken word gets one categorical draw: insert a donor word after it,
replace it by a donor word, delete it, or leave it alone. Donor words come
from other utterances of the same speaker.
"""

import hashlib
import json
from collections.abc import Sequence
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .artifacts import atomic_copy, atomic_write_text, read_json_document
from .audio import Waveform, read_wav, seconds_to_sample, write_wav
from .config_schema import (
    CorpusManifest,
    PerturbConfig,
    PerturbedEntry,
    PerturbedManifest,
    SpliceConfig,
)
from .constants import (
    ORACLE_SUFFIX,
    PERTURBED_MANIFEST,
    RECORD_SUFFIX,
    SOURCE_ORACLE,
    WAV_SUFFIX,
)
from .errors import InvariantViolation, MenderError
from .lexicon import is_phone_label, normalize_word
from .splice import (
    DonorLibrary,
    DonorSegment,
    MissingDonor,
    PlacedPiece,
    Splice,
    build_donor_library,
    render_edits,
)
from .timeline import (
    Seconds,
    TimedUnit,
    TimedWord,
    Transcript,
    json_default,
    read_transcript,
    schema_error_from,
    to_seconds,
    write_transcript,
)

OpKind = Literal["insert", "replace", "delete"]
NO_OP = "none"


class EmptyUtterance(MenderError):
    """Utterance has no audio or no spoken words to perturb."""

    def __init__(self, utterance_id: str) -> None:
        super().__init__(f"Utterance {utterance_id!r} is empty", utterance_id=utterance_id)


class PerturbationOp(BaseModel):
    """One applied perturbation; ``span`` is its location in the perturbed audio."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: OpKind
    word_index: int
    word: str
    donor_word: Optional[str] = None
    donor_utterance: Optional[str] = None
    span: tuple[Seconds, Seconds]


class PerturbationRecord(BaseModel):
    """Ground truth for one utterance."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    utterance_id: str
    seed: int
    ops: tuple[PerturbationOp, ...] = ()

    @model_validator(mode="after")
    def _check_ops(self) -> "PerturbationRecord":
        indices = [op.word_index for op in self.ops]
        if indices != sorted(set(indices)):
            raise InvariantViolation("ops must be ordered by word index, one per word")
        return self


@dataclass(frozen=True)
class PerturbationResult:
    waveform: Waveform
    record: PerturbationRecord
    oracle: Transcript


def derive_seed(seed: int, utterance_id: str) -> int:
    """Per-utterance seed: base seed XOR a stable hash of the id."""
    digest = hashlib.blake2b(utterance_id.encode("utf-8"), digest_size=8).digest()
    return seed ^ int.from_bytes(digest, "big")


def draw_operations(count: int, cfg: PerturbConfig, rng: np.random.Generator) -> list[str]:
    """One categorical draw per word over insert/replace/delete/none."""
    kinds = np.array(["insert", "replace", "delete", NO_OP])
    probabilities = [cfg.p_insert, cfg.p_replace, cfg.p_delete]
    probabilities.append(max(0.0, 1.0 - sum(probabilities)))
    weights = np.array(probabilities) / sum(probabilities)
    return [str(kind) for kind in rng.choice(kinds, size=count, p=weights)]


def _word_pool(donors: DonorLibrary) -> list[DonorSegment]:
    return [
        segment
        for token in sorted(donors.tokens())
        if not is_phone_label(token)
        for segment in donors.segments[token]
    ]


def _draw_donor(
    pool: Sequence[DonorSegment], rng: np.random.Generator, exclude: Optional[str] = None
) -> DonorSegment:
    candidates = [s for s in pool if s.token != exclude]
    if not candidates:
        raise MissingDonor(exclude or "<any word>")
    return candidates[int(rng.integers(len(candidates)))]


class _OutputClock:
    """Maps original times and donor-relative times to perturbed-audio times."""

    def __init__(self, pieces: Sequence[PlacedPiece], sample_rate: int) -> None:
        self.pieces = pieces
        self.rate = Decimal(sample_rate)

    def _seconds(self, sample: int) -> Decimal:
        return Decimal(sample) / self.rate

    def _clamp(self, time: Decimal, piece: PlacedPiece) -> Decimal:
        low, high = self._seconds(piece.zone_start), self._seconds(piece.zone_end)
        return to_seconds(min(max(time, low), high))

    def retained(self, unit: TimedUnit, start_sample: int) -> TimedUnit:
        piece = next(
            p
            for p in self.pieces
            if p.source_offset is not None
            and p.source_offset <= start_sample < p.source_offset + p.length
        )
        shift = self._seconds(piece.out_start - piece.source_offset)
        return TimedUnit(
            label=unit.label,
            start=self._clamp(unit.start + shift, piece),
            end=self._clamp(unit.end + shift, piece),
        )

    def donor(self, unit: TimedUnit, edit_index: int) -> TimedUnit:
        piece = next(p for p in self.pieces if p.edit_index == edit_index)
        shift = self._seconds(piece.out_start)
        return TimedUnit(
            label=unit.label,
            start=self._clamp(unit.start + shift, piece),
            end=self._clamp(unit.end + shift, piece),
        )


def _timed_word(label: str, phones: Sequence[TimedUnit], fallback: TimedUnit) -> TimedWord:
    if phones:
        return TimedWord(label=label, start=phones[0].start, end=phones[-1].end, phones=phones)
    return TimedWord(label=label, start=fallback.start, end=fallback.end)


def perturb_utterance(
    orig: Waveform,
    words: Sequence[TimedWord],
    donors: DonorLibrary,
    cfg: PerturbConfig,
    splice_cfg: Optional[SpliceConfig] = None,
    utterance_id: str = "",
    seed: Optional[int] = None,
) -> PerturbationResult:
    """Insert, replace and delete word segments at random.

    ``donors`` should already exclude the utterance itself. Returns the
    perturbed audio, the record of applied operations, and an oracle
    transcript of what the perturbed audio actually says.

    Raises:
        EmptyUtterance: If the audio or the spoken word list is empty.
        MissingDonor: If an operation needs a donor word and none exists.
    """
    splice_cfg = splice_cfg or SpliceConfig()
    seed = cfg.seed if seed is None else seed
    spoken_words = [w for w in words if not w.is_silence]
    if len(orig) == 0 or not spoken_words:
        raise EmptyUtterance(utterance_id)

    rng = np.random.default_rng(seed)
    kinds = draw_operations(len(spoken_words), cfg, rng)
    pool = _word_pool(donors)
    rate = orig.sample_rate

    edits: list[Splice] = []
    planned: list[tuple[int, str, Optional[DonorSegment]]] = []
    for index, (word, kind) in enumerate(zip(spoken_words, kinds)):
        if kind == NO_OP:
            continue
        start = seconds_to_sample(word.start, rate)
        end = min(seconds_to_sample(word.end, rate), len(orig))
        donor = None
        if kind == "insert":
            donor = _draw_donor(pool, rng)
            edits.append(Splice(end, end, donor.waveform.samples))
        elif kind == "replace":
            donor = _draw_donor(pool, rng, exclude=normalize_word(word.label))
            edits.append(Splice(start, end, donor.waveform.samples))
        else:
            edits.append(Splice(start, end))
        planned.append((index, kind, donor))

    if not edits:
        oracle = Transcript(
            utterance_id=utterance_id, source=SOURCE_ORACLE, words=tuple(spoken_words)
        )
        record = PerturbationRecord(utterance_id=utterance_id, seed=seed)
        return PerturbationResult(orig, record, oracle)

    result = render_edits(orig, edits, splice_cfg)
    clock = _OutputClock(result.pieces, rate)
    by_word = {
        index: (edit_index, kind, donor)
        for edit_index, (index, kind, donor) in enumerate(planned)
    }

    oracle_words: list[TimedWord] = []
    ops: list[PerturbationOp] = []
    for index, word in enumerate(spoken_words):
        edit_index, kind, donor = by_word.get(index, (None, NO_OP, None))
        if kind in (NO_OP, "insert"):
            start_sample = seconds_to_sample(word.start, rate)
            phones = [clock.retained(p, start_sample) for p in word.phones]
            oracle_words.append(
                _timed_word(word.label, phones, clock.retained(word.unit, start_sample))
            )
        if kind == NO_OP:
            continue

        if donor is not None:
            phones = [clock.donor(p, edit_index) for p in donor.phones]
            whole = TimedUnit(label=donor.token, start=0, end=donor.waveform.duration)
            donor_word = _timed_word(donor.token, phones, clock.donor(whole, edit_index))
            oracle_words.append(donor_word)
            span = (donor_word.start, donor_word.end)
        else:
            point = to_seconds(Decimal(result.edit_positions[edit_index][0]) / Decimal(rate))
            span = (point, point)
        ops.append(
            PerturbationOp(
                kind=kind,
                word_index=index,
                word=word.label,
                donor_word=donor.token if donor else None,
                donor_utterance=donor.utterance if donor else None,
                span=span,
            )
        )

    if any(not w.phones for w in oracle_words):
        oracle_words = [TimedWord(label=w.label, start=w.start, end=w.end) for w in oracle_words]
    oracle = Transcript(utterance_id=utterance_id, source=SOURCE_ORACLE, words=tuple(oracle_words))
    record = PerturbationRecord(utterance_id=utterance_id, seed=seed, ops=tuple(ops))
    return PerturbationResult(result.waveform, record, oracle)


def emit_record(record: PerturbationRecord) -> str:
    data = {
        "utterance_id": record.utterance_id,
        "seed": record.seed,
        "ops": [
            {
                "kind": op.kind,
                "word_index": op.word_index,
                "word": op.word,
                "donor_word": op.donor_word,
                "donor_utterance": op.donor_utterance,
                "span": list(op.span),
            }
            for op in record.ops
        ],
    }
    return json.dumps(data, indent=2, default=json_default) + "\n"


def read_record(path: Path) -> PerturbationRecord:
    try:
        return PerturbationRecord.model_validate(read_json_document(path))
    except ValidationError as e:
        raise schema_error_from(e) from e


def read_corpus_manifest(path: Path) -> CorpusManifest:
    try:
        return CorpusManifest.model_validate(read_json_document(path))
    except ValidationError as e:
        raise schema_error_from(e) from e


def read_perturbed_manifest(path: Path) -> PerturbedManifest:
    try:
        return PerturbedManifest.model_validate(read_json_document(path))
    except ValidationError as e:
        raise schema_error_from(e) from e


def speaker_library(
    library: DonorLibrary, manifest: CorpusManifest, speaker: str, exclude: str
) -> DonorLibrary:
    """Donors recorded by one speaker, minus one utterance."""
    speakers = {e.utterance_id: e.speaker for e in manifest.entries}
    return DonorLibrary(
        {
            token: tuple(s for s in candidates if speakers.get(s.utterance) == speaker)
            for token, candidates in library.excluding(exclude).segments.items()
        },
        library.sample_rate,
    )


def perturb_corpus(
    manifest_path: Path,
    cfg: PerturbConfig,
    out_dir: Path,
    splice_cfg: Optional[SpliceConfig] = None,
) -> PerturbedManifest:
    """Perturb every utterance of a corpus and write the perturbed corpus.

    Output layout under ``out_dir``: ``<id>.wav``, ``<id>.oracle.json``,
    ``<id>.record.json`` and ``manifest.json``. Untouched utterances keep a
    byte copy of their original WAV.
    """
    manifest = read_corpus_manifest(manifest_path)
    corpus_dir = manifest_path.parent
    library, _ = build_donor_library(manifest, corpus_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for entry in manifest.entries:
        original_wav = corpus_dir / entry.wav
        transcript = read_transcript(corpus_dir / entry.transcript)
        result = perturb_utterance(
            read_wav(original_wav),
            transcript.words or (),
            speaker_library(library, manifest, entry.speaker, entry.utterance_id),
            cfg,
            splice_cfg,
            utterance_id=entry.utterance_id,
            seed=derive_seed(cfg.seed, entry.utterance_id),
        )

        wav_path = out_dir / f"{entry.utterance_id}{WAV_SUFFIX}"
        oracle_path = out_dir / f"{entry.utterance_id}{ORACLE_SUFFIX}"
        record_path = out_dir / f"{entry.utterance_id}{RECORD_SUFFIX}"
        if result.record.ops:
            write_wav(result.waveform, wav_path)
        else:
            atomic_copy(original_wav, wav_path)
        write_transcript(result.oracle, oracle_path)
        atomic_write_text(record_path, emit_record(result.record))

        entries.append(
            PerturbedEntry(
                utterance_id=entry.utterance_id,
                speaker=entry.speaker,
                original_wav=str(original_wav.resolve()),
                original_text=entry.text,
                perturbed_wav=wav_path.name,
                oracle_transcript=oracle_path.name,
                record=record_path.name,
                perturbed=bool(result.record.ops),
            )
        )

    perturbed = PerturbedManifest(
        source_manifest=str(manifest_path.resolve()), config=cfg, entries=entries
    )
    atomic_write_text(out_dir / PERTURBED_MANIFEST, perturbed.model_dump_json(indent=2) + "\n")
    return perturbed
