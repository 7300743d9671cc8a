"""Donor-based splice editing: execute an EditPlan on a waveform.

Retained stretches of the original are copied sample-exactly, deleted spans
are dropped, and inserted/replaced material comes from same-speaker donor
segments. Every junction between two pieces is an overlap-add raised-cosine
crossfade of ``crossfade`` seconds, so each junction shortens the output by
that many samples.
"""

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from types import MappingProxyType
from typing import Optional

import numpy as np
from pydantic import ValidationError

from .artifacts import atomic_write_text, read_json_document
from .audio import (
    SpanOutOfRange,
    Waveform,
    concatenate,
    extract_segment,
    read_wav,
    seconds_to_sample,
)
from .config_schema import CorpusManifest, DonorManifest, DonorSource, SpliceConfig
from .errors import InvariantViolation, MenderError
from .lexicon import normalize_word
from .planner import EditPlan
from .timeline import TimedUnit, read_transcript, schema_error_from, spoken


class MissingDonor(MenderError):
    """No donor segment for a target token."""

    def __init__(self, token: str) -> None:
        super().__init__(f"No donor segment for token {token!r}", token=token)


class CrossfadeTooLong(MenderError):
    """A piece is too short for the crossfades at its junctions."""

    def __init__(self, piece_samples: int, needed_samples: int) -> None:
        super().__init__(
            f"Piece of {piece_samples} samples cannot hold {needed_samples} crossfade samples",
            piece_samples=piece_samples,
            needed_samples=needed_samples,
        )


@dataclass(frozen=True)
class DonorSegment:
    """Recorded token with its phones relative to the segment start."""

    token: str
    utterance: str
    waveform: Waveform
    phones: tuple[TimedUnit, ...] = ()


@dataclass(frozen=True)
class DonorLibrary:
    """Token (lowercase word or ARPAbet phone) -> donor segments."""

    segments: Mapping[str, tuple[DonorSegment, ...]]
    sample_rate: Optional[int] = None

    def __post_init__(self) -> None:
        for token, candidates in self.segments.items():
            for segment in candidates:
                if len(segment.waveform) == 0:
                    raise InvariantViolation(f"empty donor segment for {token!r}")
                if segment.waveform.sample_rate != self.sample_rate:
                    raise InvariantViolation(
                        f"donor for {token!r} at {segment.waveform.sample_rate} Hz, "
                        f"library at {self.sample_rate} Hz"
                    )
        object.__setattr__(
            self,
            "segments",
            MappingProxyType({t: tuple(c) for t, c in self.segments.items() if c}),
        )

    def __contains__(self, token: object) -> bool:
        return token in self.segments

    def tokens(self) -> list[str]:
        return list(self.segments)

    def excluding(self, utterance: str) -> "DonorLibrary":
        """Library without segments cut from one utterance."""
        return DonorLibrary(
            {
                token: tuple(s for s in candidates if s.utterance != utterance)
                for token, candidates in self.segments.items()
            },
            self.sample_rate,
        )


@dataclass(frozen=True)
class Splice:
    """Replace original samples [start, end) with ``material``."""

    start: int
    end: int
    material: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True)
class PlacedPiece:
    """Where a piece landed in the output.

    ``zone_start``/``zone_end`` bound the samples that belong to this piece
    alone: junction overlaps are split at their midpoint.
    """

    out_start: int
    length: int
    zone_start: int
    zone_end: int
    source_offset: Optional[int] = None
    edit_index: Optional[int] = None


@dataclass(frozen=True)
class SpliceResult:
    waveform: Waveform
    pieces: tuple[PlacedPiece, ...]
    edit_positions: tuple[tuple[int, int], ...]


def raised_cosine(length: int) -> tuple[np.ndarray, np.ndarray]:
    """Fade-in and fade-out ramps that sum to one."""
    fade_in = 0.5 - 0.5 * np.cos(np.pi * (np.arange(length) + 0.5) / length)
    return fade_in, 1.0 - fade_in


def _collect_pieces(
    orig: Waveform, edits: Sequence[Splice]
) -> list[tuple[np.ndarray, Optional[int], Optional[int]]]:
    total = len(orig)
    pieces: list[tuple[np.ndarray, Optional[int], Optional[int]]] = []

    def retain(start: int, end: int) -> None:
        if end <= start:
            return
        if pieces and pieces[-1][1] is not None:
            previous, offset, _ = pieces[-1]
            if offset + len(previous) == start:
                pieces[-1] = (orig.samples[offset:end], offset, None)
                return
        pieces.append((orig.samples[start:end], start, None))

    cursor = 0
    for index, edit in enumerate(edits):
        if not cursor <= edit.start <= edit.end <= total:
            raise InvariantViolation(
                f"splice {index} [{edit.start}, {edit.end}) out of order or outside 0..{total}"
            )
        retain(cursor, edit.start)
        if len(edit.material):
            pieces.append((np.asarray(edit.material, dtype=np.float64), None, index))
        cursor = edit.end
    retain(cursor, total)
    return pieces


def render_edits(orig: Waveform, edits: Sequence[Splice], cfg: SpliceConfig) -> SpliceResult:
    """Low-level splicing engine.

    Edits are given in original sample coordinates, sorted and
    non-overlapping; all indices refer to the unmodified input.

    Raises:
        CrossfadeTooLong: If a piece is shorter than its crossfade overlaps.
    """
    overlap = cfg.crossfade_samples(orig.sample_rate)
    raw = _collect_pieces(orig, edits)
    last = len(raw) - 1

    for index, (samples, _, _) in enumerate(raw):
        junctions = (index > 0) + (index < last)
        if len(samples) < overlap * junctions:
            raise CrossfadeTooLong(len(samples), overlap * junctions)

    total = sum(len(samples) for samples, _, _ in raw) - overlap * max(last, 0)
    out = np.zeros(max(total, 0))
    fade_in, fade_out = raised_cosine(overlap) if overlap else (None, None)
    placed: list[PlacedPiece] = []
    position = 0
    for index, (samples, source_offset, edit_index) in enumerate(raw):
        piece = np.array(samples, dtype=np.float64)
        if overlap and index > 0:
            piece[:overlap] *= fade_in
        if overlap and index < last:
            piece[-overlap:] *= fade_out
        out[position : position + len(piece)] += piece
        placed.append(
            PlacedPiece(
                out_start=position,
                length=len(piece),
                zone_start=position + (overlap // 2 if index > 0 else 0),
                zone_end=position + len(piece) - (overlap - overlap // 2 if index < last else 0),
                source_offset=source_offset,
                edit_index=edit_index,
            )
        )
        position += len(piece) - overlap

    return SpliceResult(
        waveform=Waveform(out, orig.sample_rate),
        pieces=tuple(placed),
        edit_positions=tuple(_edit_positions(edits, placed, len(out))),
    )


def _edit_positions(
    edits: Sequence[Splice], placed: Sequence[PlacedPiece], total: int
) -> list[tuple[int, int]]:
    """Output range of each edit's material; deletions collapse to a point."""
    positions = []
    for index, edit in enumerate(edits):
        own = next((p for p in placed if p.edit_index == index), None)
        if own is not None:
            positions.append((own.zone_start, own.zone_end))
            continue
        following = next(
            (
                p
                for p in placed
                if (p.source_offset is not None and p.source_offset >= edit.end)
                or (p.edit_index is not None and p.edit_index > index)
            ),
            None,
        )
        point = following.zone_start if following is not None else total
        positions.append((point, point))
    return positions


def pick_donor(donors: DonorLibrary, token: str, rng_seed: int) -> DonorSegment:
    """Seeded uniform choice among a token's donor segments.

    Raises:
        MissingDonor: If the library has no segment for the token.
    """
    candidates = donors.segments.get(token)
    if not candidates:
        raise MissingDonor(token)
    return candidates[int(np.random.default_rng(rng_seed).integers(len(candidates)))]


def resolve_plan(
    orig: Waveform, plan: EditPlan, donors: DonorLibrary, seed: int = 0
) -> list[Splice]:
    """Turn plan regions into sample-level splices with donor material."""
    rng = np.random.default_rng(seed)
    if plan.duration > orig.duration:
        raise SpanOutOfRange(0, plan.duration, orig.duration)

    edits = []
    for region in plan.regions:
        material = [
            pick_donor(donors, token, int(rng.integers(2**63))).waveform
            for token in region.target_tokens
        ]
        edits.append(
            Splice(
                start=seconds_to_sample(region.start, orig.sample_rate),
                end=min(seconds_to_sample(region.end, orig.sample_rate), len(orig)),
                material=concatenate(material, orig.sample_rate).samples,
            )
        )
    return edits


def apply_plan(
    orig: Waveform, plan: EditPlan, donors: DonorLibrary, cfg: SpliceConfig, seed: int = 0
) -> Waveform:
    """Execute an edit plan on a waveform.

    Raises:
        MissingDonor: If a target token has no donor.
        SpanOutOfRange: If the plan extends past the waveform.
        CrossfadeTooLong: If a retained or donor piece is too short.
    """
    if not plan.regions:
        return orig
    if donors.sample_rate is not None and donors.sample_rate != orig.sample_rate:
        raise InvariantViolation(
            f"donors at {donors.sample_rate} Hz, audio at {orig.sample_rate} Hz"
        )
    return render_edits(orig, resolve_plan(orig, plan, donors, seed), cfg).waveform


def _relative_phones(phones: Sequence[TimedUnit], origin: Decimal) -> tuple[TimedUnit, ...]:
    return tuple(
        TimedUnit(label=p.label, start=p.start - origin, end=p.end - origin) for p in phones
    )


def build_donor_library(
    manifest: CorpusManifest, manifest_dir: Path
) -> tuple[DonorLibrary, DonorManifest]:
    """Cut every word and phone of a corpus into donor segments.

    Word tokens are lowercase words, phone tokens are ARPAbet labels.
    """
    segments: dict[str, list[DonorSegment]] = {}
    sources: dict[str, list[DonorSource]] = {}

    def add(
        token: str,
        utterance: str,
        wav: str,
        audio: Waveform,
        unit: TimedUnit,
        phones: Sequence[TimedUnit],
    ) -> None:
        segment = extract_segment(audio, unit.start, unit.end)
        if len(segment) == 0:
            return
        relative = _relative_phones(phones, unit.start)
        segments.setdefault(token, []).append(DonorSegment(token, utterance, segment, relative))
        sources.setdefault(token, []).append(
            DonorSource(
                utterance=utterance,
                wav=wav,
                span=(unit.start, unit.end),
                phones=list(relative),
            )
        )

    for entry in manifest.entries:
        audio = read_wav(manifest_dir / entry.wav)
        if audio.sample_rate != manifest.sample_rate:
            raise InvariantViolation(
                f"{entry.wav} at {audio.sample_rate} Hz, corpus at {manifest.sample_rate} Hz"
            )
        transcript = read_transcript(manifest_dir / entry.transcript)
        for word in transcript.words or ():
            if word.is_silence:
                continue
            phones = spoken(word.phones)
            add(normalize_word(word.label), entry.utterance_id, entry.wav, audio, word.unit, phones)
            for phone in phones:
                add(phone.label, entry.utterance_id, entry.wav, audio, phone, [phone])

    library = DonorLibrary(
        {token: tuple(found) for token, found in segments.items()}, manifest.sample_rate
    )
    return library, DonorManifest(sources)


def load_donor_library(path: Path) -> DonorLibrary:
    """Load a donor manifest; WAV paths resolve against its directory.

    Raises:
        MissingFile: If the manifest or a referenced WAV is missing.
        SchemaError: On a malformed manifest.
    """
    try:
        manifest = DonorManifest.model_validate(read_json_document(path))
    except ValidationError as e:
        raise schema_error_from(e) from e

    cache: dict[str, Waveform] = {}
    segments: dict[str, tuple[DonorSegment, ...]] = {}
    sample_rate: Optional[int] = None
    for token, sources in manifest.root.items():
        found = []
        for source in sources:
            if source.wav not in cache:
                cache[source.wav] = read_wav(path.parent / source.wav)
            audio = cache[source.wav]
            sample_rate = sample_rate or audio.sample_rate
            segment = extract_segment(audio, *source.span)
            if len(segment):
                found.append(DonorSegment(token, source.utterance, segment, tuple(source.phones)))
        segments[token] = tuple(found)
    return DonorLibrary(segments, sample_rate)


def rebase_donor_manifest(manifest: DonorManifest, base_dir: Path) -> DonorManifest:
    """Make WAV references absolute so the manifest can live anywhere."""
    return DonorManifest(
        {
            token: [
                source.model_copy(update={"wav": str((base_dir / source.wav).resolve())})
                for source in sources
            ]
            for token, sources in manifest.root.items()
        }
    )


def write_donor_manifest(manifest: DonorManifest, path: Path) -> Path:
    """Write a donor manifest JSON file atomically."""
    data = {
        token: [
            {
                "utterance": source.utterance,
                "wav": source.wav,
                "span": [float(source.span[0]), float(source.span[1])],
                "phones": [
                    {"label": p.label, "start": float(p.start), "end": float(p.end)}
                    for p in source.phones
                ],
            }
            for source in sources
        ]
        for token, sources in manifest.root.items()
    }
    atomic_write_text(path, json.dumps(data, indent=2) + "\n")
    return path
