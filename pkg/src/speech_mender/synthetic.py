"""Deterministic single-speaker tone-and-noise corpus with word annotations.

Every phone label has a fixed timbre (three partials derived from a stable
hash of the label); consonants add a noise component. Words are strung
together with short pauses, so word and phone boundaries are known exactly.
"""

import hashlib
from collections.abc import Sequence
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Optional

import numpy as np

from .artifacts import atomic_write_text
from .audio import Waveform, write_wav
from .config_schema import CorpusEntry, CorpusManifest
from .constants import (
    CORPUS_MANIFEST,
    DONOR_MANIFEST,
    SOURCE_FORCED,
    TEXT_SUFFIX,
    TRANSCRIPT_SUFFIX,
    WAV_SUFFIX,
)
from .errors import InputError
from .lexicon import Phone, PronunciationDict, WordToken, lookup
from .splice import build_donor_library, write_donor_manifest
from .timeline import TimedUnit, TimedWord, Transcript, to_seconds, write_transcript

PHONE_SECONDS = (0.06, 0.10)
PAUSE_SECONDS = (0.05, 0.08)
EDGE_SECONDS = (0.10, 0.20)
RAMP_SECONDS = 0.005
PAUSE_NOISE = 0.002
CONSONANT_NOISE = 0.05


@dataclass(frozen=True)
class SyntheticUtterance:
    waveform: Waveform
    words: tuple[TimedWord, ...]

    @property
    def text(self) -> str:
        return " ".join(w.label for w in self.words)


def phone_partials(label: str) -> tuple[float, float, float]:
    """Stable partial frequencies (Hz) for a phone label."""
    digest = hashlib.blake2b(label.encode("ascii"), digest_size=6).digest()
    low = 200 + int.from_bytes(digest[0:2], "big") % 600
    mid = 900 + int.from_bytes(digest[2:4], "big") % 1400
    high = 2400 + int.from_bytes(digest[4:6], "big") % 2400
    return float(low), float(mid), float(high)


def render_phone(
    phone: Phone, samples: int, sample_rate: int, rng: np.random.Generator
) -> np.ndarray:
    """One phone worth of audio with short onset/offset ramps."""
    t = np.arange(samples) / sample_rate
    low, mid, high = phone_partials(str(phone))
    signal = (
        0.4 * np.sin(2 * np.pi * low * t)
        + 0.25 * np.sin(2 * np.pi * mid * t)
        + 0.1 * np.sin(2 * np.pi * high * t)
    )
    if not phone.is_vowel:
        signal = 0.5 * signal + CONSONANT_NOISE * rng.standard_normal(samples)
    ramp = min(samples // 2, int(RAMP_SECONDS * sample_rate))
    if ramp:
        envelope = np.ones(samples)
        envelope[:ramp] = np.linspace(0.0, 1.0, ramp)
        envelope[-ramp:] = np.linspace(1.0, 0.0, ramp)
        signal = signal * envelope
    return signal


def _seconds(sample: int, sample_rate: int) -> Decimal:
    return to_seconds(Decimal(sample) / Decimal(sample_rate))


def synthesize_utterance(
    words: Sequence[WordToken],
    pron_dict: PronunciationDict,
    rng: np.random.Generator,
    sample_rate: int = 16000,
    duration: Optional[float] = None,
) -> SyntheticUtterance:
    """Render words back to back with pauses and a quiet noise floor.

    With ``duration`` set, words that would not fit (leaving room for the
    trailing edge) are dropped and the signal is padded to exactly
    ``duration`` seconds.
    """
    pieces: list[np.ndarray] = []
    timed: list[TimedWord] = []
    cursor = 0

    def pause(low_high: tuple[float, float]) -> None:
        nonlocal cursor
        samples = int(rng.uniform(*low_high) * sample_rate)
        pieces.append(PAUSE_NOISE * rng.standard_normal(samples))
        cursor += samples

    limit = None if duration is None else int(duration * sample_rate)
    reserve = int(EDGE_SECONDS[1] * sample_rate)
    pause(EDGE_SECONDS)
    for word in words:
        phones = lookup(pron_dict, word)
        lengths = [int(rng.uniform(*PHONE_SECONDS) * sample_rate) for _ in phones]
        if timed:
            pause(PAUSE_SECONDS)
        if limit is not None and cursor + sum(lengths) + reserve > limit:
            break

        units = []
        for phone, length in zip(phones, lengths):
            pieces.append(render_phone(phone, length, sample_rate, rng))
            units.append(
                TimedUnit(
                    label=str(phone),
                    start=_seconds(cursor, sample_rate),
                    end=_seconds(cursor + length, sample_rate),
                )
            )
            cursor += length
        timed.append(
            TimedWord(label=word.text, start=units[0].start, end=units[-1].end, phones=tuple(units))
        )

    if limit is None:
        pause(EDGE_SECONDS)
    elif limit > cursor:
        pieces.append(PAUSE_NOISE * rng.standard_normal(limit - cursor))
    samples = np.concatenate(pieces) if pieces else np.zeros(0)
    if limit is not None:
        samples = samples[:limit]
    return SyntheticUtterance(Waveform(samples, sample_rate), tuple(timed))


def generate_corpus(
    out_dir: Path,
    pron_dict: PronunciationDict,
    n_utterances: int,
    duration: float = 3.0,
    sample_rate: int = 16000,
    seed: int = 0,
    vocabulary: Optional[Sequence[str]] = None,
    speaker: str = "spk0",
) -> CorpusManifest:
    """Write a synthetic corpus: WAVs, forced transcripts, texts, donors.

    Raises:
        InputError: If the vocabulary is empty.
    """
    words = sorted(vocabulary if vocabulary is not None else pron_dict.words())
    if not words:
        raise InputError("Synthetic corpus needs a non-empty vocabulary")
    rng = np.random.default_rng(seed)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for index in range(n_utterances):
        utterance_id = f"{speaker}_{index:04d}"
        # enough candidates to fill the duration; the renderer drops the excess
        draw = rng.choice(len(words), size=max(1, int(duration / 0.15)))
        tokens = [WordToken(words[i]) for i in draw]
        utterance = synthesize_utterance(tokens, pron_dict, rng, sample_rate, duration)

        wav_name = f"wav/{utterance_id}{WAV_SUFFIX}"
        transcript_name = f"transcripts/{utterance_id}{TRANSCRIPT_SUFFIX}"
        write_wav(utterance.waveform, out_dir / wav_name)
        write_transcript(
            Transcript(utterance_id=utterance_id, source=SOURCE_FORCED, words=utterance.words),
            out_dir / transcript_name,
        )
        atomic_write_text(out_dir / f"text/{utterance_id}{TEXT_SUFFIX}", utterance.text + "\n")
        entries.append(
            CorpusEntry(
                utterance_id=utterance_id,
                speaker=speaker,
                wav=wav_name,
                transcript=transcript_name,
                text=utterance.text,
            )
        )

    manifest = CorpusManifest(sample_rate=sample_rate, entries=entries)
    atomic_write_text(out_dir / CORPUS_MANIFEST, manifest.model_dump_json(indent=2) + "\n")
    _, donors = build_donor_library(manifest, out_dir)
    write_donor_manifest(donors, out_dir / DONOR_MANIFEST)
    return manifest
