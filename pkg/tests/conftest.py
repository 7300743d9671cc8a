"""Shared fixtures: mini dictionary, the we-are-heavily scenario, synthetic audio."""

from decimal import Decimal
from pathlib import Path

import numpy as np
import pytest

from speech_mender.audio import Waveform
from speech_mender.constants import SOURCE_CTC, SOURCE_FORCED
from speech_mender.lexicon import PronunciationDict, load_dictionary_file, normalize_text
from speech_mender.synthetic import generate_corpus
from speech_mender.timeline import TimedUnit, TimedWord, Transcript

FIXTURES = Path(__file__).parent / "fixtures"

# "we are heavily" as recognized, with "we" uttered W ER0
SCENARIO_WORDS = [
    ("we", [("W", "0.10", "0.18"), ("ER0", "0.18", "0.30")]),
    ("are", [("AA1", "0.35", "0.45"), ("R", "0.45", "0.55")]),
    (
        "heavily",
        [
            ("HH", "0.60", "0.68"),
            ("EH1", "0.68", "0.78"),
            ("V", "0.78", "0.86"),
            ("AH0", "0.86", "0.93"),
            ("L", "0.93", "1.00"),
            ("IY0", "1.00", "1.10"),
        ],
    ),
]


def unit(label: str, start: str, end: str) -> TimedUnit:
    return TimedUnit(label=label, start=Decimal(start), end=Decimal(end))


def make_words(layout: list) -> tuple[TimedWord, ...]:
    words = []
    for label, phones in layout:
        units = tuple(unit(*p) for p in phones)
        words.append(
            TimedWord(label=label, start=units[0].start, end=units[-1].end, phones=units)
        )
    return tuple(words)


def tone(seconds: float, frequency: float = 440.0, sample_rate: int = 16000) -> Waveform:
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    return Waveform(0.5 * np.sin(2 * np.pi * frequency * t), sample_rate)


@pytest.fixture
def dictionary_path() -> Path:
    return FIXTURES / "mini_cmudict.dict"


@pytest.fixture
def pron_dict(dictionary_path: Path) -> PronunciationDict:
    return load_dictionary_file(dictionary_path)


@pytest.fixture
def scenario_transcript() -> Transcript:
    return Transcript(
        utterance_id="scenario", source=SOURCE_FORCED, words=make_words(SCENARIO_WORDS)
    )


@pytest.fixture
def scenario_ctc_transcript() -> Transcript:
    phones = tuple(unit(*p) for _, word_phones in SCENARIO_WORDS for p in word_phones)
    return Transcript(
        utterance_id="scenario", source=SOURCE_CTC, frame_rate=Decimal("0.01"), phones=phones
    )


@pytest.fixture
def scenario_target() -> list:
    return normalize_text("We are not happy.")


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """Six 2-second utterances; returns the corpus manifest path."""
    out_dir = tmp_path_factory.mktemp("corpus")
    pron_dict = load_dictionary_file(FIXTURES / "mini_cmudict.dict")
    generate_corpus(out_dir, pron_dict, n_utterances=6, duration=2.0, seed=7)
    return out_dir / "corpus.json"
