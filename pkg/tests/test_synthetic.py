"""Tests for synthetic module."""

import json
from pathlib import Path

import numpy as np
import pytest

from speech_mender.audio import read_wav
from speech_mender.errors import InputError
from speech_mender.lexicon import PronunciationDict, normalize_text
from speech_mender.perturb import read_corpus_manifest
from speech_mender.synthetic import generate_corpus, phone_partials, synthesize_utterance
from speech_mender.timeline import read_transcript


class TestSynthesizeUtterance:
    """Tests for synthesize_utterance."""

    def test_word_boundaries(self, pron_dict: PronunciationDict) -> None:
        """Should annotate every word with contiguous phones."""
        rng = np.random.default_rng(0)
        utterance = synthesize_utterance(normalize_text("red dog"), pron_dict, rng)
        assert utterance.text == "red dog"
        red, dog = utterance.words
        assert [p.label for p in red.phones] == ["R", "EH1", "D"]
        assert red.end < dog.start
        assert dog.end < utterance.waveform.duration

    def test_fixed_duration(self, pron_dict: PronunciationDict) -> None:
        """Should pad or trim to the requested length."""
        rng = np.random.default_rng(1)
        words = normalize_text("big blue book cat dog fish " * 4)
        utterance = synthesize_utterance(words, pron_dict, rng, duration=2.0)
        assert len(utterance.waveform) == 32000
        assert 0 < len(utterance.words) < len(words)
        assert utterance.words[-1].end < utterance.waveform.duration

    def test_partials_are_stable(self) -> None:
        """Should derive the same partials for the same label."""
        assert phone_partials("AA1") == phone_partials("AA1")
        assert phone_partials("AA1") != phone_partials("IY1")


class TestGenerateCorpus:
    """Tests for generate_corpus."""

    def test_layout(self, small_corpus: Path) -> None:
        """Should write WAVs, transcripts, texts and donors."""
        corpus_dir = small_corpus.parent
        manifest = read_corpus_manifest(small_corpus)
        assert [e.utterance_id for e in manifest.entries][:2] == ["spk0_0000", "spk0_0001"]
        for entry in manifest.entries:
            waveform = read_wav(corpus_dir / entry.wav)
            assert waveform.duration == 2
            transcript = read_transcript(corpus_dir / entry.transcript)
            assert " ".join(w.label for w in transcript.words) == entry.text
            text_file = corpus_dir / "text" / f"{entry.utterance_id}.txt"
            assert text_file.read_text().strip() == entry.text
        assert json.loads((corpus_dir / "donors.json").read_text())

    def test_deterministic(self, pron_dict: PronunciationDict, tmp_path: Path) -> None:
        """Should write identical files for the same seed."""
        generate_corpus(tmp_path / "a", pron_dict, 2, duration=1.5, seed=3)
        generate_corpus(tmp_path / "b", pron_dict, 2, duration=1.5, seed=3)
        for name in ("wav/spk0_0001.wav", "transcripts/spk0_0001.json", "donors.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_empty_vocabulary(self, pron_dict: PronunciationDict, tmp_path: Path) -> None:
        """Should refuse an empty vocabulary."""
        with pytest.raises(InputError):
            generate_corpus(tmp_path, pron_dict, 1, vocabulary=[])
