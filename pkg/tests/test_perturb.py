"""Tests for perturb module."""

import math
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from speech_mender.audio import extract_segment, seconds_to_sample
from speech_mender.config_schema import CorpusManifest, PerturbConfig, SpliceConfig
from speech_mender.errors import InvariantViolation
from speech_mender.lexicon import PronunciationDict, normalize_text
from speech_mender.perturb import (
    EmptyUtterance,
    PerturbationOp,
    PerturbationRecord,
    derive_seed,
    draw_operations,
    perturb_corpus,
    perturb_utterance,
    read_corpus_manifest,
    read_perturbed_manifest,
    read_record,
    speaker_library,
)
from speech_mender.planner import plan_word_word
from speech_mender.seqalign import EditOp
from speech_mender.splice import DonorLibrary, DonorSegment, MissingDonor, build_donor_library
from speech_mender.synthetic import SyntheticUtterance, generate_corpus, synthesize_utterance
from speech_mender.timeline import TimedUnit, emit_transcript, parse_transcript

NOTHING = PerturbConfig(p_insert=0, p_replace=0, p_delete=0)


def utterance(pron_dict: PronunciationDict, text: str, seed: int = 0) -> SyntheticUtterance:
    rng = np.random.default_rng(seed)
    return synthesize_utterance(normalize_text(text), pron_dict, rng)


def foreign_donors(pron_dict: PronunciationDict, text: str) -> DonorLibrary:
    """One donor word segment per word of ``text``, cut from its own recording."""
    source = utterance(pron_dict, text, seed=99)
    segments = {}
    for word in source.words:
        phones = tuple(
            TimedUnit(label=p.label, start=p.start - word.start, end=p.end - word.start)
            for p in word.phones
        )
        waveform = extract_segment(source.waveform, word.start, word.end)
        segments[word.label] = (DonorSegment(word.label, "donor", waveform, phones),)
    return DonorLibrary(segments, source.waveform.sample_rate)


class TestDrawOperations:
    """Tests for draw_operations and derive_seed."""

    def test_frequencies(self) -> None:
        """Should draw each kind close to its probability."""
        cfg = PerturbConfig(p_insert=0.05, p_replace=0.05, p_delete=0.05)
        counts = Counter(draw_operations(10000, cfg, np.random.default_rng(0)))
        for kind in ("insert", "replace", "delete"):
            assert 0.04 <= counts[kind] / 10000 <= 0.06
        assert counts["none"] / 10000 == pytest.approx(0.85, abs=0.02)

    def test_certain_kind(self) -> None:
        """Should always draw a kind with probability one."""
        cfg = PerturbConfig(p_insert=0, p_replace=0, p_delete=1)
        assert set(draw_operations(50, cfg, np.random.default_rng(1))) == {"delete"}

    def test_derive_seed(self) -> None:
        """Should be stable per id and differ across ids."""
        assert derive_seed(7, "spk0_0001") == derive_seed(7, "spk0_0001")
        assert derive_seed(7, "spk0_0001") != derive_seed(7, "spk0_0002")
        assert derive_seed(7, "spk0_0001") != derive_seed(8, "spk0_0001")

    def test_config_sum(self) -> None:
        """Should reject probabilities that sum above one."""
        with pytest.raises(InvariantViolation):
            PerturbConfig(p_insert=0.5, p_replace=0.4, p_delete=0.2)


class TestPerturbUtterance:
    """Tests for perturb_utterance."""

    def test_no_operations(self, pron_dict: PronunciationDict) -> None:
        """Should return the input and an oracle equal to the original words."""
        orig = utterance(pron_dict, "big blue book")
        donors = foreign_donors(pron_dict, "moon sun")
        result = perturb_utterance(orig.waveform, orig.words, donors, NOTHING, utterance_id="u")
        assert result.waveform is orig.waveform
        assert result.record.ops == ()
        assert result.oracle.words == orig.words
        assert result.oracle.source == "oracle"

    def test_inserts_invert_to_deletions(self, pron_dict: PronunciationDict) -> None:
        """Should place inserted words where a word-word plan deletes them."""
        orig = utterance(pron_dict, "big blue book cat")
        donors = foreign_donors(pron_dict, "moon sun")
        cfg = PerturbConfig(p_insert=1, p_replace=0, p_delete=0, seed=3)
        result = perturb_utterance(orig.waveform, orig.words, donors, cfg, utterance_id="u")

        labels = [w.label for w in result.oracle.words]
        assert labels[0::2] == ["big", "blue", "book", "cat"]
        assert set(labels[1::2]) <= {"moon", "sun"}
        assert [op.kind for op in result.record.ops] == ["insert"] * 4

        plan = plan_word_word(result.oracle, normalize_text("big blue book cat"))
        assert [r.op for r in plan.regions] == [EditOp.DELETE] * 4
        assert [r.orig_span for r in plan.regions] == [op.span for op in result.record.ops]

    def test_replaced_samples_are_the_donor(self, pron_dict: PronunciationDict) -> None:
        """Should put the donor samples at the recorded span without a crossfade."""
        orig = utterance(pron_dict, "red dog")
        donors = foreign_donors(pron_dict, "moon sun")
        cfg = PerturbConfig(p_insert=0, p_replace=1, p_delete=0, seed=5)
        result = perturb_utterance(
            orig.waveform, orig.words, donors, cfg, SpliceConfig(crossfade=0), utterance_id="u"
        )
        rate = result.waveform.sample_rate
        for op in result.record.ops:
            donor = donors.segments[op.donor_word][0]
            start = seconds_to_sample(op.span[0], rate)
            end = seconds_to_sample(op.span[1], rate)
            assert np.array_equal(result.waveform.samples[start:end], donor.waveform.samples)

    def test_deletions_shorten_audio(self, pron_dict: PronunciationDict) -> None:
        """Should drop deleted words and record point spans."""
        orig = utterance(pron_dict, "red dog cat")
        cfg = PerturbConfig(p_insert=0, p_replace=0, p_delete=1)
        result = perturb_utterance(
            orig.waveform, orig.words, foreign_donors(pron_dict, "sun"), cfg, utterance_id="u"
        )
        assert result.oracle.words == ()
        assert len(result.waveform) < len(orig.waveform)
        assert all(op.span[0] == op.span[1] for op in result.record.ops)

    def test_oracle_parses_back(self, pron_dict: PronunciationDict) -> None:
        """Should emit an oracle transcript that parses with source oracle."""
        orig = utterance(pron_dict, "green fish home")
        cfg = PerturbConfig(p_insert=0.3, p_replace=0.3, p_delete=0.3, seed=11)
        result = perturb_utterance(
            orig.waveform, orig.words, foreign_donors(pron_dict, "toy zoo"), cfg, utterance_id="u"
        )
        parsed = parse_transcript(emit_transcript(result.oracle))
        assert parsed == result.oracle
        assert parsed.source == "oracle"

    def test_deterministic(self, pron_dict: PronunciationDict) -> None:
        """Should reproduce audio and record for the same seed."""
        orig = utterance(pron_dict, "good day light map pen")
        donors = foreign_donors(pron_dict, "moon sun toy")
        cfg = PerturbConfig(p_insert=0.3, p_replace=0.3, p_delete=0.2, seed=21)
        first = perturb_utterance(orig.waveform, orig.words, donors, cfg, utterance_id="u")
        second = perturb_utterance(orig.waveform, orig.words, donors, cfg, utterance_id="u")
        assert first.record == second.record
        assert np.array_equal(first.waveform.samples, second.waveform.samples)

    def test_replace_needs_a_donor(self, pron_dict: PronunciationDict) -> None:
        """Should raise MissingDonor without any donor word."""
        orig = utterance(pron_dict, "red dog")
        cfg = PerturbConfig(p_insert=0, p_replace=1, p_delete=0)
        with pytest.raises(MissingDonor):
            perturb_utterance(orig.waveform, orig.words, DonorLibrary({}, 16000), cfg)

    def test_replace_skips_same_word(self, pron_dict: PronunciationDict) -> None:
        """Should never replace a word by itself."""
        orig = utterance(pron_dict, "sun sun sun")
        cfg = PerturbConfig(p_insert=0, p_replace=1, p_delete=0)
        result = perturb_utterance(
            orig.waveform, orig.words, foreign_donors(pron_dict, "sun moon"), cfg
        )
        assert {op.donor_word for op in result.record.ops} == {"moon"}

    def test_empty_utterance(self, pron_dict: PronunciationDict) -> None:
        """Should raise EmptyUtterance without spoken words."""
        orig = utterance(pron_dict, "red")
        with pytest.raises(EmptyUtterance):
            perturb_utterance(orig.waveform, (), DonorLibrary({}, 16000), NOTHING)


class TestPerturbationRecord:
    """Tests for PerturbationRecord validation."""

    def test_one_op_per_word(self) -> None:
        """Should reject two ops on the same word."""
        op = PerturbationOp(kind="delete", word_index=0, word="a", span=(0, 0))
        with pytest.raises(InvariantViolation):
            PerturbationRecord(utterance_id="u", seed=0, ops=(op, op))


class TestPerturbCorpus:
    """Tests for perturb_corpus."""

    def test_untouched_copies(self, small_corpus: Path, tmp_path: Path) -> None:
        """Should byte-copy every WAV when nothing is perturbed."""
        manifest = perturb_corpus(small_corpus, NOTHING, tmp_path / "out")
        assert len(manifest.entries) == 6
        for entry in manifest.entries:
            assert not entry.perturbed
            original = Path(entry.original_wav).read_bytes()
            assert (tmp_path / "out" / entry.perturbed_wav).read_bytes() == original

    def test_writes_ground_truth(self, small_corpus: Path, tmp_path: Path) -> None:
        """Should write oracle transcripts, records and a manifest."""
        cfg = PerturbConfig(p_insert=0.2, p_replace=0.2, p_delete=0.2, seed=4)
        out_dir = tmp_path / "out"
        perturb_corpus(small_corpus, cfg, out_dir)
        manifest = read_perturbed_manifest(out_dir / "manifest.json")
        assert manifest.config == cfg
        assert any(entry.perturbed for entry in manifest.entries)
        for entry in manifest.entries:
            record = read_record(out_dir / entry.record)
            assert bool(record.ops) == entry.perturbed
            assert record.seed == derive_seed(cfg.seed, entry.utterance_id)
            for op in record.ops:
                assert op.donor_utterance != entry.utterance_id

    def test_reproducible(self, small_corpus: Path, tmp_path: Path) -> None:
        """Should produce identical files from identical inputs."""
        cfg = PerturbConfig(p_insert=0.2, p_replace=0.2, p_delete=0.2, seed=4)
        first = perturb_corpus(small_corpus, cfg, tmp_path / "a")
        perturb_corpus(small_corpus, cfg, tmp_path / "b")
        for entry in first.entries:
            for name in (entry.perturbed_wav, entry.record, entry.oracle_transcript):
                assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_perturbed_fraction(self, pron_dict: PronunciationDict, tmp_path: Path) -> None:
        """Should perturb a fraction of words inside the 99% binomial interval."""
        corpus = generate_corpus(
            tmp_path / "corpus",
            pron_dict,
            n_utterances=130,
            duration=20.0,
            sample_rate=8000,
            seed=11,
            vocabulary=["a", "are", "the", "we"],
        )
        total = sum(len(entry.text.split()) for entry in corpus.entries)
        assert total >= 10000

        cfg = PerturbConfig()
        out_dir = tmp_path / "out"
        manifest = perturb_corpus(tmp_path / "corpus" / "corpus.json", cfg, out_dir)
        perturbed = sum(len(read_record(out_dir / e.record).ops) for e in manifest.entries)

        p = cfg.p_insert + cfg.p_replace + cfg.p_delete
        half_width = 2.576 * math.sqrt(p * (1 - p) / total)
        assert p - half_width <= perturbed / total <= p + half_width

    def test_speaker_library(self, small_corpus: Path) -> None:
        """Should keep only the speaker's other utterances."""
        manifest = read_corpus_manifest(small_corpus)
        library, _ = build_donor_library(manifest, small_corpus.parent)
        other = CorpusManifest(
            sample_rate=16000,
            entries=[e.model_copy(update={"speaker": "spk9"}) for e in manifest.entries[:1]]
            + manifest.entries[1:],
        )
        first, second = manifest.entries[0].utterance_id, manifest.entries[1].utterance_id
        donors = speaker_library(library, other, "spk0", second)
        for candidates in donors.segments.values():
            assert all(s.utterance not in (first, second) for s in candidates)
