"""Tests for planner module."""

from decimal import Decimal
from pathlib import Path

import pytest

from speech_mender.errors import InputError, InvariantViolation
from speech_mender.lexicon import (
    MissingPronunciation,
    Phone,
    PronunciationDict,
    load_dictionary,
    lookup,
    normalize_text,
)
from speech_mender.planner import (
    EditPlan,
    EditRegion,
    EmptyInput,
    NotApplicable,
    NoWordTier,
    emit_plan,
    make_plan,
    parse_plan,
    plan_phone_phone,
    plan_word_phone,
    plan_word_word,
    read_plan,
    write_plan,
)
from speech_mender.seqalign import EditOp
from speech_mender.timeline import TimedUnit, TimedWord, Transcript

from .conftest import SCENARIO_WORDS, make_words, unit

D = Decimal


def regions_of(plan: EditPlan) -> list[tuple]:
    return [(r.op, r.orig_span, r.anchor, r.target_tokens) for r in plan.regions]


def dictionary_transcript(pron_dict: PronunciationDict, text: str) -> Transcript:
    """Forced transcript that pronounces every word as the dictionary does."""
    words, clock = [], D("0.1")
    for token in normalize_text(text):
        phones = []
        for phone in lookup(pron_dict, token):
            phones.append(TimedUnit(label=str(phone), start=clock, end=clock + D("0.08")))
            clock += D("0.08")
        words.append(
            TimedWord(
                label=token.text,
                start=phones[0].start,
                end=phones[-1].end,
                phones=tuple(phones),
            )
        )
        clock += D("0.05")
    return Transcript(utterance_id="dict", source="forced", words=tuple(words))


class TestEditRegion:
    """Tests for EditRegion validation."""

    def test_no_unchange_regions(self) -> None:
        """Should reject the unchange operation."""
        with pytest.raises(InvariantViolation):
            EditRegion(op=EditOp.UNCHANGE, orig_span=(0, 1))

    def test_insert_needs_anchor(self) -> None:
        """Should reject an insert with a span."""
        with pytest.raises(InvariantViolation):
            EditRegion(op=EditOp.INSERT, orig_span=(0, 1), target_tokens=("a",))

    def test_delete_has_no_tokens(self) -> None:
        """Should reject a delete carrying tokens."""
        with pytest.raises(InvariantViolation):
            EditRegion(op=EditOp.DELETE, orig_span=(0, 1), target_tokens=("a",))

    def test_replace_needs_tokens(self) -> None:
        """Should reject a replace without tokens."""
        with pytest.raises(InvariantViolation):
            EditRegion(op=EditOp.REPLACE, orig_span=(0, 1))


class TestEditPlan:
    """Tests for EditPlan validation."""

    def test_overlapping_regions(self) -> None:
        """Should reject overlapping regions."""
        with pytest.raises(InvariantViolation):
            EditPlan(
                utterance_id="u",
                method="word-word",
                granularity="word",
                regions=(
                    EditRegion(op=EditOp.DELETE, orig_span=(0, 0.5)),
                    EditRegion(op=EditOp.DELETE, orig_span=(0.4, 1)),
                ),
            )

    def test_gap_in_partition(self) -> None:
        """Should reject spans that leave a hole in the timeline."""
        with pytest.raises(InvariantViolation):
            EditPlan(
                utterance_id="u",
                method="word-word",
                granularity="word",
                regions=(EditRegion(op=EditOp.DELETE, orig_span=(0.5, 1)),),
                unchanged_spans=((0, 0.4),),
            )

    def test_duration(self) -> None:
        """Should report the end of the last span."""
        plan = EditPlan(
            utterance_id="u",
            method="word-word",
            granularity="word",
            regions=(EditRegion(op=EditOp.DELETE, orig_span=(0.5, 1)),),
            unchanged_spans=((0, 0.5), (1, 1.5)),
        )
        assert plan.duration == D("1.5")


class TestPlanWordWord:
    """Tests for plan_word_word."""

    def test_scenario(self, scenario_transcript: Transcript, scenario_target: list) -> None:
        """Should merge heavily's replacement and happy's insertion into one region."""
        plan = plan_word_word(scenario_transcript, scenario_target)
        assert regions_of(plan) == [
            (EditOp.REPLACE, (D("0.6"), D("1.1")), None, ("not", "happy"))
        ]
        assert plan.unchanged_spans == ((D(0), D("0.6")),)
        assert plan.granularity == "word"

    def test_identity(self, scenario_transcript: Transcript) -> None:
        """Should plan nothing when the text already matches."""
        plan = plan_word_word(scenario_transcript, normalize_text("we are heavily"))
        assert plan.regions == ()
        assert plan.unchanged_spans == ((D(0), D("1.1")),)

    def test_drop_last_word(self, scenario_transcript: Transcript) -> None:
        """Should delete the final word's span."""
        plan = plan_word_word(scenario_transcript, normalize_text("we are"))
        assert regions_of(plan) == [(EditOp.DELETE, (D("0.6"), D("1.1")), None, ())]

    def test_insert_anchor(self) -> None:
        """Should anchor an insertion midway between its neighbours."""
        words = make_words([SCENARIO_WORDS[0], SCENARIO_WORDS[2]])
        hyp = Transcript(utterance_id="u", source="forced", words=words)
        plan = plan_word_word(hyp, normalize_text("we are heavily"))
        assert regions_of(plan) == [(EditOp.INSERT, None, D("0.45"), ("are",))]
        assert plan.unchanged_spans == ((D(0), D("1.1")),)

    def test_explicit_duration(self, scenario_transcript: Transcript) -> None:
        """Should extend the unchanged tail to the audio duration."""
        plan = plan_word_word(scenario_transcript, normalize_text("we are"), D("2.0"))
        assert plan.unchanged_spans[-1] == (D("1.1"), D("2.0"))
        assert plan.duration == D("2.0")

    def test_duration_shorter_than_transcript(self, scenario_transcript: Transcript) -> None:
        """Should reject a duration before the last word ends."""
        with pytest.raises(InvariantViolation):
            plan_word_word(scenario_transcript, normalize_text("we"), D("1.0"))

    def test_ctc_not_applicable(self, scenario_ctc_transcript: Transcript) -> None:
        """Should refuse ctc transcripts."""
        with pytest.raises(NotApplicable):
            plan_word_word(scenario_ctc_transcript, normalize_text("we"))

    def test_no_word_tier(self) -> None:
        """Should raise NoWordTier for a phones-only forced transcript."""
        hyp = Transcript(
            utterance_id="u", source="forced", phones=(unit("W", "0", "0.1"),)
        )
        with pytest.raises(NoWordTier):
            plan_word_word(hyp, normalize_text("we"))


class TestPlanPhonePhone:
    """Tests for plan_phone_phone."""

    def test_scenario(
        self, scenario_transcript: Transcript, scenario_target: list, pron_dict: PronunciationDict
    ) -> None:
        """Should replace ER0 with IY1 and rewrite the heavily stretch."""
        plan = make_plan("phone-phone", scenario_transcript, scenario_target, pron_dict)
        assert regions_of(plan) == [
            (EditOp.REPLACE, (D("0.18"), D("0.3")), None, ("IY1",)),
            (
                EditOp.REPLACE,
                (D("0.6"), D("1.0")),
                None,
                ("N", "AA1", "T", "HH", "AE1", "P"),
            ),
        ]
        assert plan.granularity == "phone"
        assert plan.unchanged_spans == (
            (D(0), D("0.18")),
            (D("0.3"), D("0.6")),
            (D("1.0"), D("1.1")),
        )

    def test_identity(self, scenario_transcript: Transcript) -> None:
        """Should plan nothing for equal phone sequences."""
        units = [p for w in scenario_transcript.words for p in w.phones]
        target = [Phone.parse(u.label) for u in units]
        assert plan_phone_phone(units, target).regions == ()

    def test_extra_phone(self) -> None:
        """Should delete a single extra phone."""
        hyp = [
            unit("W", "0", "0.1"),
            unit("IY1", "0.1", "0.2"),
            unit("T", "0.2", "0.25"),
            unit("AA1", "0.25", "0.4"),
            unit("R", "0.4", "0.5"),
        ]
        target = [Phone.parse(x) for x in ("W", "IY1", "AA1", "R")]
        plan = plan_phone_phone(hyp, target)
        assert regions_of(plan) == [(EditOp.DELETE, (D("0.2"), D("0.25")), None, ())]

    def test_stress_sensitive(self) -> None:
        """Should treat AH0 and AH1 as different phones."""
        plan = plan_phone_phone([unit("AH0", "0", "0.1")], [Phone.parse("AH1")])
        assert regions_of(plan) == [(EditOp.REPLACE, (D(0), D("0.1")), None, ("AH1",))]

    def test_silence_ignored(self) -> None:
        """Should skip sil units when aligning."""
        hyp = [unit("sil", "0", "0.1"), unit("W", "0.1", "0.2")]
        assert plan_phone_phone(hyp, [Phone.parse("W")]).regions == ()

    def test_empty_input(self) -> None:
        """Should raise EmptyInput when both sides are empty."""
        with pytest.raises(EmptyInput):
            plan_phone_phone([], [])


class TestPlanWordPhone:
    """Tests for plan_word_phone."""

    def test_scenario(
        self, scenario_transcript: Transcript, scenario_target: list, pron_dict: PronunciationDict
    ) -> None:
        """Should replace "we" although its label matches."""
        plan = plan_word_phone(scenario_transcript, scenario_target, pron_dict)
        assert regions_of(plan) == [
            (EditOp.REPLACE, (D("0.1"), D("0.3")), None, ("we",)),
            (EditOp.REPLACE, (D("0.6"), D("1.1")), None, ("not", "happy")),
        ]

    def test_ctc_matches_word_tier(
        self,
        scenario_transcript: Transcript,
        scenario_ctc_transcript: Transcript,
        scenario_target: list,
        pron_dict: PronunciationDict,
    ) -> None:
        """Should reach the same regions from the phone tier alone."""
        forced = plan_word_phone(scenario_transcript, scenario_target, pron_dict)
        ctc = plan_word_phone(scenario_ctc_transcript, scenario_target, pron_dict)
        assert regions_of(ctc) == regions_of(forced)

    def test_identity(self, pron_dict: PronunciationDict) -> None:
        """Should plan nothing when phones equal the dictionary's."""
        hyp = dictionary_transcript(pron_dict, "we are not happy")
        assert plan_word_phone(hyp, normalize_text("we are not happy"), pron_dict).regions == ()

    def test_at_least_as_aggressive_as_word_word(self, pron_dict: PronunciationDict) -> None:
        """Should edit every word that word-word edits."""
        hyp = dictionary_transcript(pron_dict, "the red dog")
        target = normalize_text("the blue dog")
        word_word = plan_word_word(hyp, target)
        word_phone = plan_word_phone(hyp, target, pron_dict)
        for region in word_word.regions:
            assert any(
                other.start <= region.start and region.end <= other.end
                for other in word_phone.regions
            )

    def test_target_word_spanning_deleted_hyp_word(self) -> None:
        """Should fold a deleted hyp word into the target word around it."""
        hyp = Transcript(
            utterance_id="fold",
            source="forced",
            words=make_words(
                [
                    ("a", [("AA1", "0", "0.1")]),
                    ("k", [("K", "0.1", "0.2")]),
                    ("ts", [("T", "0.2", "0.3"), ("S", "0.3", "0.4")]),
                ]
            ),
        )
        plan = plan_word_phone(hyp, normalize_text("atsd"), load_dictionary(["ATSD  AA1 T S D"]))
        assert regions_of(plan) == [(EditOp.REPLACE, (D("0"), D("0.4")), None, ("atsd",))]
        assert plan.unchanged_spans == ()

    def test_missing_pronunciation(
        self, scenario_transcript: Transcript, pron_dict: PronunciationDict
    ) -> None:
        """Should propagate MissingPronunciation for unknown target words."""
        with pytest.raises(MissingPronunciation):
            plan_word_phone(scenario_transcript, normalize_text("we are zyzzyva"), pron_dict)


class TestMakePlan:
    """Tests for make_plan dispatch and plan files."""

    def test_needs_dictionary(self, scenario_transcript: Transcript) -> None:
        """Should require a dictionary for phone-based methods."""
        with pytest.raises(InputError):
            make_plan("word-phone", scenario_transcript, normalize_text("we"), None)

    def test_unknown_method(
        self, scenario_transcript: Transcript, pron_dict: PronunciationDict
    ) -> None:
        """Should reject unknown method names."""
        with pytest.raises(InputError):
            make_plan("word-char", scenario_transcript, normalize_text("we"), pron_dict)

    def test_identity_every_method(self, pron_dict: PronunciationDict) -> None:
        """Should plan nothing for matching input under every method."""
        hyp = dictionary_transcript(pron_dict, "good day")
        for method in ("word-word", "word-phone", "phone-phone"):
            assert make_plan(method, hyp, normalize_text("good day"), pron_dict).regions == ()

    def test_plan_file(self, tmp_path: Path) -> None:
        """Should write and read back an equal plan."""
        plan = plan_word_word(
            Transcript(
                utterance_id="u",
                source="forced",
                words=make_words([SCENARIO_WORDS[0], SCENARIO_WORDS[2]]),
            ),
            normalize_text("we are"),
            D("1.5"),
        )
        path = write_plan(plan, tmp_path / "u.plan.json")
        assert read_plan(path) == plan
        assert parse_plan(emit_plan(plan)) == plan
