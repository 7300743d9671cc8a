"""Edit planning: recognized transcript + target text -> time-stamped EditPlan.

Three correction methods are supported:

- word-word: word-level alignment, word-level edits
- phone-phone: phone-level alignment, phone-level edits
- word-phone: phone-level alignment, word-level edits; a target word stays
  unchanged only when all of its phones align unchanged
"""

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from .artifacts import atomic_write_text, read_json_document
from .constants import (
    METHOD_PHONE_PHONE,
    METHOD_WORD_PHONE,
    METHOD_WORD_WORD,
    SOURCE_CTC,
)
from .errors import InputError, InvariantViolation, SchemaError
from .lexicon import (
    Phone,
    PronunciationDict,
    WordToken,
    lookup,
    normalize_word,
    words_to_phones,
)
from .seqalign import Alignment, EditOp, align
from .timeline import (
    Seconds,
    TimedUnit,
    TimedWord,
    Transcript,
    json_default,
    phone_sequence,
    schema_error_from,
    spoken,
    to_seconds,
    transcript_end,
)

GRANULARITY = {
    METHOD_WORD_WORD: "word",
    METHOD_WORD_PHONE: "word",
    METHOD_PHONE_PHONE: "phone",
}


class NoWordTier(InputError):
    """Word-level planning on a transcript without words."""

    def __init__(self, utterance_id: str) -> None:
        super().__init__(f"Transcript {utterance_id!r} has no word tier", utterance_id=utterance_id)


class NotApplicable(InputError):
    """Correction method cannot run on this S2T source."""

    def __init__(self, method: str, source: str) -> None:
        super().__init__(
            f"Method {method} is not applicable to {source} transcripts",
            method=method,
            source=source,
        )


class EmptyInput(InputError):
    """Both sequences to align are empty."""

    def __init__(self) -> None:
        super().__init__("Nothing to align: recognized and target sequences are empty")


class EditRegion(BaseModel):
    """One non-unchanged edit located in the original audio."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    op: EditOp
    orig_span: Optional[tuple[Seconds, Seconds]] = None
    anchor: Optional[Seconds] = None
    target_tokens: tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_region(self) -> "EditRegion":
        if self.op is EditOp.UNCHANGE:
            raise InvariantViolation("regions never carry the unchange operation")
        if self.op is EditOp.INSERT:
            if self.anchor is None or self.orig_span is not None:
                raise InvariantViolation("insert regions need an anchor and no span")
            if not self.target_tokens:
                raise InvariantViolation("insert regions need target tokens")
        else:
            if self.orig_span is None or self.anchor is not None:
                raise InvariantViolation(f"{self.op.value} regions need a span and no anchor")
            if self.orig_span[1] < self.orig_span[0]:
                raise InvariantViolation(f"region span {self.orig_span} ends before it starts")
            if self.op is EditOp.DELETE and self.target_tokens:
                raise InvariantViolation("delete regions carry no target tokens")
            if self.op is EditOp.REPLACE and not self.target_tokens:
                raise InvariantViolation("replace regions need target tokens")
        return self

    @property
    def start(self) -> Decimal:
        return self.orig_span[0] if self.orig_span is not None else self.anchor

    @property
    def end(self) -> Decimal:
        return self.orig_span[1] if self.orig_span is not None else self.anchor


class EditPlan(BaseModel):
    """Ordered, non-overlapping edit regions plus the unchanged remainder."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    utterance_id: str
    method: Literal["word-word", "word-phone", "phone-phone"]
    granularity: Literal["word", "phone"]
    regions: tuple[EditRegion, ...] = ()
    unchanged_spans: tuple[tuple[Seconds, Seconds], ...] = ()

    @model_validator(mode="after")
    def _check_plan(self) -> "EditPlan":
        for previous, current in zip(self.regions, self.regions[1:]):
            if current.start < previous.end:
                raise InvariantViolation(
                    f"regions overlap or are out of order at {current.start}"
                )
        pieces = sorted(
            [r.orig_span for r in self.regions if r.orig_span is not None]
            + list(self.unchanged_spans)
        )
        cursor = Decimal(0)
        for start, end in pieces:
            if start != cursor or end < start:
                raise InvariantViolation(
                    f"regions and unchanged spans do not partition the timeline at {cursor}"
                )
            cursor = end
        for region in self.regions:
            if region.anchor is not None and not 0 <= region.anchor <= cursor:
                raise InvariantViolation(f"insert anchor {region.anchor} outside [0, {cursor}]")
        return self

    @property
    def duration(self) -> Decimal:
        ends = [end for _, end in self.unchanged_spans]
        ends += [r.end for r in self.regions]
        return max(ends, default=Decimal(0))


@dataclass
class _Item:
    """Aligned stretch: hyp units it covers and the target tokens it stands for."""

    changed: bool
    units: list[TimedUnit] = field(default_factory=list)
    tokens: list[str] = field(default_factory=list)


def _merge_changed(items: Sequence[_Item]) -> list[_Item]:
    merged: list[_Item] = []
    for item in items:
        if item.changed and merged and merged[-1].changed:
            merged[-1].units.extend(item.units)
            merged[-1].tokens.extend(item.tokens)
        else:
            merged.append(_Item(item.changed, list(item.units), list(item.tokens)))
    return merged


def _anchor(groups: Sequence[_Item], index: int, duration: Decimal) -> Decimal:
    """Midpoint of the gap around an insert-only group."""
    left = next(
        (g.units[-1].end for g in reversed(groups[:index]) if g.units), Decimal(0)
    )
    right = next((g.units[0].start for g in groups[index + 1 :] if g.units), duration)
    return to_seconds((left + right) / 2)


def _build_plan(
    utterance_id: str, method: str, items: Sequence[_Item], duration: Decimal
) -> EditPlan:
    groups = _merge_changed(items)
    regions = []
    for index, group in enumerate(groups):
        if not group.changed:
            continue
        tokens = tuple(group.tokens)
        if group.units:
            span = (min(u.start for u in group.units), max(u.end for u in group.units))
            op = EditOp.REPLACE if tokens else EditOp.DELETE
            regions.append(EditRegion(op=op, orig_span=span, target_tokens=tokens))
        else:
            anchor = _anchor(groups, index, duration)
            regions.append(EditRegion(op=EditOp.INSERT, anchor=anchor, target_tokens=tokens))

    unchanged = []
    cursor = Decimal(0)
    for region in regions:
        if region.orig_span is None:
            continue
        if region.start > cursor:
            unchanged.append((cursor, region.start))
        cursor = max(cursor, region.end)
    if duration > cursor:
        unchanged.append((cursor, duration))

    return EditPlan(
        utterance_id=utterance_id,
        method=method,
        granularity=GRANULARITY[method],
        regions=tuple(regions),
        unchanged_spans=tuple(unchanged),
    )


def _plan_duration(latest_end: Decimal, duration: Optional[Decimal]) -> Decimal:
    if duration is None:
        return latest_end
    duration = to_seconds(duration)
    if duration < latest_end:
        raise InvariantViolation(
            f"duration {duration} is shorter than the transcript ({latest_end})"
        )
    return duration


def _items_from_alignment(
    alignment: Alignment, units: Sequence[TimedUnit], tokens: Sequence[str]
) -> list[_Item]:
    items = []
    for pair in alignment.pairs:
        item = _Item(changed=pair.op is not EditOp.UNCHANGE)
        if pair.hyp_index is not None:
            item.units.append(units[pair.hyp_index])
        if pair.ref_index is not None:
            item.tokens.append(tokens[pair.ref_index])
        items.append(item)
    return items


def plan_word_word(
    hyp: Transcript, target: Sequence[WordToken], duration: Optional[Decimal] = None
) -> EditPlan:
    """Word-level correction by word-level alignment.

    Raises:
        NotApplicable: For ctc transcripts.
        NoWordTier: When the transcript has no words.
    """
    if hyp.source == SOURCE_CTC:
        raise NotApplicable(METHOD_WORD_WORD, hyp.source)
    if hyp.words is None:
        raise NoWordTier(hyp.utterance_id)

    words = [w for w in hyp.words if not w.is_silence]
    tokens = [t.text for t in target]
    alignment = align([normalize_word(w.label) for w in words], tokens)
    items = _items_from_alignment(alignment, [w.unit for w in words], tokens)
    return _build_plan(
        hyp.utterance_id, METHOD_WORD_WORD, items, _plan_duration(transcript_end(hyp), duration)
    )


def plan_phone_phone(
    hyp_phones: Sequence[TimedUnit],
    target_phones: Sequence[Phone],
    utterance_id: str = "",
    duration: Optional[Decimal] = None,
) -> EditPlan:
    """Phone-level correction by stress-sensitive phone-level alignment.

    Raises:
        EmptyInput: When both sequences are empty.
    """
    units = spoken(hyp_phones)
    if not units and not target_phones:
        raise EmptyInput()

    tokens = [str(p) for p in target_phones]
    alignment = align([u.label for u in units], tokens)
    items = _items_from_alignment(alignment, units, tokens)
    latest_end = max((u.end for u in hyp_phones), default=Decimal(0))
    return _build_plan(
        utterance_id, METHOD_PHONE_PHONE, items, _plan_duration(latest_end, duration)
    )


def _hyp_word_labels(word: TimedWord, pron_dict: PronunciationDict) -> list[str]:
    labels = [p.label for p in spoken(word.phones)]
    if labels:
        return labels
    return [str(p) for p in lookup(pron_dict, WordToken(normalize_word(word.label)))]


def _word_tier_items(
    alignment: Alignment,
    words: Sequence[TimedWord],
    hyp_word: Sequence[int],
    target: Sequence[WordToken],
    ref_word: Sequence[int],
) -> list[_Item]:
    """Group target and hyp words that share aligned phones."""
    parent: dict[tuple[str, int], tuple[str, int]] = {}

    def find(node: tuple[str, int]) -> tuple[str, int]:
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    def nodes_of(pair: Any) -> list[tuple[str, int]]:
        nodes = []
        if pair.hyp_index is not None:
            nodes.append(("h", hyp_word[pair.hyp_index]))
        if pair.ref_index is not None:
            nodes.append(("t", ref_word[pair.ref_index]))
        return nodes

    for pair in alignment.pairs:
        nodes = nodes_of(pair)
        for node in nodes:
            parent.setdefault(node, node)
        if len(nodes) == 2:
            parent[find(nodes[0])] = find(nodes[1])

    last_position: dict[tuple[str, int], int] = {}
    for position, pair in enumerate(alignment.pairs):
        last_position[find(nodes_of(pair)[0])] = position

    # groups cover contiguous alignment positions, so interleaved words fold in
    groups: list[tuple[set[tuple[str, int]], list[bool]]] = []
    group_end = -1
    for position, pair in enumerate(alignment.pairs):
        nodes = nodes_of(pair)
        if position > group_end:
            groups.append((set(), [False]))
        group_end = max(group_end, last_position[find(nodes[0])])
        members, changed = groups[-1]
        members.update(nodes)
        changed[0] |= pair.op is not EditOp.UNCHANGE

    items = []
    for members, changed in groups:
        hyp_indices = sorted(i for kind, i in members if kind == "h")
        ref_indices = sorted(i for kind, i in members if kind == "t")
        items.append(
            _Item(
                changed=changed[0],
                units=[words[i].unit for i in hyp_indices],
                tokens=[target[i].text for i in ref_indices],
            )
        )
    return items


def _phone_tier_items(
    alignment: Alignment,
    units: Sequence[TimedUnit],
    target: Sequence[WordToken],
    ref_word: Sequence[int],
) -> list[_Item]:
    """Project a phone alignment onto target words when no word tier exists.

    Unmatched hyp phones join the preceding target word (the following one
    at the very start).
    """
    if not target:
        return [_Item(changed=True, units=[units[p.hyp_index]]) for p in alignment.pairs]

    slots = [_Item(changed=False, tokens=[word.text]) for word in target]
    current: Optional[int] = None
    pending = []
    for pair in alignment.pairs:
        if pair.ref_index is None and current is None:
            pending.append(pair)
            continue
        if pair.ref_index is not None:
            current = ref_word[pair.ref_index]
        for attached in [*pending, pair]:
            slot = slots[current]
            slot.changed |= attached.op is not EditOp.UNCHANGE
            if attached.hyp_index is not None:
                slot.units.append(units[attached.hyp_index])
        pending = []
    return slots


def plan_word_phone(
    hyp: Transcript,
    target_words: Sequence[WordToken],
    pron_dict: PronunciationDict,
    duration: Optional[Decimal] = None,
) -> EditPlan:
    """Word-level correction by phone-level alignment.

    Target phones come from the dictionary. With a word tier, edit spans are
    those of the recognized words sharing aligned phones with the target
    word; without one (ctc), spans are the union of the aligned hyp phones.

    Raises:
        MissingPronunciation: When a target word is not in the dictionary.
    """
    ref_labels: list[str] = []
    ref_word: list[int] = []
    for index, word in enumerate(target_words):
        phones = lookup(pron_dict, word)
        ref_labels.extend(str(p) for p in phones)
        ref_word.extend([index] * len(phones))

    if hyp.words is not None:
        words = [w for w in hyp.words if not w.is_silence]
        hyp_labels: list[str] = []
        hyp_word: list[int] = []
        for index, word in enumerate(words):
            labels = _hyp_word_labels(word, pron_dict)
            hyp_labels.extend(labels)
            hyp_word.extend([index] * len(labels))
        alignment = align(hyp_labels, ref_labels)
        items = _word_tier_items(alignment, words, hyp_word, target_words, ref_word)
    else:
        units = spoken(phone_sequence(hyp))
        alignment = align([u.label for u in units], ref_labels)
        items = _phone_tier_items(alignment, units, target_words, ref_word)

    return _build_plan(
        hyp.utterance_id, METHOD_WORD_PHONE, items, _plan_duration(transcript_end(hyp), duration)
    )


def make_plan(
    method: str,
    hyp: Transcript,
    target_words: Sequence[WordToken],
    pron_dict: Optional[PronunciationDict],
    duration: Optional[Decimal] = None,
) -> EditPlan:
    """Dispatch on the correction method name."""
    if method == METHOD_WORD_WORD:
        return plan_word_word(hyp, target_words, duration)
    if pron_dict is None:
        raise InputError(f"Method {method} needs a pronunciation dictionary")
    if method == METHOD_WORD_PHONE:
        return plan_word_phone(hyp, target_words, pron_dict, duration)
    if method == METHOD_PHONE_PHONE:
        return plan_phone_phone(
            phone_sequence(hyp),
            words_to_phones(pron_dict, target_words),
            hyp.utterance_id,
            duration,
        )
    raise InputError(f"Unknown correction method: {method}", method=method)


def emit_plan(plan: EditPlan) -> str:
    """Serialize a plan to its JSON document."""
    data = {
        "utterance_id": plan.utterance_id,
        "method": plan.method,
        "granularity": plan.granularity,
        "regions": [
            {
                "op": region.op.value,
                "orig_span": list(region.orig_span) if region.orig_span is not None else None,
                "anchor": region.anchor,
                "target_tokens": list(region.target_tokens),
            }
            for region in plan.regions
        ],
        "unchanged_spans": [list(span) for span in plan.unchanged_spans],
    }
    return json.dumps(data, indent=2, default=json_default) + "\n"


def plan_from_data(data: Any) -> EditPlan:
    try:
        return EditPlan.model_validate(data)
    except ValidationError as e:
        raise schema_error_from(e) from e


def parse_plan(document: str) -> EditPlan:
    """Parse and validate an EditPlan JSON document."""
    try:
        data = json.loads(document, parse_float=Decimal)
    except json.JSONDecodeError as e:
        raise SchemaError("$", str(e)) from e
    return plan_from_data(data)


def read_plan(path: Path) -> EditPlan:
    return plan_from_data(read_json_document(path))


def write_plan(plan: EditPlan, path: Path) -> Path:
    atomic_write_text(path, emit_plan(plan))
    return path
