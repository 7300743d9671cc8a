"""ARPAbet phones, pronunciation dictionaries and target-text tokenization."""

import re
import string
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from types import MappingProxyType
from typing import Optional

from .errors import InputError, MissingFile

VOWELS = frozenset(
    ["AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW"]
)
CONSONANTS = frozenset(
    [
        "B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L", "M", "N", "NG",
        "P", "R", "S", "SH", "T", "TH", "V", "W", "Y", "Z", "ZH",
    ]
)
PHONE_INVENTORY = VOWELS | CONSONANTS

COMMENT_PREFIX = ";;;"

_PHONE_RE = re.compile(r"^([A-Z]+)([012])?$")
_VARIANT_RE = re.compile(r"^(.+?)\((\d+)\)$")
_PUNCTUATION = string.punctuation + "“”‘’«»…—–"


class UnknownPhone(InputError):
    """Symbol outside the ARPAbet inventory."""

    def __init__(self, label: str) -> None:
        super().__init__(f"Unknown phone symbol: {label!r}", label=label)


class MalformedLine(InputError):
    """Dictionary line that cannot be loaded."""

    def __init__(self, line_number: int, reason: str) -> None:
        super().__init__(f"Line {line_number}: {reason}", line=line_number)


class MissingPronunciation(InputError):
    """Word absent from the pronunciation dictionary."""

    def __init__(self, word: str) -> None:
        super().__init__(f"No pronunciation for word: {word!r}", word=word)


@dataclass(frozen=True)
class Phone:
    """ARPAbet phone with optional stress digit."""

    base: str
    stress: Optional[int] = None

    def __post_init__(self) -> None:
        if self.base not in PHONE_INVENTORY:
            raise UnknownPhone(self.base)
        if self.stress is not None and (self.base not in VOWELS or self.stress not in (0, 1, 2)):
            raise UnknownPhone(f"{self.base}{self.stress}")

    @classmethod
    def parse(cls, text: str) -> "Phone":
        """Parse the textual form, e.g. "AH0" or "W"."""
        match = _PHONE_RE.match(text)
        if not match:
            raise UnknownPhone(text)
        base, digit = match.groups()
        return cls(base, int(digit) if digit is not None else None)

    @property
    def is_vowel(self) -> bool:
        return self.base in VOWELS

    def __str__(self) -> str:
        return self.base if self.stress is None else f"{self.base}{self.stress}"


@dataclass(frozen=True)
class WordToken:
    """Normalized word of the target text."""

    text: str

    def __str__(self) -> str:
        return self.text


Pronunciation = tuple[Phone, ...]


@dataclass(frozen=True)
class PronunciationDict:
    """Word -> ordered pronunciation variants. Keys are lowercase."""

    entries: Mapping[str, tuple[Pronunciation, ...]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __contains__(self, word: object) -> bool:
        key = word.text if isinstance(word, WordToken) else word
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def words(self) -> list[str]:
        return list(self.entries)


def is_phone_label(label: str) -> bool:
    """Check whether a label is a valid phone textual form."""
    try:
        Phone.parse(label)
    except UnknownPhone:
        return False
    return True


def normalize_word(raw: str) -> str:
    """Lowercase and strip surrounding punctuation from one token."""
    return raw.lower().strip(_PUNCTUATION)


def normalize_text(raw: str) -> list[WordToken]:
    """Split raw text into normalized word tokens.

    Intra-word apostrophes survive ("don't"); leading/trailing punctuation
    does not.
    """
    tokens = []
    for piece in raw.split():
        word = normalize_word(piece)
        if word:
            tokens.append(WordToken(word))
    return tokens


def strip_stress(phone: Phone) -> Phone:
    """Drop the stress digit; consonants come back unchanged."""
    if phone.stress is None:
        return phone
    return replace(phone, stress=None)


def load_dictionary(lines: Iterable[str]) -> PronunciationDict:
    """Load a plain-text ARPAbet dictionary.

    Format: ``WORD  PH1 PH2 ...``, variants as ``WORD(2)  ...``, comment
    lines start with ``;;;``.

    Raises:
        MalformedLine: On a line without phones or with unknown phone symbols.
    """
    entries: dict[str, list[Pronunciation]] = {}
    for line_number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(COMMENT_PREFIX):
            continue

        head, *symbols = stripped.split()
        if not symbols:
            raise MalformedLine(line_number, f"no phones for {head!r}")

        variant = _VARIANT_RE.match(head)
        word = (variant.group(1) if variant else head).lower()

        try:
            phones = tuple(Phone.parse(symbol) for symbol in symbols)
        except UnknownPhone as e:
            raise MalformedLine(line_number, e.message) from e

        entries.setdefault(word, []).append(phones)

    return PronunciationDict({word: tuple(variants) for word, variants in entries.items()})


def load_dictionary_file(path: Path) -> PronunciationDict:
    """Load a UTF-8 dictionary file."""
    if not path.is_file():
        raise MissingFile(str(path))
    with path.open(encoding="utf-8") as handle:
        return load_dictionary(handle)


def dump_dictionary(pron_dict: PronunciationDict) -> Iterator[str]:
    """Serialize a dictionary back to its line format."""
    for word, variants in pron_dict.entries.items():
        for index, phones in enumerate(variants, start=1):
            head = word.upper() if index == 1 else f"{word.upper()}({index})"
            yield f"{head}  {' '.join(str(p) for p in phones)}"


def lookup(pron_dict: PronunciationDict, word: WordToken) -> list[Phone]:
    """Return the first pronunciation variant of a word.

    Raises:
        MissingPronunciation: If the word is not in the dictionary.
    """
    variants = pron_dict.entries.get(word.text)
    if not variants:
        raise MissingPronunciation(word.text)
    return list(variants[0])


def words_to_phones(pron_dict: PronunciationDict, words: Sequence[WordToken]) -> list[Phone]:
    """Dictionary G2P of a word sequence."""
    phones: list[Phone] = []
    for word in words:
        phones.extend(lookup(pron_dict, word))
    return phones
