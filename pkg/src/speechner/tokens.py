"""Token-level text normalization shared by every pipeline stage.

A token is a whitespace-delimited word together with its capitalization
pattern and an optional trailing sentence mark. Only "." and "," are
modelled as marks; every other punctuation character is stripped during
normalization and counted, so callers can emit a stripping summary.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum


class CaseClass(Enum):
    LOWER = "LOWER"
    CAP_FIRST = "CAP_FIRST"
    ALL_CAPS = "ALL_CAPS"
    MIXED = "MIXED"


class Punct(Enum):
    NONE = "NONE"
    COMMA = "COMMA"
    PERIOD = "PERIOD"


PUNCT_CHAR = {Punct.NONE: "", Punct.COMMA: ",", Punct.PERIOD: "."}
_MARK_PUNCT = {",": Punct.COMMA, ".": Punct.PERIOD}


def classify_case(surface: str) -> CaseClass:
    """Derive the capitalization class of a word.

    LOWER when no letter is uppercase (including letterless surfaces),
    ALL_CAPS when more than one letter and all of them uppercase,
    CAP_FIRST when the first letter is uppercase and the rest lowercase,
    MIXED otherwise.
    """
    letters = [c for c in surface if c.isalpha()]
    if not any(c.isupper() for c in letters):
        return CaseClass.LOWER
    if len(letters) > 1 and all(c.isupper() for c in letters):
        return CaseClass.ALL_CAPS
    if letters[0].isupper() and all(c.islower() for c in letters[1:]):
        return CaseClass.CAP_FIRST
    return CaseClass.MIXED


@dataclass(frozen=True)
class Token:
    """A single word with its case class and trailing sentence mark.

    The surface never contains whitespace and never ends with "." or ","
    (marks live in ``punct_after``), and ``case_class`` always equals
    ``classify_case(surface)``.
    """

    surface: str
    case_class: CaseClass
    punct_after: Punct = Punct.NONE

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if any(c.isspace() for c in self.surface):
            raise ValueError(f"token surface contains whitespace: {self.surface!r}")
        if self.surface[-1] in _MARK_PUNCT:
            raise ValueError(f"token surface ends with a sentence mark: {self.surface!r}")
        derived = classify_case(self.surface)
        if derived is not self.case_class:
            raise ValueError(
                f"case class {self.case_class.value} does not match surface "
                f"{self.surface!r} (expected {derived.value})"
            )

    @classmethod
    def make(cls, surface: str, punct_after: Punct = Punct.NONE) -> "Token":
        """Build a token, deriving the case class from the surface."""
        return cls(surface, classify_case(surface), punct_after)

    def render(self) -> str:
        """Surface with its trailing mark reattached."""
        return self.surface + PUNCT_CHAR[self.punct_after]


@dataclass(frozen=True)
class Sentence:
    """A non-empty token sequence, optionally labelled one tag per token."""

    tokens: tuple[Token, ...]
    tags: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("sentence must contain at least one token")
        if self.tags is not None:
            object.__setattr__(self, "tags", tuple(self.tags))
            if len(self.tags) != len(self.tokens):
                raise ValueError(
                    f"tag count {len(self.tags)} != token count {len(self.tokens)}"
                )


@dataclass(frozen=True)
class Document:
    """An ordered group of sentences scored and aligned as one unit."""

    sentences: tuple[Sentence, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))
        if not self.sentences:
            raise ValueError("document must contain at least one sentence")
        tagged = [s.tags is not None for s in self.sentences]
        if any(tagged) and not all(tagged):
            raise ValueError("document mixes tagged and untagged sentences")

    @property
    def tagged(self) -> bool:
        return self.sentences[0].tags is not None

    def tokens(self) -> list[Token]:
        """The document's token stream, sentence boundaries dropped."""
        return [t for s in self.sentences for t in s.tokens]

    def tags(self) -> list[str]:
        if not self.tagged:
            raise ValueError("document has no tags")
        return [t for s in self.sentences for t in s.tags]  # type: ignore[union-attr]


def normalize_text(raw: str, stripped: Counter[str] | None = None) -> list[Token]:
    """Tokenize raw text into normalized tokens.

    The text is NFC-composed and split on whitespace. For each piece,
    punctuation characters other than "." and "," are removed (and counted
    into ``stripped`` when given); a trailing run of "." / "," detaches into
    ``punct_after``, keeping the outermost mark. A piece that is nothing but
    marks attaches its mark to the preceding token when that token has none.
    """
    tokens: list[Token] = []
    for piece in unicodedata.normalize("NFC", raw).split():
        _append_piece(tokens, piece, stripped)
    return tokens


def _append_piece(tokens: list[Token], piece: str, stripped: Counter[str] | None) -> None:
    kept: list[str] = []
    for ch in piece:
        if ch in _MARK_PUNCT or not unicodedata.category(ch).startswith("P"):
            kept.append(ch)
        elif stripped is not None:
            stripped[ch] += 1
    mark = Punct.NONE
    end = len(kept)
    while end and kept[end - 1] in _MARK_PUNCT:
        ch = kept[end - 1]
        if mark is Punct.NONE:
            mark = _MARK_PUNCT[ch]  # the outermost mark survives
        elif stripped is not None:
            stripped[ch] += 1
        end -= 1
    surface = "".join(kept[:end])
    if surface:
        tokens.append(Token.make(surface, mark))
    elif mark is not Punct.NONE:
        if tokens and tokens[-1].punct_after is Punct.NONE:
            tokens[-1] = replace(tokens[-1], punct_after=mark)
        elif stripped is not None:
            stripped[PUNCT_CHAR[mark]] += 1


def strip_formatting(tokens: list[Token]) -> list[str]:
    """Lowercased surfaces with all marks discarded (the ASR-like view)."""
    return [t.surface.lower() for t in tokens]


def render_text(tokens: list[Token]) -> str:
    """Reassemble tokens into display text, marks attached, single spaces."""
    return " ".join(t.render() for t in tokens)


def normalization_summary(stripped: Counter[str]) -> str:
    """Line-oriented stripping report: one ``char<TAB>count`` line per char."""
    return "\n".join(f"{ch}\t{n}" for ch, n in sorted(stripped.items()))
