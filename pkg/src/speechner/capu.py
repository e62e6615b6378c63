"""Capitalization and punctuation recovery as joint 9-label tagging.

Each word of an unformatted (lowercase, mark-free) stream receives one of
nine labels: a case action (keep lower, capitalize first letter, uppercase
all) crossed with a trailing mark (none, comma, period). Encoding a
formatted token sequence to (lowercase words, labels) and decoding back is
the identity for everything except MIXED-case words, which are not
representable and round-trip through their closest case action.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .crf import CrfModel, FeatureTemplate, FeatureSeq, LabelSet, TrainConfig, extract_features
from .crf import load_model, save_model, train
from .tokens import CaseClass, Punct, Token, strip_formatting

CAPU_CASES = (CaseClass.LOWER, CaseClass.CAP_FIRST, CaseClass.ALL_CAPS)
CAPU_PUNCTS = (Punct.NONE, Punct.COMMA, Punct.PERIOD)


@dataclass(frozen=True)
class CapuLabel:
    """One of the nine case-action x trailing-mark combinations."""

    case: CaseClass
    punct: Punct

    def __post_init__(self) -> None:
        if self.case not in CAPU_CASES:
            raise ValueError(f"case {self.case} is not a recoverable case action")

    @property
    def name(self) -> str:
        return f"{self.case.value}+{self.punct.value}"

    @classmethod
    def parse(cls, name: str) -> "CapuLabel":
        case_name, _, punct_name = name.partition("+")
        return cls(CaseClass(case_name), Punct(punct_name))


# Fixed label order; index 0 is the identity action (keep lower, no mark).
CAPU_LABELS: tuple[CapuLabel, ...] = tuple(
    CapuLabel(c, p) for c in CAPU_CASES for p in CAPU_PUNCTS
)
CAPU_LABEL_SET = LabelSet(tuple(l.name for l in CAPU_LABELS))

CAPU_TEMPLATE = FeatureTemplate(
    window=2, lowercase=False, affixes=3, shape=False, position=True, pairs=True
)

# Closed-class words that rarely precede or carry a sentence mark; used as
# punctuation-candidate signals alongside the position-in-chunk buckets.
_FUNCTION_WORDS = frozenset(
    "và của là các những ở tại cho với theo về từ đã sẽ đang khi trong một "
    "này đó có được người không rất cũng như để mà".split()
)
# Words that frequently open a sentence, independent of what they name.
_SENTENCE_OPENERS = frozenset(
    "theo tuy sau trong hôm ngày ông bà nếu đây hiện sáng chiều cuối".split()
)


@dataclass(frozen=True)
class CapuSample:
    """A training segment: lowercase words and their recovery labels."""

    words: tuple[str, ...]
    labels: tuple[CapuLabel, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.words) != len(self.labels):
            raise ValueError("words and labels must have equal length")
        if not 4 <= len(self.words) <= 60:
            raise ValueError(f"sample length {len(self.words)} outside [4, 60]")


def encode_labels(formatted: Sequence[Token]) -> tuple[list[str], list[CapuLabel]]:
    """Split formatted tokens into lowercase words plus recovery labels.

    MIXED-case words map to CAP_FIRST when their first letter is uppercase,
    LOWER otherwise (the documented lossy case).
    """
    words = strip_formatting(list(formatted))
    labels: list[CapuLabel] = []
    for tok in formatted:
        case = tok.case_class
        if case is CaseClass.MIXED:
            first = next((c for c in tok.surface if c.isalpha()), "")
            case = CaseClass.CAP_FIRST if first.isupper() else CaseClass.LOWER
        labels.append(CapuLabel(case, tok.punct_after))
    return words, labels


def _apply_case(word: str, case: CaseClass) -> str:
    if case is CaseClass.ALL_CAPS:
        return word.upper()
    if case is CaseClass.CAP_FIRST:
        for i, ch in enumerate(word):
            if ch.isalpha():
                return word[:i] + ch.upper() + word[i + 1 :]
    return word


def decode_labels(words: Sequence[str], labels: Sequence[CapuLabel]) -> list[Token]:
    """Apply recovery labels to lowercase words, producing formatted tokens."""
    if len(words) != len(labels):
        raise ValueError(f"length mismatch: {len(words)} words vs {len(labels)} labels")
    return [
        Token.make(_apply_case(w, lab.case), lab.punct) for w, lab in zip(words, labels)
    ]


def sample_features(words: Sequence[str], template: FeatureTemplate = CAPU_TEMPLATE) -> FeatureSeq:
    """Per-word features: the shared word templates plus position-in-chunk
    buckets, neighbouring function-word flags, and sentence-opener flags."""
    n = len(words)
    seq: FeatureSeq = []
    for i, w in enumerate(words):
        feats = extract_features(words, i, template)
        feats.append(f"pb={min(i, 4)}")
        feats.append(f"pe={min(n - 1 - i, 4)}")
        if w in _FUNCTION_WORDS:
            feats.append("fw0")
        if i > 0 and words[i - 1] in _FUNCTION_WORDS:
            feats.append("fw-1")
        if i + 1 < n and words[i + 1] in _FUNCTION_WORDS:
            feats.append("fw+1")
        if w in _SENTENCE_OPENERS:
            feats.append("so0")
        if i + 1 < n and words[i + 1] in _SENTENCE_OPENERS:
            feats.append("so+1")
        seq.append(feats)
    return seq


@dataclass(frozen=True)
class CapuModel:
    """A trained recovery tagger over the nine-label set."""

    crf: CrfModel

    def __post_init__(self) -> None:
        if tuple(self.crf.label_set.labels) != CAPU_LABEL_SET.labels:
            raise ValueError("model label set is not the 9-label recovery set")

    def format_tokens(self, words: Sequence[str]) -> list[Token]:
        """Restore case and marks on a lowercase word sequence."""
        if not words:
            raise ValueError("empty input sequence")
        words = [w for w in words]
        names, _ = self.crf.viterbi(sample_features(words, self.crf.templates))
        return decode_labels(words, [CapuLabel.parse(n) for n in names])

    def save(self, path: str) -> None:
        save_model(self.crf, path, header={"task": "capu"})

    @classmethod
    def load(cls, path: str) -> "CapuModel":
        crf, extras = load_model(path)
        if extras.get("task") != "capu":
            raise ValueError(f"not a recovery model: task={extras.get('task')!r}")
        return cls(crf)


def train_capu(
    samples: Iterable[CapuSample],
    config: TrainConfig | None = None,
    template: FeatureTemplate = CAPU_TEMPLATE,
) -> tuple[CapuModel, list[float]]:
    """Fit the recovery tagger on segmented samples."""
    data = [
        (sample_features(s.words, template), [l.name for l in s.labels]) for s in samples
    ]
    if not data:
        raise ValueError("no training samples")
    model, trace = train(data, CAPU_LABEL_SET, template, config)
    return CapuModel(model), trace
