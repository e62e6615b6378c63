"""BIO named-entity tagging for person/organization/location spans.

The tagger shares the CRF core with the recovery model but decodes under a
hard transition mask, so its output is always strictly BIO-valid: an I-X
may only continue a same-type B-X/I-X. Scoring-side helpers stay lenient,
repairing orphan continuations into span starts before decoding entities.
Case and trailing-mark classes of the current and neighbouring tokens
enter as explicit features, which is how restored formatting reaches the
tagger.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .crf import CrfModel, FeatureTemplate, FeatureSeq, LabelSet, TrainConfig, extract_features
from .crf import load_model, save_model, train
from .tokens import Document, Punct, Token

ENTITY_TYPES = ("PER", "ORG", "LOC")
NER_LABELS = ("O", "B-PER", "I-PER", "B-ORG", "I-ORG", "B-LOC", "I-LOC")
NER_LABEL_SET = LabelSet(NER_LABELS)

NER_TEMPLATE = FeatureTemplate(
    window=2, lowercase=False, affixes=3, shape=False, position=True, pairs=True
)


@dataclass(frozen=True)
class Entity:
    """A typed span over token indices, end exclusive."""

    type: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.type not in ENTITY_TYPES:
            raise ValueError(f"unknown entity type: {self.type!r}")
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span [{self.start}, {self.end})")


def _split_tag(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, _, etype = tag.partition("-")
    return prefix, etype


def validate_bio(tags: Sequence[str]) -> list[tuple[int, str]]:
    """Strict BIO violations as ``(index, message)`` pairs; empty means ok."""
    violations: list[tuple[int, str]] = []
    prev = "O"
    for i, tag in enumerate(tags):
        if tag not in NER_LABELS:
            violations.append((i, f"unknown tag {tag!r}"))
            prev = "O"
            continue
        prefix, etype = _split_tag(tag)
        if prefix == "I":
            prev_prefix, prev_type = _split_tag(prev)
            if prev_prefix == "O" or prev_type != etype:
                violations.append((i, f"{tag} follows {prev}"))
        prev = tag
    return violations


def repair_bio(tags: Sequence[str]) -> list[str]:
    """Lenient repair: an orphan I-X becomes B-X; everything else stands."""
    out: list[str] = []
    prev = "O"
    for tag in tags:
        prefix, etype = _split_tag(tag)
        if prefix == "I":
            prev_prefix, prev_type = _split_tag(prev)
            if prev_prefix == "O" or prev_type != etype:
                tag = f"B-{etype}"
        out.append(tag)
        prev = tag
    return out


def decode_entities(tags: Sequence[str]) -> list[Entity]:
    """Extract typed spans from tags, repairing orphan continuations first."""
    entities: list[Entity] = []
    start: int | None = None
    cur_type: str | None = None
    for i, tag in enumerate(repair_bio(tags)):
        prefix, etype = _split_tag(tag)
        if prefix == "I" and etype == cur_type:
            continue
        if cur_type is not None:
            entities.append(Entity(cur_type, start, i))  # type: ignore[arg-type]
        start, cur_type = (i, etype) if prefix == "B" else (None, None)
    if cur_type is not None:
        entities.append(Entity(cur_type, start, len(tags)))  # type: ignore[arg-type]
    return entities


def entities_to_tags(entities: Sequence[Entity], length: int) -> list[str]:
    """Render non-overlapping entities back into a BIO tag sequence."""
    tags = ["O"] * length
    occupied = [False] * length
    for ent in entities:
        if ent.end > length:
            raise ValueError(f"entity {ent} extends past length {length}")
        if any(occupied[ent.start : ent.end]):
            raise ValueError(f"overlapping entity {ent}")
        for i in range(ent.start, ent.end):
            occupied[i] = True
            tags[i] = f"I-{ent.type}"
        tags[ent.start] = f"B-{ent.type}"
    return tags


def _build_masks() -> tuple[np.ndarray, np.ndarray]:
    k = len(NER_LABELS)
    trans = np.zeros((k, k))
    init = np.zeros(k)
    for j, tag in enumerate(NER_LABELS):
        prefix, etype = _split_tag(tag)
        if prefix != "I":
            continue
        init[j] = -np.inf
        for i, prev in enumerate(NER_LABELS):
            prev_prefix, prev_type = _split_tag(prev)
            if prev_prefix == "O" or prev_type != etype:
                trans[i, j] = -np.inf
    trans.setflags(write=False)
    init.setflags(write=False)
    return trans, init


BIO_TRANSITION_MASK, BIO_INITIAL_MASK = _build_masks()


def sentence_features(
    tokens: Sequence[Token],
    template: FeatureTemplate = NER_TEMPLATE,
    formatting: bool = True,
) -> FeatureSeq:
    """Word-level features over lowercased surfaces, plus (when enabled)
    the case class and trailing mark of the token and its neighbours."""
    words = [t.surface.lower() for t in tokens]
    n = len(tokens)
    seq: FeatureSeq = []
    for i in range(n):
        feats = extract_features(words, i, template)
        if formatting:
            for d in (-1, 0, 1):
                j = i + d
                if 0 <= j < n:
                    feats.append(f"case{d}={tokens[j].case_class.value}")
                    feats.append(f"punct{d}={tokens[j].punct_after.value}")
                else:
                    feats.append(f"case{d}=<pad>")
                    feats.append(f"punct{d}=<pad>")
        seq.append(feats)
    return seq


def split_sentences(tokens: Sequence[Token]) -> list[list[Token]]:
    """Cut a token stream after every period mark; no marks, one piece."""
    pieces: list[list[Token]] = []
    cur: list[Token] = []
    for tok in tokens:
        cur.append(tok)
        if tok.punct_after is Punct.PERIOD:
            pieces.append(cur)
            cur = []
    if cur:
        pieces.append(cur)
    return pieces


@dataclass(frozen=True)
class NerModel:
    """A trained entity tagger; decoding is masked to strict BIO."""

    crf: CrfModel
    formatting_features: bool = True

    def __post_init__(self) -> None:
        if tuple(self.crf.label_set.labels) != NER_LABELS:
            raise ValueError("model label set is not the 7-label BIO set")

    def tag(self, tokens: Sequence[Token]) -> list[str]:
        """Tag one sentence; the output always passes :func:`validate_bio`."""
        if not tokens:
            raise ValueError("empty input sentence")
        feats = sentence_features(tokens, self.crf.templates, self.formatting_features)
        names, _ = self.crf.viterbi(
            feats, transition_mask=BIO_TRANSITION_MASK, initial_mask=BIO_INITIAL_MASK
        )
        return names

    def tag_stream(self, tokens: Sequence[Token]) -> list[str]:
        """Tag a token stream sentence-by-sentence, splitting at periods."""
        tags: list[str] = []
        for piece in split_sentences(tokens):
            tags.extend(self.tag(piece))
        return tags

    def save(self, path: str) -> None:
        save_model(
            self.crf,
            path,
            header={"task": "ner", "formatting_features": self.formatting_features},
        )

    @classmethod
    def load(cls, path: str) -> "NerModel":
        crf, extras = load_model(path)
        if extras.get("task") != "ner":
            raise ValueError(f"not an entity model: task={extras.get('task')!r}")
        return cls(crf, bool(extras.get("formatting_features", True)))


def train_ner(
    docs: Sequence[Document],
    config: TrainConfig | None = None,
    template: FeatureTemplate = NER_TEMPLATE,
    formatting_features: bool = True,
) -> tuple[NerModel, list[float]]:
    """Fit the entity tagger on tagged documents.

    Training data must be strictly BIO-valid; a violation raises with the
    offending document, sentence, and position named.
    """
    data: list[tuple[FeatureSeq, list[str]]] = []
    for d_i, doc in enumerate(docs):
        for s_i, sent in enumerate(doc.sentences):
            if sent.tags is None:
                raise ValueError(f"document {d_i}, sentence {s_i}: missing tags")
            violations = validate_bio(sent.tags)
            if violations:
                i, msg = violations[0]
                raise ValueError(
                    f"document {d_i}, sentence {s_i}: invalid BIO at position {i}: {msg}"
                )
            data.append(
                (sentence_features(sent.tokens, template, formatting_features), list(sent.tags))
            )
    if not data:
        raise ValueError("no training sentences")
    model, trace = train(data, NER_LABEL_SET, template, config)
    return NerModel(model, formatting_features), trace
