"""Corpus readers, writers, and converters.

Covers the tab-separated token/tag format used for annotated data (one
token per line, blank line per sentence, ``-DOCSTART-`` line per document),
conversion of nested entity markup to first-level tags, and segmentation of
formatted text into recovery-training samples of random length.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from typing import IO, Iterable, Iterator, Sequence

from .capu import CapuSample, encode_labels
from .tokens import Document, Punct, Sentence, Token, _append_piece

NER_TAGS = ("O", "B-PER", "I-PER", "B-ORG", "I-ORG", "B-LOC", "I-LOC")
ENTITY_TYPES = ("PER", "ORG", "LOC")

DOCSTART = "-DOCSTART-"


class ParseError(ValueError):
    """Malformed input; carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _parse_token_column(text: str, line_no: int) -> Token:
    punct = Punct.NONE
    if text.endswith("."):
        text, punct = text[:-1], Punct.PERIOD
    elif text.endswith(","):
        text, punct = text[:-1], Punct.COMMA
    try:
        return Token.make(text, punct)
    except ValueError as e:
        raise ParseError(str(e), line_no) from None


def read_conll(source: IO[str] | str) -> list[Document]:
    """Parse tab-separated corpus data into documents.

    Each non-blank line is ``token<TAB>tag`` (or a bare token in untagged
    files; the first content line fixes which). A blank line ends a
    sentence and a ``-DOCSTART-`` line starts a new document; input without
    markers is a single document.
    """
    lines = source.splitlines() if isinstance(source, str) else source.read().splitlines()
    docs: list[Document] = []
    sentences: list[Sentence] = []
    tokens: list[Token] = []
    tags: list[str] = []
    tagged: bool | None = None
    saw_docstart = False

    def close_sentence(line_no: int) -> None:
        nonlocal tokens, tags
        if tokens:
            sentences.append(Sentence(tuple(tokens), tuple(tags) if tagged else None))
            tokens, tags = [], []

    def close_document(line_no: int) -> None:
        nonlocal sentences
        close_sentence(line_no)
        if sentences:
            docs.append(Document(tuple(sentences)))
            sentences = []
        elif saw_docstart:
            raise ParseError("document with no sentences", line_no)

    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            close_sentence(line_no)
            continue
        fields = line.split("\t")
        if fields[0] == DOCSTART:
            close_document(line_no)
            saw_docstart = True
            continue
        if tagged is None:
            tagged = len(fields) == 2
        if len(fields) != (2 if tagged else 1):
            raise ParseError(
                f"expected {2 if tagged else 1} tab-separated field(s), got {len(fields)}",
                line_no,
            )
        tokens.append(_parse_token_column(fields[0], line_no))
        if tagged:
            if fields[1] not in NER_TAGS:
                raise ParseError(f"unknown tag {fields[1]!r}", line_no)
            tags.append(fields[1])
    close_document(len(lines))
    return docs


def write_conll(docs: Sequence[Document], sink: IO[str]) -> None:
    """Write documents in the canonical byte-exact form.

    One ``-DOCSTART-`` line opens every document; exactly one tab separates
    token and tag; every sentence (and the marker line) is followed by one
    blank line. ``write_conll`` then ``read_conll`` round-trips exactly.
    """
    for doc in docs:
        tagged = doc.tagged
        sink.write(f"{DOCSTART}\tO\n\n" if tagged else f"{DOCSTART}\n\n")
        for sent in doc.sentences:
            for i, tok in enumerate(sent.tokens):
                if tagged:
                    sink.write(f"{tok.render()}\t{sent.tags[i]}\n")  # type: ignore[index]
                else:
                    sink.write(f"{tok.render()}\n")
            sink.write("\n")


def conll_to_string(docs: Sequence[Document]) -> str:
    import io

    buf = io.StringIO()
    write_conll(docs, buf)
    return buf.getvalue()


_XML_TOKEN = re.compile(r"<[^<>]*>|[^<>]+")
_OPEN_TAG = re.compile(r'<ENAMEX\s+TYPE="([^"]*)"\s*>\Z')
_CLOSE_TAG = "</ENAMEX>"


def convert_nested_xml(markup: str, stripped: Counter[str] | None = None) -> list[Document]:
    """Convert entity markup to first-level tagged documents.

    Each non-blank line becomes one sentence; blank lines separate
    documents. Only the outermost entity elements produce ``B-``/``I-``
    tags; nested elements are flattened into the enclosing span. Unbalanced
    markup and unknown entity types raise :class:`ParseError`.
    """
    docs: list[Document] = []
    sentences: list[Sentence] = []
    for line_no, line in enumerate(markup.splitlines(), start=1):
        if not line.strip():
            if sentences:
                docs.append(Document(tuple(sentences)))
                sentences = []
            continue
        sentence = _convert_line(line, line_no, stripped)
        if sentence is not None:
            sentences.append(sentence)
    if sentences:
        docs.append(Document(tuple(sentences)))
    return docs


def _convert_line(line: str, line_no: int, stripped: Counter[str] | None) -> Sentence | None:
    tokens: list[Token] = []
    spans: list[tuple[str, int, int]] = []  # (type, first token, one past last)
    stack: list[tuple[str, int]] = []
    for part in _XML_TOKEN.findall(line):
        if part.startswith("<"):
            if part == _CLOSE_TAG:
                if not stack:
                    raise ParseError("closing tag without an open entity", line_no)
                etype, start = stack.pop()
                if not stack and start < len(tokens):
                    spans.append((etype, start, len(tokens)))
            else:
                m = _OPEN_TAG.match(part)
                if m is None:
                    raise ParseError(f"unsupported markup: {part!r}", line_no)
                etype = m.group(1)
                if etype not in ENTITY_TYPES:
                    raise ParseError(f"unknown entity type {etype!r}", line_no)
                stack.append((etype, len(tokens)))
        else:
            for piece in part.split():
                _append_piece(tokens, piece, stripped)
    if stack:
        raise ParseError("entity left open at end of line", line_no)
    if not tokens:
        return None
    tags = ["O"] * len(tokens)
    for etype, start, end in spans:
        tags[start] = f"B-{etype}"
        for i in range(start + 1, end):
            tags[i] = f"I-{etype}"
    return Sentence(tuple(tokens), tuple(tags))


def segment_corpus(tokens: Iterable[Token], seed: int) -> Iterator[CapuSample]:
    """Cut a formatted token stream into recovery-training samples.

    Segment lengths are drawn uniformly from [4, 60] by a generator seeded
    with ``seed``; segments are consecutive and non-overlapping, and a final
    fragment shorter than 4 tokens is dropped.
    """
    rng = random.Random(seed)
    it = iter(tokens)
    while True:
        want = rng.randint(4, 60)
        segment: list[Token] = []
        for tok in it:
            segment.append(tok)
            if len(segment) == want:
                break
        if len(segment) < 4:
            return
        words, labels = encode_labels(segment)
        yield CapuSample(tuple(words), tuple(labels))
        if len(segment) < want:
            return
