import random

import pytest
from hypothesis import given, settings, strategies as st

from speechner.capu import decode_labels, CapuLabel
from speechner.chunks import (
    Chunk,
    ChunkConfig,
    ChunkStream,
    format_chunks,
    merge_chunks,
    split_chunks,
    stream_format,
)
from speechner.tokens import CaseClass, Punct, Token


def identity(tokens):
    return list(tokens)


def test_config_validation():
    ChunkConfig(6, 2)
    with pytest.raises(ValueError):
        ChunkConfig(6, 0)
    with pytest.raises(ValueError):
        ChunkConfig(6, 6)
    with pytest.raises(ValueError):
        ChunkConfig(0, 0)
    assert ChunkConfig(40, 10).stride == 30


def test_split_formula_case():
    chunks = split_chunks(list(range(10)), ChunkConfig(6, 2))
    assert [(c.start, len(c.tokens)) for c in chunks] == [(0, 6), (4, 6), (8, 2)]
    # oracle: position p is in chunk i iff i*S <= p < i*S + L
    for i, c in enumerate(chunks):
        assert c.start == i * 4
        for p in range(10):
            assert (c.start <= p < c.start + 6) == (p in range(c.start, c.start + len(c.tokens)))


def test_split_single_chunk_when_short():
    for n in (1, 5, 6):
        chunks = split_chunks(list(range(n)), ChunkConfig(6, 2))
        assert len(chunks) == 1
        assert chunks[0] == Chunk(0, tuple(range(n)))
    assert split_chunks([], ChunkConfig(6, 2)) == []


def test_split_coverage_identity():
    tokens = list(range(23))
    cfg = ChunkConfig(6, 2)
    chunks = split_chunks(tokens, cfg)
    rebuilt = []
    for c in chunks[:-1]:
        rebuilt.extend(c.tokens[: cfg.stride])
    rebuilt.extend(chunks[-1].tokens)
    assert rebuilt == tokens


def test_merge_single_chunk_verbatim():
    assert merge_chunks([(0, ["a", "b", "c"])]) == ["a", "b", "c"]
    assert merge_chunks([]) == []


def test_merge_centrality_winners():
    # N=10, L=6, K=2: position 4 stays with chunk 0, position 5 moves to chunk 1
    chunk0 = [(0, i) for i in range(6)]
    chunk1 = [(1, i) for i in range(4, 10)]
    chunk2 = [(2, i) for i in range(8, 10)]
    merged = merge_chunks([(0, chunk0), (4, chunk1), (8, chunk2)])
    owners = [c for c, _ in merged]
    assert owners[4] == 0 and owners[5] == 1
    # oracle: exhaustive centrality computation per position
    chunks = [(0, chunk0), (4, chunk1), (8, chunk2)]
    for p in range(10):
        best = None
        for idx, (off, toks) in enumerate(chunks):
            if off <= p < off + len(toks):
                c = min(p - off, off + len(toks) - 1 - p)
                if best is None or c > best[0]:
                    best = (c, idx)
        assert owners[p] == best[1]


def test_merge_boundary_words_replaced_by_mid_chunk_versions():
    # A formatter that only works away from chunk edges: the merged stream
    # must take each overlap word from the chunk where it sits mid-chunk.
    words = "hôm nay tại chính phủ có cuộc họp báo lớn".split()
    cfg = ChunkConfig(6, 4)  # stride 2: "tại chính" ends chunk 0, mid chunk 1

    def edge_blind(tokens):
        out = []
        for j, w in enumerate(tokens):
            if min(j, len(tokens) - 1 - j) >= 2:  # confident only mid-chunk
                case = CaseClass.CAP_FIRST if w == "chính" else CaseClass.LOWER
                punct = Punct.COMMA if w == "tại" else Punct.NONE
                out.append(decode_labels([w], [CapuLabel(case, punct)])[0])
            else:
                out.append(Token.make(w))
        return out

    merged = format_chunks(edge_blind, words, cfg)
    by_word = {t.surface.lower(): t for t in merged}
    assert by_word["tại"].punct_after is Punct.COMMA
    assert by_word["chính"].surface == "Chính"


def test_merge_geometry_errors():
    with pytest.raises(ValueError):
        merge_chunks([(1, ["a", "b"])])  # must start at 0
    with pytest.raises(ValueError):
        merge_chunks([(0, ["a"] * 6), (3, ["b"] * 6), (8, ["c"] * 2)])  # uneven stride
    with pytest.raises(ValueError):
        merge_chunks([(0, ["a"] * 6), (4, ["b"] * 5), (8, ["c"] * 2)])  # bad middle length
    with pytest.raises(ValueError):
        merge_chunks([(0, ["a"] * 4), (4, ["b"] * 4)])  # no overlap


def test_format_chunks_checks_length_preservation():
    with pytest.raises(ValueError):
        format_chunks(lambda toks: toks[:-1], list(range(20)), ChunkConfig(6, 2))


def _random_case(rng):
    n = rng.randint(0, 120)
    tokens = [f"w{rng.randint(0, 30)}" for _ in range(n)]
    length = rng.randint(4, 64)
    overlap = rng.randint(1, length - 1)
    return tokens, ChunkConfig(length, overlap)


def test_stream_equals_batch_randomized():
    rng = random.Random(0)
    for _ in range(150):
        tokens, cfg = _random_case(rng)
        batch = format_chunks(identity, tokens, cfg)
        streamed = list(stream_format(identity, iter(tokens), cfg))
        assert streamed == batch == tokens


def test_per_word_formatter_matches_unchunked():
    rng = random.Random(1)

    def shout(tokens):
        return [t.upper() for t in tokens]

    for _ in range(100):
        tokens, cfg = _random_case(rng)
        assert format_chunks(shout, tokens, cfg) == shout(tokens)
        assert list(stream_format(shout, iter(tokens), cfg)) == shout(tokens)


def test_stream_position_dependent_still_equals_batch():
    # even for a formatter that depends on chunk-local position
    def positional(tokens):
        return [f"{w}@{j}" for j, w in enumerate(tokens)]

    rng = random.Random(2)
    for _ in range(100):
        tokens, cfg = _random_case(rng)
        assert list(stream_format(positional, iter(tokens), cfg)) == format_chunks(
            positional, tokens, cfg
        )


@given(
    st.lists(st.integers(0, 9), min_size=0, max_size=200),
    st.integers(4, 64),
    st.data(),
)
@settings(max_examples=60, deadline=None)
def test_stream_equals_batch_property(tokens, length, data):
    overlap = data.draw(st.integers(1, length - 1))
    cfg = ChunkConfig(length, overlap)
    assert list(stream_format(identity, iter(tokens), cfg)) == format_chunks(
        identity, tokens, cfg
    )


def test_stream_memory_bounded():
    cfg = ChunkConfig(16, 5)
    stream = ChunkStream(identity, cfg)
    out = list(stream.process(iter(range(5000))))
    assert out == list(range(5000))
    assert stream.max_buffered <= 2 * cfg.chunk_len


def test_stream_formatter_length_violation():
    with pytest.raises(ValueError):
        list(stream_format(lambda toks: toks + ["extra"], iter(range(30)), ChunkConfig(6, 2)))
