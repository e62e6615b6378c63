"""Overlapping-chunk splitting and centrality-based merging.

An unbounded word stream is cut into fixed-length chunks that overlap by a
configurable amount, each chunk is formatted independently (so chunks may
be processed in parallel), and the overlaps are merged by keeping, for
every stream position, the version from the chunk where it sits farthest
from a chunk edge. Ties go to the earlier chunk, which makes the merge
deterministic. The streaming variant emits each position as soon as no
later chunk can still cover it, holding at most O(chunk length) tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator, Sequence


@dataclass(frozen=True)
class ChunkConfig:
    """Chunk geometry: window length and overlap between adjacent windows."""

    chunk_len: int = 40
    overlap: int = 10

    def __post_init__(self) -> None:
        if self.chunk_len <= 0:
            raise ValueError("chunk_len must be positive")
        if not 0 < self.overlap < self.chunk_len:
            raise ValueError("overlap must satisfy 0 < overlap < chunk_len")

    @property
    def stride(self) -> int:
        return self.chunk_len - self.overlap


@dataclass(frozen=True)
class Chunk:
    start: int
    tokens: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))


def split_chunks(tokens: Sequence, config: ChunkConfig) -> list[Chunk]:
    """Cut a finite sequence into overlapping chunks.

    A sequence no longer than one chunk stays whole; otherwise chunks start
    at every multiple of the stride below the sequence length, so the last
    chunk ends exactly at the end of the stream.
    """
    n = len(tokens)
    if n == 0:
        return []
    if n <= config.chunk_len:
        return [Chunk(0, tuple(tokens))]
    out: list[Chunk] = []
    off = 0
    while off < n:
        out.append(Chunk(off, tuple(tokens[off : off + config.chunk_len])))
        off += config.stride
    return out


def merge_chunks(formatted: Sequence[tuple[int, Sequence]]) -> list:
    """Merge formatted chunks back into one stream.

    ``formatted`` holds ``(start_offset, tokens)`` pairs tiling the stream
    with the same geometry :func:`split_chunks` produces. Every position is
    taken from the covering chunk that maximizes the distance to its
    nearest chunk edge, earlier chunk on ties.
    """
    if not formatted:
        return []
    offsets = [off for off, _ in formatted]
    lengths = [len(toks) for _, toks in formatted]
    if offsets[0] != 0:
        raise ValueError("chunk geometry mismatch: first chunk must start at 0")
    n = offsets[-1] + lengths[-1]
    if len(formatted) > 1:
        stride = offsets[1] - offsets[0]
        if stride <= 0 or any(b - a != stride for a, b in zip(offsets, offsets[1:])):
            raise ValueError("chunk geometry mismatch: offsets are not an arithmetic progression")
        full = lengths[0]
        if stride >= full:
            raise ValueError("chunk geometry mismatch: chunks do not overlap")
        # every chunk runs to offset+full, except where the stream end cuts it
        if any(l != min(full, n - off) for off, l in zip(offsets, lengths)):
            raise ValueError("chunk geometry mismatch: inconsistent chunk lengths")
    best: list[tuple[int, Any] | None] = [None] * n
    for off, toks in formatted:
        for j, tok in enumerate(toks):
            c = min(j, len(toks) - 1 - j)
            cur = best[off + j]
            if cur is None or c > cur[0]:
                best[off + j] = (c, tok)
    if any(b is None for b in best):
        raise ValueError("chunk geometry mismatch: uncovered stream position")
    return [b[1] for b in best]  # type: ignore[index]


def _resolve_formatter(formatter) -> Callable[[list], list]:
    fmt = getattr(formatter, "format_tokens", None)
    return fmt if fmt is not None else formatter


def format_chunks(formatter, tokens: Sequence, config: ChunkConfig) -> list:
    """Split, format every chunk, and merge: the batch pipeline."""
    fmt = _resolve_formatter(formatter)
    pieces = []
    for chunk in split_chunks(tokens, config):
        formatted = fmt(list(chunk.tokens))
        if len(formatted) != len(chunk.tokens):
            raise ValueError("formatter changed the chunk length")
        pieces.append((chunk.start, formatted))
    return merge_chunks(pieces)


class ChunkStream:
    """Incremental splitter/formatter/merger with bounded buffering.

    ``max_buffered`` records the high-water mark of internally held tokens,
    which never exceeds one chunk length plus one.
    """

    def __init__(self, formatter, config: ChunkConfig) -> None:
        self._format = _resolve_formatter(formatter)
        self.config = config
        self.max_buffered = 0

    def process(self, tokens: Iterable) -> Iterator:
        length = self.config.chunk_len
        stride = self.config.stride
        window: list = []  # input tokens for stream positions >= emitted
        best: list[tuple[int, Any] | None] = []  # parallel merge candidates
        emitted = 0
        read = 0
        next_off = 0

        def apply(off: int, size: int) -> None:
            i0 = off - emitted
            formatted = self._format(list(window[i0 : i0 + size]))
            if len(formatted) != size:
                raise ValueError("formatter changed the chunk length")
            for j, tok in enumerate(formatted):
                c = min(j, size - 1 - j)
                cur = best[i0 + j]
                if cur is None or c > cur[0]:
                    best[i0 + j] = (c, tok)

        for token in tokens:
            window.append(token)
            best.append(None)
            read += 1
            self.max_buffered = max(self.max_buffered, len(window))
            if read > length:
                while read - next_off >= length:
                    apply(next_off, length)
                    cut = next_off + stride - emitted
                    for k in range(cut):
                        yield best[k][1]  # type: ignore[index]
                    del window[:cut]
                    del best[:cut]
                    emitted = next_off + stride
                    next_off += stride
        if read == 0:
            return
        if read <= length:
            apply(0, read)
        else:
            while next_off < read:
                apply(next_off, min(length, read - next_off))
                next_off += stride
        for entry in best:
            yield entry[1]  # type: ignore[index]


def stream_format(formatter, tokens: Iterable, config: ChunkConfig) -> Iterator:
    """Streaming equivalent of :func:`format_chunks` on any finite prefix."""
    return ChunkStream(formatter, config).process(tokens)
