"""Noun-chunk detection over POS-tagged sentences and chunk-length statistics.

Chunk spans either come from an external annotation file (one token per line,
``surface<TAB>pos<TAB>chunk_id``, blank line between sentences) or from the
built-in rule grammar. A noun chunk is the maximal token sequence matching

    DET? (ADJ | NUM | NOUN | PROPN | PUNCT-between-two-nominals)* (NOUN | PROPN)

so every chunk ends in a noun or proper noun and never contains a verb.
Per-token membership flags and spans are mutually derivable.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

UPOS_TAGS = frozenset(
    {
        "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
        "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
    }
)

_NOMINAL = frozenset({"NOUN", "PROPN"})
_CHUNK_BODY = frozenset({"ADJ", "NUM", "NOUN", "PROPN"})

DEFAULT_MAX_CHUNK_LEN = 10


@dataclass
class AnnotatedToken:
    surface: str
    pos: str

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if self.pos not in UPOS_TAGS:
            raise ValueError(f"unknown POS tag: {self.pos!r}")


def spans_to_flags(spans: list[tuple[int, int]], n_tokens: int) -> list[bool]:
    """Expand half-open chunk spans into per-token membership flags."""
    flags = [False] * n_tokens
    for start, end in spans:
        for k in range(start, end):
            flags[k] = True
    return flags


def flags_to_spans(flags: list[bool]) -> list[tuple[int, int]]:
    """Collapse per-token membership flags into maximal half-open spans."""
    spans: list[tuple[int, int]] = []
    start = None
    for k, flag in enumerate(flags):
        if flag and start is None:
            start = k
        elif not flag and start is not None:
            spans.append((start, k))
            start = None
    if start is not None:
        spans.append((start, len(flags)))
    return spans


@dataclass
class AnnotatedSentence:
    """POS-tagged tokens with chunk spans and derived membership flags."""

    tokens: list[AnnotatedToken]
    chunk_spans: list[tuple[int, int]]
    y: list[bool] | None = None

    def __post_init__(self) -> None:
        n = len(self.tokens)
        prev_end = 0
        for start, end in self.chunk_spans:
            if start < 0 or end > n or start >= end:
                raise ValueError(f"span out of bounds: [{start}, {end}) over {n} tokens")
            if start < prev_end:
                raise ValueError(f"overlapping spans at [{start}, {end})")
            prev_end = end
        if self.y is None:
            self.y = spans_to_flags(self.chunk_spans, n)
        elif len(self.y) != n or self.y != spans_to_flags(self.chunk_spans, n):
            raise ValueError("y flags inconsistent with chunk spans")


def extract_noun_chunks(tokens: list[AnnotatedToken]) -> list[tuple[int, int]]:
    """Find maximal noun-chunk spans with the rule grammar.

    Spans are disjoint, sorted, and each ends at its last nominal token.
    Punctuation is absorbed only between two nominals (hyphenated compounds).
    """
    if not tokens:
        raise ValueError("tokens must be non-empty")
    pos = [t.pos for t in tokens]
    n = len(pos)
    spans: list[tuple[int, int]] = []
    i = 0
    while i < n:
        start = i
        k = i + 1 if pos[i] == "DET" else i
        last_nominal = -1
        while k < n:
            if pos[k] in _CHUNK_BODY:
                if pos[k] in _NOMINAL:
                    last_nominal = k
                k += 1
            elif (
                pos[k] == "PUNCT"
                and k > start
                and k + 1 < n
                and pos[k - 1] in _NOMINAL
                and pos[k + 1] in _NOMINAL
            ):
                k += 1
            else:
                break
        if last_nominal >= 0:
            spans.append((start, last_nominal + 1))
            i = last_nominal + 1
        else:
            i = start + 1
    return spans


def filter_chunks(
    spans: list[tuple[int, int]], max_len: int = DEFAULT_MAX_CHUNK_LEN
) -> list[tuple[int, int]]:
    """Drop spans longer than ``max_len`` tokens, preserving order."""
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    return [(s, e) for s, e in spans if e - s <= max_len]


def sentence_from_tokens(tokens: list[AnnotatedToken]) -> AnnotatedSentence:
    """Annotate a token list with the built-in rule chunker."""
    return AnnotatedSentence(tokens=tokens, chunk_spans=extract_noun_chunks(tokens))


def parse_annotations(
    path: str, warn_counter: Counter | None = None
) -> Iterator[AnnotatedSentence]:
    """Stream annotated sentences from a TSV annotation file.

    ``chunk_id`` is ``-`` for tokens outside any chunk and a per-sentence
    integer shared by all tokens of one chunk; a chunk's tokens must be
    contiguous. Unknown POS tags are mapped to X and counted in
    ``warn_counter`` when given.
    """
    surfaces: list[str] = []
    tags: list[str] = []
    chunk_ids: list[int | None] = []
    first_line = 0

    def flush(lineno: int) -> AnnotatedSentence | None:
        if not surfaces:
            return None
        spans: list[tuple[int, int]] = []
        open_id: int | None = None
        start = 0
        seen: set[int] = set()
        for k, cid in enumerate(chunk_ids):
            if cid != open_id:
                if open_id is not None:
                    spans.append((start, k))
                if cid is not None:
                    if cid in seen:
                        raise ValueError(
                            f"chunk id {cid} not contiguous in sentence ending at line {lineno}"
                        )
                    seen.add(cid)
                    start = k
                open_id = cid
        if open_id is not None:
            spans.append((start, len(chunk_ids)))
        tokens = [AnnotatedToken(s, p) for s, p in zip(surfaces, tags)]
        sentence = AnnotatedSentence(tokens=tokens, chunk_spans=spans)
        surfaces.clear()
        tags.clear()
        chunk_ids.clear()
        return sentence

    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                sentence = flush(lineno)
                if sentence is not None:
                    yield sentence
                continue
            columns = line.split("\t")
            if len(columns) != 3:
                raise ValueError(
                    f"expected 3 tab-separated columns at line {lineno}, got {len(columns)}"
                )
            surface, pos, chunk_field = columns
            if not surface:
                raise ValueError(f"empty token surface at line {lineno}")
            if pos not in UPOS_TAGS:
                if warn_counter is not None:
                    warn_counter[pos] += 1
                log.warning("unknown POS tag %r at line %d mapped to X", pos, lineno)
                pos = "X"
            if chunk_field == "-":
                cid: int | None = None
            else:
                try:
                    cid = int(chunk_field)
                except ValueError as exc:
                    raise ValueError(
                        f"invalid chunk id {chunk_field!r} at line {lineno}"
                    ) from exc
            if not surfaces:
                first_line = lineno
            surfaces.append(surface)
            tags.append(pos)
            chunk_ids.append(cid)
    sentence = flush(first_line + len(surfaces))
    if sentence is not None:
        yield sentence


@dataclass
class ChunkStats:
    """Distribution of (length-filtered) chunk lengths plus token-level stats."""

    histogram: dict[int, int]
    mean: float
    sd: float
    token_nc_prob: float


class ChunkStatsAccumulator:
    """Mergeable accumulator so shards aggregate to the sequential result."""

    def __init__(self, max_chunk_len: int = DEFAULT_MAX_CHUNK_LEN) -> None:
        if max_chunk_len < 1:
            raise ValueError(f"max_chunk_len must be >= 1, got {max_chunk_len}")
        self.max_chunk_len = max_chunk_len
        self.length_counts: Counter[int] = Counter()
        self.n_tokens = 0
        self.n_chunk_tokens = 0
        self.n_sentences = 0

    def add(self, sentence: AnnotatedSentence) -> None:
        self.n_sentences += 1
        self.n_tokens += len(sentence.tokens)
        self.n_chunk_tokens += sum(sentence.y)
        for start, end in filter_chunks(sentence.chunk_spans, self.max_chunk_len):
            self.length_counts[end - start] += 1

    def merge(self, other: "ChunkStatsAccumulator") -> None:
        if other.max_chunk_len != self.max_chunk_len:
            raise ValueError("cannot merge accumulators with different max_chunk_len")
        self.length_counts.update(other.length_counts)
        self.n_tokens += other.n_tokens
        self.n_chunk_tokens += other.n_chunk_tokens
        self.n_sentences += other.n_sentences

    def finalize(self) -> ChunkStats:
        if self.n_tokens == 0:
            raise ValueError("empty corpus: no tokens seen")
        total = sum(self.length_counts.values())
        if total:
            mean = sum(l * c for l, c in self.length_counts.items()) / total
            var = sum(c * (l - mean) ** 2 for l, c in self.length_counts.items()) / total
        else:
            mean = 0.0
            var = 0.0
        return ChunkStats(
            histogram=dict(sorted(self.length_counts.items())),
            mean=mean,
            sd=math.sqrt(var),
            token_nc_prob=self.n_chunk_tokens / self.n_tokens,
        )


def chunk_stats(
    corpus: Iterable[AnnotatedSentence], max_chunk_len: int = DEFAULT_MAX_CHUNK_LEN
) -> ChunkStats:
    """Aggregate chunk-length and token-membership statistics over a corpus.

    The histogram, mean, and population sd cover chunks of at most
    ``max_chunk_len`` tokens; ``token_nc_prob`` is the fraction of all tokens
    carrying a chunk flag.
    """
    acc = ChunkStatsAccumulator(max_chunk_len)
    for sentence in corpus:
        acc.add(sentence)
    return acc.finalize()
