"""Shared data model and streaming I/O for parallel corpora and review records.

Parallel corpora live in two aligned plain-text files (one sentence per line,
UTF-8, NFC-normalized on read). Reviews live in a JSON-lines file, one record
per line. All readers are generators so corpus size never bounds memory.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, TypeVar

log = logging.getLogger(__name__)

SRC_SUFFIX = ".src"
TGT_SUFFIX = ".tgt"

RESERVED_SPLITS = ("PE", "HT", "valid", "test", "other")


class ToolkitError(Exception):
    """Base class for data and configuration errors raised by this package."""


class CorpusStructureError(ToolkitError):
    """Structural problem in a corpus stream (misaligned files, bad lengths)."""


class RecordError(ToolkitError):
    """A malformed record in a structured-record file."""


class ContractError(ToolkitError):
    """An operation was called outside its documented precondition."""


class ConfigError(ToolkitError):
    """Invalid configuration values."""


@dataclass(frozen=True)
class SentencePair:
    """One aligned source/target sentence; tgt is None for monolingual use."""

    src: str
    tgt: Optional[str] = None
    corpus_label: Optional[str] = None
    review_id: Optional[str] = None
    line_no: int = 1

    def __post_init__(self):
        if self.line_no < 1:
            raise ValueError("line_no must be >= 1, got %d" % self.line_no)


@dataclass(frozen=True)
class ReviewRecord:
    """A full review: ordered sentences plus optional venue metadata."""

    review_id: str
    sentences: tuple[SentencePair, ...]
    venue_type: Optional[str] = None
    location: Optional[str] = None
    rating: Optional[float] = None

    def __post_init__(self):
        if not self.sentences:
            raise RecordError("review %r has no sentences" % self.review_id)
        for pair in self.sentences:
            if pair.review_id != self.review_id:
                raise RecordError(
                    "sentence review_id %r does not match record %r"
                    % (pair.review_id, self.review_id)
                )
        if self.rating is not None and not 0.0 <= self.rating <= 10.0:
            raise RecordError(
                "review %r rating %r outside [0, 10]" % (self.review_id, self.rating)
            )


@dataclass
class CorpusSplit:
    """A named corpus split; PE/HT/valid/test are reserved for the review data."""

    name: str
    pairs: Iterable[SentencePair] = field(default_factory=list)

    def __post_init__(self):
        if self.name not in RESERVED_SPLITS:
            raise ConfigError(
                "split name must be one of %s, got %r" % (RESERVED_SPLITS, self.name)
            )


def read_lines(path: str) -> Iterator[str]:
    """Yield NFC-normalized text lines, reporting byte offsets on bad UTF-8."""
    offset = 0
    non_nfc = 0
    with open(path, "rb") as handle:
        for raw in handle:
            line = raw
            if line.endswith(b"\n"):
                line = line[:-1]
            if line.endswith(b"\r"):
                line = line[:-1]
            try:
                text = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusStructureError(
                    "%s: undecodable bytes at byte offset %d" % (path, offset + exc.start)
                ) from exc
            normalized = unicodedata.normalize("NFC", text)
            if normalized != text:
                non_nfc += 1
                if non_nfc == 1:
                    log.warning("%s: input is not NFC-normalized; normalizing on read", path)
            offset += len(raw)
            yield normalized
    if non_nfc:
        log.info("%s: normalized %d non-NFC line(s)", path, non_nfc)


def _count_lines(path: str) -> int:
    n = 0
    with open(path, "rb") as handle:
        for _ in handle:
            n += 1
    return n


def read_parallel(src_path: str, tgt_path: str) -> Iterator[SentencePair]:
    """Stream aligned sentence pairs from two plain-text files.

    Raises CorpusStructureError when the files have different line counts,
    naming both counts.
    """
    src_lines = read_lines(src_path)
    tgt_lines = read_lines(tgt_path)
    line_no = 0
    while True:
        src = next(src_lines, None)
        tgt = next(tgt_lines, None)
        if src is None and tgt is None:
            return
        if src is None or tgt is None:
            raise CorpusStructureError(
                "line count mismatch: %s has %d lines, %s has %d lines"
                % (src_path, _count_lines(src_path), tgt_path, _count_lines(tgt_path))
            )
        line_no += 1
        yield SentencePair(src=src, tgt=tgt, line_no=line_no)


def read_mono(path: str) -> Iterator[SentencePair]:
    """Stream a monolingual corpus as source-only pairs."""
    for line_no, text in enumerate(read_lines(path), start=1):
        yield SentencePair(src=text, line_no=line_no)


def _check_writable_text(text: str, side: str, line_no: int) -> None:
    if "\n" in text or "\r" in text:
        raise CorpusStructureError(
            "interior newline in %s text at pair %d; one sentence per line"
            % (side, line_no)
        )


def write_parallel(pairs: Iterable[SentencePair], src_path: str, tgt_path: str) -> int:
    """Write pairs to two aligned files; returns the number of pairs written.

    Interior newlines are illegal inside a sentence and are rejected.
    """
    count = 0
    with open(src_path, "w", encoding="utf-8") as src_out, open(
        tgt_path, "w", encoding="utf-8"
    ) as tgt_out:
        for pair in pairs:
            count += 1
            _check_writable_text(pair.src, "source", count)
            if pair.tgt is None:
                raise CorpusStructureError(
                    "pair %d has no target; use write_mono for monolingual data" % count
                )
            _check_writable_text(pair.tgt, "target", count)
            src_out.write(pair.src + "\n")
            tgt_out.write(pair.tgt + "\n")
    return count


def write_mono(pairs: Iterable[SentencePair], path: str) -> int:
    """Write the source side of a stream to a single file."""
    count = 0
    with open(path, "w", encoding="utf-8") as out:
        for pair in pairs:
            count += 1
            _check_writable_text(pair.src, "source", count)
            out.write(pair.src + "\n")
    return count


def _review_from_obj(obj: dict, index: int) -> ReviewRecord:
    if "review_id" not in obj:
        raise RecordError("record %d is missing review_id" % index)
    review_id = str(obj["review_id"])
    raw_sentences = obj.get("sentences") or []
    if not raw_sentences:
        raise RecordError("record %d (%s) has an empty sentences list" % (index, review_id))
    sentences = []
    for pos, item in enumerate(raw_sentences, start=1):
        if isinstance(item, str):
            src, tgt = item, None
        else:
            src = item.get("src", "")
            tgt = item.get("tgt")
        sentences.append(SentencePair(src=src, tgt=tgt, review_id=review_id, line_no=pos))
    rating = obj.get("rating")
    return ReviewRecord(
        review_id=review_id,
        sentences=tuple(sentences),
        venue_type=obj.get("venue_type"),
        location=obj.get("location"),
        rating=float(rating) if rating is not None else None,
    )


def read_reviews(path: str, strict: bool = True) -> Iterator[ReviewRecord]:
    """Stream review records from a JSON-lines file.

    Malformed records raise in strict mode and are skipped with a warning
    otherwise; the error always names the offending record index.
    """
    for index, line in enumerate(read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            record = _review_from_obj(obj, index)
        except (json.JSONDecodeError, RecordError, TypeError, ValueError) as exc:
            message = "record %d in %s is malformed: %s" % (index, path, exc)
            if strict:
                raise RecordError(message) from exc
            log.warning("skipping %s", message)
            continue
        yield record


def write_reviews(records: Iterable[ReviewRecord], path: str) -> int:
    """Write review records as JSON lines; inverse of read_reviews."""
    count = 0
    with open(path, "w", encoding="utf-8") as out:
        for record in records:
            count += 1
            obj = {
                "review_id": record.review_id,
                "sentences": [
                    {"src": p.src} if p.tgt is None else {"src": p.src, "tgt": p.tgt}
                    for p in record.sentences
                ],
            }
            if record.venue_type is not None:
                obj["venue_type"] = record.venue_type
            if record.location is not None:
                obj["location"] = record.location
            if record.rating is not None:
                obj["rating"] = record.rating
            out.write(json.dumps(obj, ensure_ascii=False) + "\n")
    return count


# --------------------------------------------------------------------------
# Deterministic counter-based randomness.
#
# Every randomized transform draws from a hash of (seed, stream, *indices)
# instead of a stateful generator, so serial and parallel runs agree
# bit-for-bit and any single sentence can be reproduced in isolation.
# --------------------------------------------------------------------------

def stable_uniform(seed: int, *coords: int) -> float:
    """Deterministic uniform draw in [0, 1) keyed by seed and counters."""
    packed = struct.pack("<%dq" % (len(coords) + 1), seed, *coords)
    digest = hashlib.blake2b(packed, digest_size=8).digest()
    return int.from_bytes(digest, "little") / 2.0**64


def derive_seed(seed: int, *parts) -> int:
    """Derive a child integer seed from a seed and arbitrary string/int parts."""
    material = ":".join([str(seed)] + [str(p) for p in parts])
    digest = hashlib.blake2b(material.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


# --------------------------------------------------------------------------
# Reserved-token escaping.
#
# Tag and placeholder literals ("<T>", "<x>", "<PE>", ...) are reserved in
# the token streams this toolkit produces. Raw text that happens to contain
# one is wrapped in an extra pair of angle brackets on encode and unwrapped
# on decode; the wrapping nests, so already-escaped text survives a round
# trip.
# --------------------------------------------------------------------------

def escape_reserved(text: str, tokens: Sequence[str]) -> str:
    for token in tokens:
        if token in text:
            text = text.replace(token, "<" + token + ">")
    return text


def unescape_reserved(text: str, tokens: Sequence[str]) -> str:
    for token in reversed(tokens):
        wrapped = "<" + token + ">"
        if wrapped in text:
            text = text.replace(wrapped, token)
    return text


T = TypeVar("T")
U = TypeVar("U")


def parallel_map(
    fn: Callable[[T], U],
    items: Iterable[T],
    threads: int = 1,
    chunksize: int = 256,
) -> Iterator[U]:
    """Order-preserving map, optionally over a thread pool.

    Results arrive in input order regardless of thread count, so transforms
    built on pure per-sentence functions stay deterministic.
    """
    if threads <= 1:
        yield from map(fn, items)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, items, chunksize=chunksize)
