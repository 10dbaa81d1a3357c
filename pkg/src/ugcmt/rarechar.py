"""Rare-character placeholders: census, masking, and ordered restoration.

Subword models cannot represent characters never seen in training (emojis
are the usual offenders), so rare characters are replaced on both corpus
sides by a reserved ``<x>`` token before segmentation. A translation model
learns to copy the token; after decoding, the tokens are replaced by the
saved source-side characters in their original order.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

from sklearn.base import BaseEstimator, TransformerMixin

from .core import (
    ConfigError,
    SentencePair,
    escape_reserved,
    unescape_reserved,
)

log = logging.getLogger(__name__)

PLACEHOLDER = "<x>"

# A real placeholder is always space-delimited by construction; the escaped
# literal form <<x>> must not match.
_PLACEHOLDER_RE = re.compile(r"(?<!<)<x>(?!>)")

_CHAR_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_CHAR_UNESCAPES = {"\\\\": "\\", "\\t": "\t", "\\n": "\n", "\\r": "\r"}


@dataclass(frozen=True)
class CharCensus:
    """Exact character frequencies over both sides of a corpus."""

    counts: dict[str, int]
    total: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ConfigError("census total does not match the sum of its counts")

    def __add__(self, other: "CharCensus") -> "CharCensus":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return CharCensus(dict(merged), self.total + other.total)


@dataclass(frozen=True)
class SavedChar:
    """One masked character plus whether masking injected adjacent spaces."""

    char: str
    left_injected: bool = False
    right_injected: bool = False


@dataclass(frozen=True)
class PlaceholderRecord:
    """A masked sentence together with its removed characters, in order."""

    masked: str
    saved: tuple[SavedChar, ...]

    @property
    def chars(self) -> list[str]:
        return [s.char for s in self.saved]


def _texts(corpus: Iterable[Union[str, SentencePair]]) -> Iterator[str]:
    for item in corpus:
        if isinstance(item, SentencePair):
            yield item.src
            if item.tgt is not None:
                yield item.tgt
        else:
            yield item


def census(corpus: Iterable[Union[str, SentencePair]]) -> CharCensus:
    """Tally character frequencies over a corpus (both sides of pairs)."""
    counts: Counter[str] = Counter()
    for text in _texts(corpus):
        counts.update(text)
    return CharCensus(dict(counts), sum(counts.values()))


def build_charset(char_census: CharCensus, min_count: int = 100) -> set[str]:
    """Characters seen at least min_count times, plus the placeholder literal."""
    if min_count < 1:
        raise ConfigError("min_count must be >= 1, got %r" % min_count)
    retained = {ch for ch, n in char_census.counts.items() if n >= min_count}
    retained.update(PLACEHOLDER)
    return retained


def mask(sentence: str, charset: set[str]) -> PlaceholderRecord:
    """Replace out-of-charset characters with space-delimited placeholders.

    The space character is the token delimiter and the placeholder's own
    characters are always retained, whatever the charset says. Injected
    delimiter spaces are recorded per placeholder so restore can reattach
    characters to their neighbours exactly.
    """
    if not set(PLACEHOLDER) <= charset:
        charset = charset | set(PLACEHOLDER)
    sentence = escape_reserved(sentence, (PLACEHOLDER,))
    out: list[str] = []
    saved: list[SavedChar] = []
    for idx, ch in enumerate(sentence):
        if ch == " " or ch in charset:
            out.append(ch)
            continue
        left_injected = bool(out) and out[-1] != " "
        if left_injected:
            out.append(" ")
        out.append(PLACEHOLDER)
        nxt = sentence[idx + 1] if idx + 1 < len(sentence) else None
        right_injected = nxt is not None and nxt != " " and (nxt in charset)
        if right_injected:
            out.append(" ")
        saved.append(SavedChar(ch, left_injected, right_injected))
    return PlaceholderRecord("".join(out), tuple(saved))


def restore(output: str, saved: Sequence[Union[SavedChar, str]]) -> str:
    """Replace the i-th placeholder in a model output by the i-th saved char.

    Model output is untrusted: missing placeholders drop the extra saved
    characters with a warning, surplus placeholders are deleted with a
    warning. Nothing here is fatal by design.
    """
    saved = [s if isinstance(s, SavedChar) else SavedChar(str(s)) for s in saved]
    matches = list(_PLACEHOLDER_RE.finditer(output))
    if len(matches) < len(saved):
        log.warning(
            "output has %d placeholder(s) for %d saved character(s); extras dropped",
            len(matches),
            len(saved),
        )
    elif len(matches) > len(saved):
        log.warning(
            "output has %d placeholder(s) for %d saved character(s); surplus deleted",
            len(matches),
            len(saved),
        )
    parts: list[str] = []
    pos = 0
    for i, match in enumerate(matches):
        segment = output[pos : match.start()]
        pos = match.end()
        if i < len(saved):
            record = saved[i]
            if record.left_injected and segment.endswith(" "):
                segment = segment[:-1]
            parts.append(segment)
            parts.append(record.char)
            if record.right_injected and pos < len(output) and output[pos] == " ":
                pos += 1
        else:
            if segment.endswith(" "):
                segment = segment[:-1]
            elif pos < len(output) and output[pos] == " ":
                pos += 1
            parts.append(segment)
    parts.append(output[pos:])
    return unescape_reserved("".join(parts), (PLACEHOLDER,))


# --------------------------------------------------------------------------
# File formats: census table and per-sentence sidecar.
# --------------------------------------------------------------------------

def _escape_char(ch: str) -> str:
    return _CHAR_ESCAPES.get(ch, ch)


def _unescape_char(cell: str) -> str:
    if cell in _CHAR_UNESCAPES:
        return _CHAR_UNESCAPES[cell]
    return cell


def write_census(char_census: CharCensus, path: str) -> None:
    """Write a census as a two-column table, most frequent first."""
    items = sorted(char_census.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    with open(path, "w", encoding="utf-8") as out:
        for ch, count in items:
            out.write("%s\t%d\n" % (_escape_char(ch), count))


def read_census(path: str) -> CharCensus:
    counts: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            cell, _, count = line.rpartition("\t")
            counts[_unescape_char(cell)] = int(count)
    return CharCensus(counts, sum(counts.values()))


def write_sidecar(saved_lists: Iterable[Sequence[SavedChar]], path: str) -> None:
    """Write saved characters line-aligned with the masked corpus.

    One line per sentence, one tab-separated cell per placeholder, empty
    line when none. A cell is ``flags:char`` where flags marks which
    delimiter spaces masking injected (``l``, ``r``, both, or neither).
    """
    with open(path, "w", encoding="utf-8") as out:
        for saved in saved_lists:
            cells = []
            for record in saved:
                flags = ("l" if record.left_injected else "") + (
                    "r" if record.right_injected else ""
                )
                cells.append(flags + ":" + _escape_char(record.char))
            out.write("\t".join(cells) + "\n")


def read_sidecar(path: str) -> list[tuple[SavedChar, ...]]:
    rows: list[tuple[SavedChar, ...]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                rows.append(())
                continue
            saved = []
            for cell in line.split("\t"):
                flags, sep, payload = cell.partition(":")
                if not sep or not set(flags) <= {"l", "r"}:
                    raise ConfigError(
                        "malformed sidecar cell %r at line %d of %s" % (cell, line_no, path)
                    )
                saved.append(
                    SavedChar(_unescape_char(payload), "l" in flags, "r" in flags)
                )
            rows.append(tuple(saved))
    return rows


class RareCharMasker(BaseEstimator, TransformerMixin):
    """Learn a retained charset from a corpus, then mask sentences with it.

    ``fit`` runs the census over both sides of the training corpus;
    ``transform`` returns masked sentences, ``mask_records`` the full
    records (masked text plus saved characters), and ``inverse_transform``
    restores model outputs.
    """

    def __init__(self, min_count: int = 100):
        self.min_count = min_count

    def fit(self, X: Iterable[Union[str, SentencePair]], y=None):
        self.census_ = census(X)
        self.charset_ = build_charset(self.census_, self.min_count)
        return self

    def mask_records(self, X: Iterable[str]) -> list[PlaceholderRecord]:
        return [mask(s, self.charset_) for s in X]

    def transform(self, X: Iterable[str]) -> list[str]:
        return [record.masked for record in self.mask_records(X)]

    def inverse_transform(
        self,
        X: Iterable[str],
        saved_lists: Sequence[Sequence[Union[SavedChar, str]]],
    ) -> list[str]:
        return [restore(text, saved) for text, saved in zip(X, saved_lists)]
