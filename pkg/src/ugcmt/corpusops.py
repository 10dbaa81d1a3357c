"""Corpus hygiene, sub-corpus tags, and declarative training-set composition.

Filtering drops over-long pairs, pairs with an extreme length ratio,
duplicates, and (via a pluggable classifier) pairs in the wrong language.
Tags prepend a reserved ``<NAME>`` token to the source so one model can
learn per-corpus behaviour. Composition assembles a training corpus from a
manifest (concatenation, oversampling, per-epoch resampled parts) with a
deterministic shuffle over a line-offset index, so multi-GB corpora stream.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import random
import re
import unicodedata
from array import array
from dataclasses import dataclass, replace as dc_replace
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from sklearn.base import BaseEstimator, TransformerMixin

from .core import (
    ConfigError,
    CorpusStructureError,
    SRC_SUFFIX,
    SentencePair,
    TGT_SUFFIX,
    ToolkitError,
    derive_seed,
    escape_reserved,
    unescape_reserved,
)

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 1.0 / 0.9  # softens sampled translations just enough

_TAG_PATTERN = re.compile(r"<([A-Z][A-Z0-9_]*)>")
_LEADING_TAG = re.compile(r"(<[A-Z][A-Z0-9_]*>) ")


class TagError(ToolkitError):
    """Tagging misuse, e.g. tagging an already-tagged source."""


@dataclass(frozen=True)
class CorpusTag:
    """A sub-corpus identity carried as a reserved source-side token."""

    name: str

    def __post_init__(self):
        if not re.fullmatch(r"[A-Z][A-Z0-9_]*", self.name):
            raise ConfigError(
                "tag names are short uppercase identifiers, got %r" % self.name
            )

    @property
    def surface(self) -> str:
        return "<%s>" % self.name


def add_tag(pair: SentencePair, tag: Union[CorpusTag, str]) -> SentencePair:
    """Prepend the tag token to the source; the target is untouched.

    Raises TagError on an already-tagged source. Pre-existing occurrences of
    the tag surface in the text are escaped so strip_tag is an exact inverse.
    """
    if isinstance(tag, str):
        tag = CorpusTag(tag)
    if _LEADING_TAG.match(pair.src):
        raise TagError("source already starts with a tag token: %r" % pair.src[:30])
    src = escape_reserved(pair.src, (tag.surface,))
    return dc_replace(pair, src=tag.surface + " " + src, corpus_label=tag.name)


def strip_tag(pair: SentencePair) -> tuple[SentencePair, Optional[str]]:
    """Remove a leading tag token, returning (pair, tag name or None)."""
    match = _LEADING_TAG.match(pair.src)
    if not match:
        return pair, None
    surface = match.group(1)
    rest = unescape_reserved(pair.src[match.end() :], (surface,))
    return dc_replace(pair, src=rest), surface[1:-1]


@dataclass(frozen=True)
class FilterConfig:
    """Thresholds and hooks for per-pair filtering."""

    max_words: int = 175
    max_ratio: float = 1.5
    dedup: bool = False
    langid: Optional[Callable[[str], str]] = None
    src_lang: Optional[str] = None
    tgt_lang: Optional[str] = None

    def __post_init__(self):
        if self.max_words < 1:
            raise ConfigError("max_words must be >= 1")
        if self.max_ratio <= 1.0:
            raise ConfigError("max_ratio must be > 1")


@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: Optional[str] = None


def filter_pair(pair: SentencePair, config: FilterConfig) -> FilterDecision:
    """Keep/drop one pair; the reason names the first failing check.

    Word counts are whitespace tokens. Boundaries are inclusive: exactly
    max_words words or exactly max_ratio ratio is kept.
    """
    src_words = len(pair.src.split())
    tgt_words = len(pair.tgt.split()) if pair.tgt is not None else None
    if not pair.src.strip():
        return FilterDecision(False, "empty")
    if src_words > config.max_words or (tgt_words or 0) > config.max_words:
        return FilterDecision(False, "length")
    if tgt_words is not None:
        low, high = sorted((src_words, tgt_words))
        ratio = math.inf if low == 0 and high > 0 else (high / low if low else 1.0)
        if ratio > config.max_ratio:
            return FilterDecision(False, "ratio")
    if config.langid is not None:
        if config.src_lang and config.langid(pair.src) != config.src_lang:
            return FilterDecision(False, "langid")
        if pair.tgt is not None and config.tgt_lang and config.langid(pair.tgt) != config.tgt_lang:
            return FilterDecision(False, "langid")
    return FilterDecision(True)


def filter_corpus(
    pairs: Iterable[SentencePair],
    config: FilterConfig,
    on_drop: Optional[Callable[[SentencePair, str], None]] = None,
) -> Iterator[SentencePair]:
    """Stream the pairs that pass filter_pair (and dedup when configured)."""
    stream: Iterable[SentencePair] = pairs
    if config.dedup:
        stream = dedup(stream)
    for pair in stream:
        decision = filter_pair(pair, config)
        if decision.keep:
            yield pair
        elif on_drop is not None:
            on_drop(pair, decision.reason or "")


def dedup(pairs: Iterable[SentencePair]) -> Iterator[SentencePair]:
    """Drop exact (src, tgt) duplicates, keeping first occurrences in order.

    Seen pairs are tracked as 16-byte digests so 50M-pair corpora fit in
    memory; a digest collision (~2**-64) would drop a non-duplicate.
    """
    seen: set[bytes] = set()
    for pair in pairs:
        key = hashlib.blake2b(
            (pair.src + "\x00" + (pair.tgt or "")).encode("utf-8"), digest_size=16
        ).digest()
        if key in seen:
            continue
        seen.add(key)
        yield pair


@dataclass(frozen=True)
class ManifestPart:
    """One corpus in a composition: path prefix, tag, and sampling policy."""

    path: str
    tag: Optional[str] = None
    oversample: int = 1
    resample_per_epoch: bool = False

    def __post_init__(self):
        if self.oversample < 1:
            raise ConfigError("oversample must be >= 1")
        if self.oversample > 1 and self.resample_per_epoch:
            raise ConfigError("oversample and resample_per_epoch are mutually exclusive")
        if self.tag is not None:
            CorpusTag(self.tag)


@dataclass(frozen=True)
class CompositionManifest:
    parts: tuple[ManifestPart, ...]
    scheme_name: str = ""

    def __post_init__(self):
        if not self.parts:
            raise ConfigError("a composition manifest needs at least one part")


def parse_manifest(path: str, scheme_name: str = "") -> CompositionManifest:
    """Read a manifest: ``path<TAB>tag-or-dash<TAB>oversample<TAB>resample``."""
    parts = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ConfigError("malformed manifest line %d: %r" % (line_no, line))
            part_path, tag, oversample, resample = fields
            parts.append(
                ManifestPart(
                    path=part_path,
                    tag=None if tag == "-" else tag,
                    oversample=int(oversample),
                    resample_per_epoch=resample.lower() in ("1", "true", "yes"),
                )
            )
    return CompositionManifest(tuple(parts), scheme_name)


def _line_offsets(path: str) -> array:
    offsets = array("q")
    position = 0
    with open(path, "rb") as handle:
        for raw in handle:
            offsets.append(position)
            position += len(raw)
    return offsets


def _decode_at(handle, offset: int, path: str) -> str:
    handle.seek(offset)
    raw = handle.readline()
    if raw.endswith(b"\n"):
        raw = raw[:-1]
    if raw.endswith(b"\r"):
        raw = raw[:-1]
    try:
        return unicodedata.normalize("NFC", raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise CorpusStructureError(
            "%s: undecodable bytes at byte offset %d" % (path, offset + exc.start)
        ) from exc


def _part_base(part: ManifestPart, epoch: int) -> str:
    if part.resample_per_epoch:
        return "%s.epoch%d" % (part.path, epoch)
    return part.path


def compose(
    manifest: CompositionManifest,
    epoch: int = 0,
    seed: int = 0,
    shuffle: bool = True,
    src_suffix: str = SRC_SUFFIX,
    tgt_suffix: str = TGT_SUFFIX,
) -> Iterator[SentencePair]:
    """Assemble a training corpus from its parts, tagging and shuffling.

    A part with oversample=k contributes k passes over its file; a
    resample_per_epoch part reads the epoch-indexed variant
    ``<path>.epoch<N>``. The shuffle is a deterministic permutation over a
    line-offset index keyed by (seed, epoch); pairs are never materialized.
    """
    bases = []
    part_offsets = []
    for part in manifest.parts:
        base = _part_base(part, epoch)
        src_path = base + src_suffix
        tgt_path = base + tgt_suffix
        for path in (src_path, tgt_path):
            if not os.path.exists(path):
                raise CorpusStructureError("missing composition input: %s" % path)
        src_offsets = _line_offsets(src_path)
        tgt_offsets = _line_offsets(tgt_path)
        if len(src_offsets) != len(tgt_offsets):
            raise CorpusStructureError(
                "line count mismatch: %s has %d lines, %s has %d lines"
                % (src_path, len(src_offsets), tgt_path, len(tgt_offsets))
            )
        bases.append((src_path, tgt_path))
        part_offsets.append((src_offsets, tgt_offsets))

    part_ids = array("i")
    line_ids = array("q")
    for part_idx, part in enumerate(manifest.parts):
        n = len(part_offsets[part_idx][0])
        for _ in range(part.oversample):
            part_ids.extend([part_idx] * n)
            line_ids.extend(range(n))

    order = array("q", range(len(part_ids)))
    if shuffle:
        random.Random(derive_seed(seed, "compose", epoch)).shuffle(order)

    handles = [
        (open(src_path, "rb"), open(tgt_path, "rb")) for src_path, tgt_path in bases
    ]
    try:
        out_line = 0
        for slot in order:
            part_idx = part_ids[slot]
            line_idx = line_ids[slot]
            src_handle, tgt_handle = handles[part_idx]
            src_path, tgt_path = bases[part_idx]
            src_offsets, tgt_offsets = part_offsets[part_idx]
            src = _decode_at(src_handle, src_offsets[line_idx], src_path)
            tgt = _decode_at(tgt_handle, tgt_offsets[line_idx], tgt_path)
            out_line += 1
            pair = SentencePair(src=src, tgt=tgt, line_no=out_line)
            tag = manifest.parts[part_idx].tag
            if tag is not None:
                pair = add_tag(pair, tag)
            yield pair
    finally:
        for src_handle, tgt_handle in handles:
            src_handle.close()
            tgt_handle.close()


@dataclass(frozen=True)
class LogitVector:
    """Real-valued scores plus a sampling temperature."""

    z: tuple[float, ...]
    T: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if not self.z:
            raise ConfigError("LogitVector needs at least one score")
        if not all(math.isfinite(x) for x in self.z):
            raise ConfigError("LogitVector entries must be finite")
        if self.T <= 0:
            raise ConfigError("temperature must be > 0, got %r" % self.T)


def temperature_distribution(
    z: Union[LogitVector, Sequence[float]], T: Optional[float] = None
) -> list[float]:
    """Softmax with temperature: p_i = exp(z_i/T) / sum_k exp(z_k/T).

    Computed with max-subtraction so large scores cannot overflow; the
    output sums to 1 within 1e-12. T defaults to 1/0.9, the value that
    balances sampling quality and diversity.
    """
    if isinstance(z, LogitVector):
        if T is None:
            T = z.T
        z = z.z
    if T is None:
        T = DEFAULT_TEMPERATURE
    if T <= 0:
        raise ConfigError("temperature must be > 0, got %r" % T)
    scores = [x / T for x in z]
    if not scores:
        raise ConfigError("temperature_distribution needs at least one score")
    peak = max(scores)
    weights = [math.exp(s - peak) for s in scores]
    total = math.fsum(weights)
    return [w / total for w in weights]


class PairFilter(BaseEstimator, TransformerMixin):
    """Estimator form of the preprocessing filters (stateless)."""

    def __init__(
        self,
        max_words: int = 175,
        max_ratio: float = 1.5,
        dedup: bool = True,
        langid: Optional[Callable[[str], str]] = None,
        src_lang: Optional[str] = None,
        tgt_lang: Optional[str] = None,
    ):
        self.max_words = max_words
        self.max_ratio = max_ratio
        self.dedup = dedup
        self.langid = langid
        self.src_lang = src_lang
        self.tgt_lang = tgt_lang

    def fit(self, X, y=None):
        return self

    def transform(self, X: Iterable[SentencePair]) -> list[SentencePair]:
        config = FilterConfig(
            max_words=self.max_words,
            max_ratio=self.max_ratio,
            dedup=self.dedup,
            langid=self.langid,
            src_lang=self.src_lang,
            tgt_lang=self.tgt_lang,
        )
        return list(filter_corpus(X, config))
