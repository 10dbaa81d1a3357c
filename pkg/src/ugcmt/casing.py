"""Case-handling transforms for noisy text.

Four data-side strategies are covered: plain lowercasing, inline case tags
(a lowercased token stream where ``<T>``/``<U>`` tokens follow title- and
upper-case words), factored case (parallel lowercase-form and case-tag
streams), and synthetic case noise. Mixed-case words are split into
single-case pieces first so every piece has exactly one case tag.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from sklearn.base import BaseEstimator, TransformerMixin

from .core import (
    ConfigError,
    ContractError,
    CorpusStructureError,
    SentencePair,
    escape_reserved,
    stable_uniform,
    unescape_reserved,
)

log = logging.getLogger(__name__)

MARKER = "▁"  # word-boundary mark carried by segmenter pieces

TAG_TITLE = "<T>"
TAG_UPPER = "<U>"
TAG_LOWER = "<L>"
RESERVED_TAGS = (TAG_TITLE, TAG_UPPER, TAG_LOWER)

_NOISE_STREAM = 1  # draw-stream id for apply_case_noise

Segmenter = Callable[[str], Sequence[str]]


class CaseTag(Enum):
    LOWER = "L"
    UPPER = "U"
    TITLE = "T"


_TOKEN_TO_TAG = {TAG_TITLE: CaseTag.TITLE, TAG_UPPER: CaseTag.UPPER, TAG_LOWER: CaseTag.LOWER}
_TAG_TO_TOKEN = {CaseTag.TITLE: TAG_TITLE, CaseTag.UPPER: TAG_UPPER, CaseTag.LOWER: TAG_LOWER}


def _is_cased(ch: str) -> bool:
    return ch.isupper() or ch.islower()


def split_mixed_case(token: str) -> list[str]:
    """Split a token into single-case pieces (``MacDonalds`` -> ``Mac``, ``Donalds``).

    A split lands before every uppercase letter that follows a lowercase one,
    and before the last uppercase letter of an uppercase run that is followed
    by a lowercase letter (``HTTPServer`` -> ``HTTP``, ``Server``). Caseless
    characters are transparent. Concatenating the pieces gives the token back.
    """
    if any(ch.isspace() for ch in token):
        raise ContractError("split_mixed_case expects a whitespace-free token, got %r" % token)
    if len(token) < 2:
        return [token] if token else []

    cuts = []
    prev_cased: Optional[str] = None
    for i, ch in enumerate(token):
        if ch.isupper() and prev_cased is not None:
            if prev_cased.islower():
                cuts.append(i)
            else:
                nxt = next((c for c in token[i + 1 :] if _is_cased(c)), None)
                if nxt is not None and nxt.islower():
                    cuts.append(i)
        if _is_cased(ch):
            prev_cased = ch

    if not cuts:
        return [token]
    pieces = []
    start = 0
    for cut in cuts:
        pieces.append(token[start:cut])
        start = cut
    pieces.append(token[start:])
    return pieces


def classify_case(token: str) -> CaseTag:
    """Classify a single-case token; tokens with no cased letters are LOWER.

    Mixed-case input is a contract violation: run split_mixed_case first.
    """
    cased = [ch for ch in token if _is_cased(ch)]
    if not cased:
        return CaseTag.LOWER
    if all(ch.islower() for ch in cased):
        return CaseTag.LOWER
    if all(ch.isupper() for ch in cased):
        if len(cased) >= 2:
            return CaseTag.UPPER
        return CaseTag.TITLE
    if cased[0].isupper() and all(ch.islower() for ch in cased[1:]):
        return CaseTag.TITLE
    raise ContractError(
        "mixed-case token %r cannot be classified; split with split_mixed_case first" % token
    )


def recase(form: str, tag: CaseTag) -> str:
    """Apply a case tag to a lowercase form."""
    if tag is CaseTag.LOWER:
        return form
    if tag is CaseTag.UPPER:
        return form.upper()
    for i, ch in enumerate(form):
        if _is_cased(ch):
            return form[:i] + ch.upper() + form[i + 1 :]
    return form


def _case_units(sentence: str, marker: str) -> Iterator[tuple[str, str, CaseTag]]:
    """Yield (boundary_marker, single_case_text, tag) units of a sentence.

    Every whitespace word except the sentence-initial one contributes a
    marker on its first unit; pieces produced by mixed-case splitting stay
    glued to their word (no marker) so decoding restores the original token.
    """
    for word_idx, word in enumerate(sentence.split()):
        for part_idx, part in enumerate(split_mixed_case(word)):
            unit_marker = marker if (word_idx > 0 and part_idx == 0) else ""
            yield unit_marker, part, classify_case(part)


def encode_inline(
    words: Sequence[tuple[Sequence[str], CaseTag]], marker: str = MARKER
) -> list[str]:
    """Flatten (pieces, tag) words into a lowercased stream with inline tags.

    Pieces are emitted lowercased; TITLE and UPPER words are followed by
    their tag token. <L> tags are dropped to keep sequences short, except
    when an untagged group is glued to a following unmarked group of the
    same word (e.g. the pieces of ``mangER``), where <L> is the only
    boundary signal the decoder has.
    """
    tokens: list[str] = []
    for index, (pieces, tag) in enumerate(words):
        tokens.extend(p.lower() for p in pieces)
        if tag is not CaseTag.LOWER:
            tokens.append(_TAG_TO_TOKEN[tag])
            continue
        if index + 1 < len(words):
            next_first = words[index + 1][0][0] if words[index + 1][0] else ""
            if not (marker and next_first.startswith(marker)):
                tokens.append(TAG_LOWER)
    return tokens


def encode_inline_text(
    sentence: str,
    segment: Optional[Segmenter] = None,
    marker: str = MARKER,
) -> str:
    """Encode a raw sentence with the inline-casing scheme.

    The pluggable segmenter maps a lowercase single-case word to subword
    pieces (default: one piece per word). A token that is a single uppercase
    letter is tagged ``<U>``; literal tag tokens in the input are escaped.
    """
    segment = segment or (lambda w: [w])
    sentence = escape_reserved(sentence, RESERVED_TAGS)
    words = []
    for unit_marker, part, tag in _case_units(sentence, marker):
        pieces = list(segment(part.lower()))
        if not pieces:
            raise ContractError("segmenter returned no pieces for %r" % part)
        if unit_marker:
            pieces[0] = unit_marker + pieces[0]
        if tag is CaseTag.TITLE and len(part) == 1 and part.isupper():
            tag = CaseTag.UPPER
        words.append((pieces, tag))
    return " ".join(encode_inline(words, marker))


def decode_inline(stream: Union[str, Iterable[str]], marker: str = MARKER) -> str:
    """Invert the inline-casing encoding back to cased text.

    Model output is untrusted: a tag with no pending word is ignored with a
    warning instead of failing.
    """
    tokens = stream.split() if isinstance(stream, str) else list(stream)
    words: list[str] = []
    word_parts: list[str] = []
    unit_pieces: list[str] = []

    def close_unit(tag: CaseTag) -> None:
        word_parts.append(recase("".join(unit_pieces), tag))
        unit_pieces.clear()

    for token in tokens:
        if token in _TOKEN_TO_TAG:
            if not unit_pieces:
                log.warning("case tag %s has no pending word; ignored", token)
                continue
            close_unit(_TOKEN_TO_TAG[token])
            continue
        if marker and token.startswith(marker):
            if unit_pieces:
                close_unit(CaseTag.LOWER)
            if word_parts:
                words.append("".join(word_parts))
                word_parts.clear()
            unit_pieces.append(token[len(marker) :])
        else:
            unit_pieces.append(token)
    if unit_pieces:
        close_unit(CaseTag.LOWER)
    if word_parts:
        words.append("".join(word_parts))
    return unescape_reserved(" ".join(words), RESERVED_TAGS)


def encode_factored(
    words: Sequence[tuple[Sequence[str], CaseTag]],
) -> tuple[list[str], list[CaseTag]]:
    """Split (pieces, tag) words into parallel form and tag streams.

    Each piece gets one tag. For a TITLE word only the first piece is TITLE
    (recasing only needs the first letter); UPPER words tag every piece.
    """
    forms: list[str] = []
    tags: list[CaseTag] = []
    for pieces, tag in words:
        for i, piece in enumerate(pieces):
            forms.append(piece.lower())
            if tag is CaseTag.TITLE:
                tags.append(CaseTag.TITLE if i == 0 else CaseTag.LOWER)
            else:
                tags.append(tag)
    return forms, tags


def encode_factored_text(
    sentence: str,
    segment: Optional[Segmenter] = None,
    marker: str = MARKER,
) -> tuple[str, str]:
    """Encode a raw sentence into aligned form and tag token strings."""
    segment = segment or (lambda w: [w])
    words = []
    for unit_marker, part, tag in _case_units(sentence, marker):
        pieces = list(segment(part.lower()))
        if not pieces:
            raise ContractError("segmenter returned no pieces for %r" % part)
        if unit_marker:
            pieces[0] = unit_marker + pieces[0]
        words.append((pieces, tag))
    forms, tags = encode_factored(words)
    return " ".join(forms), " ".join(t.value for t in tags)


def _parse_tag(raw: Union[str, CaseTag]) -> CaseTag:
    if isinstance(raw, CaseTag):
        return raw
    try:
        return CaseTag(raw)
    except ValueError:
        try:
            return CaseTag[raw]
        except KeyError:
            raise CorpusStructureError("unknown case tag %r" % raw) from None


def decode_factored(
    forms: Union[str, Sequence[str]],
    tags: Union[str, Sequence[Union[str, CaseTag]]],
    marker: str = MARKER,
) -> str:
    """Merge aligned form and tag streams back into cased text."""
    form_list = forms.split() if isinstance(forms, str) else list(forms)
    tag_list = tags.split() if isinstance(tags, str) else list(tags)
    if len(form_list) != len(tag_list):
        raise CorpusStructureError(
            "factored stream length mismatch: %d forms vs %d tags"
            % (len(form_list), len(tag_list))
        )
    words: list[str] = []
    parts: list[str] = []
    for form, raw_tag in zip(form_list, tag_list):
        tag = _parse_tag(raw_tag)
        if marker and form.startswith(marker):
            if parts:
                words.append("".join(parts))
                parts.clear()
            form = form[len(marker) :]
        parts.append(recase(form, tag))
    if parts:
        words.append("".join(parts))
    return " ".join(words)


@dataclass(frozen=True)
class CaseNoiseProfile:
    """Per-token rewrite probabilities for synthetic case noise."""

    p_upper: float = 0.05
    p_title: float = 0.10
    p_lower: float = 0.20
    seed: int = 0

    def __post_init__(self):
        for name in ("p_upper", "p_title", "p_lower"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError("%s must be in [0, 1], got %r" % (name, value))
        if self.p_upper + self.p_title + self.p_lower > 1.0 + 1e-12:
            raise ConfigError("case-noise probabilities must sum to at most 1")


_WHITESPACE_SPLIT = re.compile(r"(\s+)")


def apply_case_noise(sentence: str, profile: CaseNoiseProfile, pair_index: int = 0) -> str:
    """Randomly rewrite whitespace tokens to upper, title or lower case.

    Draws are keyed by (seed, pair index, token index), so parallel and
    serial runs agree and any sentence can be re-noised in isolation.
    Whitespace is preserved byte-for-byte.
    """
    chunks = _WHITESPACE_SPLIT.split(sentence)
    token_index = 0
    for i, chunk in enumerate(chunks):
        if not chunk or chunk.isspace():
            continue
        draw = stable_uniform(profile.seed, _NOISE_STREAM, pair_index, token_index)
        token_index += 1
        if draw < profile.p_upper:
            chunks[i] = chunk.upper()
        elif draw < profile.p_upper + profile.p_title:
            chunks[i] = recase(chunk.lower(), CaseTag.TITLE)
        elif draw < profile.p_upper + profile.p_title + profile.p_lower:
            chunks[i] = chunk.lower()
    return "".join(chunks)


def case_variant_text(sentence: str, mode: Union[str, CaseTag]) -> str:
    """Rewrite a whole sentence to upper, lower or per-token title case."""
    tag = mode if isinstance(mode, CaseTag) else CaseTag[str(mode).upper()]
    if tag is CaseTag.UPPER:
        return sentence.upper()
    if tag is CaseTag.LOWER:
        return sentence.lower()
    chunks = _WHITESPACE_SPLIT.split(sentence)
    return "".join(
        recase(c.lower(), CaseTag.TITLE) if c and not c.isspace() else c for c in chunks
    )


def make_case_variant_testset(
    pairs: Iterable[SentencePair], mode: Union[str, CaseTag]
) -> Iterator[SentencePair]:
    """Rewrite the source side of every pair to the requested case.

    Targets are left untouched; this builds the synthetic case-robustness
    test sets (same references, all-upper / all-lower / all-title sources).
    """
    for pair in pairs:
        yield replace(pair, src=case_variant_text(pair.src, mode))


# --------------------------------------------------------------------------
# Estimator-style wrappers so the transforms compose with sklearn pipelines.
# --------------------------------------------------------------------------

class InlineCaser(BaseEstimator, TransformerMixin):
    """Stateless transformer form of the inline-casing encode/decode pair."""

    def __init__(self, marker: str = MARKER, segment: Optional[Segmenter] = None):
        self.marker = marker
        self.segment = segment

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [encode_inline_text(s, self.segment, self.marker) for s in X]

    def inverse_transform(self, X):
        return [decode_inline(s, self.marker) for s in X]


class FactoredCaser(BaseEstimator, TransformerMixin):
    """Transformer producing (forms, tags) string pairs per sentence."""

    def __init__(self, marker: str = MARKER, segment: Optional[Segmenter] = None):
        self.marker = marker
        self.segment = segment

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [encode_factored_text(s, self.segment, self.marker) for s in X]

    def inverse_transform(self, X):
        return [decode_factored(forms, tags, self.marker) for forms, tags in X]


class CaseNoiser(BaseEstimator, TransformerMixin):
    """Transformer applying synthetic case noise with deterministic draws."""

    def __init__(
        self,
        p_upper: float = 0.05,
        p_title: float = 0.10,
        p_lower: float = 0.20,
        seed: int = 0,
    ):
        self.p_upper = p_upper
        self.p_title = p_title
        self.p_lower = p_lower
        self.seed = seed

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        profile = CaseNoiseProfile(self.p_upper, self.p_title, self.p_lower, self.seed)
        return [apply_case_noise(s, profile, i) for i, s in enumerate(X)]


class CaseVariant(BaseEstimator, TransformerMixin):
    """Transformer rewriting sentences wholesale to one case (idempotent)."""

    def __init__(self, mode: str = "lower"):
        self.mode = mode

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [case_variant_text(s, self.mode) for s in X]
