"""Natural-noise pipeline: detect real spelling errors, then re-inject them.

Detection matches out-of-lexicon tokens against a lexicon under an extended
edit distance (deletions, insertions, diacritic-constrained substitutions,
adjacent swaps, plain substitutions, and character-repetition collapse) and
tallies which known word each error most plausibly came from. Generation
replays the harvested error distribution over clean text, plus a small
regex rule set for grammar-level noise (verb endings, punctuation spacing,
case mangling, SMS abbreviations, phonetic spellings).
"""

from __future__ import annotations

import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace as dc_replace
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from sklearn.base import BaseEstimator, TransformerMixin

from .casing import CaseTag, classify_case, recase
from .core import (
    ConfigError,
    ContractError,
    SentencePair,
    ToolkitError,
    stable_uniform,
)

log = logging.getLogger(__name__)

MAX_REPETITION = 10  # longer runs are not attributed to repetition noise

_TOKEN_STREAM = 2  # replace-or-not draw per token
_VARIANT_STREAM = 3  # variant choice draw per replaced token
_RULE_STREAM = 4  # per-match draw for regex rules

_WS_SPLIT = re.compile(r"(\s+)")


class CalibrationError(ToolkitError):
    """The requested sentence-modification rate cannot be reached."""

    def __init__(self, message: str, achievable: float):
        super().__init__(message)
        self.achievable = achievable


class EditOp(Enum):
    """Edit operations named from the error's point of view.

    DELETION means the writer dropped a character of the correct word,
    INSERTION that they added one; REPETITION collapses a run of one
    repeated character (length 2..10) to a single occurrence at cost 1.
    """

    DELETION = "deletion"
    INSERTION = "insertion"
    DIACRITIC_SUB = "diacritic_sub"
    SWAP = "swap"
    SUBSTITUTION = "substitution"
    REPETITION = "repetition"


def _base_char(ch: str) -> str:
    decomposed = unicodedata.normalize("NFD", ch)
    return decomposed[0] if decomposed else ch


def diacritic_equivalent(a: str, b: str) -> bool:
    """True when two distinct characters share a Unicode base letter (e/é/è)."""
    return a != b and _base_char(a) == _base_char(b)


def _run_info(word: str) -> tuple[list[int], list[int]]:
    """Per 1-based end position: backward run length and total run length."""
    n = len(word)
    back = [0] * (n + 1)
    total = [0] * (n + 1)
    i = 0
    while i < n:
        j = i
        while j < n and word[j] == word[i]:
            j += 1
        for k in range(i, j):
            back[k + 1] = k - i + 1
            total[k + 1] = j - i
        i = j
    return back, total


def _distance_bounded(
    observed: str, correct: str, bound: int, allow_repetition: bool = True
) -> Optional[int]:
    """Distance under the extended operation set, or None when above bound."""
    n, m = len(observed), len(correct)
    if m - n > bound:
        return None
    back, total = _run_info(observed)
    rows = [list(range(m + 1))]
    window: list[int] = [0]  # row minima reachable by repetition/swap
    for i in range(1, n + 1):
        prev = rows[-1]
        cur = [i] + [0] * m
        ai = observed[i - 1]
        rep_ok = allow_repetition and back[i] >= 2 and total[i] <= MAX_REPETITION
        for j in range(1, m + 1):
            bj = correct[j - 1]
            best = prev[j - 1] + (0 if ai == bj else 1)
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if (
                i >= 2
                and j >= 2
                and observed[i - 2] == bj
                and ai == correct[j - 2]
                and observed[i - 2] != ai
            ):
                swap = rows[i - 2][j - 2] + 1
                if swap < best:
                    best = swap
            if rep_ok and bj == ai:
                for mm in range(2, min(back[i], MAX_REPETITION) + 1):
                    rep = rows[i - mm][j - 1] + 1
                    if rep < best:
                        best = rep
            cur[j] = best
        rows.append(cur)
        cur_min = min(cur)
        window.append(cur_min)
        if len(window) > MAX_REPETITION:
            window.pop(0)
        # Future rows can only undercut via repetition or swap reaching back
        # into the window, so pruning needs the whole window above the bound.
        if cur_min > bound and min(window[:-1]) >= bound:
            return None
    return rows[n][m] if rows[n][m] <= bound else None


def edit_distance(
    observed: str,
    correct: str,
    bound: Optional[int] = None,
    allow_repetition: bool = True,
) -> tuple[int, list[EditOp]]:
    """Minimal edit cost from a correct word to an observed corruption.

    Unit costs for deletion, insertion, substitution and adjacent swap;
    collapsing a run of one repeated character (length 2..10) in the
    observed word costs 1 for the whole run. A substitution whose two
    characters share a base letter is reported as DIACRITIC_SUB.

    With ``bound`` set, returns ``(bound + 1, [])`` as soon as the true
    distance is known to exceed it.
    """
    if bound is not None:
        quick = _distance_bounded(observed, correct, bound, allow_repetition)
        if quick is None:
            return bound + 1, []

    n, m = len(observed), len(correct)
    back, total = _run_info(observed)
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    parent: list[list[Optional[tuple[int, int, Optional[EditOp]]]]] = [
        [None] * (m + 1) for _ in range(n + 1)
    ]
    for i in range(1, n + 1):
        cost[i][0] = i
        parent[i][0] = (i - 1, 0, EditOp.INSERTION)
    for j in range(1, m + 1):
        cost[0][j] = j
        parent[0][j] = (0, j - 1, EditOp.DELETION)
    for i in range(1, n + 1):
        ai = observed[i - 1]
        rep_ok = allow_repetition and back[i] >= 2 and total[i] <= MAX_REPETITION
        for j in range(1, m + 1):
            bj = correct[j - 1]
            if ai == bj:
                candidates = [(cost[i - 1][j - 1], i - 1, j - 1, None)]
            else:
                op = EditOp.DIACRITIC_SUB if diacritic_equivalent(ai, bj) else EditOp.SUBSTITUTION
                candidates = [(cost[i - 1][j - 1] + 1, i - 1, j - 1, op)]
            if rep_ok and bj == ai:
                for mm in range(2, min(back[i], MAX_REPETITION) + 1):
                    candidates.append((cost[i - mm][j - 1] + 1, i - mm, j - 1, EditOp.REPETITION))
            if (
                i >= 2
                and j >= 2
                and observed[i - 2] == bj
                and ai == correct[j - 2]
                and observed[i - 2] != ai
            ):
                candidates.append((cost[i - 2][j - 2] + 1, i - 2, j - 2, EditOp.SWAP))
            candidates.append((cost[i][j - 1] + 1, i, j - 1, EditOp.DELETION))
            candidates.append((cost[i - 1][j] + 1, i - 1, j, EditOp.INSERTION))
            best = min(candidates, key=lambda t: t[0])
            cost[i][j] = best[0]
            parent[i][j] = (best[1], best[2], best[3])

    ops: list[EditOp] = []
    i, j = n, m
    while (i, j) != (0, 0):
        pi, pj, op = parent[i][j]
        if op is not None:
            ops.append(op)
        i, j = pi, pj
    ops.reverse()
    return cost[n][m], ops


class Lexicon:
    """A set of known word forms, optionally with corpus frequencies.

    Forms are NFC-normalized and lowercased on construction. The lexicon is
    immutable after load and shared read-only across threads; the matching
    trie is built lazily on first use.
    """

    def __init__(self, entries: Iterable[str], freq: Optional[Mapping[str, int]] = None):
        normalized = {
            unicodedata.normalize("NFC", word).lower() for word in entries if word.strip()
        }
        if not normalized:
            raise ConfigError("a lexicon needs at least one entry")
        self.entries = frozenset(normalized)
        self.freq = {
            unicodedata.normalize("NFC", w).lower(): int(n) for w, n in (freq or {}).items()
        }
        self._trie: Optional[dict] = None

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Lexicon)
            and self.entries == other.entries
            and self.freq == other.freq
        )

    def frequency(self, word: str) -> int:
        return self.freq.get(word, 0)

    @property
    def trie(self) -> dict:
        if self._trie is None:
            root: dict = {}
            for word in self.entries:
                node = root
                for ch in word:
                    node = node.setdefault(ch, {})
                node[""] = word
            self._trie = root
        return self._trie


def load_lexicon(path: str) -> Lexicon:
    """Load a lexicon file: one word per line, optionally tab + frequency."""
    entries = []
    freq = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            word, _, count = line.partition("\t")
            entries.append(word)
            if count:
                freq[word] = int(count)
    return Lexicon(entries, freq)


def fuzzy_match(
    word: str,
    lexicon: Lexicon,
    max_dist: int = 2,
) -> list[tuple[str, int, list[EditOp]]]:
    """All lexicon words within max_dist of an out-of-lexicon word.

    The search walks the lexicon trie with one dynamic-programming row per
    node, but the result set is defined by (and tested against) exhaustive
    enumeration. Results are sorted by distance, then descending lexicon
    frequency, then lexicographically.
    """
    query = word.lower()
    if query in lexicon:
        raise ContractError(
            "%r is in the lexicon; fuzzy_match expects out-of-lexicon words" % word
        )
    n = len(query)
    back, total = _run_info(query)
    root_row = list(range(n + 1))
    hits: list[tuple[str, int]] = []
    # Stack entries: (node, node_char, row, parent_row, parent_char).
    stack = [(child, ch, root_row, None, None) for ch, child in lexicon.trie.items() if ch]
    while stack:
        node, cb, prev, prev2, pb = stack.pop()
        cur = [prev[0] + 1] + [0] * n
        for i in range(1, n + 1):
            ai = query[i - 1]
            best = prev[i - 1] + (0 if ai == cb else 1)
            if prev[i] + 1 < best:
                best = prev[i] + 1
            if cur[i - 1] + 1 < best:
                best = cur[i - 1] + 1
            if (
                prev2 is not None
                and i >= 2
                and query[i - 2] == cb
                and ai == pb
                and query[i - 2] != ai
            ):
                swap = prev2[i - 2] + 1
                if swap < best:
                    best = swap
            if back[i] >= 2 and total[i] <= MAX_REPETITION and ai == cb:
                for mm in range(2, min(back[i], MAX_REPETITION) + 1):
                    rep = prev[i - mm] + 1
                    if rep < best:
                        best = rep
            cur[i] = best
        terminal = node.get("")
        if terminal is not None and cur[n] <= max_dist:
            hits.append((terminal, cur[n]))
        # Children may still undercut via a swap through the parent row.
        if min(cur) > max_dist and min(prev) >= max_dist:
            continue
        for ch, child in node.items():
            if ch:
                stack.append((child, ch, cur, prev, cb))

    results = []
    for candidate, dist in hits:
        _, ops = edit_distance(query, candidate)
        results.append((candidate, dist, ops))
    results.sort(key=lambda r: (r[1], -lexicon.frequency(r[0]), r[0]))
    return results


# --------------------------------------------------------------------------
# Tokenization for this module: whitespace split, peel edge punctuation.
# --------------------------------------------------------------------------

def _peelable(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def _peel(token: str) -> tuple[str, str, str]:
    start, end = 0, len(token)
    while start < end and _peelable(token[start]):
        start += 1
    while end > start and _peelable(token[end - 1]):
        end -= 1
    return token[:start], token[start:end], token[end:]


def tokenize(text: str) -> list[str]:
    """Whitespace tokens with leading/trailing punctuation peeled off."""
    cores = []
    for token in text.split():
        _, core, _ = _peel(token)
        if core:
            cores.append(core)
    return cores


class ErrorDictionary:
    """Map from a correct word to its observed noisy variants with counts."""

    def __init__(self, mapping: Mapping[str, Sequence[tuple[str, int]]]):
        data = {}
        for correct, variants in mapping.items():
            cleaned = []
            for variant, count in variants:
                if count < 1:
                    raise ConfigError(
                        "variant %r of %r has count %d; counts must be >= 1"
                        % (variant, correct, count)
                    )
                if variant == correct:
                    raise ConfigError("variant of %r equals its correct form" % correct)
                cleaned.append((variant, int(count)))
            cleaned.sort(key=lambda vc: (-vc[1], vc[0]))
            data[correct] = tuple(cleaned)
        self._data = data

    def __contains__(self, word: str) -> bool:
        return word in self._data

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other) -> bool:
        return isinstance(other, ErrorDictionary) and self._data == other._data

    def variants(self, word: str) -> tuple[tuple[str, int], ...]:
        return self._data.get(word, ())

    def items(self):
        return self._data.items()

    @classmethod
    def from_counts(cls, counts: Mapping[tuple[str, str], int]) -> "ErrorDictionary":
        grouped: dict[str, list[tuple[str, int]]] = {}
        for (correct, variant), count in counts.items():
            grouped.setdefault(correct, []).append((variant, count))
        return cls(grouped)

    def save(self, path: str) -> None:
        """One record per line: correct word, tab, ``variant:count`` list."""
        with open(path, "w", encoding="utf-8") as out:
            for correct in sorted(self._data):
                cells = ";".join("%s:%d" % vc for vc in self._data[correct])
                out.write("%s\t%s\n" % (correct, cells))

    @classmethod
    def load(cls, path: str) -> "ErrorDictionary":
        mapping: dict[str, list[tuple[str, int]]] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                correct, sep, rest = line.partition("\t")
                if not sep:
                    raise ConfigError("malformed dictionary line %d: %r" % (line_no, line))
                variants = []
                for cell in rest.split(";"):
                    variant, vsep, count = cell.rpartition(":")
                    if not vsep:
                        raise ConfigError(
                            "malformed variant cell %r at line %d" % (cell, line_no)
                        )
                    variants.append((variant, int(count)))
                mapping[correct] = variants
        return cls(mapping)


def build_error_dictionary(
    corpus: Iterable[Union[str, SentencePair]],
    lexicon: Lexicon,
    max_dist: int = 2,
) -> ErrorDictionary:
    """Harvest noisy variants of known words from monolingual in-domain text.

    Every alphabetic out-of-lexicon token with at least one fuzzy match is
    attributed to its top-ranked candidate (lowest distance, then highest
    lexicon frequency, then lexicographic). The tally is a mergeable
    reduction, so shards can be counted independently and summed.
    """
    if len(lexicon) == 0:
        raise ConfigError("cannot build an error dictionary from an empty lexicon")
    counts: Counter[tuple[str, str]] = Counter()
    cache: dict[str, Optional[str]] = {}
    for item in corpus:
        text = item.src if isinstance(item, SentencePair) else item
        for core in tokenize(text):
            if not core.isalpha():
                continue
            lowered = core.lower()
            if lowered in lexicon:
                continue
            if lowered in cache:
                top = cache[lowered]
            else:
                matches = fuzzy_match(lowered, lexicon, max_dist)
                top = matches[0][0] if matches else None
                cache[lowered] = top
            if top is not None:
                counts[(top, lowered)] += 1
    return ErrorDictionary.from_counts(counts)


class RuleId(Enum):
    """Manual noise-rule families, applied in this order."""

    VERB_ENDING = 0
    PUNCT_SPACING = 1
    CASE_MANGLING = 2
    SMS = 3
    PHONETIC = 4


UPPER_REPLACEMENT = "!upper"  # replacement sentinel: uppercase the whole match


@dataclass(frozen=True)
class RegexNoiseRule:
    """One regex rewrite applied independently to each match with a probability."""

    rule_id: RuleId
    pattern: str
    replacement: str
    probability: float = 0.02

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ConfigError("rule probability must be in [0, 1]")
        try:
            compiled = re.compile(self.pattern)
        except re.error as exc:
            raise ConfigError("rule pattern %r does not compile: %s" % (self.pattern, exc))
        object.__setattr__(self, "_compiled", compiled)

    @property
    def compiled(self) -> re.Pattern:
        return self._compiled

    def expand(self, match: re.Match) -> str:
        if self.replacement == UPPER_REPLACEMENT:
            return match.group(0).upper()
        return match.expand(self.replacement)


_SMS_TABLE = [
    ("beaucoup", "bcp"),
    ("pourquoi", "pk"),
    ("quelqu'un", "qqn"),
    ("rendez-vous", "rdv"),
    ("week-end", "we"),
    ("s'il te plaît", "stp"),
    ("quoi", "koi"),
    ("que", "k"),
]

_PHONETIC_TABLE = [
    ("ça", "sa"),
    ("sa", "ça"),
    ("c'est", "ses"),
    ("ses", "c'est"),
]


def default_rules(probability: float = 0.02) -> list[RegexNoiseRule]:
    """The built-in manual rule set; every probability defaults to 0.02."""
    rules = [
        RegexNoiseRule(RuleId.VERB_ENDING, r"(?<=[a-zà-ÿ])er\b", "é", probability),
        RegexNoiseRule(RuleId.VERB_ENDING, r"(?<=[a-zà-ÿ])é\b", "er", probability),
        RegexNoiseRule(RuleId.PUNCT_SPACING, r" ([.,!?;:])", r"\1", probability),
        RegexNoiseRule(RuleId.PUNCT_SPACING, r"([.,!?]) ", r"\1", probability),
        RegexNoiseRule(RuleId.PUNCT_SPACING, r"(?<=\w)([.,!?])", r" \1", probability),
        RegexNoiseRule(RuleId.CASE_MANGLING, r"(?<=[a-zà-ÿ])[a-zà-ÿ]", UPPER_REPLACEMENT, probability),
    ]
    for full, short in _SMS_TABLE:
        rules.append(RegexNoiseRule(RuleId.SMS, r"\b%s\b" % re.escape(full), short, probability))
    for correct, noisy in _PHONETIC_TABLE:
        rules.append(
            RegexNoiseRule(RuleId.PHONETIC, r"\b%s\b" % re.escape(correct), noisy, probability)
        )
    return rules


def load_rules(path: str) -> list[RegexNoiseRule]:
    """Load rules: one per line as ``rule_id<TAB>pattern<TAB>replacement<TAB>prob``."""
    rules = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ConfigError("malformed rule at line %d: %r" % (line_no, line))
            rule_id, pattern, replacement, probability = parts
            rules.append(
                RegexNoiseRule(RuleId[rule_id], pattern, replacement, float(probability))
            )
    return rules


def save_rules(rules: Sequence[RegexNoiseRule], path: str) -> None:
    with open(path, "w", encoding="utf-8") as out:
        for rule in rules:
            out.write(
                "%s\t%s\t%s\t%g\n" % (rule.rule_id.name, rule.pattern, rule.replacement, rule.probability)
            )


def apply_regex_rules(
    sentence: str,
    rules: Sequence[RegexNoiseRule],
    seed: int = 0,
    pair_index: int = 0,
) -> str:
    """Apply each rule's matches independently with the rule's probability.

    Rules run in fixed rule-family order, left to right within a sentence;
    draws are keyed by (seed, pair index, rule ordinal, match ordinal).
    """
    ordered = sorted(enumerate(rules), key=lambda ir: (ir[1].rule_id.value, ir[0]))
    for ordinal, (_, rule) in enumerate(ordered):
        if rule.probability == 0.0:
            continue
        out: list[str] = []
        pos = 0
        changed = False
        for match_idx, match in enumerate(rule.compiled.finditer(sentence)):
            draw = stable_uniform(seed, _RULE_STREAM, pair_index, ordinal, match_idx)
            if draw >= rule.probability:
                continue
            out.append(sentence[pos : match.start()])
            out.append(rule.expand(match))
            pos = match.end()
            changed = True
        if changed:
            out.append(sentence[pos:])
            sentence = "".join(out)
    return sentence


@dataclass(frozen=True)
class NoiseConfig:
    """Everything inject_noise needs: dictionary, rules, rate, and seed."""

    dictionary: ErrorDictionary
    rules: Sequence[RegexNoiseRule] = field(default_factory=tuple)
    token_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.token_rate <= 1.0:
            raise ConfigError("token_rate must be in [0, 1], got %r" % self.token_rate)


def _match_case(variant: str, original: str) -> str:
    try:
        tag = classify_case(original)
    except ContractError:
        return variant
    if tag is CaseTag.LOWER:
        return variant
    return recase(variant, tag)


def inject_noise(
    sentence: str, config: NoiseConfig, pair_index: int = 0
) -> tuple[str, bool]:
    """Replace dictionary words by sampled variants, then apply regex rules.

    Each token whose lowercased core is in the dictionary is replaced with
    probability token_rate by a variant drawn proportionally to the observed
    variant counts. Deterministic under (seed, pair index).
    """
    chunks = _WS_SPLIT.split(sentence)
    token_index = 0
    for i, chunk in enumerate(chunks):
        if not chunk or chunk.isspace():
            continue
        index = token_index
        token_index += 1
        prefix, core, suffix = _peel(chunk)
        if not core:
            continue
        variants = config.dictionary.variants(core.lower())
        if not variants:
            continue
        if stable_uniform(config.seed, _TOKEN_STREAM, pair_index, index) >= config.token_rate:
            continue
        total = sum(count for _, count in variants)
        draw = stable_uniform(config.seed, _VARIANT_STREAM, pair_index, index) * total
        cumulative = 0
        chosen = variants[-1][0]
        for variant, count in variants:
            cumulative += count
            if draw < cumulative:
                chosen = variant
                break
        chunks[i] = prefix + _match_case(chosen, core) + suffix
    noisy = apply_regex_rules("".join(chunks), config.rules, config.seed, pair_index)
    return noisy, noisy != sentence


def noisify_corpus(
    pairs: Iterable[SentencePair], config: NoiseConfig
) -> Iterator[tuple[SentencePair, bool]]:
    """Rewrite source sides with natural noise; targets stay byte-identical.

    Yields (pair, modified) so callers can write the audit sidecar.
    """
    for index, pair in enumerate(pairs):
        noisy, modified = inject_noise(pair.src, config, index)
        yield dc_replace(pair, src=noisy), modified


@dataclass(frozen=True)
class CalibrationResult:
    token_rate: float
    achieved_rate: float
    rules_disabled: bool = False


def _measure(sample: Sequence[str], config: NoiseConfig, token_rate: float) -> float:
    modified = 0
    probe = dc_replace(config, token_rate=token_rate)
    for index, sentence in enumerate(sample):
        if inject_noise(sentence, probe, index)[1]:
            modified += 1
    return modified / len(sample)


def calibrate_rate(
    config: NoiseConfig,
    sample: Iterable[str],
    target_sentence_rate: float = 0.30,
    tolerance: float = 0.02,
) -> CalibrationResult:
    """Find the token_rate whose sentence-modification rate hits the target.

    Bisection over token_rate with rule probabilities held fixed; the
    measured fraction is monotone in the rate because every token keeps its
    own fixed draw. Raises CalibrationError (naming the achievable extreme)
    when even rate 0 or 1 cannot reach the target.
    """
    sentences = [s.src if isinstance(s, SentencePair) else s for s in sample]
    if not sentences:
        raise ConfigError("calibration sample is empty")
    if len(sentences) < 10_000:
        log.info("calibration sample has %d sentences; >= 10k recommended", len(sentences))
    if target_sentence_rate <= 0.0:
        return CalibrationResult(0.0, 0.0, rules_disabled=True)

    low_rate = _measure(sentences, config, 0.0)
    if low_rate > target_sentence_rate + tolerance:
        raise CalibrationError(
            "rules alone modify %.4f of sentences, above target %.2f (+/- %.2f); "
            "lower the rule probabilities" % (low_rate, target_sentence_rate, tolerance),
            achievable=low_rate,
        )
    if abs(low_rate - target_sentence_rate) <= tolerance:
        return CalibrationResult(0.0, low_rate)
    high_rate = _measure(sentences, config, 1.0)
    if high_rate < target_sentence_rate - tolerance:
        raise CalibrationError(
            "achievable maximum sentence-modification rate is %.4f, below target "
            "%.2f (+/- %.2f); the dictionary covers too few tokens"
            % (high_rate, target_sentence_rate, tolerance),
            achievable=high_rate,
        )

    lo, hi = 0.0, 1.0
    best_rate, best_measure = 1.0, high_rate
    for _ in range(40):
        mid = (lo + hi) / 2.0
        measured = _measure(sentences, config, mid)
        if abs(measured - target_sentence_rate) < abs(best_measure - target_sentence_rate):
            best_rate, best_measure = mid, measured
        if abs(measured - target_sentence_rate) <= tolerance / 2.0 or hi - lo < 1e-4:
            break
        if measured < target_sentence_rate:
            lo = mid
        else:
            hi = mid
    return CalibrationResult(best_rate, best_measure)


# --------------------------------------------------------------------------
# Corpus noise profiling (emojis / all-caps words / typos per 100 tokens).
# --------------------------------------------------------------------------

# Variation selectors are deliberately excluded so "emoji + VS16" pairs
# count once.
_EMOJI_RANGES = (
    (0x1F1E6, 0x1F1FF),  # regional indicators (flags)
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
    (0x1FA70, 0x1FAFF),
    (0x2600, 0x26FF),
    (0x2700, 0x27BF),
)


def is_emoji(ch: str) -> bool:
    code = ord(ch)
    return any(lo <= code <= hi for lo, hi in _EMOJI_RANGES)


@dataclass(frozen=True)
class NoiseProfile:
    emojis_per_100: float
    allcaps_per_100: float
    typos_per_100: float
    n_tokens: int


def noise_profile(
    corpus: Iterable[Union[str, SentencePair]],
    lexicon: Lexicon,
    acronyms: Sequence[str] = (),
    max_dist: int = 2,
) -> NoiseProfile:
    """Per-100-token rates of emojis, all-caps words, and probable typos.

    All-caps words need at least two letters, all uppercase, and are not
    counted when listed as acronyms. A typo is an alphabetic out-of-lexicon
    token with at least one fuzzy match within max_dist.
    """
    acronym_set = set(acronyms)
    n_tokens = 0
    emojis = 0
    allcaps = 0
    typos = 0
    typo_cache: dict[str, bool] = {}
    for item in corpus:
        text = item.src if isinstance(item, SentencePair) else item
        emojis += sum(1 for ch in text if is_emoji(ch))
        for token in text.split():
            n_tokens += 1
            _, core, _ = _peel(token)
            if not core:
                continue
            letters = [ch for ch in core if ch.isalpha()]
            if (
                len(letters) >= 2
                and all(ch.isupper() for ch in letters)
                and core not in acronym_set
            ):
                allcaps += 1
            if core.isalpha():
                lowered = core.lower()
                if lowered not in lexicon:
                    if lowered not in typo_cache:
                        typo_cache[lowered] = bool(fuzzy_match(lowered, lexicon, max_dist))
                    if typo_cache[lowered]:
                        typos += 1
    scale = 100.0 / n_tokens if n_tokens else 0.0
    return NoiseProfile(emojis * scale, allcaps * scale, typos * scale, n_tokens)


class NaturalNoiser(BaseEstimator, TransformerMixin):
    """Estimator form of the natural-noise pipeline.

    ``fit`` harvests the error dictionary from monolingual in-domain text
    (unless a prebuilt dictionary is supplied); ``transform`` injects noise
    into sentences with deterministic per-index draws.
    """

    def __init__(
        self,
        lexicon: Optional[Lexicon] = None,
        dictionary: Optional[ErrorDictionary] = None,
        rules: Optional[Sequence[RegexNoiseRule]] = None,
        token_rate: float = 0.1,
        seed: int = 0,
        max_dist: int = 2,
    ):
        self.lexicon = lexicon
        self.dictionary = dictionary
        self.rules = rules
        self.token_rate = token_rate
        self.seed = seed
        self.max_dist = max_dist

    def fit(self, X: Iterable[Union[str, SentencePair]], y=None):
        if self.dictionary is not None:
            self.dictionary_ = self.dictionary
        else:
            if self.lexicon is None:
                raise ConfigError("NaturalNoiser needs a lexicon or a prebuilt dictionary")
            self.dictionary_ = build_error_dictionary(X, self.lexicon, self.max_dist)
        return self

    def _config(self) -> NoiseConfig:
        rules = tuple(self.rules) if self.rules is not None else ()
        return NoiseConfig(self.dictionary_, rules, self.token_rate, self.seed)

    def transform(self, X: Iterable[str]) -> list[str]:
        config = self._config()
        return [inject_noise(s, config, i)[0] for i, s in enumerate(X)]
