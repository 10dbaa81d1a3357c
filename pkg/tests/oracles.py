"""Independent reference implementations used as test oracles.

These deliberately mirror the canonical algorithms in their original shape
(string-keyed n-gram counters, floor-logged precisions, full DP tables)
rather than sharing any code path with the package under test.
"""

from __future__ import annotations

import math
import re
from collections import Counter

from ugcmt.lexnoise import Lexicon, edit_distance

NGRAM_ORDER = 4


def ref_tokenize_13a(line: str) -> str:
    """Transcription of the mteval-v13a tokenizer (returns a joined string)."""
    norm = line
    norm = norm.replace("<skipped>", "")
    norm = norm.replace("-\n", "")
    norm = norm.replace("\n", " ")
    norm = norm.replace("&quot;", '"')
    norm = norm.replace("&amp;", "&")
    norm = norm.replace("&lt;", "<")
    norm = norm.replace("&gt;", ">")
    norm = " {} ".format(norm)
    norm = re.sub(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])", " \\1 ", norm)
    norm = re.sub(r"([^0-9])([\.,])", "\\1 \\2 ", norm)
    norm = re.sub(r"([\.,])([^0-9])", " \\1 \\2", norm)
    norm = re.sub(r"([0-9])(-)", "\\1 - ", norm)
    norm = re.sub(r"\s+", " ", norm)
    norm = re.sub(r"^\s+", "", norm)
    norm = re.sub(r"\s+$", "", norm)
    return norm


def _extract_ngrams(line: str, max_order: int = NGRAM_ORDER) -> Counter:
    ngrams: Counter = Counter()
    tokens = line.split()
    for n in range(1, max_order + 1):
        for i in range(0, len(tokens) - n + 1):
            ngrams[" ".join(tokens[i : i + n])] += 1
    return ngrams


def _my_log(num: float) -> float:
    if num == 0.0:
        return -9999999999
    return math.log(num)


def ref_corpus_bleu(hyps, refs, lowercase: bool = False) -> float:
    """Canonical corpus BLEU: 13a tokens, exp smoothing, single reference."""
    correct = [0] * NGRAM_ORDER
    total = [0] * NGRAM_ORDER
    sys_len = 0
    ref_len = 0
    assert len(hyps) == len(refs)
    for hyp, ref in zip(hyps, refs):
        if lowercase:
            hyp, ref = hyp.lower(), ref.lower()
        output = ref_tokenize_13a(hyp.rstrip())
        reference = ref_tokenize_13a(ref.rstrip())
        sys_len += len(output.split())
        ref_len += len(reference.split())
        ref_ngrams = _extract_ngrams(reference)
        sys_ngrams = _extract_ngrams(output)
        for ngram in sys_ngrams.keys():
            n = len(ngram.split())
            correct[n - 1] += min(sys_ngrams[ngram], ref_ngrams.get(ngram, 0))
            total[n - 1] += sys_ngrams[ngram]

    precisions = [0.0] * NGRAM_ORDER
    smooth_mteval = 1.0
    for n in range(1, NGRAM_ORDER + 1):
        if total[n - 1] == 0:
            break
        if correct[n - 1] == 0:
            smooth_mteval *= 2
            precisions[n - 1] = 100.0 / (smooth_mteval * total[n - 1])
        else:
            precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1]

    brevity_penalty = 1.0
    if sys_len < ref_len:
        brevity_penalty = math.exp(1 - ref_len / sys_len) if sys_len > 0 else 0.0
    score = brevity_penalty * math.exp(
        sum(map(_my_log, precisions)) / NGRAM_ORDER
    )
    return score


def textbook_levenshtein(a, b) -> int:
    """Plain unit-cost Levenshtein over two token sequences (full table)."""
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][0] = i
    for j in range(m + 1):
        table[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (0 if a[i - 1] == b[j - 1] else 1),
            )
    return table[n][m]


def brute_force_fuzzy(word: str, lexicon: Lexicon, max_dist: int = 2):
    """Exhaustive scan of the lexicon with the module's edit distance.

    The prefilters are provably sound lower bounds on the extended distance
    (they can only skip words whose true distance exceeds max_dist), so the
    scan stays exhaustive over possible hits.
    """
    query = word.lower()
    query_chars = set(query)
    hits = []
    for candidate in lexicon.entries:
        if len(candidate) - len(query) > max_dist:
            continue
        if len(query) - len(candidate) > 9 * max_dist:
            continue
        candidate_chars = set(candidate)
        if sum(1 for ch in query if ch not in candidate_chars) > max_dist:
            continue
        if sum(1 for ch in candidate if ch not in query_chars) > max_dist:
            continue
        dist, _ = edit_distance(query, candidate, bound=max_dist)
        if dist <= max_dist:
            hits.append((candidate, dist))
    hits.sort(key=lambda cd: (cd[1], -lexicon.frequency(cd[0]), cd[0]))
    return hits


def minimal_single_case_pieces(token: str):
    """Minimum number of single-case pieces a token can be cut into.

    Exhaustive search over all cut positions; None when no segmentation
    into single-case pieces exists (never happens for real text).
    """

    def single_case(piece: str) -> bool:
        cased = [ch for ch in piece if ch.isupper() or ch.islower()]
        if not cased:
            return True
        if all(ch.islower() for ch in cased):
            return True
        if all(ch.isupper() for ch in cased):
            return True
        return cased[0].isupper() and all(ch.islower() for ch in cased[1:])

    best: dict[int, int] = {0: 0}
    for end in range(1, len(token) + 1):
        candidates = [
            best[start] + 1
            for start in range(end)
            if start in best and single_case(token[start:end])
        ]
        if candidates:
            best[end] = min(candidates)
    return best.get(len(token))
