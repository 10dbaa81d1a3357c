"""Targeted evaluation: BLEU, substitution mining, polysemy, human rankings.

BLEU follows the canonical detokenized-scoring semantics (13a tokenization,
exponential smoothing of zero-match orders, single reference, brevity
penalty) and reports a signature string so scores are comparable.
Substitution mining aligns hypotheses to references word-by-word and ranks
the most frequent replacements. Ranking statistics cover win/tie/loss
tables, the Wilcoxon signed-rank test, and inter-judge kappa.
"""

from __future__ import annotations

import itertools
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import ConfigError, ContractError, CorpusStructureError

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Tokenization (mteval-13a semantics) and corpus BLEU.
# --------------------------------------------------------------------------

_13A_SUBS = (
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 - "),
)


def tokenize_13a(text: str) -> list[str]:
    """Tokenize one segment the way the mteval-v13a scorer does.

    Punctuation is split from adjacent non-digits, symbol characters are
    isolated, and a dash after a digit is split; periods and commas between
    digits stay attached (decimal and thousands separators).
    """
    norm = text.replace("<skipped>", "")
    norm = norm.replace("-\n", "").replace("\n", " ")
    norm = (
        norm.replace("&quot;", '"')
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
    )
    norm = " %s " % norm
    for pattern, repl in _13A_SUBS:
        norm = pattern.sub(repl, norm)
    return norm.split()


@dataclass(frozen=True)
class BleuConfig:
    """Scoring knobs; defaults mirror detokenized single-reference scoring."""

    case_sensitive: bool = True
    max_order: int = 4
    smoothing: str = "exp"
    tokenizer: str = "13a"

    def __post_init__(self):
        if self.smoothing not in ("exp", "none"):
            raise ConfigError("unsupported smoothing %r" % self.smoothing)
        if self.tokenizer not in ("13a", "none"):
            raise ConfigError("unsupported tokenizer %r" % self.tokenizer)
        if self.max_order < 1:
            raise ConfigError("max_order must be >= 1")

    @property
    def signature(self) -> str:
        case = "mixed" if self.case_sensitive else "lc"
        return "case.%s+numrefs.1+smooth.%s+tok.%s" % (case, self.smoothing, self.tokenizer)


@dataclass(frozen=True)
class BleuResult:
    score: float
    precisions: tuple[float, ...]
    bp: float
    sys_len: int
    ref_len: int
    counts: tuple[int, ...]
    totals: tuple[int, ...]
    signature: str

    def format(self, width: int = 2) -> str:
        precisions = "/".join("%.1f" % p for p in self.precisions)
        ratio = self.sys_len / self.ref_len if self.ref_len else 0.0
        return (
            "BLEU+%s = %.*f %s (BP = %.3f ratio = %.3f hyp_len = %d ref_len = %d)"
            % (self.signature, width, self.score, precisions, self.bp, ratio, self.sys_len, self.ref_len)
        )

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "precisions": list(self.precisions),
            "bp": self.bp,
            "sys_len": self.sys_len,
            "ref_len": self.ref_len,
            "signature": self.signature,
        }


def _ngram_counts(tokens: Sequence[str], max_order: int) -> Counter:
    counts: Counter = Counter()
    for order in range(1, max_order + 1):
        for i in range(len(tokens) - order + 1):
            counts[tuple(tokens[i : i + order])] += 1
    return counts


def corpus_bleu(
    hyps: Iterable[str], refs: Iterable[str], config: Optional[BleuConfig] = None
) -> BleuResult:
    """Corpus-level BLEU of hypotheses against single references.

    Clipped n-gram precisions up to max_order over tokenized text, brevity
    penalty exp(1 - r/c) when the output is shorter than the reference, and
    exponential smoothing: the k-th consecutive zero-match order scores
    1 / (2^k * total). Orders with no n-grams at all contribute a zero
    precision, matching the reference scorer on very short corpora.
    """
    config = config or BleuConfig()
    hyp_list = list(hyps)
    ref_list = list(refs)
    if len(hyp_list) != len(ref_list):
        raise CorpusStructureError(
            "corpus length mismatch: %d hypotheses vs %d references"
            % (len(hyp_list), len(ref_list))
        )
    if not hyp_list:
        raise CorpusStructureError("cannot score an empty corpus")

    order = config.max_order
    tokenizer = tokenize_13a if config.tokenizer == "13a" else str.split
    correct = [0] * order
    total = [0] * order
    sys_len = 0
    ref_len = 0
    for hyp, ref in zip(hyp_list, ref_list):
        if not config.case_sensitive:
            hyp, ref = hyp.lower(), ref.lower()
        hyp_tokens = tokenizer(hyp)
        ref_tokens = tokenizer(ref)
        sys_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        ref_counts = _ngram_counts(ref_tokens, order)
        for ngram, count in _ngram_counts(hyp_tokens, order).items():
            k = len(ngram) - 1
            total[k] += count
            correct[k] += min(count, ref_counts.get(ngram, 0))

    precisions = [0.0] * order
    smooth = 1.0
    for k in range(order):
        if total[k] == 0:
            break
        if correct[k] == 0:
            if config.smoothing == "exp":
                smooth *= 2.0
                precisions[k] = 100.0 / (smooth * total[k])
        else:
            precisions[k] = 100.0 * correct[k] / total[k]

    if sys_len == 0:
        bp = 0.0
    elif sys_len < ref_len:
        bp = math.exp(1.0 - ref_len / sys_len)
    else:
        bp = 1.0
    product = 1.0
    for p in precisions:
        product *= p / 100.0
    score = 100.0 * bp * product ** (1.0 / order)
    return BleuResult(
        score=score,
        precisions=tuple(precisions),
        bp=bp,
        sys_len=sys_len,
        ref_len=ref_len,
        counts=tuple(correct),
        totals=tuple(total),
        signature=config.signature,
    )


# --------------------------------------------------------------------------
# Word-level edit alignment and substitution mining.
# --------------------------------------------------------------------------

def edit_alignment(
    hyp_tokens: Sequence[str], ref_tokens: Sequence[str]
) -> list[tuple[str, Optional[str], Optional[str]]]:
    """Minimal-cost word alignment under unit insert/delete/substitute.

    Returns (op, hyp_token, ref_token) triples where op is one of match,
    sub, del (hypothesis token with no reference mate) and ins (reference
    token missing from the hypothesis). Shift-free by design: block moves
    contribute no substitution pairs for mining.
    """
    n, m = len(hyp_tokens), len(ref_tokens)
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
    for j in range(1, m + 1):
        cost[0][j] = j
    for i in range(1, n + 1):
        hi = hyp_tokens[i - 1]
        for j in range(1, m + 1):
            diag = cost[i - 1][j - 1] + (0 if hi == ref_tokens[j - 1] else 1)
            delete = cost[i - 1][j] + 1
            insert = cost[i][j - 1] + 1
            cost[i][j] = min(diag, delete, insert)

    ops: list[tuple[str, Optional[str], Optional[str]]] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            step = cost[i - 1][j - 1] + (0 if hyp_tokens[i - 1] == ref_tokens[j - 1] else 1)
            if cost[i][j] == step:
                op = "match" if hyp_tokens[i - 1] == ref_tokens[j - 1] else "sub"
                ops.append((op, hyp_tokens[i - 1], ref_tokens[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and cost[i][j] == cost[i - 1][j] + 1:
            ops.append(("del", hyp_tokens[i - 1], None))
            i -= 1
            continue
        ops.append(("ins", None, ref_tokens[j - 1]))
        j -= 1
    ops.reverse()
    return ops


def alignment_cost(ops: Sequence[tuple[str, Optional[str], Optional[str]]]) -> int:
    return sum(1 for op, _, _ in ops if op != "match")


def mine_substitutions(
    hyps: Iterable[str],
    refs: Iterable[str],
    min_count: int = 1,
    lowercase: bool = True,
) -> list[tuple[str, str, int]]:
    """Most common hypothesis-to-reference word substitutions, ranked.

    Aggregates case-folded substitution pairs from the edit alignment of
    every sentence; pairs below min_count are dropped. A hypothesis word
    systematically replaced in the references points at a mistranslation
    worth a closer look (polysemous words surface here first).
    """
    hyp_list = list(hyps)
    ref_list = list(refs)
    if len(hyp_list) != len(ref_list):
        raise CorpusStructureError(
            "corpus length mismatch: %d hypotheses vs %d references"
            % (len(hyp_list), len(ref_list))
        )
    counts: Counter = Counter()
    for hyp, ref in zip(hyp_list, ref_list):
        if lowercase:
            hyp, ref = hyp.lower(), ref.lower()
        for op, hyp_tok, ref_tok in edit_alignment(tokenize_13a(hyp), tokenize_13a(ref)):
            if op == "sub":
                counts[(hyp_tok, ref_tok)] += 1
    ranked = [(h, r, c) for (h, r), c in counts.items() if c >= min_count]
    ranked.sort(key=lambda item: (-item[2], item[0], item[1]))
    return ranked


# --------------------------------------------------------------------------
# Polysemous-word translation accuracy.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PolysemyEntry:
    """A source word and the target forms accepted as correct translations."""

    source_word: str
    accepted: frozenset[str]
    rejected_hint: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.accepted:
            raise ConfigError("entry %r has an empty accepted set" % self.source_word)


def load_polysemy_entries(path: str) -> list[PolysemyEntry]:
    """Load entries: ``source word<TAB>accepted,forms[<TAB>rejected,forms]``."""
    entries = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise ConfigError("malformed polysemy entry at line %d: %r" % (line_no, line))
            rejected = fields[2].split(",") if len(fields) > 2 and fields[2] else []
            entries.append(
                PolysemyEntry(
                    source_word=fields[0],
                    accepted=frozenset(f.strip() for f in fields[1].split(",") if f.strip()),
                    rejected_hint=frozenset(f.strip() for f in rejected if f.strip()),
                )
            )
    return entries


def _word_pattern(phrase: str) -> re.Pattern:
    return re.compile(r"(?<!\w)%s(?!\w)" % re.escape(phrase), re.IGNORECASE)


@dataclass(frozen=True)
class PolysemyCount:
    source_word: str
    n_source: int
    n_correct: int

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_source if self.n_source else 0.0


@dataclass(frozen=True)
class PolysemyReport:
    entries: tuple[PolysemyCount, ...]
    total_percent: float

    def to_dict(self) -> dict:
        return {
            "entries": [
                {"source_word": e.source_word, "n_source": e.n_source, "n_correct": e.n_correct}
                for e in self.entries
            ],
            "total_percent": self.total_percent,
        }


def polysemous_accuracy(
    srcs: Iterable[str], hyps: Iterable[str], entries: Sequence[PolysemyEntry]
) -> PolysemyReport:
    """Count correct translations of domain-ambiguous source words.

    A sentence counts for an entry when its source contains the word
    (case-insensitive, word boundaries); it counts as correct when the
    hypothesis contains any accepted form anywhere. The total is the
    source-count-weighted mean of the per-entry accuracies.
    """
    src_list = list(srcs)
    hyp_list = list(hyps)
    if len(src_list) != len(hyp_list):
        raise CorpusStructureError(
            "corpus length mismatch: %d sources vs %d hypotheses"
            % (len(src_list), len(hyp_list))
        )
    results = []
    total_source = 0
    total_correct = 0
    for entry in entries:
        src_pattern = _word_pattern(entry.source_word)
        accepted_patterns = [_word_pattern(form) for form in sorted(entry.accepted)]
        n_source = 0
        n_correct = 0
        for src, hyp in zip(src_list, hyp_list):
            if not src_pattern.search(src):
                continue
            n_source += 1
            if any(p.search(hyp) for p in accepted_patterns):
                n_correct += 1
        results.append(PolysemyCount(entry.source_word, n_source, n_correct))
        total_source += n_source
        total_correct += n_correct
    percent = 100.0 * total_correct / total_source if total_source else 0.0
    return PolysemyReport(tuple(results), percent)


# --------------------------------------------------------------------------
# Human-ranking judgments: gold filtering, pairwise tables, significance.
# --------------------------------------------------------------------------

Ranking = tuple[tuple[str, ...], ...]  # ordered tie-groups, best first


def parse_ranking(text: str) -> Ranking:
    """Parse ``A>B=C>D`` into ordered tie groups, validating uniqueness."""
    groups = []
    seen = set()
    for group_text in text.split(">"):
        group = tuple(s.strip() for s in group_text.split("=") if s.strip())
        if not group:
            raise ConfigError("empty rank group in %r" % text)
        for system in group:
            if system in seen:
                raise ConfigError("system %r ranked twice in %r" % (system, text))
            seen.add(system)
        groups.append(group)
    if not groups:
        raise ConfigError("empty ranking %r" % text)
    return tuple(groups)


def format_ranking(ranking: Ranking) -> str:
    return ">".join("=".join(group) for group in ranking)


@dataclass(frozen=True)
class RankingJudgment:
    """One judge's ordering of the systems for one sentence."""

    judge_id: str
    sentence_id: str
    ranking: Ranking
    is_gold: bool = False
    gold_expected: Optional[Ranking] = None

    def __post_init__(self):
        systems = [s for group in self.ranking for s in group]
        if len(systems) != len(set(systems)):
            raise ConfigError("a system is ranked twice in %r" % (self.ranking,))

    def positions(self) -> dict[str, int]:
        pos = {}
        for rank, group in enumerate(self.ranking):
            for system in group:
                pos[system] = rank
        return pos

    def systems(self) -> set[str]:
        return {s for group in self.ranking for s in group}


def load_judgments(path: str) -> list[RankingJudgment]:
    """Load judgments: ``judge<TAB>sentence<TAB>A>B=C[<TAB>gold:A>B=C]``."""
    judgments = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ConfigError("malformed judgment at line %d: %r" % (line_no, line))
            judge_id, sentence_id, ranking = fields[:3]
            is_gold = False
            gold_expected = None
            if len(fields) > 3 and fields[3] and fields[3] != "-":
                if not fields[3].startswith("gold:"):
                    raise ConfigError(
                        "malformed gold field at line %d: %r" % (line_no, fields[3])
                    )
                is_gold = True
                gold_expected = parse_ranking(fields[3][len("gold:") :])
            judgments.append(
                RankingJudgment(
                    judge_id=judge_id,
                    sentence_id=sentence_id,
                    ranking=parse_ranking(ranking),
                    is_gold=is_gold,
                    gold_expected=gold_expected,
                )
            )
    return judgments


def filter_judgments_by_gold(
    judgments: Sequence[RankingJudgment], policy: str = "all"
) -> list[RankingJudgment]:
    """Keep non-gold judgments only from judges whose gold answers pass.

    Policy "all" requires every gold item correct (a judge with no gold
    items passes vacuously); "any" requires at least one correct gold and
    drops judges with none.
    """
    if policy not in ("all", "any"):
        raise ConfigError("gold policy must be 'all' or 'any', got %r" % policy)
    verdicts: dict[str, list[bool]] = {}
    for judgment in judgments:
        if judgment.is_gold:
            if judgment.gold_expected is None:
                raise ContractError(
                    "gold judgment for sentence %r lacks gold_expected" % judgment.sentence_id
                )
            verdicts.setdefault(judgment.judge_id, []).append(
                judgment.ranking == judgment.gold_expected
            )
    def passes(judge_id: str) -> bool:
        results = verdicts.get(judge_id, [])
        if policy == "all":
            return all(results)
        return any(results)

    kept = [j for j in judgments if not j.is_gold and passes(j.judge_id)]
    dropped = sum(1 for j in judgments if not j.is_gold) - len(kept)
    if dropped:
        log.info("gold filter (%s) dropped %d judgment(s)", policy, dropped)
    return kept


@dataclass
class PairwiseResult:
    system_a: str
    system_b: str
    wins: int
    ties: int
    losses: int
    p_value: Optional[float] = None

    @property
    def n_judged(self) -> int:
        return self.wins + self.ties + self.losses

    def to_dict(self) -> dict:
        return {
            "system_a": self.system_a,
            "system_b": self.system_b,
            "wins": self.wins,
            "ties": self.ties,
            "losses": self.losses,
            "p_value": self.p_value,
        }


def pairwise_table(
    judgments: Sequence[RankingJudgment], systems: Optional[Sequence[str]] = None
) -> list[PairwiseResult]:
    """Win/tie/loss counts per unordered system pair over all judgments."""
    if systems is None:
        found: set[str] = set()
        for judgment in judgments:
            found |= judgment.systems()
        systems = sorted(found)
    results = []
    for system_a, system_b in itertools.combinations(systems, 2):
        wins = ties = losses = 0
        for judgment in judgments:
            pos = judgment.positions()
            if system_a not in pos or system_b not in pos:
                continue
            if pos[system_a] < pos[system_b]:
                wins += 1
            elif pos[system_a] > pos[system_b]:
                losses += 1
            else:
                ties += 1
        results.append(PairwiseResult(system_a, system_b, wins, ties, losses))
    return results


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    statistic: float  # W+, the positive-rank sum
    n: int  # nonzero differences used
    method: str
    degenerate: bool = False


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j + 2) / 2.0  # average of 1-based positions i+1..j+1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def wilcoxon_signed_rank(differences: Sequence[float], exact_threshold: int = 25) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired score differences.

    Zero differences are discarded; tied magnitudes get midranks. The exact
    null distribution is enumerated for up to exact_threshold nonzero
    differences, otherwise a normal approximation with tie correction and
    continuity correction is used. All-zero input returns p = 1 flagged as
    degenerate.
    """
    nonzero = [d for d in differences if d != 0]
    n = len(nonzero)
    if n == 0:
        return WilcoxonResult(1.0, 0.0, 0, "degenerate", degenerate=True)
    if n < 6:
        log.info("wilcoxon on %d nonzero difference(s); p-values are coarse below 6", n)
    magnitudes = [abs(d) for d in nonzero]
    ranks = _midranks(magnitudes)
    w_plus = sum(r for d, r in zip(nonzero, ranks) if d > 0)

    if n <= exact_threshold:
        # Doubling midranks makes them integers, so the exact distribution
        # of W+ is a subset-sum table even in the presence of ties.
        doubled = [int(round(2 * r)) for r in ranks]
        total = sum(doubled)
        table = [0] * (total + 1)
        table[0] = 1
        for r in doubled:
            for s in range(total, r - 1, -1):
                table[s] += table[s - r]
        w2 = int(round(2 * w_plus))
        denom = float(2**n)
        cdf = sum(table[: w2 + 1]) / denom
        sf = sum(table[w2:]) / denom
        p = min(1.0, 2.0 * min(cdf, sf))
        return WilcoxonResult(p, w_plus, n, "exact")

    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0
    tie_sizes = Counter(ranks).values()
    variance -= sum(t**3 - t for t in tie_sizes) / 48.0
    if variance <= 0:
        return WilcoxonResult(1.0, w_plus, n, "approx", degenerate=True)
    shift = 0.0
    if w_plus != mean:
        shift = 0.5 if w_plus > mean else -0.5
    z = (w_plus - mean - shift) / math.sqrt(variance)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return WilcoxonResult(min(1.0, p), w_plus, n, "approx")


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Chance-corrected agreement between two judges' label sequences.

    When both judges are constant and identical the chance agreement is 1
    and kappa is defined as 1 by convention (flagged in the log).
    """
    if len(labels_a) != len(labels_b):
        raise ContractError(
            "label sequences differ in length: %d vs %d" % (len(labels_a), len(labels_b))
        )
    n = len(labels_a)
    if n == 0:
        raise ConfigError("cohen_kappa needs at least one item")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    count_a = Counter(labels_a)
    count_b = Counter(labels_b)
    expected = sum(count_a[l] * count_b.get(l, 0) for l in count_a) / (n * n)
    if expected == 1.0:
        log.warning("both judges constant and equal; kappa = 1 by convention")
        return 1.0
    return (observed - expected) / (1.0 - expected)


def fleiss_kappa(table: Sequence[Sequence[int]]) -> float:
    """Fleiss' multi-rater kappa over an items x categories count table."""
    n_items = len(table)
    if n_items == 0:
        raise ConfigError("fleiss_kappa needs at least one item")
    raters = sum(table[0])
    if raters < 2:
        raise ConfigError("fleiss_kappa needs at least two ratings per item")
    for row in table:
        if sum(row) != raters:
            raise ContractError("every item needs the same number of ratings")
    total = n_items * raters
    p_cat = [sum(row[j] for row in table) / total for j in range(len(table[0]))]
    p_item = [
        (sum(c * c for c in row) - raters) / (raters * (raters - 1)) for row in table
    ]
    p_mean = sum(p_item) / n_items
    p_expected = sum(p * p for p in p_cat)
    if p_expected == 1.0:
        return 1.0
    return (p_mean - p_expected) / (1.0 - p_expected)


def _preference_labels(judgment: RankingJudgment) -> dict[tuple[str, tuple[str, str]], str]:
    labels = {}
    pos = judgment.positions()
    for system_a, system_b in itertools.combinations(sorted(pos), 2):
        if pos[system_a] < pos[system_b]:
            label = "win"
        elif pos[system_a] > pos[system_b]:
            label = "loss"
        else:
            label = "tie"
        labels[(judgment.sentence_id, (system_a, system_b))] = label
    return labels


@dataclass(frozen=True)
class KappaReport:
    average: float
    per_pair: tuple[tuple[str, str, float, int], ...]  # judge_a, judge_b, kappa, n


def average_pairwise_kappa(judgments: Sequence[RankingJudgment]) -> KappaReport:
    """Cohen's kappa over pairwise preference labels, averaged over judge pairs.

    Each judge labels every (sentence, system pair) item win/tie/loss; kappa
    is computed per judge pair on the items both judged and averaged.
    """
    by_judge: dict[str, dict] = {}
    for judgment in judgments:
        by_judge.setdefault(judgment.judge_id, {}).update(_preference_labels(judgment))
    pairs = []
    for judge_a, judge_b in itertools.combinations(sorted(by_judge), 2):
        shared = sorted(set(by_judge[judge_a]) & set(by_judge[judge_b]))
        if not shared:
            continue
        kappa = cohen_kappa(
            [by_judge[judge_a][item] for item in shared],
            [by_judge[judge_b][item] for item in shared],
        )
        pairs.append((judge_a, judge_b, kappa, len(shared)))
    if not pairs:
        return KappaReport(float("nan"), ())
    average = sum(p[2] for p in pairs) / len(pairs)
    return KappaReport(average, tuple(pairs))


@dataclass(frozen=True)
class RankingReport:
    pairs: tuple[PairwiseResult, ...]
    kappa: KappaReport
    n_judgments: int
    n_judges: int
    significance_levels: tuple[float, ...] = (0.05, 0.01)
    sample_unit: str = "per judge per sentence"

    def to_dict(self) -> dict:
        return {
            "pairs": [p.to_dict() for p in self.pairs],
            "average_kappa": self.kappa.average,
            "kappa_per_judge_pair": [
                {"judge_a": a, "judge_b": b, "kappa": k, "n_items": n}
                for a, b, k, n in self.kappa.per_pair
            ],
            "n_judgments": self.n_judgments,
            "n_judges": self.n_judges,
            "significance_levels": list(self.significance_levels),
            "sample_unit": self.sample_unit,
        }


def ranking_report(
    judgments: Sequence[RankingJudgment],
    systems: Optional[Sequence[str]] = None,
    gold_policy: str = "all",
) -> RankingReport:
    """Full human-ranking evaluation: gold filtering, pairwise table, stats.

    The Wilcoxon sample unit is one judge's preference sign on one sentence,
    the finest granularity consistent with the judgment data; this choice is
    recorded in the report.
    """
    kept = filter_judgments_by_gold(judgments, gold_policy)
    table = pairwise_table(kept, systems)
    for result in table:
        diffs = [1.0] * result.wins + [-1.0] * result.losses + [0.0] * result.ties
        result.p_value = wilcoxon_signed_rank(diffs).p_value
    kappa = average_pairwise_kappa(kept)
    judges = {j.judge_id for j in kept}
    return RankingReport(tuple(table), kappa, len(kept), len(judges))


@dataclass
class EvalReport:
    """Aggregate container for the metric outputs a run produces."""

    bleu: Optional[BleuResult] = None
    polysemy: Optional[PolysemyReport] = None
    ranking: Optional[RankingReport] = None
    substitutions: Optional[list[tuple[str, str, int]]] = None

    def to_dict(self) -> dict:
        out: dict = {}
        if self.bleu is not None:
            out["bleu"] = self.bleu.to_dict()
        if self.polysemy is not None:
            out["polysemy"] = self.polysemy.to_dict()
        if self.ranking is not None:
            out["ranking"] = self.ranking.to_dict()
        if self.substitutions is not None:
            out["substitutions"] = [
                {"hyp": h, "ref": r, "count": c} for h, r, c in self.substitutions
            ]
        return out
