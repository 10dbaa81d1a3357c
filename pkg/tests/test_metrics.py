import math
import random

import pytest
from scipy import stats as scipy_stats

from oracles import ref_corpus_bleu, ref_tokenize_13a, textbook_levenshtein
from ugcmt.core import ConfigError, CorpusStructureError
from ugcmt.metrics import (
    BleuConfig,
    PolysemyEntry,
    RankingJudgment,
    alignment_cost,
    average_pairwise_kappa,
    cohen_kappa,
    corpus_bleu,
    edit_alignment,
    filter_judgments_by_gold,
    fleiss_kappa,
    load_judgments,
    load_polysemy_entries,
    mine_substitutions,
    pairwise_table,
    parse_ranking,
    polysemous_accuracy,
    ranking_report,
    tokenize_13a,
    wilcoxon_signed_rank,
)

ENGLISH = (
    "the a food menu was great terrible service nice place we loved it really "
    "good very friendly staff came back again never prices high low quality "
    "amazing burger fries best ever in town 5 stars ! . , worth don't"
).split()


def bleu_fixture(n=100, seed=5):
    rng = random.Random(seed)
    refs, hyps = [], []
    for _ in range(n):
        ref_tokens = [rng.choice(ENGLISH) for _ in range(rng.randint(4, 18))]
        hyp_tokens = list(ref_tokens)
        for _ in range(rng.randint(0, 6)):
            if not hyp_tokens:
                break
            pos = rng.randrange(len(hyp_tokens))
            op = rng.randrange(4)
            if op == 0:
                hyp_tokens[pos] = rng.choice(ENGLISH)
            elif op == 1:
                hyp_tokens.insert(pos, rng.choice(ENGLISH))
            elif op == 2 and len(hyp_tokens) > 1:
                hyp_tokens.pop(pos)
            else:
                hyp_tokens[pos] = hyp_tokens[pos].upper()
        refs.append(" ".join(ref_tokens))
        hyps.append(" ".join(hyp_tokens))
    return hyps, refs


class TestTokenize13a:
    def test_known_examples(self):
        assert tokenize_13a("it's good!") == ["it's", "good", "!"]
        assert tokenize_13a("") == []
        # the digit-dash rule splits "5-star"; value derived from the
        # canonical tokenizer, not assumed
        assert tokenize_13a("A 5-star place.") == ["A", "5", "-", "star", "place", "."]

    def test_decimal_separators_stay_attached(self):
        assert tokenize_13a("12.70 euros") == ["12.70", "euros"]

    def test_agrees_with_reference_on_fixture(self):
        rng = random.Random(17)
        pieces = ENGLISH + ["(", ")", '"', "12.70", "€", ":-)", "&amp;", "#tag", "50%"]
        for _ in range(500):
            sentence = " ".join(rng.choice(pieces) for _ in range(rng.randint(1, 20)))
            assert tokenize_13a(sentence) == ref_tokenize_13a(sentence).split(), sentence


class TestCorpusBleu:
    def test_identity_scores_exactly_100(self):
        refs = ["this is a small test .", "another longer sentence for scoring ."]
        result = corpus_bleu(refs, refs)
        assert result.score == 100.0
        assert result.bp == 1.0

    def test_zero_overlap_scores_below_one(self):
        result = corpus_bleu(["the the the"], ["a b c"])
        assert result.score < 1.0

    def test_matches_reference_scorer_case_sensitive(self):
        hyps, refs = bleu_fixture()
        ours = corpus_bleu(hyps, refs).score
        oracle = ref_corpus_bleu(hyps, refs)
        assert ours == pytest.approx(oracle, abs=0.01)

    def test_matches_reference_scorer_lowercased(self):
        hyps, refs = bleu_fixture(seed=6)
        config = BleuConfig(case_sensitive=False)
        ours = corpus_bleu(hyps, refs, config).score
        oracle = ref_corpus_bleu(hyps, refs, lowercase=True)
        assert ours == pytest.approx(oracle, abs=0.01)

    def test_case_modes_agree_on_lowercase_corpus(self):
        hyps, refs = bleu_fixture(seed=7)
        hyps = [h.lower() for h in hyps]
        refs = [r.lower() for r in refs]
        cased = corpus_bleu(hyps, refs).score
        lowered = corpus_bleu(hyps, refs, BleuConfig(case_sensitive=False)).score
        assert cased == pytest.approx(lowered, abs=1e-12)

    def test_permutation_invariant(self):
        hyps, refs = bleu_fixture(seed=8)
        paired = list(zip(hyps, refs))
        random.Random(3).shuffle(paired)
        shuffled_hyps, shuffled_refs = zip(*paired)
        assert corpus_bleu(hyps, refs).score == pytest.approx(
            corpus_bleu(list(shuffled_hyps), list(shuffled_refs)).score, abs=1e-12
        )

    def test_length_mismatch_rejected(self):
        with pytest.raises(CorpusStructureError):
            corpus_bleu(["a"], ["a", "b"])

    def test_empty_corpus_rejected(self):
        with pytest.raises(CorpusStructureError):
            corpus_bleu([], [])

    def test_signature_reflects_configuration(self):
        assert corpus_bleu(["a b"], ["a b"]).signature == "case.mixed+numrefs.1+smooth.exp+tok.13a"
        config = BleuConfig(case_sensitive=False)
        assert corpus_bleu(["a b"], ["a b"], config).signature.startswith("case.lc")


class TestEditAlignment:
    def test_substitution_pair_recovered(self):
        ops = edit_alignment(["the", "card"], ["the", "menu"])
        assert ops == [("match", "the", "the"), ("sub", "card", "menu")]

    def test_identical_sequences_all_match(self):
        ops = edit_alignment(["a", "b"], ["a", "b"])
        assert all(op == "match" for op, _, _ in ops)

    def test_cost_equals_textbook_levenshtein(self):
        rng = random.Random(23)
        vocab = ["a", "b", "c", "d", "e"]
        for _ in range(300):
            hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
            ref = [rng.choice(vocab) for _ in range(rng.randint(0, 10))]
            ops = edit_alignment(hyp, ref)
            assert alignment_cost(ops) == textbook_levenshtein(hyp, ref)


class TestMineSubstitutions:
    def test_planted_substitutions_recovered(self):
        refs, hyps = [], []
        for i in range(5):
            refs.append("the menu was great %d" % i)
            hyps.append("the card was great %d" % i)
        for i in range(2):
            refs.append("a nice place")
            hyps.append("a pleasant place")
        ranked = mine_substitutions(hyps, refs)
        assert ranked[0] == ("card", "menu", 5)
        assert ("pleasant", "nice", 2) in ranked

    def test_identical_corpora_give_nothing(self):
        refs = ["the menu was great", "a nice place"]
        assert mine_substitutions(refs, refs) == []

    def test_min_count_threshold(self):
        refs = ["the menu", "a place"]
        hyps = ["the card", "a spot"]
        assert mine_substitutions(hyps, refs, min_count=2) == []

    def test_case_folded_aggregation(self):
        refs = ["The Menu", "the menu"]
        hyps = ["The Card", "the card"]
        assert mine_substitutions(hyps, refs) == [("card", "menu", 2)]


class TestPolysemousAccuracy:
    ENTRIES = [
        PolysemyEntry("carte", frozenset({"menu", "card", "map"})),
        PolysemyEntry("cadre", frozenset({"setting", "frame"})),
    ]

    def test_counts_and_total(self):
        srcs = [
            "la carte est petite",
            "La CARTE est grande",
            "le cadre est joli",
            "rien ici",
        ]
        hyps = [
            "the menu is small",
            "the wine list is big",
            "the setting is lovely",
            "nothing here",
        ]
        report = polysemous_accuracy(srcs, hyps, self.ENTRIES)
        by_word = {e.source_word: e for e in report.entries}
        assert by_word["carte"].n_source == 2
        assert by_word["carte"].n_correct == 1
        assert by_word["cadre"].n_source == 1
        assert by_word["cadre"].n_correct == 1
        assert report.total_percent == pytest.approx(100.0 * 2 / 3)

    def test_word_boundaries_respected(self):
        report = polysemous_accuracy(["la cartée est là"], ["the menu"], self.ENTRIES)
        assert report.entries[0].n_source == 0

    def test_total_is_weighted_mean_of_entries(self):
        rng = random.Random(4)
        srcs, hyps = [], []
        for _ in range(200):
            word = rng.choice(["carte", "cadre", "autre"])
            srcs.append("le %s est là" % word)
            hyps.append(rng.choice(["the menu", "the setting", "the thing"]))
        report = polysemous_accuracy(srcs, hyps, self.ENTRIES)
        total_src = sum(e.n_source for e in report.entries)
        total_ok = sum(e.n_correct for e in report.entries)
        assert report.total_percent == pytest.approx(100.0 * total_ok / total_src)

    def test_empty_accepted_set_rejected(self):
        with pytest.raises(ConfigError):
            PolysemyEntry("mot", frozenset())

    def test_entries_file_format(self, tmp_path):
        path = tmp_path / "entries.tsv"
        path.write_text("carte\tmenu,card,map\ncadre\tsetting,frame\n", encoding="utf-8")
        entries = load_polysemy_entries(str(path))
        assert entries[0].source_word == "carte"
        assert entries[0].accepted == frozenset({"menu", "card", "map"})


def judgment(judge, sentence, ranking, gold=None):
    return RankingJudgment(
        judge_id=judge,
        sentence_id=sentence,
        ranking=parse_ranking(ranking),
        is_gold=gold is not None,
        gold_expected=parse_ranking(gold) if gold else None,
    )


class TestGoldFiltering:
    def test_failing_judge_fully_dropped(self):
        judgments = [
            judgment("j1", "g1", "A>B", gold="B>A"),
            judgment("j1", "s1", "A>B"),
            judgment("j1", "s2", "B>A"),
        ]
        assert filter_judgments_by_gold(judgments) == []

    def test_passing_judge_fully_retained(self):
        judgments = [
            judgment("j1", "g1", "A>B", gold="A>B"),
            judgment("j1", "s1", "A>B"),
            judgment("j1", "s2", "B>A"),
        ]
        kept = filter_judgments_by_gold(judgments)
        assert [j.sentence_id for j in kept] == ["s1", "s2"]

    def test_mixed_fixture_matches_hand_filter(self):
        judgments = [
            judgment("good", "g1", "A>B=C", gold="A>B=C"),
            judgment("good", "g2", "C>A>B", gold="C>A>B"),
            judgment("good", "s1", "A>B>C"),
            judgment("good", "s2", "B>A=C"),
            judgment("sloppy", "g1", "A>B=C", gold="A>B=C"),
            judgment("sloppy", "g2", "A>B>C", gold="C>A>B"),
            judgment("sloppy", "s1", "C>B>A"),
            judgment("sloppy", "s2", "A=B=C"),
            judgment("nogold", "s1", "A>C>B"),
            judgment("nogold", "s2", "C=A>B"),
        ]
        strict = filter_judgments_by_gold(judgments, policy="all")
        assert [(j.judge_id, j.sentence_id) for j in strict] == [
            ("good", "s1"),
            ("good", "s2"),
            ("nogold", "s1"),
            ("nogold", "s2"),
        ]
        lenient = filter_judgments_by_gold(judgments, policy="any")
        assert {(j.judge_id, j.sentence_id) for j in lenient} == {
            ("good", "s1"),
            ("good", "s2"),
            ("sloppy", "s1"),
            ("sloppy", "s2"),
        }


class TestPairwiseTable:
    def test_single_judgment(self):
        table = pairwise_table([judgment("j", "s", "A>B")])
        assert len(table) == 1
        result = table[0]
        assert (result.wins, result.ties, result.losses) == (1, 0, 0)

    def test_all_ties(self):
        table = pairwise_table([judgment("j", "s%d" % i, "A=B") for i in range(4)])
        assert (table[0].wins, table[0].ties, table[0].losses) == (0, 4, 0)

    def test_totals_constant_when_everyone_ranks_everything(self):
        rng = random.Random(6)
        systems = ["A", "B", "C", "D"]
        judgments = []
        for judge in ("j1", "j2", "j3"):
            for sentence in range(20):
                order = systems[:]
                rng.shuffle(order)
                judgments.append(judgment(judge, "s%d" % sentence, ">".join(order)))
        table = pairwise_table(judgments, systems)
        totals = {r.n_judged for r in table}
        assert totals == {60}


class TestWilcoxon:
    def test_all_positive_n10_exact(self):
        result = wilcoxon_signed_rank(list(range(1, 11)))
        assert result.p_value == 2 / 2**10
        assert result.method == "exact"

    def test_symmetric_data_is_insignificant(self):
        diffs = [1, -1, 2, -2, 3, -3, 4, -4]
        assert wilcoxon_signed_rank(diffs).p_value > 0.8

    def test_zeros_discarded(self):
        with_zeros = wilcoxon_signed_rank([0, 1, 0, 2, 3, 0, -1, 4, 5])
        without = wilcoxon_signed_rank([1, 2, 3, -1, 4, 5])
        assert with_zeros.p_value == without.p_value
        assert with_zeros.n == 6

    def test_all_zero_is_degenerate(self):
        result = wilcoxon_signed_rank([0.0, 0.0, 0.0])
        assert result.p_value == 1.0
        assert result.degenerate

    def test_scale_invariance(self):
        rng = random.Random(9)
        diffs = [rng.gauss(0.2, 1) for _ in range(40)]
        assert (
            wilcoxon_signed_rank(diffs).p_value
            == wilcoxon_signed_rank([d * 2.5 for d in diffs]).p_value
        )

    def test_matches_scipy_both_regimes(self):
        rng = random.Random(41)
        for trial in range(50):
            n = rng.randint(6, 60)
            diffs = [rng.gauss(0.3, 1.0) for _ in range(n)]
            ours = wilcoxon_signed_rank(diffs)
            reference = scipy_stats.wilcoxon(
                diffs,
                zero_method="wilcox",
                correction=True,
                alternative="two-sided",
                method="exact" if ours.method == "exact" else "approx",
            )
            assert ours.p_value == pytest.approx(reference.pvalue, abs=1e-6)

    def test_matches_scipy_with_heavy_sign_ties(self):
        diffs = [1.0] * 30 + [-1.0] * 12
        ours = wilcoxon_signed_rank(diffs)
        reference = scipy_stats.wilcoxon(
            diffs, zero_method="wilcox", correction=True, alternative="two-sided",
            method="approx",
        )
        assert ours.p_value == pytest.approx(reference.pvalue, abs=1e-9)


class TestKappa:
    def test_perfect_agreement(self):
        assert cohen_kappa(list("abcabc"), list("abcabc")) == 1.0

    def test_constant_identical_judges_flagged_as_one(self, caplog):
        with caplog.at_level("WARNING"):
            assert cohen_kappa(["x"] * 5, ["x"] * 5) == 1.0
        assert any("convention" in rec.message for rec in caplog.records)

    def test_independent_labels_near_zero(self):
        rng = random.Random(10)
        a = [rng.choice("xy") for _ in range(20000)]
        b = [rng.choice("xy") for _ in range(20000)]
        assert abs(cohen_kappa(a, b)) < 0.03

    def test_twenty_item_hand_computation(self):
        a = list("xxxxxxxxxxxxyyyyyyyy")
        b = list("xxxxxxxxxxyyxxyyyyyy")
        # p_o = 16/20, p_e = 0.6^2 + 0.4^2 = 0.52, kappa = 0.28/0.48 = 7/12
        assert cohen_kappa(a, b) == pytest.approx(7 / 12, abs=1e-12)

    def test_average_pairwise_over_judgments(self):
        judgments = [
            judgment("j1", "s1", "A>B"),
            judgment("j2", "s1", "A>B"),
            judgment("j1", "s2", "B>A"),
            judgment("j2", "s2", "B>A"),
        ]
        report = average_pairwise_kappa(judgments)
        assert report.average == 1.0
        assert report.per_pair[0][3] == 2

    def test_fleiss_kappa_identical_raters(self):
        table = [[3, 0], [0, 3], [3, 0]]
        assert fleiss_kappa(table) == 1.0


class TestRankingReport:
    def test_end_to_end(self):
        judgments = []
        rng = random.Random(2)
        for judge in ("j1", "j2"):
            judgments.append(judgment(judge, "gold1", "A>B>C", gold="A>B>C"))
            for s in range(30):
                better = "A>B>C" if rng.random() < 0.8 else "B>A>C"
                judgments.append(judgment(judge, "s%d" % s, better))
        report = ranking_report(judgments)
        assert report.n_judges == 2
        pair_ab = [p for p in report.pairs if (p.system_a, p.system_b) == ("A", "B")][0]
        assert pair_ab.wins > pair_ab.losses
        assert pair_ab.p_value is not None and pair_ab.p_value < 0.05
        pair_ac = [p for p in report.pairs if (p.system_a, p.system_b) == ("A", "C")][0]
        assert pair_ac.p_value < 0.05
        assert not math.isnan(report.kappa.average)
        assert report.to_dict()["sample_unit"] == "per judge per sentence"

    def test_judgments_file_round_trip(self, tmp_path):
        path = tmp_path / "judgments.tsv"
        path.write_text(
            "j1\ts1\tA>B=C\t-\n"
            "j1\tg1\tA>B=C\tgold:A>B=C\n"
            "j2\ts1\tC>A>B\n",
            encoding="utf-8",
        )
        judgments = load_judgments(str(path))
        assert len(judgments) == 3
        assert judgments[1].is_gold
        assert judgments[1].gold_expected == (("A",), ("B", "C"))
        assert judgments[2].ranking == (("C",), ("A",), ("B",))

    def test_duplicate_system_in_ranking_rejected(self):
        with pytest.raises(ConfigError):
            parse_ranking("A>B>A")
