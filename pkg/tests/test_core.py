import json
import tracemalloc
import unicodedata

import pytest

from conftest import make_parallel, make_rng, write_lines
from ugcmt.core import (
    CorpusStructureError,
    ConfigError,
    CorpusSplit,
    RecordError,
    ReviewRecord,
    SentencePair,
    parallel_map,
    read_parallel,
    read_reviews,
    stable_uniform,
    escape_reserved,
    unescape_reserved,
    write_parallel,
    write_reviews,
)


class TestReadParallel:
    def test_single_line_identity(self, tmp_path):
        src = write_lines(tmp_path / "a.src", ["bonjour"])
        tgt = write_lines(tmp_path / "a.tgt", ["hello"])
        pairs = list(read_parallel(src, tgt))
        assert pairs == [SentencePair(src="bonjour", tgt="hello", line_no=1)]

    def test_line_count_mismatch_names_both_counts(self, tmp_path):
        src = write_lines(tmp_path / "a.src", ["un", "deux", "trois"])
        tgt = write_lines(tmp_path / "a.tgt", ["one", "two"])
        with pytest.raises(CorpusStructureError) as exc:
            list(read_parallel(src, tgt))
        assert "3" in str(exc.value) and "2" in str(exc.value)

    def test_order_and_numbering_on_large_fixture(self, tmp_path):
        src_lines = ["ligne %d" % i for i in range(1, 10001)]
        tgt_lines = ["line %d" % i for i in range(1, 10001)]
        src = write_lines(tmp_path / "big.src", src_lines)
        tgt = write_lines(tmp_path / "big.tgt", tgt_lines)
        pairs = list(read_parallel(src, tgt))
        assert len(pairs) == 10000
        assert [p.line_no for p in pairs] == list(range(1, 10001))
        # oracle: an independent line-by-line pairing of the same files
        with open(src, encoding="utf-8") as fs, open(tgt, encoding="utf-8") as ft:
            expected = list(zip((l.rstrip("\n") for l in fs), (l.rstrip("\n") for l in ft)))
        assert [(p.src, p.tgt) for p in pairs] == expected

    def test_bad_utf8_reports_byte_offset(self, tmp_path):
        path = tmp_path / "bad.src"
        path.write_bytes(b"fine line\n\xffbroken\n")
        tgt = write_lines(tmp_path / "bad.tgt", ["a", "b"])
        with pytest.raises(CorpusStructureError) as exc:
            list(read_parallel(str(path), tgt))
        assert "byte offset 10" in str(exc.value)

    def test_nfc_normalization_applied_and_logged(self, tmp_path, caplog):
        decomposed = "café"  # e + combining acute
        src = write_lines(tmp_path / "n.src", [decomposed])
        tgt = write_lines(tmp_path / "n.tgt", ["coffee"])
        with caplog.at_level("WARNING"):
            pairs = list(read_parallel(src, tgt))
        assert pairs[0].src == unicodedata.normalize("NFC", decomposed) == "café"
        assert any("NFC" in rec.message for rec in caplog.records)


class TestWriteParallel:
    def test_round_trip_byte_exact(self, tmp_path):
        pairs = make_parallel(make_rng(3), 200)
        src, tgt = str(tmp_path / "rt.src"), str(tmp_path / "rt.tgt")
        write_parallel(pairs, src, tgt)
        again = list(read_parallel(src, tgt))
        assert [(p.src, p.tgt) for p in again] == [(p.src, p.tgt) for p in pairs]
        write_parallel(again, str(tmp_path / "rt2.src"), str(tmp_path / "rt2.tgt"))
        assert open(src, "rb").read() == open(str(tmp_path / "rt2.src"), "rb").read()
        assert open(tgt, "rb").read() == open(str(tmp_path / "rt2.tgt"), "rb").read()

    def test_interior_newline_rejected(self, tmp_path):
        bad = [SentencePair(src="a\nb", tgt="x", line_no=1)]
        with pytest.raises(CorpusStructureError):
            write_parallel(bad, str(tmp_path / "x.src"), str(tmp_path / "x.tgt"))


class TestReviews:
    def test_round_trip_with_metadata(self, tmp_path):
        record = ReviewRecord(
            review_id="r1",
            sentences=(
                SentencePair(src="On s'y sent comme a la maison !", tgt="It feels like home!!", review_id="r1", line_no=1),
                SentencePair(src="Équipe de serveurs très sympa!", tgt="Team of waiters very nice!", review_id="r1", line_no=2),
            ),
            venue_type="Bar, Bistro",
            location="Paris, FR",
            rating=8.29,
        )
        path = str(tmp_path / "reviews.jsonl")
        write_reviews([record], path)
        loaded = list(read_reviews(path))
        assert len(loaded) == 1
        assert loaded[0].rating == 8.29
        assert loaded[0].venue_type == "Bar, Bistro"
        assert len(loaded[0].sentences) == 2
        assert loaded[0].sentences[0].src == "On s'y sent comme a la maison !"

    def test_empty_sentences_rejected(self):
        with pytest.raises(RecordError):
            ReviewRecord(review_id="r1", sentences=())

    def test_missing_review_id_names_record_index(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            json.dumps({"review_id": "ok", "sentences": [{"src": "a"}]})
            + "\n"
            + json.dumps({"sentences": [{"src": "b"}]})
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(RecordError) as exc:
            list(read_reviews(str(path), strict=True))
        assert "record 2" in str(exc.value)

    def test_lenient_mode_skips_malformed(self, tmp_path, caplog):
        path = tmp_path / "mixed.jsonl"
        path.write_text(
            json.dumps({"review_id": "ok", "sentences": [{"src": "a"}]})
            + "\n"
            + "not json at all\n",
            encoding="utf-8",
        )
        with caplog.at_level("WARNING"):
            records = list(read_reviews(str(path), strict=False))
        assert [r.review_id for r in records] == ["ok"]
        assert any("record 2" in rec.message for rec in caplog.records)

    def test_hundred_record_fixture_matches_count_oracle(self, tmp_path):
        path = str(tmp_path / "many.jsonl")
        records = [
            ReviewRecord(
                review_id="rev-%03d" % i,
                sentences=(SentencePair(src="phrase %d" % i, review_id="rev-%03d" % i),),
                rating=float(i % 11),
            )
            for i in range(100)
        ]
        write_reviews(records, path)
        loaded = list(read_reviews(path))
        with open(path, encoding="utf-8") as handle:
            oracle_count = sum(1 for line in handle if line.strip())
        assert len(loaded) == oracle_count == 100
        assert len({r.review_id for r in loaded}) == 100

    def test_rating_out_of_range_rejected(self):
        with pytest.raises(RecordError):
            ReviewRecord(
                review_id="r",
                sentences=(SentencePair(src="a", review_id="r"),),
                rating=11.0,
            )


class TestCorpusSplit:
    def test_reserved_names(self):
        CorpusSplit(name="PE")
        CorpusSplit(name="test")
        with pytest.raises(ConfigError):
            CorpusSplit(name="training")


class TestStreaming:
    def test_memory_stays_bounded(self, tmp_path):
        # ~12 MB of corpus must stream in a few hundred KB of live memory.
        line = "mot " * 25
        n_lines = 120_000
        src = tmp_path / "huge.src"
        tgt = tmp_path / "huge.tgt"
        with open(src, "w") as s, open(tgt, "w") as t:
            for _ in range(n_lines):
                s.write(line + "\n")
                t.write(line + "\n")
        tracemalloc.start()
        count = 0
        for pair in read_parallel(str(src), str(tgt)):
            count += 1
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert count == n_lines
        assert peak < 5_000_000


class TestDeterministicDraws:
    def test_stable_across_calls(self):
        assert stable_uniform(7, 1, 2, 3) == stable_uniform(7, 1, 2, 3)
        assert 0.0 <= stable_uniform(7, 1, 2, 3) < 1.0

    def test_coordinates_matter(self):
        draws = {stable_uniform(7, 1, 2, i) for i in range(100)}
        assert len(draws) == 100

    def test_roughly_uniform(self):
        draws = [stable_uniform(11, 0, i) for i in range(20_000)]
        mean = sum(draws) / len(draws)
        assert abs(mean - 0.5) < 0.01


class TestEscaping:
    def test_round_trip_nested(self):
        tokens = ("<T>", "<U>", "<L>")
        for text in ["plain", "a <T> b", "<<T>> already", "<T><T>", "edge <U>"]:
            assert unescape_reserved(escape_reserved(text, tokens), tokens) == text

    def test_escaped_text_contains_no_bare_token(self):
        escaped = escape_reserved("a <T> b <T>", ("<T>",))
        assert "<T>" not in escaped.replace("<<T>>", "")


class TestParallelMap:
    def test_order_preserved_any_thread_count(self):
        items = list(range(1000))
        fn = lambda x: x * x
        assert list(parallel_map(fn, items, threads=1)) == [x * x for x in items]
        assert list(parallel_map(fn, items, threads=8)) == [x * x for x in items]
