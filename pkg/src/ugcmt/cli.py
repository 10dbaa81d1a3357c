"""Single ``ugcmt`` executable exposing every pipeline as subcommands.

Subcommands communicate through files (or stdin/stdout for line-wise
transforms), never shared state, so shell pipelines compose them. Every
randomized subcommand is reproducible from the logged (seed, config) alone;
``--strict`` refuses to run randomized commands without an explicit seed.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import subprocess
import sys
import unicodedata
from typing import Iterable, Iterator, Optional

from . import casing, corpusops, lexnoise, metrics, rarechar
from .core import (
    SentencePair,
    ToolkitError,
    parallel_map,
    read_lines,
    read_parallel,
    write_parallel,
)

log = logging.getLogger("ugcmt")

RANDOMIZED = {
    ("case", "noise"),
    ("noise", "apply"),
    ("noise", "calibrate"),
    ("compose", None),
}


def _read_lines(path: str) -> Iterator[str]:
    if path == "-":
        for line in sys.stdin:
            yield unicodedata.normalize("NFC", line.rstrip("\n"))
        return
    yield from read_lines(path)


class _LineWriter:
    def __init__(self, path: str):
        self.path = path
        self.handle = sys.stdout if path == "-" else open(path, "w", encoding="utf-8")

    def write(self, line: str) -> None:
        self.handle.write(line + "\n")

    def close(self) -> None:
        if self.path != "-":
            self.handle.close()


def _write_lines(path: str, lines: Iterable[str]) -> None:
    writer = _LineWriter(path)
    try:
        for line in lines:
            writer.write(line)
    finally:
        writer.close()


# --------------------------------------------------------------------------
# Handlers, one per subcommand.
# --------------------------------------------------------------------------

def _segmenter_placeholder(word: str) -> list[str]:
    return [word]


def cmd_case_encode(args) -> int:
    if args.scheme == "lower":
        lines = parallel_map(str.lower, _read_lines(args.infile), args.threads)
        _write_lines(args.out, lines)
        return 0
    if args.scheme == "inline":
        encode = lambda s: casing.encode_inline_text(s, marker=args.marker)
        _write_lines(args.out, parallel_map(encode, _read_lines(args.infile), args.threads))
        return 0
    if not args.tags_out:
        raise ToolkitError("factored encoding needs --tags-out for the tag stream")
    encode = lambda s: casing.encode_factored_text(s, marker=args.marker)
    forms_writer = _LineWriter(args.out)
    tags_writer = _LineWriter(args.tags_out)
    try:
        for forms, tags in parallel_map(encode, _read_lines(args.infile), args.threads):
            forms_writer.write(forms)
            tags_writer.write(tags)
    finally:
        forms_writer.close()
        tags_writer.close()
    return 0


def cmd_case_decode(args) -> int:
    if args.scheme == "inline":
        decode = lambda s: casing.decode_inline(s, marker=args.marker)
        _write_lines(args.out, parallel_map(decode, _read_lines(args.infile), args.threads))
        return 0
    if not args.tags_in:
        raise ToolkitError("factored decoding needs --tags-in for the tag stream")
    forms = list(_read_lines(args.infile))
    tags = list(_read_lines(args.tags_in))
    if len(forms) != len(tags):
        raise ToolkitError(
            "factored streams differ in length: %d forms vs %d tag lines"
            % (len(forms), len(tags))
        )
    _write_lines(
        args.out,
        (casing.decode_factored(f, t, marker=args.marker) for f, t in zip(forms, tags)),
    )
    return 0


def cmd_case_noise(args) -> int:
    profile = casing.CaseNoiseProfile(args.p_upper, args.p_title, args.p_lower, args.seed)
    noise = lambda pair: casing.apply_case_noise(pair[1], profile, pair[0])
    _write_lines(
        args.out, parallel_map(noise, enumerate(_read_lines(args.infile)), args.threads)
    )
    return 0


def cmd_case_variant(args) -> int:
    variant = lambda s: casing.case_variant_text(s, args.mode)
    _write_lines(args.out, parallel_map(variant, _read_lines(args.infile), args.threads))
    return 0


def cmd_rarechar_census(args) -> int:
    if args.tgt:
        corpus: Iterable = read_parallel(args.src, args.tgt)
    else:
        corpus = _read_lines(args.src)
    rarechar.write_census(rarechar.census(corpus), args.out)
    return 0


def cmd_rarechar_mask(args) -> int:
    charset = rarechar.build_charset(rarechar.read_census(args.census), args.min_count)
    records = parallel_map(
        lambda s: rarechar.mask(s, charset), _read_lines(args.infile), args.threads
    )
    writer = _LineWriter(args.out)

    def masked_lines():
        for record in records:
            writer.write(record.masked)
            yield record.saved

    try:
        rarechar.write_sidecar(masked_lines(), args.sidecar)
    finally:
        writer.close()
    return 0


def cmd_rarechar_restore(args) -> int:
    saved_lists = rarechar.read_sidecar(args.sidecar)
    lines = list(_read_lines(args.infile))
    if len(lines) != len(saved_lists):
        raise ToolkitError(
            "sidecar has %d lines but input has %d" % (len(saved_lists), len(lines))
        )
    _write_lines(
        args.out, (rarechar.restore(line, saved) for line, saved in zip(lines, saved_lists))
    )
    return 0


def _load_rules(spec: str) -> list[lexnoise.RegexNoiseRule]:
    if spec == "none":
        return []
    if spec == "builtin":
        return lexnoise.default_rules()
    return lexnoise.load_rules(spec)


def cmd_noise_build_dict(args) -> int:
    lexicon = lexnoise.load_lexicon(args.lexicon)
    dictionary = lexnoise.build_error_dictionary(
        _read_lines(args.corpus), lexicon, args.max_dist
    )
    dictionary.save(args.out)
    log.info("harvested %d entries", len(dictionary))
    return 0


def cmd_noise_calibrate(args) -> int:
    config = lexnoise.NoiseConfig(
        lexnoise.ErrorDictionary.load(args.dict),
        _load_rules(args.rules),
        token_rate=0.5,
        seed=args.seed,
    )
    result = lexnoise.calibrate_rate(
        config, _read_lines(args.sample), args.target, args.tolerance
    )
    print(
        json.dumps(
            {
                "token_rate": result.token_rate,
                "achieved_rate": result.achieved_rate,
                "rules_disabled": result.rules_disabled,
            }
        )
    )
    return 0


def cmd_noise_apply(args) -> int:
    config = lexnoise.NoiseConfig(
        lexnoise.ErrorDictionary.load(args.dict),
        _load_rules(args.rules),
        token_rate=args.rate,
        seed=args.seed,
    )
    if args.tgt and not args.out_tgt:
        raise ToolkitError("--tgt needs --out-tgt")
    if args.tgt:
        pairs: Iterable[SentencePair] = read_parallel(args.src, args.tgt)
    else:
        pairs = (SentencePair(src=s, line_no=i + 1) for i, s in enumerate(_read_lines(args.src)))
    src_writer = _LineWriter(args.out_src)
    tgt_writer = _LineWriter(args.out_tgt) if args.out_tgt else None
    flags = []
    try:
        for pair, modified in lexnoise.noisify_corpus(pairs, config):
            src_writer.write(pair.src)
            if tgt_writer is not None:
                tgt_writer.write(pair.tgt)
            flags.append(modified)
    finally:
        src_writer.close()
        if tgt_writer is not None:
            tgt_writer.close()
    if args.flags_out:
        _write_lines(args.flags_out, ("1" if f else "0" for f in flags))
    log.info("modified %d of %d sentences", sum(flags), len(flags))
    return 0


def cmd_noise_profile(args) -> int:
    lexicon = lexnoise.load_lexicon(args.lexicon)
    acronyms = list(_read_lines(args.acronyms)) if args.acronyms else []
    profile = lexnoise.noise_profile(_read_lines(args.infile), lexicon, acronyms)
    print(
        json.dumps(
            {
                "emojis_per_100": round(profile.emojis_per_100, 4),
                "allcaps_per_100": round(profile.allcaps_per_100, 4),
                "typos_per_100": round(profile.typos_per_100, 4),
                "n_tokens": profile.n_tokens,
            }
        )
    )
    return 0


def _batch_langid(command: str, texts: list[str]) -> list[str]:
    completed = subprocess.run(
        shlex.split(command),
        input="\n".join(texts) + "\n",
        capture_output=True,
        text=True,
        check=True,
    )
    predictions = completed.stdout.splitlines()
    if len(predictions) != len(texts):
        raise ToolkitError(
            "langid command returned %d predictions for %d lines"
            % (len(predictions), len(texts))
        )
    return [p.strip() for p in predictions]


def cmd_filter(args) -> int:
    langid = None
    if args.langid_cmd:
        # The classifier contract is one prediction per line, so both sides
        # are materialized once; without --langid-cmd the filter streams.
        pairs: Iterable[SentencePair] = list(read_parallel(args.src, args.tgt))
        texts = [p.src for p in pairs] + [p.tgt for p in pairs]
        predictions = dict(zip(texts, _batch_langid(args.langid_cmd, texts)))
        langid = predictions.__getitem__
    else:
        pairs = read_parallel(args.src, args.tgt)
    config = corpusops.FilterConfig(
        max_words=args.max_words,
        max_ratio=args.max_ratio,
        dedup=args.dedup,
        langid=langid,
        src_lang=args.src_lang,
        tgt_lang=args.tgt_lang,
    )
    dropped = []
    kept = write_parallel(
        corpusops.filter_corpus(pairs, config, on_drop=lambda p, r: dropped.append((p.line_no, r))),
        args.out_src,
        args.out_tgt,
    )
    if args.dropped_out:
        _write_lines(
            args.dropped_out, ("%d\t%s" % (line_no, reason) for line_no, reason in dropped)
        )
    log.info("kept %d pairs, dropped %d", kept, len(dropped))
    return 0


def cmd_tag_add(args) -> int:
    def tag_line(pair: tuple[int, str]) -> str:
        index, line = pair
        return corpusops.add_tag(SentencePair(src=line, line_no=index + 1), args.name).src

    _write_lines(
        args.out, parallel_map(tag_line, enumerate(_read_lines(args.infile)), args.threads)
    )
    return 0


def cmd_tag_strip(args) -> int:
    writer = _LineWriter(args.out)
    found = []
    try:
        for index, line in enumerate(_read_lines(args.infile)):
            stripped, name = corpusops.strip_tag(SentencePair(src=line, line_no=index + 1))
            writer.write(stripped.src)
            found.append(name or "-")
    finally:
        writer.close()
    if args.found_out:
        _write_lines(args.found_out, found)
    return 0


def cmd_compose(args) -> int:
    manifest = corpusops.parse_manifest(args.manifest, args.scheme_name)
    pairs = corpusops.compose(
        manifest,
        epoch=args.epoch,
        seed=args.seed,
        shuffle=not args.no_shuffle,
        src_suffix=args.src_suffix,
        tgt_suffix=args.tgt_suffix,
    )
    count = write_parallel(pairs, args.out_src, args.out_tgt)
    log.info("composed %d pairs", count)
    return 0


def cmd_eval_bleu(args) -> int:
    config = metrics.BleuConfig(case_sensitive=not args.lowercase)
    result = metrics.corpus_bleu(
        list(_read_lines(args.hyps)), list(_read_lines(args.refs)), config
    )
    if args.json:
        print(json.dumps(result.to_dict()))
    else:
        print("%.1f" % result.score)
        print(result.format())
    return 0


def cmd_eval_mine_subs(args) -> int:
    ranked = metrics.mine_substitutions(
        list(_read_lines(args.hyps)), list(_read_lines(args.refs)), args.min_count
    )
    if args.json:
        print(json.dumps([{"hyp": h, "ref": r, "count": c} for h, r, c in ranked]))
    else:
        for hyp, ref, count in ranked:
            print("%s\t%s\t%d" % (hyp, ref, count))
    return 0


def cmd_eval_polysemy(args) -> int:
    entries = metrics.load_polysemy_entries(args.entries)
    report = metrics.polysemous_accuracy(
        list(_read_lines(args.src)), list(_read_lines(args.hyps)), entries
    )
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        for entry in report.entries:
            print("%s\t%d\t%d" % (entry.source_word, entry.n_source, entry.n_correct))
        print("total\t%.1f%%" % report.total_percent)
    return 0


def cmd_eval_ranking(args) -> int:
    judgments = metrics.load_judgments(args.judgments)
    report = metrics.ranking_report(judgments, gold_policy=args.gold_policy)
    if args.json:
        print(json.dumps(report.to_dict()))
    else:
        for pair in report.pairs:
            print(
                "%s vs %s\twin %d\ttie %d\tloss %d\tp %.4g"
                % (pair.system_a, pair.system_b, pair.wins, pair.ties, pair.losses, pair.p_value)
            )
        print("kappa\t%.3f" % report.kappa.average)
    return 0


# --------------------------------------------------------------------------
# Parser construction and dispatch.
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="ugcmt",
        description="Corpus preprocessing and targeted evaluation for MT of "
        "noisy user-generated content.",
        formatter_class=fmt,
    )
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized commands")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for per-line transforms")
    parser.add_argument("--strict", action="store_true", help="refuse randomized commands without an explicit --seed")
    parser.add_argument("--log", metavar="FILE", default=None, help="append a JSON config record for replay")
    parser.add_argument("--quiet", action="store_true", help="only report errors")
    groups = parser.add_subparsers(dest="group", required=True)

    def sub(parent, name, handler, **kwargs):
        p = parent.add_parser(name, formatter_class=fmt, **kwargs)
        p.set_defaults(handler=handler)
        return p

    case = groups.add_parser("case", help="case-handling transforms").add_subparsers(
        dest="action", required=True
    )
    p = sub(case, "encode", cmd_case_encode, help="encode casing out of a text stream")
    p.add_argument("--scheme", choices=("inline", "factored", "lower"), required=True)
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")
    p.add_argument("--tags-out", default=None, help="tag-stream output (factored)")
    p.add_argument("--marker", default=casing.MARKER, help="word-boundary mark on pieces")
    p = sub(case, "decode", cmd_case_decode, help="restore casing into a text stream")
    p.add_argument("--scheme", choices=("inline", "factored"), required=True)
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")
    p.add_argument("--tags-in", default=None, help="tag-stream input (factored)")
    p.add_argument("--marker", default=casing.MARKER, help="word-boundary mark on pieces")
    p = sub(case, "noise", cmd_case_noise, help="randomly upper/title/lower-case tokens")
    p.add_argument("--p-upper", type=float, default=0.05, help="chance of rewriting a token to upper case")
    p.add_argument("--p-title", type=float, default=0.10, help="chance of rewriting a token to title case")
    p.add_argument("--p-lower", type=float, default=0.20, help="chance of rewriting a token to lower case")
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")
    p = sub(case, "variant", cmd_case_variant, help="rewrite a stream wholesale to one case")
    p.add_argument("--mode", choices=("upper", "lower", "title"), required=True, help="case applied to every source token")
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")

    rare = groups.add_parser("rarechar", help="rare-character placeholders").add_subparsers(
        dest="action", required=True
    )
    p = sub(rare, "census", cmd_rarechar_census, help="count character frequencies")
    p.add_argument("--src", required=True, help="source-side text file")
    p.add_argument("--tgt", default=None, help="optional target side, counted too")
    p.add_argument("--out", required=True, help="census output (char<TAB>count)")
    p = sub(rare, "mask", cmd_rarechar_mask, help="replace rare characters by <x>")
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")
    p.add_argument("--census", required=True, help="census file from `rarechar census`")
    p.add_argument("--min-count", type=int, default=100, help="retain characters seen at least this often")
    p.add_argument("--sidecar", required=True, help="where to save the removed characters")
    p = sub(rare, "restore", cmd_rarechar_restore, help="put saved characters back, in order")
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")
    p.add_argument("--sidecar", required=True, help="saved characters from `rarechar mask`")

    noise = groups.add_parser("noise", help="natural-noise pipeline").add_subparsers(
        dest="action", required=True
    )
    p = sub(noise, "build-dict", cmd_noise_build_dict, help="harvest an error dictionary")
    p.add_argument("--lexicon", required=True, help="known word forms, one per line (word[\\tfreq])")
    p.add_argument("--corpus", required=True, help="monolingual in-domain text")
    p.add_argument("--out", required=True, help="dictionary output file")
    p.add_argument("--max-dist", type=int, default=2, help="maximum edit distance for matches")
    p = sub(noise, "calibrate", cmd_noise_calibrate, help="find the token rate for a target sentence rate")
    p.add_argument("--dict", required=True, help="error dictionary from `noise build-dict`")
    p.add_argument("--rules", default="none", help="rules file, or 'builtin', or 'none'")
    p.add_argument("--sample", required=True, help="sample corpus, ideally 10k+ sentences")
    p.add_argument("--target", type=float, default=0.30, help="target fraction of modified sentences")
    p.add_argument("--tolerance", type=float, default=0.02, help="acceptable deviation from the target")
    p = sub(noise, "apply", cmd_noise_apply, help="inject natural noise into sources")
    p.add_argument("--dict", required=True, help="error dictionary from `noise build-dict`")
    p.add_argument("--rules", default="none", help="rules file, or 'builtin', or 'none'")
    p.add_argument("--rate", type=float, required=True, help="per-token replacement probability")
    p.add_argument("--src", required=True, help="source-side input")
    p.add_argument("--tgt", default=None, help="target side, copied through byte-identical")
    p.add_argument("--out-src", required=True, help="noised source output")
    p.add_argument("--out-tgt", default=None, help="target output (required with --tgt)")
    p.add_argument("--flags-out", default=None, help="write 0/1 modified flags per line")
    p = sub(noise, "profile", cmd_noise_profile, help="emojis / all-caps / typos per 100 tokens")
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--lexicon", required=True, help="known word forms for typo detection")
    p.add_argument("--acronyms", default=None, help="file of tokens not counted as all-caps")

    p = sub(groups, "filter", cmd_filter, help="length, ratio, dedup and language filters")
    p.add_argument("--src", required=True, help="source-side input")
    p.add_argument("--tgt", required=True, help="target-side input")
    p.add_argument("--out-src", required=True, help="filtered source output")
    p.add_argument("--out-tgt", required=True, help="filtered target output")
    p.add_argument("--max-words", type=int, default=175, help="drop pairs with a longer side")
    p.add_argument("--max-ratio", type=float, default=1.5, help="drop pairs with a larger length ratio")
    p.add_argument("--dedup", action="store_true", help="drop exact duplicate pairs")
    p.add_argument("--langid-cmd", default=None, help="command printing one language code per input line")
    p.add_argument("--src-lang", default=None, help="expected source language code")
    p.add_argument("--tgt-lang", default=None, help="expected target language code")
    p.add_argument("--dropped-out", default=None, help="write line_no and reason per dropped pair")

    tag = groups.add_parser("tag", help="sub-corpus tags on source text").add_subparsers(
        dest="action", required=True
    )
    p = sub(tag, "add", cmd_tag_add, help="prepend a <NAME> token to every line")
    p.add_argument("--name", required=True, help="uppercase tag identifier, e.g. PE or BT")
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")
    p = sub(tag, "strip", cmd_tag_strip, help="remove a leading tag token")
    p.add_argument("--in", dest="infile", default="-", help="input file or - for stdin")
    p.add_argument("--out", default="-", help="output file or - for stdout")
    p.add_argument("--found-out", default=None, help="write the stripped tag (or -) per line")

    p = sub(groups, "compose", cmd_compose, help="assemble a training corpus from a manifest")
    p.add_argument("--manifest", required=True, help="path<TAB>tag-or-dash<TAB>oversample<TAB>resample per line")
    p.add_argument("--epoch", type=int, default=0, help="epoch index for resampled parts and the shuffle")
    p.add_argument("--out-src", required=True, help="composed source output")
    p.add_argument("--out-tgt", required=True, help="composed target output")
    p.add_argument("--no-shuffle", action="store_true", help="keep manifest order")
    p.add_argument("--src-suffix", default=".src", help="suffix appended to part paths")
    p.add_argument("--tgt-suffix", default=".tgt", help="suffix appended to part paths")
    p.add_argument("--scheme-name", default="", help="free-text name recorded for the run")

    evals = groups.add_parser("eval", help="targeted evaluation").add_subparsers(
        dest="action", required=True
    )
    p = sub(evals, "bleu", cmd_eval_bleu, help="corpus BLEU against single references")
    p.add_argument("--refs", required=True, help="reference translations, one per line")
    p.add_argument("--hyps", required=True, help="system outputs, one per line")
    p.add_argument("--lowercase", action="store_true", help="case-insensitive scoring")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p = sub(evals, "mine-subs", cmd_eval_mine_subs, help="most frequent word substitutions")
    p.add_argument("--refs", required=True, help="reference translations, one per line")
    p.add_argument("--hyps", required=True, help="system outputs, one per line")
    p.add_argument("--min-count", type=int, default=3, help="drop substitution pairs seen fewer times")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p = sub(evals, "polysemy", cmd_eval_polysemy, help="accuracy on ambiguous source words")
    p.add_argument("--entries", required=True, help="word<TAB>accepted,forms per line")
    p.add_argument("--src", required=True, help="source sentences, one per line")
    p.add_argument("--hyps", required=True, help="system outputs, one per line")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p = sub(evals, "ranking", cmd_eval_ranking, help="win/tie/loss table with significance")
    p.add_argument("--judgments", required=True, help="judge<TAB>sentence<TAB>ranking[<TAB>gold:expected]")
    p.add_argument("--gold-policy", choices=("all", "any"), default="all", help="how many gold items a judge must get right")
    p.add_argument("--json", action="store_true", help="machine-readable output")

    return parser


def _write_run_log(args, argv: list[str]) -> None:
    record = {
        "argv": argv,
        "command": " ".join(
            part for part in (args.group, getattr(args, "action", None)) if part
        ),
        "seed": args.seed,
        "config": {
            key: value
            for key, value in sorted(vars(args).items())
            if key not in ("handler", "log") and isinstance(value, (str, int, float, bool, type(None)))
        },
    }
    with open(args.log, "a", encoding="utf-8") as out:
        out.write(json.dumps(record) + "\n")


def run(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    command = (args.group, getattr(args, "action", None))
    if args.seed is None:
        if args.strict and command in RANDOMIZED:
            sys.stderr.write(
                "ugcmt: error: --strict requires an explicit --seed for randomized "
                "command %r\n" % " ".join(p for p in command if p)
            )
            return 2
        args.seed = 0
    if args.log:
        _write_run_log(args, argv)
    try:
        return args.handler(args)
    except ToolkitError as exc:
        log.error("%s", exc)
        return 1
    except BrokenPipeError:
        return 1


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(main())
