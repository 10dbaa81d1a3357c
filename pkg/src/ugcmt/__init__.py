"""Toolkit for preparing and evaluating MT of noisy user-generated content.

Submodules
----------
core       data model and streaming corpus/review I/O
casing     lowercasing, inline and factored case, case noise, case variants
rarechar   rare-character placeholders with ordered restoration
lexnoise   lexicon-backed error harvesting and natural-noise injection
corpusops  filters, corpus tags, training-set composition, temperature
metrics    BLEU, substitution mining, polysemy accuracy, ranking statistics
cli        the ``ugcmt`` command-line entry point
"""

from .core import (
    ConfigError,
    ContractError,
    CorpusStructureError,
    CorpusSplit,
    RecordError,
    ReviewRecord,
    SentencePair,
    ToolkitError,
    read_lines,
    read_mono,
    read_parallel,
    read_reviews,
    write_mono,
    write_parallel,
    write_reviews,
)
from .casing import (
    CaseNoiseProfile,
    CaseNoiser,
    CaseTag,
    CaseVariant,
    FactoredCaser,
    InlineCaser,
    apply_case_noise,
    classify_case,
    decode_factored,
    decode_inline,
    encode_factored,
    encode_factored_text,
    encode_inline,
    encode_inline_text,
    make_case_variant_testset,
    recase,
    split_mixed_case,
)
from .rarechar import (
    CharCensus,
    PlaceholderRecord,
    RareCharMasker,
    SavedChar,
    build_charset,
    census,
    mask,
    read_sidecar,
    restore,
    write_sidecar,
)
from .lexnoise import (
    CalibrationResult,
    EditOp,
    ErrorDictionary,
    Lexicon,
    NaturalNoiser,
    NoiseConfig,
    NoiseProfile,
    RegexNoiseRule,
    RuleId,
    apply_regex_rules,
    build_error_dictionary,
    calibrate_rate,
    default_rules,
    edit_distance,
    fuzzy_match,
    inject_noise,
    load_lexicon,
    noise_profile,
    noisify_corpus,
)
from .corpusops import (
    CompositionManifest,
    CorpusTag,
    FilterConfig,
    LogitVector,
    ManifestPart,
    PairFilter,
    add_tag,
    compose,
    dedup,
    filter_corpus,
    filter_pair,
    parse_manifest,
    strip_tag,
    temperature_distribution,
)
from .metrics import (
    BleuConfig,
    BleuResult,
    EvalReport,
    PairwiseResult,
    PolysemyEntry,
    RankingJudgment,
    average_pairwise_kappa,
    cohen_kappa,
    corpus_bleu,
    edit_alignment,
    filter_judgments_by_gold,
    mine_substitutions,
    pairwise_table,
    polysemous_accuracy,
    ranking_report,
    tokenize_13a,
    wilcoxon_signed_rank,
)

__version__ = "0.1.0"
