"""Perturbation-based explanation and patch reranking for black-box repair models."""

from .adapter import (
    HttpModel,
    InProcessModel,
    ModelHandle,
    ProgramInput,
    RepairCandidate,
    RepairOutput,
    ResponseCache,
    SubprocessModel,
    query,
    query_batch,
)
from .augment import (
    AugmentOp,
    Lexicon,
    PerturbationConfig,
    PerturbedSample,
    StubTranslator,
    back_translate,
    generate_perturbations,
    perturbation_count,
    random_delete,
    random_insert,
    random_swap,
    synonym_replace,
)
from .causal import (
    DependencyMatrix,
    DesignMatrix,
    EstimatorConfig,
    build_design_matrix,
    estimate_dependencies,
    logistic_fit,
    pmi_score,
)
from .errors import (
    AlignmentError,
    CorpusError,
    CprError,
    InvalidConfigError,
    InvalidKError,
    NumericalError,
    PerturbationError,
    QueryError,
    QueryTimeout,
)
from .graphs import (
    BipartiteGraph,
    CoClustering,
    ExplanationGraph,
    build_bipartite,
    kmeans,
    select_explanation,
    spectral_coclusters,
)
from .harness import (
    BugRecord,
    EvalReport,
    analyze_bug,
    bundled_corpus_meta,
    bundled_corpus_path,
    evaluate,
    evaluate_sweep,
    explain_bug,
    load_corpus,
)
from .rerank import RerankConfig, ScoredCandidate, rerank, relevance_score, stability_score
from .tokens import (
    Stream,
    Token,
    TokenKind,
    TokenSequence,
    default_stopwords,
    detokenize,
    tokenize_code,
    tokenize_comment,
)
from .toy import make_copy_model, make_toy_model, toy_repair

__version__ = "0.1.0"
