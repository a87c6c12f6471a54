"""Corpus loading and end-to-end evaluation of repair models with and without reranking.

Per bug the pipeline runs: tokenize, query the model once undisturbed
(baseline), generate disturbed variants, batch-query, fit the dependency
matrix, score each candidate's stability and relevance, rerank, and compare
both top-1 candidates against the tokenized ground-truth fix (exact token
match). The report carries the fixed-bug counts before and after reranking
plus per-bug ranks, mirroring a one-row-per-corpus comparison table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

from .adapter import ModelHandle, ProgramInput, query, query_batch
from .augment import AugmentOp, PerturbationConfig, generate_perturbations
from .causal import DependencyMatrix, EstimatorConfig, build_design_matrix, estimate_dependencies
from .errors import CorpusError, CprError, QueryError
from .graphs import (
    BipartiteGraph,
    ExplanationGraph,
    build_bipartite,
    default_cluster_count,
    select_explanation,
    spectral_coclusters,
)
from .rerank import RerankConfig, changed_tokens, rerank, stability_score, relevance_score
from .tokens import tokenize_code, tokenize_comment

DEFAULT_BEAM = 5
REQUIRED_FIELDS = ("id", "language", "buggy", "comment", "fixed")


@dataclass(frozen=True)
class BugRecord:
    id: str
    language: str
    buggy: str
    comment: str
    fixed: str


@dataclass(frozen=True)
class BugOutcome:
    id: str
    baseline_rank: int | None
    rerank_rank: int | None
    error: str | None = None


@dataclass
class EvalReport:
    corpus: str
    model: str
    op: str
    bug_count: int
    fixed_baseline: int
    fixed_with_ci: int
    per_bug: list[BugOutcome] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "corpus": self.corpus,
            "model": self.model,
            "op": self.op,
            "bug_count": self.bug_count,
            "fixed_baseline": self.fixed_baseline,
            "fixed_with_ci": self.fixed_with_ci,
            "per_bug": [
                {
                    "id": o.id,
                    "baseline_rank": o.baseline_rank,
                    "rerank_rank": o.rerank_rank,
                    "error": o.error,
                }
                for o in self.per_bug
            ],
        }


def load_corpus(path) -> list[BugRecord]:
    """Parse a JSON Lines corpus, validating per-record fields and id uniqueness."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed JSON ({exc.msg})", line=lineno) from exc
            for key in REQUIRED_FIELDS:
                if key not in doc:
                    raise CorpusError(f"missing field {key!r}", line=lineno)
                if not isinstance(doc[key], str):
                    raise CorpusError(f"field {key!r} must be a string", line=lineno)
            if not doc["buggy"] or not doc["fixed"]:
                raise CorpusError("buggy and fixed must be non-empty", line=lineno)
            if doc["id"] in seen:
                raise CorpusError(f"duplicate id {doc['id']!r}", line=lineno)
            seen.add(doc["id"])
            records.append(BugRecord(**{k: doc[k] for k in REQUIRED_FIELDS}))
    return records


def bundled_corpus_path() -> Path:
    return Path(str(resources.files("cpr.data").joinpath("corpus.jsonl")))


def bundled_corpus_meta() -> dict:
    return json.loads(resources.files("cpr.data").joinpath("corpus_meta.json").read_text("utf-8"))


def record_to_input(record: BugRecord) -> ProgramInput:
    return ProgramInput(
        code=tokenize_code(record.buggy, record.language),
        comment=tokenize_comment(record.comment),
    )


def _rank_of(output, fixed_texts: list[str]) -> int | None:
    for rank, cand in enumerate(output.candidates, start=1):
        if cand.texts == fixed_texts:
            return rank
    return None


def analyze_bug(
    record: BugRecord,
    model: ModelHandle,
    pcfg: PerturbationConfig,
    ecfg: EstimatorConfig,
    rcfg: RerankConfig,
    beam: int = DEFAULT_BEAM,
):
    """Full per-bug pipeline; returns the pieces the report and CLI need."""
    program_input = record_to_input(record)
    fixed_texts = tokenize_code(record.fixed, record.language).texts

    baseline = query(model, program_input, beam)
    samples = generate_perturbations(program_input, pcfg)
    perturbed_inputs = [ProgramInput(code=s.code, comment=s.comment) for s in samples]
    outputs = query_batch(model, perturbed_inputs, beam)
    failures = [(i, r) for i, r in enumerate(outputs) if isinstance(r, QueryError)]
    if failures:
        i, err = failures[0]
        raise QueryError(f"sample {i}: {err}")

    dm = build_design_matrix(program_input, samples, outputs, baseline)
    dep = estimate_dependencies(dm, ecfg)

    buggy_texts = program_input.code.texts
    stabilities = [stability_score(c, outputs, rcfg.delta) for c in baseline.candidates]
    relevances = [
        relevance_score(c, dep, changed_tokens(buggy_texts, c)) for c in baseline.candidates
    ]
    reranked, scored = rerank(baseline, stabilities, relevances, rcfg)
    return {
        "input": program_input,
        "fixed_texts": fixed_texts,
        "baseline": baseline,
        "samples": samples,
        "outputs": outputs,
        "design": dm,
        "dependencies": dep,
        "reranked": reranked,
        "scored": scored,
    }


def evaluate(
    corpus: list[BugRecord],
    model: ModelHandle,
    pcfg: PerturbationConfig | None = None,
    ecfg: EstimatorConfig | None = None,
    rcfg: RerankConfig | None = None,
    corpus_name: str = "corpus",
    beam: int = DEFAULT_BEAM,
    workers: int = 1,
) -> EvalReport:
    pcfg = pcfg if pcfg is not None else PerturbationConfig()
    ecfg = ecfg if ecfg is not None else EstimatorConfig()
    rcfg = rcfg if rcfg is not None else RerankConfig()

    def one(record: BugRecord) -> BugOutcome:
        try:
            result = analyze_bug(record, model, pcfg, ecfg, rcfg, beam)
        except CprError as exc:
            return BugOutcome(id=record.id, baseline_rank=None, rerank_rank=None, error=str(exc))
        fixed = result["fixed_texts"]
        return BugOutcome(
            id=record.id,
            baseline_rank=_rank_of(result["baseline"], fixed),
            rerank_rank=_rank_of(result["reranked"], fixed),
        )

    if workers > 1 and len(corpus) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, corpus))
    else:
        outcomes = [one(r) for r in corpus]

    return EvalReport(
        corpus=corpus_name,
        model=model.name,
        op=pcfg.op.value,
        bug_count=len(corpus),
        fixed_baseline=sum(1 for o in outcomes if o.baseline_rank == 1),
        fixed_with_ci=sum(1 for o in outcomes if o.rerank_rank == 1),
        per_bug=outcomes,
    )


def evaluate_sweep(
    corpus: list[BugRecord],
    model: ModelHandle,
    pcfg: PerturbationConfig | None = None,
    ecfg: EstimatorConfig | None = None,
    rcfg: RerankConfig | None = None,
    corpus_name: str = "corpus",
    beam: int = DEFAULT_BEAM,
    workers: int = 1,
) -> list[EvalReport]:
    """One evaluation per augmentation operator, all other settings shared."""
    base = pcfg if pcfg is not None else PerturbationConfig()
    reports = []
    for op in AugmentOp:
        cfg = PerturbationConfig(
            alpha=base.alpha,
            m_dist=base.m_dist,
            op=op,
            seed=base.seed,
            perturb_code=base.perturb_code,
            perturb_comment=base.perturb_comment,
        )
        reports.append(
            evaluate(corpus, model, cfg, ecfg, rcfg, corpus_name=corpus_name, beam=beam, workers=workers)
        )
    return reports


def explain_bug(
    record: BugRecord,
    model: ModelHandle,
    pcfg: PerturbationConfig | None = None,
    ecfg: EstimatorConfig | None = None,
    K: int = 3,
    k: int | None = None,
    tau: float = 0.75,
    seed: int | None = None,
) -> tuple[ExplanationGraph, BipartiteGraph, DependencyMatrix]:
    """Dependency graph, co-clustering, and cluster selection for one bug."""
    pcfg = pcfg if pcfg is not None else PerturbationConfig()
    ecfg = ecfg if ecfg is not None else EstimatorConfig()
    result = analyze_bug(record, model, pcfg, ecfg, RerankConfig(), beam=DEFAULT_BEAM)
    dep = result["dependencies"]
    graph = build_bipartite(dep, tau)
    if graph.node_count == 0:
        return (
            ExplanationGraph(nodes=(), edges=(), selected_clusters=(), empty_warning=True),
            graph,
            dep,
        )
    cluster_count = k if k is not None else default_cluster_count(graph)
    cluster_count = max(1, min(cluster_count, graph.node_count))
    cc = spectral_coclusters(graph, cluster_count, seed=pcfg.seed if seed is None else seed)
    explanation = select_explanation(cc, graph, K)
    return explanation, graph, dep
