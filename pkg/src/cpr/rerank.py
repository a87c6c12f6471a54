"""Rescore candidate patches by stability under perturbation and dependency relevance.

A candidate's stability is the fraction of disturbed queries whose top
prediction still matches it (token-level LCS similarity against a floor,
exact match by default). Its relevance is the mean, over the tokens it
changes relative to the buggy code, of the strongest positive dependency
weight flowing into each changed token. Final score blends the normalized
model score with these two signals:

    final = (1 - lambda_mix) * norm_model + lambda_mix * (stability + norm_relevance) / 2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adapter import RepairCandidate, RepairOutput
from .align import changed_indices, similarity
from .causal import DependencyMatrix
from .errors import InvalidConfigError


@dataclass(frozen=True)
class RerankConfig:
    lambda_mix: float = 0.5
    delta: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise InvalidConfigError(f"lambda_mix must be in [0,1], got {self.lambda_mix}")
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidConfigError(f"delta must be in [0,1], got {self.delta}")


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: RepairCandidate
    stability: float
    relevance: float
    final_score: float
    original_rank: int  # 1-based rank in the model ordering

    def to_json_dict(self) -> dict:
        return {
            "tokens": self.candidate.texts,
            "model_score": self.candidate.model_score,
            "stability": self.stability,
            "relevance": self.relevance,
            "final_score": self.final_score,
            "original_rank": self.original_rank,
        }


def stability_score(candidate: RepairCandidate, perturbed_outputs, delta: float = 1.0) -> float:
    """Fraction of perturbed top-1 outputs within similarity delta of the candidate."""
    outputs = list(perturbed_outputs)
    if not outputs:
        raise InvalidConfigError("stability requires at least one perturbed output")
    texts = candidate.texts
    hits = sum(1 for out in outputs if similarity(texts, out.top.texts) >= delta)
    return hits / len(outputs)


def changed_tokens(buggy_texts: list[str], candidate: RepairCandidate) -> list[str]:
    """Candidate tokens not aligned to the buggy code under an LCS diff."""
    cand = candidate.texts
    return [cand[j] for j in changed_indices(buggy_texts, cand)]


def relevance_score(candidate: RepairCandidate, dep: DependencyMatrix, changed: list[str]) -> float:
    value, _ = relevance_breakdown(candidate, dep, changed)
    return value


def relevance_breakdown(
    candidate: RepairCandidate, dep: DependencyMatrix, changed: list[str]
) -> tuple[float, list[str]]:
    """Mean max positive incoming weight per changed token, plus unmatched tokens."""
    if not changed:
        return 0.0, []
    col = {t: j for j, t in enumerate(dep.output_vocab)}
    missing = []
    total = 0.0
    for t in changed:
        j = col.get(t)
        if j is None:
            missing.append(t)
            continue
        total += max(0.0, float(np.max(dep.W[:, j])) if dep.W.shape[0] else 0.0)
    return total / len(changed), missing


def score_candidates(
    output: RepairOutput,
    stabilities,
    relevances,
    cfg: RerankConfig,
) -> list[ScoredCandidate]:
    """Assemble blended scores for each candidate in model order."""
    cands = output.candidates
    stabilities = list(stabilities)
    relevances = list(relevances)
    if len(stabilities) != len(cands) or len(relevances) != len(cands):
        raise InvalidConfigError("scores must align with candidates")

    model_scores = [c.model_score for c in cands]
    lo, hi = min(model_scores), max(model_scores)
    if hi > lo:
        norm_model = [(s - lo) / (hi - lo) for s in model_scores]
    else:
        norm_model = [1.0] * len(cands)
    max_rel = max(relevances) if relevances else 0.0
    norm_rel = [r / max_rel if max_rel > 0 else 0.0 for r in relevances]

    scored = []
    for rank, (cand, stab, nrel, nm) in enumerate(
        zip(cands, stabilities, norm_rel, norm_model), start=1
    ):
        final = (1.0 - cfg.lambda_mix) * nm + cfg.lambda_mix * (stab + nrel) / 2.0
        scored.append(
            ScoredCandidate(
                candidate=cand,
                stability=stab,
                relevance=relevances[rank - 1],
                final_score=final,
                original_rank=rank,
            )
        )
    return scored


def rerank(
    output: RepairOutput,
    stabilities,
    relevances,
    cfg: RerankConfig,
) -> tuple[RepairOutput, list[ScoredCandidate]]:
    """Re-sort candidates by final score; ties keep the model's ordering."""
    scored = score_candidates(output, stabilities, relevances, cfg)
    reordered = sorted(scored, key=lambda s: (-s.final_score, s.original_rank))
    return RepairOutput(candidates=tuple(s.candidate for s in reordered)), reordered
