"""Bundled in-process models: a rule-table repairer and a copy model.

The rule-table model stands in for a trained seq2seq repairer at desk scale.
Each rule rewrites one occurrence of a code token pattern, optionally gated
on keywords appearing in the comment stream, and carries a fixed synthetic
score. A few rules are deliberately mis-prioritized (a higher-scoring rule
patches the wrong occurrence) so that reranking has real work to do on the
bundled corpus; the affected bug ids are listed in the corpus metadata.

The copy model returns its code input unchanged, which gives an exact
ground-truth dependency structure (every output token depends on the
same-text input token) for end-to-end checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .adapter import InProcessModel, ProgramInput, RepairOutput, ResponseCache

IDENTITY_SCORE = 0.0
MAX_CANDIDATES = 5


@dataclass(frozen=True)
class RewriteRule:
    pattern: tuple[str, ...]
    replacement: tuple[str, ...]
    occurrence: int
    gate: frozenset[str]
    score: float


_rules_cache: tuple[int, tuple[RewriteRule, ...]] | None = None


def load_rules() -> tuple[int, tuple[RewriteRule, ...]]:
    """(version, rules) from the bundled, versioned rule table."""
    global _rules_cache
    if _rules_cache is None:
        doc = json.loads(resources.files("cpr.data").joinpath("toy_rules.json").read_text("utf-8"))
        rules = tuple(
            RewriteRule(
                pattern=tuple(r["pattern"]),
                replacement=tuple(r["replacement"]),
                occurrence=int(r.get("occurrence", 0)),
                gate=frozenset(r.get("gate", [])),
                score=float(r["score"]),
            )
            for r in doc["rules"]
        )
        _rules_cache = (int(doc["version"]), rules)
    return _rules_cache


def _occurrences(texts: list[str], pattern: tuple[str, ...]) -> list[int]:
    width = len(pattern)
    return [i for i in range(len(texts) - width + 1) if tuple(texts[i : i + width]) == pattern]


def toy_raw(code_tokens: list[str], comment_tokens: list[str], beam: int):
    """Raw transport-shaped candidate list for the rule-table model."""
    _, rules = load_rules()
    comment_words = set(comment_tokens)
    raw = []
    for rule in rules:
        if not rule.gate <= comment_words:
            continue
        hits = _occurrences(code_tokens, rule.pattern)
        if rule.occurrence >= len(hits):
            continue
        at = hits[rule.occurrence]
        patched = code_tokens[:at] + list(rule.replacement) + code_tokens[at + len(rule.pattern):]
        raw.append((patched, rule.score))
    if not raw:
        raw.append((list(code_tokens), IDENTITY_SCORE))
    raw.sort(key=lambda pair: -pair[1])
    seen = set()
    deduped = []
    for texts, score in raw:
        key = tuple(texts)
        if key in seen:
            continue
        seen.add(key)
        deduped.append((texts, score))
        if len(deduped) >= min(beam, MAX_CANDIDATES):
            break
    return deduped


def toy_repair(program_input: ProgramInput, beam: int = MAX_CANDIDATES) -> RepairOutput:
    raw = toy_raw(program_input.code.texts, program_input.comment.texts, beam)
    return RepairOutput.from_raw(raw, beam)


def copy_raw(code_tokens: list[str], comment_tokens: list[str], beam: int):
    return [(list(code_tokens), 0.0)]


def make_toy_model(cache: ResponseCache | None = None) -> InProcessModel:
    version, _ = load_rules()
    return InProcessModel(toy_raw, name=f"toy/v{version}", cache=cache)


def make_copy_model(cache: ResponseCache | None = None) -> InProcessModel:
    return InProcessModel(copy_raw, name="copy", cache=cache)
