"""Data-augmentation operators used to disturb model inputs.

Five operators: synonym replacement (SR), random insertion (RI), random swap
(RS), random deletion (RD), and back-translation (BT). Word-level operators
scale their edit count with sentence length as m = floor(alpha * l); RD uses
p = alpha as its per-token deletion probability. Every disturbed sample
records which original tokens it retains, which is what the association
estimator later regresses on.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Protocol

from .align import lcs_match
from .errors import InvalidConfigError, PerturbationError
from .tokens import Stream, Token, TokenKind, TokenSequence, reposition


class AugmentOp(str, Enum):
    SR = "SR"
    RI = "RI"
    RS = "RS"
    RD = "RD"
    BT = "BT"


class SynonymProvider(Protocol):
    def synonyms(self, word: str) -> list[str]: ...


class Translator(Protocol):
    def translate(self, texts: list[str]) -> list[str]: ...


class Lexicon:
    """Synonym lookup backed by a `word<TAB>syn1,syn2,...` text table."""

    def __init__(self, table: dict[str, list[str]]):
        self.table = {w: [s for s in syns if s] for w, syns in table.items()}

    def synonyms(self, word: str) -> list[str]:
        return self.table.get(word, [])

    @classmethod
    def parse(cls, text: str) -> "Lexicon":
        table = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            word, _, syns = line.partition("\t")
            table[word.strip()] = [s.strip() for s in syns.split(",") if s.strip()]
        return cls(table)

    @classmethod
    def load(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())


class StubTranslator:
    """Deterministic pivot-translation stand-in.

    Applies a phrase-substitution table on the way out and paraphrases on the
    way back, so the net effect maps covered phrases to an alternative and
    leaves everything else verbatim. Multi-word keys are matched greedily,
    leftmost-longest.
    """

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon
        self._max_len = max((len(k.split()) for k in lexicon.table), default=1)

    def translate(self, texts: list[str]) -> list[str]:
        out = []
        i = 0
        while i < len(texts):
            replaced = False
            for span in range(min(self._max_len, len(texts) - i), 0, -1):
                key = " ".join(texts[i : i + span])
                alts = self.lexicon.synonyms(key)
                if alts:
                    out.extend(alts[0].split())
                    i += span
                    replaced = True
                    break
            if not replaced:
                out.append(texts[i])
                i += 1
        return out


@dataclass(frozen=True)
class PerturbationConfig:
    alpha: float = 0.1
    m_dist: int = 100
    op: AugmentOp = AugmentOp.SR
    seed: int = 0
    perturb_code: bool = False
    perturb_comment: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfigError(f"alpha must be in [0,1], got {self.alpha}")
        if self.m_dist < 1:
            raise InvalidConfigError(f"m_dist must be >= 1, got {self.m_dist}")
        if not (self.perturb_code or self.perturb_comment):
            raise InvalidConfigError("at least one of perturb_code/perturb_comment must be set")


@dataclass(frozen=True)
class PerturbedSample:
    index: int
    code: TokenSequence
    comment: TokenSequence
    retained_mask: tuple[bool, ...]
    op: AugmentOp


def perturbation_count(alpha: float, length: int) -> int:
    """Edit count m = floor(alpha * l)."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidConfigError(f"alpha must be in [0,1], got {alpha}")
    return int(alpha * length)


def _eligible_positions(seq: TokenSequence, lexicon: SynonymProvider) -> list[int]:
    # Comment streams: plain words only (stopwords excluded by kind).
    # Code streams: identifiers only, so symbols and keywords stay intact.
    allowed = TokenKind.WORD if seq.stream is Stream.COMMENT else TokenKind.IDENTIFIER
    return [
        i for i, t in enumerate(seq.tokens)
        if t.kind is allowed and lexicon.synonyms(t.text)
    ]


def synonym_replace(
    seq: TokenSequence, m: int, lexicon: SynonymProvider, rng: random.Random
) -> tuple[TokenSequence, set[int]]:
    eligible = _eligible_positions(seq, lexicon)
    count = min(m, len(eligible))
    if count <= 0:
        return seq, set(range(len(seq)))
    chosen = sorted(rng.sample(eligible, count))
    toks = list(seq.tokens)
    for pos in chosen:
        syn = rng.choice(lexicon.synonyms(toks[pos].text))
        toks[pos] = Token(text=syn, kind=toks[pos].kind, stream=seq.stream, position=pos)
    retained = set(range(len(seq))) - set(chosen)
    return reposition(toks, seq.stream), retained


def random_insert(
    seq: TokenSequence, m: int, lexicon: SynonymProvider, rng: random.Random
) -> tuple[TokenSequence, set[int]]:
    toks = list(seq.tokens)
    for _ in range(m):
        current = reposition(toks, seq.stream)
        eligible = _eligible_positions(current, lexicon)
        if not eligible:
            break
        src = toks[rng.choice(eligible)]
        syn = rng.choice(lexicon.synonyms(src.text))
        slot = rng.randint(0, len(toks))
        toks.insert(slot, Token(text=syn, kind=src.kind, stream=seq.stream, position=slot))
    return reposition(toks, seq.stream), set(range(len(seq)))


def random_swap(
    seq: TokenSequence, m: int, rng: random.Random
) -> tuple[TokenSequence, set[int]]:
    retained = set(range(len(seq)))
    if len(seq) < 2:
        return seq, retained
    toks = list(seq.tokens)
    for _ in range(m):
        i, j = rng.sample(range(len(toks)), 2)
        toks[i], toks[j] = toks[j], toks[i]
    return reposition(toks, seq.stream), retained


def random_delete(
    seq: TokenSequence, p: float, rng: random.Random
) -> tuple[TokenSequence, set[int]]:
    if not 0.0 <= p <= 1.0:
        raise InvalidConfigError(f"p must be in [0,1], got {p}")
    if len(seq) == 0:
        return seq, set()
    survivors = [i for i in range(len(seq)) if rng.random() >= p]
    if not survivors:
        # Never hand the model an empty input: keep one token at random.
        survivors = [rng.randrange(len(seq))]
    toks = [seq.tokens[i] for i in survivors]
    return reposition(toks, seq.stream), set(survivors)


def back_translate(
    seq: TokenSequence, translator: Translator
) -> tuple[TokenSequence, set[int]]:
    original = seq.texts
    round_tripped = translator.translate(original)
    kind = TokenKind.WORD if seq.stream is Stream.COMMENT else TokenKind.IDENTIFIER
    toks = [
        Token(text=t, kind=kind, stream=seq.stream, position=i)
        for i, t in enumerate(round_tripped)
    ]
    retained = {i for i, _ in lcs_match(original, round_tripped)}
    return reposition(toks, seq.stream), retained


def _perturb_stream(
    seq: TokenSequence,
    cfg: PerturbationConfig,
    lexicon: SynonymProvider,
    translator: Translator,
    rng: random.Random,
) -> tuple[TokenSequence, set[int]]:
    m = perturbation_count(cfg.alpha, len(seq))
    if cfg.op is AugmentOp.SR:
        return synonym_replace(seq, m, lexicon, rng)
    if cfg.op is AugmentOp.RI:
        return random_insert(seq, m, lexicon, rng)
    if cfg.op is AugmentOp.RS:
        return random_swap(seq, m, rng)
    if cfg.op is AugmentOp.RD:
        return random_delete(seq, cfg.alpha, rng)
    if cfg.op is AugmentOp.BT:
        return back_translate(seq, translator)
    raise InvalidConfigError(f"unknown op {cfg.op!r}")


def sample_rng(seed: int, index: int) -> random.Random:
    """Per-sample RNG derived from (seed, index) only, not draw order."""
    return random.Random(f"{seed}:{index}")


def generate_perturbations(
    program_input,
    cfg: PerturbationConfig,
    lexicon: SynonymProvider | None = None,
    code_lexicon: SynonymProvider | None = None,
    translator: Translator | None = None,
) -> list[PerturbedSample]:
    """Produce cfg.m_dist disturbed variants of one model input.

    Streams whose perturb flag is off pass through untouched with full
    retention. Sample i draws from an RNG keyed on (cfg.seed, i), so the
    output is identical regardless of evaluation order or thread schedule.
    """
    if lexicon is None:
        lexicon = default_lexicon()
    if code_lexicon is None:
        code_lexicon = default_code_lexicon()
    if translator is None:
        translator = StubTranslator(default_phrase_table())

    code, comment = program_input.code, program_input.comment
    samples = []
    for i in range(cfg.m_dist):
        rng = sample_rng(cfg.seed, i)
        try:
            if cfg.perturb_code:
                new_code, code_kept = _perturb_stream(code, cfg, code_lexicon, translator, rng)
            else:
                new_code, code_kept = code, set(range(len(code)))
            if cfg.perturb_comment:
                new_comment, comment_kept = _perturb_stream(comment, cfg, lexicon, translator, rng)
            else:
                new_comment, comment_kept = comment, set(range(len(comment)))
        except PerturbationError:
            raise
        except Exception as exc:
            raise PerturbationError(str(exc), sample_index=i) from exc
        mask = tuple(
            [p in code_kept for p in range(len(code))]
            + [p in comment_kept for p in range(len(comment))]
        )
        samples.append(
            PerturbedSample(index=i, code=new_code, comment=new_comment, retained_mask=mask, op=cfg.op)
        )
    return samples


def _load_bundled(name: str) -> Lexicon:
    return Lexicon.parse(resources.files("cpr.data").joinpath(name).read_text("utf-8"))


_bundles: dict[str, Lexicon] = {}


def default_lexicon() -> Lexicon:
    if "synonyms" not in _bundles:
        _bundles["synonyms"] = _load_bundled("synonyms.tsv")
    return _bundles["synonyms"]


def default_code_lexicon() -> Lexicon:
    if "code" not in _bundles:
        _bundles["code"] = _load_bundled("code_synonyms.tsv")
    return _bundles["code"]


def default_phrase_table() -> Lexicon:
    if "phrases" not in _bundles:
        _bundles["phrases"] = _load_bundled("phrases.tsv")
    return _bundles["phrases"]
