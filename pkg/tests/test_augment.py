import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpr.adapter import ProgramInput
from cpr.augment import (
    AugmentOp,
    Lexicon,
    PerturbationConfig,
    StubTranslator,
    back_translate,
    generate_perturbations,
    perturbation_count,
    random_delete,
    random_insert,
    random_swap,
    sample_rng,
    synonym_replace,
)
from cpr.errors import InvalidConfigError
from cpr.tokens import Stream, TokenKind, tokenize_code, tokenize_comment


def comment(text, stopwords=frozenset({"the"})):
    return tokenize_comment(text, set(stopwords))


def test_perturbation_count_examples():
    assert perturbation_count(0.0, 25) == 0
    assert perturbation_count(0.5, 7) == 3
    assert perturbation_count(1.0, 9) == 9


def test_perturbation_count_bounds_and_monotonicity():
    rng = random.Random(11)
    prev = 0
    for _ in range(200):
        alpha = rng.random()
        l = rng.randrange(0, 200)
        m = perturbation_count(alpha, l)
        assert 0 <= m <= l
        assert m == int(alpha * l)
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        counts = [perturbation_count(alpha, l) for l in range(50)]
        assert counts == sorted(counts)


def test_perturbation_count_rejects_bad_alpha():
    with pytest.raises(InvalidConfigError):
        perturbation_count(1.5, 10)
    with pytest.raises(InvalidConfigError):
        PerturbationConfig(alpha=-0.1)


def test_sr_zero_is_identity():
    seq = comment("replace the large value")
    lex = Lexicon({"large": ["big"]})
    out, retained = synonym_replace(seq, 0, lex, random.Random(0))
    assert out.texts == seq.texts
    assert retained == set(range(len(seq)))


def test_sr_forced_single_replacement():
    seq = comment("large the value")
    lex = Lexicon({"large": ["big"]})
    out, retained = synonym_replace(seq, 1, lex, random.Random(3))
    assert out.texts == ["big", "the", "value"]
    assert retained == {1, 2}


def test_sr_never_replaces_stopwords_or_uncovered():
    lex = Lexicon({"large": ["big"], "fast": ["quick"], "the": ["a"]})
    seq = comment("the large dog is fast", {"the", "is"})
    for trial in range(200):
        out, retained = synonym_replace(seq, 5, lex, random.Random(trial))
        # 'the' and 'is' untouched even though 'the' has lexicon coverage.
        assert out.texts[0] == "the"
        assert out.texts[3] == "is"
        assert out.texts[2] == "dog"
        for pos in retained:
            assert out.texts[pos] == seq.texts[pos]


def test_sr_uniform_position_frequency():
    # 10 eligible tokens, m=2: sampling without replacement touches each
    # position with probability exactly 2/10.
    words = [f"w{i}" for i in range(10)]
    lex = Lexicon({w: [w + "x"] for w in words})
    seq = comment(" ".join(words), set())
    runs = 10_000
    hits = Counter()
    for trial in range(runs):
        out, retained = synonym_replace(seq, 2, lex, random.Random(trial))
        for pos in range(10):
            if pos not in retained:
                hits[pos] += 1
    for pos in range(10):
        assert abs(hits[pos] / runs - 0.2) < 0.02


def test_ri_zero_and_empty():
    lex = Lexicon({"fast": ["quick"]})
    seq = comment("fast car")
    out, retained = random_insert(seq, 0, lex, random.Random(0))
    assert out.texts == seq.texts and retained == {0, 1}
    empty = comment("")
    out, retained = random_insert(empty, 5, lex, random.Random(0))
    assert out.texts == [] and retained == set()


def test_ri_two_slot_distribution():
    lex = Lexicon({"fast": ["quick"]})
    seq = comment("fast")
    seen = Counter()
    runs = 4000
    for trial in range(runs):
        out, retained = random_insert(seq, 1, lex, random.Random(trial))
        assert retained == {0}
        seen[tuple(out.texts)] += 1
    assert set(seen) == {("quick", "fast"), ("fast", "quick")}
    assert abs(seen[("quick", "fast")] / runs - 0.5) < 0.03


def test_ri_length_growth_bounded():
    lex = Lexicon({"a": ["b"]})
    seq = comment("a a a a")
    for m in range(4):
        out, _ = random_insert(seq, m, lex, random.Random(m))
        assert len(seq) <= len(out) <= len(seq) + m


def test_rs_trivial_cases():
    seq = comment("only")
    out, retained = random_swap(seq, 5, random.Random(0))
    assert out.texts == ["only"] and retained == {0}
    pair = comment("a b", set())
    out, _ = random_swap(pair, 1, random.Random(0))
    assert out.texts == ["b", "a"]


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.sampled_from("abcdef"), min_size=0, max_size=12),
    st.integers(min_value=0, max_value=8),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_rs_preserves_multiset(words, m, seed):
    seq = comment(" ".join(words), set())
    out, retained = random_swap(seq, m, random.Random(seed))
    assert Counter(out.texts) == Counter(seq.texts)
    assert retained == set(range(len(seq)))


def test_rd_trivial_cases():
    seq = comment("a b c", set())
    out, retained = random_delete(seq, 0.0, random.Random(0))
    assert out.texts == ["a", "b", "c"] and retained == {0, 1, 2}
    out, retained = random_delete(seq, 1.0, random.Random(0))
    assert len(out) == 1 and len(retained) == 1


def test_rd_survival_mean():
    # Binomial(20, 0.7): mean survivors 14.0; keep-one correction is
    # negligible at this length.
    seq = comment(" ".join(f"w{i}" for i in range(20)), set())
    runs = 10_000
    total = 0
    for trial in range(runs):
        out, _ = random_delete(seq, 0.3, random.Random(trial))
        total += len(out)
    assert abs(total / runs - 14.0) < 0.15


def test_bt_identity_with_empty_table():
    seq = comment("returns the maximum value", set())
    out, retained = back_translate(seq, StubTranslator(Lexicon({})))
    assert out.texts == seq.texts
    assert retained == {0, 1, 2, 3}


def test_bt_phrase_substitution():
    seq = comment("returns maximum value", set())
    out, retained = back_translate(seq, StubTranslator(Lexicon({"maximum": ["largest"]})))
    assert out.texts == ["returns", "largest", "value"]
    assert retained == {0, 2}


def test_bt_multiword_phrase():
    seq = comment("is greater than zero", set())
    out, _ = back_translate(seq, StubTranslator(Lexicon({"greater than": ["above"]})))
    assert out.texts == ["is", "above", "zero"]


def program_input():
    return ProgramInput(
        code=tokenize_code("if ( a <= b ) c = 1 ;"),
        comment=tokenize_comment("take the branch when a is large or fast", {"the", "is", "or"}),
    )


def test_generate_identity_when_alpha_zero():
    cfg = PerturbationConfig(alpha=0.0, m_dist=1, op=AugmentOp.SR, seed=9)
    samples = generate_perturbations(program_input(), cfg)
    assert len(samples) == 1
    s = samples[0]
    assert s.code.texts == program_input().code.texts
    assert s.comment.texts == program_input().comment.texts
    assert all(s.retained_mask)


def test_generate_deterministic():
    cfg = PerturbationConfig(alpha=0.3, m_dist=25, op=AugmentOp.SR, seed=42)
    a = generate_perturbations(program_input(), cfg)
    b = generate_perturbations(program_input(), cfg)
    assert a == b


def test_generate_seed_changes_output():
    one = generate_perturbations(program_input(), PerturbationConfig(alpha=0.3, m_dist=25, seed=1))
    two = generate_perturbations(program_input(), PerturbationConfig(alpha=0.3, m_dist=25, seed=2))
    assert one != two


def test_generate_rd_mean_retention():
    # 30 comment tokens, p=0.1: expected retained count is 27.
    pi = ProgramInput(
        code=tokenize_code("x = 1 ;"),
        comment=tokenize_comment(" ".join(f"word{i}" for i in range(30)), set()),
    )
    cfg = PerturbationConfig(alpha=0.1, m_dist=100, op=AugmentOp.RD, seed=5)
    samples = generate_perturbations(pi, cfg)
    assert len(samples) == 100
    n_code = len(pi.code)
    mean_kept = sum(sum(s.retained_mask[n_code:]) for s in samples) / len(samples)
    assert abs(mean_kept - 27.0) < 0.6


def test_generate_code_stream_untouched_by_default():
    cfg = PerturbationConfig(alpha=0.5, m_dist=20, op=AugmentOp.RD, seed=3)
    pi = program_input()
    for s in generate_perturbations(pi, cfg):
        assert s.code.texts == pi.code.texts
        assert all(s.retained_mask[: len(pi.code)])


def test_generate_rs_mask_all_true():
    cfg = PerturbationConfig(alpha=1.0, m_dist=10, op=AugmentOp.RS, seed=3)
    for s in generate_perturbations(program_input(), cfg):
        assert all(s.retained_mask)


def test_retained_tokens_present_in_output():
    pi = program_input()
    for op in AugmentOp:
        cfg = PerturbationConfig(alpha=0.4, m_dist=15, op=op, seed=13)
        for s in generate_perturbations(pi, cfg):
            texts = pi.code.texts + pi.comment.texts
            out_texts = set(s.code.texts) | set(s.comment.texts)
            for pos, kept in enumerate(s.retained_mask):
                if kept:
                    assert texts[pos] in out_texts


def test_sample_rng_is_order_free():
    a = sample_rng(7, 3).random()
    _ = sample_rng(7, 0).random()
    b = sample_rng(7, 3).random()
    assert a == b


def test_config_validation():
    with pytest.raises(InvalidConfigError):
        PerturbationConfig(m_dist=0)
    with pytest.raises(InvalidConfigError):
        PerturbationConfig(perturb_code=False, perturb_comment=False)


def test_translator_failure_carries_sample_index():
    from cpr.errors import PerturbationError

    class Exploding:
        def translate(self, texts):
            raise RuntimeError("backend unavailable")

    cfg = PerturbationConfig(m_dist=3, op=AugmentOp.BT, seed=0)
    with pytest.raises(PerturbationError) as err:
        generate_perturbations(program_input(), cfg, translator=Exploding())
    assert err.value.sample_index == 0
    assert "backend unavailable" in str(err.value)
