import pytest

from cpr.adapter import (
    InProcessModel,
    ProgramInput,
    RepairOutput,
    ResponseCache,
    query,
    query_batch,
)
from cpr.errors import QueryError
from cpr.tokens import Stream, TokenSequence, tokenize_code, tokenize_comment
from cpr.toy import make_copy_model, make_toy_model, toy_repair


def make_input(code="for ( i = 0 ; i <= n ; i ++ )", comment="loop is exclusive of n"):
    return ProgramInput(code=tokenize_code(code), comment=tokenize_comment(comment))


def test_program_input_validation():
    with pytest.raises(ValueError):
        ProgramInput(code=tokenize_code(""), comment=tokenize_comment(""))
    with pytest.raises(ValueError):
        ProgramInput(code=tokenize_comment("x"), comment=tokenize_comment("x"))
    # Comment-only input is allowed.
    ProgramInput(code=tokenize_code(""), comment=tokenize_comment("hello"))


def test_repair_output_sorts_dedupes_truncates():
    raw = [
        (["a"], -2.0),
        (["b"], -1.0),
        (["a"], -3.0),
        (["c"], -1.5),
        (["d"], -4.0),
    ]
    out = RepairOutput.from_raw(raw, beam=3)
    assert [c.texts for c in out.candidates] == [["b"], ["c"], ["a"]]
    assert out.top.model_score == -1.0


def test_repair_output_stable_ties():
    out = RepairOutput.from_raw([(["x"], -1.0), (["y"], -1.0)], beam=5)
    assert [c.texts for c in out.candidates] == [["x"], ["y"]]


def test_repair_output_rejects_bad_candidates():
    with pytest.raises(QueryError):
        RepairOutput.from_raw([([], 0.0)], beam=5)
    with pytest.raises(QueryError):
        RepairOutput.from_raw([(["a"], float("nan"))], beam=5)
    with pytest.raises(QueryError):
        RepairOutput.from_raw([], beam=5)


def test_toy_exclusive_rule():
    out = toy_repair(make_input())
    assert out.top.texts == tokenize_code("for ( i = 0 ; i < n ; i ++ )").texts


def test_toy_identity_fallback():
    pi = make_input(code="return x ;", comment="nothing matches here")
    out = toy_repair(pi)
    assert len(out.candidates) == 1
    assert out.top.texts == pi.code.texts


def test_toy_gate_requires_comment_keyword():
    pi = make_input(comment="plain loop with no hints")
    out = toy_repair(pi)
    # Without the gate the strict-bound rule must not fire.
    assert all("<" != c.texts[6] for c in out.candidates)


def test_query_caches_transport_calls():
    model = make_toy_model()
    pi = make_input()
    first = query(model, pi, beam=5)
    second = query(model, pi, beam=5)
    assert first == second
    assert model.calls == 1


def test_query_beam_is_part_of_cache_key():
    model = make_toy_model()
    pi = make_input()
    query(model, pi, beam=5)
    out = query(model, pi, beam=1)
    assert model.calls == 2
    assert len(out.candidates) == 1


def test_query_batch_matches_single_queries():
    model = make_toy_model()
    pi = make_input()
    single = query(model, pi, beam=5)
    batch = query_batch(make_toy_model(), [pi], beam=5)
    assert batch == [single]


def test_query_batch_duplicates_hit_cache():
    model = make_toy_model()
    pi = make_input()
    results = query_batch(model, [pi, pi, pi], beam=5)
    assert results[0] == results[1] == results[2]
    assert model.calls == 1


def test_query_batch_reports_errors_positionally():
    def flaky(code_tokens, comment_tokens, beam):
        if code_tokens[0] == "boom":
            raise QueryError("synthetic failure")
        return [(list(code_tokens), 0.0)]

    model = InProcessModel(flaky, name="flaky")
    good = make_input(code="x ;")
    bad = make_input(code="boom ;")
    results = query_batch(model, [good, bad, good], beam=5)
    assert isinstance(results[0], RepairOutput)
    assert isinstance(results[1], QueryError)
    assert isinstance(results[2], RepairOutput)


def test_copy_model_echoes_code():
    pi = make_input(code="alpha beta gamma")
    out = query(make_copy_model(), pi)
    assert out.top.texts == ["alpha", "beta", "gamma"]


def test_disk_spill_round_trip(tmp_path):
    cache = ResponseCache(spill_dir=tmp_path)
    model = make_toy_model(cache=cache)
    pi = make_input()
    out = query(model, pi, beam=5)
    assert len(list(tmp_path.glob("*.json"))) == 1
    # A fresh cache over the same directory serves the spilled entry.
    model2 = make_toy_model(cache=ResponseCache(spill_dir=tmp_path))
    out2 = query(model2, pi, beam=5)
    assert out2 == out
    assert model2.calls == 0


def test_batch_of_many_perturbed_inputs():
    from cpr.augment import PerturbationConfig, generate_perturbations

    model = make_toy_model()
    pi = make_input(
        comment="the loop bound is exclusive so stop before the final index n"
    )
    samples = generate_perturbations(pi, PerturbationConfig(m_dist=100, seed=1))
    inputs = [ProgramInput(code=s.code, comment=s.comment) for s in samples]
    outputs = query_batch(model, inputs, beam=5)
    assert len(outputs) == 100
    assert all(isinstance(o, RepairOutput) for o in outputs)
