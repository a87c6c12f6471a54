#!/usr/bin/env python3
"""Regenerate the bundled corpus and its frozen metadata.

The corpus is synthetic by design: 40 micro-language bugs split into three
groups relative to the bundled rule-table model:

* fixable: the correct patch is the model's top candidate,
* mis-prioritized: the correct patch sits at rank 2-3 behind a rule that
  patches the wrong occurrence; comment perturbation destabilizes the wrong
  rule's gate word, so reranking promotes the correct patch,
* unfixable: the correct patch never appears among the candidates.

The script validates each group's construction, runs the full evaluation for
every augmentation operator, and freezes the resulting counts into
corpus_meta.json. Run from the repository root:

    python3 scripts/build_corpus.py
"""

import json
import sys
from pathlib import Path

from cpr.augment import AugmentOp, PerturbationConfig, default_lexicon, default_phrase_table
from cpr.causal import EstimatorConfig
from cpr.harness import BugRecord, evaluate_sweep, record_to_input
from cpr.rerank import RerankConfig
from cpr.toy import load_rules, make_toy_model, toy_repair
from cpr.tokens import tokenize_code

DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "cpr" / "data"

FIXABLE = [
    ("fix-001", "java",
     "for ( i = 0 ; i <= n ; i ++ ) sum += a [ i ] ;",
     "the loop bound is exclusive so stop before the final index n",
     "for ( i = 0 ; i < n ; i ++ ) sum += a [ i ] ;"),
    ("fix-002", "java",
     "while ( i < n ) { total = total + b [ i ] ; i ++ ; }",
     "keep iterating while i is inclusive of the upper bound n",
     "while ( i <= n ) { total = total + b [ i ] ; i ++ ; }"),
    ("fix-003", "python",
     "while j >= 0 : j = j - 1",
     "iterate strictly above the lowest index going down",
     "while j > 0 : j = j - 1"),
    ("fix-004", "c",
     "while ( p > end ) p = p - 1 ;",
     "advance the pointer until it reaches the end marker",
     "while ( p >= end ) p = p - 1 ;"),
    ("fix-005", "python",
     "if a == b : flag = 1",
     "branch only when the pair differs not when equal",
     "if a != b : flag = 1"),
    ("fix-006", "javascript",
     "if ( status != 0 ) { retry = retry + 1 ; }",
     "retry exactly when the status code equals the success value",
     "if ( status == 0 ) { retry = retry + 1 ; }"),
    ("fix-007", "java",
     "if ( a && b ) { c = 1 ; }",
     "trigger when either condition holds true",
     "if ( a || b ) { c = 1 ; }"),
    ("fix-008", "c",
     "if ( x || y ) { z = 0 ; }",
     "require both flags set at once",
     "if ( x && y ) { z = 0 ; }"),
    ("fix-009", "java",
     "for ( k = n ; k > 0 ; k ++ ) s = s + a [ k ] ;",
     "the index must decrement toward the start",
     "for ( k = n ; k > 0 ; k -- ) s = s + a [ k ] ;"),
    ("fix-010", "c",
     "while ( m < 100 ) { m -- ; }",
     "the counter should increment upward until the limit",
     "while ( m < 100 ) { m ++ ; }"),
    ("fix-011", "java",
     "for ( i = 0 ; i < cnt ; i ++ ) b [ i ] = a [ i ] ;",
     "copy starts at index one skipping the header row",
     "for ( i = 1 ; i < cnt ; i ++ ) b [ i ] = a [ i ] ;"),
    ("fix-012", "javascript",
     "total = 1 ; for ( i = 0 ; i < n ; i ++ ) total = total + a [ i ] ;",
     "the running sum must start from zero before adding elements",
     "total = 0 ; for ( i = 0 ; i < n ; i ++ ) total = total + a [ i ] ;"),
]

MISPRIORITIZED = [
    ("mis-001", "java",
     "for ( i = 0 ; i <= n ; i ++ ) { if ( a [ i ] <= key ) count ++ ; }",
     "the early loop bound above is correct the defect hides in the tail key comparison",
     "for ( i = 0 ; i <= n ; i ++ ) { if ( a [ i ] < key ) count ++ ; }"),
    ("mis-002", "python",
     "while lo <= hi : mid = lo + hi ; if b [ mid ] <= t : lo = mid + 1",
     "the early while guard is sound the real bug sits at the tail element test",
     "while lo <= hi : mid = lo + hi ; if b [ mid ] < t : lo = mid + 1"),
    ("mis-003", "c",
     "if ( size <= cap && used <= cap ) { grow = 0 ; }",
     "the early size guard checks out the tail usage comparison is broken",
     "if ( size <= cap && used < cap ) { grow = 0 ; }"),
    ("mis-004", "java",
     "while ( i >= 0 && b [ i ] >= pivot ) { i -- ; steps = steps + 1 ; }",
     "the former bound test is valid the latter pivot comparison overshoots",
     "while ( i >= 0 && b [ i ] > pivot ) { i -- ; steps = steps + 1 ; }"),
    ("mis-005", "c",
     "for ( k = n ; k >= 0 ; k -- ) { if ( w [ k ] >= limit ) c = c + 1 ; }",
     "the former loop condition is fine the latter weight check misses",
     "for ( k = n ; k >= 0 ; k -- ) { if ( w [ k ] > limit ) c = c + 1 ; }"),
    ("mis-006", "javascript",
     "if ( state == 0 || mode == final ) { done = 1 ; }",
     "the first state test is already right look at the second mode comparison",
     "if ( state == 0 || mode != final ) { done = 1 ; }"),
    ("mis-007", "python",
     "if u == v : match = 1 ; if p == q : match = 0",
     "the first identity check passes the issue lives in the second equality test",
     "if u == v : match = 1 ; if p != q : match = 0"),
]

UNFIXABLE = [
    ("hard-001", "java",
     "return a / b ;",
     "guard against division when b is empty",
     "if ( b != 0 ) return a / b ; return 0 ;"),
    ("hard-002", "python",
     "return values [ 0 ]",
     "return the maximum element of the list",
     "return max ( values )"),
    ("hard-003", "c",
     "write ( dst , src ) ;",
     "copy from source into destination buffer",
     "write ( src , dst ) ;"),
    ("hard-004", "javascript",
     "return items . length - 1 ;",
     "length lookup must not subtract when list is empty",
     "return items . length ;"),
    ("hard-005", "java",
     "cache . put ( key ) ;",
     "store the value alongside its key in the map",
     "cache . put ( key , value ) ;"),
    ("hard-006", "python",
     "if fast : speed = speed * 2",
     "double the speed only when fast mode is large",
     "if fast_mode : speed = speed * 2"),
    ("hard-007", "c",
     "free ( buf ) ; use ( buf ) ;",
     "use after free must be reordered",
     "use ( buf ) ; free ( buf ) ;"),
    ("hard-008", "javascript",
     "callback ( ) ;",
     "invoke the callback with the first argument",
     "callback ( arg ) ;"),
    ("hard-009", "java",
     "int mid = ( lo + hi ) / 2 ;",
     "midpoint computation overflows for large bounds",
     "int mid = lo + ( hi - lo ) / 2 ;"),
    ("hard-010", "python",
     "return sorted ( xs ) [ 0 ]",
     "want the greatest element not the smallest",
     "return sorted ( xs ) [ - 1 ]"),
    ("hard-011", "c",
     "strcpy ( dst , src ) ;",
     "bounded copy needed to stop overflow",
     "strncpy ( dst , src , n ) ;"),
    ("hard-012", "javascript",
     "x = x | mask ;",
     "clear the mask bits instead of setting",
     "x = x & ~ mask ;"),
    ("hard-013", "java",
     "list . add ( item ) ;",
     "insert at the head not the back of the list",
     "list . add ( 0 , item ) ;"),
    ("hard-014", "python",
     "while n != 1 : n = n // 2",
     "loop until the counter is exhausted",
     "while n > 1 : n = n // 2"),
    ("hard-015", "c",
     "return head -> next -> val ;",
     "crashes when the next node is missing",
     "if ( head -> next ) return head -> next -> val ; return 0 ;"),
    ("hard-016", "javascript",
     "total = total + price ;",
     "apply the greater than zero discount first",
     "total = total + price * discount ;"),
    ("hard-017", "java",
     "return s . substring ( 1 ) ;",
     "drop the last character not the leading one",
     "return s . substring ( 0 , s . length ( ) - 1 ) ;"),
    ("hard-018", "python",
     "result = a or b",
     "need conjunction across the pair of flags",
     "result = a and b"),
    ("hard-019", "c",
     "for ( i = 0 ; i < n ; ++ i ) ;",
     "the loop body got swallowed by the stray semicolon",
     "for ( i = 0 ; i < n ; ++ i ) work ( i ) ;"),
    ("hard-020", "javascript",
     "if ( val = target ) { hit = hit + 1 ; }",
     "assignment in the condition should compare instead",
     "if ( val === target ) { hit = hit + 1 ; }"),
    ("hard-021", "java",
     "throw new Error ( ) ;",
     "wrap the failure with the original cause",
     "throw new Error ( cause ) ;"),
]


def records():
    return [BugRecord(*row) for rows in (FIXABLE, MISPRIORITIZED, UNFIXABLE) for row in rows]


def candidate_rank(record):
    out = toy_repair(record_to_input(record))
    fixed = tokenize_code(record.fixed, record.language).texts
    for rank, cand in enumerate(out.candidates, start=1):
        if cand.texts == fixed:
            return rank
    return None


def check_construction():
    """Fail loudly if any record drifted from its group's contract."""
    lexicon = default_lexicon()
    phrases = default_phrase_table()
    problems = []
    for row in FIXABLE:
        record = BugRecord(*row)
        if candidate_rank(record) != 1:
            problems.append(f"{record.id}: correct patch is not the top candidate")
    for row in MISPRIORITIZED:
        record = BugRecord(*row)
        rank = candidate_rank(record)
        if rank not in (2, 3):
            problems.append(f"{record.id}: correct patch at rank {rank}, expected 2-3")
        comment_words = record.comment.split()
        covered = [w for w in comment_words if lexicon.synonyms(w)]
        if len(set(covered)) != 1:
            problems.append(f"{record.id}: expected exactly one lexicon word, got {covered}")
        if covered and not phrases.synonyms(covered[0]):
            problems.append(f"{record.id}: gate word {covered[0]!r} missing from phrase table")
        if len(comment_words) < 10:
            problems.append(f"{record.id}: comment too short for alpha=0.1 to bite")
    for row in UNFIXABLE:
        record = BugRecord(*row)
        if candidate_rank(record) is not None:
            problems.append(f"{record.id}: correct patch unexpectedly reachable")
    if problems:
        for p in problems:
            print("CONSTRUCTION ERROR:", p, file=sys.stderr)
        sys.exit(1)


def main():
    check_construction()
    corpus = records()
    assert len(corpus) == 40, f"corpus must hold 40 records, got {len(corpus)}"
    assert len({r.id for r in corpus}) == 40

    corpus_path = DATA_DIR / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for r in corpus:
            fh.write(json.dumps(
                {"id": r.id, "language": r.language, "buggy": r.buggy,
                 "comment": r.comment, "fixed": r.fixed},
                ensure_ascii=False) + "\n")
    print(f"wrote {corpus_path}")

    pcfg = PerturbationConfig()
    model = make_toy_model()
    reports = evaluate_sweep(
        corpus, model, pcfg, EstimatorConfig(), RerankConfig(), corpus_name="bundled"
    )
    sweep = {}
    for rep in reports:
        sweep[rep.op] = {"fixed_baseline": rep.fixed_baseline, "fixed_with_ci": rep.fixed_with_ci}
        print(f"{rep.op}: {rep.fixed_baseline} -> {rep.fixed_with_ci}")

    sr = sweep[AugmentOp.SR.value]
    bt = sweep[AugmentOp.BT.value]
    for op in (AugmentOp.RI, AugmentOp.RS, AugmentOp.RD):
        row = sweep[op.value]
        assert sr["fixed_with_ci"] >= row["fixed_with_ci"], f"SR must dominate {op.value}"
        assert bt["fixed_with_ci"] >= row["fixed_with_ci"], f"BT must dominate {op.value}"
    assert sr["fixed_with_ci"] > sr["fixed_baseline"], "reranking must add fixes under SR"

    version, _ = load_rules()
    meta = {
        "corpus_version": 1,
        "toy_rules_version": version,
        "bug_count": len(corpus),
        "fixed_baseline": sr["fixed_baseline"],
        "fixed_with_ci": sr["fixed_with_ci"],
        "sweep": sweep,
        "misprioritized_ids": [row[0] for row in MISPRIORITIZED],
        "defaults": {
            "alpha": pcfg.alpha,
            "m_dist": pcfg.m_dist,
            "op": pcfg.op.value,
            "seed": pcfg.seed,
            "perturb_code": pcfg.perturb_code,
            "perturb_comment": pcfg.perturb_comment,
            "estimator": "logistic",
            "lambda_mix": 0.5,
            "delta": 1.0,
            "beam": 5,
        },
    }
    meta_path = DATA_DIR / "corpus_meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"wrote {meta_path}")


if __name__ == "__main__":
    main()
