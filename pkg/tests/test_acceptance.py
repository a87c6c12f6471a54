"""Acceptance gate: one test per release criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines alongside pytest's own verdicts.
"""

import itertools
import json
import os
import random
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

from cpr.adapter import InProcessModel, ProgramInput, query, query_batch
from cpr.augment import (
    AugmentOp,
    Lexicon,
    PerturbationConfig,
    default_lexicon,
    generate_perturbations,
    perturbation_count,
    random_delete,
    random_swap,
    synonym_replace,
)
from cpr.causal import EstimatorConfig, build_design_matrix, estimate_dependencies, logistic_fit, pmi_score, _loss_grad
from cpr.graphs import build_bipartite, kmeans, normalized_adjacency, select_explanation, spectral_coclusters, default_cluster_count
from cpr.harness import bundled_corpus_meta, bundled_corpus_path, evaluate, evaluate_sweep, load_corpus
from cpr.rerank import RerankConfig
from cpr.tokens import TokenKind, default_stopwords, tokenize_code, tokenize_comment
from cpr.toy import make_copy_model, make_toy_model

from test_graphs import adjusted_rand_index, graph_from_matrix, random_connected_graph


def report(name, started):
    print(f"\nACCEPTANCE {name}: PASS ({time.monotonic() - started:.1f}s)")


def test_perturbation_suite():
    started = time.monotonic()

    # floor(alpha * l) on 1,000 random pairs.
    rng = random.Random(101)
    for _ in range(1000):
        alpha = rng.random()
        l = rng.randrange(0, 500)
        assert perturbation_count(alpha, l) == int(alpha * l)

    # RS preserves token multisets: 10,000 cases.
    case_rng = random.Random(7)
    for trial in range(10_000):
        length = case_rng.randrange(0, 12)
        words = [case_rng.choice("abcdef") for _ in range(length)]
        seq = tokenize_comment(" ".join(words), set())
        out, _ = random_swap(seq, case_rng.randrange(0, 5), random.Random(trial))
        assert Counter(out.texts) == Counter(seq.texts)

    # RD empirical survival rate within +/-2% of 1-p at N=10,000 draws.
    seq = tokenize_comment(" ".join(f"w{i}" for i in range(25)), set())
    for p in (0.1, 0.3, 0.5):
        kept = total = 0
        for trial in range(10_000):
            out, retained = random_delete(seq, p, random.Random((p, trial).__repr__()))
            kept += len(retained)
            total += len(seq)
        assert abs(kept / total - (1.0 - p)) < 0.02, p

    # SR never replaces stopwords: exhaustive over bundled-lexicon sentences.
    lexicon = default_lexicon()
    stopwords = default_stopwords()
    sentences = [r.comment for r in load_corpus(bundled_corpus_path())]
    sentences += [f"the {w} is large and {w} again" for w in lexicon.table]
    for sentence in sentences:
        seq = tokenize_comment(sentence)
        for trial in range(30):
            out, retained = synonym_replace(seq, len(seq), lexicon, random.Random(trial))
            for pos, tok in enumerate(seq.tokens):
                if tok.kind is TokenKind.STOPWORD:
                    assert pos in retained and out.texts[pos] == tok.text

    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"perturbation suite took {elapsed:.1f}s"
    report("perturbation-suite", started)


def test_estimator_oracle():
    started = time.monotonic()

    for n, planted in [(4, 1), (6, 3), (8, 5), (10, 7)]:
        # Enumerate every mask once: the design is the full 2^n cube.
        X = np.array(list(itertools.product([0.0, 1.0], repeat=n)))
        noise = np.random.default_rng(n).integers(0, 2, size=(len(X), 2)).astype(float)
        y_cols = {0: noise[:, 0], 1: X[:, planted].copy(), 2: noise[:, 1]}

        # Brute-force conditional-probability oracle over all masks.
        def lift(xcol, y):
            return y[xcol == 1].mean() - y[xcol == 0].mean()

        oracle = np.array([[lift(X[:, i], y_cols[j]) for j in range(3)] for i in range(n)])
        oi, oj = np.unravel_index(np.argmax(oracle), oracle.shape)
        assert (oi, oj) == (planted, 1)

        W_log = np.zeros((n, 3))
        W_pmi = np.zeros((n, 3))
        for j in range(3):
            fit = logistic_fit(X, y_cols[j], lam=1e-3)
            W_log[:, j] = fit.weights
            assert all(b <= a + 1e-12 for a, b in zip(fit.losses, fit.losses[1:]))
            W_pmi[:, j] = pmi_score(X, y_cols[j])
        for W in (W_log, W_pmi):
            i_star, j_star = np.unravel_index(np.argmax(W), W.shape)
            assert (i_star, j_star) == (planted, 1)

    # Gradient vs central finite differences at the returned point.
    X = np.array(list(itertools.product([0.0, 1.0], repeat=6)))
    y = X[:, 2].copy()
    fit = logistic_fit(X, y, lam=1e-3)
    w, b, lam, h = fit.weights, fit.bias, 1e-3, 1e-5
    _, gw, gb = _loss_grad(X, y, w, b, lam)
    fd = np.zeros_like(gw)
    for i in range(len(w)):
        e = np.zeros_like(w)
        e[i] = h
        fd[i] = (_loss_grad(X, y, w + e, b, lam)[0] - _loss_grad(X, y, w - e, b, lam)[0]) / (2 * h)
    fd_b = (_loss_grad(X, y, w, b + h, lam)[0] - _loss_grad(X, y, w, b - h, lam)[0]) / (2 * h)
    scale = max(1.0, float(np.max(np.abs(gw))), abs(gb))
    assert float(np.max(np.abs(fd - gw))) / scale <= 1e-4
    assert abs(fd_b - gb) / scale <= 1e-4

    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"estimator oracle took {elapsed:.1f}s"
    report("estimator-oracle", started)


def test_spectral_suite():
    started = time.monotonic()

    rng = np.random.default_rng(2024)
    for _ in range(100):
        g = random_connected_graph(rng)
        An, _, _ = normalized_adjacency(g)
        U, sigma, Vt = np.linalg.svd(An, full_matrices=False)
        assert abs(sigma[0] - 1.0) <= 1e-8
        for t in range(len(sigma)):
            assert np.max(np.abs(An @ Vt[t] - sigma[t] * U[:, t])) <= 1e-8

    for blocks in (2, 3, 4):
        size = 5
        n = blocks * size
        A = np.full((n, n), 0.01)
        labels = []
        for b in range(blocks):
            sl = slice(b * size, (b + 1) * size)
            A[sl, sl] = 1.0
            labels.extend([b] * size)
        cc = spectral_coclusters(graph_from_matrix(A), blocks, seed=1)
        got = list(cc.row_assign) + list(cc.col_assign)
        assert adjusted_rand_index(got, labels + labels) == 1.0, blocks

    pts = np.random.default_rng(5).random((80, 3))
    trace = []
    kmeans(pts, 6, seed=3, trace=trace)
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))

    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"spectral suite took {elapsed:.1f}s"
    report("spectral-suite", started)


def test_copy_model_end_to_end():
    started = time.monotonic()

    code = tokenize_code("alpha beta gamma delta epsilon zeta eta theta")
    comment = tokenize_comment("copied verbatim through the black box")
    pi = ProgramInput(code=code, comment=comment)
    cfg = PerturbationConfig(
        alpha=0.3, m_dist=200, op=AugmentOp.RD, seed=11,
        perturb_code=True, perturb_comment=False,
    )
    model = make_copy_model()
    samples = generate_perturbations(pi, cfg)
    outputs = query_batch(model, [ProgramInput(code=s.code, comment=s.comment) for s in samples])
    dm = build_design_matrix(pi, samples, outputs, query(model, pi))
    dep = estimate_dependencies(dm, EstimatorConfig())
    for i, text in enumerate(code.texts):
        j = int(np.argmax(dep.W[i, :]))
        assert dep.output_vocab[j] == text, text

    graph = build_bipartite(dep, tau=0.75)
    cc = spectral_coclusters(graph, default_cluster_count(graph), seed=11)
    explanation = select_explanation(cc, graph, K=1)
    same_text = [
        (a, b) for a, b, _ in explanation.edges
        if explanation.nodes[a][0] == explanation.nodes[b][0]
    ]
    assert same_text

    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"copy-model check took {elapsed:.1f}s"
    report("copy-model-end-to-end", started)


def test_directional_shape():
    # Reranking must help on the bundled corpus by construction; this is a
    # mechanism reconstruction at desk scale, not a reproduction of any
    # published benchmark numbers.
    started = time.monotonic()

    corpus = load_corpus(bundled_corpus_path())
    meta = bundled_corpus_meta()
    model = make_toy_model()
    report_default = evaluate(
        corpus, model, PerturbationConfig(), EstimatorConfig(), RerankConfig(),
        corpus_name="bundled",
    )
    assert report_default.fixed_baseline == meta["fixed_baseline"]
    assert report_default.fixed_with_ci == meta["fixed_with_ci"]
    assert report_default.fixed_with_ci > report_default.fixed_baseline

    report_identity = evaluate(
        corpus, make_toy_model(), PerturbationConfig(), EstimatorConfig(),
        RerankConfig(lambda_mix=0.0), corpus_name="bundled",
    )
    assert report_identity.fixed_with_ci == report_identity.fixed_baseline

    # Every mis-prioritized bug moves from rank 2-3 to rank 1.
    ranks = {o.id: o for o in report_default.per_bug}
    for bug_id in meta["misprioritized_ids"]:
        assert ranks[bug_id].baseline_rank in (2, 3)
        assert ranks[bug_id].rerank_rank == 1

    elapsed = time.monotonic() - started
    assert elapsed < 120.0, f"directional check took {elapsed:.1f}s"
    report("directional-table-shape", started)


def test_sweep_shape(tmp_path):
    started = time.monotonic()

    report_path = tmp_path / "sweep.json"
    env = dict(os.environ)
    env["CPR_SEED"] = "0"
    proc = subprocess.run(
        [sys.executable, "-m", "cpr.cli", "eval",
         "--corpus", str(bundled_corpus_path()), "--model", "toy",
         "--sweep-ops", "--report", str(report_path)],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(report_path.read_text("utf-8"))
    rows = {row["op"]: row for row in doc["rows"]}
    assert list(rows) == ["SR", "RI", "RS", "RD", "BT"]

    meta = bundled_corpus_meta()
    for op, row in rows.items():
        assert row["fixed_baseline"] == meta["sweep"][op]["fixed_baseline"], op
        assert row["fixed_with_ci"] == meta["sweep"][op]["fixed_with_ci"], op
    for weak in ("RI", "RS", "RD"):
        assert rows["SR"]["fixed_with_ci"] >= rows[weak]["fixed_with_ci"]
        assert rows["BT"]["fixed_with_ci"] >= rows[weak]["fixed_with_ci"]

    elapsed = time.monotonic() - started
    assert elapsed < 600.0, f"sweep took {elapsed:.1f}s"
    report("augmentation-sweep-shape", started)


def test_determinism(tmp_path):
    started = time.monotonic()

    env = dict(os.environ)
    env["CPR_SEED"] = "2718"
    paths = []
    for tag in ("one", "two"):
        report_path = tmp_path / f"{tag}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "cpr.cli", "eval",
             "--corpus", str(bundled_corpus_path()), "--model", "toy",
             "--report", str(report_path)],
            capture_output=True, text=True, env=env,
        )
        assert proc.returncode == 0, proc.stderr
        paths.append(report_path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    report("determinism", started)
