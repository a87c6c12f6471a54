"""Command-line interface: explain, eval, perturb, and rerank subcommands."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .adapter import HttpModel, InProcessModel, ModelHandle, SubprocessModel, query
from .augment import AugmentOp, PerturbationConfig, generate_perturbations
from .causal import EstimatorConfig
from .errors import CprError, InvalidConfigError, NumericalError, QueryError
from .graphs import bipartite_to_dot, bipartite_to_json_dict, dump_json, explanation_to_dot
from .harness import (
    DEFAULT_BEAM,
    analyze_bug,
    evaluate,
    evaluate_sweep,
    explain_bug,
    load_corpus,
    record_to_input,
)
from .rerank import RerankConfig
from .toy import make_copy_model, make_toy_model

EXIT_VALIDATION = 1
EXIT_TRANSPORT = 2
EXIT_NUMERICAL = 3


def resolve_model(spec: str) -> ModelHandle:
    if spec == "toy":
        return make_toy_model()
    if spec == "copy":
        return make_copy_model()
    if spec.startswith("cmd:"):
        return SubprocessModel(spec[len("cmd:"):].split())
    if spec.startswith("http:") or spec.startswith("https:"):
        return HttpModel(spec)
    raise InvalidConfigError(f"unknown model spec {spec!r} (use toy, copy, cmd:..., or http://...)")


def resolve_seed(value: int) -> int:
    env = os.environ.get("CPR_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise InvalidConfigError(f"CPR_SEED must be an integer, got {env!r}") from None
    return value


def find_bug(records, bug_id: str):
    for r in records:
        if r.id == bug_id:
            return r
    raise InvalidConfigError(f"bug id {bug_id!r} not found in corpus")


def add_common(parser):
    parser.add_argument("--corpus", required=True, help="JSON Lines corpus path")
    parser.add_argument("--op", default="SR", choices=[o.value for o in AugmentOp])
    parser.add_argument("--alpha", type=float, default=0.1)
    parser.add_argument("--mdist", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--perturb-code", action="store_true")
    parser.add_argument(
        "--no-perturb-comment", dest="perturb_comment", action="store_false", default=True
    )


def perturb_config(args) -> PerturbationConfig:
    return PerturbationConfig(
        alpha=args.alpha,
        m_dist=args.mdist,
        op=AugmentOp(args.op),
        seed=resolve_seed(args.seed),
        perturb_code=args.perturb_code,
        perturb_comment=args.perturb_comment,
    )


def cmd_explain(args) -> int:
    records = load_corpus(args.corpus)
    record = find_bug(records, args.bug)
    with resolve_model(args.model) as model:
        explanation, pre_graph, dep = explain_bug(
            record,
            model,
            perturb_config(args),
            EstimatorConfig(method=args.estimator),
            K=args.select,
            k=args.k,
            tau=args.tau,
        )
    out = Path(args.out)
    if out.suffix == ".dot":
        out.write_text(explanation_to_dot(explanation), "utf-8")
    elif out.suffix == ".json":
        doc = explanation.to_json_dict()
        doc["dependencies"] = dep.to_json_dict()
        out.write_text(dump_json(doc), "utf-8")
    else:
        raise InvalidConfigError(f"--out must end in .dot or .json, got {out.name}")
    if args.pre_selection:
        pre = out.with_suffix(".pre" + out.suffix)
        if out.suffix == ".dot":
            pre.write_text(bipartite_to_dot(pre_graph), "utf-8")
        else:
            pre.write_text(dump_json(bipartite_to_json_dict(pre_graph)), "utf-8")
        print(f"wrote {out} and {pre}")
    else:
        print(f"wrote {out}")
    if args.fig:
        from .figures import render_explanation_figure

        render_explanation_figure(explanation, args.fig, title=f"{record.id} ({model.name})")
        print(f"wrote {args.fig}")
    if explanation.empty_warning:
        print("warning: explanation is empty (no cluster spans both sides)", file=sys.stderr)
    return 0


def _write_report_files(reports, report_path: Path) -> None:
    doc = {
        "corpus": reports[0].corpus,
        "model": reports[0].model,
        "rows": [r.to_json_dict() for r in reports],
    }
    report_path.write_text(dump_json(doc), "utf-8")

    csv_path = report_path.with_suffix(".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["corpus", "model", "op", "bug_count", "fixed_baseline", "fixed_with_ci"])
        for r in reports:
            writer.writerow([r.corpus, r.model, r.op, r.bug_count, r.fixed_baseline, r.fixed_with_ci])

    from .figures import render_eval_figure

    fig_path = report_path.with_suffix(".png")
    render_eval_figure(reports, fig_path)
    print(f"wrote {report_path}, {csv_path}, {fig_path}")


def cmd_eval(args) -> int:
    records = load_corpus(args.corpus)
    pcfg = perturb_config(args)
    ecfg = EstimatorConfig(method=args.estimator)
    rcfg = RerankConfig(lambda_mix=args.lambda_mix, delta=args.delta)
    name = Path(args.corpus).stem
    with resolve_model(args.model) as model:
        if args.sweep_ops:
            reports = evaluate_sweep(
                records, model, pcfg, ecfg, rcfg, corpus_name=name, workers=args.workers
            )
        else:
            reports = [
                evaluate(records, model, pcfg, ecfg, rcfg, corpus_name=name, workers=args.workers)
            ]
    _write_report_files(reports, Path(args.report))
    for r in reports:
        print(
            f"{r.op}: fixed {r.fixed_baseline} -> {r.fixed_with_ci} of {r.bug_count} bugs"
        )
    return 0


def cmd_perturb(args) -> int:
    records = load_corpus(args.corpus)
    record = find_bug(records, args.bug)
    samples = generate_perturbations(record_to_input(record), perturb_config(args))
    with open(args.out, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(
                json.dumps(
                    {
                        "index": s.index,
                        "op": s.op.value,
                        "code_tokens": s.code.texts,
                        "comment_tokens": s.comment.texts,
                        "retained_mask": [bool(b) for b in s.retained_mask],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_rerank(args) -> int:
    records = load_corpus(args.corpus)
    record = find_bug(records, args.bug)
    pcfg = perturb_config(args)
    rcfg = RerankConfig(lambda_mix=args.lambda_mix, delta=args.delta)
    with resolve_model(args.model) as model:
        result = analyze_bug(record, model, pcfg, EstimatorConfig(method=args.estimator), rcfg)
    doc = {
        "bug": record.id,
        "model": model.name,
        "baseline": [c.texts for c in result["baseline"].candidates],
        "reranked": [c.texts for c in result["reranked"].candidates],
    }
    if args.explain_rerank:
        doc["diagnostics"] = [s.to_json_dict() for s in result["scored"]]
    print(dump_json(doc), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpr",
        description="Explain and rerank black-box program-repair model predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("explain", help="emit the explanation graph for one bug")
    add_common(p)
    p.add_argument("--bug", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=None, help="cluster count (default: sqrt rule)")
    p.add_argument("--select", type=int, default=3, help="clusters kept in the explanation")
    p.add_argument("--tau", type=float, default=0.75)
    p.add_argument("--estimator", default="logistic", choices=["logistic", "pmi"])
    p.add_argument("--out", required=True, help="output path (.dot or .json)")
    p.add_argument("--pre-selection", action="store_true", help="also write the unselected graph")
    p.add_argument("--fig", default=None, help="optional PNG rendering")
    p.set_defaults(fn=cmd_explain)

    p = sub.add_parser("eval", help="score a model over a corpus, with and without reranking")
    add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--sweep-ops", action="store_true", help="one report row per operator")
    p.add_argument("--estimator", default="logistic", choices=["logistic", "pmi"])
    p.add_argument("--lambda-mix", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", required=True, help="JSON report path (CSV and PNG written alongside)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("perturb", help="dump disturbed variants of one bug as JSON Lines")
    add_common(p)
    p.add_argument("--bug", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_perturb)

    p = sub.add_parser("rerank", help="print baseline and reranked candidates for one bug")
    add_common(p)
    p.add_argument("--bug", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--estimator", default="logistic", choices=["logistic", "pmi"])
    p.add_argument("--lambda-mix", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--explain-rerank", action="store_true")
    p.set_defaults(fn=cmd_rerank)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (QueryError,) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (CprError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
