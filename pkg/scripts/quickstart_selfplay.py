#!/usr/bin/env python3
"""Closed-loop quickstart: synthetic benchmark -> self-play rounds -> curve.

Generates the word-problem benchmark, runs the round loop with the chosen
generator (built-in trainable by default, or an external wire-protocol
process), evaluates after every round, and writes a rounds-vs-accuracy CSV.

    python3 scripts/quickstart_selfplay.py --out runs/quickstart
    python3 scripts/quickstart_selfplay.py --out runs/adapter \\
        --generator "external:cmd=python3 -m lmadapter" --examples 24 --samples 4 --rounds 1
"""

import argparse
import json
import sys
import time
from pathlib import Path

from toolloop import (
    EvalConfig,
    MatchSpec,
    SamplingMode,
    SamplingSpec,
    SelfPlayConfig,
    SyntheticArithmeticSpec,
    ToolRegistry,
    audit_tool_use_set,
    evaluate,
    generate_synthetic,
)
from toolloop.cli import build_generator
from toolloop.datasets import save_task_set, save_tool_use_set
from toolloop.evaluation import emit_report, save_eval_report
from toolloop.selfplay import run_round
from toolloop.tools import FormulaTool


def parse_args():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--examples", type=int, default=500)
    parser.add_argument("--bootstrap", type=int, default=20)
    parser.add_argument("--samples", type=int, default=50)
    parser.add_argument("--rounds", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--synth-seed", type=int, default=7)
    parser.add_argument("--generator", default="trainable")
    parser.add_argument("--budget", type=int, default=2048)
    parser.add_argument("--jobs", type=int, default=1)
    return parser.parse_args()


def main():
    args = parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()

    task_set, bootstrap = generate_synthetic(
        SyntheticArithmeticSpec(
            example_count=args.examples, bootstrap_count=args.bootstrap, seed=args.synth_seed
        )
    )
    save_task_set(out / "tasks.jsonl", task_set)
    save_tool_use_set(out / "bootstrap.jsonl", bootstrap)

    registry = ToolRegistry([FormulaTool()])
    gen = build_generator(args.generator)
    cfg = SelfPlayConfig(
        rounds=args.rounds,
        samples_per_example=args.samples,
        match_threshold=MatchSpec(),
        sampling=SamplingSpec(mode=SamplingMode.RANDOM, temperature=1.0, top_k=40, seed=args.seed),
        budget=args.budget,
        jobs=args.jobs,
    )
    eval_cfg = EvalConfig(match=cfg.match_threshold, budget=args.budget, jobs=args.jobs)

    def checkpoint(round_index, dataset):
        if gen.supports_update:
            gen.update(dataset)
        report = evaluate(gen, registry, task_set, eval_cfg)
        save_eval_report(out / f"eval_round_{round_index}.jsonl", report)
        return report

    evals = [(0, checkpoint(0, bootstrap))]
    rates = {}
    dataset = list(bootstrap)
    reports = []
    for round_index in range(1, args.rounds + 1):
        dataset, report = run_round(gen, registry, task_set, dataset, cfg, round_index)
        save_tool_use_set(out / f"d_round_{round_index}.jsonl", dataset)
        (out / f"report_round_{round_index}.json").write_text(
            json.dumps(report.to_dict(), ensure_ascii=False) + "\n", encoding="utf-8"
        )
        reports.append(report)
        rates[round_index] = report.acceptance_rate
        evals.append((round_index, checkpoint(round_index, dataset)))

    audit = audit_tool_use_set(dataset, task_set, registry, cfg.match_threshold)
    csv_text, summary = emit_report(evals, acceptance_rates=rates)
    (out / "curve.csv").write_text(csv_text, encoding="utf-8")
    (out / "curve.txt").write_text(summary, encoding="utf-8")

    print(summary, end="")
    print(f"dataset: {len(bootstrap)} bootstrap -> {len(dataset)} records")
    print(f"audit: {audit.checked} self-play records, "
          f"{len(audit.match_failures)} match failures, {len(audit.replay_failures)} replay failures")
    print(f"elapsed: {time.monotonic() - started:.1f}s -> {out}")
    return 0 if audit.ok else 1


if __name__ == "__main__":
    sys.exit(main())
