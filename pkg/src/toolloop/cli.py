"""Command-line entry point.

Subcommands:

  index           build and persist a retrieval index from a JSONL corpus
  solve           evaluate one formula and print the rendered value
  selfplay        run the iterative self-play pipeline
  eval            evaluate a generator on a task set (optionally tool-less baseline)
  check-validity  report how many formula/answer records are consistent
  synth           emit the synthetic arithmetic benchmark (tasks + bootstrap)
  rerun           re-execute a command from its run manifest

Exit codes: 0 success, 2 usage/config, 3 domain error, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import datasets, evaluation, selfplay
from .errors import (
    ConfigError,
    FormulaError,
    GeneratorError,
    PersistenceError,
    SchemaError,
    ToolLoopError,
)
from .generators import (
    ExternalGenerator,
    Generator,
    SamplingMode,
    SamplingSpec,
    ScriptedGenerator,
    TrainableGenerator,
)
from .manifest import RunManifest, sha256_file
from .tools import Bm25Index, Bm25Params, Bm25SearchTool, FormulaTool, ToolRegistry, WebSearchTool
from .tools.formula import ValidityTolerance, check_validity, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_IO = 4


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _require_input(path: str) -> None:
    if not Path(path).is_file():
        raise ConfigError(f"IoError: no such file: {path}")


# --- SPEC parsers ---


def build_generator(spec: str) -> Generator:
    """Generator SPEC: trainable[:fit=PATH] | scripted:PATH |
    external:cmd=COMMAND | external:tcp=HOST:PORT"""
    kind, _, rest = spec.partition(":")
    if kind == "trainable":
        gen = TrainableGenerator()
        if rest:
            key, _, value = rest.partition("=")
            if key != "fit" or not value:
                raise ConfigError(f"bad trainable spec: {spec!r}")
            _require_input(value)
            gen.update(datasets.load_tool_use_set(value))
        return gen
    if kind == "scripted":
        if not rest:
            raise ConfigError("scripted generator needs a script path: scripted:PATH")
        _require_input(rest)
        return ScriptedGenerator.from_jsonl(rest)
    if kind == "external":
        key, _, value = rest.partition("=")
        if key == "cmd" and value:
            return ExternalGenerator.spawn(value)
        if key == "tcp" and value:
            host, _, port = value.rpartition(":")
            if not host or not port.isdigit():
                raise ConfigError(f"bad tcp address: {value!r}")
            return ExternalGenerator.connect(host, int(port))
        raise ConfigError(f"bad external generator spec: {spec!r}")
    raise ConfigError(f"unknown generator kind: {kind!r}")


def build_registry(spec: str) -> ToolRegistry:
    """Tools SPEC: comma list of formula | search:index=PATH[:k=N] |
    websearch[:endpoint=URL]; empty string means no tools."""
    registry = ToolRegistry()
    if not spec:
        return registry
    for item in spec.split(","):
        parts = item.strip().split(":")
        name, args = parts[0], {}
        for part in parts[1:]:
            key, _, value = part.partition("=")
            args[key] = value
        if name == "formula":
            registry.register(FormulaTool())
        elif name == "search":
            index_path = args.get("index", "")
            if not index_path:
                raise ConfigError("search tool needs search:index=PATH")
            _require_input(index_path)
            index = Bm25Index.load(index_path)
            registry.register(Bm25SearchTool(index, k=int(args.get("k", "1"))))
        elif name == "websearch":
            endpoint = args.get("endpoint")
            tool = WebSearchTool(endpoint) if endpoint else WebSearchTool.from_env()
            registry.register(tool)
        else:
            raise ConfigError(f"unknown tool: {name!r}")
    return registry


def parse_match_spec(spec: str) -> selfplay.MatchSpec:
    """Threshold SPEC: text | numeric[:abs=X][:rel=Y]"""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "text":
        if len(parts) > 1:
            raise ConfigError("text match takes no parameters")
        return selfplay.MatchSpec(kind=selfplay.TEXT)
    if kind == "numeric":
        kwargs = {}
        for part in parts[1:]:
            key, _, value = part.partition("=")
            if key == "abs":
                kwargs["abs_tol"] = float(value)
            elif key == "rel":
                kwargs["rel_tol"] = float(value)
            else:
                raise ConfigError(f"bad threshold parameter: {part!r}")
        return selfplay.MatchSpec(kind=selfplay.NUMERIC, **kwargs)
    raise ConfigError(f"unknown threshold kind: {kind!r}")


# --- commands ---


def cmd_index(args: argparse.Namespace, argv: list[str]) -> int:
    _require_input(args.corpus)
    corpus = datasets.load_corpus(args.corpus)
    index = Bm25Index(corpus, Bm25Params(k1=args.k1, b=args.b))
    index.save(args.out)
    manifest = RunManifest(
        command="index",
        argv=argv,
        config={"k1": args.k1, "b": args.b},
        dataset_hashes={args.corpus: sha256_file(args.corpus)},
        artifacts=[args.out],
    )
    manifest.save(args.out + ".manifest.json")
    print(f"indexed {index.doc_count} documents -> {args.out}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, argv: list[str]) -> int:
    print(solve(args.formula))
    if args.manifest:
        RunManifest(command="solve", argv=argv).save(args.manifest)
    return EXIT_OK


def _sampling_from_args(args: argparse.Namespace) -> SamplingSpec:
    return SamplingSpec(
        mode=SamplingMode.RANDOM,
        temperature=args.temperature,
        top_k=args.top_k,
        seed=args.seed,
    )


def cmd_selfplay(args: argparse.Namespace, argv: list[str]) -> int:
    _require_input(args.tasks)
    _require_input(args.bootstrap)
    task_set = datasets.load_task_set(args.tasks, args.task_kind)
    bootstrap = datasets.load_tool_use_set(args.bootstrap)
    gen = build_generator(args.generator)
    registry = build_registry(args.tools)
    cfg = selfplay.SelfPlayConfig(
        rounds=args.rounds,
        samples_per_example=args.samples,
        match_threshold=parse_match_spec(args.threshold),
        sampling=_sampling_from_args(args),
        max_accepts_per_example=args.max_accepts,
        dedup=not args.no_dedup,
        budget=args.budget,
        jobs=args.jobs,
    )
    out = Path(args.out)
    final_set, reports = selfplay.run_pipeline(
        gen, registry, task_set, bootstrap, cfg, out, resume=not args.no_resume
    )
    manifest = RunManifest(
        command="selfplay",
        argv=argv,
        seed=args.seed,
        config={
            "rounds": args.rounds,
            "samples": args.samples,
            "temperature": args.temperature,
            "top_k": args.top_k,
            "threshold": args.threshold,
            "max_accepts": args.max_accepts,
            "dedup": not args.no_dedup,
            "budget": args.budget,
            "generator": args.generator,
            "tools": args.tools,
            "task_kind": args.task_kind,
        },
        tools=registry.describe(),
        dataset_hashes={
            args.tasks: sha256_file(args.tasks),
            args.bootstrap: sha256_file(args.bootstrap),
        },
        artifacts=sorted(str(p) for p in out.glob("*") if p.name != "manifest.json"),
    )
    manifest.save(out / "manifest.json")
    print(f"self-play complete: {len(reports)} round(s), {len(final_set)} records -> {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, argv: list[str]) -> int:
    _require_input(args.tasks)
    task_set = datasets.load_task_set(args.tasks, args.task_kind)
    gen = build_generator(args.generator)
    registry = build_registry(args.tools)
    cfg = evaluation.EvalConfig(
        beams=args.beams,
        match=parse_match_spec(args.threshold),
        max_examples=args.max_examples,
        tool_enabled=not args.baseline,
        budget=args.budget,
        jobs=args.jobs,
    )
    report = evaluation.evaluate(gen, registry, task_set, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    evaluation.save_eval_report(out / "eval.jsonl", report)
    (out / "report.json").write_text(
        json.dumps(report.to_dict(), ensure_ascii=False) + "\n", encoding="utf-8"
    )
    csv_text, _ = evaluation.emit_report([(0, report)])
    (out / "report.csv").write_text(csv_text, encoding="utf-8")
    manifest = RunManifest(
        command="eval",
        argv=argv,
        config={
            "beams": args.beams,
            "threshold": args.threshold,
            "baseline": args.baseline,
            "max_examples": args.max_examples,
            "generator": args.generator,
            "tools": args.tools,
            "task_kind": args.task_kind,
        },
        tools=registry.describe(),
        dataset_hashes={args.tasks: sha256_file(args.tasks)},
        artifacts=[str(out / "eval.jsonl"), str(out / "report.json"), str(out / "report.csv")],
    )
    manifest.save(out / "manifest.json")
    print(f"accuracy {report.accuracy:.4f} ({report.accepted}/{report.n})")
    return EXIT_OK


def cmd_check_validity(args: argparse.Namespace, argv: list[str]) -> int:
    _require_input(args.mathqa)
    records = []
    for line_no, obj in datasets._read_jsonl(args.mathqa):
        formula = obj.get("formula")
        answer = obj.get("answer", obj.get("target"))
        if not isinstance(formula, str) or not isinstance(answer, str):
            raise SchemaError("need string fields 'formula' and 'answer'", line_no)
        records.append((formula, answer))
    report = check_validity(records, ValidityTolerance())
    print(f"records: {report.total}")
    pct = 100.0 * report.valid_fraction
    print(f"valid: {report.valid_count} ({pct:.1f}%)")
    print(f"invalid: {report.invalid_count}")
    if report.error_breakdown:
        breakdown = ", ".join(f"{k}={v}" for k, v in sorted(report.error_breakdown.items()))
        print(f"breakdown: {breakdown}")
    if args.manifest:
        RunManifest(
            command="check-validity",
            argv=argv,
            dataset_hashes={args.mathqa: sha256_file(args.mathqa)},
        ).save(args.manifest)
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, argv: list[str]) -> int:
    spec = datasets.SyntheticArithmeticSpec(
        example_count=args.examples,
        operand_min=args.min_operand,
        operand_max=args.max_operand,
        operators=tuple(args.operators.split(",")),
        seed=args.seed,
        bootstrap_count=args.bootstrap_count,
    )
    task_set, bootstrap = datasets.generate_synthetic(spec)
    datasets.save_task_set(args.out_tasks, task_set)
    datasets.save_tool_use_set(args.out_bootstrap, bootstrap)
    manifest = RunManifest(
        command="synth",
        argv=argv,
        seed=args.seed,
        config={
            "examples": args.examples,
            "bootstrap_count": args.bootstrap_count,
            "operators": args.operators,
            "operand_range": [args.min_operand, args.max_operand],
        },
        artifacts=[args.out_tasks, args.out_bootstrap],
    )
    manifest.save(args.out_tasks + ".manifest.json")
    print(f"wrote {len(task_set.records)} tasks -> {args.out_tasks}, "
          f"{len(bootstrap)} bootstrap records -> {args.out_bootstrap}")
    return EXIT_OK


def cmd_rerun(args: argparse.Namespace, argv: list[str]) -> int:
    manifest = RunManifest.load(args.manifest)
    stale = manifest.verify_inputs()
    if stale:
        raise ConfigError(f"inputs changed since the manifest was written: {', '.join(stale)}")
    new_argv = list(manifest.argv)
    if args.out:
        if "--out" in new_argv:
            position = new_argv.index("--out")
            new_argv[position + 1] = args.out
        else:
            new_argv += ["--out", args.out]
    return main(new_argv)


# --- parser wiring ---


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toolloop", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build a retrieval index from a JSONL corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k1", type=float, default=1.2)
    p.add_argument("--b", type=float, default=0.75)
    p.set_defaults(fn=cmd_index)

    p = sub.add_parser("solve", help="evaluate one formula")
    p.add_argument("formula")
    p.add_argument("--manifest", default="")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("selfplay", help="run the self-play pipeline")
    p.add_argument("--tasks", required=True)
    p.add_argument("--task-kind", choices=datasets.TASK_KINDS, default="synthetic")
    p.add_argument("--bootstrap", required=True)
    p.add_argument("--generator", default="trainable")
    p.add_argument("--tools", default="formula")
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--samples", type=int, default=600)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=40)
    p.add_argument("--threshold", default="numeric")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-accepts", type=int, default=4)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--budget", type=int, default=2048)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-resume", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_selfplay)

    p = sub.add_parser("eval", help="evaluate a generator on a task set")
    p.add_argument("--tasks", required=True)
    p.add_argument("--task-kind", choices=datasets.TASK_KINDS, default="synthetic")
    p.add_argument("--generator", default="trainable")
    p.add_argument("--tools", default="formula")
    p.add_argument("--beams", type=int, default=4)
    p.add_argument("--threshold", default="numeric")
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--max-examples", type=int, default=None)
    p.add_argument("--budget", type=int, default=2048)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("check-validity", help="formula/answer consistency report")
    p.add_argument("--mathqa", required=True, help="JSONL with 'formula' and 'answer' fields")
    p.add_argument("--manifest", default="")
    p.set_defaults(fn=cmd_check_validity)

    p = sub.add_parser("synth", help="generate the synthetic arithmetic benchmark")
    p.add_argument("--out-tasks", required=True)
    p.add_argument("--out-bootstrap", required=True)
    p.add_argument("--examples", type=int, default=500)
    p.add_argument("--bootstrap-count", type=int, default=20)
    p.add_argument("--min-operand", type=int, default=2)
    p.add_argument("--max-operand", type=int, default=999)
    p.add_argument("--operators", default="add,subtract,multiply,divide")
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("rerun", help="re-execute a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default="")
    p.set_defaults(fn=cmd_rerun)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args, argv)
    except (ConfigError, SchemaError) as exc:
        return _fail(str(exc), EXIT_USAGE)
    except (PersistenceError, OSError) as exc:
        return _fail(str(exc), EXIT_IO)
    except (FormulaError, GeneratorError, ToolLoopError) as exc:
        return _fail(f"{type(exc).__name__}: {exc}", EXIT_DOMAIN)


if __name__ == "__main__":
    sys.exit(main())
