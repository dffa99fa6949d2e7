"""Command-line entrypoint wiring the pipeline stages.

Subcommands: mine, filter, assemble, eval, train-toy, report. Every run
writes a ``<output>.manifest.json`` beside its primary output recording the
config hash, input hashes, seed, and component versions, so runs can be
compared and reproduced. Exit codes: 0 success, 1 validation error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import themis
from themis import assemble as assemble_mod
from themis import filtering, metrics, mining, training
from themis.config import ConfigError, PipelineConfig, load_config
from themis.records import (
    InvariantViolation,
    MalformedJson,
    MissingField,
    PreferencePair,
    RankedCandidate,
    ThemisError,
    read_jsonl,
    write_jsonl,
)
from themis.scorer import RemoteScorer, ToyRewardModel

log = logging.getLogger("themis")


class UsageError(ThemisError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_manifest(primary_out: Path, config_path: str | None, inputs: list[Path], seed: int) -> None:
    manifest = {
        "config_hash": _sha256(Path(config_path)) if config_path else "defaults",
        "input_hashes": {str(p): _sha256(p) for p in sorted(inputs)},
        "seed": seed,
        "versions": {
            "themis": themis.__version__,
            "python": sys.version.split()[0],
        },
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    path = primary_out.with_name(primary_out.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_dict_jsonl(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_schema": themis.SCHEMA_VERSION}) + "\n")
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def _read_pairs(path: Path) -> list[PreferencePair]:
    pairs = []
    for rec in read_jsonl(path):
        if not isinstance(rec, PreferencePair):
            raise InvariantViolation(f"{path}: expected preference pairs, got {type(rec).__name__}")
        pairs.append(rec)
    return pairs


def _cmd_mine(args, cfg: PipelineConfig) -> int:
    in_path = Path(args.infile)
    mining_cfg = cfg.mining
    if args.window == "train":
        mining_cfg = mining.MiningConfig.train_defaults()
    records = [rec for rec in read_jsonl(in_path)]
    pairs, rejects = mining.mine(records, mining_cfg)
    out = Path(args.out)
    write_jsonl(out, pairs)
    rejects_path = Path(args.rejects) if args.rejects else out.with_suffix(".rejects.jsonl")
    _write_dict_jsonl(rejects_path, rejects)
    _write_run_manifest(out, args.config, [in_path], cfg.rng_seed)
    log.info("mined %d pairs, rejected %d records", len(pairs), len(rejects))
    return 0


def _cmd_filter(args, cfg: PipelineConfig) -> int:
    in_path = Path(args.infile)
    pairs = _read_pairs(in_path)
    bench_prompts: list[str] = []
    inputs = [in_path]
    if args.bench:
        bench_path = Path(args.bench)
        bench_prompts = [p.task_prompt for p in _read_pairs(bench_path)]
        inputs.append(bench_path)
    stages = filtering.STAGES if args.stage == "all" else (args.stage,)
    result = filtering.run_pipeline(pairs, cfg.filter, bench_prompts=bench_prompts, stages=stages)
    out = Path(args.out)
    write_jsonl(out, result.survivors)
    rejects_path = Path(args.rejects) if args.rejects else out.with_suffix(".rejects.jsonl")
    _write_dict_jsonl(rejects_path, [r.to_json_obj() for r in result.rejects])
    _write_run_manifest(out, args.config, inputs, cfg.rng_seed)
    log.info(
        "kept %d of %d pairs (%d under-shingled kept with flag)",
        len(result.survivors), len(pairs), len(result.under_shingled),
    )
    return 0


def _load_manifest(args, cfg: PipelineConfig) -> assemble_mod.BenchmarkManifest:
    manifest_path = args.manifest or cfg.assemble.manifest
    if manifest_path:
        return assemble_mod.BenchmarkManifest.load(manifest_path)
    return assemble_mod.BenchmarkManifest.bundled()


def _cmd_assemble(args, cfg: PipelineConfig) -> int:
    manifest = _load_manifest(args, cfg)
    in_path = Path(args.infile)
    pairs = _read_pairs(in_path)
    ordered, report = assemble_mod.assemble(pairs, manifest, strict=args.strict or cfg.assemble.strict)
    out = Path(args.out)
    write_jsonl(out, ordered)
    if args.audit:
        report.write_csv(args.audit)
    _write_run_manifest(out, args.config, [in_path], cfg.rng_seed)
    log.info(
        "assembled %d pairs against %d manifest cells; audit %s",
        len(ordered), len(manifest.cells), "clean" if report.clean else "has deltas",
    )
    return 0


def _build_scorer(spec: str, cfg: PipelineConfig):
    kind, _, rest = spec.partition(":")
    if kind == "toy":
        if not rest:
            raise UsageError("toy scorer needs a weights path: toy:<weights.json>")
        return ToyRewardModel.load(rest)
    if kind == "http":
        endpoint = rest or cfg.scorer.endpoint
        return RemoteScorer(endpoint=endpoint, token=cfg.scorer.token)
    raise UsageError(f"unknown scorer spec {spec!r} (expected toy:<path> or http:<url>)")


def _cmd_eval(args, cfg: PipelineConfig) -> int:
    bench_path = Path(args.bench)
    pairwise_pairs: list[PreferencePair] = []
    adversarial_pairs: list[PreferencePair] = []
    problems: dict[str, list[RankedCandidate]] = {}
    for rec in read_jsonl(bench_path):
        if isinstance(rec, RankedCandidate):
            problems.setdefault(rec.problem_id, []).append(rec)
        elif isinstance(rec, PreferencePair):
            if rec.extra.get("task") == "adversarial":
                adversarial_pairs.append(rec)
            else:
                pairwise_pairs.append(rec)
        else:
            raise InvariantViolation(f"{bench_path}: commit records are not evaluable")

    scorer = _build_scorer(args.scorer, cfg)
    mode = args.criteria_mode or cfg.eval.criteria_mode
    pairwise_report = (
        metrics.pairwise_accuracy(pairwise_pairs, scorer, criteria_mode=mode, max_in_flight=args.workers)
        if pairwise_pairs else None
    )
    adversarial_report = (
        metrics.adversarial_accuracy(adversarial_pairs, scorer, criteria_mode=mode, max_in_flight=args.workers)
        if adversarial_pairs else None
    )
    listwise = (
        metrics.listwise_report(problems, k=cfg.eval.k, list_size=cfg.eval.list_size)
        if problems else None
    )
    md, csv_text = metrics.emit_report(
        pairwise=pairwise_report, listwise=listwise, adversarial=adversarial_report
    )
    out = Path(args.out)
    out.write_text(md, encoding="utf-8")
    if args.csv:
        Path(args.csv).write_text(csv_text, encoding="utf-8")
    _write_run_manifest(out, args.config, [bench_path], cfg.rng_seed)
    if pairwise_report is not None and pairwise_report.partial:
        log.warning("partial report: some pairs failed to score")
        return 2
    return 0


def _cmd_train_toy(args, cfg: PipelineConfig) -> int:
    data_path = Path(args.data)
    pairs = _read_pairs(data_path)
    settings = cfg.train
    if args.stage:
        from dataclasses import replace as _replace
        settings = _replace(settings, stage=args.stage)
    loss_cfg = settings.loss_config()
    seed = args.seed if args.seed is not None else cfg.rng_seed
    state, curve = training.train_toy(
        pairs, loss_cfg, lr=settings.lr, seed=seed, batch_size=settings.batch_size
    )
    model = ToyRewardModel(weights=state.weights, seed=seed)
    out = Path(args.out)
    model.save(out, cfg={
        "stage": loss_cfg.stage, "lam": loss_cfg.lam, "mu": loss_cfg.mu,
        "epochs": loss_cfg.epochs, "lr": settings.lr, "batch_size": settings.batch_size,
    })
    if args.curve:
        with open(args.curve, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=["epoch", "bt", "lm", "center", "total", "accuracy"])
            writer.writeheader()
            writer.writerows(curve)
    _write_run_manifest(out, args.config, [data_path], seed)
    log.info("trained %d steps; final accuracy %.3f", state.step, curve[-1]["accuracy"])
    return 0


def _cmd_report(args, cfg: PipelineConfig) -> int:
    manifest = _load_manifest(args, cfg)
    totals = assemble_mod.audit_totals(manifest)
    lines = [f"# Benchmark composition: {manifest.name}", ""]
    lines.append("| Criterion | Count |")
    lines.append("|---|---|")
    for name, count in totals["by_criterion"].items():
        lines.append(f"| {name} | {count} |")
    lines.append("")
    lines.append("| Language | Count |")
    lines.append("|---|---|")
    for name, count in totals["by_language"].items():
        lines.append(f"| {name} | {count} |")
    lines.append("")
    lines.append(f"Total: {totals['total']}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="themis", description="Code preference mining, cleaning, and evaluation pipeline")
    parser.add_argument("--config", help="pipeline config TOML")
    parser.add_argument("--workers", type=int, default=4, help="bound on parallel work")
    parser.add_argument("--seed", type=int, default=None, help="override the config rng seed")
    parser.add_argument("--log-level", default=None, choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="turn commit records into preference pairs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rejects")
    p.add_argument("--window", choices=["eval", "train"], default="eval")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("filter", help="run the cleaning pipeline over preference pairs")
    p.add_argument("--stage", default="all", choices=("all",) + filtering.STAGES)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rejects")
    p.add_argument("--bench", help="benchmark pairs JSONL supplying decontamination prompts")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("assemble", help="group pairs and audit against a composition manifest")
    p.add_argument("--manifest")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--audit", help="audit CSV path")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_assemble)

    p = sub.add_parser("eval", help="score a benchmark and emit report tables")
    p.add_argument("--bench", required=True)
    p.add_argument("--scorer", required=True, help="toy:<weights.json> or http:<url>")
    p.add_argument("--criteria-mode", choices=["none", "all", "single"], default=None)
    p.add_argument("--out", required=True, help="markdown report path")
    p.add_argument("--csv", help="CSV report path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("train-toy", help="train the toy reward model")
    p.add_argument("--stage", choices=["pt", "pm"], default=None)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="weights JSON path")
    p.add_argument("--curve", help="per-epoch curve CSV path")
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("report", help="render benchmark composition marginals")
    p.add_argument("--manifest")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        if args.seed is not None:
            from dataclasses import replace as _replace
            cfg = _replace(cfg, rng_seed=args.seed)
        logging.basicConfig(
            level=getattr(logging, (args.log_level or cfg.log_level).upper()),
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        return args.func(args, cfg)
    except (UsageError, ConfigError, InvariantViolation, MalformedJson, MissingField) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ThemisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
