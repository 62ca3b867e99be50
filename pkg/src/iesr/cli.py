"""Command-line interface: ``iesr <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from .core.dataset import DatabaseRegistry, DatasetError, load_dataset
from .core.normalize import ComparePolicy
from .harness.config import ConfigError, PipelineConfig, build_gateway

log = logging.getLogger("iesr")


def _dump(obj: Any) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, default=str) + "\n")


def _load_config(path: str | None) -> PipelineConfig:
    return PipelineConfig.from_file(path) if path else PipelineConfig()


def _pipeline_inputs(args: argparse.Namespace):
    config = _load_config(args.config)
    if args.n_rollout is not None:
        config = config.replace("search", n_rollout=args.n_rollout)
    if args.seed is not None:
        config = config.replace("search", seed=args.seed).replace("selection", probe_seed=args.seed)
    if args.workers is not None:
        config = config.replace("harness", workers=args.workers)
    dataset = load_dataset(args.dataset, args.db_root)
    for err in dataset.errors:
        log.warning("record %d skipped: %s", err.index, err.message)
    gateway = build_gateway(config.gateway, args.mock)
    return config, dataset, gateway


def cmd_run(args: argparse.Namespace) -> int:
    from .harness.pipeline import run_pipeline

    config, dataset, gateway = _pipeline_inputs(args)
    out = []
    for case in dataset:
        res = run_pipeline(case, config, gateway, dataset.registry)
        out.append(res.record())
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        _dump(out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    from .harness.evaluate import evaluate
    from .harness.report import breakdown_report

    config, dataset, gateway = _pipeline_inputs(args)
    report = evaluate(dataset, config, gateway, run_dir=args.run_dir, mock_script=args.mock)
    if args.run_dir:
        breakdown_report(report).write(args.run_dir)
    print(f"EX {report.ex:.2f} ({report.correct}/{report.total})")
    if report.invalid_gold:
        print(f"invalid gold: {', '.join(report.invalid_gold)}")
    return 0


def cmd_perturb(args: argparse.Namespace) -> int:
    from .harness.perturb import PerturbError, perturb_database

    golds = list(args.gold_sql or [])
    if args.dataset:
        db_id = args.db_id or Path(args.db).stem
        records = json.loads(Path(args.dataset).read_text(encoding="utf-8"))
        golds += [r.get("query", r.get("SQL", "")) for r in records if r.get("db_id") == db_id]
    try:
        result = perturb_database(args.db, args.out, args.level, args.seed, k=args.k, gold_sqls=golds or None)
    except PerturbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _dump(result.to_dict())
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .harness.evaluate import Report
    from .harness.report import breakdown_report

    report = Report.load(Path(args.run_dir) / "report.json")
    rendered = breakdown_report(report)
    if args.out:
        rendered.write(args.out)
    sys.stdout.write(rendered.markdown)
    return 0


def cmd_costs(args: argparse.Namespace) -> int:
    from .harness.evaluate import Report
    from .harness.report import cost_table

    report = Report.load(Path(args.run_dir) / "report.json")
    sys.stdout.write(cost_table(report))
    return 0


def cmd_extract_pr(args: argparse.Namespace) -> int:
    from .harness.extraction import dataset_pr, load_states

    gold = json.loads(Path(args.gold).read_text(encoding="utf-8"))
    result = dataset_pr(load_states(args.run_dir), gold)
    _dump(result)
    return 0


def _policy(args: argparse.Namespace) -> ComparePolicy:
    return PipelineConfig().exec.policy() if not getattr(args, "config", None) else _load_config(args.config).exec.policy()


def _display(cell) -> Any:
    if cell.kind == "float" and cell.tol and isinstance(cell.value, int):
        return round(cell.value * cell.tol, 12)
    if cell.kind == "bytes":
        return repr(cell.value)
    return cell.value


def cmd_exec(args: argparse.Namespace) -> int:
    from .sqlexec.execute import execute

    outcome = execute(args.sql, Path(args.db), args.timeout_ms, _policy(args))
    payload: dict[str, Any] = {"kind": outcome.kind, "elapsed_ms": round(outcome.elapsed_ms, 3)}
    if outcome.ok:
        payload["rows"] = [[_display(cell) for cell in row] for row in outcome.rows.rows]
    else:
        payload["message"] = outcome.message
    _dump(payload)
    return 0 if outcome.ok else 1


def _read_predictions(path: Path) -> list[str | None]:
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        return [line.split("\t", 1)[0].strip() or None for line in text.splitlines()]
    if isinstance(raw, dict):
        raw = [raw[k] for k in sorted(raw, key=lambda k: int(k) if str(k).isdigit() else k)]
    out: list[str | None] = []
    for item in raw:
        if isinstance(item, dict):
            item = item.get("predicted_sql", item.get("sql"))
        out.append(item or None)
    return out


def cmd_ex(args: argparse.Namespace) -> int:
    from .sqlexec.ex import compute_ex

    registry = DatabaseRegistry(Path(args.db_root))
    golds = json.loads(Path(args.gold).read_text(encoding="utf-8"))
    preds = _read_predictions(Path(args.pred))
    if len(preds) != len(golds):
        print(f"error: {len(preds)} predictions for {len(golds)} gold records", file=sys.stderr)
        return 1
    gold_pairs = [(g.get("query", g.get("SQL", "")), registry.get(g["db_id"])) for g in golds]
    result = compute_ex([(p, db) for p, (_, db) in zip(preds, gold_pairs)], gold_pairs, _policy(args), args.timeout_ms)
    _dump(result.to_dict())
    return 0


def cmd_toy(args: argparse.Namespace) -> int:
    from .harness.toy import build_toy_suite

    paths = build_toy_suite(args.out)
    _dump({k: str(v) for k, v in paths.items()})
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iesr", description="Rule-guided, search-based text-to-SQL pipeline.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def pipeline_args(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--dataset", required=True, help="JSON array of question records")
        sp.add_argument("--db-root", required=True, help="directory holding <db_id>/<db_id>.sqlite")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--mock", help="scripted model session (no network)")
        sp.add_argument("--n-rollout", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)

    sp = sub.add_parser("run", help="run the pipeline and print predictions")
    pipeline_args(sp)
    sp.add_argument("--out", help="write predictions JSON here instead of stdout")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("eval", help="run the pipeline and score EX")
    pipeline_args(sp)
    sp.add_argument("--run-dir", help="write manifest, report and traces here")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("perturb", help="write a decayed copy of a database")
    sp.add_argument("--db", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--level", required=True, choices=("l1", "l2", "l3"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--k", type=int, default=2, help="number of decay tables")
    sp.add_argument("--dataset", help="check gold SQL for this database from a dataset file")
    sp.add_argument("--db-id", help="db_id to select in --dataset (default: file stem)")
    sp.add_argument("--gold-sql", action="append", help="gold SQL to check (repeatable)")
    sp.set_defaults(func=cmd_perturb)

    sp = sub.add_parser("report", help="render difficulty/type breakdowns of a run")
    sp.add_argument("--run-dir", required=True)
    sp.add_argument("--out", help="also write breakdown.{md,csv,json} here")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("costs", help="print per-stage and per-role call/token costs of a run")
    sp.add_argument("--run-dir", required=True)
    sp.set_defaults(func=cmd_costs)

    sp = sub.add_parser("extract-pr", help="precision/recall of extracted items against annotations")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--run-dir", required=True)
    sp.set_defaults(func=cmd_extract_pr)

    sp = sub.add_parser("exec", help="execute one read-only query")
    sp.add_argument("--db", required=True)
    sp.add_argument("--sql", required=True)
    sp.add_argument("--timeout-ms", type=int, default=30_000)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_exec)

    sp = sub.add_parser("ex", help="score predictions against gold SQL")
    sp.add_argument("--pred", required=True, help="JSON list (or one SQL per line)")
    sp.add_argument("--gold", required=True, help="dataset JSON with query and db_id")
    sp.add_argument("--db-root", required=True)
    sp.add_argument("--timeout-ms", type=int, default=30_000)
    sp.add_argument("--config")
    sp.set_defaults(func=cmd_ex)

    sp = sub.add_parser("toy", help="write the bundled toy benchmark")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_toy)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DatasetError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
