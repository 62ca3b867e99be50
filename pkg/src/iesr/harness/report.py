"""Breakdown tables (markdown, CSV, JSON) and cost tables from a report."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .evaluate import Report

CSV_HEADER = ("group", "key", "correct", "total", "ex")


@dataclass(frozen=True)
class RenderedBreakdown:
    markdown: str
    csv: str
    json: str

    def write(self, out_dir: Path | str, stem: str = "breakdown") -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for ext, text in (("md", self.markdown), ("csv", self.csv), ("json", self.json)):
            p = out / f"{stem}.{ext}"
            p.write_text(text, encoding="utf-8")
            paths.append(p)
        return paths


def breakdown_rows(report: Report) -> list[tuple[str, str, int, int, float]]:
    rows = []
    if report.total:
        rows.append(("overall", "all", report.correct, report.total, report.ex))
    for group, table in (("difficulty", report.by_difficulty), ("reasoning_type", report.by_reasoning_type)):
        for key in sorted(table):
            b = table[key]
            rows.append((group, key, int(b["correct"]), int(b["total"]), float(b["ex"])))
    return rows


def breakdown_report(report: Report) -> RenderedBreakdown:
    rows = breakdown_rows(report)
    md = ["| group | key | correct | total | EX |", "|---|---|---:|---:|---:|"]
    md += [f"| {g} | {k} | {c} | {t} | {ex:.2f} |" for g, k, c, t, ex in rows]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows((g, k, c, t, repr(ex)) for g, k, c, t, ex in rows)

    payload = [dict(zip(CSV_HEADER, r)) for r in rows]
    return RenderedBreakdown("\n".join(md) + "\n", buf.getvalue(), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_breakdown_csv(text: str) -> list[tuple[str, str, int, int, float]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError("unexpected breakdown CSV header")
    return [(g, k, int(c), int(t), float(ex)) for g, k, c, t, ex in reader]


def cost_table(report: Report) -> str:
    """Markdown table of calls and tokens by stage and by role."""
    lines = ["| scope | name | calls | prompt tokens | gen tokens | avg calls/q | avg gen tokens/q |",
             "|---|---|---:|---:|---:|---:|---:|"]
    costs = report.costs or {}
    for scope in ("by_stage", "by_role"):
        for name, line in sorted(costs.get(scope, {}).items()):
            lines.append(
                f"| {scope[3:]} | {name} | {line['calls']} | {line['prompt_tokens']} | {line['gen_tokens']} "
                f"| {line['avg_calls']:.2f} | {line['avg_gen_tokens']:.1f} |"
            )
    if costs.get("total"):
        t = costs["total"]
        lines.append(
            f"| total | all | {t['calls']} | {t['prompt_tokens']} | {t['gen_tokens']} "
            f"| {t['avg_calls']:.2f} | {t['avg_gen_tokens']:.1f} |"
        )
    return "\n".join(lines) + "\n"
