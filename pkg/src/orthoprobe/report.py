"""Scoring trained probes and assembling evaluation reports.

Scores are sentence-mean Spearman correlations per (language, task),
collected over seeds, then aggregated into per-family averages and
deltas against the nothing-shared baseline regime.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import figures
from .corpus import gold_for_task
from .errors import ConfigurationError
from .metrics import significance, spearman_items, spearman_task
from .model import IN_LANG, TASKS

IE = "IE"
NON_IE = "non-IE"

TASK_TITLES = {
    "dep_depth": "Dependency Depth Spearman",
    "dep_distance": "Dependency Distance Spearman",
    "lex_depth": "Lexical Depth Spearman",
    "lex_distance": "Lexical Distance Spearman",
}


def score_corpus(model, corpus, tasks=None, min_tokens=5, max_tokens=50):
    """Sentence-mean Spearman per task for one language's corpus.

    Sentences outside the token window, without valid gold entries, or
    with constant values are skipped; a task with nothing left scores
    None.
    """
    tasks = tasks or model.tasks
    out = {}
    for task in tasks:
        layer = model.layer_of_task[task]
        scores, lengths = [], []
        for sent, emb in zip(corpus.sentences, corpus.embeddings):
            gold, mask = gold_for_task(sent, task)
            if not np.any(mask):
                continue
            pred = model.predict(task, corpus.language, emb[layer])
            scores.append(spearman_items(pred, gold, mask))
            lengths.append(len(sent))
        out[task] = spearman_task(scores, lengths, min_tokens, max_tokens)
    return out


@dataclass
class EvaluationReport:
    """Per-language, per-task correlation scores with aggregates and deltas."""

    languages: list
    tasks: list
    family_map: dict
    scores: dict            # regime -> lang -> task -> list of per-seed scores
    means: dict = field(default_factory=dict)
    deltas: dict = field(default_factory=dict)
    aggregates: dict = field(default_factory=dict)
    seed_counts: dict = field(default_factory=dict)
    parsing: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "languages": self.languages,
            "tasks": self.tasks,
            "family_map": self.family_map,
            "scores": self.scores,
            "means": self.means,
            "deltas": self.deltas,
            "aggregates": self.aggregates,
            "seed_counts": self.seed_counts,
            "parsing": self.parsing,
            "metadata": self.metadata,
        }


def _mean_or_none(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def build_report(scores, family_map, alpha=0.05, metadata=None, parsing=None):
    """Aggregate raw per-seed scores into an EvaluationReport.

    ``scores``: regime -> language -> task -> list of per-seed values.
    Deltas and significance flags are computed against the regime that
    shares nothing, when present.
    """
    regimes = list(scores)
    languages = sorted({lang for r in regimes for lang in scores[r]})
    tasks = [t for t in TASKS if any(t in scores[r].get(l, {}) for r in regimes for l in languages)]
    missing = [l for l in languages if l not in family_map]
    if missing:
        raise ConfigurationError(f"languages missing from family map: {missing}")

    report = EvaluationReport(
        languages=languages,
        tasks=tasks,
        family_map=dict(family_map),
        scores={r: {l: {t: list(v) for t, v in per_l.items()} for l, per_l in per_r.items()}
                for r, per_r in scores.items()},
        metadata=metadata or {},
        parsing=parsing or [],
    )

    for regime in regimes:
        report.seed_counts[regime] = max(
            (len(v) for per_l in scores[regime].values() for v in per_l.values()), default=0
        )
        report.means[regime] = {
            lang: {task: _mean_or_none(scores[regime].get(lang, {}).get(task, []))
                   for task in tasks}
            for lang in languages
        }

    base = IN_LANG if IN_LANG in regimes else None
    for regime in regimes:
        if base is None or regime == base:
            continue
        report.deltas[regime] = {}
        for lang in languages:
            report.deltas[regime][lang] = {}
            for task in tasks:
                mine = report.means[regime][lang][task]
                ref = report.means[base][lang][task]
                if mine is None or ref is None:
                    report.deltas[regime][lang][task] = {
                        "delta": None, "p_value": None, "significant": False,
                    }
                    continue
                sig = significance(
                    scores[regime][lang][task], scores[base][lang][task], alpha=alpha
                )
                report.deltas[regime][lang][task] = {
                    "delta": mine - ref,
                    "p_value": sig.p_value,
                    "significant": sig.significant and sig.applicable,
                }

    groups = {
        IE: [l for l in languages if family_map[l] == IE],
        NON_IE: [l for l in languages if family_map[l] != IE],
        "all": languages,
    }
    for regime in regimes:
        report.aggregates[regime] = {}
        for task in tasks:
            report.aggregates[regime][task] = {
                name: _mean_or_none([report.means[regime][l][task] for l in members])
                for name, members in groups.items()
            }
    return report


def _fmt(value, signed=False):
    if value is None:
        return "n/a"
    return f"{value:+.3f}" if signed else f"{value:.3f}"


def render_table(report):
    """Aligned-text table: one block per task, aggregate columns last."""
    langs = report.languages
    cols = langs + [IE, NON_IE, "all"]
    width = max(12, *(len(c) + 2 for c in cols))
    name_w = max(len(f"delta {r}") for r in report.scores) + 4

    lines = []
    for task in report.tasks:
        lines.append(f"== {TASK_TITLES.get(task, task)} ==")
        lines.append("".join(["approach".ljust(name_w)] + [c.rjust(width) for c in cols]))
        for regime in report.scores:
            is_delta = regime in report.deltas
            cells = []
            for lang in langs:
                if is_delta:
                    d = report.deltas[regime][lang][task]
                    cell = _fmt(d["delta"], signed=True)
                    if d["significant"]:
                        cell += "*"
                else:
                    cell = _fmt(report.means[regime][lang][task])
                cells.append(cell)
            agg = report.aggregates[regime][task]
            base_agg = report.aggregates.get(IN_LANG, {}).get(task, {})
            for name in (IE, NON_IE, "all"):
                if is_delta and base_agg.get(name) is not None and agg[name] is not None:
                    cells.append(_fmt(agg[name] - base_agg[name], signed=True))
                else:
                    cells.append(_fmt(agg[name]))
            label = f"delta {regime}" if is_delta else regime
            lines.append("".join([label.ljust(name_w)] + [c.rjust(width) for c in cells]))
        lines.append("")
    if any(report.deltas):
        lines.append("* = significant vs the nothing-shared baseline "
                     f"(Welch t-test, alpha={report.metadata.get('alpha', 0.05)})")
    return "\n".join(lines) + "\n"


def write_report(report, outdir):
    """Write report.json, scores.csv, table.txt, and score heatmaps."""
    os.makedirs(outdir, exist_ok=True)

    def atomic(path, text):
        tmp = f"{path}.tmp{os.getpid()}"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)

    atomic(os.path.join(outdir, "report.json"),
           json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n")
    atomic(os.path.join(outdir, "report_table.txt"), render_table(report))

    rows = [["regime", "language", "task", "mean", "per_seed"]]
    for regime, per_l in report.scores.items():
        for lang in report.languages:
            for task in report.tasks:
                seeds = per_l.get(lang, {}).get(task, [])
                mean = report.means[regime][lang][task]
                rows.append([
                    regime, lang, task,
                    "" if mean is None else f"{mean:.6f}",
                    ";".join("" if s is None else f"{s:.6f}" for s in seeds),
                ])
    tmp = os.path.join(outdir, f"scores.csv.tmp{os.getpid()}")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
    os.replace(tmp, os.path.join(outdir, "scores.csv"))

    for regime in report.scores:
        values = [[report.means[regime][lang][task] for task in report.tasks]
                  for lang in report.languages]
        figures.heatmap(
            values,
            report.languages,
            report.tasks,
            os.path.join(outdir, f"scores_{regime}.png"),
            title=f"{regime}: sentence-mean Spearman",
        )
