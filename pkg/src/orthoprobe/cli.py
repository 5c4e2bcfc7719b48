"""Command-line entry points: train, evaluate, parse, analyze.

Exit codes: 0 success, 1 input/configuration error, 2 runtime error.
All outputs are written atomically (temp file + rename) under a lock
file that guards the output directory against concurrent runs.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys

import numpy as np

from . import figures
from .config import load_config, load_split, load_training_data
from .errors import ConfigurationError, OrthoprobeError, TrainingError
from .metrics import (
    LEXICAL_AREAS,
    SYNTACTIC_AREAS,
    pearson_correlation,
    shared_dimension_count,
    wals_hamming_similarity,
)
from .model import (
    DEP_DEPTH,
    DEP_DISTANCE,
    IN_LANG,
    build_model,
    load_checkpoint,
    save_checkpoint,
)
from .report import build_report, score_corpus, write_report
from .training import train
from .tree_extraction import extract_tree, heads_to_edges, uas, uuas
from .treebank import write_conllu


class _CliParser(argparse.ArgumentParser):
    def error(self, message):
        # argparse exits 2 by default; usage problems are input errors here
        self.print_usage(sys.stderr)
        raise ConfigurationError(message)


@contextlib.contextmanager
def output_lock(outdir):
    os.makedirs(outdir, exist_ok=True)
    lock_path = os.path.join(outdir, ".lock")
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigurationError(
            f"output directory {outdir} is locked by another run "
            f"(remove {lock_path} if stale)"
        )
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.remove(lock_path)


def _atomic_write(path, text):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic_rows(path, rows):
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)
    os.replace(tmp, path)


def run_tag(regime, seed, fewshot_language=None, fewshot_size=None):
    tag = f"{regime}_seed{seed}"
    if fewshot_language and fewshot_size is not None:
        tag += f"_{fewshot_language}{fewshot_size}"
    return tag


def cmd_train(args):
    config = load_config(args.config)
    regime = args.regime or config.regime
    seed = config.training.seed if args.seed is None else args.seed
    outdir = args.out or config.output_dir

    tcfg = config.training
    tcfg.seed = seed
    fewshot_language = args.fewshot_language or config.fewshot_language or None
    if args.fewshot is not None:
        if not fewshot_language:
            raise ConfigurationError("--fewshot N needs a fewshot language "
                                     "(--fewshot-language or config)")
        tcfg.fewshot_language = fewshot_language
        tcfg.fewshot_size = args.fewshot

    train_corpora, dev_corpora = load_training_data(config, seed)
    dims = {c.dim for c in train_corpora.values() if len(c)}
    if len(dims) != 1:
        raise ConfigurationError(f"inconsistent embedding dims across languages: {dims}")
    dim = dims.pop()

    model = build_model(
        regime,
        config.languages,
        dim,
        tasks=config.tasks,
        layer_of_task=config.layer_of_task,
        seed=seed,
        init_scale=tcfg.init_scale,
    )

    with output_lock(outdir):
        model, log = train(model, train_corpora, dev_corpora, tcfg)
        tag = run_tag(regime, seed, tcfg.fewshot_language, tcfg.fewshot_size)
        ckpt_path = os.path.join(outdir, f"checkpoint_{tag}.opck")
        tmp = f"{ckpt_path}.tmp{os.getpid()}"
        save_checkpoint(model, tmp, config=_training_manifest(tcfg))
        os.replace(tmp, ckpt_path)
        log_path = os.path.join(outdir, f"training_log_{tag}.jsonl")
        tmp = f"{log_path}.tmp{os.getpid()}"
        log.write_jsonl(tmp)
        os.replace(tmp, log_path)
        figures.loss_curves(log.epochs, os.path.join(outdir, f"loss_{tag}.png"),
                            title=f"{tag} (best epoch {log.best_epoch})")
    print(f"checkpoint: {ckpt_path}")
    print(f"log: {log_path}")
    print(f"best dev loss {log.best_dev_loss:.6f} at epoch {log.best_epoch}; "
          f"max orthogonality residual "
          f"{max(log.residuals_before_projection.values(), default=0.0):.4f}")
    return 0


def _training_manifest(tcfg):
    manifest = dict(vars(tcfg))
    return manifest


def cmd_evaluate(args):
    config = load_config(args.config)
    outdir = args.out or config.output_dir
    split = args.split

    scores = {}
    seed_of = {}
    for path in args.checkpoint:
        if not os.path.exists(path):
            raise ConfigurationError(f"checkpoint not found: {path}")
        model, manifest = load_checkpoint(path)
        for task in model.tasks:
            layer = model.layer_of_task[task]
            for lang in model.languages:
                have = config.data.get(lang, {}).get(split, {}).get("embeddings", {})
                if lang in config.data and split in config.data[lang] and layer not in have:
                    raise ConfigurationError(
                        f"{path}: task {task} probes layer {layer} but "
                        f"{lang}/{split} has layers {sorted(have)}"
                    )
        regime_scores = scores.setdefault(model.regime, {})
        seed_of.setdefault(model.regime, []).append(manifest.get("seed", model.seed))
        for lang in model.languages:
            if split not in config.data.get(lang, {}):
                continue
            corpus = load_split(config, lang, split)
            per_task = score_corpus(
                model, corpus, tasks=model.tasks,
                min_tokens=config.min_tokens, max_tokens=config.max_tokens,
            )
            lang_scores = regime_scores.setdefault(lang, {})
            for task, value in per_task.items():
                lang_scores.setdefault(task, []).append(value)

    metadata = {
        "spearman_aggregation": "sentence_mean",
        "length_window": [config.min_tokens, config.max_tokens],
        "significance_test": "two-sided unequal-variance t-test (toolkit convention)",
        "alpha": config.alpha,
        "split": split,
        "seeds": seed_of,
    }
    report = build_report(scores, config.families, alpha=config.alpha, metadata=metadata)
    with output_lock(outdir):
        write_report(report, outdir)
    print(open(os.path.join(outdir, "report_table.txt"), encoding="utf-8").read())
    print(f"report: {os.path.join(outdir, 'report.json')}")
    return 0


def cmd_parse(args):
    config = load_config(args.config)
    outdir = args.out or config.output_dir
    split = args.split

    summary_rows = []
    with output_lock(outdir):
        for path in args.checkpoint:
            if not os.path.exists(path):
                raise ConfigurationError(f"checkpoint not found: {path}")
            model, manifest = load_checkpoint(path)
            language = args.language or manifest.get("fewshot_language")
            if not language:
                raise ConfigurationError(
                    f"{path}: no --language given and the checkpoint has no "
                    f"few-shot target"
                )
            if language not in model.languages:
                raise ConfigurationError(f"{path}: language {language!r} not in model")
            for task in (DEP_DISTANCE, DEP_DEPTH):
                if task not in model.tasks:
                    raise ConfigurationError(f"{path}: checkpoint lacks task {task}")
            corpus = load_split(config, language, split)
            layer = model.layer_of_task[DEP_DISTANCE]

            pred_heads_all = []
            uas_vals, uuas_vals = [], []
            for sent, emb in zip(corpus.sentences, corpus.embeddings):
                if args.gold:
                    dists = sent.dep_dists.astype(float)
                    depths = sent.dep_depths.astype(float)
                else:
                    dists = model.predict(DEP_DISTANCE, language, emb[layer])
                    depths = model.predict(
                        DEP_DEPTH, language, emb[model.layer_of_task[DEP_DEPTH]]
                    )
                heads, edges = extract_tree(dists, depths)
                pred_heads_all.append(heads)
                s_uas = uas(heads, sent.heads, sent.upos)
                s_uuas = uuas(edges, heads_to_edges(sent.heads), sent.upos)
                if s_uas is not None:
                    uas_vals.append(s_uas)
                if s_uuas is not None:
                    uuas_vals.append(s_uuas)

            fewshot_size = manifest.get("fewshot_size")
            tag = run_tag(model.regime, manifest.get("seed", model.seed),
                          manifest.get("fewshot_language"), fewshot_size)
            parsed_path = os.path.join(outdir, f"parsed_{language}_{tag}.conllu")
            _atomic_write(parsed_path, write_conllu(corpus.sentences, pred_heads_all))
            summary_rows.append({
                "language": language,
                "regime": model.regime,
                "seed": manifest.get("seed", model.seed),
                "fewshot_size": fewshot_size,
                "gold_injection": bool(args.gold),
                "sentences": len(corpus),
                "uas": float(np.mean(uas_vals)) if uas_vals else None,
                "uuas": float(np.mean(uuas_vals)) if uuas_vals else None,
                "parsed": os.path.basename(parsed_path),
            })

        rows = [["language", "regime", "seed", "fewshot_size", "gold_injection",
                 "sentences", "uas", "uuas", "parsed"]]
        for r in summary_rows:
            rows.append([r["language"], r["regime"], r["seed"],
                         "" if r["fewshot_size"] is None else r["fewshot_size"],
                         int(r["gold_injection"]), r["sentences"],
                         "" if r["uas"] is None else f"{r['uas']:.4f}",
                         "" if r["uuas"] is None else f"{r['uuas']:.4f}",
                         r["parsed"]])
        _atomic_rows(os.path.join(outdir, "parse_summary.csv"), rows)
        _atomic_write(os.path.join(outdir, "parse_summary.json"),
                      json.dumps(summary_rows, indent=2, sort_keys=True) + "\n")
        if any(r["fewshot_size"] is not None for r in summary_rows):
            figures.fewshot_curves(summary_rows,
                                   os.path.join(outdir, "fewshot_uas.png"),
                                   metric="uas", title="attachment vs target supervision")
    for r in summary_rows:
        shot = "zero-shot" if not r["fewshot_size"] else f"N={r['fewshot_size']}"
        uas_s = "n/a" if r["uas"] is None else f"{r['uas']:.4f}"
        uuas_s = "n/a" if r["uuas"] is None else f"{r['uuas']:.4f}"
        print(f"{r['language']} {r['regime']} {shot}: UAS {uas_s} UUAS {uuas_s} "
              f"({r['sentences']} sentences)")
    return 0


def _load_features_csv(path):
    features = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            lang = row["language"]
            area = row["area"]
            features.setdefault(lang, {"syntactic": {}, "lexical": {}})
            if area in SYNTACTIC_AREAS:
                features[lang]["syntactic"][row["feature_id"]] = row["value"]
            elif area in LEXICAL_AREAS:
                features[lang]["lexical"][row["feature_id"]] = row["value"]
    return features


def _load_sizes_csv(path):
    sizes = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            sizes[row["language"]] = float(row["tokens"])
    return sizes


def cmd_analyze(args):
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    features = _load_features_csv(args.features) if args.features else {}
    sizes = _load_sizes_csv(args.sizes) if args.sizes else {}
    outdir = args.out
    reference = args.reference_language or report["languages"][0]

    rows = [["task", "series", "feature", "pearson_r", "n_languages"]]
    heat_rows, heat_labels = [], []
    with output_lock(outdir):
        series_defs = [("InLang", None)] + [("delta " + r, r) for r in report.get("deltas", {})]
        for task in report["tasks"]:
            area = "syntactic" if task.startswith("dep") else "lexical"
            for series_name, delta_regime in series_defs:
                if delta_regime is None:
                    if IN_LANG not in report["means"]:
                        continue
                    values = {l: report["means"][IN_LANG][l].get(task)
                              for l in report["languages"]}
                else:
                    values = {l: report["deltas"][delta_regime][l][task]["delta"]
                              for l in report["languages"]}
                pairs = []
                for feature_name, feature_values in (
                    (f"wals_{area}_similarity_to_{reference}",
                     _similarities(features, reference, area)),
                    ("wiki_tokens", sizes),
                ):
                    xs, ys = [], []
                    for lang in report["languages"]:
                        if lang == reference and feature_name.startswith("wals"):
                            continue
                        v = values.get(lang)
                        f = feature_values.get(lang)
                        if v is None or f is None:
                            continue
                        xs.append(f)
                        ys.append(v)
                    r = pearson_correlation(xs, ys) if len(xs) >= 3 else None
                    rows.append([task, series_name, feature_name,
                                 "" if r is None else f"{r:.4f}", len(xs)])
                    pairs.append(r)
                heat_rows.append(pairs)
                heat_labels.append(f"{task} / {series_name}")

        _atomic_rows(os.path.join(outdir, "feature_correlations.csv"), rows)
        if heat_rows:
            figures.heatmap(
                heat_rows, heat_labels, ["typological similarity", "wiki tokens"],
                os.path.join(outdir, "feature_correlations.png"),
                title="Pearson: score series vs language features", fmt="{:.2f}",
                cmap="RdBu",
            )

        if args.checkpoint:
            model, _ = load_checkpoint(args.checkpoint)
            scalers = {}
            for lang_suffix in ([""] if model.regime != IN_LANG
                                else [f"/{l}" for l in model.languages[:1]]):
                for task in model.tasks:
                    scalers[task] = model.scalers[f"{task}{lang_suffix}"].dbar
            tasks, counts = shared_dimension_count(
                scalers, threshold=args.selection_ratio, relative=True
            )
            sep_rows = [[""] + tasks]
            for t, row in zip(tasks, counts):
                sep_rows.append([t] + [int(x) for x in row])
            _atomic_rows(os.path.join(outdir, "separation.csv"), sep_rows)
            figures.heatmap(
                [[int(x) for x in row] for row in counts], tasks, tasks,
                os.path.join(outdir, "separation.png"),
                title=f"shared selected dimensions "
                      f"(|d| >= {args.selection_ratio:g} * max)",
                fmt="{:.0f}", cmap="Blues",
            )
    print(f"correlations: {os.path.join(outdir, 'feature_correlations.csv')}")
    if args.checkpoint:
        print(f"separation matrix: {os.path.join(outdir, 'separation.csv')}")
    return 0


def _similarities(features, reference, area):
    if reference not in features:
        return {}
    out = {}
    for lang, groups in features.items():
        if lang == reference:
            continue
        sim = wals_hamming_similarity(groups[area], features[reference][area])
        if sim is not None:
            out[lang] = sim
    return out


def build_parser():
    parser = _CliParser(prog="orthoprobe",
                        description="orthogonal structural probes over "
                                    "multilingual embeddings")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a probe", parents=[])
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--regime", choices=["InLang", "MappedLangs", "AllLangs"])
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--fewshot", type=int,
                         help="number of target-language training sentences")
    p_train.add_argument("--fewshot-language")
    p_train.add_argument("--out")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="score checkpoints and build a report")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--checkpoint", action="append", required=True)
    p_eval.add_argument("--split", default="test", choices=["dev", "test"])
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=cmd_evaluate)

    p_parse = sub.add_parser("parse", help="extract dependency trees and score them")
    p_parse.add_argument("--config", required=True)
    p_parse.add_argument("--checkpoint", action="append", required=True)
    p_parse.add_argument("--language")
    p_parse.add_argument("--split", default="test", choices=["dev", "test", "train"])
    p_parse.add_argument("--gold", action="store_true",
                         help="feed gold distances/depths instead of probe "
                              "predictions (pipeline check)")
    p_parse.add_argument("--out")
    p_parse.set_defaults(func=cmd_parse)

    p_an = sub.add_parser("analyze", help="feature correlations and scaling-vector "
                                          "dimension separation")
    p_an.add_argument("--report", required=True, help="report.json from evaluate")
    p_an.add_argument("--features", help="CSV: language,feature_id,value,area")
    p_an.add_argument("--sizes", help="CSV: language,tokens")
    p_an.add_argument("--checkpoint", help="checkpoint for the separation matrix")
    p_an.add_argument("--reference-language")
    p_an.add_argument("--selection-ratio", type=float, default=0.05)
    p_an.add_argument("--out", required=True)
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigurationError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OrthoprobeError as err:
        # data/format problems are input errors; training blowups are not
        code = 2 if isinstance(err, TrainingError) else 1
        print(f"error: {err}", file=sys.stderr)
        return code
    except Exception as err:  # noqa: BLE001
        print(f"runtime error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
