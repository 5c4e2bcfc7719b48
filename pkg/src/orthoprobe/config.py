"""Run configuration: one TOML or JSON file driving every command.

Paths may contain environment variables (``$VAR``/``${VAR}``), which are
expanded before validation.  Validation checks that every referenced
file exists, so commands fail before any work starts.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .corpus import align_corpus, sample_training_sentences
from .embeddings import read_embeddings
from .errors import ConfigurationError
from .hypernymy import annotate_lexical, load_hypernymy_forest
from .model import DEFAULT_LAYERS, REGIMES, TASKS
from .training import TrainingConfig

SPLITS = ("train", "dev", "test")


@dataclass
class RunConfig:
    regime: str
    languages: list
    tasks: list
    layer_of_task: dict
    output_dir: str
    data: dict                      # language -> split -> {treebank, embeddings{layer: path}}
    forests: dict                   # language -> path or None
    families: dict                  # language -> "IE" | "non-IE"
    training: TrainingConfig
    eval_seeds: list
    min_tokens: int = 5
    max_tokens: int = 50
    alpha: float = 0.05
    selection_ratio: float = 0.05
    reference_language: str = ""
    fewshot_language: str = ""
    fewshot_sizes: list = field(default_factory=list)
    max_sentence_tokens: int = 80

    def languages_for_training(self):
        return list(self.languages)


def _expand(path):
    return os.path.expandvars(path)


def load_config(path):
    """Parse and validate a TOML/JSON run configuration file."""
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        if path.endswith(".json"):
            raw = json.load(fh)
        else:
            raw = tomllib.load(fh)
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def parse_config(raw, base_dir="."):
    run = raw.get("run", {})
    regime = run.get("regime", "InLang")
    if regime not in REGIMES:
        raise ConfigurationError(f"unknown regime {regime!r} (expected one of {REGIMES})")
    languages = list(run.get("languages", []))
    if not languages:
        raise ConfigurationError("run.languages must list at least one language")
    tasks = list(run.get("tasks", TASKS))
    bad = [t for t in tasks if t not in TASKS]
    if bad:
        raise ConfigurationError(f"unknown tasks {bad}")

    layer_of_task = dict(DEFAULT_LAYERS)
    for task, layer in raw.get("layers", {}).items():
        if task not in TASKS:
            raise ConfigurationError(f"layers: unknown task {task!r}")
        layer_of_task[task] = int(layer)

    training_raw = dict(raw.get("training", {}))
    fewshot = raw.get("fewshot", {})
    try:
        training = TrainingConfig(**training_raw)
    except TypeError as err:
        raise ConfigurationError(f"training section: {err}") from err

    evaluation = raw.get("evaluation", {})
    eval_seeds = list(evaluation.get("seeds", [training.seed]))
    if not eval_seeds:
        raise ConfigurationError("evaluation.seeds must be non-empty")

    def resolve(path):
        path = _expand(path)
        return path if os.path.isabs(path) else os.path.join(base_dir, path)

    data = {}
    forests = {}
    raw_data = raw.get("data", {})
    for lang in languages:
        if lang not in raw_data:
            raise ConfigurationError(f"data section missing for language {lang!r}")
        entry = raw_data[lang]
        forests[lang] = resolve(entry["forest"]) if "forest" in entry else None
        per_split = {}
        for split in SPLITS:
            if split not in entry:
                continue
            paths = entry[split]
            if "treebank" not in paths or "embeddings" not in paths:
                raise ConfigurationError(
                    f"data.{lang}.{split} needs 'treebank' and 'embeddings'"
                )
            embeddings = {}
            for key, value in paths["embeddings"].items():
                try:
                    embeddings[int(key)] = resolve(value)
                except (TypeError, ValueError):
                    raise ConfigurationError(
                        f"data.{lang}.{split}.embeddings: layer keys must be "
                        f"integers, got {key!r}"
                    ) from None
            per_split[split] = {
                "treebank": resolve(paths["treebank"]),
                "embeddings": embeddings,
            }
        data[lang] = per_split

    missing = []
    for lang, per_split in data.items():
        if forests[lang] and not os.path.exists(forests[lang]):
            missing.append(forests[lang])
        for paths in per_split.values():
            if not os.path.exists(paths["treebank"]):
                missing.append(paths["treebank"])
            missing.extend(p for p in paths["embeddings"].values() if not os.path.exists(p))
    if missing:
        raise ConfigurationError("missing input files: " + ", ".join(sorted(set(missing))))

    families = {lang: raw.get("families", {}).get(lang, "non-IE") for lang in languages}

    out_dir = run.get("output_dir", "out")
    out_dir = _expand(out_dir)
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base_dir, out_dir)

    return RunConfig(
        regime=regime,
        languages=languages,
        tasks=tasks,
        layer_of_task=layer_of_task,
        output_dir=out_dir,
        data=data,
        forests=forests,
        families=families,
        training=training,
        eval_seeds=eval_seeds,
        min_tokens=int(evaluation.get("min_tokens", 5)),
        max_tokens=int(evaluation.get("max_tokens", 50)),
        alpha=float(evaluation.get("alpha", 0.05)),
        selection_ratio=float(evaluation.get("selection_ratio", 0.05)),
        reference_language=evaluation.get("reference_language", languages[0]),
        fewshot_language=fewshot.get("language", ""),
        fewshot_sizes=list(fewshot.get("sizes", [])),
        max_sentence_tokens=int(run.get("max_sentence_tokens", 80)),
    )


def load_split(config, language, split):
    """Load one language/split into an aligned Corpus (lexical gold included)."""
    from .treebank import parse_conllu

    if split not in config.data.get(language, {}):
        raise ConfigurationError(f"no {split} data configured for {language!r}")
    paths = config.data[language][split]
    with open(paths["treebank"], "r", encoding="utf-8") as fh:
        sentences = parse_conllu(fh.read())
    if config.forests.get(language):
        with open(config.forests[language], "r", encoding="utf-8") as fh:
            forest = load_hypernymy_forest(fh.read())
        sentences = [annotate_lexical(s, forest) for s in sentences]
    emb_sets = [read_embeddings(p) for p in paths["embeddings"].values()]
    return align_corpus(
        language, split, sentences, emb_sets, max_tokens=config.max_sentence_tokens
    )


def load_training_data(config, seed):
    """Train/dev corpora for every configured language, with the train cap."""
    train, dev = {}, {}
    for lang in config.languages:
        if "train" in config.data.get(lang, {}):
            corpus = load_split(config, lang, "train")
            train[lang] = sample_training_sentences(
                corpus, config.training.train_cap, [seed, 3]
            )
        if "dev" in config.data.get(lang, {}):
            dev[lang] = load_split(config, lang, "dev")
    return train, dev
