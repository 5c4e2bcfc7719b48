"""Joint multi-task, multi-language probe training.

One optimizer step consumes a mini-batch from a single (language, task)
stream; streams are interleaved round-robin within an epoch.  Dev loss
drives plateau learning-rate decay and early stopping.  Everything is
float64 and deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import gold_for_task, sample_training_sentences
from .errors import ConfigurationError
from .gradients import BatchItem, batch_gradients, batch_objective
from .model import DEPTH_TASKS, MAPPED_LANGS
from .optim import Adam, PlateauScheduler
from .probe import nearest_orthogonal


@dataclass
class TrainingConfig:
    learning_rate: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    lr_decay_factor: float = 0.5
    lr_patience: int = 2
    dso_weight: float = 1.0
    batch_size: int = 20
    max_epochs: int = 60
    early_stop_patience: int = 5
    seed: int = 0
    init_scale: float = 0.05
    train_cap: int = 4000
    fewshot_language: Optional[str] = None
    fewshot_size: Optional[int] = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.dso_weight < 0:
            raise ConfigurationError(f"dso_weight must be >= 0, got {self.dso_weight}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    stream_losses: dict
    dev_loss: float
    ortho_residuals: dict
    step_losses: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "type": "epoch",
            "epoch": self.epoch,
            "lr": self.lr,
            "train_loss": self.train_loss,
            "stream_losses": self.stream_losses,
            "dev_loss": self.dev_loss,
            "ortho_residuals": self.ortho_residuals,
        }


@dataclass
class TrainingLog:
    epochs: list = field(default_factory=list)
    best_epoch: int = -1
    best_dev_loss: float = float("inf")
    residuals_before_projection: dict = field(default_factory=dict)
    projection_mean_rel_diff: float = 0.0

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.epochs:
                fh.write(json.dumps(rec.to_json(), sort_keys=True) + "\n")
            fh.write(
                json.dumps(
                    {
                        "type": "final",
                        "best_epoch": self.best_epoch,
                        "best_dev_loss": self.best_dev_loss,
                        "residuals_before_projection": self.residuals_before_projection,
                        "projection_mean_rel_diff": self.projection_mean_rel_diff,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def _sentence_items(corpus, language, task, layer, indices=None):
    items = []
    rng = range(len(corpus)) if indices is None else indices
    for i in rng:
        gold, mask = gold_for_task(corpus.sentences[i], task)
        if not np.any(mask):
            continue
        H = corpus.embeddings[i][layer]
        items.append(BatchItem(language=language, task=task, H=H, gold=gold, mask=mask))
    return items


def dev_loss(model, dev_items_by_task):
    """Sum over tasks of the mean per-sentence dev loss."""
    total = 0.0
    seen = False
    for task, items in sorted(dev_items_by_task.items()):
        if not items:
            continue
        losses = [batch_objective(model, [item], dso_weight=0.0) for item in items]
        total += float(np.mean(losses))
        seen = True
    return total if seen else float("inf")


def _projection_shift(model, dev_items_by_task):
    """Mean |Δ|/|before| of predicted distances when maps are polar-projected."""
    before_vals = []
    after_vals = []
    projected = {k: nearest_orthogonal(m.V) for k, m in model.maps.items() if m.trainable}
    for task, items in sorted(dev_items_by_task.items()):
        if task in DEPTH_TASKS:
            continue
        for item in items:
            key = model.map_key(item.language)
            dbar = model.scaler_for(item.task, item.language).dbar
            V0 = model.maps[key].V
            V1 = projected.get(key, V0)
            for V, store in ((V0, before_vals), (V1, after_vals)):
                S = (item.H @ V) * dbar
                diff = S[:, None, :] - S[None, :, :]
                pred = np.einsum("ijk,ijk->ij", diff, diff)
                iu = np.triu_indices(pred.shape[0], k=1)
                store.append(pred[iu])
    if not before_vals:
        return 0.0
    before = np.concatenate(before_vals)
    after = np.concatenate(after_vals)
    return float(np.mean(np.abs(after - before) / (np.abs(before) + 1e-12)))


def train(model, train_corpora, dev_corpora, config):
    """Optimize the model in place; returns (model, TrainingLog).

    ``train_corpora``/``dev_corpora`` map language -> Corpus.  Every model
    language needs training data, except a few-shot target with size 0,
    which is excluded from the round-robin (and its map frozen under
    MappedLangs, since it cannot be learned without data).
    """
    target = config.fewshot_language
    required = [lang for lang in model.languages
                if not (lang == target and (config.fewshot_size or 0) == 0)]
    missing = [lang for lang in required if lang not in train_corpora]
    if missing:
        raise ConfigurationError(f"regime {model.regime}: no training data for {missing}")
    for lang in required:
        corpus = train_corpora[lang]
        for task in model.tasks:
            layer = model.layer_of_task[task]
            if len(corpus) and layer not in corpus.embeddings[0]:
                raise ConfigurationError(
                    f"{lang}: embeddings for layer {layer} (task {task}) missing"
                )

    train_sets = {}
    for lang in required:
        corpus = train_corpora[lang]
        if lang == target and config.fewshot_size is not None:
            corpus = sample_training_sentences(corpus, config.fewshot_size, [config.seed, 2])
        train_sets[lang] = corpus
    if target is not None and (config.fewshot_size or 0) == 0:
        if model.regime == MAPPED_LANGS and target in model.maps:
            model.maps[target].trainable = False

    # one stream per (language, task) with at least one scorable sentence
    streams = []
    for lang in model.languages:
        if lang not in train_sets:
            continue
        for task in model.tasks:
            layer = model.layer_of_task[task]
            items = _sentence_items(train_sets[lang], lang, task, layer)
            if items:
                streams.append((f"{lang}/{task}", items))

    dev_items_by_task = {task: [] for task in model.tasks}
    for lang in model.languages:
        if lang not in dev_corpora or lang not in train_sets:
            continue
        for task in model.tasks:
            layer = model.layer_of_task[task]
            dev_items_by_task[task].extend(
                _sentence_items(dev_corpora[lang], lang, task, layer)
            )

    optimizer = Adam(config.learning_rate, config.beta1, config.beta2, config.epsilon)
    scheduler = PlateauScheduler(optimizer, config.lr_decay_factor, config.lr_patience)
    shuffle_rng = np.random.default_rng([config.seed, 1])

    log = TrainingLog()
    best_params = None
    stale = 0

    for epoch in range(config.max_epochs):
        lr_at_start = optimizer.lr
        epoch_batches = []
        for _, items in streams:
            perm = shuffle_rng.permutation(len(items))
            epoch_batches.append(
                [perm[i:i + config.batch_size] for i in range(0, len(perm), config.batch_size)]
            )
        n_rounds = max((len(b) for b in epoch_batches), default=0)

        step_losses = []
        stream_sums = {name: [] for name, _ in streams}
        trainable = model.trainable_parameters()
        for round_idx in range(n_rounds):
            for (name, items), batches in zip(streams, epoch_batches):
                if round_idx >= len(batches):
                    continue
                batch = [items[i] for i in batches[round_idx]]
                objective, _, grads = batch_gradients(model, batch, config.dso_weight)
                optimizer.step(trainable, grads)
                step_losses.append(objective)
                stream_sums[name].append(objective)

        cur_dev = dev_loss(model, dev_items_by_task)
        record = EpochRecord(
            epoch=epoch,
            lr=lr_at_start,
            train_loss=float(np.mean(step_losses)) if step_losses else float("nan"),
            stream_losses={k: float(np.mean(v)) for k, v in stream_sums.items() if v},
            dev_loss=cur_dev,
            ortho_residuals=model.orthogonality_residuals(),
            step_losses=step_losses,
        )
        log.epochs.append(record)

        if cur_dev < log.best_dev_loss:
            log.best_dev_loss = cur_dev
            log.best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.trainable_parameters().items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                break
        scheduler.step(cur_dev)

    if best_params is not None:
        for name, value in best_params.items():
            model.set_parameter(name, value)

    log.residuals_before_projection = model.orthogonality_residuals()
    log.projection_mean_rel_diff = _projection_shift(model, dev_items_by_task)
    model.project_maps_orthogonal()
    return model, log
