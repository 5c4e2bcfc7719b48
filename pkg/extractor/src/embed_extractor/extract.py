"""Run a pretrained encoder over treebank sentences and write OPEMB1 files.

Layer indexing counts the embedding output as layer 0, so "layer 7" is
the hidden state after the 7th transformer block.  Words are mean-pooled
over their subwords; both conventions are recorded in the output header.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .conllu_words import read_sentences
from .opemb import write_opemb

logger = logging.getLogger(__name__)


@dataclass
class ExtractionJob:
    model: str                     # HF model id or local path
    treebank: str                  # CoNLL-U file
    layers: list                   # hidden-state indices, embedding output = 0
    output_paths: dict             # layer -> path
    language: str = "und"
    max_seq_length: int = 512
    batch_size: int = 16


@dataclass
class ExtractionResult:
    written: int
    skipped: list = field(default_factory=list)  # (sentence index, reason)
    output_paths: dict = field(default_factory=dict)


def _encode_batch(model, tokenizer, batch_words, layers, max_seq_length):
    """Per-layer pooled word matrices for a batch; None entries are skips."""
    import torch

    from .pooling import pool_words

    enc = tokenizer(
        batch_words,
        is_split_into_words=True,
        padding=True,
        return_tensors="pt",
    )
    with torch.no_grad():
        out = model(**enc, output_hidden_states=True)
    hidden = [h.numpy() for h in out.hidden_states]

    results = []
    for bi, words in enumerate(batch_words):
        word_ids = enc.word_ids(batch_index=bi)
        n_subwords = int(enc["attention_mask"][bi].sum())
        if n_subwords > max_seq_length:
            results.append(("too long", None))
            continue
        per_layer = {}
        ok = True
        for layer in layers:
            pooled = pool_words(hidden[layer][bi, :n_subwords], word_ids[:n_subwords],
                                len(words))
            if pooled is None or not np.isfinite(pooled).all():
                ok = False
                break
            per_layer[layer] = pooled
        results.append((None, per_layer) if ok else ("tokenizer/word misalignment", None))
    return results


def extract(job):
    """Produce one OPEMB1 file per requested layer; returns an ExtractionResult.

    Sentences that exceed the length limit or cannot be aligned to words
    are skipped and logged, never silently padded.
    """
    import torch

    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(job.model)
    model = AutoModel.from_pretrained(job.model)
    model.eval()
    torch.set_grad_enabled(False)

    n_layers = model.config.num_hidden_layers
    bad = [l for l in job.layers if not 0 <= l <= n_layers]
    if bad:
        raise ValueError(f"layers {bad} not in encoder (0..{n_layers})")
    missing = [l for l in job.layers if l not in job.output_paths]
    if missing:
        raise ValueError(f"no output path for layers {missing}")

    with open(job.treebank, "r", encoding="utf-8") as fh:
        sentences = read_sentences(fh.read())

    kept = {layer: [] for layer in job.layers}
    skipped = []
    # tokenizer model_max_length guards position embeddings; the job limit
    # may be stricter
    limit = min(job.max_seq_length, getattr(tokenizer, "model_max_length", 10 ** 9))

    for start in range(0, len(sentences), job.batch_size):
        batch = sentences[start:start + job.batch_size]
        for offset, (reason, per_layer) in enumerate(
            _encode_batch(model, tokenizer, batch, job.layers, limit)
        ):
            idx = start + offset
            if reason is not None:
                skipped.append((idx, reason))
                logger.warning("skipping sentence %d: %s", idx, reason)
                continue
            for layer in job.layers:
                kept[layer].append(per_layer[layer])

    dim = model.config.hidden_size
    metadata = {
        "model": job.model,
        "pooling": "mean-over-subwords",
        "layer_indexing": "embedding-output-is-0",
    }
    for layer in job.layers:
        write_opemb(job.output_paths[layer], job.language, layer, dim, kept[layer],
                    metadata=metadata)
        logger.info("wrote %d sentences to %s", len(kept[layer]),
                    job.output_paths[layer])
    return ExtractionResult(
        written=len(sentences) - len(skipped),
        skipped=skipped,
        output_paths=dict(job.output_paths),
    )
