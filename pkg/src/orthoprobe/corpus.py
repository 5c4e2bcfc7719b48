"""Aligned corpora: treebank sentences paired with embedding matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, ContractError
from .model import DEP_DEPTH, DEP_DISTANCE, LEX_DEPTH, LEX_DISTANCE

#: ingestion default; bounds the O(n^2) pair losses
MAX_SENTENCE_TOKENS = 80


@dataclass(frozen=True)
class Corpus:
    """Sentences of one language/split, each paired with per-layer embeddings.

    Embedding matrices are float64 (token_count, dim); immutable after
    construction and safe to share across threads.
    """

    language: str
    split: str
    sentences: tuple
    embeddings: tuple  # per sentence: {layer: ndarray}

    def __len__(self):
        return len(self.sentences)

    @property
    def dim(self):
        for per_layer in self.embeddings:
            for mat in per_layer.values():
                return mat.shape[1]
        return 0


def align_corpus(language, split, sentences, embedding_sets, max_tokens=MAX_SENTENCE_TOKENS):
    """Pair treebank sentences with embedding records, in order.

    Extractors may have skipped over-long or misaligned sentences, so the
    embedding files can hold fewer records than the treebank.  Alignment
    walks both sequences greedily: a sentence whose token count does not
    match the next embedding record (in every layer) is taken to be one
    of those skips and dropped.  Sentences over ``max_tokens`` are dropped
    too.  Leftover embedding records mean inputs from different treebanks
    and raise AlignmentError.
    """
    layers = sorted(es.layer for es in embedding_sets)
    if len(set(layers)) != len(layers):
        raise AlignmentError(f"{language}/{split}: duplicate embedding layers {layers}")
    by_layer = {es.layer: es for es in embedding_sets}
    counts = {len(es.sentences) for es in embedding_sets}
    if len(counts) > 1:
        raise AlignmentError(
            f"{language}/{split}: embedding files disagree on sentence count {sorted(counts)}"
        )

    kept_sentences = []
    kept_embeddings = []
    cursor = 0
    n_records = counts.pop() if counts else 0
    for sent in sentences:
        if cursor >= n_records:
            break
        n = len(sent)
        if all(by_layer[l].sentences[cursor].shape[0] == n for l in layers):
            if n <= max_tokens:
                kept_sentences.append(sent)
                kept_embeddings.append(
                    {l: by_layer[l].sentences[cursor].astype(np.float64) for l in layers}
                )
            cursor += 1
        # else: extractor skipped this sentence; keep the record for the next one
    if cursor < n_records:
        raise AlignmentError(
            f"{language}/{split}: {n_records - cursor} embedding records "
            f"found no matching sentence"
        )
    return Corpus(
        language=language,
        split=split,
        sentences=tuple(kept_sentences),
        embeddings=tuple(kept_embeddings),
    )


def gold_for_task(sentence, task):
    """Gold values and validity mask of one sentence for one probing task.

    Returns ``(gold, mask)`` where gold is a float64 vector (depth tasks)
    or matrix (distance tasks).  Lexical tasks on a sentence without
    hypernymy annotation return an all-false mask.
    """
    n = len(sentence)
    if task == DEP_DEPTH:
        return sentence.dep_depths.astype(np.float64), np.ones(n, dtype=bool)
    if task == DEP_DISTANCE:
        mask = ~np.eye(n, dtype=bool)
        return sentence.dep_dists.astype(np.float64), mask
    if task == LEX_DEPTH:
        if sentence.lex_depths is None:
            return np.zeros(n), np.zeros(n, dtype=bool)
        return sentence.lex_depths.astype(np.float64), sentence.lex_depth_mask.copy()
    if task == LEX_DISTANCE:
        if sentence.lex_dists is None:
            return np.zeros((n, n)), np.zeros((n, n), dtype=bool)
        mask = sentence.lex_dist_mask & ~np.eye(n, dtype=bool)
        return sentence.lex_dists.astype(np.float64), mask
    raise ContractError(f"unknown task {task!r}")


def sample_training_sentences(corpus, cap, seed):
    """Uniform sample without replacement of min(cap, len) sentences.

    Deterministic in ``seed``; selected sentences keep corpus order.
    """
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    n = len(corpus)
    if n <= cap:
        return corpus
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=cap, replace=False))
    return Corpus(
        language=corpus.language,
        split=corpus.split,
        sentences=tuple(corpus.sentences[i] for i in idx),
        embeddings=tuple(corpus.embeddings[i] for i in idx),
    )
