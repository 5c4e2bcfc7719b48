"""Subword-to-word pooling."""

from __future__ import annotations

import numpy as np


def pool_words(hidden, word_ids, n_words):
    """Arithmetic mean of each word's subword vectors.

    ``hidden`` is (n_subwords, dim); ``word_ids`` maps each subword to its
    word index or None for special tokens.  Returns (n_words, dim) float32,
    or None when some word received no subword (misalignment: the caller
    skips the sentence).  A single-subword word keeps its vector bit-exactly.
    """
    hidden = np.asarray(hidden, dtype=np.float32)
    groups = [[] for _ in range(n_words)]
    for pos, wid in enumerate(word_ids):
        if wid is None:
            continue
        if not 0 <= wid < n_words:
            return None
        groups[wid].append(pos)
    if any(not g for g in groups):
        return None
    out = np.empty((n_words, hidden.shape[1]), dtype=np.float32)
    for wid, positions in enumerate(groups):
        if len(positions) == 1:
            out[wid] = hidden[positions[0]]
        else:
            out[wid] = hidden[positions].mean(axis=0, dtype=np.float32)
    return out
