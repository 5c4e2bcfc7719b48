"""Correlation metrics and analysis quantities."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .errors import ContractError

#: WALS areas that make up the two typological similarity groups
SYNTACTIC_AREAS = ("Nominal Syntax", "Word Order", "Simple Clauses", "Complex Sentences")
LEXICAL_AREAS = ("Nominal Categories", "Verb Categories", "Lexicon")


def average_ranks(values):
    """Ranks from 1..n with ties replaced by their group average."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_sentence(pred, gold):
    """Rank correlation with average-rank ties; None if undefined.

    Undefined when fewer than 2 items or either side is constant (the
    sentence is then skipped by the aggregate).
    """
    pred = np.asarray(pred, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if pred.shape != gold.shape:
        raise ContractError(f"shape mismatch: {pred.shape} vs {gold.shape}")
    if pred.size < 2:
        return None
    if np.all(pred == pred[0]) or np.all(gold == gold[0]):
        return None
    rp = average_ranks(pred)
    rg = average_ranks(gold)
    rp = rp - rp.mean()
    rg = rg - rg.mean()
    denom = np.sqrt((rp * rp).sum() * (rg * rg).sum())
    if denom == 0.0:
        return None
    return float((rp * rg).sum() / denom)


def spearman_items(pred, gold, mask):
    """Per-sentence Spearman over the valid entries of one prediction.

    For distance tasks pass the matrices and the pair mask; upper-triangle
    valid pairs become the item list.  For depth tasks pass vectors.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if pred.ndim == 2:
        iu = np.triu_indices(pred.shape[0], k=1)
        sel = np.asarray(mask, dtype=bool)[iu] if mask is not None else np.ones(len(iu[0]), bool)
        return spearman_sentence(pred[iu][sel], gold[iu][sel])
    sel = np.asarray(mask, dtype=bool) if mask is not None else np.ones(pred.shape, bool)
    return spearman_sentence(pred[sel], gold[sel])


def spearman_task(sentence_scores, lengths, min_tokens=5, max_tokens=50):
    """Mean sentence-level Spearman over sentences in the length window.

    ``sentence_scores`` may contain None for skipped sentences.  Returns
    None when nothing falls inside the window.
    """
    kept = [
        s
        for s, n in zip(sentence_scores, lengths)
        if s is not None and min_tokens <= n <= max_tokens
    ]
    if not kept:
        return None
    return float(np.mean(kept))


@dataclass
class SignificanceResult:
    p_value: Optional[float]
    significant: bool
    applicable: bool


def significance(samples_a, samples_b, alpha=0.05):
    """Two-sided unequal-variance t-test between two per-seed score samples.

    Fewer than 2 seeds on either side yields a not-applicable marker.  A
    degenerate test (zero variance in both identical samples) is reported
    as not significant.
    """
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        return SignificanceResult(p_value=None, significant=False, applicable=False)
    with warnings.catch_warnings():
        # near-identical samples trip scipy's precision warning; the nan
        # fallthrough below covers that case
        warnings.simplefilter("ignore", RuntimeWarning)
        t, p = stats.ttest_ind(a, b, equal_var=False)
    if not np.isfinite(p):
        return SignificanceResult(p_value=None, significant=False, applicable=True)
    return SignificanceResult(p_value=float(p), significant=bool(p < alpha), applicable=True)


def wals_hamming_similarity(features_a, features_b):
    """Fraction of jointly-present features with equal values.

    ``features_*`` map feature id -> categorical value; features missing
    on either side are skipped.  Returns None when nothing is shared.
    """
    shared = set(features_a) & set(features_b)
    if not shared:
        return None
    equal = sum(1 for f in shared if features_a[f] == features_b[f])
    return equal / len(shared)


def pearson_correlation(xs, ys):
    """Plain Pearson coefficient; None when either series is constant."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ContractError(f"shape mismatch: {xs.shape} vs {ys.shape}")
    if len(xs) < 3:
        return None
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0.0:
        return None
    return float((xc * yc).sum() / denom)


def selected_dimensions(dbar, threshold):
    """Indices where |dbar| reaches the (absolute) selection threshold."""
    dbar = np.asarray(dbar, dtype=np.float64)
    return set(np.nonzero(np.abs(dbar) >= threshold)[0].tolist())


def shared_dimension_count(scalers, threshold, relative=True):
    """Pairwise counts of dimensions jointly selected by task scaling vectors.

    ``scalers`` maps task -> scaling vector; a dimension is selected when
    its magnitude reaches ``threshold`` (a fraction of the task's largest
    magnitude when ``relative``, absolute otherwise).  Returns the task
    order and the symmetric count matrix whose diagonal holds per-task
    totals.
    """
    tasks = list(scalers)
    selections = []
    for task in tasks:
        dbar = np.asarray(scalers[task], dtype=np.float64)
        eps = threshold * float(np.max(np.abs(dbar))) if relative else threshold
        selections.append(selected_dimensions(dbar, eps))
    n = len(tasks)
    counts = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            counts[i, j] = len(selections[i] & selections[j])
    return tasks, counts
