"""Analytic gradients of the probing objective.

A batch is a list of BatchItems, each one sentence for one (language,
task) stream.  The objective is

    sum over tasks of (mean per-sentence L1 loss for that task)
    + dso_weight * sum of the penalty over distinct trainable maps used,

with the L1 subgradient taken as 0 at exact ties.  Gradients are
returned for every trainable parameter the batch touches; frozen maps
never appear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import TrainingError
from .model import DEPTH_TASKS
from .probe import dso_gradient, dso_penalty, loss_depth, loss_distance, transform


@dataclass
class BatchItem:
    language: str
    task: str
    H: np.ndarray       # (n, dim) float64 embeddings
    gold: np.ndarray    # (n,) for depth tasks, (n, n) for distance tasks
    mask: Optional[np.ndarray] = None


def _distance_terms(S, gold, mask):
    """Per-sentence distance loss plus the sign weights for its gradient."""
    n = S.shape[0]
    diff = S[:, None, :] - S[None, :, :]
    pred = np.einsum("ijk,ijk->ij", diff, diff)
    valid = np.ones((n, n), dtype=bool) if mask is None else mask
    valid = valid & ~np.eye(n, dtype=bool)
    iu = np.triu_indices(n, k=1)
    sel = valid[iu]
    count = int(sel.sum())
    if count == 0:
        return None, None
    loss = float(np.abs(pred[iu][sel] - gold[iu][sel]).mean())
    signs = np.sign(pred - gold) * valid / count
    signs = np.triu(signs, k=1)
    signs = signs + signs.T
    return loss, signs


def _sentence_gradients(item, V, dbar):
    """Loss and gradients w.r.t. dbar, V for one sentence.

    Uses X = H V and the graph-Laplacian identity
    sum_{i<j} w_ij (x_i - x_j)^2 = x^T (diag(W 1) - W) x.
    """
    H = item.H
    X = H @ V
    S = X * dbar

    if item.task in DEPTH_TASKS:
        pred = np.einsum("ij,ij->i", S, S)
        valid = np.ones(len(pred), dtype=bool) if item.mask is None else item.mask
        count = int(valid.sum())
        if count == 0:
            return None, None, None
        loss = float(np.abs(pred[valid] - item.gold[valid]).mean())
        w = np.sign(pred - item.gold) * valid / count
        g_dbar = 2.0 * dbar * (w @ (X * X))
        g_X = 2.0 * (w[:, None] * X) * (dbar * dbar)
    else:
        loss, W = _distance_terms(S, item.gold, item.mask)
        if loss is None:
            return None, None, None
        lap = np.diag(W.sum(axis=1)) - W
        LX = lap @ X
        g_dbar = 2.0 * dbar * np.einsum("ij,ij->j", X, LX)
        g_X = 2.0 * LX * (dbar * dbar)
    g_V = H.T @ g_X
    return loss, g_dbar, g_V


def batch_objective(model, batch, dso_weight):
    """Scalar objective for a batch; the quantity batch_gradients differentiates."""
    task_losses = {}
    for item in batch:
        S = transform(model.map_for(item.language).V, model.scaler_for(item.task, item.language).dbar, item.H)
        if item.task in DEPTH_TASKS:
            pred = np.einsum("ij,ij->i", S, S)
            loss = loss_depth(pred, item.gold, item.mask)
        else:
            diff = S[:, None, :] - S[None, :, :]
            pred = np.einsum("ijk,ijk->ij", diff, diff)
            loss = loss_distance(pred, item.gold, item.mask)
        if loss is not None:
            task_losses.setdefault(item.task, []).append(loss)
    total = sum(float(np.mean(v)) for v in task_losses.values())
    if dso_weight:
        for key in sorted({model.map_key(item.language) for item in batch}):
            if model.maps[key].trainable:
                total += dso_weight * dso_penalty(model.maps[key].V)
    return total


def batch_gradients(model, batch, dso_weight):
    """Objective value, per-task mean losses, and gradients for a batch.

    Returns ``(objective, task_losses, grads)`` with grads keyed like
    ``ProbeModel.parameters()``.  Raises TrainingError on non-finite
    gradients.
    """
    grads = {}
    task_losses = {}
    per_task = {}

    def accumulate(name, g):
        if name in grads:
            grads[name] += g
        else:
            grads[name] = g

    # group sentence contributions by task first: each task loss is a mean
    # over its non-skipped sentences, so gradients scale by 1/count
    contributions = []
    for item in batch:
        vmap = model.map_for(item.language)
        scaler = model.scaler_for(item.task, item.language)
        loss, g_dbar, g_V = _sentence_gradients(item, vmap.V, scaler.dbar)
        if loss is None:
            continue
        per_task.setdefault(item.task, []).append(loss)
        contributions.append((item, loss, g_dbar, g_V))

    counts = {task: len(v) for task, v in per_task.items()}
    for item, loss, g_dbar, g_V in contributions:
        scale = 1.0 / counts[item.task]
        skey = f"scaler/{model.scaler_key(item.task, item.language)}"
        if model.scaler_for(item.task, item.language).trainable:
            accumulate(skey, scale * g_dbar)
        mkey = model.map_key(item.language)
        if model.maps[mkey].trainable:
            accumulate(f"map/{mkey}", scale * g_V)

    objective = sum(float(np.mean(v)) for v in per_task.values())
    task_losses = {task: float(np.mean(v)) for task, v in per_task.items()}

    if dso_weight:
        for key in sorted({model.map_key(item.language) for item in batch}):
            if model.maps[key].trainable:
                objective += dso_weight * dso_penalty(model.maps[key].V)
                accumulate(f"map/{key}", dso_weight * dso_gradient(model.maps[key].V))

    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
    return objective, task_losses, grads
