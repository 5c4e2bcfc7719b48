"""Probe predictions, losses, and the orthogonality penalty.

Two probe families operate on per-sentence embedding matrices H (n x dim):

* baseline: a free projection B (rank x dim); squared distances between
  projected tokens approximate tree distances, squared norms approximate
  tree depths.
* factored: a square map V composed with an elementwise scaling vector,
  d_k * (V^T h)_k.  With V orthogonal this spans the same predictions as
  the baseline while separating rotation from per-task dimension choice.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError


def _check_h(H, dim, name="H"):
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[1] != dim:
        raise ContractError(f"{name}: expected (*, {dim}), got {H.shape}")
    return H


def _pairwise_sq_dists(S):
    diff = S[:, None, :] - S[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def predict_distances_baseline(B, H):
    """Squared distances ||B(h_i - h_j)||^2 for all token pairs."""
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2:
        raise ContractError(f"B: expected a matrix, got shape {B.shape}")
    H = _check_h(H, B.shape[1])
    return _pairwise_sq_dists(H @ B.T)


def predict_depths_baseline(B, H):
    """Squared norms ||B h_i||^2 per token."""
    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2:
        raise ContractError(f"B: expected a matrix, got shape {B.shape}")
    H = _check_h(H, B.shape[1])
    P = H @ B.T
    return np.einsum("ij,ij->i", P, P)


def transform(V, dbar, H):
    """Rows d ⊙ V^T h_i for a whole sentence."""
    V = np.asarray(V, dtype=np.float64)
    dbar = np.asarray(dbar, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ContractError(f"V: expected square matrix, got {V.shape}")
    if dbar.shape != (V.shape[0],):
        raise ContractError(f"scaling vector: expected ({V.shape[0]},), got {dbar.shape}")
    H = _check_h(H, V.shape[0])
    return (H @ V) * dbar


def predict_distances(V, dbar, H):
    """Squared distances ||d ⊙ V^T (h_i - h_j)||^2 for all token pairs."""
    return _pairwise_sq_dists(transform(V, dbar, H))


def predict_depths(V, dbar, H):
    """Squared norms ||d ⊙ V^T h_i||^2 per token."""
    S = transform(V, dbar, H)
    return np.einsum("ij,ij->i", S, S)


def loss_distance(pred, gold, mask=None):
    """Per-sentence L1 between predicted and gold squared distances.

    Averages |pred - gold| over valid off-diagonal pairs; returns None
    when the sentence has no valid pair (caller skips it).
    """
    pred = np.asarray(pred, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if pred.shape != gold.shape or pred.ndim != 2:
        raise ContractError(f"shape mismatch: pred {pred.shape}, gold {gold.shape}")
    n = pred.shape[0]
    valid = np.ones((n, n), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if valid.shape != pred.shape:
        raise ContractError(f"mask shape {valid.shape} != {pred.shape}")
    valid = valid & ~np.eye(n, dtype=bool)
    iu = np.triu_indices(n, k=1)
    sel = valid[iu]
    if not sel.any():
        return None
    return float(np.abs(pred[iu][sel] - gold[iu][sel]).mean())


def loss_depth(pred, gold, mask=None):
    """Per-sentence L1 between predicted and gold squared depths."""
    pred = np.asarray(pred, dtype=np.float64)
    gold = np.asarray(gold, dtype=np.float64)
    if pred.shape != gold.shape or pred.ndim != 1:
        raise ContractError(f"shape mismatch: pred {pred.shape}, gold {gold.shape}")
    valid = np.ones(len(pred), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if valid.shape != pred.shape:
        raise ContractError(f"mask shape {valid.shape} != {pred.shape}")
    if not valid.any():
        return None
    return float(np.abs(pred[valid] - gold[valid]).mean())


def dso_penalty(V):
    """Double soft orthogonality penalty ||V^T V - I||_F^2 + ||V V^T - I||_F^2."""
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ContractError(f"V: expected square matrix, got {V.shape}")
    eye = np.eye(V.shape[0])
    a = V.T @ V - eye
    b = V @ V.T - eye
    return float(np.sum(a * a) + np.sum(b * b))


def dso_gradient(V):
    """Gradient of dso_penalty with respect to V."""
    V = np.asarray(V, dtype=np.float64)
    eye = np.eye(V.shape[0])
    return 4.0 * (V @ (V.T @ V - eye) + (V @ V.T - eye) @ V)


def orthogonality_residual(V):
    """||V^T V - I||_F, the deviation from orthogonality."""
    V = np.asarray(V, dtype=np.float64)
    return float(np.linalg.norm(V.T @ V - np.eye(V.shape[0])))


def nearest_orthogonal(V):
    """Polar projection: the orthogonal matrix closest to V in Frobenius norm."""
    U, _, Wt = np.linalg.svd(np.asarray(V, dtype=np.float64))
    return U @ Wt
