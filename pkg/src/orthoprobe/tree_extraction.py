"""Dependency trees from predicted distances and depths, plus scoring.

The spanning tree minimizes total predicted distance (closest tokens get
attached); edges are then oriented away from the token with the smallest
predicted depth.  Attachment scores exclude punctuation.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError
from .treebank import PUNCT


def mst_undirected(dists):
    """Spanning tree with minimum total distance, as a set of index pairs.

    Kruskal over edges sorted by (weight, i, j); ties resolve to the
    lexicographically smallest edge.  Token indices are 0-based.
    """
    dists = np.asarray(dists, dtype=np.float64)
    if dists.ndim != 2 or dists.shape[0] != dists.shape[1]:
        raise ContractError(f"expected square matrix, got {dists.shape}")
    if not np.isfinite(dists).all():
        raise ContractError("non-finite entries in distance matrix")
    n = dists.shape[0]
    if n <= 1:
        return set()

    edges = sorted(
        ((dists[i, j], i, j) for i in range(n) for j in range(i + 1, n)),
        key=lambda e: (e[0], e[1], e[2]),
    )
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree = set()
    for _, i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            tree.add((i, j))
            if len(tree) == n - 1:
                break
    return tree


def orient_by_depth(edges, depths):
    """Turn an undirected spanning tree into head links using depths.

    The token with the smallest predicted depth becomes the root (ties
    go to the smallest index); edges are oriented away from it.  Returns
    1-based heads with 0 for the root.
    """
    depths = np.asarray(depths, dtype=np.float64)
    n = len(depths)
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)

    root = int(np.argmin(depths))  # argmin takes the first minimum
    heads = np.full(n, -1, dtype=np.int64)
    heads[root] = 0
    stack = [root]
    visited = {root}
    while stack:
        node = stack.pop()
        for nb in sorted(adj[node]):
            if nb not in visited:
                visited.add(nb)
                heads[nb] = node + 1
                stack.append(nb)
    if len(visited) != n:
        raise ContractError("edge set does not span all tokens")
    return heads


def extract_tree(dists, depths):
    """MST plus depth orientation in one step; returns (heads, edges)."""
    edges = mst_undirected(dists)
    heads = orient_by_depth(edges, depths)
    return heads, edges


def uas(pred_heads, gold_heads, upos):
    """Fraction of non-punctuation tokens with the correct head.

    Returns None for sentences with no scorable token.
    """
    pred_heads = np.asarray(pred_heads)
    gold_heads = np.asarray(gold_heads)
    if len(pred_heads) != len(gold_heads) or len(pred_heads) != len(upos):
        raise ContractError(
            f"length mismatch: {len(pred_heads)} vs {len(gold_heads)} vs {len(upos)}"
        )
    scored = np.array([u != PUNCT for u in upos], dtype=bool)
    if not scored.any():
        return None
    return float((pred_heads[scored] == gold_heads[scored]).mean())


def heads_to_edges(heads):
    """Unordered (child, head) index pairs of a head vector; root excluded."""
    return {
        (min(i, h - 1), max(i, h - 1))
        for i, h in enumerate(np.asarray(heads))
        if h != 0
    }


def uuas(pred_edges, gold_edges, upos):
    """Fraction of gold edges with no punctuation endpoint found in the prediction.

    Returns None when every gold edge touches punctuation.
    """
    scorable = {
        (i, j) for i, j in gold_edges if upos[i] != PUNCT and upos[j] != PUNCT
    }
    if not scorable:
        return None
    pred = {(min(i, j), max(i, j)) for i, j in pred_edges}
    hit = sum(1 for e in scorable if (min(e), max(e)) in pred)
    return hit / len(scorable)
