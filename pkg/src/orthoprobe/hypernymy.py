"""Hypernymy forests and lexical gold annotation.

A forest file is UTF-8 text with one ``node_id<TAB>parent_id`` per line;
``-`` as parent marks a tree root.  Tokens point into the forest via
their ``LexNode`` ids; depth and pairwise tree distance of those nodes
become the gold lexical quantities.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import AnnotationError, TreeStructureError


class HypernymyForest:
    """Parent links over node ids, split into trees."""

    def __init__(self, parents):
        self.parents = dict(parents)
        self.depths = {}
        self.roots = {}
        for node in self.parents:
            self._resolve(node)

    def _resolve(self, node):
        if node in self.depths:
            return
        path = []
        cur = node
        while cur not in self.depths and self.parents[cur] is not None:
            path.append(cur)
            cur = self.parents[cur]
            if len(path) > len(self.parents):
                raise TreeStructureError(f"cycle in hypernymy forest at node {node!r}")
        if self.parents[cur] is None:
            self.depths[cur] = 0
            self.roots[cur] = cur
        base_depth = self.depths[cur]
        base_root = self.roots[cur]
        for k, n in enumerate(reversed(path)):
            self.depths[n] = base_depth + k + 1
            self.roots[n] = base_root

    def __contains__(self, node):
        return node in self.parents

    def depth(self, node):
        if node not in self.depths:
            raise AnnotationError(f"unknown hypernymy node {node!r}")
        return self.depths[node]

    def same_tree(self, a, b):
        return self.roots[a] == self.roots[b]

    def distance(self, a, b):
        """Tree distance between two nodes, or None when in different trees."""
        for node in (a, b):
            if node not in self.parents:
                raise AnnotationError(f"unknown hypernymy node {node!r}")
        if not self.same_tree(a, b):
            return None
        ancestors_a = {}
        cur, d = a, 0
        while True:
            ancestors_a[cur] = d
            if self.parents[cur] is None:
                break
            cur, d = self.parents[cur], d + 1
        cur, d = b, 0
        while cur not in ancestors_a:
            cur, d = self.parents[cur], d + 1
        return ancestors_a[cur] + d


def load_hypernymy_forest(text):
    """Parse a ``node_id<TAB>parent_id`` listing into a HypernymyForest.

    Parents that never appear on their own line are taken to be implicit
    roots.
    """
    parents = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise AnnotationError(f"line {line_no}: expected 'node<TAB>parent', got {raw!r}")
        node, parent = cols
        parents[node] = None if parent == "-" else parent
    for parent in [p for p in parents.values() if p is not None]:
        if parent not in parents:
            parents[parent] = None
    return HypernymyForest(parents)


def annotate_lexical(sentence, forest):
    """Fill the lexical gold fields of a sentence from a hypernymy forest.

    A token is valid for lexical depth iff it has a LexNode; a pair is
    valid for lexical distance iff both tokens have LexNodes in the same
    tree.  Everything else is masked out.
    """
    n = len(sentence)
    depths = np.zeros(n, dtype=np.float64)
    depth_mask = np.zeros(n, dtype=bool)
    dists = np.zeros((n, n), dtype=np.float64)
    dist_mask = np.zeros((n, n), dtype=bool)

    nodes = []
    for tok in sentence.tokens:
        if tok.lexnode is not None and tok.lexnode not in forest:
            raise AnnotationError(
                f"sentence {sentence.sent_id!r}: unknown hypernymy node {tok.lexnode!r}"
            )
        nodes.append(tok.lexnode)

    for i, node in enumerate(nodes):
        if node is None:
            continue
        depths[i] = forest.depth(node)
        depth_mask[i] = True
    for i in range(n):
        if nodes[i] is None:
            continue
        for j in range(i + 1, n):
            if nodes[j] is None:
                continue
            d = forest.distance(nodes[i], nodes[j])
            if d is None:
                continue
            dists[i, j] = dists[j, i] = d
            dist_mask[i, j] = dist_mask[j, i] = True

    return replace(
        sentence,
        lex_depths=depths,
        lex_depth_mask=depth_mask,
        lex_dists=dists,
        lex_dist_mask=dist_mask,
    )
