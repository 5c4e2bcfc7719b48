"""Synthetic corpora with a planted probe solution.

Each token is embedded so that scaling the rotated embedding by a chosen
sparse vector reproduces its tree geometry exactly: coordinates on the
support hold path-edge indicators divided by the scaling value, so
``||d* ⊙ V*^T (h_i - h_j)||^2`` equals the tree distance and the norm
form equals the depth.  Off-support coordinates carry optional Gaussian
noise the probe must learn to suppress.
"""

from __future__ import annotations

import heapq
import os
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .embeddings import EmbeddingSet, write_embeddings
from .treebank import (
    SentenceAnnotation,
    Token,
    compute_tree_depths,
    compute_tree_distances,
    write_conllu,
)


def random_orthogonal(dim, rng):
    """Haar-ish random orthogonal matrix via QR of a Gaussian matrix."""
    Q, R = np.linalg.qr(rng.normal(size=(dim, dim)))
    return Q * np.sign(np.diag(R))


def random_tree_heads(n, rng):
    """Random labeled tree as 1-based heads (0 = root): uniform Prüfer decode."""
    if n == 1:
        return np.array([0], dtype=np.int64)
    if n == 2:
        return np.array([0, 1], dtype=np.int64)
    prufer = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    for x in prufer:
        degree[x] += 1
    edges = []
    leaves = sorted(i for i in range(n) if degree[i] == 1)
    heapq.heapify(leaves)
    for x in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, int(x))
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))

    # orient away from node 0
    adj = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    heads = np.zeros(n, dtype=np.int64)
    stack = [0]
    seen = {0}
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if nb not in seen:
                seen.add(nb)
                heads[nb] = node + 1
                stack.append(nb)
    return heads


@dataclass
class PlantedProbe:
    """The hidden solution a synthetic language is built around."""

    dim: int
    support: np.ndarray      # indices of active dimensions
    dbar: np.ndarray         # planted scaling vector (zero off support)
    rotation: np.ndarray     # planted orthogonal map V*
    noise_scale: float = 0.0


def make_planted_probe(dim, support_size, rng, rotation=None, noise_scale=0.0,
                       dbar_range=(0.5, 2.0), signed=True):
    support = np.sort(rng.choice(dim, size=support_size, replace=False))
    dbar = np.zeros(dim)
    vals = rng.uniform(dbar_range[0], dbar_range[1], size=support_size)
    if signed:
        vals *= rng.choice([-1.0, 1.0], size=support_size)
    dbar[support] = vals
    if rotation is None:
        rotation = random_orthogonal(dim, rng)
    return PlantedProbe(dim=dim, support=support, dbar=dbar, rotation=rotation,
                        noise_scale=noise_scale)


def plant_sentence(n, probe, rng, layers=(7,), sent_id=""):
    """One synthetic sentence whose embeddings encode its tree exactly."""
    if n - 1 > len(probe.support):
        raise ValueError(
            f"sentence of {n} tokens needs {n - 1} support dimensions, "
            f"probe has {len(probe.support)}"
        )
    heads = random_tree_heads(n, rng)
    depths = compute_tree_depths(heads)
    dists = compute_tree_distances(heads)

    # path-edge indicators: edge ids are the non-root tokens they point to
    z = np.zeros((n, probe.dim))
    for i in range(n):
        j = i
        while heads[j] != 0:
            z[i, probe.support[_edge_slot(j, heads)]] = 1.0
            j = heads[j] - 1

    u = np.zeros((n, probe.dim))
    u[:, probe.support] = z[:, probe.support] / probe.dbar[probe.support]
    if probe.noise_scale > 0:
        off = np.setdiff1d(np.arange(probe.dim), probe.support)
        u[:, off] = rng.normal(0.0, probe.noise_scale, size=(n, len(off)))
    H = u @ probe.rotation.T

    tokens = tuple(
        Token(form=f"w{i + 1}", upos="NOUN", head=int(heads[i])) for i in range(n)
    )
    sent = SentenceAnnotation(
        tokens=tokens, dep_depths=depths, dep_dists=dists, sent_id=sent_id
    )
    return sent, {layer: H.copy() for layer in layers}


def _edge_slot(token_idx, heads):
    # stable 0..n-2 numbering of edges: skip the root's slot
    root = int(np.nonzero(np.asarray(heads) == 0)[0][0])
    return token_idx if token_idx < root else token_idx - 1


def make_planted_corpus(language, split, n_sentences, probe, rng,
                        token_range=(5, 15), layers=(7,)):
    sentences, embeddings = [], []
    for idx in range(n_sentences):
        n = int(rng.integers(token_range[0], token_range[1] + 1))
        sent, emb = plant_sentence(n, probe, rng, layers, sent_id=f"{language}-{split}-{idx}")
        sentences.append(sent)
        embeddings.append(emb)
    return Corpus(language=language, split=split,
                  sentences=tuple(sentences), embeddings=tuple(embeddings))


def write_corpus_fixture(corpus, out_dir, layers=(7,)):
    """Write a corpus as CoNLL-U plus OPEMB1 files; returns the path map."""
    os.makedirs(out_dir, exist_ok=True)
    base = f"{corpus.language}_{corpus.split}"
    treebank_path = os.path.join(out_dir, f"{base}.conllu")
    with open(treebank_path, "w", encoding="utf-8") as fh:
        fh.write(write_conllu(corpus.sentences))
    emb_paths = {}
    for layer in layers:
        emb = EmbeddingSet(
            language=corpus.language,
            layer=layer,
            dim=corpus.dim,
            sentences=[e[layer].astype(np.float32) for e in corpus.embeddings],
        )
        path = os.path.join(out_dir, f"{base}_l{layer}.opemb")
        write_embeddings(emb, path)
        emb_paths[layer] = path
    return {"treebank": treebank_path, "embeddings": emb_paths}
