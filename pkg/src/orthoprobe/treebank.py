"""CoNLL-U reading/writing and gold tree quantities.

Sentences are kept as flat lists of syntactic words: multiword-token
ranges (``4-5``) and empty nodes (``8.1``) are dropped so that token
positions line up with word-level embeddings.  Heads use the CoNLL-U
convention: 1-based index of the governor, 0 for the root.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConlluParseError, TreeStructureError

PUNCT = "PUNCT"


@dataclass(frozen=True)
class Token:
    form: str
    upos: str
    head: int
    lexnode: Optional[str] = None


@dataclass(frozen=True)
class SentenceAnnotation:
    """One sentence with gold tree quantities.

    ``dep_depths``/``dep_dists`` are always populated from the head links.
    The lexical fields are present only after hypernymy annotation; their
    masks mark which tokens/pairs carry valid gold values.
    """

    tokens: tuple[Token, ...]
    dep_depths: np.ndarray
    dep_dists: np.ndarray
    sent_id: str = ""
    lex_depths: Optional[np.ndarray] = None
    lex_depth_mask: Optional[np.ndarray] = None
    lex_dists: Optional[np.ndarray] = None
    lex_dist_mask: Optional[np.ndarray] = None
    comments: tuple[str, ...] = field(default=())

    def __len__(self):
        return len(self.tokens)

    @property
    def heads(self):
        return np.array([t.head for t in self.tokens], dtype=np.int64)

    @property
    def upos(self):
        return [t.upos for t in self.tokens]


def _validate_heads(heads, sent_id=""):
    n = len(heads)
    label = f" in sentence {sent_id!r}" if sent_id else ""
    if n == 0:
        raise TreeStructureError(f"empty sentence{label}")
    roots = [i for i, h in enumerate(heads) if h == 0]
    for i, h in enumerate(heads):
        if not 0 <= h <= n:
            raise TreeStructureError(
                f"head {h} of token {i + 1} out of range [0, {n}]{label}"
            )
    if len(roots) != 1:
        raise TreeStructureError(f"expected exactly one root, found {len(roots)}{label}")


def compute_tree_depths(heads, sent_id=""):
    """Depth of every token in the dependency tree (root = 0).

    ``heads`` holds 1-based governor indices with 0 marking the root.
    Raises TreeStructureError on cycles, missing or multiple roots.
    """
    heads = np.asarray(heads, dtype=np.int64)
    _validate_heads(heads, sent_id)
    n = len(heads)
    depths = np.full(n, -1, dtype=np.int64)
    label = f" in sentence {sent_id!r}" if sent_id else ""
    for i in range(n):
        if depths[i] >= 0:
            continue
        # climb towards the root, memoizing the path
        path = []
        j = i
        while depths[j] < 0 and heads[j] != 0:
            path.append(j)
            j = heads[j] - 1
            if len(path) > n:
                raise TreeStructureError(f"cycle in head links{label}")
        base = 0 if heads[j] == 0 else depths[j]
        if heads[j] == 0:
            depths[j] = 0
        for k, node in enumerate(reversed(path)):
            depths[node] = base + k + 1
    return depths


def _root_paths(heads, depths):
    # ancestor list from each token up to the root, token itself included
    paths = []
    for i in range(len(heads)):
        path = [i]
        j = i
        while heads[j] != 0:
            j = heads[j] - 1
            path.append(j)
        paths.append(path)
    return paths


def compute_tree_distances(heads, sent_id=""):
    """Symmetric matrix of undirected path lengths in the dependency tree.

    Computed from root paths via the lowest common ancestor, so tests can
    check it against an independent per-node BFS.
    """
    heads = np.asarray(heads, dtype=np.int64)
    depths = compute_tree_depths(heads, sent_id)
    n = len(heads)
    paths = _root_paths(heads, depths)
    ancestors = [set(p) for p in paths]
    dists = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            # walk i's root path until we hit an ancestor of j
            lca = next(node for node in paths[i] if node in ancestors[j])
            d = depths[i] + depths[j] - 2 * depths[lca]
            dists[i, j] = d
            dists[j, i] = d
    return dists


def _parse_misc_lexnode(misc):
    if misc in ("", "_"):
        return None
    for item in misc.split("|"):
        if item.startswith("LexNode="):
            return item[len("LexNode="):]
    return None


def parse_conllu(text, max_tokens=None):
    """Parse CoNLL-U text into SentenceAnnotations with gold tree values.

    Multiword-token ranges and empty nodes are skipped.  ``LexNode=<id>``
    entries in the MISC column are kept on the tokens for later hypernymy
    annotation.  Sentences longer than ``max_tokens`` are dropped (None
    keeps everything).
    """
    sentences = []
    tokens = []
    comments = []
    sent_id = ""
    start_line = 1

    def flush(line_no):
        nonlocal tokens, comments, sent_id
        if tokens:
            sid = sent_id or f"#{len(sentences) + 1}"
            heads = [t.head for t in tokens]
            if max_tokens is None or len(tokens) <= max_tokens:
                depths = compute_tree_depths(heads, sid)
                dists = compute_tree_distances(heads, sid)
                sentences.append(
                    SentenceAnnotation(
                        tokens=tuple(tokens),
                        dep_depths=depths,
                        dep_dists=dists,
                        sent_id=sid,
                        comments=tuple(comments),
                    )
                )
        tokens = []
        comments = []
        sent_id = ""

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(line_no)
            start_line = line_no + 1
            continue
        if line.startswith("#"):
            comments.append(line)
            body = line[1:].strip()
            if body.startswith("sent_id"):
                parts = body.split("=", 1)
                if len(parts) == 2:
                    sent_id = parts[1].strip()
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(
                f"expected 10 tab-separated columns, got {len(cols)}", line=line_no
            )
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue  # multiword range or empty node
        try:
            int(tok_id)
        except ValueError:
            raise ConlluParseError(f"bad token id {tok_id!r}", line=line_no)
        head_str = cols[6]
        try:
            head = int(head_str)
        except ValueError:
            raise ConlluParseError(f"bad head index {head_str!r}", line=line_no)
        tokens.append(
            Token(form=cols[1], upos=cols[3], head=head, lexnode=_parse_misc_lexnode(cols[9]))
        )
    flush(None)
    return sentences


def write_conllu(sentences, pred_heads=None):
    """Render sentences back to CoNLL-U.

    ``pred_heads`` (one head vector per sentence) replaces the HEAD
    column; FORM, UPOS and LexNode annotations are preserved.
    """
    out = []
    for s_idx, sent in enumerate(sentences):
        heads = sent.heads if pred_heads is None else np.asarray(pred_heads[s_idx])
        if len(heads) != len(sent):
            raise ValueError(
                f"sentence {sent.sent_id!r}: {len(heads)} heads for {len(sent)} tokens"
            )
        for c in sent.comments:
            out.append(c)
        for i, tok in enumerate(sent.tokens):
            misc = f"LexNode={tok.lexnode}" if tok.lexnode is not None else "_"
            out.append(
                "\t".join(
                    [str(i + 1), tok.form, "_", tok.upos, "_", "_",
                     str(int(heads[i])), "_", "_", misc]
                )
            )
        out.append("")
    return "\n".join(out) + "\n"
