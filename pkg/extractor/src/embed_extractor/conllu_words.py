"""Word forms from CoNLL-U text, one list per sentence.

Keeps exactly the syntactic words the probing toolkit keeps: multiword
ranges (``4-5``) and empty nodes (``8.1``) are dropped, so word counts
line up between embedding files and parsed treebanks.
"""

from __future__ import annotations


def read_sentences(text):
    sentences = []
    words = []
    for line in text.splitlines():
        line = line.rstrip("\n")
        if not line.strip():
            if words:
                sentences.append(words)
                words = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ValueError(f"not a 10-column CoNLL-U line: {line!r}")
        tok_id = cols[0]
        if "-" in tok_id or "." in tok_id:
            continue
        words.append(cols[1])
    if words:
        sentences.append(words)
    return sentences
