import numpy as np
import pytest

from orthoprobe.errors import ConlluParseError, TreeStructureError
from orthoprobe.synthetic import random_tree_heads
from orthoprobe.treebank import (
    compute_tree_depths,
    compute_tree_distances,
    parse_conllu,
    write_conllu,
)


def conllu_line(idx, form="w", upos="NOUN", head=0, misc="_"):
    return f"{idx}\t{form}\t_\t{upos}\t_\t_\t{head}\t_\t_\t{misc}"


def heads_to_conllu(heads, upos=None, misc=None):
    lines = []
    for i, h in enumerate(heads):
        lines.append(conllu_line(
            i + 1,
            form=f"w{i + 1}",
            upos=upos[i] if upos else "NOUN",
            head=h,
            misc=misc[i] if misc else "_",
        ))
    return "\n".join(lines) + "\n\n"


def floyd_warshall_oracle(heads):
    n = len(heads)
    INF = 10 ** 6
    dist = np.full((n, n), INF)
    np.fill_diagonal(dist, 0)
    for i, h in enumerate(heads):
        if h != 0:
            dist[i, h - 1] = dist[h - 1, i] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    return dist


def bfs_oracle(heads):
    n = len(heads)
    adj = [[] for _ in range(n)]
    for i, h in enumerate(heads):
        if h != 0:
            adj[i].append(h - 1)
            adj[h - 1].append(i)
    dist = np.zeros((n, n), dtype=int)
    for src in range(n):
        seen = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for node in frontier:
                for nb in adj[node]:
                    if nb not in seen:
                        seen[nb] = seen[node] + 1
                        nxt.append(nb)
            frontier = nxt
        for j, d in seen.items():
            dist[src, j] = d
    return dist


class TestDepths:
    def test_chain(self):
        assert compute_tree_depths([0, 1, 2]).tolist() == [0, 1, 2]

    def test_star(self):
        assert compute_tree_depths([0, 1, 1, 1]).tolist() == [0, 1, 1, 1]

    def test_hand_traversal(self):
        assert compute_tree_depths([3, 3, 0, 3, 4]).tolist() == [1, 1, 0, 1, 2]

    def test_cycle_detected(self):
        with pytest.raises(TreeStructureError):
            compute_tree_depths([2, 1, 0])  # 1 and 2 point at each other

    def test_two_roots_rejected(self):
        with pytest.raises(TreeStructureError):
            compute_tree_depths([0, 0, 1])

    def test_head_out_of_range(self):
        with pytest.raises(TreeStructureError):
            compute_tree_depths([0, 9])


class TestDistances:
    def test_chain_of_three(self):
        d = compute_tree_distances([0, 1, 2])
        assert d[0, 2] == 2

    def test_metric_axioms(self):
        rng = np.random.default_rng(0)
        heads = random_tree_heads(9, rng)
        d = compute_tree_distances(heads)
        assert np.all(np.diag(d) == 0)
        assert np.array_equal(d, d.T)

    def test_bfs_oracle_random_trees(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(2, 13))
            heads = random_tree_heads(n, rng)
            assert np.array_equal(compute_tree_distances(heads), bfs_oracle(heads))

    def test_lca_identity(self):
        # dist(i,j) = depth(i) + depth(j) - 2*depth(lca(i,j))
        rng = np.random.default_rng(2)
        for _ in range(10):
            n = int(rng.integers(2, 13))
            heads = random_tree_heads(n, rng)
            depths = compute_tree_depths(heads)
            dists = compute_tree_distances(heads)

            def ancestors(i):
                out = [i]
                while heads[out[-1]] != 0:
                    out.append(heads[out[-1]] - 1)
                return out

            for i in range(n):
                anc_i = ancestors(i)
                for j in range(n):
                    lca = next(a for a in ancestors(j) if a in anc_i)
                    assert dists[i, j] == depths[i] + depths[j] - 2 * depths[lca]

    def test_reordering_invariance(self):
        rng = np.random.default_rng(3)
        heads = random_tree_heads(8, rng)
        perm = rng.permutation(8)
        # token at new position k is old token perm[k]
        inv = np.argsort(perm)
        new_heads = [0 if heads[perm[k]] == 0 else inv[heads[perm[k]] - 1] + 1
                     for k in range(8)]
        d_old = compute_tree_distances(heads)
        d_new = compute_tree_distances(new_heads)
        for a in range(8):
            for b in range(8):
                assert d_new[a, b] == d_old[perm[a], perm[b]]


class TestParseConllu:
    def test_star_tree(self):
        sents = parse_conllu(heads_to_conllu([2, 0, 2]))
        assert len(sents) == 1
        s = sents[0]
        assert s.dep_depths.tolist() == [1, 0, 1]
        assert s.dep_dists[0, 2] == 2

    def test_singleton(self):
        s = parse_conllu(heads_to_conllu([0]))[0]
        assert s.dep_depths.tolist() == [0]
        assert s.dep_dists.shape == (1, 1)

    def test_floyd_warshall_oracle(self):
        rng = np.random.default_rng(4)
        text = ""
        heads_list = []
        for _ in range(10):
            heads = random_tree_heads(int(rng.integers(2, 11)), rng)
            heads_list.append(heads)
            text += heads_to_conllu(heads)
        sents = parse_conllu(text)
        assert len(sents) == 10
        for sent, heads in zip(sents, heads_list):
            assert np.array_equal(sent.dep_dists, floyd_warshall_oracle(heads))

    def test_multiword_and_empty_nodes_skipped(self):
        text = "\n".join([
            "# sent_id = s1",
            "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_",
            conllu_line(1, "de", "ADP", 3),
            conllu_line(2, "el", "DET", 3),
            conllu_line(3, "sol", "NOUN", 0),
            "3.1\tnull\t_\t_\t_\t_\t_\t_\t_\t_",
        ]) + "\n\n"
        s = parse_conllu(text)[0]
        assert [t.form for t in s.tokens] == ["de", "el", "sol"]
        assert s.sent_id == "s1"

    def test_lexnode_from_misc(self):
        text = heads_to_conllu([0, 1], misc=["LexNode=dog.n.01|X=1", "_"])
        s = parse_conllu(text)[0]
        assert s.tokens[0].lexnode == "dog.n.01"
        assert s.tokens[1].lexnode is None

    def test_malformed_line_number(self):
        text = conllu_line(1, head=0) + "\nbroken line\n\n"
        with pytest.raises(ConlluParseError) as err:
            parse_conllu(text)
        assert err.value.line == 2

    def test_bad_head_reported(self):
        with pytest.raises(ConlluParseError):
            parse_conllu("1\tw\t_\tX\t_\t_\tnope\t_\t_\t_\n\n")

    def test_head_out_of_range_names_sentence(self):
        text = "# sent_id = bad-sent\n" + conllu_line(1, head=5) + "\n\n"
        with pytest.raises(TreeStructureError) as err:
            parse_conllu(text)
        assert "bad-sent" in str(err.value)

    def test_cyclic_heads(self):
        text = heads_to_conllu([2, 1])
        with pytest.raises(TreeStructureError):
            parse_conllu(text)

    def test_max_tokens_skip(self):
        text = heads_to_conllu([0, 1, 1]) + heads_to_conllu([0, 1])
        sents = parse_conllu(text, max_tokens=2)
        assert len(sents) == 1
        assert len(sents[0]) == 2


class TestWriteConllu:
    def test_roundtrip(self):
        rng = np.random.default_rng(5)
        heads = random_tree_heads(7, rng)
        text = heads_to_conllu(heads, upos=["NOUN"] * 6 + ["PUNCT"])
        sents = parse_conllu(text)
        again = parse_conllu(write_conllu(sents))
        assert [t.form for t in again[0].tokens] == [t.form for t in sents[0].tokens]
        assert [t.upos for t in again[0].tokens] == [t.upos for t in sents[0].tokens]
        assert np.array_equal(again[0].heads, sents[0].heads)

    def test_predicted_heads_replace_gold(self):
        sents = parse_conllu(heads_to_conllu([0, 1, 2]))
        out = write_conllu(sents, pred_heads=[np.array([0, 1, 1])])
        assert np.array_equal(parse_conllu(out)[0].heads, [0, 1, 1])
