import numpy as np
import pytest

from orthoprobe.errors import AnnotationError, TreeStructureError
from orthoprobe.hypernymy import annotate_lexical, load_hypernymy_forest
from orthoprobe.treebank import parse_conllu

from test_treebank import conllu_line


def sentence_with_lexnodes(nodes):
    lines = []
    for i, node in enumerate(nodes):
        misc = f"LexNode={node}" if node else "_"
        lines.append(conllu_line(i + 1, head=0 if i == 0 else 1, misc=misc))
    return parse_conllu("\n".join(lines) + "\n\n")[0]


FOREST = "\n".join([
    "root\t-",
    "animal\troot",
    "dog\tanimal",
    "poodle\tdog",
    "cat\tanimal",
    "tool\t-",
    "hammer\ttool",
]) + "\n"


class TestForest:
    def test_depths(self):
        forest = load_hypernymy_forest(FOREST)
        assert forest.depth("root") == 0
        assert forest.depth("animal") == 1
        assert forest.depth("poodle") == 3
        assert forest.depth("hammer") == 1

    def test_distance_same_tree(self):
        forest = load_hypernymy_forest(FOREST)
        assert forest.distance("dog", "cat") == 2
        assert forest.distance("poodle", "cat") == 3
        assert forest.distance("dog", "dog") == 0

    def test_distance_disjoint_trees(self):
        forest = load_hypernymy_forest(FOREST)
        assert forest.distance("dog", "hammer") is None

    def test_implicit_parent_is_root(self):
        forest = load_hypernymy_forest("child\tghost\n")
        assert forest.depth("ghost") == 0
        assert forest.depth("child") == 1

    def test_cycle_rejected(self):
        with pytest.raises(TreeStructureError):
            load_hypernymy_forest("a\tb\nb\ta\n")

    def test_lca_oracle_random_forest(self):
        rng = np.random.default_rng(0)
        # two random trees of 12 nodes each
        parents = {}
        for tree in ("t0", "t1"):
            names = [f"{tree}n{i}" for i in range(12)]
            parents[names[0]] = "-"
            for i in range(1, 12):
                parents[names[i]] = names[int(rng.integers(0, i))]
        text = "".join(f"{n}\t{p}\n" for n, p in parents.items())
        forest = load_hypernymy_forest(text)

        def depth_oracle(node):
            d = 0
            while parents[node] != "-":
                node = parents[node]
                d += 1
            return d

        def lca_dist_oracle(a, b):
            anc = {}
            cur = a
            while True:
                anc[cur] = depth_oracle(cur)
                if parents[cur] == "-":
                    break
                cur = parents[cur]
            cur = b
            while cur not in anc:
                if parents[cur] == "-":
                    return None
                cur = parents[cur]
            return depth_oracle(a) + depth_oracle(b) - 2 * anc[cur]

        names = list(parents)
        for _ in range(15):
            a, b = rng.choice(names, size=2, replace=False)
            assert forest.distance(a, b) == lca_dist_oracle(a, b)


class TestAnnotate:
    def test_parent_child_pair(self):
        forest = load_hypernymy_forest(FOREST)
        sent = sentence_with_lexnodes(["animal", "dog"])
        out = annotate_lexical(sent, forest)
        assert out.lex_depths.tolist() == [1.0, 2.0]
        assert out.lex_dists[0, 1] == 1.0
        assert bool(out.lex_dist_mask[0, 1])

    def test_disjoint_trees_masked(self):
        forest = load_hypernymy_forest(FOREST)
        out = annotate_lexical(sentence_with_lexnodes(["dog", "hammer"]), forest)
        assert not out.lex_dist_mask[0, 1]
        assert bool(out.lex_depth_mask[0]) and bool(out.lex_depth_mask[1])

    def test_missing_lexnode_masked(self):
        forest = load_hypernymy_forest(FOREST)
        out = annotate_lexical(sentence_with_lexnodes(["dog", None, "cat"]), forest)
        assert not out.lex_depth_mask[1]
        assert not out.lex_dist_mask[0, 1]
        assert bool(out.lex_dist_mask[0, 2])

    def test_mask_symmetry(self):
        forest = load_hypernymy_forest(FOREST)
        out = annotate_lexical(
            sentence_with_lexnodes(["dog", "hammer", "cat", None]), forest
        )
        assert np.array_equal(out.lex_dist_mask, out.lex_dist_mask.T)

    def test_unknown_node_rejected(self):
        forest = load_hypernymy_forest(FOREST)
        with pytest.raises(AnnotationError):
            annotate_lexical(sentence_with_lexnodes(["unicorn"]), forest)
