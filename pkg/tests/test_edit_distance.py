import random
import time

import pytest

from rnatreedit.cost_models import structural_model, unit_model
from rnatreedit.edit_distance import (extract_script, replay_script,
                                      validate_mapping, zs_distance)
from rnatreedit.generators import all_tree_shapes, random_tree, shape_to_tree
from rnatreedit.oracle import mapping_oracle
from rnatreedit.tree_model import Label, LabeledTree, TreeNode, index, trees_equal

from conftest import EDGE_LABELS, NODE_LABELS


def leafy(kind, *kid_kinds):
    node = TreeNode(Label(kind))
    for k in kid_kinds:
        node.add(TreeNode(Label(k)))
    return node


@pytest.fixture
def worked_example():
    """Two trees at unit distance 3, reconstructed from the operation
    series relabel + delete + insert (fixture is a reconstruction)."""
    t1 = TreeNode(Label("A"), children=[leafy("B", "C", "D")])
    t2 = leafy("F", "C", "G", "D")
    return index(LabeledTree(t1)), index(LabeledTree(t2))


class TestDistance:
    def test_identity_is_zero(self, rng):
        m = unit_model()
        for _ in range(10):
            t = index(random_tree(rng, rng.randint(1, 12), 3, NODE_LABELS))
            d, _ = zs_distance(t, t, m)
            assert d == 0.0

    def test_single_node_relabel(self):
        a = index(LabeledTree(TreeNode(Label("A"))))
        b = index(LabeledTree(TreeNode(Label("B"))))
        d, _ = zs_distance(a, b, unit_model())
        assert d == 1.0

    def test_worked_example_costs_three(self, worked_example):
        a, b = worked_example
        d, _ = zs_distance(a, b, unit_model())
        assert d == 3.0
        assert mapping_oracle(a, b, unit_model()) == 3.0

    def test_exhaustive_small_oracle_equivalence(self):
        # all labeled tree pairs up to 4 nodes over a 2-letter alphabet;
        # the full 5-node sweep runs in the acceptance suite
        m = unit_model()
        alphabet = [Label("a"), Label("b")]
        trees = []
        for n in range(1, 5):
            for shape in all_tree_shapes(n):
                for labeling in range(2 ** n):
                    trees.append(index(shape_to_tree(shape, alphabet, labeling)))
        for a in trees:
            for b in trees:
                d, _ = zs_distance(a, b, m)
                assert d == mapping_oracle(a, b, m)

    def test_sampled_oracle_equivalence_with_structural_model(self, rng):
        m = structural_model(t=0.05)
        for _ in range(200):
            a = index(random_tree(rng, rng.randint(1, 8), 3,
                                  NODE_LABELS, EDGE_LABELS))
            b = index(random_tree(rng, rng.randint(1, 8), 3,
                                  NODE_LABELS, EDGE_LABELS))
            d, _ = zs_distance(a, b, m)
            assert d == mapping_oracle(a, b, m)

    def test_symmetry_sampled(self, rng):
        m = structural_model(t=0.05)
        for _ in range(200):
            a = index(random_tree(rng, rng.randint(1, 10), 3,
                                  NODE_LABELS, EDGE_LABELS))
            b = index(random_tree(rng, rng.randint(1, 10), 3,
                                  NODE_LABELS, EDGE_LABELS))
            assert zs_distance(a, b, m)[0] == zs_distance(b, a, m)[0]

    def test_triangle_sampled(self, rng):
        m = structural_model(t=0.05)
        for _ in range(100):
            ts = [index(random_tree(rng, rng.randint(1, 8), 3,
                                    NODE_LABELS, EDGE_LABELS))
                  for _ in range(3)]
            dab = zs_distance(ts[0], ts[1], m)[0]
            dbc = zs_distance(ts[1], ts[2], m)[0]
            dac = zs_distance(ts[0], ts[2], m)[0]
            assert dac <= dab + dbc + 1e-9

    def test_unvalidated_model_warns(self):
        a = index(LabeledTree(TreeNode(Label("A"))))
        m = unit_model(ins_scale=2.0)
        with pytest.warns(UserWarning):
            zs_distance(a, a, m)


class TestScript:
    def test_identity_script_is_zero_cost_relabels(self, rng):
        m = unit_model()
        t = index(random_tree(rng, 6, 3, NODE_LABELS))
        _, tables = zs_distance(t, t, m)
        script, mapping = extract_script(tables)
        assert script.total_cost == 0.0
        assert all(op.kind == "relabel" for op in script.ops)
        assert mapping == {(i, i) for i in range(1, t.n + 1)}

    def test_single_relabel_script(self):
        a = index(LabeledTree(TreeNode(Label("A"))))
        b = index(LabeledTree(TreeNode(Label("B"))))
        _, tables = zs_distance(a, b, unit_model())
        script, mapping = extract_script(tables)
        assert [op.kind for op in script.ops] == ["relabel"]
        assert mapping == {(1, 1)}

    def test_worked_example_script(self, worked_example):
        a, b = worked_example
        _, tables = zs_distance(a, b, unit_model())
        script, mapping = extract_script(tables)
        assert script.total_cost == 3.0
        counts = script.counts()
        assert counts["delete"] == 1 and counts["insert"] == 1
        replayed = replay_script(a, script)
        assert trees_equal(replayed.root, b.tree.root)

    def test_replay_random_pairs(self, rng):
        m = structural_model(t=0.05)
        for _ in range(200):
            a = index(random_tree(rng, rng.randint(1, 8), 3,
                                  NODE_LABELS, EDGE_LABELS))
            b = index(random_tree(rng, rng.randint(1, 8), 3,
                                  NODE_LABELS, EDGE_LABELS))
            d, tables = zs_distance(a, b, m)
            script, mapping = extract_script(tables)
            assert script.total_cost == d
            assert validate_mapping(a, b, mapping)
            replayed = replay_script(a, script)
            assert trees_equal(replayed.root, b.tree.root)

    def test_mapping_is_order_preserving(self, rng):
        m = unit_model()
        for _ in range(50):
            a = index(random_tree(rng, 7, 3, NODE_LABELS))
            b = index(random_tree(rng, 7, 3, NODE_LABELS))
            _, tables = zs_distance(a, b, m)
            _, mapping = extract_script(tables)
            assert validate_mapping(a, b, mapping)

    def test_deterministic_extraction(self, rng):
        m = unit_model()
        a = index(random_tree(rng, 8, 3, NODE_LABELS))
        b = index(random_tree(rng, 8, 3, NODE_LABELS))
        outs = set()
        for _ in range(3):
            _, tables = zs_distance(a, b, m)
            script, _ = extract_script(tables)
            outs.add(tuple((op.kind, op.cost) for op in script.ops))
        assert len(outs) == 1


def _path_tree(n):
    root = node = TreeNode(Label("a"))
    for _ in range(n - 1):
        child = TreeNode(Label("a"))
        node.add(child)
        node = child
    return index(LabeledTree(root))


def _star_tree(n):
    root = TreeNode(Label("a"))
    for _ in range(n - 1):
        root.add(TreeNode(Label("a")))
    return index(LabeledTree(root))


def test_complexity_reflects_min_leaf_height():
    # both a path and a star have min(leaf, height) = 1, so the star case
    # must not be catastrophically slower than the path case
    m = unit_model()
    path = _path_tree(200)
    star = _star_tree(200)
    t0 = time.perf_counter()
    zs_distance(path, path, m)
    t_path = time.perf_counter() - t0
    t0 = time.perf_counter()
    zs_distance(star, star, m)
    t_star = time.perf_counter() - t0
    assert t_star < 5.0
    assert t_star < max(0.05, 25 * t_path)
