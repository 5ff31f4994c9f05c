import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crypticspots import ghsom as gh
from crypticspots.errors import ConfigError, EmptyUnitError, PathError, StateError

from conftest import iris_like

CFG = gh.GhsomConfig()


def small_map(seed=0, rows=2, cols=2, dim=3) -> gh.SomMap:
    rng = np.random.default_rng(seed)
    return gh.SomMap(rows, cols, rng.uniform(0, 1, (rows * cols, dim)))


def recompute_qe(som: gh.SomMap, X_by_id: dict) -> np.ndarray:
    qe = np.zeros(som.n_units)
    for i, mapped in enumerate(som.mapped):
        for sid in mapped:
            qe[i] += float(np.linalg.norm(X_by_id[sid] - som.weights[i]))
    return qe


def walk_maps(som: gh.SomMap):
    yield som
    for child in som.children.values():
        yield from walk_maps(child)


# ---------------------------------------------------------------------------
# training

def test_single_sample_converges_to_fixed_point():
    som = small_map(seed=1)
    x = np.array([0.3, 0.6, 0.9])
    gh.train_map(som, ["a"], x[None, :], CFG)
    winner = int(np.argmin(np.linalg.norm(som.weights - x, axis=1)))
    assert np.linalg.norm(som.weights[winner] - x) < 1e-3
    assert som.mapped[winner] == ["a"]


def test_training_reduces_total_qe():
    ids, X = iris_like()
    rng = np.random.default_rng(3)
    som = gh.new_map(2, 2, X, rng)
    gh._assign(som, ids, X)
    before = som.qe.sum()
    gh.train_map(som, ids, X, CFG)
    assert som.qe.sum() <= before


def test_training_deterministic():
    ids, X = iris_like()
    a = gh.train_map(gh.new_map(2, 2, X, np.random.default_rng(5)), ids, X, CFG)
    b = gh.train_map(gh.new_map(2, 2, X, np.random.default_rng(5)), ids, X, CFG)
    assert np.array_equal(a.weights, b.weights)
    assert a.mapped == b.mapped


def test_train_rejects_empty_and_mismatched():
    som = small_map()
    with pytest.raises(StateError):
        gh.train_map(som, [], np.zeros((0, 3)), CFG)
    with pytest.raises(StateError):
        gh.train_map(som, ["a"], np.zeros((1, 5)), CFG)


def test_qe_matches_independent_recomputation():
    ids, X = iris_like()
    som = gh.train_map(gh.new_map(2, 2, X, np.random.default_rng(0)), ids, X, CFG)
    X_by_id = dict(zip(ids, X))
    assert np.allclose(som.qe, recompute_qe(som, X_by_id), atol=1e-9)


# ---------------------------------------------------------------------------
# growth rules

def test_insert_rule_examples():
    # sum qe = 15, beta*tau1 = 0.5 -> threshold 7.5
    assert gh.insert_rule(10.0, 15.0, beta=1.0, tau1=0.5)
    assert not gh.insert_rule(0.0, 15.0, beta=1.0, tau1=0.5)
    assert gh.insert_rule(7.5, 15.0, beta=1.0, tau1=0.5)  # inclusive >=


def test_should_insert_zero_error_map_never_grows():
    som = small_map()
    som.qe = np.zeros(som.n_units)
    assert not gh.should_insert(som.unit(0, 0), som, CFG)


def test_stratification_blocked_examples():
    assert gh.stratification_blocked(4, 100, 0.05)   # 4 <= 5
    assert gh.stratification_blocked(0, 100, 0.05)
    assert not gh.stratification_blocked(6, 100, 0.05)


def test_should_stratify_combines_both_rules():
    som = small_map()
    som.mapped[0] = [f"x{i}" for i in range(6)]
    som.qe[0] = 50.0
    unit = som.unit(0, 0)
    assert gh.should_stratify(unit, 100, CFG, qe_reference=100.0)  # 50 > 3
    assert not gh.should_stratify(unit, 100, CFG, qe_reference=5000.0)
    som.mapped[0] = ["x0"]
    assert not gh.should_stratify(som.unit(0, 0), 100, CFG, qe_reference=1.0)
    som.mapped[0] = []
    assert not gh.should_stratify(som.unit(0, 0), 100, CFG, qe_reference=1.0)


def test_rule_decisions_match_direct_inequalities():
    rng = np.random.default_rng(17)
    for _ in range(500):
        n_total = int(rng.integers(1, 500))
        n_k = int(rng.integers(0, n_total + 1))
        alpha = float(rng.uniform(0.01, 0.5))
        assert gh.stratification_blocked(n_k, n_total, alpha) == (n_k <= alpha * n_total)
        qe_k = float(rng.uniform(0, 20))
        qe_total = qe_k + float(rng.uniform(0, 50))
        beta, tau1 = float(rng.uniform(0.1, 2)), float(rng.uniform(0.05, 0.95))
        assert gh.insert_rule(qe_k, qe_total, beta, tau1) == (qe_k >= beta * tau1 * qe_total)


# ---------------------------------------------------------------------------
# breadth growth

def test_insert_column_between_error_and_dissimilar_neighbor():
    som = gh.SomMap(2, 2, np.array([
        [0.0, 0.0], [10.0, 10.0],
        [0.5, 0.5], [0.6, 0.6],
    ]))
    som.qe = np.array([5.0, 0.0, 0.0, 0.0])  # error unit (0,0); (0,1) most dissimilar
    kind, at = gh.insert_between_error_unit(som)
    assert (kind, at) == ("col", 1)
    assert (som.rows, som.cols) == (2, 3)
    grid = som.weights.reshape(2, 3, 2)
    assert np.allclose(grid[0, 1], [5.0, 5.0])      # mean of flanking units
    assert np.allclose(grid[1, 1], [0.55, 0.55])


def test_grow_breadth_adds_exactly_one_line_and_reduces_mqe():
    ids, X = iris_like()
    som = gh.train_map(gh.new_map(2, 2, X, np.random.default_rng(1)), ids, X, CFG)
    before_units, before_mqe = som.n_units, som.mqe()
    gh.grow_breadth(som, ids, X, CFG)
    assert som.n_units - before_units in (som.rows, som.cols)
    assert som.mqe() < before_mqe


# ---------------------------------------------------------------------------
# hierarchy

def test_identical_samples_stay_single_2x2_root():
    X = np.tile([0.4, 0.6], (4, 1))
    tree = gh.grow_hierarchy(["a", "b", "c", "d"], X, CFG, np.random.default_rng(2))
    assert (tree.root.rows, tree.root.cols) == (2, 2)
    assert not tree.root.children
    assert tree.root.qe.sum() == 0.0


def test_hierarchy_conservation_and_qe():
    ids, X = iris_like()
    tree = gh.grow_hierarchy(ids, X, CFG, np.random.default_rng(42))
    X_by_id = dict(zip(ids, X))

    def check(som, expected):
        got = [sid for mapped in som.mapped for sid in mapped]
        assert sorted(got) == sorted(expected)
        assert len(got) == len(set(got))
        assert np.allclose(som.qe, recompute_qe(som, X_by_id), atol=1e-9)
        for (r, c), child in som.children.items():
            check(child, som.mapped[som.index(r, c)])

    check(tree.root, ids)


def test_hierarchy_leaf_sizes_or_depth_cap():
    ids, X = iris_like()
    tree = gh.grow_hierarchy(ids, X, CFG, np.random.default_rng(42))
    cap = max(1.0, CFG.alpha * len(ids))

    def check(som, depth):
        for unit in som.units():
            child = som.children.get((unit.row, unit.col))
            if child is None:
                assert unit.n_mapped <= cap or depth >= CFG.max_depth
            else:
                check(child, depth + 1)

    check(tree.root, 1)


def test_hierarchy_depth_capped():
    ids, X = iris_like()
    cfg = gh.GhsomConfig(tau2=0.001, max_depth=2)
    tree = gh.grow_hierarchy(ids, X, cfg, np.random.default_rng(1))

    def depth_of(som):
        return 1 + max((depth_of(c) for c in som.children.values()), default=0)

    assert depth_of(tree.root) <= 2


def test_hierarchy_deterministic():
    ids, X = iris_like()
    t1 = gh.grow_hierarchy(ids, X, CFG, np.random.default_rng(7))
    t2 = gh.grow_hierarchy(ids, X, CFG, np.random.default_rng(7))
    assert gh.dump_tree(t1) == gh.dump_tree(t2)


def test_hierarchy_preconditions():
    with pytest.raises(StateError):
        gh.grow_hierarchy(["a"], np.zeros((1, 2)), CFG, np.random.default_rng(0))
    with pytest.raises(StateError):
        gh.grow_hierarchy(["a", "a", "b", "c"], np.zeros((4, 2)), CFG,
                          np.random.default_rng(0))


# ---------------------------------------------------------------------------
# path labels

def test_paper_notation_round_trip():
    label = gh.format_unit_label(((0, 1), (1, 0)), 11)
    assert label == "[R][01][10]:11"
    hops, count = gh.parse_path(label)
    assert hops == ((0, 1), (1, 0)) and count == 11
    assert gh.parse_path("[R]") == ((), None)


def test_parse_rejects_malformed():
    for bad in ["", "[X]", "[R][1]", "[R][123]", "[R][01]:x", "R[01]", "[R]extra[01]"]:
        with pytest.raises(PathError):
            gh.parse_path(bad)


@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), max_size=5),
       st.integers(0, 10_000))
@settings(max_examples=200, deadline=None)
def test_path_label_round_trip_random(hops, count):
    hops = tuple(hops)
    label = gh.format_unit_label(hops, count)
    parsed_hops, parsed_count = gh.parse_path(label)
    assert parsed_hops == hops and parsed_count == count
    assert gh.parse_path(gh.format_path(hops)) == (hops, None)


def test_path_label_resolves_against_tree():
    ids, X = iris_like()
    tree = gh.grow_hierarchy(ids, X, CFG, np.random.default_rng(42))
    assert gh.path_label(tree, (), None) == "[R]"
    unit = tree.root.unit(0, 0)
    label = gh.path_label(tree, (), (0, 0))
    assert label == f"[R][00]:{unit.n_mapped}"
    with pytest.raises(PathError):
        gh.path_label(tree, ((9, 9),), None)


# ---------------------------------------------------------------------------
# expansion

def tree_for_expand():
    ids, X = iris_like()
    return gh.grow_hierarchy(ids, X, CFG, np.random.default_rng(42)), ids


def find_unit(tree, predicate):
    def walk(som, hops):
        for unit in som.units():
            unit_hops = hops + ((unit.col, unit.row),)
            if predicate(unit):
                return unit_hops
            child = som.children.get((unit.row, unit.col))
            if child is not None:
                found = walk(child, unit_hops)
                if found:
                    return found
        return None

    return walk(tree.root, ())


def test_expand_empty_unit_raises():
    tree, _ = tree_for_expand()
    path = find_unit(tree, lambda u: u.n_mapped == 0)
    assert path is not None, "fixture tree should have an empty unit"
    with pytest.raises(EmptyUnitError):
        gh.expand_unit(tree, path, np.random.default_rng(0))


def test_expand_partitions_unit_samples_and_keeps_siblings():
    tree, ids = tree_for_expand()
    path = find_unit(tree, lambda u: u.n_mapped >= 8)
    assert path is not None
    som, row, col = gh.resolve_unit(tree, path)
    expected_ids = sorted(som.mapped[som.index(row, col)])

    sibling_exports = {}
    parent_map = gh.resolve_map(tree, path[:-1])
    for unit in parent_map.units():
        if (unit.col, unit.row) != path[-1]:
            sibling_exports[(unit.row, unit.col)] = json.dumps(
                gh._export_map(unit.child, ()) if unit.child else
                {"w": [float(v) for v in unit.weight], "m": list(unit.mapped)},
                sort_keys=True)

    _, changed = gh.expand_unit(tree, path, np.random.default_rng(9))
    assert changed == [gh.format_path(path)]
    child = som.children[(row, col)]
    got_ids = sorted(sid for mapped in child.mapped for sid in mapped)
    assert got_ids == expected_ids

    for unit in parent_map.units():
        if (unit.col, unit.row) != path[-1]:
            again = json.dumps(
                gh._export_map(unit.child, ()) if unit.child else
                {"w": [float(v) for v in unit.weight], "m": list(unit.mapped)},
                sort_keys=True)
            assert again == sibling_exports[(unit.row, unit.col)]


def test_expand_replaces_existing_subtree():
    tree, _ = tree_for_expand()
    path = find_unit(tree, lambda u: u.child is not None)
    assert path is not None
    som, row, col = gh.resolve_unit(tree, path)
    before = som.children[(row, col)]
    gh.expand_unit(tree, path, np.random.default_rng(4))
    assert som.children[(row, col)] is not before


# ---------------------------------------------------------------------------
# export / import / rendering

def test_export_import_round_trip():
    tree, _ = tree_for_expand()
    doc = gh.export_tree(tree)
    clone = gh.import_tree(json.loads(json.dumps(doc)))
    assert gh.export_tree(clone) == doc


def test_render_text_one_line_per_unit():
    tree, _ = tree_for_expand()
    text = gh.render_text(tree)
    n_units = sum(m.n_units for m in walk_maps(tree.root))
    assert len(text.strip().splitlines()) == n_units + 1  # +1 for the [R] line
    assert text.startswith("[R]\n")
    assert "[R][00]:" in text


def test_config_validation():
    with pytest.raises(ConfigError):
        gh.GhsomConfig(tau1=0.0)
    with pytest.raises(ConfigError):
        gh.GhsomConfig(alpha=1.5)
    with pytest.raises(ConfigError):
        gh.GhsomConfig(max_depth=0)
