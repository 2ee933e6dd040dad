"""Test script for the split criterion, tree building, routing and the forest file"""
import sys
import tempfile
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))
sys.path.insert(0, str(Path(__file__).parent))

from datamodel import ConfigError, Dataset, ForestFormatError, standardize
from forest import (
    BinaryFourWay,
    CategorySplit,
    EntropyMode,
    ForestConfig,
    MnarFourWay,
    apply,
    best_threshold,
    choose_threshold,
    deserialize,
    entropy_bits,
    fit,
    load_forest,
    residual_info_gain,
    route,
    save_forest,
    scan_forest,
    serialize,
    split_node,
)
from forest.splits import evaluate_variable
from helpers import (
    banner,
    continuous_dataset,
    forest_of,
    hand_tree,
    make_schema,
    mixed_dataset,
    raises,
    run_tests,
    stump,
)


def test_residual_entropy_gain():
    """Perfect, useless and constant-residual partitions"""
    banner("Residual Entropy Gain")

    assert abs(entropy_bits(np.array([2, 2])) - 1.0) < 1e-12
    assert abs(entropy_bits(np.array([4, 0]))) < 1e-12

    schema = make_schema(("r", "binary"), ("k", "binary"))
    d = Dataset(schema, np.array([[0, 0], [0, 0], [1, 0], [1, 0]], dtype=float), np.zeros((4, 2), dtype=bool))
    rows = np.arange(4)

    perfect = residual_info_gain(rows, [np.array([0, 1]), np.array([2, 3])], [0], d)
    mixed = residual_info_gain(rows, [np.array([0, 2]), np.array([1, 3])], [0], d)
    constant = residual_info_gain(rows, [np.array([0, 1]), np.array([2, 3])], [1], d)
    assert abs(perfect - 1.0) < 1e-12
    assert abs(mixed) < 1e-12
    assert abs(constant) < 1e-12
    print("✓ {a,a}|{b,b} = 1 bit, {a,b}|{a,b} = 0, constant residual = 0")

    joint = residual_info_gain(rows, [np.array([0, 1]), np.array([2, 3])], [0, 1], d, EntropyMode.parse("2"))
    assert abs(joint - 1.0) < 1e-12
    print("✓ Joint entropy over two residuals agrees")

    assert str(EntropyMode.parse("marginal")) == "marginal"
    raises(ConfigError, EntropyMode.parse, "many")


def test_best_threshold():
    """Separating threshold and unsplittable variables"""
    banner("Best Threshold")

    schema = make_schema(("v", "continuous"), ("r", "binary"))
    d = Dataset(schema, np.array([[1, 0], [2, 0], [10, 1], [11, 1]], dtype=float), np.zeros((4, 2), dtype=bool))
    config = ForestConfig(min_leaf=1)
    choice = best_threshold(np.arange(4), 0, [1], d, config)
    assert 2.0 < choice.threshold < 10.0
    assert abs(choice.gain - 1.0) < 1e-12
    print(f"✓ Threshold {choice.threshold} with gain {choice.gain:.3f} bits")

    flat = Dataset(schema, np.array([[3, 0], [3, 0], [3, 1], [3, 1]], dtype=float), np.zeros((4, 2), dtype=bool))
    assert best_threshold(np.arange(4), 0, [1], flat, config) is None
    print("✓ Constant variable is unsplittable")


def test_gain_soundness():
    """Gain is non-negative and the threshold search matches exhaustive search"""
    banner("Gain Soundness")

    rng = np.random.default_rng(12)
    config = ForestConfig(min_leaf=1, max_threshold_candidates=100)
    worst_gain, worst_gap = 0.0, 0.0
    for _ in range(200):
        n = int(rng.integers(4, 51))
        values = rng.integers(0, 12, size=(n, 3)).astype(float)
        d = continuous_dataset(values)
        rows = np.arange(n)

        parts = rng.integers(0, int(rng.integers(2, 5)), size=n)
        partition = [rows[parts == a] for a in np.unique(parts)]
        worst_gain = min(worst_gain, residual_info_gain(rows, partition, [1, 2], d))

        distinct = np.unique(values[:, 0])
        if len(distinct) < 2:
            continue
        exhaustive = max(
            residual_info_gain(rows, [rows[values[:, 0] <= t], rows[values[:, 0] > t]], [1, 2], d)
            for t in (distinct[:-1] + distinct[1:]) / 2.0
        )
        choice = best_threshold(rows, 0, [1, 2], d, config)
        worst_gap = max(worst_gap, abs(choice.gain - exhaustive))
    assert worst_gain >= -1e-9, worst_gain
    assert worst_gap < 1e-9, worst_gap
    print(f"✓ 200 instances: smallest gain {worst_gain:.2e}, largest search gap {worst_gap:.2e}")


def test_choose_threshold():
    """Significant gains keep the best threshold, uninformative ones fall back to the median"""
    banner("Threshold Choice")

    n = 40
    schema = make_schema(("v", "continuous"), ("flat", "binary"), ("step", "binary"))
    values = np.column_stack([np.arange(n), np.zeros(n), np.arange(n) >= 25]).astype(float)
    d = Dataset(schema, values, np.zeros((n, 3), dtype=bool))
    rows = np.arange(n)
    config = ForestConfig(min_leaf=5)

    informative = choose_threshold(rows, 0, [2], d, config)
    assert informative.threshold == 24.5 == best_threshold(rows, 0, [2], d, config).threshold
    print(f"✓ Step residual -> threshold {informative.threshold}, gain {informative.gain:.3f}")

    assert best_threshold(rows, 0, [1], d, config).threshold == 4.5
    assert choose_threshold(rows, 0, [1], d, config).threshold == 19.5
    print("✓ Constant residual -> median 19.5 instead of the edge cut 4.5")

    greedy = ForestConfig(min_leaf=5, split_alpha=None)
    assert choose_threshold(rows, 0, [1], d, greedy).threshold == 4.5
    print("✓ split_alpha None keeps the best-gain threshold")
    raises(ConfigError, ForestConfig, split_alpha=0.0)


def test_split_node_rules():
    """Depth limit and the MNAR restriction"""
    banner("Split Node Rules")

    rng = np.random.default_rng(0)
    d = continuous_dataset(rng.normal(size=(40, 2)))
    config = ForestConfig(max_depth=3, min_leaf=2)
    assert split_node(np.arange(40), 3, config, d, rng) is None
    assert split_node(np.arange(40), 0, config, d, rng) is not None
    print("✓ depth == max_depth -> leaf")

    values = np.column_stack([rng.normal(size=40), np.full(40, 2.0)])
    mask = np.zeros((40, 2), dtype=bool)
    mask[:10, 0] = True
    only_mnar = continuous_dataset(values, mask)
    restricted = ForestConfig(min_leaf=2, mnar_restrict_levels=3)
    assert split_node(np.arange(40), 0, restricted, only_mnar, rng) is None
    print("✓ Lone MNAR variable above the restriction depth -> leaf")


def test_mnar_four_way_split():
    """Six measured and six missing rows give four children of size >= 2"""
    banner("MNAR Four-Way Split")

    rng = np.random.default_rng(3)
    values = rng.normal(size=(12, 3))
    mask = np.zeros((12, 3), dtype=bool)
    mask[6:, 0] = True
    d = continuous_dataset(values, mask, names=["v", "aux", "r"])
    config = ForestConfig(min_leaf=2, mnar_restrict_levels=0)

    result = evaluate_variable(np.arange(12), 0, d, config, rng)
    assert isinstance(result.spec, MnarFourWay)
    assert result.spec.aux_var != 0
    sizes = [len(c) for c in result.children]
    assert len(sizes) == 4 and min(sizes) >= 2
    assert sorted(np.concatenate(result.children).tolist()) == list(range(12))
    assert set(np.concatenate(result.children[2:]).tolist()) == set(range(6, 12))
    print(f"✓ Children sizes {sizes} partition the 12 rows")


def test_mnar_categorical_split():
    """A masked categorical variable splits its measured rows one-vs-rest"""
    banner("MNAR Categorical Split")

    rng = np.random.default_rng(8)
    n = 48
    unit = np.tile([0.0, 1.0, 2.0], n // 3)
    aux = rng.normal(size=n)
    r = np.where(unit == 1.0, 4.0, 0.0) + 0.1 * rng.normal(size=n)
    mask = np.zeros((n, 3), dtype=bool)
    mask[n // 2:, 0] = True
    schema = make_schema(("unit", "categorical:3"), ("aux", "continuous"), ("r", "continuous"))
    d = Dataset(schema, np.column_stack([unit, aux, r]), mask)
    config = ForestConfig(min_leaf=3, mnar_restrict_levels=0)

    result = evaluate_variable(np.arange(n), 0, d, config, rng)
    spec = result.spec
    assert isinstance(spec, MnarFourWay) and spec.measured_category == 1
    measured = np.arange(n // 2)
    assert set(result.children[0].tolist()) == set(measured[unit[measured] == 1.0].tolist())
    assert set(result.children[1].tolist()) == set(measured[unit[measured] != 1.0].tolist())
    assert set(np.concatenate(result.children[2:]).tolist()) == set(range(n // 2, n))
    print(f"✓ Measured rows split on code {spec.measured_category}; masked rows on aux {spec.aux_var}")

    restored = MnarFourWay(**{k: v for k, v in spec.to_dict().items() if k != "type"})
    assert restored == spec
    print("✓ measured_category survives the split record")


def test_binary_four_way_split():
    """Binary variable gives four children separated by its value"""
    banner("Binary Four-Way Split")

    rng = np.random.default_rng(4)
    n = 40
    flag = np.repeat([0.0, 1.0], n // 2)
    aux = rng.normal(size=n)
    r = aux + 0.1 * rng.normal(size=n)
    schema = make_schema(("flag", "binary"), ("aux", "continuous"), ("r", "continuous"))
    d = Dataset(schema, np.column_stack([flag, aux, r]), np.zeros((n, 3), dtype=bool))
    config = ForestConfig(min_leaf=3)

    result = evaluate_variable(np.arange(n), 0, d, config, rng)
    assert isinstance(result.spec, BinaryFourWay)
    assert result.spec.aux_var in (1, 2)
    sizes = [len(c) for c in result.children]
    assert len(sizes) == 4 and min(sizes) >= 3
    zeros = np.concatenate(result.children[:2])
    ones = np.concatenate(result.children[2:])
    assert np.all(flag[zeros] == 0.0) and np.all(flag[ones] == 1.0)
    assert sorted(np.concatenate([zeros, ones]).tolist()) == list(range(n))
    assert all(result.spec.credited_var(slot) == 0 for slot in range(4))
    print(f"✓ Children sizes {sizes}: slots 0-1 hold flag=0, slots 2-3 hold flag=1")


def test_category_split():
    """Categorical variable splits off the most informative code"""
    banner("Category Split")

    rng = np.random.default_rng(6)
    n = 30
    unit = np.tile([0.0, 1.0, 2.0], n // 3)
    r = np.where(unit == 2.0, 5.0, 0.0) + 0.1 * rng.normal(size=n)
    schema = make_schema(("unit", "categorical:3"), ("r", "continuous"))
    d = Dataset(schema, np.column_stack([unit, r]), np.zeros((n, 2), dtype=bool))

    result = evaluate_variable(np.arange(n), 0, d, ForestConfig(min_leaf=3), rng)
    assert isinstance(result.spec, CategorySplit) and result.spec.category == 2
    assert result.children[0].tolist() == np.nonzero(unit == 2.0)[0].tolist()
    assert abs(result.gain - entropy_bits(np.array([10, 20]))) < 1e-9
    print(f"✓ Code 2 split off with gain {result.gain:.3f} bits")


def test_exclude_path_vars():
    """Ancestor split variables leave the residual set when excluded"""
    banner("Exclude Path Variables")

    rng = np.random.default_rng(2)
    x = np.linspace(-1.0, 1.0, 30)
    d = continuous_dataset(np.column_stack([x, x, np.zeros(30)]))
    rows = np.arange(30)

    kept = evaluate_variable(rows, 0, d, ForestConfig(min_leaf=3), rng, frozenset({1}))
    excluded = evaluate_variable(rows, 0, d, ForestConfig(min_leaf=3, exclude_path_vars=True), rng, frozenset({1}))
    assert kept.gain > 0.5, kept.gain
    assert abs(excluded.gain) < 1e-12, excluded.gain
    print(f"✓ Gain {kept.gain:.3f} with the path variable, {excluded.gain:.3f} without it")


def test_fit_single_leaf():
    """max_depth 0 gives one leaf holding every row"""
    banner("Single-Leaf Forest")

    d = continuous_dataset(np.arange(10, dtype=float))
    forest = fit(d, ForestConfig(n_trees=1, max_depth=0, min_leaf=1))
    assert forest.n_trees == 1 and len(forest.trees[0]) == 1
    assert forest.leaf_assignments.tolist() == [[0] * 10]
    print("✓ One node, every row in it")

    raises(ConfigError, ForestConfig, n_trees=0)


def test_fit_structure_and_determinism():
    """Fitted forest passes the structural scan and is reproducible"""
    banner("Forest Structure and Determinism")

    d, params = standardize(mixed_dataset(n=200, seed=2))
    config = ForestConfig(n_trees=5, max_depth=6, min_leaf=5, mnar_restrict_levels=1, seed=11)
    forest = fit(d, config, params)

    violations = scan_forest(forest, d)
    assert violations == [], violations[:3]
    for tree in forest.trees:
        assert tree.max_depth <= 6
        sizes = [tree.nodes[leaf].n_rows for leaf in tree.leaves]
        assert min(sizes) >= 5
    print("✓ Depth <= 6 and every leaf >= 5 rows; scan clean")

    assert np.array_equal(apply(forest, d), forest.leaf_assignments)
    row = 17
    assert route(forest.trees[0], d.values[row], d.mask[row]) == forest.leaf_assignments[0, row]
    print("✓ Routing training rows reproduces their leaves")

    again = fit(d, config, params)
    parallel = fit(d, config, params, n_jobs=2)
    assert serialize(again) == serialize(forest)
    assert serialize(parallel) == serialize(forest)
    print("✓ Same seed -> byte-identical forests for 1 and 2 workers")


def test_fit_joint_entropy():
    """Joint-subset entropy grows a valid forest and is kept in the file"""
    banner("Joint Entropy Forest")

    d, params = standardize(mixed_dataset(n=150, seed=4))
    config = ForestConfig(n_trees=3, max_depth=5, entropy=EntropyMode("joint", 2), mnar_restrict_levels=1, seed=3)
    forest = fit(d, config, params)
    assert scan_forest(forest, d) == []
    assert sum(len(tree.leaves) for tree in forest.trees) > 3
    print(f"✓ {sum(len(t) for t in forest.trees)} nodes over 3 trees; scan clean")

    restored = deserialize(serialize(forest))
    assert restored.config.entropy == EntropyMode("joint", 2)
    assert ForestConfig(entropy="2").entropy == restored.config.entropy
    print("✓ Entropy mode '2' round-trips through the forest file")


def test_masked_routing():
    """Masked values follow the larger child, leftmost on ties"""
    banner("Masked Routing")

    tree = hand_tree()
    assert route(tree, [np.nan, np.nan], [True, True]) == 3
    assert route(tree, [1.0, np.nan], [False, True]) == 2
    assert route(tree, [-2.0, -1.0], [False, False]) == 3
    assert route(tree, [-2.0, 1.0], [False, False]) == 5
    assert route(tree, [-0.5, 1.0], [False, False]) == 6
    print("✓ All-masked row -> leaf 3; observed rows follow thresholds")


def test_scan_detects_violations():
    """Inconsistent leaf sizes are reported"""
    banner("Scan Violations")

    forest = forest_of([stump()], [[1, 1]])
    problems = scan_forest(forest)
    assert any("recorded size" in p for p in problems)
    print(f"✓ {len(problems)} violation(s) reported")


def test_serialization():
    """File round trip and rejection of damaged files"""
    banner("Forest Serialization")

    d, params = standardize(mixed_dataset(n=80, seed=6))
    forest = fit(d, ForestConfig(n_trees=2, max_depth=3, min_leaf=5), params, fingerprint="abc")
    data = serialize(forest)

    restored = deserialize(data)
    assert serialize(restored) == data
    assert restored.fingerprint == "abc" and restored.schema == forest.schema
    assert restored.standardization == params
    print("✓ Deserialized forest re-serializes to the same bytes")

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "forest.mural"
        save_forest(forest, path)
        assert serialize(load_forest(path)) == data
        raises(ForestFormatError, load_forest, Path(tmp) / "absent.mural")
    print("✓ save_forest / load_forest")

    header, body = data.split(b"\n", 1)
    tampered = header + b"\n" + body.replace(b'"fingerprint":"abc"', b'"fingerprint":"abd"')
    raises(ForestFormatError, deserialize, tampered)
    raises(ForestFormatError, deserialize, data.replace(b"MURAL-FOREST 1", b"MURAL-FOREST 9", 1))
    raises(ForestFormatError, deserialize, b"not a forest\n{}")
    raises(ForestFormatError, deserialize, b"")


def main():
    """Run all tests"""
    return run_tests("FOREST TESTS", [
        ("Residual Entropy Gain", test_residual_entropy_gain),
        ("Best Threshold", test_best_threshold),
        ("Gain Soundness", test_gain_soundness),
        ("Split Node Rules", test_split_node_rules),
        ("Threshold Choice", test_choose_threshold),
        ("MNAR Four-Way Split", test_mnar_four_way_split),
        ("MNAR Categorical Split", test_mnar_categorical_split),
        ("Binary Four-Way Split", test_binary_four_way_split),
        ("Category Split", test_category_split),
        ("Exclude Path Variables", test_exclude_path_vars),
        ("Single-Leaf Forest", test_fit_single_leaf),
        ("Forest Structure and Determinism", test_fit_structure_and_determinism),
        ("Joint Entropy Forest", test_fit_joint_entropy),
        ("Masked Routing", test_masked_routing),
        ("Scan Violations", test_scan_detects_violations),
        ("Forest Serialization", test_serialization),
    ])


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)
