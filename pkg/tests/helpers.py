"""
Shared fixtures and the summary runner used by the test scripts
"""
import sys
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from datamodel import ColumnKind, ColumnSpec, Dataset, Missingness, Schema, StandardizationParams
from forest import ContinuousSplit, ForestConfig, MnarFourWay, MuralForest, MuralTree, Node


def banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(f"TEST: {title}")
    print("=" * 60)


def run_tests(title: str, tests: Sequence[Tuple[str, Callable[[], None]]]) -> bool:
    """Run test functions, print the summary block, return True when all pass"""
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)

    results = []
    for name, test in tests:
        try:
            test()
            results.append((name, True))
        except AssertionError as e:
            print(f"✗ FAILED: {e}")
            results.append((name, False))
        except Exception as e:
            print(f"✗ ERROR: {type(e).__name__}: {e}")
            results.append((name, False))

    print("\n" + "=" * 60)
    print("TEST SUMMARY")
    print("=" * 60)
    for name, result in results:
        status = "✓ PASS" if result else "✗ FAIL"
        print(f"{status}: {name}")

    passed = sum(1 for _, r in results if r)
    print(f"\nTotal: {passed}/{len(results)} tests passed")
    print("=" * 60)
    return passed == len(results)


def raises(exc_type, fn, *args, **kwargs) -> BaseException:
    """Call fn and return the exception it raised; fail unless it is an exc_type"""
    try:
        fn(*args, **kwargs)
    except exc_type as e:
        print(f"✓ Raised {type(e).__name__}: {e}")
        return e
    raise AssertionError(f"expected {exc_type.__name__} from {getattr(fn, '__name__', fn)}")


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

def make_schema(*columns: Tuple[str, str]) -> Schema:
    """Schema from (name, kind) pairs, e.g. ("age", "continuous")"""
    return Schema(tuple(ColumnSpec(name, ColumnKind.parse(kind)) for name, kind in columns))


def continuous_dataset(values, mask=None, names: Optional[List[str]] = None) -> Dataset:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if mask is None:
        mask = np.zeros(values.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool).reshape(values.shape)
    names = names or [f"x{j + 1}" for j in range(values.shape[1])]
    return Dataset(make_schema(*[(n, "continuous") for n in names]), values, mask)


def mixed_dataset(n: int = 200, seed: int = 0) -> Dataset:
    """
    Mixed-type table driven by one latent factor

    `b` is masked above its 80th percentile (informative), `c` is pure
    noise with 10% of its cells masked uniformly at random.
    """
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n)
    a = z + 0.3 * rng.normal(size=n)
    b = 2.0 * z + 0.3 * rng.normal(size=n)
    c = rng.normal(size=n)
    flag = (z > 0).astype(float)
    grade = np.clip(np.floor(z + 2.0), 0, 3)
    unit = rng.integers(0, 3, size=n).astype(float)
    values = np.column_stack([a, b, c, flag, grade, unit])

    mask = np.zeros(values.shape, dtype=bool)
    mask[:, 1] = b > np.quantile(b, 0.8)
    mask[rng.choice(n, size=n // 10, replace=False), 2] = True

    schema = Schema((
        ColumnSpec("a", ColumnKind.continuous()),
        ColumnSpec("b", ColumnKind.continuous()),
        ColumnSpec("c", ColumnKind.continuous()),
        ColumnSpec("flag", ColumnKind.binary()),
        ColumnSpec("grade", ColumnKind.ordinal(4)),
        ColumnSpec("unit", ColumnKind.categorical(3)),
    ))
    return Dataset(schema, values, mask)


def mixed_schema_text() -> str:
    return (
        "# name kind missing_token missingness\n"
        "name=a kind=continuous\n"
        "name=b kind=continuous\n"
        "name=c kind=continuous\n"
        "name=flag kind=binary\n"
        "name=grade kind=ordinal:4\n"
        "name=unit kind=categorical:3\n"
    )


# ---------------------------------------------------------------------------
# Hand-built trees and forests
# ---------------------------------------------------------------------------

def hand_tree() -> MuralTree:
    """
    Unit-weight tree

            0
          /   \\
         1     2
        / \\
       3   4
          / \\
         5   6

    Leaves 2, 3, 5, 6 (depths 1, 2, 3, 3).
    """
    return MuralTree((
        Node(-1, 0, 0.0, 7, ContinuousSplit(0, 0.0), (1, 2)),
        Node(0, 1, 1.0, 4, ContinuousSplit(1, 0.0), (3, 4)),
        Node(0, 1, 1.0, 3),
        Node(1, 2, 1.0, 2),
        Node(1, 2, 1.0, 2, ContinuousSplit(0, -1.0), (5, 6)),
        Node(4, 3, 1.0, 1),
        Node(4, 3, 1.0, 1),
    ))


def stump(var: int = 0, weight: float = 1.0) -> MuralTree:
    """Root with two leaf children split on `var`"""
    return MuralTree((
        Node(-1, 0, 0.0, 2, ContinuousSplit(var, 0.0), (1, 2)),
        Node(0, 1, weight, 1),
        Node(0, 1, weight, 1),
    ))


def random_tree(rng: np.random.Generator, n_leaves: int = 8) -> MuralTree:
    """Random shape mixing two- and four-way splits, random positive edge weights"""
    records = [{"parent": -1, "depth": 0, "weight": 0.0, "split": None, "children": ()}]
    leaves = [0]
    while len(leaves) < n_leaves:
        index = leaves.pop(int(rng.integers(len(leaves))))
        four = rng.random() < 0.3
        split = MnarFourWay(0, 0.0, 1, 0.0) if four else ContinuousSplit(int(rng.integers(2)), 0.0)
        children = []
        for _ in range(split.n_children):
            children.append(len(records))
            records.append({
                "parent": index, "depth": records[index]["depth"] + 1,
                "weight": float(rng.uniform(0.5, 2.0)), "split": None, "children": (),
            })
        records[index]["split"] = split
        records[index]["children"] = tuple(children)
        leaves.extend(children)
    return MuralTree(tuple(
        Node(r["parent"], r["depth"], r["weight"], 1, r["split"], r["children"]) for r in records
    ))


def forest_of(trees: Sequence[MuralTree], assignments, names: Sequence[str] = ("v0", "v1")) -> MuralForest:
    """Wrap hand-built trees and leaf assignments (n_trees, n_rows) as a forest"""
    assignments = np.asarray(assignments, dtype=np.int64)
    config = ForestConfig(
        n_trees=len(trees),
        max_depth=max(t.max_depth for t in trees),
        min_leaf=1,
        mnar_restrict_levels=0,
    )
    schema = Schema(tuple(ColumnSpec(n, ColumnKind.continuous(), Missingness.AUTO) for n in names))
    return MuralForest(tuple(trees), config, schema, StandardizationParams(), assignments)
