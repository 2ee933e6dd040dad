"""Unsupervised MURAL trees and forests"""
from forest.entropy import EntropyMode, NodeBinning, entropy_bits, residual_info_gain, split_p_values
from forest.splits import (
    BinaryFourWay,
    CategorySplit,
    ContinuousSplit,
    MnarFourWay,
    NodeSplit,
    ThresholdChoice,
    best_threshold,
    choose_threshold,
    split_node,
)
from forest.tree import MuralTree, Node, apply_tree, build_tree, route
from forest.forest import ForestConfig, MuralForest, apply, fit, scan_forest
from forest.serialization import deserialize, load_forest, save_forest, serialize
