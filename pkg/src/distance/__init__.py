"""Tree distances, forest distance matrix, affinities and diffusion"""
from distance.kernels import (
    AdaptiveKnn,
    AffinityMatrix,
    DiffusionOperator,
    DistanceMatrix,
    Fixed,
    affinity,
    diffusion,
    parse_bandwidth,
)
from distance.tree_metric import LeafDistances, forest_distance_matrix, node_distances, tree_leaf_distances
from distance.export import matrix_from_bin, matrix_from_csv, matrix_to_bin, matrix_to_csv, read_matrix, write_matrix
