"""Synthetic data, quality metrics, clustering and experiment harness"""
from evaluation.synthetic import (
    ClinicalSpec,
    MnarRule,
    SwissRollSample,
    default_clinical_spec,
    gen_mixed_clinical,
    gen_swiss_roll_5d,
    induce_swiss_roll_missingness,
)
from evaluation.metrics import (
    distortion,
    euclidean_distance_matrix,
    geodesic_correlation,
    geodesic_distance_matrix,
    ground_truth_distances,
    precision_at_k,
    rank_correlation,
)
from evaluation.clustering import adjusted_rand, diffusion_coordinates, silhouette, spectral_cluster
from evaluation.report import EvalReport, MetricSummary, summarize, write_report
