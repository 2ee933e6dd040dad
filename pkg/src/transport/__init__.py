"""Tree-sliced Wasserstein distances between cohorts"""
from transport.tree_wasserstein import (
    CohortDistribution,
    NodeMass,
    TswdResult,
    cohort_distribution,
    forest_cohort_distribution,
    forest_tswd,
    mass_distribution,
    tree_wasserstein,
    tswd_report,
)
from transport.oracle import MAX_SUPPORT, brute_force_emd, mean_imputation_emd
from transport.importance import FeatureImportanceReport, feature_importance, node_contributions
