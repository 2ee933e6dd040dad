"""Missing-data classification, imputation, and induced missingness"""
from missingness.detection import (
    ColumnMissingness,
    MissingnessProfile,
    TestEvidence,
    detect_mnar,
    profile_report,
    profile_to_dict,
)
from missingness.imputation import impute_random_missing, mean_impute
from missingness.induce import induce_mnar_threshold, induce_mcar
