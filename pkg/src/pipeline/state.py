"""Fit Pipeline State Schema for LangGraph Workflow"""
from typing import List, Optional, TypedDict

from datamodel import Dataset, StandardizationParams
from forest import MuralForest
from missingness import MissingnessProfile
from utils.config_loader import RunConfig


class FitState(TypedDict, total=False):
    """State schema for the fit workflow"""

    # Input (file paths are optional when `raw` is supplied directly)
    data_path: Optional[str]
    schema_path: Optional[str]
    output_dir: Optional[str]
    config: RunConfig
    n_jobs: int
    check: bool
    quiet: bool

    # Load phase
    raw: Dataset
    fingerprint: str

    # Missingness phase
    profile: MissingnessProfile
    imputed: Dataset

    # Standardize phase
    standardized: Dataset
    standardization: StandardizationParams

    # Fit phase
    forest: MuralForest
    violations: List[str]

    # Export phase
    outputs: List[str]

    # Error handling
    error: Optional[str]
    failure: Optional[BaseException]
