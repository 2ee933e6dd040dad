"""Fit pipeline: load, detect, impute, standardize, fit, export"""
from pipeline.state import FitState
from pipeline.graph import create_workflow, fit_dataset, run_workflow
