"""LangGraph Workflow Nodes for the fit pipeline"""
import logging
from pathlib import Path

import yaml

from datamodel import (
    DataError,
    InvariantError,
    content_fingerprint,
    load_csv,
    load_schema,
    standardize,
)
from forest import fit, save_forest, scan_forest
from missingness import detect_mnar, impute_random_missing, profile_report, profile_to_dict
from pipeline.state import FitState
from utils.config_loader import setup_directories, write_resolved_config

logger = logging.getLogger(__name__)

FOREST_FILE = 'forest.mural'
PROFILE_REPORT_FILE = 'missingness_report.txt'
PROFILE_YAML_FILE = 'missingness.yaml'


def _banner(state: FitState, title: str) -> None:
    if state.get('quiet'):
        return
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


def _fail(state: FitState, stage: str, e: BaseException) -> FitState:
    code = getattr(e, 'code', 'internal')
    if not state.get('quiet'):
        print(f"✗ {stage} failed: {e}")
    state['error'] = f"{code}: {e}"
    state['failure'] = e
    return state


# Node 1: Load
def load_node(state: FitState) -> FitState:
    """
    Read the schema and CSV unless a dataset was supplied in the state

    Args:
        state: Current pipeline state

    Returns:
        Updated state with raw and fingerprint
    """
    _banner(state, "STAGE 1: Load data")
    if state.get('raw') is not None:
        state.setdefault('fingerprint', state['raw'].fingerprint())
        if not state.get('quiet'):
            print(f"Using supplied dataset ({state['raw'].n_rows} rows)")
        return state

    try:
        schema = load_schema(state['schema_path'])
        data = Path(state['data_path'])
        if not data.exists():
            raise DataError(f"data file not found: {data}")
        raw_bytes = data.read_bytes()
        state['raw'] = load_csv(schema, raw_bytes)
        state['fingerprint'] = content_fingerprint(raw_bytes)
        if not state.get('quiet'):
            print(f"✓ Loaded {state['raw'].n_rows} rows x {state['raw'].n_cols} columns")
    except Exception as e:
        return _fail(state, "Load", e)
    return state


# Node 2: Detect
def detect_node(state: FitState) -> FitState:
    """Classify every partially masked column as MNAR or randomly missing"""
    _banner(state, "STAGE 2: Detect missingness")
    config = state['config']
    try:
        profile = detect_mnar(state['raw'], alpha=config.alpha, n_jobs=state.get('n_jobs', 1))
        state['profile'] = profile
        if not state.get('quiet'):
            print(f"MNAR columns: {profile.mnar_columns}")
            print(f"Random columns: {profile.random_columns}")
    except Exception as e:
        return _fail(state, "Detect", e)
    return state


# Node 3: Impute
def impute_node(state: FitState) -> FitState:
    """Fill the randomly missing columns; MNAR masks stay"""
    _banner(state, "STAGE 3: Impute randomly missing columns")
    config = state['config']
    try:
        state['imputed'] = impute_random_missing(
            state['raw'],
            state['profile'],
            iterations=config.impute_iterations,
            seed=config.forest.seed,
        )
        if not state.get('quiet'):
            print(f"✓ {int(state['imputed'].mask.sum())} masked cells remain")
    except Exception as e:
        return _fail(state, "Impute", e)
    return state


# Node 4: Standardize
def standardize_node(state: FitState) -> FitState:
    """Standardize the continuous columns"""
    _banner(state, "STAGE 4: Standardize")
    config = state['config']
    try:
        standardized, params = standardize(state['imputed'], include_ordinal=config.include_ordinal)
        state['standardized'] = standardized
        state['standardization'] = params
        if params.flagged and not state.get('quiet'):
            print(f"Zero-variance columns left unscaled: {params.flagged}")
    except Exception as e:
        return _fail(state, "Standardize", e)
    return state


# Node 5: Fit
def fit_node(state: FitState) -> FitState:
    """Grow the forest and optionally scan its structure"""
    _banner(state, "STAGE 5: Fit forest")
    config = state['config']
    try:
        forest = fit(
            state['standardized'],
            config.forest,
            standardization=state['standardization'],
            fingerprint=state.get('fingerprint', ''),
            n_jobs=state.get('n_jobs', 1),
        )
        state['forest'] = forest
        if not state.get('quiet'):
            print(f"✓ Fitted {forest.n_trees} trees")

        if state.get('check'):
            violations = scan_forest(forest, state['standardized'])
            state['violations'] = violations
            if violations:
                raise InvariantError(f"{len(violations)} structural violation(s); first: {violations[0]}")
            if not state.get('quiet'):
                print("✓ Structural scan passed")
    except Exception as e:
        return _fail(state, "Fit", e)
    return state


# Node 6: Export
def export_node(state: FitState) -> FitState:
    """Write forest, missingness reports and resolved config when an output directory is set"""
    output_dir = state.get('output_dir')
    if not output_dir:
        return state

    _banner(state, "STAGE 6: Export")
    try:
        setup_directories([output_dir])
        out = Path(output_dir)
        save_forest(state['forest'], out / FOREST_FILE)
        (out / PROFILE_REPORT_FILE).write_text(profile_report(state['profile']))
        (out / PROFILE_YAML_FILE).write_text(
            yaml.safe_dump(profile_to_dict(state['profile']), sort_keys=True, default_flow_style=False)
        )
        resolved = write_resolved_config(state['config'], out)
        state['outputs'] = [
            str(out / FOREST_FILE),
            str(out / PROFILE_REPORT_FILE),
            str(out / PROFILE_YAML_FILE),
            str(resolved),
        ]
        if not state.get('quiet'):
            for path in state['outputs']:
                print(f"✓ Wrote {path}")
    except Exception as e:
        return _fail(state, "Export", e)
    return state
