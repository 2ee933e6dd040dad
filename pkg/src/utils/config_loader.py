"""Run configuration: defaults, config.yaml, .env and the resolved-config sidecar"""
import logging
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml
from dotenv import load_dotenv

from datamodel import ConfigError
from distance import parse_bandwidth
from forest import ForestConfig

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).parent.parent.parent
DEFAULT_CONFIG_PATH = PROJECT_ROOT / 'config.yaml'
RESOLVED_CONFIG_NAME = 'resolved_config.yaml'
THREADS_ENV = 'MURAL_THREADS'

DEFAULT_CONFIG = {
    'forest': ForestConfig().to_dict(),
    'missingness': {
        'alpha': 0.05,
        'impute_iterations': 5,
    },
    'standardize': {
        'include_ordinal': False,
    },
    'affinity': {
        'bandwidth': 'knn:5',
        'kernel': 'gaussian',
    },
    'cluster': {
        'k': 4,
    },
    'output': {
        'dir': './outputs',
        'format': 'csv',
    },
    'eval': {
        'n': 3000,
        'noise': 0.0,
        'seeds': [0, 1, 2, 3, 4],
        'mnar_quantile': 0.7,
        'mcar_fraction': 0.2,
        'ks': [5, 10, 100],
        'sample_pairs': 10000,
        'k_graph': 10,
        'geodesic': True,
    },
}


@dataclass(frozen=True)
class EvalSettings:
    n: int = 3000
    noise: float = 0.0
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    mnar_quantile: float = 0.7
    mcar_fraction: float = 0.2
    ks: Tuple[int, ...] = (5, 10, 100)
    sample_pairs: int = 10000
    k_graph: int = 10
    geodesic: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'seeds', tuple(int(s) for s in self.seeds))
        object.__setattr__(self, 'ks', tuple(int(k) for k in self.ks))
        if self.n < 10:
            raise ConfigError("eval.n must be >= 10")
        if not self.seeds:
            raise ConfigError("eval.seeds must not be empty")
        if not self.ks or min(self.ks) < 1:
            raise ConfigError("eval.ks must be positive")


@dataclass(frozen=True)
class RunConfig:
    """
    Everything that determines a command's outputs

    `output_dir` is left out of the resolved dump and the worker count is
    never stored, so runs that differ only in those write identical files.
    """

    forest: ForestConfig = field(default_factory=ForestConfig)
    alpha: float = 0.05
    impute_iterations: int = 5
    include_ordinal: bool = False
    bandwidth: str = 'knn:5'
    kernel: str = 'gaussian'
    k: int = 4
    output_dir: str = './outputs'
    matrix_format: str = 'csv'
    eval: EvalSettings = field(default_factory=EvalSettings)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.impute_iterations < 1:
            raise ConfigError("impute_iterations must be >= 1")
        if self.matrix_format not in ('csv', 'bin'):
            raise ConfigError(f"output format must be csv or bin, got '{self.matrix_format}'")
        if self.k < 2:
            raise ConfigError("cluster k must be >= 2")
        object.__setattr__(self, 'bandwidth', str(parse_bandwidth(self.bandwidth)))

    def with_forest(self, **changes) -> "RunConfig":
        return replace(self, forest=replace(self.forest, **changes))

    def to_dict(self) -> Dict[str, Any]:
        evaluation = asdict(self.eval)
        evaluation['seeds'] = list(self.eval.seeds)
        evaluation['ks'] = list(self.eval.ks)
        return {
            'forest': self.forest.to_dict(),
            'missingness': {'alpha': self.alpha, 'impute_iterations': self.impute_iterations},
            'standardize': {'include_ordinal': self.include_ordinal},
            'affinity': {'bandwidth': self.bandwidth, 'kernel': self.kernel},
            'cluster': {'k': self.k},
            'output': {'format': self.matrix_format},
            'eval': evaluation,
        }

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "RunConfig":
        """Build from a (possibly partial) nested mapping; absent keys keep their defaults"""
        merged = merge_dicts(DEFAULT_CONFIG, data or {})
        try:
            return cls(
                forest=ForestConfig.from_dict(merged['forest']),
                alpha=float(merged['missingness']['alpha']),
                impute_iterations=int(merged['missingness']['impute_iterations']),
                include_ordinal=bool(merged['standardize']['include_ordinal']),
                bandwidth=merged['affinity']['bandwidth'],
                kernel=merged['affinity']['kernel'],
                k=int(merged['cluster']['k']),
                output_dir=str(merged['output']['dir']),
                matrix_format=str(merged['output']['format']),
                eval=EvalSettings(**merged['eval']),
            )
        except TypeError as e:
            raise ConfigError(f"invalid configuration: {e}")


def merge_dicts(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive merge; unknown top-level sections and section keys are rejected"""
    result = {}
    unknown = set(override) - set(base)
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
    for key, value in base.items():
        if key not in override:
            result[key] = value
        elif isinstance(value, dict):
            if not isinstance(override[key], dict):
                raise ConfigError(f"configuration section '{key}' must be a mapping")
            result[key] = merge_dicts(value, override[key])
        else:
            result[key] = override[key]
    return result


def load_configuration(config_path: Optional[str] = None) -> RunConfig:
    """
    Load .env and the YAML configuration

    Args:
        config_path: Config file (defaults to config.yaml at the project root)

    Returns:
        RunConfig with defaults filled in
    """
    load_dotenv(PROJECT_ROOT / '.env')

    path = Path(config_path) if config_path else DEFAULT_CONFIG_PATH
    if path.exists():
        try:
            with open(path, 'r') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"could not parse {path}: {e}")
    elif config_path:
        raise ConfigError(f"config file not found: {path}")
    else:
        logger.warning("Config file not found at %s; using built-in defaults", path)
        data = {}

    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping")
    return RunConfig.from_dict(data)


def default_threads() -> int:
    """Worker count from MURAL_THREADS (1 when unset)"""
    raw = os.getenv(THREADS_ENV, '').strip()
    if not raw:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got '{raw}'")
    if threads == 0 or threads < -1:
        raise ConfigError(f"{THREADS_ENV} must be positive or -1")
    return threads


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=False)


def write_resolved_config(config: RunConfig, output_dir) -> Path:
    """Write the resolved configuration next to a command's outputs"""
    path = Path(output_dir) / RESOLVED_CONFIG_NAME
    path.write_text(dump_config(config))
    return path


def setup_directories(paths: List[str]) -> None:
    """Create output directories if they don't exist"""
    for dir_path in paths:
        Path(dir_path).mkdir(parents=True, exist_ok=True)
