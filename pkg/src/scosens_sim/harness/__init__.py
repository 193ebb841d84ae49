from .config import ConfigError, ScenarioConfig, load_config
from .scenario import ScenarioResult, run_scenario

__all__ = ["ConfigError", "ScenarioConfig", "ScenarioResult", "load_config", "run_scenario"]
