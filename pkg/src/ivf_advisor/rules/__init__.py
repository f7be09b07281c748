"""Advisory rules: block evaluators, engine, and configuration."""

from .advice import Advice, Alert, RuleCitation, fmt_num
from .config import DEFAULT_CONFIG, RulesConfig, config_hash, next_stim_interval
from .engine import AdvisoryEngine

__all__ = [
    "Advice",
    "AdvisoryEngine",
    "Alert",
    "DEFAULT_CONFIG",
    "RuleCitation",
    "RulesConfig",
    "config_hash",
    "fmt_num",
    "next_stim_interval",
]
