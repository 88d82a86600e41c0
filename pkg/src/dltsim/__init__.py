"""Access-control stack for DAG-based distributed ledgers (fair scheduler,
AIMD rate setter, longest-queue-drop buffer manager) plus the deterministic
discrete-event network simulator used to evaluate it."""

from .buffer_manager import enforce_capacity
from .config import ConfigError, ModeSwitch, SimConfig, apply_overrides, load_config
from .core import (BestEffort, Content, DomainError, Inactive, Malicious,
                   ReputationVector, Transaction, assured_rate, total_work,
                   zipf_reputations)
from .metrics import MetricsLedger, maxmin_oracle, scaled_rate
from .network import Engine, RunResult, build_topology, run_simulation
from .rate_setter import RateState, local_alpha, next_issue_time, on_scheduled
from .scheduler import DeficitState, Inbox, drr_round, visit

__version__ = "0.1.0"

__all__ = [
    "BestEffort", "ConfigError", "Content", "DeficitState", "DomainError",
    "Engine", "Inactive", "Inbox", "Malicious", "MetricsLedger", "ModeSwitch",
    "RateState", "ReputationVector", "RunResult", "SimConfig", "Transaction",
    "apply_overrides", "assured_rate", "build_topology", "drr_round",
    "enforce_capacity", "load_config", "local_alpha", "maxmin_oracle",
    "next_issue_time", "on_scheduled", "run_simulation", "scaled_rate",
    "total_work", "visit", "zipf_reputations",
]
