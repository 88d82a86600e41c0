"""Proof-of-work access control baseline: issue rates fixed by computing
power and a global difficulty, FIFO scheduling, no rate setter or buffer
policy.

The difficulty is calibrated so that the whole network issuing at full power
exactly matches the scheduling rate; the three comparison cases then vary
which nodes are active and how much power they really have.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .config import ConfigError, SimConfig
from .core import ReputationVector


@dataclass
class PowConfig:
    compute_power: list          # per-node puzzle-solving capacity
    difficulty: float            # puzzle work per transaction
    power_scale: float
    active: list                 # per-node bool
    stochastic: bool

    @classmethod
    def calibrate(cls, reps: ReputationVector, nu: float, power_scale: float,
                  inactive_ids, stochastic: bool) -> "PowConfig":
        """Difficulty such that all nodes at full power issue exactly at the
        scheduling rate; computing power follows the reputation shape."""
        if nu <= 0:
            raise ConfigError("scheduling rate must be positive")
        inactive = set(inactive_ids or [])
        active = [m not in inactive for m in range(len(reps))]
        return cls(compute_power=list(reps.values),
                   difficulty=reps.total / nu,
                   power_scale=power_scale,
                   active=active,
                   stochastic=stochastic)


def pow_issue_rate(cfg: PowConfig, node: int) -> float:
    """Work-rate (work/s) at which the node can mint transactions."""
    return cfg.compute_power[node] * cfg.power_scale / cfg.difficulty


def aggregate_rate(cfg: PowConfig) -> float:
    return sum(pow_issue_rate(cfg, m)
               for m in range(len(cfg.compute_power)) if cfg.active[m])


def pow_case_config(case: int, base: SimConfig) -> SimConfig:
    """The three comparison cases: 1) part of the network inactive,
    2) power matching the estimate, 3) power 5% above the estimate."""
    if case == 1:
        inactive = [m for m in range(base.node_count) if m % 3 == 2]
        return replace(base, access_control="pow", pow_scale=1.0,
                       pow_inactive=inactive)
    if case == 2:
        return replace(base, access_control="pow", pow_scale=1.0,
                       pow_inactive=[])
    if case == 3:
        return replace(base, access_control="pow", pow_scale=1.05,
                       pow_inactive=[])
    raise ConfigError(f"unknown pow case {case}")


def run_pow_case(case: int, base: SimConfig, run_index: int = 0):
    from .network import run_simulation
    return run_simulation(pow_case_config(case, base), run_index)
