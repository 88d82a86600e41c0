"""AIMD issue-rate control for best-effort nodes.

The only congestion signal is the node's own backlog: the work of its own
transactions still waiting in its own inbox, smoothed with an exponential
moving average sampled each time any transaction is scheduled.  Crossing the
reputation-scaled threshold multiplies the rate by the decrease factor and
pauses both issuing and further rate updates; otherwise the rate grows by the
node's local increase parameter per unit of scheduled work.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import ReputationVector


def local_alpha(a_global: float, m: int, reps: ReputationVector) -> float:
    """Node m's additive increase: its reputation share of the global budget."""
    return a_global * reps[m] / reps.total


@dataclass(slots=True)
class RateState:
    lam: float                 # current issue rate, work/s
    alpha: float               # additive increase per unit scheduled work
    threshold: float           # own-backlog level treated as congestion
    beta: float                # multiplicative decrease factor
    tau: float                 # pause after a decrease, seconds
    ema_coeff: float
    ema_own_work: float = 0.0
    paused_until: float = float("-inf")


def on_scheduled(state: RateState, tx_work: float, own_work_sample: float,
                 now: float) -> None:
    """Rate update fired once per scheduled transaction at this node.

    ``own_work_sample`` is the node's own queued work measured after the
    scheduled transaction left the inbox.  The sample always feeds the EMA;
    the rate itself is frozen while paused.
    """
    c = state.ema_coeff
    state.ema_own_work = c * own_work_sample + (1.0 - c) * state.ema_own_work
    if now < state.paused_until:
        return
    if state.ema_own_work > state.threshold:
        state.lam *= state.beta
        state.paused_until = now + state.tau
    else:
        state.lam += state.alpha * tx_work


def next_issue_time(state: RateState, last_issue: float,
                    next_tx_work: float) -> float:
    """Leaky-bucket spacing: issues are deterministic at the current rate and
    deferred past any active pause."""
    due = last_issue + next_tx_work / state.lam
    return max(due, state.paused_until)
