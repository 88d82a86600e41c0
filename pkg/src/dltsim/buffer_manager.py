"""Reputation-scaled longest-queue-drop buffer policy.

Runs after every enqueue: while the inbox holds more work than its capacity,
the issuer with the largest queued work relative to its reputation loses the
oldest transaction from its queue.  Honest issuers keep modest backlogs, so
only a flooding issuer's queue is ever the scaled-longest one.
"""

from __future__ import annotations

from .core import ReputationVector
from .scheduler import Inbox


def enforce_capacity(inbox: Inbox, reps: ReputationVector, w_max: float):
    """Drop head transactions from the scaled-longest queue until the inbox
    total is within ``w_max``.  Ties pick the lowest node id.  Returns the
    dropped transactions in drop order."""
    dropped = []
    work = inbox.issuer_work
    while inbox.total_work > w_max:
        worst = -1
        worst_ratio = -1.0
        for i, w in enumerate(work):
            if w <= 0.0:
                continue
            ratio = w / reps[i]
            if ratio > worst_ratio:
                worst_ratio = ratio
                worst = i
        dropped.append(inbox.pop_head(worst))
    return dropped
