"""Per-node state machine: receive with duplicate filtering, issue per mode,
schedule, mark visible, forward.

A node keeps one local copy of each transaction while it waits in the inbox;
the copy's ``seen_from`` set collects the neighbours that already delivered
it, and forwarding excludes exactly those plus the issuer itself.
"""

from __future__ import annotations

from collections import deque

from .buffer_manager import enforce_capacity
from .core import Transaction
from .scheduler import DeficitState, Inbox

# mode tags used in the engine's hot paths
M_INACTIVE, M_CONTENT, M_BE, M_MAL, M_POW = range(5)

MODE_NAMES = {M_INACTIVE: "inactive", M_CONTENT: "content", M_BE: "best-effort",
              M_MAL: "malicious", M_POW: "pow"}


class Node:
    __slots__ = (
        "id", "mode_kind", "mode", "neighbours", "inbox", "deficit", "rate",
        "seen", "visible", "pending", "issue_seq", "issue_gen", "issue_rng",
        "last_issue", "pending_work", "count_rate", "fixed_rate", "assured",
        "work_lo", "work_hi", "cyc_pos", "cyc_accrued", "cyc_any", "skip",
        "sleeping", "accruable", "fifo", "fifo_work", "fifo_idle",
        "peak_inbox",
    )

    def __init__(self, node_id: int, n: int, neighbours, deficit: DeficitState,
                 issue_rng, work_lo: float, work_hi: float):
        self.id = node_id
        self.mode_kind = M_INACTIVE
        self.mode = None
        self.neighbours = sorted(neighbours)
        self.inbox = Inbox(n)
        self.deficit = deficit
        self.rate = None
        self.seen = set()
        self.visible = set()
        self.pending = {}
        self.issue_seq = 0
        self.issue_gen = 0
        self.issue_rng = issue_rng
        self.last_issue = 0.0
        self.pending_work = 0.0
        self.count_rate = 0.0        # content: expected transactions per second
        self.fixed_rate = 0.0        # malicious / pow deterministic work rate
        self.assured = 0.0
        self.work_lo = work_lo
        self.work_hi = work_hi
        # round-robin cursor state
        self.cyc_pos = 0
        self.cyc_accrued = False
        self.cyc_any = False
        self.skip = [False] * n
        self.sleeping = False
        self.accruable = n
        # FIFO scheduling state (pow access control)
        self.fifo = deque()
        self.fifo_work = 0.0
        self.fifo_idle = True
        self.peak_inbox = 0.0

    # -- issuing -------------------------------------------------------------

    def draw_work(self) -> float:
        lo = self.work_lo
        hi = self.work_hi
        return lo if lo == hi else self.issue_rng.uniform(lo, hi)

    def mean_work(self) -> float:
        return (self.work_lo + self.work_hi) / 2.0

    # -- receive path ----------------------------------------------------------

    def receive(self, tx: Transaction, sender: int, reps, w_max: float):
        """First delivery: copy, enqueue, enforce capacity; returns the list
        of dropped transactions.  Duplicate delivery: remember the sender for
        the forwarding exception and return None."""
        uid = tx.uid
        if uid in self.seen:
            copy = self.pending.get(uid)
            if copy is not None:
                copy.seen_from.add(sender)
            return None
        self.seen.add(uid)
        copy = tx.clone_for(sender)
        return self._admit(copy, reps, w_max)

    def admit_own(self, tx: Transaction, reps, w_max: float):
        """Self-issued transaction joins the node's own inbox queue."""
        self.seen.add(tx.uid)
        return self._admit(tx, reps, w_max)

    def _admit(self, tx: Transaction, reps, w_max: float):
        self.pending[tx.uid] = tx
        inbox = self.inbox
        inbox.enqueue(tx)
        self.skip[tx.issuer] = False
        total = inbox.total_work
        if total > self.peak_inbox:
            self.peak_inbox = total
        if total > w_max:
            dropped = enforce_capacity(inbox, reps, w_max)
            for d in dropped:
                del self.pending[d.uid]
            return dropped
        return ()

    def receive_fifo(self, tx: Transaction, sender: int) -> bool:
        """pow access control: one FIFO queue, no capacity policy."""
        uid = tx.uid
        if uid in self.seen:
            copy = self.pending.get(uid)
            if copy is not None:
                copy.seen_from.add(sender)
            return False
        self.seen.add(uid)
        self._admit_fifo(tx.clone_for(sender))
        return True

    def admit_own_fifo(self, tx: Transaction):
        self.seen.add(tx.uid)
        self._admit_fifo(tx)

    def _admit_fifo(self, tx: Transaction):
        self.pending[tx.uid] = tx
        self.fifo.append(tx)
        self.fifo_work += tx.work
        if self.fifo_work > self.peak_inbox:
            self.peak_inbox = self.fifo_work

    # -- schedule / forward ----------------------------------------------------

    def mark_visible(self, tx: Transaction):
        self.pending.pop(tx.uid, None)
        self.visible.add(tx.uid)

    def forwarding_targets(self, tx: Transaction):
        """Flooding with the echo exception: every neighbour except those the
        transaction was received from, and except its issuer."""
        sf = tx.seen_from
        issuer = tx.issuer
        return [nb for nb in self.neighbours if nb not in sf and nb != issuer]
