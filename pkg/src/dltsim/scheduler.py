"""Deficit-round-robin scheduler with bounded credit accrual on empty queues.

Each node keeps one FIFO queue per issuer.  A round-robin cycle visits every
issuer in ascending id order; a visit first tops up the issuer's deficit by
its quantum (if the counter is below the cap - the top-up happens whether or
not the queue is backlogged, which is what protects bursty low-rate flows),
then schedules head transactions while the deficit affords them.  Scheduling
a transaction of work w occupies the single server for w / rate seconds.
"""

from __future__ import annotations

from collections import deque

from .core import DomainError, ReputationVector, Transaction


class Inbox:
    """Per-issuer FIFO queues with cached work totals."""

    def __init__(self, n: int):
        self.queues = [deque() for _ in range(n)]
        self.issuer_work = [0.0] * n
        self.total_work = 0.0
        self.count = 0
        self._ids = set()

    def enqueue(self, tx: Transaction) -> None:
        if tx.uid in self._ids:
            raise DomainError(f"transaction {tx.id} enqueued twice")
        self._ids.add(tx.uid)
        self.queues[tx.issuer].append(tx)
        self.issuer_work[tx.issuer] += tx.work
        self.total_work += tx.work
        self.count += 1

    def head(self, issuer: int):
        q = self.queues[issuer]
        return q[0] if q else None

    def pop_head(self, issuer: int) -> Transaction:
        tx = self.queues[issuer].popleft()
        self._ids.discard(tx.uid)
        self.count -= 1
        if self.queues[issuer]:
            self.issuer_work[issuer] -= tx.work
        else:
            self.issuer_work[issuer] = 0.0   # kill float drift at empty
        self.total_work = self.total_work - tx.work if self.count else 0.0
        return tx

    def coherent(self, tol: float = 1e-9) -> bool:
        """True when the cached totals match a recount (test helper)."""
        per = [sum(tx.work for tx in q) for q in self.queues]
        if any(abs(a - b) > tol for a, b in zip(per, self.issuer_work)):
            return False
        return abs(sum(per) - self.total_work) <= tol * max(1.0, self.total_work)


class DeficitState:
    """Deficit counters and reputation-proportional quanta for one node."""

    def __init__(self, reps: ReputationVector, quantum_scale: float,
                 dc_max: float):
        self.quantum = [quantum_scale * r / reps.total for r in reps.values]
        self.counters = [0.0] * len(reps)
        self.cap = dc_max


def visit(issuer: int, state: DeficitState, inbox: Inbox, nu: float,
          now: float, empty_queue_accrual: bool = True):
    """One round-robin visit to ``issuer``.

    Returns (scheduled transactions in order, time the server is busy until).
    The deficit top-up is checked against the cap before adding, so a counter
    may overshoot the cap by less than one quantum.
    """
    if not 0 <= issuer < len(state.counters):
        raise DomainError(f"unknown issuer {issuer}")
    counters = state.counters
    queue = inbox.queues[issuer]
    if (empty_queue_accrual or queue) and counters[issuer] < state.cap:
        counters[issuer] += state.quantum[issuer]
    scheduled = []
    busy_until = now
    while queue:
        head = queue[0]
        if counters[issuer] < head.work:
            break
        inbox.pop_head(issuer)
        counters[issuer] -= head.work
        busy_until += head.work / nu
        scheduled.append(head)
    return scheduled, busy_until


def drr_round(state: DeficitState, inbox: Inbox, nu: float, now: float,
              empty_queue_accrual: bool = True):
    """Visit every issuer once, in ascending id order."""
    scheduled = []
    t = now
    for issuer in range(len(state.counters)):
        out, t = visit(issuer, state, inbox, nu, t, empty_queue_accrual)
        scheduled.extend(out)
    return scheduled, t
