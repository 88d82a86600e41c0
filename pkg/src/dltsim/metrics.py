"""Global observer: dissemination bookkeeping and evaluation statistics.

A transaction counts as disseminated once every honest node has scheduled it
into its visible set; its dissemination time is the last such instant.  All
series are derived after the run from the (issue, dissemination) records.
"""

from __future__ import annotations

import heapq
import math

from .core import ReputationVector


class MetricsLedger:
    """Records every (transaction, node, visible-at) triple plus issue
    metadata and buffer drops."""

    def __init__(self, honest_ids):
        self.honest = frozenset(honest_ids)
        self._n_honest = len(self.honest)
        self.issue_meta = {}          # uid -> (issuer, work, issue_time)
        self.arrivals = {}            # uid -> {node: time}
        self.dissem_time = {}         # uid -> time all honest nodes had it
        self.drops = []               # (time, node, uid)
        self._remaining = {}
        self.samples = []             # optional periodic engine samples

    def record_issue(self, uid: int, issuer: int, work: float, t: float):
        self.issue_meta[uid] = (issuer, work, t)

    def record_arrival(self, uid: int, node: int, t: float):
        per_node = self.arrivals.setdefault(uid, {})
        if node in per_node:
            return
        per_node[node] = t
        if node in self.honest:
            left = self._remaining.get(uid, self._n_honest) - 1
            if left:
                self._remaining[uid] = left
            else:
                self._remaining.pop(uid, None)
                self.dissem_time[uid] = t

    def record_drop(self, uid: int, node: int, t: float):
        self.drops.append((t, node, uid))

    # -- derived quantities -------------------------------------------------

    def latency(self, uid: int) -> float | None:
        """Issue-to-dissemination time; None while undisseminated."""
        done = self.dissem_time.get(uid)
        if done is None:
            return None
        return done - self.issue_meta[uid][2]

    def transactions(self):
        """(uid, issuer, work, issue_time, dissem_time | None) rows."""
        for uid, (issuer, work, t0) in self.issue_meta.items():
            yield uid, issuer, work, t0, self.dissem_time.get(uid)

    def dissemination_rate(self, t0: float, t1: float,
                           issuer: int | None = None) -> float:
        """Work-weighted rate of transactions disseminated inside (t0, t1]."""
        if t1 <= t0:
            raise ValueError("window must have positive width")
        total = 0.0
        for uid, done in self.dissem_time.items():
            if t0 < done <= t1:
                meta = self.issue_meta[uid]
                if issuer is None or meta[0] == issuer:
                    total += meta[1]
        return total / (t1 - t0)

    def latencies_by_issuer(self):
        out = {}
        for uid, done in self.dissem_time.items():
            issuer, _, t_issue = self.issue_meta[uid]
            out.setdefault(issuer, []).append(done - t_issue)
        return out

    def mean_latency(self, t0: float, t1: float) -> float:
        """Mean latency of transactions disseminated inside (t0, t1]."""
        vals = [done - self.issue_meta[uid][2]
                for uid, done in self.dissem_time.items() if t0 < done <= t1]
        return sum(vals) / len(vals) if vals else math.nan

    def max_time_in_transit(self, now: float, issuers=None) -> float:
        """Largest age of a transaction issued but not yet disseminated at
        ``now``; 0 when everything has spread."""
        worst = 0.0
        for uid, (issuer, _, t0) in self.issue_meta.items():
            if t0 > now or (issuers is not None and issuer not in issuers):
                continue
            done = self.dissem_time.get(uid)
            if done is None or done > now:
                worst = max(worst, now - t0)
        return worst


def scaled_rate(ledger: MetricsLedger, issuer: int, t0: float, t1: float,
                reputation: float) -> float:
    """Reputation-scaled dissemination rate of one issuer over a window;
    the quantity that is equal across best-effort nodes under max-min
    fairness."""
    if reputation <= 0:
        raise ValueError("reputation must be positive")
    return ledger.dissemination_rate(t0, t1, issuer=issuer) / reputation


# -- time series ------------------------------------------------------------

def time_grid(duration: float, stride: float):
    n = int(round(duration / stride))
    return [i * stride for i in range(n + 1)]


def dissemination_series(ledger: MetricsLedger, duration: float,
                         window: float, stride: float,
                         issuer: int | None = None):
    """Windowed dissemination rate (work/s) sampled every ``stride`` s."""
    grid = time_grid(duration, stride)
    events = []
    for uid, done in ledger.dissem_time.items():
        meta = ledger.issue_meta[uid]
        if issuer is None or meta[0] == issuer:
            events.append((done, meta[1]))
    events.sort()
    out = []
    lo = hi = 0
    acc = 0.0
    for t in grid:
        while hi < len(events) and events[hi][0] <= t:
            acc += events[hi][1]
            hi += 1
        while lo < hi and events[lo][0] <= t - window:
            acc -= events[lo][1]
            lo += 1
        out.append(acc / window)
    return grid, out


def latency_series(ledger: MetricsLedger, duration: float, window: float,
                   stride: float):
    """Windowed mean latency over transactions disseminated in each window."""
    grid = time_grid(duration, stride)
    events = []
    for uid, done in ledger.dissem_time.items():
        events.append((done, done - ledger.issue_meta[uid][2]))
    events.sort()
    out = []
    lo = hi = 0
    acc = 0.0
    for t in grid:
        while hi < len(events) and events[hi][0] <= t:
            acc += events[hi][1]
            hi += 1
        while lo < hi and events[lo][0] <= t - window:
            acc -= events[lo][1]
            lo += 1
        n = hi - lo
        out.append(acc / n if n else math.nan)
    return grid, out


def transit_series(ledger: MetricsLedger, duration: float, stride: float,
                   issuers=None):
    """Max time in transit sampled every ``stride`` seconds."""
    grid = time_grid(duration, stride)
    rows = []
    for uid, (issuer, _, t0) in ledger.issue_meta.items():
        if issuers is None or issuer in issuers:
            rows.append((t0, uid, ledger.dissem_time.get(uid, math.inf)))
    rows.sort()
    out = []
    pending = []        # min-heap of (dissem_time, issue_time, uid)
    alive = []          # min-heap of (issue_time, uid) with lazy deletion
    gone = set()        # uids already disseminated
    idx = 0
    for t in grid:
        while idx < len(rows) and rows[idx][0] <= t:
            t0, uid, done = rows[idx]
            heapq.heappush(pending, (done, t0, uid))
            heapq.heappush(alive, (t0, uid))
            idx += 1
        while pending and pending[0][0] <= t:
            gone.add(heapq.heappop(pending)[2])
        while alive and alive[0][1] in gone:
            gone.discard(heapq.heappop(alive)[1])
        out.append(t - alive[0][0] if alive else 0.0)
    return grid, out


def slope(xs, ys) -> float:
    """Least-squares slope; 0 for degenerate input."""
    pairs = [(x, y) for x, y in zip(xs, ys) if not math.isnan(y)]
    if len(pairs) < 2:
        return 0.0
    n = len(pairs)
    mx = sum(x for x, _ in pairs) / n
    my = sum(y for _, y in pairs) / n
    sxx = sum((x - mx) ** 2 for x, _ in pairs)
    if sxx == 0:
        return 0.0
    sxy = sum((x - mx) * (y - my) for x, y in pairs)
    return sxy / sxx


# -- independent fairness oracle ---------------------------------------------

def maxmin_oracle(demands: dict, reps: ReputationVector, nu: float) -> dict:
    """Weighted max-min allocation by progressive filling.

    ``demands`` maps node id to a rate cap or None for unbounded.  Unfrozen
    nodes share the remaining capacity in proportion to reputation; a node
    whose demand is met freezes at its demand.  The result sums to
    min(nu, total demand).
    """
    alloc = {m: 0.0 for m in demands}
    frozen = {m for m, d in demands.items() if d is not None and d <= 0.0}
    remaining = nu
    while True:
        active = [m for m in demands if m not in frozen]
        if not active or remaining <= 1e-15:
            break
        weight = sum(reps[m] for m in active)
        newly_frozen = []
        for m in active:
            tentative = remaining * reps[m] / weight
            d = demands[m]
            if d is not None and alloc[m] + tentative >= d - 1e-12:
                newly_frozen.append(m)
        if not newly_frozen:
            for m in active:
                alloc[m] += remaining * reps[m] / weight
            break
        for m in newly_frozen:
            remaining -= demands[m] - alloc[m]
            alloc[m] = demands[m]
            frozen.add(m)
        if remaining < 0:
            remaining = 0.0
    return alloc
