"""Topology generation, stochastic channel delays, and the deterministic
discrete-event engine.

One master seed per run is split (numpy SeedSequence) into independent
streams for topology, channel means, per-transaction delay jitter, and one
issue stream per node, so changing one scenario knob never perturbs the
others.  Events are processed in (time, insertion-sequence) order, which
makes every run bit-reproducible for a given seed.
"""

from __future__ import annotations

import gc
import heapq
import random
from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .config import ConfigError, SimConfig, resolve_modes
from .core import (BestEffort, Content, Inactive, Malicious, ReputationVector,
                   Transaction, assured_rate, make_uid, validate_mode,
                   zipf_reputations)
from .metrics import MetricsLedger
from .node import (M_BE, M_CONTENT, M_INACTIVE, M_MAL, M_POW, MODE_NAMES,
                   Node)
from .pow_baseline import PowConfig, pow_issue_rate
from .rate_setter import RateState, local_alpha, on_scheduled
from .scheduler import DeficitState

EV_DELIVER, EV_SCHED, EV_ISSUE, EV_SWITCH, EV_SAMPLE = range(5)


# -- topology -----------------------------------------------------------------

def build_topology(n: int, k: int, rng: random.Random,
                   model: str = "regular"):
    """Connected random graph where every node talks to k neighbours.

    "regular": configuration-model sampling, rejected until the multigraph
    is simple and connected, giving a uniform-ish random k-regular graph.
    "union4": every node picks k peers; the edge union gives degree >= k.
    """
    if n == 1 and k == 0:
        return [[]]
    if n <= k:
        raise ConfigError("need more nodes than neighbours per node")
    if model == "regular":
        if (n * k) % 2 != 0:
            raise ConfigError("n * k must be even for a k-regular graph")
        while True:
            adj = _pair_stubs(n, k, rng)
            if adj is not None and _connected(adj):
                return [sorted(a) for a in adj]
    elif model == "union4":
        while True:
            adj = [set() for _ in range(n)]
            for u in range(n):
                peers = rng.sample([v for v in range(n) if v != u], k)
                for v in peers:
                    adj[u].add(v)
                    adj[v].add(u)
            if _connected(adj):
                return [sorted(a) for a in adj]
    raise ConfigError(f"unknown topology model {model!r}")


def _pair_stubs(n, k, rng):
    stubs = list(range(n)) * k
    rng.shuffle(stubs)
    adj = [set() for _ in range(n)]
    for i in range(0, len(stubs), 2):
        u, v = stubs[i], stubs[i + 1]
        if u == v or v in adj[u]:
            return None
        adj[u].add(v)
        adj[v].add(u)
    return adj


def _connected(adj):
    seen = {0}
    stack = [0]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(adj)


@dataclass(slots=True)
class Channel:
    endpoints: tuple
    mean_delay: float
    per_tx_std: float


def sample_delay(channel: Channel, rng: random.Random,
                 floor: float = 0.001) -> float:
    """Per-transaction delay: normal around the channel mean, floored so a
    delivery never precedes (or ties) its send."""
    d = rng.gauss(channel.mean_delay, channel.per_tx_std)
    return d if d > floor else floor


# -- run output ---------------------------------------------------------------

@dataclass
class RunResult:
    config: SimConfig
    run_index: int
    reputations: list
    mode_names: list
    ledger: MetricsLedger
    peak_inbox: list
    max_work: float
    adjacency: list = field(default_factory=list)
    assured: list = field(default_factory=list)

    def honest_ids(self):
        return sorted(self.ledger.honest)


class Engine:
    """Single-run discrete-event simulation."""

    def __init__(self, cfg: SimConfig, run_index: int = 0):
        cfg.validate()
        self.cfg = cfg
        self.run_index = run_index
        n = cfg.node_count
        self.n = n
        self.nu = cfg.scheduling_rate
        self.duration = cfg.duration
        self.pow_mode = cfg.access_control == "pow"

        ss = np.random.SeedSequence([cfg.seed & 0x7FFFFFFF, run_index])
        topo_ss, mean_ss, noise_ss, issue_ss = ss.spawn(4)
        topo_rng = random.Random(int(topo_ss.generate_state(1, np.uint64)[0]))
        mean_rng = random.Random(int(mean_ss.generate_state(1, np.uint64)[0]))
        self.delay_rng = random.Random(
            int(noise_ss.generate_state(1, np.uint64)[0]))
        issue_seeds = issue_ss.spawn(n)

        if cfg.explicit_reputations is not None:
            reps = ReputationVector(cfg.explicit_reputations)
            if len(reps) != n:
                raise ConfigError("explicit reputations must cover every node")
        else:
            reps = zipf_reputations(n, cfg.zipf_exponent)
        if cfg.reputation_total is not None:
            reps = reps.rescaled(cfg.reputation_total)
        self.reps = reps

        self.adjacency = build_topology(n, cfg.neighbour_count, topo_rng,
                                        cfg.topology)
        self.chan_mean = [[0.0] * n for _ in range(n)]
        for u in range(n):
            for v in self.adjacency[u]:
                if v > u:
                    mean = mean_rng.uniform(cfg.delay_mean_low,
                                            cfg.delay_mean_high)
                    self.chan_mean[u][v] = mean
                    self.chan_mean[v][u] = mean

        # per-node work distributions
        iot = set(cfg.iot_ids or [])
        work_bounds = []
        for m in range(n):
            if m in iot:
                work_bounds.append((cfg.iot_low, cfg.iot_high))
            elif cfg.work_kind == "uniform":
                work_bounds.append((cfg.work_low, cfg.work_high))
            else:
                work_bounds.append((cfg.work_low, cfg.work_low))
        self.max_work = max(hi for _, hi in work_bounds)
        if self.max_work > cfg.deficit_cap:
            raise ConfigError("max transaction work exceeds deficit_cap")

        if self.pow_mode:
            self.pow = PowConfig.calibrate(reps, self.nu, cfg.pow_scale,
                                           cfg.pow_inactive, cfg.pow_stochastic)
            modes = [Inactive() if not self.pow.active[m] else None
                     for m in range(n)]
        else:
            self.pow = None
            modes = resolve_modes(cfg, reps, self.nu)

        turns_malicious = {sw.node for sw in cfg.switches
                           if isinstance(sw.mode, Malicious)}
        honest = [m for m in range(n)
                  if not isinstance(modes[m], Malicious)
                  and m not in turns_malicious]
        self.metrics = MetricsLedger(honest)

        self.nodes = []
        for m in range(n):
            deficit = DeficitState(reps, cfg.quantum_scale, cfg.deficit_cap)
            rng = random.Random(int(issue_seeds[m].generate_state(1, np.uint64)[0]))
            lo, hi = work_bounds[m]
            node = Node(m, n, self.adjacency[m], deficit, rng, lo, hi)
            node.assured = assured_rate(m, reps, self.nu)
            self.nodes.append(node)

        self.heap = []
        self.seq = 0
        # optional test hooks
        self.on_schedule = None
        self.on_forward = None
        self.on_deliver = None

        for m in range(n):
            self._apply_mode(self.nodes[m], modes[m], 0.0)
        for sw in cfg.switches:
            if not 0 <= sw.node < n:
                raise ConfigError(f"switch targets unknown node {sw.node}")
            if not 0.0 <= sw.time <= cfg.duration:
                raise ConfigError("switch time outside the run duration")
            self._push(sw.time, EV_SWITCH, sw.node, sw.mode, None)
        if cfg.sample_cadence > 0:
            self._push(cfg.sample_cadence, EV_SAMPLE, 0, None, None)

        self.mode_names = []
        for m in range(n):
            name = MODE_NAMES[self.nodes[m].mode_kind]
            self.mode_names.append(name)

    # -- setup helpers ---------------------------------------------------------

    def _push(self, t, kind, node, obj, aux):
        heapq.heappush(self.heap, (t, self.seq, kind, node, obj, aux))
        self.seq += 1

    def _apply_mode(self, node: Node, mode, now: float):
        cfg = self.cfg
        node.mode = mode
        node.rate = None  # only best-effort mode runs the rate setter
        if self.pow_mode and mode is None:
            node.mode_kind = M_POW
            node.fixed_rate = pow_issue_rate(self.pow, node.id)
            node.pending_work = node.draw_work()
            self._push(now + self._pow_gap(node), EV_ISSUE, node.id, None,
                       node.issue_gen)
        elif isinstance(mode, Inactive) or mode is None:
            node.mode_kind = M_INACTIVE
        elif isinstance(mode, Content):
            validate_mode(mode, node.id, self.reps, self.nu)
            node.mode_kind = M_CONTENT
            node.count_rate = mode.rate / node.mean_work()
            gap = node.issue_rng.expovariate(node.count_rate)
            self._push(now + gap, EV_ISSUE, node.id, None, node.issue_gen)
        elif isinstance(mode, BestEffort):
            node.mode_kind = M_BE
            threshold = cfg.backlog_threshold * (
                self.reps[node.id] if cfg.threshold_on_raw_rep
                else self.reps.share(node.id))
            node.rate = RateState(
                lam=node.assured,
                alpha=local_alpha(cfg.rate_increase, node.id, self.reps),
                threshold=threshold,
                beta=cfg.rate_decrease,
                tau=cfg.pause_seconds,
                ema_coeff=cfg.ema_coeff,
            )
            node.last_issue = now
            node.pending_work = node.draw_work()
            self._push(now + node.pending_work / node.rate.lam, EV_ISSUE,
                       node.id, None, node.issue_gen)
        elif isinstance(mode, Malicious):
            node.mode_kind = M_MAL
            node.fixed_rate = mode.multiplier * node.assured
            node.pending_work = node.draw_work()
            self._push(now + node.pending_work / node.fixed_rate, EV_ISSUE,
                       node.id, None, node.issue_gen)
        else:
            raise ConfigError(f"unsupported mode {mode!r}")
        return node

    def _pow_gap(self, node: Node) -> float:
        if self.cfg.pow_stochastic:
            return node.issue_rng.expovariate(node.fixed_rate /
                                              node.pending_work)
        return node.pending_work / node.fixed_rate

    # -- main loop -------------------------------------------------------------

    def run(self) -> RunResult:
        if not self.pow_mode:
            for m in range(self.n):
                self._push(0.0, EV_SCHED, m, None, None)
        gc_was_enabled = gc.isenabled()
        gc.disable()
        try:
            self._loop()
        finally:
            if gc_was_enabled:
                gc.enable()
        return RunResult(
            config=self.cfg,
            run_index=self.run_index,
            reputations=list(self.reps.values),
            mode_names=self.mode_names,
            ledger=self.metrics,
            peak_inbox=[nd.peak_inbox for nd in self.nodes],
            max_work=self.max_work,
            adjacency=self.adjacency,
            assured=[nd.assured for nd in self.nodes],
        )

    def _loop(self):
        heap = self.heap
        pop = heapq.heappop
        duration = self.duration
        nodes = self.nodes
        deliver = self._deliver
        sched = self._sched_fifo if self.pow_mode else self._sched_drr
        issue = self._issue
        while heap:
            ev = pop(heap)
            t = ev[0]
            if t > duration:
                break
            kind = ev[2]
            if kind == EV_DELIVER:
                deliver(t, nodes[ev[3]], ev[4], ev[5])
            elif kind == EV_SCHED:
                sched(t, nodes[ev[3]])
            elif kind == EV_ISSUE:
                issue(t, nodes[ev[3]], ev[5])
            elif kind == EV_SWITCH:
                node = nodes[ev[3]]
                node.issue_gen += 1
                self._apply_mode(node, ev[4], t)
                self.mode_names[node.id] = (
                    self.mode_names[node.id] + "->" +
                    MODE_NAMES[node.mode_kind])
            else:
                self._sample(t)

    # -- event handlers ----------------------------------------------------------

    def _deliver(self, t, node: Node, tx, sender):
        if self.on_deliver is not None:
            self.on_deliver(t, node.id, tx.uid, sender)
        if self.pow_mode:
            if node.receive_fifo(tx, sender) and node.fifo_idle:
                node.fifo_idle = False
                self._push(t, EV_SCHED, node.id, None, None)
            return
        dropped = node.receive(tx, sender, self.reps, self.cfg.inbox_capacity)
        if dropped is None:
            return
        if node.sleeping:
            node.sleeping = False
            node.cyc_pos = 0
            node.cyc_accrued = False
            node.cyc_any = False
            self._push(t, EV_SCHED, node.id, None, None)
        for d in dropped:
            self.metrics.record_drop(d.uid, node.id, t)

    def _sched_drr(self, t, node: Node):
        inbox = node.inbox
        queues = inbox.queues
        dc = node.deficit.counters
        quantum = node.deficit.quantum
        cap = node.deficit.cap
        n = self.n
        accrual_on = self.cfg.empty_queue_accrual
        use_skip = self.cfg.drr_idle_skip
        skip = node.skip
        pos = node.cyc_pos
        accrued = node.cyc_accrued
        any_sched = node.cyc_any
        while True:
            if pos >= n:
                if any_sched:
                    pos = 0
                    any_sched = False
                    continue
                if inbox.count:
                    # Backlogged but nothing affordable: the round-robin loop
                    # spins in zero time, so advance every counter by the k
                    # whole cycles needed until the nearest head is payable.
                    self._fast_forward(node)
                    pos = 0
                    continue
                node.cyc_pos = 0
                node.cyc_accrued = False
                node.cyc_any = False
                if accrual_on and node.accruable:
                    # empty inbox: deficits still accrue, paced by the idle
                    # polling cadence until every counter reaches the cap
                    self._push(t + self.cfg.idle_cadence, EV_SCHED, node.id,
                               None, None)
                else:
                    node.sleeping = True
                return
            i = pos
            if use_skip and skip[i]:
                pos += 1
                continue
            queue = queues[i]
            if not accrued:
                if (accrual_on or queue) and dc[i] < cap:
                    dc[i] += quantum[i]
                    if dc[i] >= cap:
                        node.accruable -= 1
                accrued = True
            if queue:
                head = queue[0]
                w = head.work
                d = dc[i]
                if d >= w:
                    inbox.pop_head(i)
                    if d >= cap and d - w < cap:
                        node.accruable += 1
                    dc[i] = d - w
                    node.cyc_pos = pos
                    node.cyc_accrued = True
                    node.cyc_any = True
                    self._emit(t, node, head)
                    self._push(t + w / self.nu, EV_SCHED, node.id, None, None)
                    return
            elif (not accrual_on) or dc[i] >= cap:
                skip[i] = True
            pos += 1
            accrued = False

    def _fast_forward(self, node: Node):
        """Skip the zero-time cycles during which no backlogged head is
        affordable.

        With k = min over backlogged issuers of the number of per-cycle
        top-ups needed to pay for their head, cycles 1..k-1 schedule nothing,
        so their accruals can be applied in closed form; the caller then
        rescans, and that scan performs cycle k's own per-visit top-ups.
        Heads never exceed the deficit cap, so k is always finite.
        """
        dc = node.deficit.counters
        quantum = node.deficit.quantum
        cap = node.deficit.cap
        queues = node.inbox.queues
        k = None
        for i in range(self.n):
            q = queues[i]
            if not q:
                continue
            need = q[0].work - dc[i]
            ki = 0 if need <= 0 else ceil(need / quantum[i])
            if k is None or ki < k:
                k = ki
            if k == 0:
                break
        whole = k - 1
        if whole < 1:
            return
        accrual_on = self.cfg.empty_queue_accrual
        for i in range(self.n):
            d = dc[i]
            if d >= cap or not (accrual_on or queues[i]):
                continue
            j_star = ceil((cap - d) / quantum[i])
            j = whole if whole < j_star else j_star
            dc[i] = d + j * quantum[i]
            if dc[i] >= cap:
                node.accruable -= 1

    def _sched_fifo(self, t, node: Node):
        fifo = node.fifo
        if not fifo:
            node.fifo_idle = True
            return
        tx = fifo.popleft()
        node.fifo_work = node.fifo_work - tx.work if fifo else 0.0
        self._emit(t, node, tx)
        self._push(t + tx.work / self.nu, EV_SCHED, node.id, None, None)

    def _emit(self, t, node: Node, tx):
        """A scheduled transaction becomes visible, updates the rate setter,
        and floods to the remaining neighbours."""
        node.mark_visible(tx)
        self.metrics.record_arrival(tx.uid, node.id, t)
        if self.on_schedule is not None:
            self.on_schedule(t, node.id, tx.uid)
        rs = node.rate
        if rs is not None:
            on_scheduled(rs, tx.work, node.inbox.issuer_work[node.id], t)
        self._forward(t, node, tx)

    def _forward(self, t, node: Node, tx):
        sf = tx.seen_from
        issuer = tx.issuer
        m = node.id
        means = self.chan_mean[m]
        gauss = self.delay_rng.gauss
        std = self.cfg.delay_jitter_std
        floor = self.cfg.delay_floor
        heap = self.heap
        seq = self.seq
        for nb in node.neighbours:
            if nb in sf or nb == issuer:
                continue
            d = gauss(means[nb], std)
            if d < floor:
                d = floor
            heapq.heappush(heap, (t + d, seq, EV_DELIVER, nb, tx, m))
            seq += 1
            if self.on_forward is not None:
                self.on_forward(t, m, nb, tx.uid)
        self.seq = seq

    def _issue(self, t, node: Node, gen):
        if gen != node.issue_gen:
            return
        kind = node.mode_kind
        if kind == M_CONTENT:
            tx = self._make_tx(node, node.draw_work(), t)
            self._admit_own(t, node, tx)
            gap = node.issue_rng.expovariate(node.count_rate)
            self._push(t + gap, EV_ISSUE, node.id, None, gen)
        elif kind == M_BE:
            rs = node.rate
            due = node.last_issue + node.pending_work / rs.lam
            if rs.paused_until > due:
                due = rs.paused_until
            if due > t + 1e-9:
                self._push(due, EV_ISSUE, node.id, None, gen)
                return
            tx = self._make_tx(node, node.pending_work, t)
            self._admit_own(t, node, tx)
            node.last_issue = t
            node.pending_work = node.draw_work()
            self._push(t + node.pending_work / rs.lam, EV_ISSUE, node.id,
                       None, gen)
        elif kind == M_MAL:
            # malicious transactions skip the local scheduler entirely
            tx = self._make_tx(node, node.pending_work, t)
            node.seen.add(tx.uid)
            node.visible.add(tx.uid)
            self.metrics.record_arrival(tx.uid, node.id, t)
            self._forward(t, node, tx)
            node.pending_work = node.draw_work()
            self._push(t + node.pending_work / node.fixed_rate, EV_ISSUE,
                       node.id, None, gen)
        elif kind == M_POW:
            tx = self._make_tx(node, node.pending_work, t)
            node.admit_own_fifo(tx)
            if node.fifo_idle:
                node.fifo_idle = False
                self._push(t, EV_SCHED, node.id, None, None)
            node.pending_work = node.draw_work()
            self._push(t + self._pow_gap(node), EV_ISSUE, node.id, None, gen)

    def _make_tx(self, node: Node, work: float, t: float) -> Transaction:
        uid = make_uid(node.id, node.issue_seq)
        node.issue_seq += 1
        tx = Transaction(uid, node.id, work, t, set())
        self.metrics.record_issue(uid, node.id, work, t)
        return tx

    def _admit_own(self, t, node: Node, tx):
        dropped = node.admit_own(tx, self.reps, self.cfg.inbox_capacity)
        if node.sleeping:
            node.sleeping = False
            node.cyc_pos = 0
            node.cyc_accrued = False
            node.cyc_any = False
            self._push(t, EV_SCHED, node.id, None, None)
        for d in dropped:
            self.metrics.record_drop(d.uid, node.id, t)

    def _sample(self, t):
        lam = [nd.rate.lam if nd.rate is not None else float("nan")
               for nd in self.nodes]
        inbox = [nd.fifo_work if self.pow_mode else nd.inbox.total_work
                 for nd in self.nodes]
        self.metrics.samples.append((t, inbox, lam))
        self._push(t + self.cfg.sample_cadence, EV_SAMPLE, 0, None, None)


def run_simulation(cfg: SimConfig, run_index: int = 0) -> RunResult:
    return Engine(cfg, run_index).run()
