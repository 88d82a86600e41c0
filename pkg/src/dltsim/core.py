"""Domain types and closed-form quantities shared by every component.

Node ids are dense integers 0..n-1, assigned in decreasing reputation order
(id 0 is the highest-reputation node), so "rank" below means id + 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field


NodeId = int


class DomainError(ValueError):
    """Raised when an operation is called outside its contract."""


@dataclass(slots=True)
class Transaction:
    """One unit of dissemination.

    ``uid`` is globally unique per simulation and encodes (issuer, sequence
    number).  ``work`` is the writing work the transaction costs at every
    node.  ``seen_from`` is node-local state: the neighbours this particular
    copy has already been received from, consulted when forwarding.
    """

    uid: int
    issuer: NodeId
    work: float
    issue_time: float
    seen_from: set = field(default_factory=set)

    @property
    def id(self) -> tuple[NodeId, int]:
        return (self.issuer, self.uid & 0xFFFFFFFF)

    def clone_for(self, sender: NodeId) -> "Transaction":
        """Copy taken when a node first receives this transaction."""
        return Transaction(self.uid, self.issuer, self.work, self.issue_time,
                           {sender})


def make_uid(issuer: NodeId, seq: int) -> int:
    """Pack (issuer, per-issuer sequence number) into one int key."""
    return (issuer << 32) | seq


class ReputationVector:
    """Per-node reputation weights, kept raw (not normalised to sum 1)."""

    def __init__(self, values):
        values = [float(v) for v in values]
        if not values:
            raise DomainError("reputation vector must not be empty")
        if any(v <= 0 for v in values):
            raise DomainError("reputations must be positive")
        self.values = values
        self.total = sum(values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, m: NodeId) -> float:
        return self.values[m]

    def share(self, m: NodeId) -> float:
        return self.values[m] / self.total

    def rescaled(self, new_total: float) -> "ReputationVector":
        """Same shape, total scaled to ``new_total`` (conserved-total sweeps)."""
        f = new_total / self.total
        return ReputationVector([v * f for v in self.values])


def zipf_reputations(n: int, s: float) -> ReputationVector:
    """Rank-i node gets weight i^(-s); deterministic in (n, s)."""
    if n < 1:
        raise DomainError("need at least one node")
    if s < 0:
        raise DomainError("zipf exponent must be >= 0")
    return ReputationVector([(i + 1) ** (-s) for i in range(n)])


def assured_rate(m: NodeId, reps: ReputationVector, nu: float) -> float:
    """Issue rate (work/s) node m can always sustain without causing backlog:
    the scheduling rate scaled by m's reputation share."""
    if not 0 <= m < len(reps):
        raise DomainError(f"unknown node id {m}")
    return nu * reps[m] / reps.total


def total_work(txs) -> float:
    """Summed writing work of a transaction collection."""
    return sum(tx.work for tx in txs)


# --- node operating modes -------------------------------------------------

@dataclass(frozen=True, slots=True)
class Inactive:
    pass


@dataclass(frozen=True, slots=True)
class Content:
    """Issues at a fixed rate (work/s), Poisson in transaction count."""
    rate: float


@dataclass(frozen=True, slots=True)
class BestEffort:
    """Adapts its rate with the AIMD rate setter."""


@dataclass(frozen=True, slots=True)
class Malicious:
    """Issues at multiplier x assured rate and bypasses its own scheduler."""
    multiplier: float

    def __post_init__(self):
        if self.multiplier <= 1:
            raise DomainError("malicious multiplier must exceed 1")


NodeMode = object  # Inactive | Content | BestEffort | Malicious


def validate_mode(mode, m: NodeId, reps: ReputationVector, nu: float) -> None:
    """Configuration-time checks: content rate is capped at the assured rate."""
    if isinstance(mode, Content):
        cap = assured_rate(m, reps, nu)
        if mode.rate > cap * (1 + 1e-9):
            raise DomainError(
                f"content rate {mode.rate} of node {m} exceeds assured rate {cap}")
