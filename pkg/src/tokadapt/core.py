"""Core domain types: queries, batches, gamma domains, outcome classification.

All timestamps and durations are 64-bit integer microseconds.  Second-valued
configuration is converted once on ingest so the event loop only ever compares
integers (exact, replay-stable).  Utilities and accuracies stay floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

US_PER_S = 1_000_000


def us_from_s(seconds: float) -> int:
    """Convert a second-valued config number to integer microseconds."""
    if seconds == float("inf"):
        raise ValueError("cannot convert inf to microseconds; keep it as a float threshold")
    return int(round(seconds * US_PER_S))


def s_from_us(us: int) -> float:
    return us / US_PER_S


class OutcomeType(enum.Enum):
    """Terminal states of a query.  The four types partition all finished queries."""

    TYPE1 = 1  # correct result, finished strictly before the deadline
    TYPE2 = 2  # incorrect result, still before the deadline
    TYPE3 = 3  # executed but finished at/after the deadline
    TYPE4 = 4  # evicted before execution


@dataclass
class Query:
    """One inference request.  `outcome` is None while the query is pending."""

    id: int
    task: str
    arrival_us: int
    budget_us: int
    utility: float
    deadline_us: int = field(init=False)
    outcome: OutcomeType | None = field(default=None, init=False)

    def __post_init__(self):
        if self.budget_us <= 0:
            raise ValueError(f"query {self.id}: latency budget must be positive")
        if self.utility < 0:
            raise ValueError(f"query {self.id}: utility must be nonnegative")
        self.deadline_us = self.arrival_us + self.budget_us

    def finalize(self, outcome: OutcomeType) -> None:
        """Record the terminal outcome.  A query is classified exactly once."""
        if self.outcome is not None:
            raise ValueError(f"query {self.id} already classified as {self.outcome}")
        self.outcome = outcome


def classify_outcome(query: Query, finished: bool, correct: bool, finish_us: int) -> OutcomeType:
    """Map a realized execution result onto the four terminal outcome types.

    On-time means strictly before the deadline; a finish exactly at the
    deadline counts as late.
    """
    if not finished:
        return OutcomeType.TYPE4
    if finish_us >= query.deadline_us:
        return OutcomeType.TYPE3
    return OutcomeType.TYPE1 if correct else OutcomeType.TYPE2


@dataclass
class Batch:
    """An admission-grouped set of queries executed together.

    Derived attributes are maintained incrementally on `add`: arrival and
    deadline are the minima over members, the utility anchor is the utility of
    the first-arrived member (ties broken by lowest query id -- members are
    appended in arrival order, so the first element is the anchor).
    The admission-gap fields record, per batch, the largest deviation a member
    showed against the batch attributes at its admission; the batching
    thresholds bound these, which makes them checkable after the fact.
    """

    id: int
    queries: list[Query]
    gamma: int | None = None  # last planned assignment; None = unplanned or skipped
    arrival_us: int = field(init=False)
    deadline_us: int = field(init=False)
    anchor_utility: float = field(init=False)
    max_deadline_gap_at_admission_us: int = field(init=False, default=0)
    max_utility_gap_at_admission: float = field(init=False, default=0.0)
    task_counts: dict[str, int] = field(init=False)
    task_utility: dict[str, float] = field(init=False)

    def __post_init__(self):
        if not self.queries:
            raise ValueError("a batch must contain at least one query")
        first = self.queries[0]
        rest = self.queries[1:]
        self.queries = [first]
        self.arrival_us = first.arrival_us
        self.deadline_us = first.deadline_us
        self.anchor_utility = first.utility
        self.task_counts = {first.task: 1}
        self.task_utility = {first.task: first.utility}
        for q in rest:
            self.add(q)

    @property
    def size(self) -> int:
        return len(self.queries)

    def add(self, query: Query) -> None:
        self.max_deadline_gap_at_admission_us = max(
            self.max_deadline_gap_at_admission_us, abs(self.deadline_us - query.deadline_us)
        )
        self.max_utility_gap_at_admission = max(
            self.max_utility_gap_at_admission, abs(self.anchor_utility - query.utility)
        )
        self.queries.append(query)
        self.arrival_us = min(self.arrival_us, query.arrival_us)
        self.deadline_us = min(self.deadline_us, query.deadline_us)
        self.task_counts[query.task] = self.task_counts.get(query.task, 0) + 1
        self.task_utility[query.task] = self.task_utility.get(query.task, 0.0) + query.utility


def batch_attributes(batch: Batch) -> tuple[int, int, float]:
    """Recompute (arrival, deadline, utility anchor) from scratch.

    The Batch fields above are maintained incrementally; this is the
    independent from-first-principles computation used for cross-checks.
    """
    if not batch.queries:
        raise ValueError("empty batch has no attributes")
    arrival = min(q.arrival_us for q in batch.queries)
    deadline = min(q.deadline_us for q in batch.queries)
    anchor = min(batch.queries, key=lambda q: (q.arrival_us, q.id))
    return arrival, deadline, anchor.utility


@dataclass(frozen=True)
class GammaList:
    """The discrete token-delta domain the planner selects from.

    Negative values merge tokens, positive values prepend trained prompt
    tokens, zero runs the vanilla model.  Planner column 0 means "batch not
    executed"; column l in [1, N] refers to values[l-1].
    """

    values: tuple[int, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("gamma list must not be empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("gamma values must be strictly increasing")

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def minimum(self) -> int:
        return self.values[0]

    @property
    def maximum(self) -> int:
        return self.values[-1]

    def at_column(self, column: int) -> int:
        """Map a planner column in [1, N] to its gamma value."""
        if not 1 <= column <= len(self.values):
            raise IndexError(f"planner column {column} out of range 1..{len(self.values)}")
        return self.values[column - 1]

    def __contains__(self, gamma: int) -> bool:
        return gamma in self.values

    def __iter__(self):
        return iter(self.values)


@dataclass
class TokenPlan:
    """Gamma assignment per batch id; None marks a batch left unexecuted (skip)."""

    assignments: dict[int, int | None]
    expected_utility: float | None = None  # planner-estimated total, when the planner computes one

    def gamma_for(self, batch_id: int) -> int | None:
        return self.assignments[batch_id]

    def is_skip(self, batch_id: int) -> bool:
        return self.assignments[batch_id] is None

    def __len__(self) -> int:
        return len(self.assignments)
