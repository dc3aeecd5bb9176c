"""Profiled accuracy/latency tables and the estimators built on them.

The tables are the planner's only model of the hardware: execution time for a
batch is the sum of per-sample profiled latencies (optionally overridden by a
batch-size-aware row), expected utility is accuracy-weighted query utility,
and memory demand is an affine function of batch size and token count.
"""

from __future__ import annotations

import bisect
import csv
from dataclasses import dataclass, field

from .core import Batch, GammaList, us_from_s
from .errors import ConfigError, ProfileGapError

PROFILE_CSV_HEADER = ["kind", "task", "gamma", "batch_size", "value"]


@dataclass
class ProfileTable:
    """Per-(task, gamma) accuracy and per-sample latency, plus optional
    per-(gamma, batch size) latency rows that override the per-sample sum.

    base_tokens is the input token count per sample before adaptation;
    layers is the number of transformer layers prompt tokens are added to.
    """

    accuracy: dict[tuple[str, int], float] = field(default_factory=dict)
    sample_latency_us: dict[tuple[str, int], int] = field(default_factory=dict)
    batch_latency_us: dict[tuple[int, int], int] = field(default_factory=dict)
    base_tokens: int = 197
    layers: int = 12

    def tasks(self) -> list[str]:
        return sorted({task for task, _ in self.sample_latency_us})

    def accuracy_for(self, task: str, gamma: int) -> float:
        try:
            return self.accuracy[(task, gamma)]
        except KeyError:
            raise ProfileGapError(task, gamma, "accuracy") from None

    def sample_latency_for(self, task: str, gamma: int) -> int:
        try:
            return self.sample_latency_us[(task, gamma)]
        except KeyError:
            raise ProfileGapError(task, gamma, "latency") from None

    def validate_coverage(self, tasks: list[str], gammas: GammaList) -> None:
        """Every (task, gamma) pair reachable by the config must be profiled."""
        for task in tasks:
            for gamma in gammas:
                self.accuracy_for(task, gamma)
                self.sample_latency_for(task, gamma)

    def validate(self) -> None:
        for (task, gamma), acc in self.accuracy.items():
            if not 0.0 <= acc <= 1.0:
                raise ConfigError(f"accuracy for ({task}, {gamma}) out of [0,1]: {acc}")
        for (task, gamma), lat in self.sample_latency_us.items():
            if lat <= 0:
                raise ConfigError(f"latency for ({task}, {gamma}) must be positive")
        for (_, size), lat in self.batch_latency_us.items():
            if lat <= 0 or size <= 0:
                raise ConfigError("batch latency rows need positive size and latency")
        # More tokens never run faster: per-task latency must be non-decreasing in gamma.
        by_task: dict[str, list[tuple[int, int]]] = {}
        for (task, gamma), lat in self.sample_latency_us.items():
            by_task.setdefault(task, []).append((gamma, lat))
        for task, rows in by_task.items():
            rows.sort()
            for (g1, l1), (g2, l2) in zip(rows, rows[1:]):
                if l2 < l1:
                    raise ConfigError(
                        f"latency not monotone for task {task!r}: "
                        f"gamma {g2} is faster than gamma {g1}"
                    )


def load_profile_csv(path: str, base_tokens: int = 197, layers: int = 12) -> ProfileTable:
    """Load a profile table from CSV with header kind,task,gamma,batch_size,value.

    kind is one of accuracy, sample_latency_s, batch_latency_s; batch_size is
    only set on batch_latency_s rows.  Latencies are given in seconds and
    stored as integer microseconds.
    """
    table = ProfileTable(base_tokens=base_tokens, layers=layers)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PROFILE_CSV_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(PROFILE_CSV_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 5:
                raise ConfigError(f"{path}:{line_no}: expected 5 columns, got {len(row)}")
            kind, task, gamma_s, size_s, value_s = (cell.strip() for cell in row)
            try:
                gamma = int(gamma_s)
                value = float(value_s)
            except ValueError as exc:
                raise ConfigError(f"{path}:{line_no}: {exc}") from None
            if kind == "accuracy":
                table.accuracy[(task, gamma)] = value
            elif kind == "sample_latency_s":
                table.sample_latency_us[(task, gamma)] = us_from_s(value)
            elif kind == "batch_latency_s":
                try:
                    size = int(size_s)
                except ValueError:
                    raise ConfigError(
                        f"{path}:{line_no}: batch_latency_s rows need a batch_size"
                    ) from None
                table.batch_latency_us[(gamma, size)] = us_from_s(value)
            else:
                raise ConfigError(f"{path}:{line_no}: unknown kind {kind!r}")
    table.validate()
    return table


def estimate_batch(batch: Batch, gamma: int, table: ProfileTable) -> tuple[int, float]:
    """Predict (execution time in us, expected utility) for a batch at a gamma.

    Time is the member count per task times the profiled per-sample latency,
    summed over tasks; a (gamma, batch size) row, when present, overrides the
    sum.  Expected utility weights each member's utility by the profiled
    accuracy of its task.
    """
    expected_utility = 0.0
    for task, util_sum in batch.task_utility.items():
        expected_utility += table.accuracy_for(task, gamma) * util_sum
    override = table.batch_latency_us.get((gamma, batch.size))
    if override is not None:
        return override, expected_utility
    total_us = 0
    for task, count in batch.task_counts.items():
        total_us += count * table.sample_latency_for(task, gamma)
    return total_us, expected_utility


@dataclass(frozen=True)
class MemoryModel:
    """Affine accelerator-memory model: fixed cost plus per-token per-sample cost."""

    c0_bytes: int
    c1_bytes_per_token: int
    gpu_capacity_bytes: int

    def __post_init__(self):
        if self.c0_bytes < 0:
            raise ConfigError("memory model base cost must be nonnegative")
        if self.c1_bytes_per_token <= 0 or self.gpu_capacity_bytes <= 0:
            raise ConfigError("memory model token cost and capacity must be positive")


def batch_memory(batch: Batch, gamma: int, mem: MemoryModel, table: ProfileTable) -> int:
    """Peak memory demand for a batch executed at a gamma, in bytes.

    Negative gamma does not shrink the estimate: merging happens during
    execution, so the peak is at entry with the full token count.
    """
    tokens = table.base_tokens + max(gamma, 0) * table.layers
    return mem.c0_bytes + mem.c1_bytes_per_token * batch.size * tokens


@dataclass(frozen=True)
class RateToGammaMap:
    """Piecewise-constant projection from arrival rate to gamma.

    Breakpoints are (rate lower bound, gamma) with strictly increasing bounds;
    each covers the half-open range up to the next bound, the last extends to
    infinity, and rates below the first bound fall into the first entry.
    """

    breakpoints: tuple[tuple[float, int], ...]

    def __post_init__(self):
        if not self.breakpoints:
            raise ConfigError("rate-to-gamma map must not be empty")
        bounds = [b for b, _ in self.breakpoints]
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ConfigError("rate breakpoints must be strictly increasing")
        if not 0 <= bounds[0] <= 1:
            raise ConfigError("first rate breakpoint must be 0 or 1")

    def validate_against(self, gammas: GammaList) -> None:
        for _, gamma in self.breakpoints:
            if gamma not in gammas:
                raise ConfigError(f"rate map selects gamma {gamma} outside the gamma list")


def project_rate(rate_per_s: float, rate_map: RateToGammaMap) -> int:
    """Gamma of the highest breakpoint whose lower bound does not exceed the rate."""
    if rate_per_s < 0:
        raise ValueError("arrival rate must be nonnegative")
    bounds = [b for b, _ in rate_map.breakpoints]
    idx = bisect.bisect_right(bounds, rate_per_s) - 1
    if idx < 0:
        idx = 0  # below the first bound: use the first entry
    return rate_map.breakpoints[idx][1]


def derive_f(table: ProfileTable, gammas: GammaList, reference_batch_size: int) -> RateToGammaMap:
    """Build a rate projection from profiled throughput at each gamma.

    Sustainable throughput per gamma is reference batch size divided by the
    mean batch latency over tasks.  Larger gammas are preferred at lower
    rates, each covering arrival rates up to its own throughput.
    """
    if reference_batch_size < 1:
        raise ConfigError("reference batch size must be at least 1")
    tasks = table.tasks()
    if not tasks:
        raise ConfigError("profile table has no latency rows to derive throughput from")
    throughput: dict[int, float] = {}
    for gamma in gammas:
        override = table.batch_latency_us.get((gamma, reference_batch_size))
        if override is not None:
            mean_latency_us = float(override)
        else:
            total = 0
            for task in tasks:
                total += reference_batch_size * table.sample_latency_for(task, gamma)
            mean_latency_us = total / len(tasks)
        throughput[gamma] = reference_batch_size * 1_000_000.0 / mean_latency_us
    ordered = sorted(gammas, reverse=True)  # largest gamma first = lowest-rate bucket
    breakpoints: list[tuple[float, int]] = [(0.0, ordered[0])]
    for prev, nxt in zip(ordered, ordered[1:]):
        bound = throughput[prev]
        if bound > breakpoints[-1][0]:
            breakpoints.append((bound, nxt))
    return RateToGammaMap(tuple(breakpoints))
