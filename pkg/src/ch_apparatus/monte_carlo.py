"""Seeded trial campaigns over the eight stop setups.

Start angles come from a counter-based generator: trial i of a sequence is a
pure function of (seed, i), so any index range can be generated on any worker
and the campaign is bitwise reproducible regardless of how work is split.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .apparatus import (
    ALL_SETUPS,
    SINGLE_STOP_SETUPS,
    TWO_STOP_SETUPS,
    ApparatusConfig,
    EngravedLines,
    config_for_setup,
    fig2_lines,
    run_trials,
)
from .circle_geometry import TWO_PI
from .exact_engine import CELLS, ConditionalTable
from .inequality_analysis import SettingFrequencies

# 95% two-sided normal quantile, used by the Wilson score interval.
Z95 = 1.959963984540054

_CHUNK = 1 << 16

# Counts tracked per sequence: stop-reach cells, per-side stop reaches, and
# the four line crossings.
COUNT_KEYS = ("11", "10", "01", "00", "left_stop", "right_stop", "A", "A'", "B", "B'")

__all__ = [
    "Z95",
    "COUNT_KEYS",
    "PlanError",
    "EstimateError",
    "SequenceSpec",
    "CampaignPlan",
    "Estimate",
    "SequenceResult",
    "EstimateReport",
    "phi_samples",
    "sequence_seed",
    "estimate",
    "run_sequence",
    "run_campaign",
]


class PlanError(ValueError):
    """A campaign plan does not cover the protocol."""


class EstimateError(ValueError):
    """An estimate was requested from zero trials."""


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def phi_samples(seed: int, start: int, stop: int) -> np.ndarray:
    """Uniform start angles for trial indices [start, stop).

    Pure function of (seed, index): the counter stream can be cut at any
    point without changing a single value.
    """
    if not 0 <= start <= stop:
        raise ValueError(f"bad index range [{start}, {stop})")
    idx = np.arange(start, stop, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (idx + np.uint64(1)) * _GOLDEN)
    u = (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    return u * TWO_PI


def sequence_seed(master_seed: int, setup: str) -> int:
    """Per-sequence seed derived from the master seed and the setup's slot."""
    slot = ALL_SETUPS.index(setup)
    with np.errstate(over="ignore"):
        z = _mix64(np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) * _GOLDEN + np.uint64(slot + 1))
    return int(z)


@dataclass(frozen=True)
class SequenceSpec:
    """One run of trials with a fixed stop setup."""

    setup: str
    n_trials: int
    seed: int

    def validate(self) -> "SequenceSpec":
        if self.setup not in ALL_SETUPS:
            raise PlanError(f"unknown setup label {self.setup!r}")
        if self.n_trials < 0:
            raise PlanError(f"n_trials must be nonnegative, got {self.n_trials}")
        return self


@dataclass(frozen=True)
class CampaignPlan:
    """Eight sequences covering the protocol, plus the apparatus parameters.

    Single-stop sequences may have zero trials; the useless trials can be
    spared.  Exactly one of (theta, lines) describes the engraving.
    """

    gamma: float
    sequences: tuple[SequenceSpec, ...]
    master_seed: int
    theta: float | None = None
    lines: EngravedLines | None = None

    @classmethod
    def from_params(
        cls,
        gamma: float,
        theta: float | None = None,
        lines: EngravedLines | None = None,
        n_trials: int | dict[str, int] = 10**6,
        master_seed: int = 0,
    ) -> "CampaignPlan":
        if isinstance(n_trials, int):
            n_per = {s: n_trials for s in ALL_SETUPS}
        else:
            n_per = {s: int(n_trials.get(s, 0)) for s in ALL_SETUPS}
        sequences = tuple(
            SequenceSpec(setup=s, n_trials=n_per[s], seed=sequence_seed(master_seed, s))
            for s in ALL_SETUPS
        )
        return cls(
            gamma=gamma, theta=theta, lines=lines, sequences=sequences, master_seed=master_seed
        ).validate()

    def engraving(self) -> EngravedLines:
        if (self.theta is None) == (self.lines is None):
            raise PlanError("exactly one of theta or explicit lines must be given")
        if self.lines is not None:
            return self.lines
        return fig2_lines(self.gamma, self.theta)

    def validate(self) -> "CampaignPlan":
        self.engraving()
        seen: dict[str, SequenceSpec] = {}
        for spec in self.sequences:
            spec.validate()
            if spec.setup in seen:
                raise PlanError(f"duplicate sequence for setup {spec.setup!r}")
            seen[spec.setup] = spec
        missing = [s for s in TWO_STOP_SETUPS if s not in seen]
        if missing:
            raise PlanError(f"plan is missing two-stop setups {missing!r}")
        return self


class Estimate(NamedTuple):
    """Point estimate with its binomial standard error and Wilson 95% CI."""

    p_hat: float
    stderr: float
    ci95: tuple[float, float]


def estimate(count: int, n: int) -> Estimate:
    """Binomial estimate from ``count`` hits in ``n`` trials."""
    if n < 1:
        raise EstimateError(f"no trials to estimate from (n={n})")
    if not 0 <= count <= n:
        raise ValueError(f"count {count} out of range for n={n}")
    p = count / n
    stderr = math.sqrt(p * (1.0 - p) / n)
    z2 = Z95 * Z95
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = Z95 * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return Estimate(p_hat=p, stderr=stderr, ci95=(max(0.0, center - half), min(1.0, center + half)))


@dataclass(frozen=True)
class SequenceResult:
    setup: str
    n_trials: int
    counts: dict[str, int]

    def estimates(self) -> dict[str, Estimate]:
        return {key: estimate(c, self.n_trials) for key, c in self.counts.items()}


def _count_chunk(config: ApparatusConfig, seed: int, lo: int, hi: int) -> list[int]:
    batch = run_trials(config, phi_samples(seed, lo, hi))
    left = batch.reached_left_stop
    right = batch.reached_right_stop
    return [
        int(np.count_nonzero(left & right)),
        int(np.count_nonzero(left & ~right)),
        int(np.count_nonzero(~left & right)),
        int(np.count_nonzero(~left & ~right)),
        int(np.count_nonzero(left)),
        int(np.count_nonzero(right)),
        int(np.count_nonzero(batch.crossed["A"])),
        int(np.count_nonzero(batch.crossed["A'"])),
        int(np.count_nonzero(batch.crossed["B"])),
        int(np.count_nonzero(batch.crossed["B'"])),
    ]


def run_sequence(config: ApparatusConfig, spec: SequenceSpec, workers: int = 1) -> SequenceResult:
    """Run one sequence; counts are independent of the worker split.

    Work is cut into fixed-size index chunks and reduced in chunk order, so
    any worker count yields identical counts.
    """
    spec.validate()
    n = spec.n_trials
    ranges = [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda r: _count_chunk(config, spec.seed, *r), ranges))
    else:
        parts = [_count_chunk(config, spec.seed, lo, hi) for lo, hi in ranges]
    totals = [0] * len(COUNT_KEYS)
    for part in parts:
        for i, c in enumerate(part):
            totals[i] += c
    return SequenceResult(setup=spec.setup, n_trials=n, counts=dict(zip(COUNT_KEYS, totals)))


@dataclass(frozen=True)
class EstimateReport:
    """Campaign summary: per-setup counts and estimates, plus derived tables."""

    gamma: float
    master_seed: int
    results: dict[str, SequenceResult]
    frequencies: SettingFrequencies
    #: None when some two-stop sequence ran zero trials.
    table: ConditionalTable | None

    def estimates(self) -> dict[str, dict[str, Estimate]]:
        return {s: r.estimates() for s, r in self.results.items() if r.n_trials > 0}


def run_campaign(plan: CampaignPlan, workers: int = 1) -> EstimateReport:
    """Run all sequences of a plan and assemble the estimate report."""
    plan.validate()
    lines = plan.engraving()
    results: dict[str, SequenceResult] = {}
    for spec in plan.sequences:
        config = config_for_setup(lines, plan.gamma, spec.setup)
        results[spec.setup] = run_sequence(config, spec, workers=workers)
    for setup in ALL_SETUPS:
        if setup not in results:
            results[setup] = SequenceResult(setup=setup, n_trials=0, counts={k: 0 for k in COUNT_KEYS})

    two_stop_n = {s: results[s].n_trials for s in TWO_STOP_SETUPS}
    total = sum(two_stop_n.values())
    if total == 0:
        raise PlanError("no two-stop trials: setting frequencies are undefined")
    freqs = SettingFrequencies(
        ab=two_stop_n["ab"] / total,
        abp=two_stop_n["ab'"] / total,
        apb=two_stop_n["a'b"] / total,
        apbp=two_stop_n["a'b'"] / total,
    ).validate()

    table: ConditionalTable | None = None
    if all(results[s].n_trials > 0 for s in TWO_STOP_SETUPS):
        joint: dict[str, float] = {}
        full: dict[str, dict[str, float]] = {}
        for s in TWO_STOP_SETUPS:
            r = results[s]
            full[s] = {cell: r.counts[cell] / r.n_trials for cell in CELLS}
            joint[s] = full[s]["11"]
        singles: dict[str, float | None] = {}
        for s in SINGLE_STOP_SETUPS:
            r = results[s]
            key = "left_stop" if s.startswith("a") else "right_stop"
            singles[s] = r.counts[key] / r.n_trials if r.n_trials > 0 else None
        table = ConditionalTable(joint=joint, singles=singles, full_tables=full).validate()
    return EstimateReport(
        gamma=plan.gamma,
        master_seed=plan.master_seed,
        results=results,
        frequencies=freqs,
        table=table,
    )
