"""Exact event probabilities as arc measures of the uniform start angle.

Every outcome field of a trial is piecewise constant in the start angle phi,
with breakpoints only at the engraved lines and stops shifted by the rotation
budgets.  Partitioning the circle at a generous superset of those breakpoints
therefore reduces any event probability to a finite sum of arc extents.  A
constancy check on three interior points of every arc guards the superset
assumption at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .apparatus import (
    MODIFIED,
    SINGLE_STOP_SETUPS,
    TWO_STOP_SETUPS,
    ApparatusConfig,
    ConfigError,
    EngravedLines,
    TrialBatch,
    TrialOutcome,
    config_for_setup,
    fig2_lines,
    run_trial,
    run_trials,
)
from .circle_geometry import TWO_PI, normalize, partition_circle

CELLS = ("11", "10", "01", "00")

# Interior fractions used for the piecewise-constancy guard.
_CHECK_FRACTIONS = (0.25, 0.5, 0.75)

TABLE_TOL = 1e-9

__all__ = [
    "CELLS",
    "TABLE_TOL",
    "ConsistencyError",
    "EventPredicate",
    "ConditionalTable",
    "line_crossed",
    "lines_crossed",
    "stop_cell",
    "both_stops_reached",
    "complement",
    "event_probability",
    "event_probabilities",
    "joint_probability_table",
    "grid_oracle",
    "stop_reached",
    "closed_form_fig2",
    "conditional_table",
    "conditional_table_exact",
]


class ConsistencyError(RuntimeError):
    """An internal cross-check failed; results cannot be trusted."""


@dataclass(frozen=True)
class EventPredicate:
    """Named boolean function of a trial outcome.

    ``batch`` is an optional vectorized twin taking a TrialBatch; it must
    agree with ``scalar`` pointwise and exists only for speed.
    """

    name: str
    scalar: Callable[[TrialOutcome], bool]
    batch: Callable[[TrialBatch], np.ndarray] | None = None

    def __call__(self, outcome: TrialOutcome) -> bool:
        return bool(self.scalar(outcome))


def line_crossed(name: str) -> EventPredicate:
    return EventPredicate(
        name=f"crossed({name})",
        scalar=lambda o: name in o.crossed,
        batch=lambda b: b.crossed[name],
    )


def lines_crossed(*names: str) -> EventPredicate:
    def scalar(o: TrialOutcome) -> bool:
        return all(n in o.crossed for n in names)

    def batch(b: TrialBatch) -> np.ndarray:
        out = b.crossed[names[0]].copy()
        for n in names[1:]:
            out &= b.crossed[n]
        return out

    return EventPredicate(name="crossed(" + ",".join(names) + ")", scalar=scalar, batch=batch)


def stop_cell(left: bool, right: bool) -> EventPredicate:
    return EventPredicate(
        name=f"stops:{int(left)}{int(right)}",
        scalar=lambda o: o.reached_left_stop == left and o.reached_right_stop == right,
        batch=lambda b: (b.reached_left_stop == left) & (b.reached_right_stop == right),
    )


def both_stops_reached() -> EventPredicate:
    return stop_cell(True, True)


def complement(event: EventPredicate) -> EventPredicate:
    return EventPredicate(
        name=f"not({event.name})",
        scalar=lambda o: not event.scalar(o),
        batch=(lambda b: ~event.batch(b)) if event.batch is not None else None,
    )


def _critical_angles(config: ApparatusConfig) -> list[float]:
    lines = config.lines
    anchors = [lines.A, lines.A_prime, lines.B, lines.B_prime]
    if config.stops.left is not None:
        anchors.append(config.stops.left)
    if config.stops.right is not None:
        anchors.append(config.stops.right)
    shifts = {0.0}
    if config.mode == MODIFIED:
        g = config.gamma
        shifts.update((g, -g, 0.5 * g, -0.5 * g))
    if config.gamma1 is not None:
        g1 = config.gamma1
        shifts.update((g1, -g1))
    return [normalize(a + s) for a in anchors for s in shifts]


def event_probabilities(
    config: ApparatusConfig, events: Sequence[EventPredicate]
) -> list[float]:
    """Exact probabilities of several events in one partition sweep."""
    arcs = partition_circle(_critical_angles(config))
    totals = [0.0] * len(events)
    for arc in arcs:
        outcomes = [run_trial(config, arc.point_at(f)) for f in _CHECK_FRACTIONS]
        for i, event in enumerate(events):
            values = [event(o) for o in outcomes]
            if values[0] != values[1] or values[1] != values[2]:
                raise ConsistencyError(
                    f"event {event.name} is not constant on the arc starting at "
                    f"{arc.start!r} (extent {arc.extent!r}); breakpoint set incomplete"
                )
            if values[1]:
                totals[i] += arc.extent
    return [t / TWO_PI for t in totals]


def event_probability(config: ApparatusConfig, event: EventPredicate) -> float:
    """Exact probability of one event under the uniform start angle."""
    return event_probabilities(config, [event])[0]


def joint_probability_table(config: ApparatusConfig) -> dict[str, float]:
    """Full 2x2 stop-reach table for a configuration with both stops active."""
    if config.stops.left is None or config.stops.right is None:
        raise ConfigError("joint probability table needs both stops active")
    cells = [stop_cell(l, r) for l, r in ((True, True), (True, False), (False, True), (False, False))]
    values = event_probabilities(config, cells)
    table = dict(zip(CELLS, values))
    if abs(sum(table.values()) - 1.0) > TABLE_TOL:
        raise ConsistencyError(f"stop-reach table does not normalize: {table!r}")
    return table


def grid_oracle(config: ApparatusConfig, event: EventPredicate, n_points: int) -> float:
    """Brute-force check value: frequency of the event on a midpoint phi grid.

    The grid phi_k = 2*pi*(k + 1/2)/n avoids the breakpoint angles, so the
    frequency converges to the arc measure at rate 1/n.
    """
    if n_points < 1:
        raise ValueError(f"need at least one grid point, got {n_points}")
    if event.batch is not None:
        hits = 0
        chunk = 1 << 20
        for start in range(0, n_points, chunk):
            stop = min(start + chunk, n_points)
            k = np.arange(start, stop, dtype=np.float64)
            phis = (k + 0.5) * (TWO_PI / n_points)
            hits += int(np.count_nonzero(event.batch(run_trials(config, phis))))
        return hits / n_points
    step = TWO_PI / n_points
    hits = 0
    for k in range(n_points):
        if event(run_trial(config, (k + 0.5) * step)):
            hits += 1
    return hits / n_points


@dataclass(frozen=True)
class ConditionalTable:
    """Conditional probabilities for the eight stop setups.

    ``joint`` holds p(both stops reached | two-stop setup), ``singles`` holds
    p(stop reached | single-stop setup) (None when no trials inform it), and
    ``full_tables`` the complete 2x2 stop-reach tables per two-stop setup.
    """

    joint: dict[str, float]
    singles: dict[str, float | None]
    full_tables: dict[str, dict[str, float]]

    def validate(self, tol: float = TABLE_TOL) -> "ConditionalTable":
        for setup in TWO_STOP_SETUPS:
            table = self.full_tables[setup]
            if abs(sum(table.values()) - 1.0) > tol:
                raise ConsistencyError(f"table for setup {setup!r} does not normalize: {table!r}")
            if abs(table["11"] - self.joint[setup]) > tol:
                raise ConsistencyError(f"joint entry for setup {setup!r} disagrees with its table")
        for setup in SINGLE_STOP_SETUPS:
            p = self.singles[setup]
            if p is not None and not -tol <= p <= 1.0 + tol:
                raise ConsistencyError(f"single entry for setup {setup!r} out of range: {p!r}")
        return self


def closed_form_fig2(gamma: float, theta: float) -> ConditionalTable:
    """Closed-form conditional table for the standard engraving.

    On the two setups whose stops sit gamma apart the bodies either both
    reach or both miss, giving joint weight gamma/2*pi.  Stops gamma + theta
    apart can never both be reached; stops gamma - theta apart are both
    reached on an arc of that width.  A lone reachable stop is met from an
    approach arc of width gamma/2.
    """
    if not (0.0 < theta < gamma and gamma + theta < TWO_PI):
        raise ConfigError(
            f"need 0 < theta < gamma and gamma + theta < 2*pi, got gamma={gamma!r}, theta={theta!r}"
        )
    j = gamma / TWO_PI
    half = gamma / (2.0 * TWO_PI)
    near = (gamma - theta) / TWO_PI
    spill = max(0.0, theta - 0.5 * gamma) / TWO_PI
    correlated = {"11": j, "10": 0.0, "01": 0.0, "00": 1.0 - j}
    return ConditionalTable(
        joint={"ab": j, "ab'": 0.0, "a'b": near, "a'b'": j},
        singles={s: half for s in SINGLE_STOP_SETUPS},
        full_tables={
            "ab": dict(correlated),
            "ab'": {"11": 0.0, "10": half, "01": half, "00": 1.0 - 2.0 * half},
            "a'b": {"11": near, "10": spill, "01": spill, "00": 1.0 - near - 2.0 * spill},
            "a'b'": dict(correlated),
        },
    ).validate()


def stop_reached(side: str) -> EventPredicate:
    """The active stop on the given side ('left' or 'right') was reached."""
    if side == "left":
        return EventPredicate(
            name="stops:1x",
            scalar=lambda o: o.reached_left_stop,
            batch=lambda b: b.reached_left_stop,
        )
    if side == "right":
        return EventPredicate(
            name="stops:x1",
            scalar=lambda o: o.reached_right_stop,
            batch=lambda b: b.reached_right_stop,
        )
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def conditional_table(lines: EngravedLines, gamma: float) -> ConditionalTable:
    """Arc-measure conditional table for an arbitrary engraving."""
    joint: dict[str, float] = {}
    full: dict[str, dict[str, float]] = {}
    for setup in TWO_STOP_SETUPS:
        table = joint_probability_table(config_for_setup(lines, gamma, setup))
        full[setup] = table
        joint[setup] = table["11"]
    singles: dict[str, float | None] = {}
    for setup in SINGLE_STOP_SETUPS:
        config = config_for_setup(lines, gamma, setup)
        side = "left" if setup.startswith("a") else "right"
        singles[setup] = event_probability(config, stop_reached(side))
    return ConditionalTable(joint=joint, singles=singles, full_tables=full).validate()


def conditional_table_exact(gamma: float, theta: float) -> ConditionalTable:
    """Arc-measure conditional table for the standard engraving."""
    return conditional_table(fig2_lines(gamma, theta), gamma)
