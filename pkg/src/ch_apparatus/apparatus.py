"""The two-body rotation device: engraved lines, stops, and trial kinematics.

A trial starts with both bodies' zero marks coincident at a shared angle phi.
Body 1 rotates counterclockwise, body 2 clockwise, at equal rates.  In the
unmodified device both run freely for a fixed angle gamma1.  In the modified
device a mutual constraint keeps the sum of the two rotations at or below
gamma, and each side may carry a mechanical stop placed on one of its two
engraved lines: the left stop at A or A', the right stop at B or B'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .circle_geometry import EPS_ANGLE, TWO_PI, ccw_delta, normalize

UNMODIFIED = "unmodified"
MODIFIED = "modified"

# Blocking cause tags for each body at the end of a trial.
STOP = "stop"
MUTUAL_CONSTRAINT = "mutual-constraint"
FREE_ROTATION_END = "free-rotation-end"

LINE_NAMES = ("A", "A'", "B", "B'")

# Canonical setup labels: which stops are active during a sequence of trials.
TWO_STOP_SETUPS = ("ab", "ab'", "a'b", "a'b'")
SINGLE_STOP_SETUPS = ("a", "a'", "b", "b'")
ALL_SETUPS = TWO_STOP_SETUPS + SINGLE_STOP_SETUPS

__all__ = [
    "UNMODIFIED",
    "MODIFIED",
    "STOP",
    "MUTUAL_CONSTRAINT",
    "FREE_ROTATION_END",
    "LINE_NAMES",
    "TWO_STOP_SETUPS",
    "SINGLE_STOP_SETUPS",
    "ALL_SETUPS",
    "ConfigError",
    "EngravedLines",
    "StopPlacement",
    "ApparatusConfig",
    "TrialOutcome",
    "TrialBatch",
    "validate_config",
    "run_trial",
    "run_trials",
    "crossed_events",
    "fig2_lines",
    "fig2_config",
    "unmodified_config",
    "setup_stops",
    "config_for_setup",
]


class ConfigError(ValueError):
    """Raised when an apparatus configuration violates its constraints."""


@dataclass(frozen=True)
class EngravedLines:
    """Angles of the four lines engraved on the measuring cylinder.

    A and A' are read against body 1 (left side), B and B' against body 2
    (right side).  All four must be normalized; the two lines on one side
    must be distinct.
    """

    A: float
    A_prime: float
    B: float
    B_prime: float

    def by_name(self, name: str) -> float:
        return {
            "A": self.A,
            "A'": self.A_prime,
            "B": self.B,
            "B'": self.B_prime,
        }[name]


@dataclass(frozen=True)
class StopPlacement:
    """Stop angles for the two sides; None means no stop on that side."""

    left: float | None = None
    right: float | None = None


@dataclass(frozen=True)
class ApparatusConfig:
    mode: str
    lines: EngravedLines
    gamma1: float | None = None
    gamma: float | None = None
    stops: StopPlacement = StopPlacement()
    _validated: bool = field(default=False, compare=False, repr=False)


def _on_circle(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and 0.0 <= x < TWO_PI


def _is_line(x: float, candidates: tuple[float, float]) -> bool:
    return any(
        min(ccw_delta(x, c), ccw_delta(c, x)) <= EPS_ANGLE for c in candidates
    )


def validate_config(config: ApparatusConfig) -> ApparatusConfig:
    """Check every configuration constraint, reporting all violations at once.

    Returns the same object, marked so that run_trial will accept it.
    """
    problems: list[str] = []
    if config.mode not in (UNMODIFIED, MODIFIED):
        problems.append(f"mode must be {UNMODIFIED!r} or {MODIFIED!r}, got {config.mode!r}")

    lines = config.lines
    for name in LINE_NAMES:
        value = lines.by_name(name)
        if not _on_circle(value):
            problems.append(f"line {name} must be a normalized angle in [0, 2*pi), got {value!r}")
    if lines.A == lines.A_prime:
        problems.append("lines A and A' must be distinct")
    if lines.B == lines.B_prime:
        problems.append("lines B and B' must be distinct")

    has_stop = config.stops.left is not None or config.stops.right is not None
    if config.mode == UNMODIFIED:
        if has_stop:
            problems.append("unmodified mode admits no stops (mode/stop mismatch)")
        g1 = config.gamma1
        if g1 is None or not math.isfinite(g1) or not 0.0 < g1 <= TWO_PI:
            problems.append(f"unmodified mode needs free-rotation angle gamma1 in (0, 2*pi], got {g1!r}")
    elif config.mode == MODIFIED:
        g = config.gamma
        if g is None or not math.isfinite(g) or not 0.0 < g < TWO_PI:
            problems.append(f"modified mode needs mutual-rotation budget gamma in (0, 2*pi), got {g!r}")
        left = config.stops.left
        if left is not None and not (_on_circle(left) and _is_line(left, (lines.A, lines.A_prime))):
            problems.append(f"left stop must sit on line A or A', got {left!r}")
        right = config.stops.right
        if right is not None and not (_on_circle(right) and _is_line(right, (lines.B, lines.B_prime))):
            problems.append(f"right stop must sit on line B or B', got {right!r}")

    if problems:
        raise ConfigError("; ".join(problems))
    object.__setattr__(config, "_validated", True)
    return config


class TrialOutcome(NamedTuple):
    """Final state of one trial."""

    r1: float
    r2: float
    blocked1: str
    blocked2: str
    reached_left_stop: bool
    reached_right_stop: bool
    crossed: frozenset[str]


def run_trial(config: ApparatusConfig, phi: float) -> TrialOutcome:
    """Deterministic kinematics of one trial with start angle phi.

    Rotations are resolved in time order: whichever body meets its stop
    first is blocked there, the other continues until its own stop or until
    the mutual budget gamma is exhausted.  Ties between reaching a stop and
    exhausting the budget resolve in favor of the stop.
    """
    if not config._validated:
        raise ConfigError("configuration must pass validate_config before running trials")
    phi = normalize(phi)
    lines = config.lines

    if config.mode == UNMODIFIED:
        g1 = config.gamma1
        r1 = r2 = g1
        blocked1 = blocked2 = FREE_ROTATION_END
        reached_left = reached_right = False
    else:
        g = config.gamma
        half = 0.5 * g
        left = config.stops.left
        right = config.stops.right
        d1 = ccw_delta(phi, left) if left is not None else math.inf
        d2 = ccw_delta(right, phi) if right is not None else math.inf
        if d1 <= d2 and d1 <= half + EPS_ANGLE:
            r1, blocked1, reached_left = d1, STOP, True
            if d2 <= g - d1 + EPS_ANGLE:
                r2, blocked2, reached_right = d2, STOP, True
            else:
                r2, blocked2, reached_right = g - d1, MUTUAL_CONSTRAINT, False
        elif d2 < d1 and d2 <= half + EPS_ANGLE:
            r2, blocked2, reached_right = d2, STOP, True
            if d1 <= g - d2 + EPS_ANGLE:
                r1, blocked1, reached_left = d1, STOP, True
            else:
                r1, blocked1, reached_left = g - d2, MUTUAL_CONSTRAINT, False
        else:
            r1 = r2 = half
            blocked1 = blocked2 = MUTUAL_CONSTRAINT
            reached_left = reached_right = False

    crossed = []
    if ccw_delta(phi, lines.A) <= r1 + EPS_ANGLE:
        crossed.append("A")
    if ccw_delta(phi, lines.A_prime) <= r1 + EPS_ANGLE:
        crossed.append("A'")
    if ccw_delta(lines.B, phi) <= r2 + EPS_ANGLE:
        crossed.append("B")
    if ccw_delta(lines.B_prime, phi) <= r2 + EPS_ANGLE:
        crossed.append("B'")

    return TrialOutcome(
        r1=r1,
        r2=r2,
        blocked1=blocked1,
        blocked2=blocked2,
        reached_left_stop=reached_left,
        reached_right_stop=reached_right,
        crossed=frozenset(crossed),
    )


class TrialBatch(NamedTuple):
    """Struct-of-arrays form of many trial outcomes."""

    r1: np.ndarray
    r2: np.ndarray
    reached_left_stop: np.ndarray
    reached_right_stop: np.ndarray
    crossed: dict[str, np.ndarray]


def _ccw_delta_vec(start, end) -> np.ndarray:
    # same operations, in the same order, as the scalar ccw_delta
    d = np.asarray(end, dtype=np.float64) - start
    d = np.where(d < 0.0, d + TWO_PI, d)
    return np.where(d >= TWO_PI, 0.0, d)


def run_trials(config: ApparatusConfig, phis: np.ndarray) -> TrialBatch:
    """Vectorized run_trial over an array of normalized start angles.

    Bitwise-identical to the scalar path field by field.
    """
    if not config._validated:
        raise ConfigError("configuration must pass validate_config before running trials")
    phis = np.asarray(phis, dtype=np.float64)
    lines = config.lines

    if config.mode == UNMODIFIED:
        g1 = config.gamma1
        r1 = np.full_like(phis, g1)
        r2 = r1
        reached_left = np.zeros(phis.shape, dtype=bool)
        reached_right = reached_left
    else:
        g = config.gamma
        half = 0.5 * g
        left = config.stops.left
        right = config.stops.right
        d1 = _ccw_delta_vec(phis, left) if left is not None else np.full_like(phis, np.inf)
        d2 = _ccw_delta_vec(right, phis) if right is not None else np.full_like(phis, np.inf)

        first_left = (d1 <= d2) & (d1 <= half + EPS_ANGLE)
        first_right = ~first_left & (d2 < d1) & (d2 <= half + EPS_ANGLE)
        partner_fits_right = d2 <= g - d1 + EPS_ANGLE
        partner_fits_left = d1 <= g - d2 + EPS_ANGLE

        r1 = np.where(first_left, d1, np.where(first_right, np.where(partner_fits_left, d1, g - d2), half))
        r2 = np.where(first_right, d2, np.where(first_left, np.where(partner_fits_right, d2, g - d1), half))
        reached_left = first_left | (first_right & partner_fits_left)
        reached_right = first_right | (first_left & partner_fits_right)

    crossed = {
        "A": _ccw_delta_vec(phis, lines.A) <= r1 + EPS_ANGLE,
        "A'": _ccw_delta_vec(phis, lines.A_prime) <= r1 + EPS_ANGLE,
        "B": _ccw_delta_vec(lines.B, phis) <= r2 + EPS_ANGLE,
        "B'": _ccw_delta_vec(lines.B_prime, phis) <= r2 + EPS_ANGLE,
    }
    return TrialBatch(
        r1=r1,
        r2=r2,
        reached_left_stop=reached_left,
        reached_right_stop=reached_right,
        crossed=crossed,
    )


def crossed_events(outcome: TrialOutcome, lines: EngravedLines) -> tuple[bool, bool, bool, bool]:
    """Project an outcome onto the four line-crossing events (A, A', B, B')."""
    del lines  # the outcome already names its crossings
    return tuple(name in outcome.crossed for name in LINE_NAMES)


def fig2_lines(gamma: float, theta: float) -> EngravedLines:
    """Standard engraving: B' = 0, B = theta, A' = gamma, A = gamma + theta.

    Requires 0 < theta < gamma and gamma + theta < 2*pi so the four lines
    keep their cyclic order.
    """
    if not (math.isfinite(gamma) and math.isfinite(theta)):
        raise ConfigError(f"gamma and theta must be finite, got {gamma!r}, {theta!r}")
    if not (0.0 < theta < gamma and gamma + theta < TWO_PI):
        raise ConfigError(
            f"need 0 < theta < gamma and gamma + theta < 2*pi, got gamma={gamma!r}, theta={theta!r}"
        )
    return EngravedLines(
        A=normalize(gamma + theta),
        A_prime=normalize(gamma),
        B=normalize(theta),
        B_prime=0.0,
    )


def setup_stops(lines: EngravedLines, setup: str) -> StopPlacement:
    """Stop placement named by a setup label such as "ab'" or "a"."""
    if setup not in ALL_SETUPS:
        raise ConfigError(f"unknown setup label {setup!r}")
    left = right = None
    rest = setup
    if rest.startswith("a'"):
        left, rest = lines.A_prime, rest[2:]
    elif rest.startswith("a"):
        left, rest = lines.A, rest[1:]
    if rest == "b":
        right = lines.B
    elif rest == "b'":
        right = lines.B_prime
    return StopPlacement(left=left, right=right)


def config_for_setup(lines: EngravedLines, gamma: float, setup: str) -> ApparatusConfig:
    """Modified-mode configuration with the stops named by a setup label."""
    return validate_config(
        ApparatusConfig(mode=MODIFIED, lines=lines, gamma=gamma, stops=setup_stops(lines, setup))
    )


def fig2_config(gamma: float, theta: float, setup: str) -> ApparatusConfig:
    """Modified-mode configuration on the standard engraving."""
    return config_for_setup(fig2_lines(gamma, theta), gamma, setup)


def unmodified_config(lines: EngravedLines, gamma1: float) -> ApparatusConfig:
    """Free-rotation configuration: both bodies turn by gamma1, no stops."""
    return validate_config(ApparatusConfig(mode=UNMODIFIED, lines=lines, gamma1=gamma1))
