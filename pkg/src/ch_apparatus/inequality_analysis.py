"""Clauser-Horne bookkeeping: the naive plug-in, its diagnosis, and the fix.

The eight conditional probabilities measured on the modified device refer to
mutually exclusive stop setups.  Inserting them verbatim into the CH
expression treats them as probabilities on one common space, which is the
deliberate blunder this module makes explicit, flags, and then repairs by
weighting each conditional entry with the frequency of its own setup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .apparatus import ApparatusConfig, UNMODIFIED, run_trial
from .exact_engine import (
    ConditionalTable,
    ConsistencyError,
    event_probabilities,
    line_crossed,
    lines_crossed,
)

# Tolerance band for violation flags, so boundary values do not flap.
FLAG_TOL = 1e-9

# Denominators below this are treated as zero in conditional probabilities.
DENOM_TOL = 1e-15

# The algebraic identity between the corrected CH value and its reduced form
# must hold to this accuracy or the implementation is inconsistent.
IDENTITY_TOL = 1e-9

__all__ = [
    "FLAG_TOL",
    "DENOM_TOL",
    "IDENTITY_TOL",
    "ProbabilitySet",
    "SettingFrequencies",
    "Conditional",
    "FixedLambdaResult",
    "AnalysisReport",
    "ch_value",
    "ch_primed_value",
    "ch_sum_value",
    "ch_violated",
    "bayes_conditionals",
    "naive_plug",
    "corrected_probabilities",
    "reduced_ch_value",
    "reduced_identity_residual",
    "fixed_lambda_check",
    "crossing_probability_set",
    "analyze",
]


@dataclass(frozen=True)
class ProbabilitySet:
    """The eight numbers entering a CH expression.

    Fields name line-crossing events: ``ab`` is the joint probability of
    crossings A and B, ``a`` the single probability of crossing A, and a
    trailing ``p`` marks the primed line.
    """

    ab: float
    abp: float
    apb: float
    apbp: float
    a: float
    ap: float
    b: float
    bp: float

    def as_dict(self) -> dict[str, float]:
        return {
            "AB": self.ab,
            "AB'": self.abp,
            "A'B": self.apb,
            "A'B'": self.apbp,
            "A": self.a,
            "A'": self.ap,
            "B": self.b,
            "B'": self.bp,
        }


@dataclass(frozen=True)
class SettingFrequencies:
    """How often each two-stop setup is run; must sum to one."""

    ab: float
    abp: float
    apb: float
    apbp: float

    @classmethod
    def uniform(cls) -> "SettingFrequencies":
        return cls(0.25, 0.25, 0.25, 0.25)

    def validate(self, tol: float = 1e-9) -> "SettingFrequencies":
        values = (self.ab, self.abp, self.apb, self.apbp)
        if any(not math.isfinite(v) or v < -tol for v in values):
            raise ValueError(f"setting frequencies must be nonnegative, got {values!r}")
        if abs(sum(values) - 1.0) > tol:
            raise ValueError(f"setting frequencies must sum to 1, got {values!r}")
        return self

    def as_dict(self) -> dict[str, float]:
        return {"ab": self.ab, "ab'": self.abp, "a'b": self.apb, "a'b'": self.apbp}


def ch_value(s: ProbabilitySet) -> float:
    """CH combination p(AB) - p(AB') + p(A'B) + p(A'B') - p(A') - p(B)."""
    return s.ab - s.abp + s.apb + s.apbp - s.ap - s.b


def ch_primed_value(s: ProbabilitySet) -> float:
    """Twin combination with primed and unprimed lines exchanged."""
    return s.apbp - s.apb + s.abp + s.ab - s.a - s.bp


def ch_sum_value(s: ProbabilitySet) -> float:
    """Sum of the two CH combinations; positivity certifies the misuse."""
    return 2.0 * s.ab + 2.0 * s.apbp - s.a - s.ap - s.b - s.bp


def ch_violated(value: float, tol: float = FLAG_TOL) -> bool:
    """Whether a CH value leaves the admissible band [-1, 0]."""
    return value > tol or value < -1.0 - tol


class Conditional(NamedTuple):
    """One Bayes conditional; value is None when its denominator vanishes."""

    value: float | None
    exceeds_one: bool


def bayes_conditionals(s: ProbabilitySet) -> dict[str, Conditional]:
    """Conditionals p(B|A), p(A|B), p(B'|A'), p(A'|B') read off the set.

    Any entry above one exposes the set as not coming from a single
    probability space.
    """
    pairs = {
        "B|A": (s.ab, s.a),
        "A|B": (s.ab, s.b),
        "B'|A'": (s.apbp, s.ap),
        "A'|B'": (s.apbp, s.bp),
    }
    out: dict[str, Conditional] = {}
    for key, (num, den) in pairs.items():
        if abs(den) < DENOM_TOL:
            out[key] = Conditional(None, False)
        else:
            v = num / den
            out[key] = Conditional(v, v > 1.0 + FLAG_TOL)
    return out


def naive_plug(table: ConditionalTable) -> ProbabilitySet:
    """Copy the eight conditional entries verbatim into one probability set.

    This is the fallacy on display: the entries condition on different,
    mutually exclusive setups and do not live on a common space.
    """
    missing = [s for s, v in table.singles.items() if v is None]
    if missing:
        raise ValueError(f"single-stop entries missing for setups {missing!r}")
    return ProbabilitySet(
        ab=table.joint["ab"],
        abp=table.joint["ab'"],
        apb=table.joint["a'b"],
        apbp=table.joint["a'b'"],
        a=table.singles["a"],
        ap=table.singles["a'"],
        b=table.singles["b"],
        bp=table.singles["b'"],
    )


def corrected_probabilities(table: ConditionalTable, freqs: SettingFrequencies) -> ProbabilitySet:
    """Absolute probabilities on the common space of whole runs.

    Each joint entry is weighted by the frequency of its own setup; the
    singles are then defined by the sum rules over the corrected joints,
    p(A) = p(AB) + p(AB') and so on, which is what makes the CH combination
    collapse to its reduced form identically.
    """
    freqs.validate()
    ab = table.joint["ab"] * freqs.ab
    abp = table.joint["ab'"] * freqs.abp
    apb = table.joint["a'b"] * freqs.apb
    apbp = table.joint["a'b'"] * freqs.apbp
    return ProbabilitySet(
        ab=ab,
        abp=abp,
        apb=apb,
        apbp=apbp,
        a=ab + abp,
        ap=apb + apbp,
        b=ab + apb,
        bp=abp + apbp,
    )


def reduced_ch_value(table: ConditionalTable, freqs: SettingFrequencies) -> float:
    """Corrected CH value in its reduced form.

    After correction every positive term is cancelled by a marginal, leaving
    - p(11|ab') f(ab') - p(11|a'b) f(a'b), manifestly in [-1, 0].
    """
    freqs.validate()
    value = -table.joint["ab'"] * freqs.abp - table.joint["a'b"] * freqs.apb
    residual = abs(value - ch_value(corrected_probabilities(table, freqs)))
    if residual > IDENTITY_TOL:
        raise ConsistencyError(
            f"reduced CH value disagrees with the corrected expansion by {residual!r}"
        )
    return value


def reduced_identity_residual(table: ConditionalTable, freqs: SettingFrequencies) -> float:
    """|reduced form - corrected expansion|; zero up to rounding by algebra."""
    value = -table.joint["ab'"] * freqs.abp - table.joint["a'b"] * freqs.apb
    return abs(value - ch_value(corrected_probabilities(table, freqs)))


class FixedLambdaResult(NamedTuple):
    residual: float
    value: float


def fixed_lambda_check(config: ApparatusConfig, phi: float) -> FixedLambdaResult:
    """Factorisability and range of the CH kernel at one hidden state.

    On the unmodified device a single trial fixes indicators x, x', y, y' for
    the four crossings.  The joint indicator of A and B must factor as x*y
    (residual 0), and the kernel xy - xy' + x'y + x'y' - x' - y lies in
    [-1, 0] for any 0/1 assignment.
    """
    if config.mode != UNMODIFIED:
        raise ValueError("fixed-lambda check applies to the unmodified device")
    outcome = run_trial(config, phi)
    x = 1 if "A" in outcome.crossed else 0
    xp = 1 if "A'" in outcome.crossed else 0
    y = 1 if "B" in outcome.crossed else 0
    yp = 1 if "B'" in outcome.crossed else 0
    joint = 1 if ("A" in outcome.crossed and "B" in outcome.crossed) else 0
    residual = abs(joint - x * y)
    value = float(x * y - x * yp + xp * y + xp * yp - xp - y)
    return FixedLambdaResult(residual=float(residual), value=value)


def crossing_probability_set(config: ApparatusConfig) -> ProbabilitySet:
    """Exact probabilities of the four crossings and their four CH pairs.

    All eight come from one arc partition, so they refer to the same
    configuration and the same probability space.
    """
    events = [
        lines_crossed("A", "B"),
        lines_crossed("A", "B'"),
        lines_crossed("A'", "B"),
        lines_crossed("A'", "B'"),
        line_crossed("A"),
        line_crossed("A'"),
        line_crossed("B"),
        line_crossed("B'"),
    ]
    v = event_probabilities(config, events)
    return ProbabilitySet(ab=v[0], abp=v[1], apb=v[2], apbp=v[3], a=v[4], ap=v[5], b=v[6], bp=v[7])


@dataclass(frozen=True)
class AnalysisReport:
    """Naive and corrected CH analysis of one conditional table."""

    naive: ProbabilitySet
    ch: float
    ch_flagged: bool
    ch_primed: float
    ch_primed_flagged: bool
    ch_sum: float
    ch_sum_positive: bool
    bayes: dict[str, Conditional]
    frequencies: SettingFrequencies
    corrected: ProbabilitySet
    corrected_ch: float
    corrected_ch_flagged: bool
    reduced_ch: float
    identity_residual: float


def analyze(table: ConditionalTable, freqs: SettingFrequencies) -> AnalysisReport:
    """Run the whole naive-versus-corrected comparison on one table."""
    naive = naive_plug(table)
    ch = ch_value(naive)
    chp = ch_primed_value(naive)
    chs = ch_sum_value(naive)
    corrected = corrected_probabilities(table, freqs)
    cch = ch_value(corrected)
    reduced = reduced_ch_value(table, freqs)
    return AnalysisReport(
        naive=naive,
        ch=ch,
        ch_flagged=ch_violated(ch),
        ch_primed=chp,
        ch_primed_flagged=ch_violated(chp),
        ch_sum=chs,
        ch_sum_positive=chs > FLAG_TOL,
        bayes=bayes_conditionals(naive),
        frequencies=freqs,
        corrected=corrected,
        corrected_ch=cch,
        corrected_ch_flagged=ch_violated(cch),
        reduced_ch=reduced,
        identity_residual=reduced_identity_residual(table, freqs),
    )
