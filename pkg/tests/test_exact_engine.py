"""Exact arc-measure probabilities against frozen values and a brute-force grid.

Expected numbers for the demo engraving (gamma = pi/3, theta = pi/6) come
from the arc picture directly: a joint weight gamma/2pi = 1/6 for the two
perfectly correlated setups, (gamma - theta)/2pi = 1/12 for the near pair,
zero for the far pair, and gamma/4pi = 1/12 for every lone stop.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ch_apparatus.apparatus import (
    ConfigError,
    EngravedLines,
    fig2_config,
    fig2_lines,
    unmodified_config,
)
from ch_apparatus.circle_geometry import TWO_PI
from ch_apparatus.exact_engine import (
    CELLS,
    ConditionalTable,
    ConsistencyError,
    EventPredicate,
    closed_form_fig2,
    complement,
    conditional_table,
    conditional_table_exact,
    event_probabilities,
    event_probability,
    grid_oracle,
    joint_probability_table,
    line_crossed,
    lines_crossed,
    stop_cell,
    stop_reached,
)

GAMMA = math.pi / 3.0
THETA = math.pi / 6.0

SQUARE_LINES = EngravedLines(A=math.pi / 4, A_prime=3 * math.pi / 4, B=7 * math.pi / 4, B_prime=5 * math.pi / 4)

DEMO_JOINT = {"ab": 1.0 / 6.0, "ab'": 0.0, "a'b": 1.0 / 12.0, "a'b'": 1.0 / 6.0}
DEMO_FULL = {
    "ab": {"11": 1 / 6, "10": 0.0, "01": 0.0, "00": 5 / 6},
    "ab'": {"11": 0.0, "10": 1 / 12, "01": 1 / 12, "00": 5 / 6},
    "a'b": {"11": 1 / 12, "10": 0.0, "01": 0.0, "00": 11 / 12},
    "a'b'": {"11": 1 / 6, "10": 0.0, "01": 0.0, "00": 5 / 6},
}


class TestDemoEngraving:
    def test_joint_table_per_setup(self):
        table = conditional_table_exact(GAMMA, THETA)
        for setup, expected in DEMO_JOINT.items():
            assert table.joint[setup] == pytest.approx(expected, abs=1e-12), setup

    def test_full_tables(self):
        table = conditional_table_exact(GAMMA, THETA)
        for setup, cells in DEMO_FULL.items():
            for cell, expected in cells.items():
                assert table.full_tables[setup][cell] == pytest.approx(expected, abs=1e-12), (setup, cell)

    def test_singles(self):
        table = conditional_table_exact(GAMMA, THETA)
        for setup in ("a", "a'", "b", "b'"):
            assert table.singles[setup] == pytest.approx(1.0 / 12.0, abs=1e-12), setup

    def test_joint_probability_table_normalizes(self):
        table = joint_probability_table(fig2_config(GAMMA, THETA, "a'b"))
        assert sum(table.values()) == pytest.approx(1.0, abs=1e-12)
        assert set(table) == set(CELLS)

    def test_joint_table_requires_both_stops(self):
        with pytest.raises(ConfigError, match="both stops"):
            joint_probability_table(fig2_config(GAMMA, THETA, "a"))


class TestEventProbability:
    def test_unmodified_single_line(self):
        # body 1 sweeps gamma1, so it crosses A from an approach arc of the
        # same width: p = gamma1/2pi = 1/4 for a quarter turn
        config = unmodified_config(SQUARE_LINES, math.pi / 2.0)
        p = event_probability(config, line_crossed("A"))
        assert p == pytest.approx(0.25, abs=1e-12)
        assert grid_oracle(config, line_crossed("A"), 100_000) == pytest.approx(p, abs=1e-4)

    def test_unmodified_joint_crossing(self):
        # on the square engraving with a quarter turn the approach arcs of
        # A (ccw) and B (cw) coincide exactly
        config = unmodified_config(SQUARE_LINES, math.pi / 2.0)
        assert event_probability(config, lines_crossed("A", "B")) == pytest.approx(0.25, abs=1e-12)
        assert event_probability(config, lines_crossed("A", "B'")) == pytest.approx(0.0, abs=1e-12)

    def test_batch_events_match_single_calls(self):
        config = fig2_config(GAMMA, THETA, "ab")
        events = [stop_cell(True, True), line_crossed("A'"), lines_crossed("A", "B")]
        combined = event_probabilities(config, events)
        for event, p in zip(events, combined):
            assert event_probability(config, event) == p

    def test_complement_sums_to_one(self):
        config = fig2_config(GAMMA, THETA, "ab'")
        event = line_crossed("B'")
        p = event_probability(config, event)
        q = event_probability(config, complement(event))
        assert p + q == pytest.approx(1.0, abs=1e-12)

    def test_joint_below_marginal(self):
        config = fig2_config(GAMMA, THETA, "a'b")
        p_joint = event_probability(config, lines_crossed("A'", "B"))
        p_single = event_probability(config, line_crossed("A'"))
        assert p_joint <= p_single + 1e-15

    def test_non_constant_event_is_rejected(self):
        # r1 varies continuously within arcs, so thresholding it cannot be
        # piecewise constant on the breakpoint partition
        config = fig2_config(GAMMA, THETA, "ab")
        bogus = EventPredicate(name="r1-threshold", scalar=lambda o: o.r1 > 0.3)
        with pytest.raises(ConsistencyError, match="breakpoint set incomplete"):
            event_probability(config, bogus)


class TestGridOracle:
    def test_converges_to_exact_value(self):
        config = fig2_config(GAMMA, THETA, "ab")
        event = stop_cell(True, True)
        exact = event_probability(config, event)
        for n, tol in ((1_000, 5e-3), (100_000, 5e-5)):
            assert grid_oracle(config, event, n) == pytest.approx(exact, abs=tol)

    def test_scalar_fallback_matches_batch(self):
        config = fig2_config(GAMMA, THETA, "a'b")
        fast = line_crossed("B")
        slow = EventPredicate(name=fast.name, scalar=fast.scalar, batch=None)
        assert grid_oracle(config, slow, 2048) == grid_oracle(config, fast, 2048)

    def test_rejects_empty_grid(self):
        config = fig2_config(GAMMA, THETA, "ab")
        with pytest.raises(ValueError):
            grid_oracle(config, line_crossed("A"), 0)


gammas = st.floats(min_value=0.2, max_value=5.5, allow_nan=False)
ratios = st.floats(min_value=0.05, max_value=0.95, allow_nan=False)


@st.composite
def fig2_params(draw):
    gamma = draw(gammas)
    theta = gamma * draw(ratios)
    if gamma + theta >= TWO_PI - 1e-9:
        gamma, theta = gamma / 2.0, theta / 2.0
    return gamma, theta


class TestClosedForm:
    @given(fig2_params())
    @settings(max_examples=100, deadline=None)
    def test_matches_arc_measures(self, params):
        gamma, theta = params
        closed = closed_form_fig2(gamma, theta)
        exact = conditional_table_exact(gamma, theta)
        for setup in DEMO_JOINT:
            assert closed.joint[setup] == pytest.approx(exact.joint[setup], abs=1e-12)
            for cell in CELLS:
                assert closed.full_tables[setup][cell] == pytest.approx(
                    exact.full_tables[setup][cell], abs=1e-12
                ), (setup, cell)
        for setup in ("a", "a'", "b", "b'"):
            assert closed.singles[setup] == pytest.approx(exact.singles[setup], abs=1e-12)

    def test_wide_theta_has_spill(self):
        # theta > gamma/2: in setup a'b a lone body can still reach its stop
        # while the partner misses, with weight (theta - gamma/2)/2pi each way
        closed = closed_form_fig2(1.0, 0.9)
        spill = (0.9 - 0.5) / TWO_PI
        assert closed.full_tables["a'b"]["10"] == pytest.approx(spill, abs=1e-15)
        assert closed.full_tables["a'b"]["01"] == pytest.approx(spill, abs=1e-15)
        exact = conditional_table_exact(1.0, 0.9)
        assert exact.full_tables["a'b"]["10"] == pytest.approx(spill, abs=1e-12)

    def test_degenerate_theta_near_gamma(self):
        gamma = 1.0
        theta = gamma * (1.0 - 1e-6)
        closed = closed_form_fig2(gamma, theta)
        exact = conditional_table_exact(gamma, theta)
        assert closed.joint["a'b"] == pytest.approx(gamma * 1e-6 / TWO_PI, rel=1e-6)
        assert exact.joint["a'b"] == pytest.approx(closed.joint["a'b"], abs=1e-12)

    def test_rejects_bad_shape(self):
        with pytest.raises(ConfigError):
            closed_form_fig2(1.0, 1.0)
        with pytest.raises(ConfigError):
            closed_form_fig2(4.0, 3.0)


class TestConditionalTable:
    def test_generic_engraving_agrees_with_standard(self):
        lines = fig2_lines(GAMMA, THETA)
        via_lines = conditional_table(lines, GAMMA)
        via_shape = conditional_table_exact(GAMMA, THETA)
        assert via_lines.joint == via_shape.joint
        assert via_lines.singles == via_shape.singles

    def test_validate_rejects_unnormalized_table(self):
        table = ConditionalTable(
            joint={"ab": 0.5, "ab'": 0.0, "a'b": 0.0, "a'b'": 0.0},
            singles={"a": None, "a'": None, "b": None, "b'": None},
            full_tables={
                s: {"11": 0.5, "10": 0.0, "01": 0.0, "00": 0.0}
                for s in ("ab", "ab'", "a'b", "a'b'")
            },
        )
        with pytest.raises(ConsistencyError, match="normalize"):
            table.validate()

    def test_validate_rejects_joint_mismatch(self):
        full = {s: {"11": 0.2, "10": 0.1, "01": 0.1, "00": 0.6} for s in ("ab", "ab'", "a'b", "a'b'")}
        table = ConditionalTable(
            joint={"ab": 0.9, "ab'": 0.2, "a'b": 0.2, "a'b'": 0.2},
            singles={"a": 0.5, "a'": 0.5, "b": 0.5, "b'": 0.5},
            full_tables=full,
        )
        with pytest.raises(ConsistencyError, match="disagrees"):
            table.validate()

    def test_stop_reached_sides(self):
        with pytest.raises(ValueError):
            stop_reached("up")
        config = fig2_config(GAMMA, THETA, "b")
        p = event_probability(config, stop_reached("right"))
        assert p == pytest.approx(1.0 / 12.0, abs=1e-12)


def test_grid_oracle_whole_table():
    # one brute-force pass over every demo setup at moderate resolution
    exact = conditional_table_exact(GAMMA, THETA)
    for setup in ("ab", "ab'", "a'b", "a'b'"):
        config = fig2_config(GAMMA, THETA, setup)
        p = grid_oracle(config, stop_cell(True, True), 200_000)
        assert p == pytest.approx(exact.joint[setup], abs=5e-5), setup
