"""Trial kinematics of the two-body device.

The scalar path (run_trial) is the reference semantics; the vectorized path
(run_trials) must agree with it bitwise.  Example traces below were worked
out by hand on the standard engraving with gamma = pi/3, theta = pi/6:
lines A = pi/2, A' = pi/3, B = pi/6, B' = 0, stops for setup "ab" at A and B.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ch_apparatus.apparatus import (
    ALL_SETUPS,
    FREE_ROTATION_END,
    MODIFIED,
    MUTUAL_CONSTRAINT,
    STOP,
    UNMODIFIED,
    ApparatusConfig,
    ConfigError,
    EngravedLines,
    StopPlacement,
    config_for_setup,
    crossed_events,
    fig2_config,
    fig2_lines,
    run_trial,
    run_trials,
    setup_stops,
    unmodified_config,
    validate_config,
)
from ch_apparatus.circle_geometry import TWO_PI, normalize

GAMMA = math.pi / 3.0
THETA = math.pi / 6.0

SQUARE_LINES = EngravedLines(A=math.pi / 4, A_prime=3 * math.pi / 4, B=7 * math.pi / 4, B_prime=5 * math.pi / 4)


def demo_config(setup="ab"):
    return fig2_config(GAMMA, THETA, setup)


# ----------------------------------------------------------------------------
# configuration validation
# ----------------------------------------------------------------------------


def test_fig2_lines_layout():
    lines = fig2_lines(GAMMA, THETA)
    assert lines.B_prime == 0.0
    assert lines.B == pytest.approx(THETA, abs=1e-15)
    assert lines.A_prime == pytest.approx(GAMMA, abs=1e-15)
    assert lines.A == pytest.approx(GAMMA + THETA, abs=1e-15)


@pytest.mark.parametrize(
    "gamma, theta",
    [(1.0, 1.0), (1.0, 1.5), (1.0, 0.0), (1.0, -0.2), (4.0, 3.0), (math.nan, 0.5)],
)
def test_fig2_lines_rejects_bad_shape(gamma, theta):
    with pytest.raises(ConfigError):
        fig2_lines(gamma, theta)


def test_setup_stops_labels():
    lines = fig2_lines(GAMMA, THETA)
    assert setup_stops(lines, "ab") == StopPlacement(left=lines.A, right=lines.B)
    assert setup_stops(lines, "a'b'") == StopPlacement(left=lines.A_prime, right=lines.B_prime)
    assert setup_stops(lines, "a'") == StopPlacement(left=lines.A_prime, right=None)
    assert setup_stops(lines, "b'") == StopPlacement(left=None, right=lines.B_prime)
    with pytest.raises(ConfigError):
        setup_stops(lines, "ba")


def test_unmodified_rejects_stops():
    config = ApparatusConfig(
        mode=UNMODIFIED,
        lines=SQUARE_LINES,
        gamma1=1.0,
        stops=StopPlacement(left=SQUARE_LINES.A),
    )
    with pytest.raises(ConfigError, match="no stops"):
        validate_config(config)


def test_modified_requires_budget():
    config = ApparatusConfig(mode=MODIFIED, lines=SQUARE_LINES, gamma=None)
    with pytest.raises(ConfigError, match="gamma"):
        validate_config(config)


def test_stop_must_sit_on_a_line():
    config = ApparatusConfig(
        mode=MODIFIED,
        lines=SQUARE_LINES,
        gamma=1.0,
        stops=StopPlacement(left=0.123),
    )
    with pytest.raises(ConfigError, match="left stop"):
        validate_config(config)


def test_all_violations_reported_together():
    config = ApparatusConfig(
        mode="sideways",
        lines=EngravedLines(A=1.0, A_prime=1.0, B=9.0, B_prime=0.0),
        gamma=1.0,
    )
    with pytest.raises(ConfigError) as err:
        validate_config(config)
    message = str(err.value)
    assert "mode" in message
    assert "A and A'" in message
    assert "line B" in message


@pytest.mark.parametrize("gamma1, ok", [(0.0, False), (TWO_PI, True), (7.0, False), (None, False)])
def test_gamma1_range(gamma1, ok):
    config = ApparatusConfig(mode=UNMODIFIED, lines=SQUARE_LINES, gamma1=gamma1)
    if ok:
        validate_config(config)
    else:
        with pytest.raises(ConfigError):
            validate_config(config)


def test_gamma_must_be_below_full_turn():
    config = ApparatusConfig(mode=MODIFIED, lines=SQUARE_LINES, gamma=TWO_PI)
    with pytest.raises(ConfigError):
        validate_config(config)


def test_run_trial_requires_validated_config():
    config = ApparatusConfig(mode=MODIFIED, lines=SQUARE_LINES, gamma=1.0)
    with pytest.raises(ConfigError, match="validate_config"):
        run_trial(config, 0.0)
    with pytest.raises(ConfigError, match="validate_config"):
        run_trials(config, np.zeros(3))


# ----------------------------------------------------------------------------
# hand-checked trials on the standard engraving
# ----------------------------------------------------------------------------


def test_trial_both_stops_reached():
    # phi = pi/4: body 2 meets B first after pi/12, body 1 then just reaches A
    # as the budget runs out; the stop wins the tie
    out = run_trial(demo_config("ab"), math.pi / 4.0)
    assert out.r1 == pytest.approx(math.pi / 4.0, abs=1e-15)
    assert out.r2 == pytest.approx(math.pi / 12.0, abs=1e-15)
    assert out.blocked1 == STOP and out.blocked2 == STOP
    assert out.reached_left_stop and out.reached_right_stop
    assert out.crossed == frozenset({"A", "A'", "B"})


def test_trial_mutual_constraint_only():
    # phi = pi: both stops are far away, each body gets half the budget
    out = run_trial(demo_config("ab"), math.pi)
    assert out.r1 == pytest.approx(GAMMA / 2.0, abs=1e-15)
    assert out.r2 == pytest.approx(GAMMA / 2.0, abs=1e-15)
    assert out.blocked1 == MUTUAL_CONSTRAINT and out.blocked2 == MUTUAL_CONSTRAINT
    assert not out.reached_left_stop and not out.reached_right_stop
    assert out.crossed == frozenset()


def test_trial_zero_rotation_stop():
    # phi = pi/6 sits exactly on B: body 2 is blocked immediately, body 1
    # spends the whole budget and just reaches A
    out = run_trial(demo_config("ab"), math.pi / 6.0)
    assert out.r2 == 0.0
    assert out.reached_right_stop
    assert out.r1 == pytest.approx(GAMMA, abs=1e-15)
    assert out.reached_left_stop
    assert out.crossed == frozenset({"A", "A'", "B"})


def test_trial_one_stop_blocks_partner():
    # phi = 0.4 rad before A, stops at A and B': body 1 blocks at A quickly,
    # B' is too far for body 2, which takes the rest of the budget instead
    phi = normalize(demo_config().stops.left - 0.4)
    out = run_trial(demo_config("ab'"), phi)
    assert out.r1 == pytest.approx(0.4, abs=1e-12)
    assert out.blocked1 == STOP
    assert out.blocked2 == MUTUAL_CONSTRAINT
    assert out.r2 == pytest.approx(GAMMA - 0.4, abs=1e-12)
    assert not out.reached_right_stop


def test_trial_partner_stop_exactly_at_budget_edge():
    # in setup "ab" the stops sit exactly gamma apart, so when body 1 reaches
    # A the budget leaves body 2 exactly at B; the tie resolves to the stop
    phi = normalize(demo_config().stops.left - 0.4)
    out = run_trial(demo_config("ab"), phi)
    assert out.blocked1 == STOP and out.blocked2 == STOP
    assert out.reached_left_stop and out.reached_right_stop
    assert out.r2 == pytest.approx(GAMMA - 0.4, abs=1e-12)


def test_trial_unmodified_full_turn_crosses_everything():
    config = unmodified_config(SQUARE_LINES, TWO_PI)
    out = run_trial(config, 1.234)
    assert out.r1 == out.r2 == TWO_PI
    assert out.blocked1 == out.blocked2 == FREE_ROTATION_END
    assert not out.reached_left_stop and not out.reached_right_stop
    assert out.crossed == frozenset({"A", "A'", "B", "B'"})


def test_trial_unmodified_quarter_turn():
    # phi = 0 on the square engraving: body 1 sweeps ccw over A only,
    # body 2 sweeps cw over B only
    config = unmodified_config(SQUARE_LINES, math.pi / 2.0)
    out = run_trial(config, 0.0)
    assert out.crossed == frozenset({"A", "B"})
    assert crossed_events(out, SQUARE_LINES) == (True, False, True, False)


def test_crossed_events_order_matches_line_names():
    out = run_trial(demo_config("ab"), math.pi / 4.0)
    assert crossed_events(out, fig2_lines(GAMMA, THETA)) == (True, True, True, False)


# ----------------------------------------------------------------------------
# property tests
# ----------------------------------------------------------------------------

gammas = st.floats(min_value=0.2, max_value=5.5, allow_nan=False)
ratios = st.floats(min_value=0.05, max_value=0.95, allow_nan=False)
phis = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)


@st.composite
def fig2_params(draw):
    gamma = draw(gammas)
    theta = gamma * draw(ratios)
    if gamma + theta >= TWO_PI - 1e-9:
        gamma, theta = gamma / 2.0, theta / 2.0
    return gamma, theta


@given(fig2_params(), st.sampled_from(ALL_SETUPS), phis)
def test_budget_is_respected(params, setup, phi):
    gamma, theta = params
    out = run_trial(fig2_config(gamma, theta, setup), phi)
    assert out.r1 >= 0.0 and out.r2 >= 0.0
    assert out.r1 + out.r2 <= gamma + 1e-12


@given(fig2_params(), st.sampled_from(ALL_SETUPS), phis)
def test_budget_exhausted_unless_both_stopped(params, setup, phi):
    gamma, theta = params
    out = run_trial(fig2_config(gamma, theta, setup), phi)
    if not (out.blocked1 == STOP and out.blocked2 == STOP):
        assert out.r1 + out.r2 == pytest.approx(gamma, abs=1e-12)


@given(fig2_params(), phis)
def test_reached_stop_implies_crossing_its_line(params, phi):
    gamma, theta = params
    out = run_trial(fig2_config(gamma, theta, "a'b"), phi)
    if out.reached_left_stop:
        assert "A'" in out.crossed
    if out.reached_right_stop:
        assert "B" in out.crossed


@given(fig2_params())
def test_stop_wins_tie_with_mutual_constraint(params):
    # place phi so body 1 meets its stop exactly when the budget would split
    gamma, theta = params
    config = fig2_config(gamma, theta, "a")
    phi = normalize(config.stops.left - gamma / 2.0)
    out = run_trial(config, phi)
    assert out.blocked1 == STOP
    assert out.reached_left_stop


@given(fig2_params(), st.sampled_from(ALL_SETUPS), st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40)
def test_batch_matches_scalar_bitwise(params, setup, seed):
    gamma, theta = params
    config = fig2_config(gamma, theta, setup)
    rng = np.random.default_rng(seed)
    sample = rng.uniform(0.0, TWO_PI, size=64)
    batch = run_trials(config, sample)
    for i, phi in enumerate(sample):
        out = run_trial(config, phi)
        assert batch.r1[i] == out.r1, f"r1 differs at phi={phi!r}"
        assert batch.r2[i] == out.r2, f"r2 differs at phi={phi!r}"
        assert bool(batch.reached_left_stop[i]) == out.reached_left_stop
        assert bool(batch.reached_right_stop[i]) == out.reached_right_stop
        for name in ("A", "A'", "B", "B'"):
            assert bool(batch.crossed[name][i]) == (name in out.crossed)


@given(fig2_params(), st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=40)
def test_batch_matches_scalar_unmodified(params, seed):
    gamma, theta = params
    lines = fig2_lines(gamma, theta)
    config = unmodified_config(lines, gamma)
    rng = np.random.default_rng(seed)
    sample = rng.uniform(0.0, TWO_PI, size=64)
    batch = run_trials(config, sample)
    for i, phi in enumerate(sample):
        out = run_trial(config, phi)
        assert batch.r1[i] == out.r1 and batch.r2[i] == out.r2
        for name in ("A", "A'", "B", "B'"):
            assert bool(batch.crossed[name][i]) == (name in out.crossed)


def test_perfect_correlation_in_setup_ab():
    # with stops at A and B, one mark reaches its stop iff the other does
    phis_grid = TWO_PI * (np.arange(200_000) + 0.37) / 200_000
    for gamma, theta in [(GAMMA, THETA), (1.0, 0.9), (2.0, 0.3), (5.0, 1.2)]:
        batch = run_trials(fig2_config(gamma, theta, "ab"), phis_grid)
        assert np.array_equal(batch.reached_left_stop, batch.reached_right_stop)


def test_removing_right_stop_never_helps_body_one():
    phis_grid = TWO_PI * (np.arange(100_000) + 0.37) / 100_000
    for gamma, theta in [(GAMMA, THETA), (1.0, 0.9), (2.0, 0.3)]:
        both = run_trials(fig2_config(gamma, theta, "ab"), phis_grid)
        left_only = run_trials(fig2_config(gamma, theta, "a"), phis_grid)
        assert (left_only.r1 <= both.r1 + 1e-12).all()


def test_config_for_setup_round_trips_all_labels():
    lines = fig2_lines(GAMMA, THETA)
    for setup in ALL_SETUPS:
        config = config_for_setup(lines, GAMMA, setup)
        assert config.mode == MODIFIED
        assert config._validated
