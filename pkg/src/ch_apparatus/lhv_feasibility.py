"""Local-hidden-variable feasibility of two-party behavior tables.

A behavior table gives a 2x2 outcome distribution for each of the four
setting pairs.  It admits a local model exactly when it is a convex mixture
of the sixteen deterministic strategies; this module decides that question
two independent ways, by linear programming over the strategy mixtures and
by the full battery of CH inequalities, which agree on no-signaling tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .exact_engine import CELLS, ConsistencyError
from .simplex import solve_lp

SETTINGS = ("ab", "ab'", "a'b", "a'b'")

NORM_TOL = 1e-9

__all__ = [
    "SETTINGS",
    "NORM_TOL",
    "DeterministicStrategy",
    "BehaviorTable",
    "FeasibilityResult",
    "BatteryResult",
    "enumerate_strategies",
    "strategy_table",
    "mixture_table",
    "no_signaling_deviation",
    "feasible_joint",
    "ch_battery",
    "pr_box_table",
    "singlet_table",
    "random_no_signaling_table",
]


@dataclass(frozen=True)
class DeterministicStrategy:
    """Fixed outcome (0 or 1) for every local setting."""

    a: int
    a_prime: int
    b: int
    b_prime: int

    def left(self, setting: str) -> int:
        return self.a_prime if setting.startswith("a'") else self.a

    def right(self, setting: str) -> int:
        return self.b_prime if setting.endswith("b'") else self.b


def enumerate_strategies() -> list[DeterministicStrategy]:
    """All sixteen strategies, in binary counting order on (a, a', b, b')."""
    return [
        DeterministicStrategy((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1)
        for k in range(16)
    ]


@dataclass(frozen=True)
class BehaviorTable:
    """Outcome distributions per setting pair, cells keyed '11','10','01','00'."""

    tables: dict[str, dict[str, float]]

    def validate(self, tol: float = NORM_TOL) -> "BehaviorTable":
        for setting in SETTINGS:
            table = self.tables[setting]
            if any(not math.isfinite(table[c]) or table[c] < -tol for c in CELLS):
                raise ValueError(f"cells for setting {setting!r} must be nonnegative: {table!r}")
            if abs(sum(table[c] for c in CELLS) - 1.0) > tol:
                raise ValueError(f"cells for setting {setting!r} must sum to 1: {table!r}")
        return self

    def left_marginal(self, setting: str) -> float:
        t = self.tables[setting]
        return t["11"] + t["10"]

    def right_marginal(self, setting: str) -> float:
        t = self.tables[setting]
        return t["11"] + t["01"]

    def vector(self) -> np.ndarray:
        return np.array([self.tables[s][c] for s in SETTINGS for c in CELLS])

    @classmethod
    def from_vector(cls, vec: Iterable[float]) -> "BehaviorTable":
        values = list(map(float, vec))
        tables = {
            s: dict(zip(CELLS, values[4 * i : 4 * i + 4])) for i, s in enumerate(SETTINGS)
        }
        return cls(tables=tables)

    @classmethod
    def from_full_tables(cls, full_tables: dict[str, dict[str, float]]) -> "BehaviorTable":
        return cls(tables={s: dict(full_tables[s]) for s in SETTINGS}).validate()


def strategy_table(strategy: DeterministicStrategy) -> BehaviorTable:
    tables = {}
    for setting in SETTINGS:
        cell = f"{strategy.left(setting)}{strategy.right(setting)}"
        tables[setting] = {c: 1.0 if c == cell else 0.0 for c in CELLS}
    return BehaviorTable(tables=tables)


def mixture_table(weights: Iterable[float]) -> BehaviorTable:
    """Convex mixture of the sixteen strategies in canonical order."""
    w = np.asarray(list(weights), dtype=np.float64)
    if w.size != 16 or w.min() < -NORM_TOL or abs(w.sum() - 1.0) > NORM_TOL:
        raise ValueError("weights must be 16 nonnegative numbers summing to 1")
    vec = _strategy_matrix() @ w
    return BehaviorTable.from_vector(vec).validate()


_STRATEGY_MATRIX: np.ndarray | None = None


def _strategy_matrix() -> np.ndarray:
    global _STRATEGY_MATRIX
    if _STRATEGY_MATRIX is None:
        _STRATEGY_MATRIX = np.column_stack(
            [strategy_table(s).vector() for s in enumerate_strategies()]
        )
    return _STRATEGY_MATRIX


def no_signaling_deviation(table: BehaviorTable) -> float:
    """Largest shift of a one-side marginal caused by the remote setting."""
    return max(
        abs(table.left_marginal("ab") - table.left_marginal("ab'")),
        abs(table.left_marginal("a'b") - table.left_marginal("a'b'")),
        abs(table.right_marginal("ab") - table.right_marginal("a'b")),
        abs(table.right_marginal("ab'") - table.right_marginal("a'b'")),
    )


class FeasibilityResult(NamedTuple):
    feasible: bool
    max_residual: float
    weights: tuple[float, ...] | None


def feasible_joint(table: BehaviorTable, tol: float = NORM_TOL) -> FeasibilityResult:
    """Decide membership in the local polytope by linear programming.

    Minimizes the largest entry-wise residual between the table and a convex
    mixture of the sixteen strategies; the table is feasible when that
    minimum is at most ``tol``, and the optimal weights are the witness.
    """
    table.validate()
    m = _strategy_matrix()
    v = table.vector()
    # variables: 16 weights then the residual bound t
    c = np.zeros(17)
    c[16] = 1.0
    ones = np.ones((16, 1))
    a_ub = np.vstack([np.hstack([m, -ones]), np.hstack([-m, -ones])])
    b_ub = np.concatenate([v, -v])
    a_eq = np.zeros((1, 17))
    a_eq[0, :16] = 1.0
    result = solve_lp(c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=[1.0])
    if result.status != "optimal":
        raise ConsistencyError(f"feasibility program ended with status {result.status!r}")
    weights = result.x[:16]
    residual = float(np.abs(m @ weights - v).max())
    feasible = residual <= tol
    return FeasibilityResult(
        feasible=feasible,
        max_residual=residual,
        weights=tuple(float(w) for w in weights) if feasible else None,
    )


class BatteryResult(NamedTuple):
    values: dict[str, float]
    max_value: float
    passes: bool


def ch_battery(table: BehaviorTable, tol: float = NORM_TOL) -> BatteryResult:
    """Evaluate every sign and relabeling image of the CH inequality.

    The eight entries are generated from the base combination by swapping
    the primed and unprimed settings on either side and by flipping to the
    lower bound; a table passes when every entry is at most zero (within
    ``tol``).  For no-signaling tables, passing is equivalent to local
    feasibility.  One-side marginals are averaged over the remote setting,
    which is unambiguous precisely in the no-signaling case.
    """
    table.validate()
    joint = {
        (x, y): table.tables[("a'" if x else "a") + ("b'" if y else "b")]["11"]
        for x in (0, 1)
        for y in (0, 1)
    }
    m_left = {
        x: 0.5
        * (
            table.left_marginal(("a'" if x else "a") + "b")
            + table.left_marginal(("a'" if x else "a") + "b'")
        )
        for x in (0, 1)
    }
    m_right = {
        y: 0.5
        * (
            table.right_marginal("a" + ("b'" if y else "b"))
            + table.right_marginal("a'" + ("b'" if y else "b"))
        )
        for y in (0, 1)
    }
    values: dict[str, float] = {}
    for swap_a in (0, 1):
        for swap_b in (0, 1):
            value = (
                joint[(swap_a, swap_b)]
                - joint[(swap_a, 1 ^ swap_b)]
                + joint[(1 ^ swap_a, swap_b)]
                + joint[(1 ^ swap_a, 1 ^ swap_b)]
                - m_left[1 ^ swap_a]
                - m_right[swap_b]
            )
            label = f"swap{'A' if swap_a else ''}{'B' if swap_b else ''}" if swap_a or swap_b else "base"
            values[f"{label}:upper"] = value
            values[f"{label}:lower"] = -1.0 - value
    max_value = max(values.values())
    return BatteryResult(values=values, max_value=max_value, passes=max_value <= tol)


def pr_box_table(variant: int = 0) -> BehaviorTable:
    """Extremal no-signaling box: outcomes satisfy l xor r = x.y (variant 0).

    Demo plumbing for the feasibility routines.  The eight variants add the
    affine terms alpha.x, beta.y and a global flip.
    """
    if not 0 <= variant < 8:
        raise ValueError(f"variant must be in 0..7, got {variant}")
    alpha = (variant >> 2) & 1
    beta = (variant >> 1) & 1
    flip = variant & 1
    tables = {}
    for x in (0, 1):
        for y in (0, 1):
            setting = ("a'" if x else "a") + ("b'" if y else "b")
            target = (x * y + alpha * x + beta * y + flip) % 2
            tables[setting] = {
                f"{l}{r}": 0.5 if (l ^ r) == target else 0.0 for l in (1, 0) for r in (1, 0)
            }
    return BehaviorTable(tables=tables).validate()


def singlet_table(
    a: float = 0.0,
    a_prime: float = 0.5 * math.pi,
    b: float = 0.25 * math.pi,
    b_prime: float = -0.25 * math.pi,
) -> BehaviorTable:
    """Spin-singlet behavior at four analyzer angles (demo plumbing).

    Outcome 1 on each side has probability 1/2 and the joint probability is
    sin((alpha - beta) / 2)^2 / 2; the defaults maximize the CH battery at
    (sqrt(2) - 1) / 2.
    """
    angles = {"a": a, "a'": a_prime, "b": b, "b'": b_prime}
    tables = {}
    for x in ("a", "a'"):
        for y in ("b", "b'"):
            p11 = 0.5 * math.sin(0.5 * (angles[x] - angles[y])) ** 2
            tables[x + y] = {"11": p11, "10": 0.5 - p11, "01": 0.5 - p11, "00": p11}
    return BehaviorTable(tables=tables).validate()


_NS_PROJECTOR: np.ndarray | None = None


def _ns_projector() -> np.ndarray:
    """Orthogonal projector onto the normalization/no-signaling null space."""
    global _NS_PROJECTOR
    if _NS_PROJECTOR is None:
        def cell_index(setting: str, cell: str) -> int:
            return SETTINGS.index(setting) * 4 + CELLS.index(cell)

        rows = []
        for setting in SETTINGS:
            row = np.zeros(16)
            for cell in CELLS:
                row[cell_index(setting, cell)] = 1.0
            rows.append(row)
        for pair in (("ab", "ab'"), ("a'b", "a'b'")):
            row = np.zeros(16)
            for cell in ("11", "10"):
                row[cell_index(pair[0], cell)] += 1.0
                row[cell_index(pair[1], cell)] -= 1.0
            rows.append(row)
        for pair in (("ab", "a'b"), ("ab'", "a'b'")):
            row = np.zeros(16)
            for cell in ("11", "01"):
                row[cell_index(pair[0], cell)] += 1.0
                row[cell_index(pair[1], cell)] -= 1.0
            rows.append(row)
        a = np.vstack(rows)
        _NS_PROJECTOR = np.eye(16) - np.linalg.pinv(a) @ a
    return _NS_PROJECTOR


def random_no_signaling_table(rng: np.random.Generator) -> BehaviorTable:
    """Random no-signaling table (test plumbing).

    Draws a strategy mixture, sometimes blends toward a random extremal box
    so both feasible and infeasible tables occur, then adds noise projected
    onto the no-signaling subspace, shrinking it until all cells stay
    nonnegative.
    """
    v = _strategy_matrix() @ rng.dirichlet(np.ones(16))
    if rng.random() < 0.5:
        box = pr_box_table(int(rng.integers(8))).vector()
        beta = 0.9 * rng.random()
        v = (1.0 - beta) * v + beta * box
    sigma = 0.05
    projector = _ns_projector()
    for _ in range(10):
        noisy = v + projector @ rng.normal(0.0, sigma, 16)
        if noisy.min() >= 0.0:
            return BehaviorTable.from_vector(noisy).validate()
        sigma *= 0.5
    return BehaviorTable.from_vector(v).validate()
