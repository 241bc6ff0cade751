"""Command-line workflows and machine-readable reports.

Subcommands: demo (full pipeline on one configuration), exact (no Monte
Carlo), simulate (campaign driven by a JSON config file), sweep (CSV scan
over gamma and theta), check (internal cross-validation suite).  Exit codes:
0 success, 1 usage or configuration error, 2 internal consistency failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .apparatus import (
    ALL_SETUPS,
    SINGLE_STOP_SETUPS,
    TWO_STOP_SETUPS,
    ConfigError,
    EngravedLines,
    LINE_NAMES,
    config_for_setup,
    fig2_lines,
    unmodified_config,
)
from .circle_geometry import TWO_PI, normalize
from .exact_engine import (
    ConditionalTable,
    ConsistencyError,
    both_stops_reached,
    closed_form_fig2,
    conditional_table,
    conditional_table_exact,
    grid_oracle,
    stop_reached,
)
from .inequality_analysis import (
    AnalysisReport,
    SettingFrequencies,
    analyze,
    bayes_conditionals,
    ch_primed_value,
    ch_sum_value,
    ch_value,
    ch_violated,
    crossing_probability_set,
    fixed_lambda_check,
    naive_plug,
    reduced_ch_value,
    reduced_identity_residual,
)
from .lhv_feasibility import (
    BehaviorTable,
    ch_battery,
    feasible_joint,
    mixture_table,
    no_signaling_deviation,
    pr_box_table,
    random_no_signaling_table,
    singlet_table,
)
from .monte_carlo import (
    CampaignPlan,
    EstimateReport,
    PlanError,
    run_campaign,
)

SCHEMA = "ch-apparatus/1"

__all__ = [
    "SCHEMA",
    "ExperimentConfig",
    "CheckResult",
    "parse_config",
    "render_report",
    "report_to_csv",
    "cmd_demo",
    "cmd_exact",
    "cmd_simulate",
    "cmd_sweep",
    "run_checks",
    "cmd_check",
    "main",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated contents of a JSON experiment description."""

    gamma: float
    theta: float | None
    lines: EngravedLines | None
    trials: dict[str, int]
    seed: int
    workers: int
    frequencies: SettingFrequencies | None  # None means: use empirical frequencies
    out_format: str
    out_path: str | None


def _fail(path: str, message: str) -> None:
    raise ConfigError(f"{path}: {message}")


def _expect_mapping(obj: Any, path: str, allowed: set[str]) -> dict:
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        _fail(path, f"unknown keys {sorted(unknown)!r} (allowed: {sorted(allowed)!r})")
    return obj


def _expect_number(obj: Any, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)) or not math.isfinite(obj):
        _fail(path, f"expected a finite number, got {obj!r}")
    return float(obj)


def _expect_int(obj: Any, path: str, minimum: int = 0) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        _fail(path, f"expected an integer, got {obj!r}")
    if obj < minimum:
        _fail(path, f"must be >= {minimum}, got {obj}")
    return obj


def parse_config(path: str) -> ExperimentConfig:
    """Read and validate a JSON experiment description, filling defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc

    top = _expect_mapping(raw, "config", {"apparatus", "campaign", "frequencies", "output"})
    if "apparatus" not in top:
        _fail("config", "missing required 'apparatus' block")
    app = _expect_mapping(top["apparatus"], "apparatus", {"gamma", "theta", "lines"})
    if "gamma" not in app:
        _fail("apparatus.gamma", "required")
    gamma = _expect_number(app["gamma"], "apparatus.gamma")
    if not 0.0 < gamma < TWO_PI:
        _fail("apparatus.gamma", f"need 0 < gamma < 2*pi, got {gamma!r}")

    has_theta = "theta" in app
    has_lines = "lines" in app
    if has_theta == has_lines:
        _fail("apparatus", "exactly one of 'theta' or 'lines' must be given")
    theta = None
    lines = None
    if has_theta:
        theta = _expect_number(app["theta"], "apparatus.theta")
        if not (0.0 < theta < gamma and gamma + theta < TWO_PI):
            _fail("apparatus.theta", f"need 0 < theta < gamma and gamma + theta < 2*pi, got {theta!r}")
        lines = fig2_lines(gamma, theta)
    else:
        block = _expect_mapping(app["lines"], "apparatus.lines", set(LINE_NAMES))
        values = {}
        for name in LINE_NAMES:
            if name not in block:
                _fail(f"apparatus.lines.{name}", "required")
            values[name] = normalize(_expect_number(block[name], f"apparatus.lines.{name}"))
        lines = EngravedLines(values["A"], values["A'"], values["B"], values["B'"])

    trials = {s: 10**6 for s in ALL_SETUPS}
    seed = 0
    workers = 1
    if "campaign" in top:
        camp = _expect_mapping(top["campaign"], "campaign", {"trials", "seed", "workers"})
        if "trials" in camp:
            t = camp["trials"]
            if isinstance(t, dict):
                _expect_mapping(t, "campaign.trials", set(ALL_SETUPS))
                trials = {s: 0 for s in ALL_SETUPS}
                for s, n in t.items():
                    trials[s] = _expect_int(n, f"campaign.trials.{s}")
            else:
                n = _expect_int(t, "campaign.trials", minimum=1)
                trials = {s: n for s in ALL_SETUPS}
        if "seed" in camp:
            seed = _expect_int(camp["seed"], "campaign.seed")
        if "workers" in camp:
            workers = _expect_int(camp["workers"], "campaign.workers", minimum=1)

    frequencies: SettingFrequencies | None = SettingFrequencies.uniform()
    if "frequencies" in top:
        f = top["frequencies"]
        if f == "empirical":
            frequencies = None
        else:
            block = _expect_mapping(f, "frequencies", set(TWO_STOP_SETUPS))
            vals = {}
            for s in TWO_STOP_SETUPS:
                if s not in block:
                    _fail(f"frequencies.{s}", "required")
                vals[s] = _expect_number(block[s], f"frequencies.{s}")
            try:
                frequencies = SettingFrequencies(
                    ab=vals["ab"], abp=vals["ab'"], apb=vals["a'b"], apbp=vals["a'b'"]
                ).validate()
            except ValueError as exc:
                _fail("frequencies", str(exc))

    out_format = "json"
    out_path = None
    if "output" in top:
        out = _expect_mapping(top["output"], "output", {"format", "path"})
        if "format" in out:
            if out["format"] not in ("json", "csv"):
                _fail("output.format", f"must be 'json' or 'csv', got {out['format']!r}")
            out_format = out["format"]
        if "path" in out and out["path"] is not None:
            if not isinstance(out["path"], str):
                _fail("output.path", f"expected a string, got {out['path']!r}")
            out_path = out["path"]

    return ExperimentConfig(
        gamma=gamma,
        theta=theta,
        lines=lines,
        trials=trials,
        seed=seed,
        workers=workers,
        frequencies=frequencies,
        out_format=out_format,
        out_path=out_path,
    )


def _assert_finite(obj: Any, path: str = "report") -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _assert_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _assert_finite(v, f"{path}[{i}]")
    elif isinstance(obj, float) and not math.isfinite(obj):
        raise ConsistencyError(f"non-finite number at {path}")


def _lines_json(lines: EngravedLines) -> dict[str, float]:
    return {
        "A": lines.A,
        "A_prime": lines.A_prime,
        "B": lines.B,
        "B_prime": lines.B_prime,
    }


def _table_json(table: ConditionalTable) -> dict[str, Any]:
    exact_only = [s for s in SINGLE_STOP_SETUPS if table.singles[s] is None]
    out: dict[str, Any] = {
        "joint": dict(table.joint),
        "singles": dict(table.singles),
        "full_tables": {s: dict(t) for s, t in table.full_tables.items()},
    }
    if exact_only:
        out["exact_only"] = exact_only
    return out


def _analysis_json(report: AnalysisReport) -> dict[str, Any]:
    return {
        "naive": {
            "probabilities": report.naive.as_dict(),
            "ch": report.ch,
            "ch_flagged": report.ch_flagged,
            "ch_primed": report.ch_primed,
            "ch_primed_flagged": report.ch_primed_flagged,
            "ch_sum": report.ch_sum,
            "ch_sum_positive": report.ch_sum_positive,
            "bayes": {
                key: {"value": cond.value, "exceeds_one": cond.exceeds_one}
                for key, cond in report.bayes.items()
            },
        },
        "frequencies": report.frequencies.as_dict(),
        "corrected": {
            "probabilities": report.corrected.as_dict(),
            "ch": report.corrected_ch,
            "ch_flagged": report.corrected_ch_flagged,
            "reduced_ch": report.reduced_ch,
            "identity_residual": report.identity_residual,
        },
    }


def _estimates_json(campaign: EstimateReport) -> dict[str, Any]:
    per_setup: dict[str, Any] = {}
    for setup in ALL_SETUPS:
        result = campaign.results[setup]
        entry: dict[str, Any] = {"n_trials": result.n_trials, "counts": dict(result.counts)}
        if result.n_trials > 0:
            entry["estimates"] = {
                key: {"p_hat": e.p_hat, "stderr": e.stderr, "ci95": list(e.ci95)}
                for key, e in result.estimates().items()
            }
        per_setup[setup] = entry
    return {
        "master_seed": campaign.master_seed,
        "empirical_frequencies": campaign.frequencies.as_dict(),
        "per_setup": per_setup,
    }


def _feasibility_json(table: ConditionalTable) -> dict[str, Any]:
    behavior = BehaviorTable.from_full_tables(table.full_tables)
    joint = feasible_joint(behavior)
    battery = ch_battery(behavior)
    return {
        "no_signaling_deviation": no_signaling_deviation(behavior),
        "joint": {
            "feasible": joint.feasible,
            "max_residual": joint.max_residual,
            "weights": list(joint.weights) if joint.weights is not None else None,
        },
        "battery": {
            "values": dict(battery.values),
            "max_value": battery.max_value,
            "passes": battery.passes,
        },
    }


def _table_difference(left: ConditionalTable, right: ConditionalTable) -> float:
    diffs = [abs(left.joint[s] - right.joint[s]) for s in TWO_STOP_SETUPS]
    for s in SINGLE_STOP_SETUPS:
        lv, rv = left.singles[s], right.singles[s]
        if lv is not None and rv is not None:
            diffs.append(abs(lv - rv))
    for s in TWO_STOP_SETUPS:
        for cell, value in left.full_tables[s].items():
            diffs.append(abs(value - right.full_tables[s][cell]))
    return max(diffs)


def render_report(report: dict[str, Any], out_format: str = "json") -> str:
    _assert_finite(report)
    if out_format == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out_format == "csv":
        return report_to_csv(report)
    raise ConfigError(f"unknown report format {out_format!r}")


def report_to_csv(report: dict[str, Any]) -> str:
    """Flatten a report to sorted dotted-path key,value rows."""
    rows: list[tuple[str, str]] = []

    def walk(obj: Any, path: str) -> None:
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(obj[k], f"{path}.{k}" if path else str(k))
        elif isinstance(obj, (list, tuple)):
            for i, v in enumerate(obj):
                walk(v, f"{path}[{i}]")
        else:
            rows.append((path, _csv_value(obj)))

    walk(report, "")
    lines = ["key,value"] + [f"{key},{value}" for key, value in rows]
    return "\n".join(lines) + "\n"


def _csv_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _base_report(command: str, gamma: float, theta: float | None, lines: EngravedLines) -> dict[str, Any]:
    apparatus: dict[str, Any] = {"mode": "modified", "gamma": gamma, "lines": _lines_json(lines)}
    if theta is not None:
        apparatus["theta"] = theta
    return {"schema": SCHEMA, "command": command, "apparatus": apparatus}


def cmd_exact(gamma: float, theta: float) -> dict[str, Any]:
    """Closed-form and arc-measure tables plus full analysis, no sampling."""
    closed = closed_form_fig2(gamma, theta)
    exact = conditional_table_exact(gamma, theta)
    diff = _table_difference(closed, exact)
    if diff > 1e-12:
        raise ConsistencyError(f"closed form and arc measures disagree by {diff!r}")
    report = _base_report("exact", gamma, theta, fig2_lines(gamma, theta))
    report["tables"] = {"closed_form": _table_json(closed), "exact": _table_json(exact)}
    report["analysis"] = {"exact": _analysis_json(analyze(exact, SettingFrequencies.uniform()))}
    report["feasibility"] = _feasibility_json(exact)
    report["consistency"] = {"closed_vs_exact_max_abs": diff}
    return report


def cmd_demo(
    gamma: float,
    theta: float,
    seed: int = 0,
    trials: int = 10**6,
    workers: int = 1,
) -> dict[str, Any]:
    """Full pipeline on one configuration: tables, campaign, analysis, feasibility."""
    if trials < 1:
        raise ConfigError("demo needs at least one trial per sequence")
    report = cmd_exact(gamma, theta)
    report["command"] = "demo"
    exact = conditional_table_exact(gamma, theta)
    plan = CampaignPlan.from_params(gamma, theta=theta, n_trials=trials, master_seed=seed)
    campaign = run_campaign(plan, workers=workers)
    report["tables"]["monte_carlo"] = _table_json(campaign.table)
    report["estimates"] = _estimates_json(campaign)
    report["analysis"]["monte_carlo"] = _analysis_json(
        analyze(campaign.table, campaign.frequencies)
    )
    mc_diff = _table_difference(exact, campaign.table)
    report["consistency"]["exact_vs_monte_carlo_max_abs"] = mc_diff
    return report


def cmd_simulate(config: ExperimentConfig) -> dict[str, Any]:
    """Campaign and analysis as described by a parsed experiment config."""
    lines = config.lines
    exact = (
        conditional_table_exact(config.gamma, config.theta)
        if config.theta is not None
        else conditional_table(lines, config.gamma)
    )
    plan = CampaignPlan.from_params(
        config.gamma,
        theta=config.theta,
        lines=None if config.theta is not None else lines,
        n_trials=config.trials,
        master_seed=config.seed,
    )
    campaign = run_campaign(plan, workers=config.workers)
    freqs = config.frequencies if config.frequencies is not None else campaign.frequencies
    report = _base_report("simulate", config.gamma, config.theta, lines)
    report["frequencies_source"] = "explicit" if config.frequencies is not None else "empirical"
    mc_table = campaign.table
    report["tables"] = {
        "exact": _table_json(exact),
        "monte_carlo": _table_json(mc_table) if mc_table is not None else None,
    }
    if config.theta is not None:
        report["tables"]["closed_form"] = _table_json(closed_form_fig2(config.gamma, config.theta))
    report["estimates"] = _estimates_json(campaign)
    report["analysis"] = {"exact": _analysis_json(analyze(exact, freqs))}
    if mc_table is not None and all(mc_table.singles[s] is not None for s in SINGLE_STOP_SETUPS):
        report["analysis"]["monte_carlo"] = _analysis_json(analyze(mc_table, freqs))
    else:
        report["analysis"]["monte_carlo"] = None
    report["feasibility"] = _feasibility_json(exact)
    report["consistency"] = {
        "exact_vs_monte_carlo_max_abs": _table_difference(exact, mc_table) if mc_table is not None else None
    }
    return report


SWEEP_HEADER = "gamma,theta,ch_naive,ch_primed,ch_sum,bayes_max,ch_corrected,naive_violated,corrected_violated"


class SweepStats(NamedTuple):
    rows: int
    skipped: int


def cmd_sweep(
    gamma_range: tuple[float, float],
    theta_range: tuple[float, float],
    steps: int,
    out: Any,
) -> SweepStats:
    """Scan the closed forms over a (gamma, theta) grid and write CSV rows.

    Grid points violating 0 < theta < gamma (or gamma + theta < 2*pi) are
    skipped and counted in a trailing '#' comment.
    """
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    gammas = np.linspace(gamma_range[0], gamma_range[1], steps)
    thetas = np.linspace(theta_range[0], theta_range[1], steps)
    uniform = SettingFrequencies.uniform()
    rows = 0
    skipped = 0
    out.write(SWEEP_HEADER + "\n")
    for g in gammas:
        for t in thetas:
            try:
                closed = closed_form_fig2(float(g), float(t))
            except ConfigError:
                skipped += 1
                continue
            naive = naive_plug(closed)
            ch = ch_value(naive)
            chp = ch_primed_value(naive)
            chs = ch_sum_value(naive)
            bayes = bayes_conditionals(naive)
            bayes_max = max(c.value for c in bayes.values() if c.value is not None)
            corrected = reduced_ch_value(closed, uniform)
            naive_violated = ch_violated(ch) or ch_violated(chp) or chs > 1e-9
            corrected_violated = ch_violated(corrected)
            cells = [
                repr(float(g)),
                repr(float(t)),
                repr(ch),
                repr(chp),
                repr(chs),
                repr(bayes_max),
                repr(corrected),
                "true" if naive_violated else "false",
                "true" if corrected_violated else "false",
            ]
            out.write(",".join(cells) + "\n")
            rows += 1
    out.write(f"# skipped {skipped} invalid grid points\n")
    return SweepStats(rows=rows, skipped=skipped)


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def _random_fig2_pair(rng: np.random.Generator) -> tuple[float, float]:
    while True:
        gamma = float(rng.uniform(1e-3, TWO_PI - 2e-3))
        theta = float(rng.uniform(0.0, gamma))
        if theta > 1e-6 and gamma - theta > 1e-6 and gamma + theta < TWO_PI - 1e-6:
            return gamma, theta


def _random_unmodified(rng: np.random.Generator):
    while True:
        a, ap, b, bp = (float(x) for x in rng.uniform(0.0, TWO_PI, 4))
        if a != ap and b != bp:
            lines = EngravedLines(a, ap, b, bp)
            return unmodified_config(lines, float(rng.uniform(1e-3, TWO_PI)))


def run_checks(perturb_closed_form: float = 0.0) -> list[CheckResult]:
    """Internal cross-validation suite; the fault-injection knob perturbs the
    closed form so the surrounding machinery can prove it would notice."""
    demo_gamma, demo_theta = math.pi / 3.0, math.pi / 6.0
    results: list[CheckResult] = []

    def record(name: str, passed: bool, detail: str) -> None:
        results.append(CheckResult(name=name, passed=passed, detail=detail))

    def perturbed_closed(gamma: float, theta: float) -> ConditionalTable:
        table = closed_form_fig2(gamma, theta)
        if perturb_closed_form:
            joint = dict(table.joint)
            joint["ab"] += perturb_closed_form
            table = ConditionalTable(
                joint=joint, singles=table.singles, full_tables=table.full_tables
            )
        return table

    # closed form against the arc engine, on the demo point and at random
    diff = _table_difference(perturbed_closed(demo_gamma, demo_theta), conditional_table_exact(demo_gamma, demo_theta))
    record("closed-form-vs-exact-demo", diff <= 1e-12, f"max|diff|={diff:.3e}")
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        g, t = _random_fig2_pair(rng)
        worst = max(worst, _table_difference(perturbed_closed(g, t), conditional_table_exact(g, t)))
    record("closed-form-vs-exact-random", worst <= 1e-12, f"max|diff|={worst:.3e} over 100 pairs")

    # arc engine against the brute-force grid oracle on the demo setups
    worst = 0.0
    exact = conditional_table_exact(demo_gamma, demo_theta)
    for setup in TWO_STOP_SETUPS:
        config = config_for_setup(fig2_lines(demo_gamma, demo_theta), demo_gamma, setup)
        oracle = grid_oracle(config, both_stops_reached(), 10**6)
        worst = max(worst, abs(oracle - exact.joint[setup]))
    for setup in SINGLE_STOP_SETUPS:
        config = config_for_setup(fig2_lines(demo_gamma, demo_theta), demo_gamma, setup)
        side = "left" if setup.startswith("a") else "right"
        oracle = grid_oracle(config, stop_reached(side), 10**6)
        worst = max(worst, abs(oracle - exact.singles[setup]))
    record("exact-vs-grid-oracle", worst <= 1e-5, f"max|diff|={worst:.3e} at 1e6 grid points")

    # arc engine against a seeded campaign, 5 sigma per entry
    plan = CampaignPlan.from_params(demo_gamma, theta=demo_theta, n_trials=10**5, master_seed=20260816)
    campaign = run_campaign(plan)
    worst_sigma = 0.0
    for setup in TWO_STOP_SETUPS:
        p = exact.joint[setup]
        sigma = math.sqrt(p * (1.0 - p) / 10**5)
        gap = abs(campaign.table.joint[setup] - p)
        worst_sigma = max(worst_sigma, gap / sigma if sigma > 0.0 else (math.inf if gap > 0 else 0.0))
    for setup in SINGLE_STOP_SETUPS:
        p = exact.singles[setup]
        sigma = math.sqrt(p * (1.0 - p) / 10**5)
        gap = abs(campaign.table.singles[setup] - p)
        worst_sigma = max(worst_sigma, gap / sigma if sigma > 0.0 else (math.inf if gap > 0 else 0.0))
    record("exact-vs-monte-carlo", worst_sigma <= 5.0, f"max deviation {worst_sigma:.2f} sigma at n=1e5")

    # the corrected expansion collapses to its reduced form identically
    rng = np.random.default_rng(202)
    worst = 0.0
    low, high = 0.0, -1.0
    for _ in range(1000):
        g, t = _random_fig2_pair(rng)
        table = closed_form_fig2(g, t)
        f = rng.dirichlet(np.ones(4))
        freqs = SettingFrequencies(*map(float, f))
        worst = max(worst, reduced_identity_residual(table, freqs))
        value = reduced_ch_value(table, freqs)
        low = min(low, value)
        high = max(high, value)
    ok = worst <= 1e-12 and low >= -1.0 - 1e-9 and high <= 1e-9
    record("reduced-identity-random", ok, f"max residual={worst:.3e}, range [{low:.4f}, {high:.4f}]")

    # naive plug-in values match their closed expressions
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(1000):
        g, t = _random_fig2_pair(rng)
        naive = naive_plug(closed_form_fig2(g, t))
        worst = max(worst, abs(ch_value(naive) - (2.0 * g - t) / TWO_PI))
        worst = max(worst, abs(ch_primed_value(naive) - t / TWO_PI))
        worst = max(worst, abs(ch_sum_value(naive) - 2.0 * g / TWO_PI))
        for cond in bayes_conditionals(naive).values():
            worst = max(worst, abs(cond.value - 2.0))
    record("naive-closed-values", worst <= 1e-12, f"max|diff|={worst:.3e} over 1000 pairs")

    # strategy mixtures must come back feasible with a faithful witness
    rng = np.random.default_rng(404)
    worst = 0.0
    all_feasible = True
    for _ in range(100):
        table = mixture_table(rng.dirichlet(np.ones(16)))
        result = feasible_joint(table)
        all_feasible &= result.feasible
        worst = max(worst, result.max_residual)
    record("strategy-mixtures-feasible", all_feasible and worst <= 1e-9, f"max residual={worst:.3e}")

    # LP feasibility and the CH battery must agree on no-signaling tables
    rng = np.random.default_rng(505)
    disagreements = 0
    for _ in range(1000):
        table = random_no_signaling_table(rng)
        if feasible_joint(table).feasible != ch_battery(table).passes:
            disagreements += 1
    record("fine-equivalence", disagreements == 0, f"{disagreements} disagreements in 1000 tables")

    # named infeasible examples keep their certified battery maxima
    demo_behavior = BehaviorTable.from_full_tables(exact.full_tables)
    demo_dev = no_signaling_deviation(demo_behavior)
    demo_feasible = feasible_joint(demo_behavior).feasible
    pr = ch_battery(pr_box_table())
    singlet = ch_battery(singlet_table())
    ok = (
        not demo_feasible
        and demo_dev >= 1.0 / 12.0 - 1e-9
        and abs(pr.max_value - 0.5) <= 1e-9
        and abs(singlet.max_value - (math.sqrt(2.0) - 1.0) / 2.0) <= 1e-9
    )
    record(
        "infeasible-examples",
        ok,
        f"demo deviation={demo_dev:.6f}, pr max={pr.max_value:.6f}, singlet max={singlet.max_value:.6f}",
    )

    # factorisability and range of the CH kernel at fixed hidden state
    rng = np.random.default_rng(606)
    config = _random_unmodified(rng)
    worst_res = 0.0
    low, high = 0.0, -1.0
    n_grid = 10**5
    for k in range(n_grid):
        res = fixed_lambda_check(config, (k + 0.5) * TWO_PI / n_grid)
        worst_res = max(worst_res, res.residual)
        low = min(low, res.value)
        high = max(high, res.value)
    ok = worst_res == 0.0 and low >= -1.0 and high <= 0.0
    record("fixed-lambda-grid", ok, f"max residual={worst_res:.1e}, range [{low:.1f}, {high:.1f}]")

    # honest one-space probabilities never leave the CH band
    rng = np.random.default_rng(707)
    low, high = 0.0, -1.0
    for _ in range(2000):
        s = crossing_probability_set(_random_unmodified(rng))
        for value in (ch_value(s), ch_primed_value(s)):
            low = min(low, value)
            high = max(high, value)
    ok = low >= -1.0 - 1e-9 and high <= 1e-9
    record("honest-ch-sweep", ok, f"value range [{low:.4f}, {high:.4f}] over 2000 configs")

    # campaigns must not depend on the worker split
    plan = CampaignPlan.from_params(demo_gamma, theta=demo_theta, n_trials=20000, master_seed=7)
    reports = [
        render_report(_estimates_json(run_campaign(plan, workers=w))) for w in (1, 4)
    ]
    record("mc-worker-reproducibility", reports[0] == reports[1], "campaign bytes identical for 1 and 4 workers")

    # report rendering must be deterministic
    first = render_report(cmd_exact(demo_gamma, demo_theta))
    second = render_report(cmd_exact(demo_gamma, demo_theta))
    record("report-determinism", first == second, "exact report bytes identical on repeat")

    return results


def cmd_check(perturb_closed_form: float = 0.0, out=None) -> int:
    """Run the cross-validation suite; exit 0 when everything passes."""
    out = out if out is not None else sys.stdout
    started = time.perf_counter()
    results = run_checks(perturb_closed_form=perturb_closed_form)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        out.write(f"{status} {result.name}: {result.detail}\n")
    elapsed = time.perf_counter() - started
    failed = [r.name for r in results if not r.passed]
    if failed:
        out.write(f"FAILED checks: {', '.join(failed)} ({elapsed:.1f}s)\n")
        return 2
    out.write(f"all {len(results)} checks passed ({elapsed:.1f}s)\n")
    return 0


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ch-apparatus",
        description="Classical two-body rotation device versus the Clauser-Horne inequalities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="full pipeline on one configuration")
    exact = sub.add_parser("exact", help="closed-form and arc-measure tables, no sampling")
    for p in (demo, exact):
        p.add_argument("--gamma", type=float, default=math.pi / 3.0, help="mutual rotation budget")
        p.add_argument("--theta", type=float, default=math.pi / 6.0, help="engraving offset")
        p.add_argument("--out", type=str, default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    demo.add_argument("--seed", type=int, default=0, help="campaign master seed")
    demo.add_argument("--trials", type=int, default=10**6, help="trials per setup")
    demo.add_argument("--workers", type=int, default=1)

    simulate = sub.add_parser("simulate", help="campaign driven by a JSON config file")
    simulate.add_argument("--config", type=str, required=True)
    simulate.add_argument("--out", type=str, default=None)
    simulate.add_argument("--format", choices=("json", "csv"), default=None)

    sweep = sub.add_parser("sweep", help="closed-form scan over gamma and theta")
    sweep.add_argument("--gamma-min", type=float, default=math.pi / 6.0)
    sweep.add_argument("--gamma-max", type=float, default=5.0 * math.pi / 6.0)
    sweep.add_argument("--theta-min", type=float, default=math.pi / 24.0)
    sweep.add_argument("--theta-max", type=float, default=2.0 * math.pi / 3.0)
    sweep.add_argument("--steps", type=int, default=8, help="grid points per axis")
    sweep.add_argument("--out", type=str, default=None, help="CSV path (default stdout)")

    sub.add_parser("check", help="run the internal cross-validation suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "demo":
            report = cmd_demo(
                args.gamma, args.theta, seed=args.seed, trials=args.trials, workers=args.workers
            )
            _emit(render_report(report, args.format), args.out)
        elif args.command == "exact":
            report = cmd_exact(args.gamma, args.theta)
            _emit(render_report(report, args.format), args.out)
        elif args.command == "simulate":
            config = parse_config(args.config)
            report = cmd_simulate(config)
            out_format = args.format if args.format is not None else config.out_format
            out_path = args.out if args.out is not None else config.out_path
            _emit(render_report(report, out_format), out_path)
        elif args.command == "sweep":
            if args.out is None:
                cmd_sweep(
                    (args.gamma_min, args.gamma_max),
                    (args.theta_min, args.theta_max),
                    args.steps,
                    sys.stdout,
                )
            else:
                with open(args.out, "w", encoding="utf-8", newline="") as fh:
                    cmd_sweep(
                        (args.gamma_min, args.gamma_max),
                        (args.theta_min, args.theta_max),
                        args.steps,
                        fh,
                    )
        elif args.command == "check":
            return cmd_check()
        return 0
    except ConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, PlanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
