"""Command-line front end: simulate, areas, bounds, sweep, reproduce."""

import argparse
import concurrent.futures
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

from . import stability
from .errors import TranshapeError
from .scenario import (
    OUTCOME_EXIT_CODES,
    PRESET_FAMILIES,
    ConfigError,
    Scenario,
    build_report,
    load_scenario,
    resolve_preset,
    run_scenario,
    trajectory_csv_lines,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_INCONCLUSIVE = 3
EXIT_CHECK_FAILED = 4


def _atomic_write(path: str, text: str):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, doc: dict):
    _atomic_write(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def _write_csv(path: str, lines):
    _atomic_write(path, "\n".join(lines) + "\n")


def _member_path(base: str, member: str, multiple: bool) -> str:
    if not multiple:
        return base
    p = Path(base)
    return str(p.with_name(f"{p.stem}-{member}{p.suffix}"))


def _load_scenarios(args):
    if args.config and args.preset:
        raise ConfigError("pass either --config or --preset, not both")
    if args.config:
        return (load_scenario(args.config),)
    if args.preset:
        return resolve_preset(args.preset)
    raise ConfigError("a scenario is required: pass --config FILE or --preset NAME")


def _max_workers() -> int:
    raw = os.environ.get("TRANSHAPE_THREADS", "").strip()
    if raw:
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ConfigError(f"TRANSHAPE_THREADS = {raw!r} is not an integer") from exc
        if workers < 1:
            raise ConfigError("TRANSHAPE_THREADS must be at least 1")
        return workers
    return os.cpu_count() or 1


def cmd_simulate(args) -> int:
    scenarios = _load_scenarios(args)
    multiple = len(scenarios) > 1
    code = EXIT_OK
    for scenario in scenarios:
        result = run_scenario(scenario)
        report = build_report(result)
        csv_path = args.out_csv or scenario.csv_path
        if csv_path:
            plant_dim = scenario.build_plant().dim
            _write_csv(
                _member_path(csv_path, scenario.name, multiple),
                trajectory_csv_lines(result.trajectory, plant_dim),
            )
        json_path = args.out_json or scenario.json_path
        if json_path:
            _write_json(_member_path(json_path, scenario.name, multiple), report)
        else:
            print(json.dumps(report, indent=2, allow_nan=False))
        print(f"{scenario.name}: {result.outcome}", file=sys.stderr)
        code = max(code, OUTCOME_EXIT_CODES[result.outcome])
    return code


def cmd_areas(args) -> int:
    scenarios = _load_scenarios(args)
    multiple = len(scenarios) > 1
    code = EXIT_OK
    for scenario in scenarios:
        result = run_scenario(scenario)
        report = build_report(result, include_lemma1=False)
        doc = {
            "scenario": report["scenario"],
            "diagnostics": report["diagnostics"],
        }
        if "areas" in report:
            doc["areas"] = report["areas"]
        json_path = args.out_json or scenario.json_path
        if json_path:
            _write_json(_member_path(json_path, scenario.name, multiple), doc)
        else:
            print(json.dumps(doc, indent=2, allow_nan=False))
        code = max(code, OUTCOME_EXIT_CODES[result.outcome])
    return code


def _stability_section(scenario: Scenario, args) -> dict:
    """Assemble the bounds report; raises ConfigError for unsupported plants."""
    name = scenario.plant_name
    params = scenario.plant_params
    section = {}
    if name == "msd":
        constants = stability.msd_constants(
            params["omega_n"], params["zeta"], params["beta_sq"]
        )
        deta = args.deta_norm
        section["sufficient"] = {
            "method": "section4",
            "lambda_max": stability.lambda_bound_higher_order(constants, deta),
            "deta_du_norm_max": deta,
        }
        section["linearized"] = {
            "method": "routh-hurwitz",
            "lambda_max": stability.msd_linearized_lambda_max(
                params["omega_n"], params["zeta"]
            ),
        }
    elif name in ("affine", "linear"):
        b = params["b"] if name == "affine" else 1.0 / params["tau"]
        constants = stability.affine_constants(b)
        section["sufficient"] = {
            "method": "theorem1",
            "lambda_max": stability.lambda_bound_exponential(constants),
        }
    else:
        raise ConfigError(
            f"plant {name!r} supports no Lyapunov-constant preset: the cubic "
            "plant's contraction rate vanishes at equilibrium, so no positive "
            "lower bound b exists"
        )
    section["constants"] = {
        "c1": constants.c1,
        "c2": constants.c2,
        "c3": constants.c3,
        "c4": constants.c4,
    }
    pair = stability.ClassKPair(
        alpha3=lambda s, c=constants: c.c3 * s * s,
        alpha4=lambda s, c=constants: c.c4 * s,
        grid=stability.default_sigma_grid(),
    )
    sig = stability.sigma_bound(pair)
    section["sigma"] = {
        "method": "theorem2-grid",
        "sigma": sig.sigma,
        "argmin": sig.argmin,
        "hypothesis_ok": sig.hypothesis_ok,
    }
    if args.empirical:
        lo, hi = args.lambda_range
        bracket = stability.empirical_lambda_boundary(
            scenario.build_plant(),
            scenario.alpha,
            scenario.build_step(),
            scenario.build_solver(),
            (lo, hi),
            args.bisection_tol,
            band=scenario.band,
            window=scenario.window,
        )
        section["empirical"] = {
            "method": "bisection",
            "stable_max": bracket.stable_max,
            "unstable_min": bracket.unstable_min,
            "inconclusive": bracket.inconclusive,
            "probes": [[lam, verdict] for lam, verdict in bracket.probes],
        }
    return section


def cmd_bounds(args) -> int:
    scenarios = _load_scenarios(args)
    multiple = len(scenarios) > 1
    for scenario in scenarios:
        section = _stability_section(scenario, args)
        doc = {"scenario": scenario.echo(), "stability": section}
        json_path = args.out_json or scenario.json_path
        if json_path:
            _write_json(_member_path(json_path, scenario.name, multiple), doc)
        else:
            print(json.dumps(doc, indent=2, allow_nan=False))
    return EXIT_OK


def _sweep_row(scenario: Scenario, parameter: str, value: float) -> str:
    if parameter == "alpha":
        member = replace(scenario, alpha=value)
    else:
        member = replace(scenario, lam=value)
    result = run_scenario(member)
    if result.outcome == "diverged":
        return f"{value!r},diverged,,"
    e_r = float(result.trajectory.error_integral[-1])
    settle = repr(result.settle_time) if result.settle_time is not None else ""
    return f"{value!r},{result.outcome},{e_r!r},{settle}"


def cmd_sweep(args) -> int:
    scenarios = _load_scenarios(args)
    if len(scenarios) != 1:
        raise ConfigError("sweep needs a single scenario, not a preset family")
    scenario = scenarios[0]
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad sweep values {args.values!r}: {exc}") from exc
    if not values:
        raise ConfigError("sweep needs at least one value")
    if any(not math.isfinite(v) for v in values):
        raise ConfigError("sweep values must be finite")
    if args.parameter == "lambda" and any(v < 0 for v in values):
        raise ConfigError("lambda sweep values must be nonnegative")

    with concurrent.futures.ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        rows = list(
            pool.map(lambda v: _sweep_row(scenario, args.parameter, v), values)
        )
    lines = ["value,outcome,e_r,settle_time"] + rows
    if args.out_csv:
        _write_csv(args.out_csv, lines)
    else:
        for line in lines:
            print(line)
    return EXIT_OK


def _check(name, passed, detail):
    return {"name": name, "passed": bool(passed), "detail": detail}


def _reproduce_fig3(out_dir: Path):
    reports = {}
    members = PRESET_FAMILIES["fig3"]
    with concurrent.futures.ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        results = dict(
            zip(members, pool.map(lambda m: run_scenario(resolve_preset(m)[0]), members))
        )
    checks = []
    e_r = {}
    for member, result in results.items():
        scenario = result.scenario
        _write_csv(
            out_dir / f"{member}.csv",
            trajectory_csv_lines(result.trajectory, scenario.build_plant().dim),
        )
        report = build_report(result)
        _write_json(out_dir / f"{member}.json", report)
        reports[member] = report
        if result.outcome != "diverged":
            e_r[member] = float(result.trajectory.error_integral[-1])
            steady = float(result.trajectory.outputs[-1])
            checks.append(
                _check(
                    f"{member}-tracks-step",
                    result.outcome == "settled" and abs(steady - scenario.r) < 5e-3,
                    f"outcome={result.outcome}, y(T)={steady}",
                )
            )
        else:
            checks.append(_check(f"{member}-tracks-step", False, "diverged"))

    tol = 1.3e-3
    expected = {"fig3-a0": 0.125, "fig3-a1": 0.0, "fig3-a2": -0.125}
    for member, target in expected.items():
        got = e_r.get(member, math.nan)
        checks.append(
            _check(
                f"{member}-residual",
                math.isfinite(got) and abs(got - target) <= tol,
                f"e_r={got}, expected {target} +/- {tol}",
            )
        )
    checks.append(
        _check(
            "sign-pattern",
            e_r.get("fig3-a0", -1) > 0 and e_r.get("fig3-a2", 1) < 0,
            f"e_r(alpha=0)={e_r.get('fig3-a0')}, e_r(alpha=2)={e_r.get('fig3-a2')}",
        )
    )
    return checks, reports


def _reproduce_fig4(out_dir: Path):
    reports = {}
    members = PRESET_FAMILIES["fig4"]
    with concurrent.futures.ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        results = dict(
            zip(members, pool.map(lambda m: run_scenario(resolve_preset(m)[0]), members))
        )
    checks = []
    for member, result in results.items():
        scenario = result.scenario
        _write_csv(
            out_dir / f"{member}.csv",
            trajectory_csv_lines(result.trajectory, scenario.build_plant().dim),
        )
        report = build_report(result)
        _write_json(out_dir / f"{member}.json", report)
        reports[member] = report

    for member in ("fig4-open", "fig4-stable"):
        result = results[member]
        steady = float(result.trajectory.outputs[-1])
        checks.append(
            _check(
                f"{member}-settles-to-5",
                result.outcome == "settled" and abs(steady - 5.0) < 5e-3,
                f"outcome={result.outcome}, y(T)={steady}",
            )
        )
    open_er = float(results["fig4-open"].trajectory.error_integral[-1])
    checks.append(
        _check(
            "open-loop-residual-nonzero",
            abs(open_er) > 0.1,
            f"open-loop e_r={open_er}",
        )
    )
    stable_er = float(results["fig4-stable"].trajectory.error_integral[-1])
    checks.append(
        _check(
            "lam0.2-residual-zero",
            abs(stable_er) < 5e-3,
            f"e_r={stable_er} for lambda=0.2",
        )
    )
    unstable = results["fig4-unstable"]
    t_div = unstable.trajectory.divergence_time
    checks.append(
        _check(
            "lam2-diverges-before-200s",
            unstable.outcome == "diverged" and t_div is not None and t_div < 200.0,
            f"outcome={unstable.outcome}, divergence_time={t_div}",
        )
    )

    msd = resolve_preset("fig4-stable")[0]
    constants = stability.msd_constants(
        msd.plant_params["omega_n"],
        msd.plant_params["zeta"],
        msd.plant_params["beta_sq"],
    )
    sufficient = stability.lambda_bound_higher_order(constants, 0.0)
    linearized = stability.msd_linearized_lambda_max(
        msd.plant_params["omega_n"], msd.plant_params["zeta"]
    )
    reports["bounds"] = {
        "stability": {
            "sufficient": {"method": "section4", "lambda_max": sufficient},
            "linearized": {"method": "routh-hurwitz", "lambda_max": linearized},
        }
    }
    _write_json(out_dir / "fig4-bounds.json", reports["bounds"])
    checks.append(
        _check(
            "sufficient-bound-value",
            0.0017 <= sufficient <= 0.00175,
            f"4 c3 / (1 + c4)^2 = {sufficient}",
        )
    )
    checks.append(
        _check(
            "linearized-bound-value",
            linearized == 1.4,
            f"2 zeta omega_n = {linearized}",
        )
    )
    return checks, reports


def cmd_reproduce(args) -> int:
    if args.experiment not in ("fig3", "fig4"):
        raise ConfigError(f"unknown experiment {args.experiment!r}; use fig3 or fig4")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.experiment == "fig3":
        checks, _ = _reproduce_fig3(out_dir)
    else:
        checks, _ = _reproduce_fig4(out_dir)
    all_passed = all(c["passed"] for c in checks)
    summary = {
        "experiment": args.experiment,
        "checks": checks,
        "all_passed": all_passed,
    }
    _write_json(out_dir / f"{args.experiment}-summary.json", summary)
    for check in checks:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: {check['detail']}")
    if not all_passed:
        failing = next(c["name"] for c in checks if not c["passed"])
        print(f"reproduction check failed: {failing}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transhape",
        description="Shape and analyze transient step responses of nonlinear "
        "SISO systems under integral + feedforward compensation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(p):
        p.add_argument("--config", help="INI scenario file")
        p.add_argument("--preset", help="embedded scenario or family name")

    p_sim = sub.add_parser("simulate", help="run one scenario end to end")
    add_scenario_args(p_sim)
    p_sim.add_argument("--out-csv", help="trajectory CSV path")
    p_sim.add_argument("--out-json", help="report JSON path (default: stdout)")
    p_sim.set_defaults(func=cmd_simulate)

    p_areas = sub.add_parser("areas", help="area decomposition of one run")
    add_scenario_args(p_areas)
    p_areas.add_argument("--out-json", help="report JSON path (default: stdout)")
    p_areas.set_defaults(func=cmd_areas)

    p_bounds = sub.add_parser("bounds", help="integral-gain stability bounds")
    add_scenario_args(p_bounds)
    p_bounds.add_argument("--out-json", help="report JSON path (default: stdout)")
    p_bounds.add_argument(
        "--empirical",
        action="store_true",
        help="bisect the empirical stability boundary as well",
    )
    p_bounds.add_argument(
        "--deta-norm",
        type=float,
        default=0.0,
        help="max norm of d eta_u/du for the higher-order bound (default 0)",
    )
    p_bounds.add_argument(
        "--lambda-range",
        type=_parse_range,
        default=(0.2, 2.0),
        help="bisection range LO:HI (default 0.2:2)",
    )
    p_bounds.add_argument(
        "--bisection-tol", type=float, default=0.05, help="bracket width target"
    )
    p_bounds.set_defaults(func=cmd_bounds)

    p_sweep = sub.add_parser("sweep", help="sweep alpha or lambda over values")
    add_scenario_args(p_sweep)
    p_sweep.add_argument(
        "--parameter", choices=("alpha", "lambda"), required=True
    )
    p_sweep.add_argument(
        "--values", required=True, help="comma-separated parameter values"
    )
    p_sweep.add_argument("--out-csv", help="table path (default: stdout)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_rep = sub.add_parser("reproduce", help="rerun a reference experiment")
    p_rep.add_argument("experiment", help="fig3 or fig4")
    p_rep.add_argument("--out-dir", default=".", help="bundle output directory")
    p_rep.set_defaults(func=cmd_reproduce)
    return parser


def _parse_range(raw: str):
    parts = raw.replace(",", ":").split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {raw!r}")
    return (float(parts[0]), float(parts[1]))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TranshapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
