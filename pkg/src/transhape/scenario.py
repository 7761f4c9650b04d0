"""Scenario definitions: config parsing, embedded presets, report assembly.

A scenario is one closed-loop run: plant, compensator gains, step signal,
solver settings, metric options and output paths. Scenarios load from INI
files (one section per block) or from the embedded, read-only presets that
reproduce the two reference experiments.
"""

import configparser
import math
from dataclasses import asdict, dataclass, replace
from typing import Dict, Optional, Tuple

from . import _backend, plants
from .compensator import CompensatorConfig, StepSignal, close_loop, simulate
from .integrator import SolverConfig, Trajectory
from .metrics import area_decomposition, settling_detector, soc_trace
from .plants import PlantModel, SaturatedStiffness


class ConfigError(ValueError):
    """Scenario file or preset problem; carries a section/field diagnostic."""


@dataclass(frozen=True)
class Scenario:
    name: str
    plant_name: str
    plant_params: Dict[str, float]
    alpha: float
    lam: float
    r: float
    t_s: float = 0.0
    method: str = "rk45"
    step_size: float = 0.05
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    horizon: float = 60.0
    divergence_threshold: float = 1e6
    max_steps: int = 10_000_000
    band: float = 1e-3
    window: Optional[float] = None
    capacity: Optional[float] = None
    soc_initial: Optional[float] = None
    csv_path: Optional[str] = None
    json_path: Optional[str] = None

    def build_plant(self) -> PlantModel:
        return build_plant(self.plant_name, self.plant_params)

    def build_solver(self) -> SolverConfig:
        return SolverConfig(
            horizon=self.horizon,
            method=self.method,
            step_size=self.step_size,
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            divergence_threshold=self.divergence_threshold,
            max_steps=self.max_steps,
        )

    def build_step(self) -> StepSignal:
        return StepSignal(amplitude=self.r, onset=self.t_s)

    def build_compensator(self) -> CompensatorConfig:
        return CompensatorConfig(alpha=self.alpha, lam=self.lam)

    def echo(self) -> dict:
        """Everything needed to re-run this scenario."""
        doc = asdict(self)
        doc["plant_params"] = dict(self.plant_params)
        return doc


_PLANT_PARAMS = {
    "cubic": ("gain",),
    "linear": ("tau",),
    "msd": ("omega_n", "zeta", "beta_sq"),
    "affine": ("b",),
}


def build_plant(name: str, params: Dict[str, float]) -> PlantModel:
    """Instantiate a catalog plant from its config name and parameter table.

    The affine entry uses a constant gain g(x) = b: arbitrary gain functions
    are a library-API feature, not expressible in a text config.
    """
    if name not in _PLANT_PARAMS:
        raise ConfigError(
            f"unknown plant {name!r}; choose from {sorted(_PLANT_PARAMS)}"
        )
    required = _PLANT_PARAMS[name]
    missing = [p for p in required if p not in params]
    if missing:
        raise ConfigError(f"plant {name!r} is missing parameters {missing}")
    if name == "cubic":
        return plants.cubic_first_order(params["gain"])
    if name == "linear":
        return plants.linear_first_order(params["tau"])
    if name == "msd":
        stiff = SaturatedStiffness(
            beta=math.sqrt(params["beta_sq"]),
            symmetric=bool(params.get("symmetric", 0.0)),
        )
        return plants.mass_spring_damper(params["omega_n"], params["zeta"], stiff)
    b = params["b"]
    return plants.affine_first_order(lambda x: b, b, b)


def load_scenario(path: str) -> Scenario:
    """Parse one INI scenario file."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read scenario file {path!r}")

    def need(section, option, conv=float):
        if not parser.has_option(section, option):
            raise ConfigError(f"[{section}] is missing {option!r} in {path}")
        raw = parser.get(section, option)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {option} = {raw!r}: {exc}") from exc

    def opt(section, option, default, conv=float):
        if not parser.has_option(section, option):
            return default
        return need(section, option, conv)

    if not parser.has_section("plant"):
        raise ConfigError(f"{path} has no [plant] section")
    plant_name = need("plant", "name", str)
    plant_params = {
        key: float(val)
        for key, val in parser.items("plant")
        if key != "name"
    }
    return Scenario(
        name=opt("plant", "label", path, str),
        plant_name=plant_name,
        plant_params=plant_params,
        alpha=need("compensator", "alpha"),
        lam=need("compensator", "lambda"),
        r=need("step", "r"),
        t_s=opt("step", "t_s", 0.0),
        method=opt("solver", "method", "rk45", str),
        step_size=opt("solver", "step_size", 0.05),
        abs_tol=opt("solver", "abs_tol", 1e-10),
        rel_tol=opt("solver", "rel_tol", 1e-10),
        horizon=opt("solver", "horizon", 60.0),
        divergence_threshold=opt("solver", "divergence_threshold", 1e6),
        max_steps=opt("solver", "max_steps", 10_000_000, int),
        band=opt("metrics", "band", 1e-3),
        window=opt("metrics", "window", None),
        capacity=opt("metrics", "capacity", None),
        soc_initial=opt("metrics", "soc_initial", None),
        csv_path=opt("outputs", "csv", None, str),
        json_path=opt("outputs", "json", None, str),
    )


_MSD_PARAMS = {"omega_n": 1.0, "zeta": 0.7, "beta_sq": 20.0}

PRESETS: Dict[str, Scenario] = {
    "fig3-a0": Scenario(
        name="fig3-a0",
        plant_name="cubic",
        plant_params={"gain": 20.0},
        alpha=0.0,
        lam=8.0,
        r=1.0,
        horizon=3000.0,
        step_size=0.05,
    ),
    "fig4-open": Scenario(
        name="fig4-open",
        plant_name="msd",
        plant_params=dict(_MSD_PARAMS),
        alpha=1.0,
        lam=0.0,
        r=5.0,
        horizon=80.0,
        step_size=0.02,
    ),
    "fig4-stable": Scenario(
        name="fig4-stable",
        plant_name="msd",
        plant_params=dict(_MSD_PARAMS),
        alpha=1.0,
        lam=0.2,
        r=5.0,
        horizon=80.0,
        step_size=0.02,
    ),
    "fig4-unstable": Scenario(
        name="fig4-unstable",
        plant_name="msd",
        plant_params=dict(_MSD_PARAMS),
        alpha=1.0,
        lam=2.0,
        r=5.0,
        horizon=200.0,
        step_size=0.02,
    ),
    "affine-b1": Scenario(
        name="affine-b1",
        plant_name="affine",
        plant_params={"b": 1.0},
        alpha=1.0,
        lam=0.25,
        r=1.0,
        horizon=80.0,
        step_size=0.02,
    ),
}
PRESETS["fig3-a1"] = replace(PRESETS["fig3-a0"], name="fig3-a1", alpha=1.0)
PRESETS["fig3-a2"] = replace(PRESETS["fig3-a0"], name="fig3-a2", alpha=2.0)

PRESET_FAMILIES: Dict[str, Tuple[str, ...]] = {
    "fig3": ("fig3-a0", "fig3-a1", "fig3-a2"),
    "fig4": ("fig4-open", "fig4-stable", "fig4-unstable"),
}


def resolve_preset(name: str) -> Tuple[Scenario, ...]:
    """A preset name maps to one scenario or a named family of them."""
    if name in PRESETS:
        return (PRESETS[name],)
    if name in PRESET_FAMILIES:
        return tuple(PRESETS[m] for m in PRESET_FAMILIES[name])
    raise ConfigError(
        f"unknown preset {name!r}; choose from "
        f"{sorted(PRESETS) + sorted(PRESET_FAMILIES)}"
    )


@dataclass
class RunResult:
    scenario: Scenario
    trajectory: Trajectory
    outcome: str  # "settled" | "diverged" | "inconclusive"
    settle_time: Optional[float]


def run_scenario(scenario: Scenario) -> RunResult:
    plant = scenario.build_plant()
    system = close_loop(plant, scenario.build_compensator(), scenario.build_step())
    traj = simulate(system, scenario.build_solver())
    if traj.diverged:
        return RunResult(scenario, traj, "diverged", None)
    settled, settle_time = settling_detector(
        traj, scenario.build_step(), band=scenario.band, window=scenario.window
    )
    return RunResult(
        scenario, traj, "settled" if settled else "inconclusive", settle_time
    )


OUTCOME_EXIT_CODES = {"settled": 0, "diverged": 2, "inconclusive": 3}


def build_report(result: RunResult, include_lemma1: bool = True) -> dict:
    """Assemble the JSON report document for one run.

    Sections are present or absent, never null-filled; diverged runs skip
    the sections that are undefined for them and mark the outcome instead.
    """
    scenario = result.scenario
    traj = result.trajectory
    doc = {"scenario": scenario.echo()}

    if not traj.diverged:
        areas = area_decomposition(
            traj,
            scenario.build_step(),
            band=scenario.band,
            window=scenario.window,
        )
        areas_doc = {
            "A_a": areas.A_a,
            "A_b": areas.A_b,
            "A_c": areas.A_c,
            "e_r": areas.e_r,
            "horizon_used": areas.horizon_used,
            "settled": areas.settled,
            "steady_output": areas.steady_output,
        }
        if areas.settle_time is not None:
            areas_doc["settle_time"] = areas.settle_time
        if scenario.capacity is not None:
            trace = soc_trace(
                traj,
                scenario.build_step(),
                capacity=scenario.capacity,
                soc_initial=(
                    scenario.soc_initial if scenario.soc_initial is not None else 0.5
                ),
            )
            areas_doc["soc_final"] = float(trace.soc[-1])
            areas_doc["soc_min"] = float(trace.soc.min())
            areas_doc["soc_max"] = float(trace.soc.max())
        doc["areas"] = areas_doc

        if include_lemma1 and scenario.lam > 0:
            plant = scenario.build_plant()
            predicted = scenario.r * (plant.k - scenario.alpha) / scenario.lam
            simulated = float(traj.error_integral[-1])
            doc["lemma1"] = {
                "e_r_predicted": predicted,
                "e_r_simulated": simulated,
                "abs_gap": abs(simulated - predicted),
                "settled": result.outcome == "settled",
            }

    diagnostics = {
        "outcome": result.outcome,
        "steps_taken": traj.steps_taken,
        "rejected_steps": traj.rejected_steps,
        "samples": len(traj),
        "backend": _backend.BACKEND,
    }
    if traj.diverged and traj.divergence_time is not None:
        diagnostics["divergence_time"] = traj.divergence_time
    doc["diagnostics"] = diagnostics
    return doc


def trajectory_csv_lines(traj: Trajectory, plant_dim: int):
    """CSV rows t,x_1..x_n,u,y,e,int_e with shortest round-trip floats."""
    header = (
        ["t"]
        + [f"x_{i + 1}" for i in range(plant_dim)]
        + ["u", "y", "e", "int_e"]
    )
    yield ",".join(header)
    for i in range(len(traj)):
        row = [traj.times[i]]
        row.extend(traj.states[i, :plant_dim])
        row.append(traj.controls[i])
        row.append(traj.outputs[i])
        row.append(traj.errors[i])
        row.append(traj.error_integral[i])
        yield ",".join(repr(float(v)) for v in row)
