"""Stability bounds on the integral gain.

Sufficient bounds come from converse-Lyapunov constants (4*c3/(1+c4)^2 for
first-order plants, the internal-dynamics-aware variant for higher order),
a class-K certificate gives the asymptotic-stability gain range, the
Routh-Hurwitz test gives the exact linearized boundary, and bisection over
closed-loop simulations locates the boundary empirically.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .compensator import CompensatorConfig, StepSignal, close_loop, open_loop, simulate
from .integrator import SolverConfig
from .metrics import settling_detector
from .plants import PlantModel

# Probe classification: a growing error envelope counts as unstable, so the
# divergence threshold can sit far below the default 1e6 without changing
# verdicts; this keeps probes out of the stiff large-amplitude regime.
PROBE_DIVERGENCE_THRESHOLD = 1e3
GROWTH_RATIO = 2.0


@dataclass(frozen=True)
class LyapunovConstants:
    """Quadratic converse-Lyapunov bounds c1|e|^2 <= V <= c2|e|^2 etc."""

    c1: float
    c2: float
    c3: float
    c4: float

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3, self.c4) <= 0:
            raise ValueError("all constants must be positive")
        if self.c1 > self.c2:
            raise ValueError("c1 must not exceed c2")


@dataclass(frozen=True)
class ClassKPair:
    """Class-K comparison functions alpha3, alpha4 with a sampling grid."""

    alpha3: Callable[[float], float]
    alpha4: Callable[[float], float]
    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.size == 0 or np.any(grid <= 0):
            raise ValueError("grid must be nonempty with positive points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        for name, fn in (("alpha3", self.alpha3), ("alpha4", self.alpha4)):
            if abs(float(fn(0.0))) > 1e-12:
                raise ValueError(f"{name}(0) must be 0")
            vals = np.array([float(fn(s)) for s in grid])
            if np.any(np.diff(vals) <= 0):
                raise ValueError(f"{name} is not strictly increasing on the grid")


@dataclass(frozen=True)
class SigmaBound:
    """Grid infimum of the class-K gain ratio; a numerical certificate only."""

    sigma: float
    argmin: float
    hypothesis_ok: bool

    @property
    def certified_range(self) -> Optional[Tuple[float, float]]:
        if self.hypothesis_ok and self.sigma > 0:
            return (0.0, self.sigma)
        return None


@dataclass(frozen=True)
class BoundaryBracket:
    """Bisection outcome: the loop settled at stable_max, not at unstable_min."""

    stable_max: float
    unstable_min: float
    probes: Tuple[Tuple[float, str], ...]
    inconclusive: bool = False

    @property
    def width(self) -> float:
        return self.unstable_min - self.stable_max


@dataclass(frozen=True)
class StabilityReport:
    """Bounds for one plant, with method provenance per entry."""

    lambda_sufficient: float
    sufficient_method: str  # "theorem1" or "section4"
    constants: Optional[LyapunovConstants] = None
    lambda_linearized: Optional[float] = None  # "routh-hurwitz"
    lambda_empirical: Optional[BoundaryBracket] = None  # "bisection"
    sigma: Optional[SigmaBound] = None  # "theorem2-grid"


def lambda_bound_exponential(c: LyapunovConstants) -> float:
    """Sufficient gain bound 4*c3/(1 + c4)^2 for exponentially stable plants."""
    return 4.0 * c.c3 / (1.0 + c.c4) ** 2


def lambda_bound_higher_order(c: LyapunovConstants, deta_du_norm_max: float) -> float:
    """Higher-order bound 4*c3/[1 + c4*(1 + ||d eta_u/du||_max)]^2.

    deta_du_norm_max = 0 (no internal dynamics) reduces to the first-order
    bound exactly.
    """
    if deta_du_norm_max < 0:
        raise ValueError("deta_du_norm_max must be nonnegative")
    return 4.0 * c.c3 / (1.0 + c.c4 * (1.0 + deta_du_norm_max)) ** 2


def default_sigma_grid() -> np.ndarray:
    return np.logspace(-4, 4, 200)


def sigma_bound(pair: ClassKPair) -> SigmaBound:
    """Grid infimum of alpha3(s) / (0.25*(alpha4(s)+s)^2 + alpha4(s)*s).

    A positive infimum attained in the grid interior certifies (numerically)
    the asymptotic-stability hypothesis and yields the gain range (0, sigma).
    A nonpositive numerator anywhere, or an infimum attained at the upper
    grid edge (the ratio is still heading down), yields a hypothesis-violated
    verdict.
    """
    s = pair.grid
    a3 = np.array([float(pair.alpha3(v)) for v in s])
    a4 = np.array([float(pair.alpha4(v)) for v in s])
    bad = np.flatnonzero(a3 <= 0)
    if bad.size:
        return SigmaBound(sigma=0.0, argmin=float(s[bad[0]]), hypothesis_ok=False)
    ratio = a3 / (0.25 * (a4 + s) ** 2 + a4 * s)
    i = int(np.argmin(ratio))
    at_edge = i == s.size - 1 and ratio[i] < ratio[i - 1] * (1 - 1e-12)
    return SigmaBound(
        sigma=float(ratio[i]),
        argmin=float(s[i]),
        hypothesis_ok=not at_edge,
    )


def msd_constants(omega_n: float, zeta: float, beta_sq: float) -> LyapunovConstants:
    """Converse-Lyapunov constants for the saturating mass-spring-damper."""
    if not omega_n > 0:
        raise ValueError("omega_n must be positive")
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    if not beta_sq > 0:
        raise ValueError("beta_sq must be positive")
    wn2 = omega_n * omega_n
    c1 = 0.5 * ((1 + wn2) - math.sqrt((1 + wn2) ** 2 - 4 * wn2 * (1 - zeta**2)))
    c2 = 0.5 * (1 + wn2 * (1 + beta_sq))
    c3 = zeta * omega_n * c1
    c4 = math.sqrt(1 + zeta**2 * wn2 + wn2**2 * (1 + beta_sq) ** 2)
    return LyapunovConstants(c1=c1, c2=c2, c3=c3, c4=c4)


def affine_constants(b: float) -> LyapunovConstants:
    """Constants from V = e^2/2 for dx/dt = -g(x)(x-u) with g >= b > 0."""
    if not b > 0:
        raise ValueError("b must be positive")
    return LyapunovConstants(c1=0.5, c2=0.5, c3=b, c4=1.0)


def routh_hurwitz_cubic(a2: float, a1: float, a0: float) -> bool:
    """Stability of s^3 + a2 s^2 + a1 s + a0 (marginal cases count as unstable)."""
    return a2 > 0 and a1 > 0 and a0 > 0 and a2 * a1 > a0


def msd_linearized_lambda_max(omega_n: float, zeta: float) -> float:
    """Exact local boundary 2*zeta*omega_n of the linearized mass-spring loop."""
    if not omega_n > 0:
        raise ValueError("omega_n must be positive")
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    return 2.0 * zeta * omega_n


def _envelope_growing(traj, step, band: float, ratio: float) -> bool:
    """True when the |e| envelope late in the run dwarfs the mid-run one."""
    e = np.abs(traj.errors)
    n = e.size
    if n < 20:
        return False
    ref = e[int(0.25 * n) : max(int(0.35 * n), int(0.25 * n) + 1)].max()
    tail = e[int(0.9 * n) :].max()
    m = max(abs(step.amplitude), 1.0)
    return tail > ratio * max(ref, 1e-300) and tail > 10.0 * band * m


def classify_gain(
    plant: PlantModel,
    alpha: float,
    step: StepSignal,
    solver: SolverConfig,
    lam: float,
    band: float = 1e-3,
    window: Optional[float] = None,
    probe_horizon: Optional[float] = None,
) -> str:
    """Classify one integral gain as 'stable', 'unstable' or 'inconclusive'.

    Settled runs are stable; diverged runs, or runs whose error envelope
    keeps growing, are unstable. Anything else is retried once on a 4x
    horizon before giving up.
    """
    base = probe_horizon if probe_horizon is not None else _default_probe_horizon(
        plant, step, solver
    )
    for horizon in (base, 4.0 * base):
        cfg = replace(
            solver,
            horizon=horizon,
            divergence_threshold=min(
                solver.divergence_threshold, PROBE_DIVERGENCE_THRESHOLD
            ),
        )
        traj = simulate(close_loop(plant, CompensatorConfig(alpha, lam), step), cfg)
        if traj.diverged:
            return "unstable"
        settled, _ = settling_detector(traj, step, band=band, window=window)
        if settled:
            return "stable"
        if _envelope_growing(traj, step, band, GROWTH_RATIO):
            return "unstable"
    return "inconclusive"


def _default_probe_horizon(plant, step, solver) -> float:
    """50x the open-loop settling time, measured over the solver horizon."""
    traj = simulate(open_loop(plant, step, step.amplitude), solver)
    settled, t_settle = settling_detector(traj, step)
    base = t_settle if settled and t_settle and t_settle > 0 else solver.horizon
    return 50.0 * max(base, 10.0 * solver.reporting_dt)


def empirical_lambda_boundary(
    plant: PlantModel,
    alpha: float,
    step: StepSignal,
    solver: SolverConfig,
    lambda_range: Tuple[float, float],
    bisection_tol: float,
    band: float = 1e-3,
    window: Optional[float] = None,
    probe_horizon: Optional[float] = None,
) -> BoundaryBracket:
    """Bisect the stability boundary of the integral gain.

    The range endpoints must classify stable (low) and unstable (high); an
    inconclusive probe stops the refinement and returns the current, wider
    bracket flagged as inconclusive.
    """
    lo, hi = lambda_range
    if not 0 <= lo < hi:
        raise ValueError("lambda_range must satisfy 0 <= lo < hi")
    if not bisection_tol > 0:
        raise ValueError("bisection_tol must be positive")
    if probe_horizon is None:
        probe_horizon = _default_probe_horizon(plant, step, solver)

    def probe(lam):
        return classify_gain(
            plant, alpha, step, solver, lam,
            band=band, window=window, probe_horizon=probe_horizon,
        )

    probes = []
    verdict_lo = probe(lo)
    probes.append((lo, verdict_lo))
    if verdict_lo != "stable":
        raise ValueError(
            f"lower endpoint lambda = {lo} classified {verdict_lo}, not stable"
        )
    verdict_hi = probe(hi)
    probes.append((hi, verdict_hi))
    if verdict_hi != "unstable":
        raise ValueError(
            f"upper endpoint lambda = {hi} classified {verdict_hi}, not unstable"
        )

    inconclusive = False
    while hi - lo > bisection_tol:
        mid = 0.5 * (lo + hi)
        verdict = probe(mid)
        probes.append((mid, verdict))
        if verdict == "stable":
            lo = mid
        elif verdict == "unstable":
            hi = mid
        else:
            inconclusive = True
            break
    return BoundaryBracket(
        stable_max=lo,
        unstable_min=hi,
        probes=tuple(probes),
        inconclusive=inconclusive,
    )
