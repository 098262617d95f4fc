"""Mean-field interacting-agents size dynamics.

Each agent's size grows multiplicatively with a lognormal shock and
interacts with the population only through the mean size: a redistribution
term ``coupling_in * mean`` feeds every agent, a competition term
``coupling_out * mean * size`` drains proportionally to own size:

    w_i  <-  exp(drift + noise_std * Z_i) * w_i
             + coupling_in * wbar - coupling_out * wbar * w_i

Updates are synchronous: the mean is taken from the pre-update snapshot,
so the result does not depend on agent evaluation order. Sizes are clamped
at a positive floor instead of killing agents, which keeps the population
fixed and the fitted tail exponents comparable across a sweep.

With both couplings at zero every agent is an independent discrete-time
GBM and the size distribution stays lognormal; with positive couplings the
stationary distribution grows a power-law upper tail whose exponent falls
as the shock scale rises. ``run_hia`` measures that shock scale
operationally (the spread of realized one-step log growth rates) and fits
competing tail models to the final sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from .fitting import (
    MODEL_DOUBLE_PARETO,
    MODEL_PARETO_TAIL,
    FitReport,
    SampleSet,
    compare_models,
)
from .rng import RngStream, normals_from_uniforms


@dataclass(frozen=True)
class HiaParams:
    n_agents: int
    noise_std: float
    drift: float = 0.0
    coupling_in: float = 0.0
    coupling_out: float = 0.0
    steps: int = 1
    floor: float = 1e-9

    def __post_init__(self):
        if int(self.n_agents) < 2:
            raise ValueError("n_agents must be >= 2")
        object.__setattr__(self, "n_agents", int(self.n_agents))
        if not math.isfinite(self.noise_std) or self.noise_std < 0:
            raise ValueError("noise_std must be finite and non-negative")
        if not math.isfinite(self.drift):
            raise ValueError("drift must be finite")
        if not math.isfinite(self.coupling_in) or self.coupling_in < 0:
            raise ValueError("coupling_in must be finite and non-negative")
        if not math.isfinite(self.coupling_out) or self.coupling_out < 0:
            raise ValueError("coupling_out must be finite and non-negative")
        if int(self.steps) < 1:
            raise ValueError("steps must be >= 1")
        object.__setattr__(self, "steps", int(self.steps))
        if not (0 < self.floor < 1):
            raise ValueError("floor must satisfy 0 < floor < 1 (below the typical initial size)")


@dataclass(frozen=True)
class Population:
    sizes: np.ndarray
    step: int = 0

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=float)
        if sizes.ndim != 1 or sizes.size == 0:
            raise ValueError("sizes must be a non-empty 1-d array")
        if np.any(~np.isfinite(sizes)) or np.any(sizes <= 0):
            raise ValueError("sizes must be finite and strictly positive")
        object.__setattr__(self, "sizes", sizes)
        if self.step < 0:
            raise ValueError("step must be non-negative")


def _agent_normals(rng: RngStream, n: int) -> np.ndarray:
    """Next shock for each of n agents, one per memoized per-agent substream.

    Agent i always draws from substream i of the master stream, so
    exchanging two agents exchanges their whole shock histories and the
    update commutes with relabeling.
    """
    u = np.empty(n)
    for i in range(n):
        u[i] = rng.substream(i).uniform()
    return normals_from_uniforms(u)


def _stable_mean(sizes: np.ndarray) -> float:
    # summed in sorted order so the mean is invariant under agent permutation
    return float(np.sum(np.sort(sizes)) / sizes.size)


def init_population(params: HiaParams, rng: RngStream) -> Population:
    """Lognormal initial sizes (log-mean 0, log-std noise_std), clamped at the floor."""
    z = _agent_normals(rng, params.n_agents)
    sizes = np.exp(params.noise_std * z)
    np.maximum(sizes, params.floor, out=sizes)
    return Population(sizes=sizes, step=0)


def _update_sizes(sizes: np.ndarray, growth: np.ndarray, params: HiaParams) -> np.ndarray:
    """Synchronous update core: equivariant under joint permutation of
    sizes and growth factors (the mean is order-independent by sorted
    summation), which is what makes agents exchangeable."""
    wbar = _stable_mean(sizes)
    new_sizes = growth * sizes + params.coupling_in * wbar - params.coupling_out * wbar * sizes
    np.maximum(new_sizes, params.floor, out=new_sizes)
    return new_sizes


def step_population(pop: Population, params: HiaParams, rng: RngStream) -> Population:
    """One synchronous update of every agent; mean taken before the update."""
    sizes = pop.sizes
    if sizes.size != params.n_agents:
        raise ValueError("population size does not match params.n_agents")
    z = _agent_normals(rng, params.n_agents)
    growth = np.exp(params.drift + params.noise_std * z)
    return Population(sizes=_update_sizes(sizes, growth, params), step=pop.step + 1)


def run_hia(params: HiaParams, seed: int) -> tuple[Population, float, FitReport]:
    """Full simulation: returns (final population, effective_alpha, FitReport).

    ``effective_alpha`` is the realized internal shock scale: the standard
    deviation of per-agent one-step log growth rates over the final 10% of
    steps. The FitReport compares tail models on the final sizes, so the
    population must have at least 10 agents.
    """
    if params.n_agents < 10:
        raise ValueError("run_hia needs n_agents >= 10 for the model comparison")
    rng = RngStream(seed, 0)
    pop = init_population(params, rng)
    window_start = params.steps - max(1, params.steps // 10)
    log_growth: list[np.ndarray] = []
    for k in range(params.steps):
        prev = pop.sizes
        pop = step_population(pop, params, rng)
        if k >= window_start:
            log_growth.append(np.log(pop.sizes / prev))
    rates = np.concatenate(log_growth)
    effective_alpha = float(np.std(rates))
    report = compare_models(
        SampleSet(pop.sizes, source=f"hia(seed={seed}, noise_std={params.noise_std})")
    )
    return pop, effective_alpha, report


@dataclass(frozen=True)
class SweepPoint:
    noise_std: float
    coupling: float
    effective_alpha: float
    m1_hat: float
    preferred_model: str


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    spearman_rho: float
    varied: str


def _fitted_m1(report: FitReport) -> float:
    """Tail exponent used in sweep summaries: double-Pareto m1, else Hill."""
    for fit in report.fits:
        if fit.model == MODEL_DOUBLE_PARETO:
            return fit.parameters["m1"]
    for fit in report.fits:
        if fit.model == MODEL_PARETO_TAIL:
            return fit.parameters["exponent"]
    return math.nan


def run_sweep(
    base: HiaParams,
    vary: str,
    values,
    n_seeds: int,
    master_seed: int,
) -> SweepResult:
    """Sweep one parameter, averaging each point over ``n_seeds`` replicate runs.

    Returns per-point means of effective_alpha and fitted m1 plus the
    Spearman rank correlation between the varied values and mean m1. Run
    seeds are ``master_seed + 100000 * point_index + replicate``.
    """
    if vary not in ("noise_std", "coupling_in", "coupling_out"):
        raise ValueError(f"cannot vary {vary!r}")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ValueError("sweep needs at least 2 points")
    n_seeds = int(n_seeds)
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")

    points = []
    for pi, v in enumerate(values):
        fields = {
            "n_agents": base.n_agents,
            "noise_std": base.noise_std,
            "drift": base.drift,
            "coupling_in": base.coupling_in,
            "coupling_out": base.coupling_out,
            "steps": base.steps,
            "floor": base.floor,
        }
        fields[vary] = v
        params = HiaParams(**fields)
        alphas, m1s, prefs = [], [], []
        for rep in range(n_seeds):
            _, eff_alpha, report = run_hia(params, master_seed + 100000 * pi + rep)
            alphas.append(eff_alpha)
            m1s.append(_fitted_m1(report))
            if report.preferred is not None:
                prefs.append(report.preferred)
        preferred = _modal(prefs)
        points.append(
            SweepPoint(
                noise_std=params.noise_std,
                coupling=params.coupling_in,
                effective_alpha=float(np.mean(alphas)),
                m1_hat=float(np.nanmean(m1s)),
                preferred_model=preferred,
            )
        )
    varied_values = np.array(values)
    m1_means = np.array([p.m1_hat for p in points])
    rho = float(spearmanr(varied_values, m1_means).statistic)
    return SweepResult(points=tuple(points), spearman_rho=rho, varied=vary)


def _modal(labels: list[str]) -> str:
    if not labels:
        return "none"
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    best = max(counts.values())
    for lab in sorted(counts):
        if counts[lab] == best:
            return lab
    return "none"  # pragma: no cover


SWEEP_CSV_HEADER = "noise_std,coupling,effective_alpha,m1_hat,preferred_model,spearman_rho"


def sweep_csv_text(result: SweepResult) -> str:
    lines = [SWEEP_CSV_HEADER]
    for p in result.points:
        lines.append(
            "%.17g,%.17g,%.17g,%.17g,%s,%.17g"
            % (p.noise_std, p.coupling, p.effective_alpha, p.m1_hat,
               p.preferred_model, result.spearman_rho)
        )
    return "\n".join(lines) + "\n"
