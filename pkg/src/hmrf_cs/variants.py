"""The five cuckoo-search variants and the run driver.

``scs``, ``ics``, ``nmcs`` and ``aacs`` share one generation loop and differ in
how they set ``alpha`` and ``pa`` and in how abandoned nests are rebuilt.
``mcs`` splits the nests into a top group and an abandoned group each
generation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    CommonConfig,
    Nests,
    Objective,
    Population,
    _as_fitness,
    _cuckoo_positions,
    elitist_select,
    generate_cuckoos,
    greedy_update,
    init_population,
    make_rng,
    rebuild_abandoned,
)
from .energy import EnergyParams, HMRFEnergy
from .image_model import GrayImage, LabelField, classify_nearest_mean

__all__ = [
    "VARIANTS",
    "MIN_NESTS",
    "GOLDEN_RATIO",
    "VariantConfig",
    "Preset",
    "PRESETS",
    "preset_config",
    "NmcsState",
    "AacsState",
    "RunResult",
    "ics_pa",
    "ics_alpha",
    "nmcs_factors",
    "nmcs_pa",
    "nmcs_alpha",
    "aacs_init_state",
    "aacs_rebuild",
    "aacs_pa_setting",
    "mcs_iteration",
    "optimize",
    "run",
]

VARIANTS = ("scs", "ics", "aacs", "mcs", "nmcs")
MIN_NESTS = {"scs": 2, "ics": 2, "nmcs": 2, "aacs": 5, "mcs": 4}
GOLDEN_RATIO = (1 + math.sqrt(5)) / 2

NMCS_PA_MIN, NMCS_PA_MAX = 0.1, 0.85
AACS_PA_LOW, AACS_PA_HIGH = 0.1, 0.85
AACS_PHI_MEAN, AACS_PHI_STD = 0.5, 0.1


@dataclass
class VariantConfig:
    """Variant name, shared parameters and the variant-specific extras."""

    variant: str = "scs"
    common: CommonConfig = field(default_factory=CommonConfig)
    ics_pa_max: float = 0.5
    ics_pa_min: float = 0.005
    ics_alpha_max: float = 0.5
    ics_alpha_min: float = 0.01
    nmcs_pa0: float = 0.25
    nmcs_alpha0: float = 1.0
    aacs_reseed_prob: float = 0.1

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}")
        self.common.validate(MIN_NESTS[self.variant])
        if not (0 <= self.ics_pa_min <= self.ics_pa_max <= 1):
            raise ValueError("ics pa bounds must satisfy 0 <= pa_min <= pa_max <= 1")
        if not (0 < self.ics_alpha_min <= self.ics_alpha_max):
            raise ValueError("ics alpha bounds must satisfy 0 < alpha_min <= alpha_max")
        if not 0 <= self.nmcs_pa0 <= 1:
            raise ValueError("nmcs_pa0 must lie in [0, 1]")
        if not self.nmcs_alpha0 > 0:
            raise ValueError("nmcs_alpha0 must be positive")
        if not 0 <= self.aacs_reseed_prob <= 1:
            raise ValueError("aacs_reseed_prob must lie in [0, 1]")


class Preset(NamedTuple):
    n: int
    ni: int
    temperature: float


#: Nest count, iteration count and temperature selected for each variant.
PRESETS = {
    "scs": Preset(20, 100, 2.0),
    "ics": Preset(20, 100, 2.0),
    "aacs": Preset(25, 100, 2.0),
    "mcs": Preset(5, 100, 3.0),
    "nmcs": Preset(5, 50, 2.0),
}


def preset_config(variant: str, seed: int = 0, **common) -> tuple[VariantConfig, float]:
    """Variant config and temperature from :data:`PRESETS`."""
    if variant not in PRESETS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    p = PRESETS[variant]
    cfg = VariantConfig(variant, CommonConfig(n=p.n, ni=p.ni, seed=seed, **common))
    return cfg, p.temperature


# --------------------------------------------------------------------------
# ICS schedules
# --------------------------------------------------------------------------

def ics_pa(t: float, ni: int, pa_max: float, pa_min: float) -> float:
    """Linear decrease from ``pa_max`` at ``t = 0`` to ``pa_min`` at ``t = ni``."""
    if ni <= 0:
        raise ValueError("ni must be positive")
    return pa_max - (t / ni) * (pa_max - pa_min)


def ics_alpha(t: float, ni: int, alpha_max: float, alpha_min: float) -> float:
    """Geometric decrease from ``alpha_max`` to ``alpha_min`` over ``ni`` steps."""
    if ni <= 0:
        raise ValueError("ni must be positive")
    if alpha_max <= 0 or alpha_min <= 0:
        raise ValueError("alpha bounds must be positive")
    return alpha_max * math.exp(t * math.log(alpha_min / alpha_max) / ni)


# --------------------------------------------------------------------------
# NMCS adaptive parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NmcsState:
    prev_best_fitness: float
    xi: float
    theta: float
    omega_s: float
    omega_a: float


def _ratio(num: float, den: float) -> float:
    if den == 0 or not math.isfinite(den) or not math.isfinite(num):
        return 1.0
    return min(max(num / den, 0.0), 1.0)


def _scale_factor(omega: float) -> float:
    return 10.0 ** (10.0 * math.tan(math.atan(0.1) * (2.0 * omega - 1.0)))


def nmcs_factors(best_now: float, best_prev: float | None, mean_fitness: float) -> NmcsState:
    """Speed and aggregation factors and their scale conversions.

    Both ratios are clamped to ``[0, 1]`` so that the factors stay within
    ``[0.1, 10]`` even for negative energies. A missing or zero previous best
    gives a speed factor of 1.
    """
    omega_s = 1.0 if best_prev is None else _ratio(best_now, best_prev)
    omega_a = _ratio(best_now, mean_fitness)
    return NmcsState(
        prev_best_fitness=math.nan if best_prev is None else float(best_prev),
        xi=_scale_factor(omega_s),
        theta=_scale_factor(omega_a),
        omega_s=omega_s,
        omega_a=omega_a,
    )


def nmcs_pa(pa0: float, state: NmcsState) -> float:
    raw = pa0 / state.xi + pa0 * state.theta
    if raw < NMCS_PA_MIN:
        return NMCS_PA_MIN
    if raw > NMCS_PA_MAX:
        return NMCS_PA_MAX
    return raw


def nmcs_alpha(alpha0: float, state: NmcsState) -> float:
    return alpha0 / state.xi + alpha0 * state.theta


# --------------------------------------------------------------------------
# AACS
# --------------------------------------------------------------------------

@dataclass
class AacsState:
    """Per-nest abandonment probabilities and the scale-factor distribution."""

    pa_per_nest: np.ndarray
    phi_mean: float = AACS_PHI_MEAN
    phi_std: float = AACS_PHI_STD


def aacs_init_state(n: int, rng: np.random.Generator) -> AacsState:
    return AacsState(rng.uniform(AACS_PA_LOW, AACS_PA_HIGH, size=n))


def aacs_pa_setting(state: AacsState, improved, reseed_prob: float,
                    rng: np.random.Generator) -> None:
    """Redraw ``pa`` of stagnating nests with probability ``reseed_prob``.

    One uniform draw per non-improved nest decides the reseed; a reseeded
    nest then takes a fresh value from ``[0.1, 0.85]``.
    """
    improved = np.asarray(improved, dtype=bool)
    if improved.shape != state.pa_per_nest.shape:
        raise ValueError("improved mask and pa vector differ in length")
    for i in np.flatnonzero(~improved):
        if rng.random() < reseed_prob:
            state.pa_per_nest[i] = rng.uniform(AACS_PA_LOW, AACS_PA_HIGH)


def aacs_rebuild(pop: Population, state: AacsState, t: int, ni: int,
                 rng: np.random.Generator, objective: Objective) -> Nests:
    """Mutation/crossover rebuild of every nest.

    For each nest ``i`` in ascending order the draws are: a permutation of the
    other nests (``r1..r4`` are its first four entries), the gate ``g``, the
    acceptance draw compared with ``pa_i`` and ``k`` Gaussian scale factors.
    Late in the run (``g >= 1 - t/ni``) the new nest is built around the best
    from four others; otherwise from three.
    """
    n, k = pop.positions.shape
    if n < 5:
        raise ValueError("aacs needs at least five nests")
    x = pop.positions
    best = pop.best.position
    new = x.copy()
    others = np.arange(n)
    for i in range(n):
        r1, r2, r3, r4 = rng.permutation(np.delete(others, i))[:4]
        g = rng.random()
        accept = rng.random() < state.pa_per_nest[i]
        phi = rng.normal(state.phi_mean, state.phi_std, size=k)
        if not accept:
            continue
        if g >= 1.0 - t / ni:
            new[i] = best + phi * (x[r1] - x[r2] + x[r3] - x[r4])
        else:
            new[i] = x[r1] + phi * (x[r2] - x[r3])
    return Nests(new, _as_fitness(objective(new), n))


# --------------------------------------------------------------------------
# MCS
# --------------------------------------------------------------------------

def mcs_iteration(pop: Population, t: int, rng: np.random.Generator,
                  objective: Objective, beta: float = 1.5) -> None:
    """One generation of the two-group scheme (``t`` counts from 1).

    Nests are ranked by fitness; the top quarter (rounded up) forms the top
    group. Every other nest is replaced outright by a Lévy cuckoo with
    ``alpha = 1/sqrt(t)``. Each top nest ``i`` then picks a partner ``j`` from
    the top group: identical positions give a cuckoo of ``i`` with
    ``alpha = 1/t**2``, otherwise a point a golden-ratio fraction of the way
    from the worse of the pair toward the better. The candidate greedily
    challenges a random nest ``l``. Draw order: the abandoned group's cuckoos
    in rank order, then per top nest: ``j``, the cuckoo draws if any, ``l``.
    """
    n = pop.n
    if n < 4:
        raise ValueError("mcs needs at least four nests")
    if t < 1:
        raise ValueError("t counts from 1")
    order = np.argsort(pop.fitness, kind="stable")
    n_top = math.ceil(0.25 * n)
    top, rest = order[:n_top], order[n_top:]

    cuckoos = generate_cuckoos(pop, 1.0 / math.sqrt(t), rng, objective, beta, indices=rest)
    pop.positions[rest] = cuckoos.positions
    pop.fitness[rest] = cuckoos.fitness

    x = pop.positions
    for i in top:
        j = top[rng.integers(n_top)]
        if np.array_equal(x[i], x[j]):
            candidate = _cuckoo_positions(x[i:i + 1], pop.best.position, 1.0 / t ** 2, beta, rng)[0]
        else:
            better, worse = (i, j) if pop.fitness[i] <= pop.fitness[j] else (j, i)
            dx = np.abs(x[i] - x[j]) / GOLDEN_RATIO
            candidate = x[worse] + np.sign(x[better] - x[worse]) * dx
        l = rng.integers(n)
        fit = _as_fitness(objective(candidate[None, :]), 1)[0]
        if fit <= pop.fitness[l]:
            x[l] = candidate
            pop.fitness[l] = fit
    pop.refresh_best()
    pop.t += 1


# --------------------------------------------------------------------------
# Driver
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    """Outcome of one optimizer run.

    ``best_history[t]`` and ``min_history[t]`` hold the best-so-far and the
    population-minimum fitness after ``t`` generations (index 0 is the
    initial population).
    """

    variant: str
    mu_star: np.ndarray
    energy: float
    iterations: int
    duration_s: float
    best_history: np.ndarray
    min_history: np.ndarray
    evaluations: int
    labels: LabelField | None = None


def optimize(objective: Objective, k: int, vconfig: VariantConfig) -> RunResult:
    """Minimize a batch objective over ``[0, 255]^k`` with the configured variant."""
    vconfig.validate()
    common = vconfig.common
    variant = vconfig.variant
    evaluations = 0

    def counted(positions):
        nonlocal evaluations
        evaluations += len(positions)
        return objective(positions)

    start = time.perf_counter()
    rng = make_rng(common.seed)
    pop = init_population(k, common, counted, rng, MIN_NESTS[variant])
    best_hist = [pop.best.fitness]
    min_hist = [float(pop.fitness.min())]

    if variant == "mcs":
        for g in range(common.ni):
            mcs_iteration(pop, g + 1, rng, counted, common.beta)
            best_hist.append(pop.best.fitness)
            min_hist.append(float(pop.fitness.min()))
    else:
        aacs = aacs_init_state(pop.n, rng) if variant == "aacs" else None
        prev_best = None
        for t in range(common.ni):
            pop.refresh_best()
            alpha, pa = common.alpha, common.pa
            nmcs = None
            if variant == "ics":
                alpha = ics_alpha(t, common.ni, vconfig.ics_alpha_max, vconfig.ics_alpha_min)
            elif variant == "nmcs":
                nmcs = nmcs_factors(pop.best.fitness, prev_best, float(np.mean(pop.fitness)))
                prev_best = pop.best.fitness
                alpha = nmcs_alpha(vconfig.nmcs_alpha0, nmcs)

            before = pop.fitness.copy()
            cuckoos = generate_cuckoos(pop, alpha, rng, counted, common.beta)
            greedy_update(pop, cuckoos)
            pop.refresh_best()

            if variant == "ics":
                pa = ics_pa(t, common.ni, vconfig.ics_pa_max, vconfig.ics_pa_min)
            elif variant == "nmcs":
                pa = nmcs_pa(vconfig.nmcs_pa0, nmcs)

            if variant == "aacs":
                aacs_pa_setting(aacs, cuckoos.fitness < before, vconfig.aacs_reseed_prob, rng)
                rebuilt = aacs_rebuild(pop, aacs, t, common.ni, rng, counted)
            else:
                rebuilt = rebuild_abandoned(pop, pa, rng, counted, common.per_component_draws)
            elitist_select(pop, rebuilt)
            best_hist.append(pop.best.fitness)
            min_hist.append(float(pop.fitness.min()))
    duration = time.perf_counter() - start

    return RunResult(
        variant=variant,
        mu_star=pop.best.position.copy(),
        energy=float(pop.best.fitness),
        iterations=pop.t,
        duration_s=duration,
        best_history=np.array(best_hist),
        min_history=np.array(min_hist),
        evaluations=evaluations,
    )


def run(image: GrayImage, k: int, vconfig: VariantConfig,
        eparams: EnergyParams | None = None) -> RunResult:
    """Segment `image` into `k` classes by minimizing the HMRF energy."""
    objective = HMRFEnergy(image, k, eparams)
    result = optimize(objective, k, vconfig)
    result.labels = classify_nearest_mean(image, result.mu_star)
    return result
