"""Population machinery shared by the cuckoo-search variants.

Objectives are batch callables: they take an ``(n, K)`` array of positions and
return ``n`` fitness values, where ``+inf`` marks an infeasible position.

Random numbers come from :class:`numpy.random.Generator` seeded through
:func:`make_rng` (PCG64 via ``numpy.random.default_rng``). The order of draws
inside each operator is fixed and documented on the operator, so a run is a
pure function of its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "Objective",
    "Nest",
    "Nests",
    "Population",
    "CommonConfig",
    "make_rng",
    "mantegna_sigma",
    "levy_step",
    "init_population",
    "generate_cuckoos",
    "greedy_update",
    "rebuild_abandoned",
    "elitist_select",
]

Objective = Callable[[np.ndarray], np.ndarray]

#: Search box of every mean component.
LOWER, UPPER = 0.0, 255.0


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a 64-bit seed."""
    return np.random.default_rng(int(seed) & 0xFFFF_FFFF_FFFF_FFFF)


@dataclass
class Nest:
    position: np.ndarray
    fitness: float

    def copy(self) -> "Nest":
        return Nest(np.array(self.position, dtype=np.float64), float(self.fitness))


class Nests(NamedTuple):
    """A batch of candidate nests (cuckoos or rebuilt nests)."""

    positions: np.ndarray
    fitness: np.ndarray


@dataclass
class Population:
    """Current nests plus the best nest seen so far."""

    positions: np.ndarray
    fitness: np.ndarray
    best: Nest
    t: int = 0

    @property
    def n(self) -> int:
        return len(self.fitness)

    @property
    def k(self) -> int:
        return self.positions.shape[1]

    @property
    def nests(self) -> list[Nest]:
        return [Nest(p.copy(), float(f)) for p, f in zip(self.positions, self.fitness)]

    def refresh_best(self) -> None:
        """Adopt the current population minimum if it strictly improves on the best."""
        i = int(np.argmin(self.fitness))
        if self.fitness[i] < self.best.fitness:
            self.best = Nest(self.positions[i].copy(), float(self.fitness[i]))


@dataclass
class CommonConfig:
    """Parameters shared by every variant.

    ``per_component_draws`` selects independent ``rand()`` factors per mean
    component in the biased random walk; ``False`` draws one pair per nest.
    """

    n: int = 20
    ni: int = 100
    alpha: float = 1.0
    pa: float = 0.25
    beta: float = 1.5
    seed: int = 0
    per_component_draws: bool = True

    def validate(self, min_nests: int = 2) -> None:
        if self.n < min_nests:
            raise ValueError(f"n must be at least {min_nests}, got {self.n}")
        if self.ni < 1:
            raise ValueError("ni must be at least 1")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.pa <= 1.0:
            raise ValueError("pa must lie in [0, 1]")
        if not 1.0 < self.beta <= 2.0:
            raise ValueError("beta must lie in (1, 2]")


def _as_fitness(values, n: int) -> np.ndarray:
    out = np.asarray(values, dtype=np.float64).reshape(n)
    return np.where(np.isnan(out), math.inf, out)


def mantegna_sigma(beta: float) -> float:
    """Scale of the numerator Gaussian in Mantegna's algorithm."""
    if not 1.0 < beta <= 2.0:
        raise ValueError("beta must lie in (1, 2]")
    num = math.gamma(1 + beta) * math.sin(math.pi * beta / 2)
    den = math.gamma((1 + beta) / 2) * beta * 2 ** ((beta - 1) / 2)
    return (num / den) ** (1 / beta)


def levy_step(k: int, beta: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Mantegna Lévy-stable step ``u / |v|^(1/beta)`` with ``k`` components.

    Draws ``k`` standard normals for ``u`` (scaled by :func:`mantegna_sigma`)
    followed by ``k`` for ``v``. With ``size`` given, returns ``(size, k)``
    steps drawn one row after another.
    """
    sigma_u = mantegna_sigma(beta)
    rows = 1 if size is None else size
    z = rng.standard_normal((rows, 2, k))
    step = sigma_u * z[:, 0] / np.abs(z[:, 1]) ** (1.0 / beta)
    return step[0] if size is None else step


def init_population(k: int, config: CommonConfig, objective: Objective,
                    rng: np.random.Generator, min_nests: int = 2) -> Population:
    """Draw ``n`` positions uniformly from ``[0, 255]^k`` and evaluate them."""
    config.validate(min_nests)
    positions = rng.uniform(LOWER, UPPER, size=(config.n, k))
    fitness = _as_fitness(objective(positions), config.n)
    i = int(np.argmin(fitness))
    best = Nest(positions[i].copy(), float(fitness[i]))
    return Population(positions, fitness, best, 0)


def _cuckoo_positions(positions, best, alpha, beta, rng):
    # per nest: k numerator normals, k denominator normals, k multiplier normals
    n, k = positions.shape
    z = rng.standard_normal((n, 3, k))
    step = mantegna_sigma(beta) * z[:, 0] / np.abs(z[:, 1]) ** (1.0 / beta)
    return positions + alpha * step * (positions - best) * z[:, 2]


def generate_cuckoos(pop: Population, alpha: float, rng: np.random.Generator,
                     objective: Objective, beta: float = 1.5,
                     indices=None) -> Nests:
    """Lévy-flight cuckoos around each nest, scaled by its offset from the best.

    ``c_i = mu_i + alpha * step_i * (mu_i - best) * randn_i``. For each nest in
    ascending order the draws are: ``k`` normals and ``k`` normals for the
    Mantegna step, then ``k`` normals for ``randn``. ``indices`` restricts the
    batch to a subset of nests (in the given order).
    """
    base = pop.positions if indices is None else pop.positions[np.asarray(indices)]
    new = _cuckoo_positions(base, pop.best.position, alpha, beta, rng)
    return Nests(new, _as_fitness(objective(new), len(new)))


def greedy_update(pop: Population, cuckoos: Nests) -> np.ndarray:
    """Replace nest ``i`` by cuckoo ``i`` when its fitness is not worse.

    Returns the boolean mask of replaced nests.
    """
    if len(cuckoos.fitness) != pop.n:
        raise ValueError("cuckoo batch and population differ in length")
    take = cuckoos.fitness <= pop.fitness
    pop.positions[take] = cuckoos.positions[take]
    pop.fitness[take] = cuckoos.fitness[take]
    return take


def rebuild_abandoned(pop: Population, pa: float, rng: np.random.Generator,
                      objective: Objective, per_component: bool = True) -> Nests:
    """Biased random walk for abandoned nest components.

    ``v_i = mu_i + r * (mu_r1 - mu_r2) * H(pa - u)``, with ``r1 != r2`` the
    first two entries of a fresh permutation of the nest indices. For each nest
    in ascending order the draws are: the permutation, then for every component
    the pair ``(r, u)``. With ``per_component=False`` one pair serves all
    components.
    """
    n, k = pop.positions.shape
    if n < 2:
        raise ValueError("the random walk needs at least two nests")
    new = np.empty_like(pop.positions)
    for i in range(n):
        r1, r2 = rng.permutation(n)[:2]
        if per_component:
            pairs = rng.random((k, 2))
            scale, gate = pairs[:, 0], pairs[:, 1]
        else:
            scale, gate = rng.random(2)
        open_ = np.heaviside(pa - gate, 0.0)
        new[i] = pop.positions[i] + scale * (pop.positions[r1] - pop.positions[r2]) * open_
    return Nests(new, _as_fitness(objective(new), n))


def elitist_select(pop: Population, rebuilt: Nests) -> np.ndarray:
    """Keep each rebuilt nest that is not worse, refresh the best and advance ``t``."""
    if len(rebuilt.fitness) != pop.n:
        raise ValueError("rebuilt batch and population differ in length")
    take = rebuilt.fitness <= pop.fitness
    pop.positions[take] = rebuilt.positions[take]
    pop.fitness[take] = rebuilt.fitness[take]
    pop.refresh_best()
    pop.t += 1
    return take
