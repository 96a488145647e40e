"""Genetic search for the parameter whose prediction matches a target.

A chromosome carries the physical parameter (a float gene) together with
three integer genes steering the predictor itself: the two neighbor counts
of the barycentric interpolation and the block truncation order. The search
therefore tunes what it predicts and how it predicts at the same time.

All randomness flows through one numpy Generator seeded from the config, and
evaluation consumes none of it, so runs with equal seeds reproduce their
history bit for bit and evaluations could be farmed out without changing the
outcome.
"""

from __future__ import annotations

import csv
import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .barycentric import (
    FixedPointConfig,
    InterpolationRequest,
    interpolate_reduced,
    reconstruct_field,
)
from .errors import PersistenceError
from .objective import Target, cost as cost_of, fitness as fitness_of
from .pod import RomDatabase

# Cost assigned to chromosomes whose interpolation request is rejected.
PENALTY_COST = float(np.finfo(np.float64).max)

HISTORY_COLUMNS = (
    "generation",
    "best_delta",
    "best_ne_t",
    "best_ne_x",
    "best_m",
    "best_cost",
    "avg_cost",
)


@dataclass(frozen=True)
class Chromosome:
    delta: float
    ne_t: int
    ne_x: int
    m: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", float(self.delta))
        for name in ("ne_t", "ne_x", "m"):
            object.__setattr__(self, name, int(getattr(self, name)))


@dataclass(frozen=True)
class SearchSpace:
    """Inclusive per-gene bounds. ne_bounds applies to ne_t and ne_x alike."""

    delta_bounds: tuple[float, float]
    ne_bounds: tuple[int, int]
    m_bounds: tuple[int, int]

    def __post_init__(self) -> None:
        d = (float(self.delta_bounds[0]), float(self.delta_bounds[1]))
        n = (int(self.ne_bounds[0]), int(self.ne_bounds[1]))
        m = (int(self.m_bounds[0]), int(self.m_bounds[1]))
        if d[0] > d[1] or n[0] > n[1] or m[0] > m[1]:
            raise ValueError("each bounds pair must satisfy lo <= hi")
        if n[0] < 2:
            raise ValueError("neighbor counts below 2 cannot interpolate")
        if m[0] < 1:
            raise ValueError("truncation order must be at least 1")
        object.__setattr__(self, "delta_bounds", d)
        object.__setattr__(self, "ne_bounds", n)
        object.__setattr__(self, "m_bounds", m)

    def contains(self, c: Chromosome) -> bool:
        return (
            self.delta_bounds[0] <= c.delta <= self.delta_bounds[1]
            and self.ne_bounds[0] <= c.ne_t <= self.ne_bounds[1]
            and self.ne_bounds[0] <= c.ne_x <= self.ne_bounds[1]
            and self.m_bounds[0] <= c.m <= self.m_bounds[1]
        )

    def clamp(self, c: Chromosome) -> Chromosome:
        return Chromosome(
            min(max(c.delta, self.delta_bounds[0]), self.delta_bounds[1]),
            min(max(c.ne_t, self.ne_bounds[0]), self.ne_bounds[1]),
            min(max(c.ne_x, self.ne_bounds[0]), self.ne_bounds[1]),
            min(max(c.m, self.m_bounds[0]), self.m_bounds[1]),
        )


@dataclass(frozen=True)
class GaConfig:
    space: SearchSpace
    population_size: int = 20
    generations: int = 30
    crossover_prob: float = 0.8
    mutation_prob: float = 0.1
    elite_count: int = 1
    rng_seed: int = 0
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be nonnegative")
        for name in ("crossover_prob", "mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elite_count < self.population_size:
            raise ValueError("elite_count must lie in [0, population_size)")


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best: Chromosome
    best_cost: float
    avg_cost: float
    digest: str


@dataclass(frozen=True)
class GaHistory:
    records: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def write_csv(self, path) -> None:
        try:
            with open(path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(HISTORY_COLUMNS)
                for rec in self.records:
                    writer.writerow(
                        [
                            rec.generation,
                            repr(float(rec.best.delta)),
                            rec.best.ne_t,
                            rec.best.ne_x,
                            rec.best.m,
                            repr(float(rec.best_cost)),
                            repr(float(rec.avg_cost)),
                        ]
                    )
        except OSError as exc:
            raise PersistenceError(path, f"cannot write history ({exc})") from exc


def _population_digest(population) -> str:
    hasher = hashlib.sha256()
    for c in population:
        hasher.update(struct.pack("<dqqq", c.delta, c.ne_t, c.ne_x, c.m))
    return hasher.hexdigest()[:16]


def init_population(cfg: GaConfig, rng: np.random.Generator | None = None) -> list[Chromosome]:
    """Uniform random population inside the search space."""
    rng = np.random.default_rng(cfg.rng_seed) if rng is None else rng
    d_lo, d_hi = cfg.space.delta_bounds
    n_lo, n_hi = cfg.space.ne_bounds
    m_lo, m_hi = cfg.space.m_bounds
    population = []
    for _ in range(cfg.population_size):
        delta = float(rng.uniform(d_lo, d_hi)) if d_lo < d_hi else d_lo
        ne_t = int(rng.integers(n_lo, n_hi + 1))
        ne_x = int(rng.integers(n_lo, n_hi + 1))
        m = int(rng.integers(m_lo, m_hi + 1))
        population.append(Chromosome(delta, ne_t, ne_x, m))
    return population


def evaluate_population(
    population,
    db: RomDatabase,
    target: Target,
    cfg: GaConfig,
    cache: dict | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Cost and fitness per chromosome.

    A chromosome whose interpolation request the database rejects is kept in
    the population but charged the largest finite cost. Identical
    chromosomes always score identically; the optional cache exploits that
    across generations.
    """
    costs = np.empty(len(population))
    for i, c in enumerate(population):
        key = (c.delta, c.ne_t, c.ne_x, c.m)
        if cache is not None and key in cache:
            costs[i] = cache[key]
            continue
        try:
            result = interpolate_reduced(
                db,
                InterpolationRequest(c.delta, ne_x=c.ne_x, ne_t=c.ne_t, m=c.m),
                cfg.fixed_point,
            )
            predicted = reconstruct_field(db, result.reduced, rows=target.mask.indices)
            value = cost_of(predicted, target)
        except ValueError:
            value = PENALTY_COST
        costs[i] = value
        if cache is not None:
            cache[key] = value
    fitnesses = np.array([fitness_of(j) for j in costs])
    return costs, fitnesses


def roulette_select(fitnesses: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` indices drawn with probability proportional to fitness."""
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    if fitnesses.ndim != 1 or fitnesses.size == 0:
        raise ValueError("fitnesses must be a nonempty 1D array")
    if np.any(fitnesses <= 0.0) or not np.isfinite(fitnesses).all():
        raise ValueError("all fitness values must be positive and finite")
    cumulative = np.cumsum(fitnesses / fitnesses.sum())
    draws = rng.random(count)
    return np.minimum(
        np.searchsorted(cumulative, draws, side="right"), fitnesses.size - 1
    )


def crossover(
    parent_a: Chromosome, parent_b: Chromosome, rng: np.random.Generator, cfg: GaConfig
) -> tuple[Chromosome, Chromosome]:
    """Blend-and-exchange crossover.

    With probability 1 - crossover_prob the parents pass through unchanged.
    Otherwise the float gene is blended arithmetically with a uniform
    coefficient (children stay inside the parents' span) and the integer
    genes (ne_t, ne_x, m) swap their tails at a uniformly chosen boundary.
    Children are clamped to the search space.
    """
    if rng.random() > cfg.crossover_prob:
        return parent_a, parent_b
    beta = rng.random()
    delta_a = beta * parent_a.delta + (1.0 - beta) * parent_b.delta
    delta_b = (1.0 - beta) * parent_a.delta + beta * parent_b.delta
    cut = int(rng.integers(1, 3))  # boundary after gene 1 or gene 2
    ints_a = (parent_a.ne_t, parent_a.ne_x, parent_a.m)
    ints_b = (parent_b.ne_t, parent_b.ne_x, parent_b.m)
    child_a = Chromosome(delta_a, *(ints_a[:cut] + ints_b[cut:]))
    child_b = Chromosome(delta_b, *(ints_b[:cut] + ints_a[cut:]))
    return cfg.space.clamp(child_a), cfg.space.clamp(child_b)


def mutate(c: Chromosome, rng: np.random.Generator, cfg: GaConfig) -> Chromosome:
    """With probability mutation_prob resample one uniformly chosen gene."""
    if rng.random() >= cfg.mutation_prob:
        return c
    gene = int(rng.integers(0, 4))
    d_lo, d_hi = cfg.space.delta_bounds
    n_lo, n_hi = cfg.space.ne_bounds
    m_lo, m_hi = cfg.space.m_bounds
    if gene == 0:
        delta = float(rng.uniform(d_lo, d_hi)) if d_lo < d_hi else d_lo
        return Chromosome(delta, c.ne_t, c.ne_x, c.m)
    if gene == 1:
        return Chromosome(c.delta, int(rng.integers(n_lo, n_hi + 1)), c.ne_x, c.m)
    if gene == 2:
        return Chromosome(c.delta, c.ne_t, int(rng.integers(n_lo, n_hi + 1)), c.m)
    return Chromosome(c.delta, c.ne_t, c.ne_x, int(rng.integers(m_lo, m_hi + 1)))


def step_generation(
    population,
    costs: np.ndarray,
    fitnesses: np.ndarray,
    rng: np.random.Generator,
    cfg: GaConfig,
) -> list[Chromosome]:
    """Produce the next population: elites pass through, the rest is bred.

    Offspring parents come from roulette selection; selected parents are
    paired in draw order (the draws are already random), crossed over, then
    each child is mutated. Population size is preserved.
    """
    order = np.argsort(costs, kind="stable")
    elites = [population[i] for i in order[: cfg.elite_count]]
    n_offspring = cfg.population_size - cfg.elite_count
    n_selected = n_offspring + (n_offspring % 2)
    selected = roulette_select(fitnesses, n_selected, rng)
    children: list[Chromosome] = []
    for i in range(0, n_selected, 2):
        a, b = population[selected[i]], population[selected[i + 1]]
        child_a, child_b = crossover(a, b, rng, cfg)
        children.append(mutate(child_a, rng, cfg))
        children.append(mutate(child_b, rng, cfg))
    return elites + children[:n_offspring]


def run(cfg: GaConfig, db: RomDatabase, target: Target) -> tuple[Chromosome, GaHistory]:
    """Full search: returns the overall best chromosome and the history.

    The initial random population counts as generation 1; each later
    generation evaluates the population bred from the previous one. With
    elitism enabled the per-generation best cost never increases. A
    ``generations`` of 0 degenerates to evaluating the initial population
    only.
    """
    d_lo, d_hi = cfg.space.delta_bounds
    hull_lo, hull_hi = db.hull
    if d_lo < hull_lo or d_hi > hull_hi:
        raise ValueError(
            f"delta bounds [{d_lo!r}, {d_hi!r}] leave the training hull"
            f" [{hull_lo!r}, {hull_hi!r}]"
        )
    if cfg.space.ne_bounds[1] > db.n_params:
        raise ValueError("neighbor bound exceeds the number of training samples")
    if cfg.space.m_bounds[1] > db.q:
        raise ValueError("truncation bound exceeds the database order q")
    if target.times != db.times:
        raise ValueError("target time axis must match the database")

    rng = np.random.default_rng(cfg.rng_seed)
    cache: dict = {}
    population = init_population(cfg, rng)
    records = []
    best: Chromosome | None = None
    best_cost = float("inf")
    total = max(cfg.generations, 1)
    for generation in range(1, total + 1):
        costs, fitnesses = evaluate_population(population, db, target, cfg, cache)
        leader = int(np.argmin(costs))
        if costs[leader] < best_cost:
            best = population[leader]
            best_cost = float(costs[leader])
        records.append(
            GenerationRecord(
                generation,
                population[leader],
                float(costs[leader]),
                float(costs.mean()),
                _population_digest(population),
            )
        )
        if generation < total:
            population = step_generation(population, costs, fitnesses, rng, cfg)
    assert best is not None
    return best, GaHistory(tuple(records))


def read_history_csv(path) -> GaHistory:
    """Parse a history CSV written by GaHistory.write_csv."""
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise PersistenceError(path, f"cannot read history ({exc})") from exc
    if not rows or tuple(rows[0]) != HISTORY_COLUMNS:
        raise ValueError(f"{path}: not a search history file")
    records = []
    try:
        for row in rows[1:]:
            generation, delta, ne_t, ne_x, m, best_cost, avg_cost = row
            records.append(
                GenerationRecord(
                    int(generation),
                    Chromosome(float(delta), int(ne_t), int(ne_x), int(m)),
                    float(best_cost),
                    float(avg_cost),
                    "",
                )
            )
    except (ValueError, TypeError) as exc:
        raise ValueError(f"{path}: malformed history row ({exc})") from exc
    return GaHistory(tuple(records))
