"""Clonal selection (CLONALG-style) maturation of a detector population."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .errors import ValidationError
from .negsel import CLONAL, RANDOM, Detector, SelfSet, censor, generate_nsa
from .representation import dists

logger = logging.getLogger(__name__)

_CLONE_STREAM = 0
_REPLACE_STREAM = 1


@dataclass
class LabeledSet:
    """Validation antigens; ``nonself`` is True for attack samples."""

    X: np.ndarray
    nonself: np.ndarray

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.nonself = np.asarray(self.nonself, dtype=bool)
        if len(self.X) != len(self.nonself):
            raise ValidationError("feature and label counts differ")
        if not self.nonself.any() or self.nonself.all():
            raise ValidationError("validation set needs at least one self and one nonself antigen")


@dataclass(frozen=True)
class MaturationConfig:
    n_select: int = 5
    beta: float = 1.0
    rho: float = 3.0
    d_replace: int = 2
    generations: int = 50
    rng_seed: int = 0
    init_radius: float = 0.1
    max_replace_attempts: int = 1000

    def validate(self, pop_size: int):
        if not 0 < self.n_select <= pop_size:
            raise ValueError(f"n_select={self.n_select} must lie in [1, {pop_size}]")
        if not 0 <= self.d_replace < pop_size:
            raise ValueError(f"d_replace={self.d_replace} must lie in [0, {pop_size})")
        if self.beta <= 0 or self.rho <= 0 or self.generations <= 0:
            raise ValueError("beta, rho and generations must be positive")


@dataclass
class Population:
    members: list[Detector]
    generation: int = 0
    fitness: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ValueError("population must be non-empty")
        if self.fitness and len(self.fitness) != len(self.members):
            raise ValueError("fitness list not aligned with members")

    @property
    def best(self) -> float:
        return max(self.fitness)

    @property
    def mean(self) -> float:
        return float(np.mean(self.fitness))


def score_fitness(detector: Detector, validation: LabeledSet) -> float:
    """Fraction of nonself antigens covered, zeroed if any self antigen is covered."""
    covered = dists(validation.X, detector.center) <= detector.radius
    if covered[~validation.nonself].any():
        return 0.0
    return int(covered[validation.nonself].sum()) / int(validation.nonself.sum())


def clone_counts(ranked_fitness, beta: float, pop_size: int) -> list[int]:
    """Rank-proportional clone budget: round(beta * pop_size / (rank + 1)), half up."""
    return [max(0, math.floor(beta * pop_size / (i + 1) + 0.5)) for i in range(len(ranked_fitness))]


def hypermutate(detector: Detector, normalized_fitness: float, rho: float,
                rng: np.random.Generator, *, new_id: int | None = None,
                generation: int | None = None) -> Detector:
    """Gaussian mutation whose scale decays as exp(-rho * normalized_fitness)."""
    sigma = math.exp(-rho * normalized_fitness)
    step = 0.1 * sigma
    center = np.clip(detector.center + rng.normal(0.0, step, size=detector.center.shape), 0.0, 1.0)
    radius = max(1e-6, detector.radius * (1.0 + rng.normal(0.0, step)))
    return Detector(detector.id if new_id is None else new_id, center, radius,
                    detector.birth_generation if generation is None else generation,
                    0, CLONAL)


def _score_all(members, validation) -> list[float]:
    return [score_fitness(m, validation) for m in members]


def _fresh_detector(self_set: SelfSet, radius: float, rng, new_id, generation, attempts):
    for _ in range(attempts):
        cand = Detector(new_id, rng.random(self_set.dim), radius, generation, 0, RANDOM)
        if not censor(cand, self_set):
            return cand
    return None


def maturation_step(pop: Population, validation: LabeledSet, cfg: MaturationConfig,
                    self_set: SelfSet) -> Population:
    size = len(pop.members)
    cfg.validate(size)
    gen = pop.generation + 1
    fitness = pop.fitness or _score_all(pop.members, validation)

    order = sorted(range(size), key=lambda i: -fitness[i])
    selected = order[:cfg.n_select]
    ranked = [fitness[i] for i in selected]
    counts = clone_counts(ranked, cfg.beta, size)
    top = ranked[0]

    next_id = max(m.id for m in pop.members) + 1
    clone_seeds = np.random.SeedSequence([cfg.rng_seed, gen, _CLONE_STREAM]).spawn(sum(counts))
    clones = []
    k = 0
    for rank, (idx, n) in enumerate(zip(selected, counts)):
        norm = fitness[idx] / top if top > 0 else 0.0
        for _ in range(n):
            rng = np.random.default_rng(clone_seeds[k])
            clones.append(hypermutate(pop.members[idx], norm, cfg.rho, rng,
                                      new_id=next_id + k, generation=gen))
            k += 1
    survivors = [c for c in clones if not censor(c, self_set)]
    if not survivors:
        logger.info("generation %d: every clone was censored", gen)
    surv_fit = _score_all(survivors, validation)

    # parents precede clones so ties keep the incumbent
    pool = list(zip(pop.members, fitness)) + list(zip(survivors, surv_fit))
    pool.sort(key=lambda mf: -mf[1])
    kept = pool[:size]

    rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, gen, _REPLACE_STREAM]))
    fresh_id = next_id + len(clones)
    for j in range(size - cfg.d_replace, size):
        det = _fresh_detector(self_set, cfg.init_radius, rng, fresh_id, gen, cfg.max_replace_attempts)
        if det is None:
            logger.warning("generation %d: no admissible replacement, keeping member", gen)
            continue
        fresh_id += 1
        kept[j] = (det, score_fitness(det, validation))

    return Population([m for m, _ in kept], gen, [f for _, f in kept])


def initial_population(self_set: SelfSet, size: int, radius: float, seed: int,
                       validation: LabeledSet, threads: int = 1) -> Population:
    ds = generate_nsa(self_set, size, radius, seed, threads=threads)
    return Population(ds.detectors, 0, _score_all(ds.detectors, validation))


def mature(pop: Population, validation: LabeledSet, cfg: MaturationConfig, self_set: SelfSet,
           *, snapshot_every: int = 0) -> Iterator[tuple[Population, dict]]:
    """Run ``cfg.generations`` steps, yielding each population with a history record."""
    if not pop.fitness:
        pop = replace(pop, fitness=_score_all(pop.members, validation))
    for _ in range(cfg.generations):
        pop = maturation_step(pop, validation, cfg, self_set)
        rec = {"generation": pop.generation, "best": pop.best, "mean": pop.mean,
               "size": len(pop.members)}
        if snapshot_every and pop.generation % snapshot_every == 0:
            rec["snapshot"] = [m.to_dict() for m in pop.members]
        yield pop, rec


def history_lines(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
