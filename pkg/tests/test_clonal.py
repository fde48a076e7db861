import math

import numpy as np
import pytest

from aisids.clonal import (LabeledSet, MaturationConfig, Population, clone_counts, hypermutate,
                           initial_population, mature, maturation_step, score_fitness)
from aisids.errors import ValidationError
from aisids.negsel import Detector, SelfSet, censor
from aisids.synth import maturation_toy


@pytest.fixture(scope="module")
def toy():
    s, X, y = maturation_toy()
    return SelfSet(s, 0.05), LabeledSet(X, y)


def line_validation():
    # four nonself points, three of them on a short segment; one self point
    X = [(0.1, 0.5), (0.2, 0.5), (0.3, 0.5), (0.6, 0.5), (0.9, 0.9)]
    return LabeledSet(X, [True, True, True, True, False])


def test_score_fitness_examples():
    val = line_validation()
    assert score_fitness(Detector(0, (0.2, 0.5), 0.1), val) == 0.75
    assert score_fitness(Detector(0, (0.9, 0.9), 0.01), val) == 0.0
    assert score_fitness(Detector(0, (0.2, 0.5), 0.9), val) == 0.0   # reaches the self point
    assert score_fitness(Detector(0, (0.6, 0.1), 0.01), val) == 0.0


def test_labeled_set_needs_both_classes():
    with pytest.raises(ValidationError):
        LabeledSet([(0.1, 0.1)], [True])


def test_clone_counts():
    # spreadsheet-style ROUND: 10/1, 10/2, 10/3 -> 10, 5, 3
    assert [round(10 / 1), round(10 / 2), math.floor(10 / 3 + 0.5)] == [10, 5, 3]
    assert clone_counts([0.9, 0.5, 0.1], 1.0, 10) == [10, 5, 3]
    assert clone_counts([0.9], 0.5, 10) == [5]
    assert clone_counts([0.9, 0.8], 1.0, 0) == [0, 0]
    assert clone_counts([1, 1, 1, 1], 1.0, 10)[3] == 3   # 2.5 rounds half up


def test_hypermutate_scale():
    parent = Detector(3, (0.5, 0.5), 0.1)
    sigma = math.exp(-2 * 0.5)
    assert sigma == pytest.approx(0.36787944117144233, abs=1e-15)
    a = hypermutate(parent, 0.5, 2.0, np.random.default_rng(1))
    rng = np.random.default_rng(1)
    expected_center = np.clip(parent.center + rng.normal(0, 0.1 * sigma, 2), 0, 1)
    expected_radius = 0.1 * (1 + rng.normal(0, 0.1 * sigma))
    assert np.array_equal(a.center, expected_center)
    assert a.radius == expected_radius
    assert a.origin == "clonal"


def test_hypermutate_limits():
    parent = Detector(0, (0.5, 0.5), 0.1)
    rng = np.random.default_rng(0)
    calm = [np.abs(hypermutate(parent, 1.0, 50.0, rng).center - parent.center).max() for _ in range(50)]
    wild = [np.abs(hypermutate(parent, 0.0, 50.0, rng).center - parent.center).max() for _ in range(50)]
    assert max(calm) < 1e-12
    assert np.mean(wild) > 0.05
    edge = hypermutate(Detector(0, (0.0, 1.0), 1e-6), 0.0, 1.0, np.random.default_rng(5))
    assert np.all((edge.center >= 0) & (edge.center <= 1)) and edge.radius >= 1e-6


def test_step_is_deterministic(toy):
    ss, val = toy
    cfg = MaturationConfig(rng_seed=3, init_radius=0.05)
    pop = initial_population(ss, 20, 0.05, 3, val)
    a, b = maturation_step(pop, val, cfg, ss), maturation_step(pop, val, cfg, ss)
    assert [m.to_dict() for m in a.members] == [m.to_dict() for m in b.members]
    assert a.fitness == b.fitness and a.generation == 1


def test_step_keeps_censoring_and_elitism(toy):
    ss, val = toy
    cfg = MaturationConfig(rng_seed=1, init_radius=0.05, generations=15)
    pop = initial_population(ss, 20, 0.05, 1, val)
    best = pop.best
    for p, rec in mature(pop, val, cfg, ss):
        assert p.best >= best
        best = p.best
        assert not any(censor(m, ss) for m in p.members)
        assert len(p.members) == 20
        assert p.fitness == [score_fitness(m, val) for m in p.members]


def test_full_replacement_keeps_only_the_best(toy):
    ss, val = toy
    pop = initial_population(ss, 10, 0.05, 2, val)
    cfg = MaturationConfig(n_select=3, d_replace=9, rng_seed=2, init_radius=0.05)
    out = maturation_step(pop, val, cfg, ss)
    assert out.fitness[0] >= pop.best
    assert all(m.origin == "random" and m.birth_generation == 1 for m in out.members[1:])


def test_all_clones_censored_keeps_population():
    # self everywhere but one corner; every mutated clone touches self
    g = np.linspace(0, 1, 41)
    grid = np.array([(x, y) for x in g for y in g if not (x == 1.0 and y == 1.0)])
    ss = SelfSet(grid, 0.0)
    val = LabeledSet([(1.0, 1.0), (0.5, 0.5)], [True, False])
    pop = Population([Detector(0, (1.0, 1.0), 0.02)])
    out = maturation_step(pop, val, MaturationConfig(n_select=1, d_replace=0, rng_seed=0), ss)
    assert out.generation == 1
    assert out.members[0].to_dict() == pop.members[0].to_dict()


def test_config_validation():
    with pytest.raises(ValueError):
        MaturationConfig(n_select=30).validate(20)
    with pytest.raises(ValueError):
        MaturationConfig(d_replace=20).validate(20)


def test_mean_fitness_rises_on_toy_set(toy):
    ss, val = toy
    pop = initial_population(ss, 20, 0.05, 7, val)
    means = [pop.mean] + [rec["mean"] for _, rec in
                          mature(pop, val, MaturationConfig(rng_seed=7, init_radius=0.05,
                                                            generations=20), ss)]
    assert sum(b > a for a, b in zip(means, means[1:])) >= 15
