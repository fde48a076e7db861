"""Synthetic flow-feature scenarios for desk-scale experiments.

Geometry, in raw units on a 0..100 scale per feature: two self clusters
(uniform balls of radius 15) centred on the main diagonal at 20 and 80, and
anomaly clusters (radius 8) on the anti-diagonal corners and at the middle.
The drifted self-set moves the upper cluster sideways, clear of the attacks.
Because normalization is fitted on self only, the self clusters span the
unit cube after encoding and anomalies land in the gaps between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SynthSettings
from .errors import ConfigError
from .io import write_csv

SCALE = 100.0
SELF_RADIUS_RAW = 15.0
ANOMALY_RADIUS_RAW = 8.0


def self_centers(dims: int) -> np.ndarray:
    return np.array([[20.0] * dims, [80.0] * dims])


def anomaly_centers(dims: int) -> np.ndarray:
    centers = [[50.0] * dims]
    if dims > 1:
        alt = [20.0 if i % 2 == 0 else 80.0 for i in range(dims)]
        centers += [alt, [100.0 - a for a in alt]]
    return np.array(centers)


def drift_direction(dims: int) -> np.ndarray:
    """Sideways shift for the upper self cluster, away from every anomaly cluster."""
    if dims == 1:
        return np.array([-1.0])
    return np.array([1.0 if i % 2 == 0 else -1.0 for i in range(dims)])


def sample_ball(rng: np.random.Generator, center, radius: float, n: int) -> np.ndarray:
    """Uniform samples from a solid ball."""
    center = np.asarray(center, dtype=float)
    d = len(center)
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return center + g * r[:, None]


def sample_mixture(rng, centers, radius, n) -> np.ndarray:
    which = rng.integers(0, len(centers), size=n)
    pts = np.empty((n, centers.shape[1]))
    for k in range(len(centers)):
        idx = np.flatnonzero(which == k)
        pts[idx] = sample_ball(rng, centers[k], radius, len(idx))
    return pts


@dataclass
class Scenario:
    feature_names: list[str]
    self_train: np.ndarray
    self_drift: np.ndarray
    traffic: np.ndarray
    traffic_ids: list[str]
    traffic_labels: list[str]
    validation: np.ndarray
    validation_labels: list[str]
    frames: list[tuple[int, float, float, float, list[str]]]


def validate_spec(spec: SynthSettings):
    if spec.dims < 1:
        raise ConfigError("synth.dims must be >= 1")
    for name in ("n_self_train", "n_self_test", "n_anomaly_test", "n_validation"):
        if getattr(spec, name) < 0:
            raise ConfigError(f"synth.{name} must be >= 0")
    if spec.n_self_train < 1:
        raise ConfigError("synth.n_self_train must be >= 1")
    if spec.n_frames < 1 or spec.antigens_per_frame < 1:
        raise ConfigError("synth.n_frames and synth.antigens_per_frame must be >= 1")
    if not 0 <= spec.attack_fraction <= 1:
        raise ConfigError("synth.attack_fraction must lie in [0, 1]")
    if not 0 <= spec.drift < 0.5:
        raise ConfigError("synth.drift must lie in [0, 0.5)")


def _cycle(rng, ids):
    """Endless reshuffled pass over ``ids``."""
    while True:
        for i in rng.permutation(len(ids)):
            yield ids[i]


def _frames(rng, spec: SynthSettings, normal_ids, anomaly_ids):
    # attack windows are contiguous 20-frame blocks spread over the stream
    block = 20
    n_blocks = spec.n_frames // block
    n_attack = round(spec.attack_fraction * n_blocks) if anomaly_ids else 0
    attack_blocks = set(rng.choice(n_blocks, size=n_attack, replace=False).tolist()) if n_attack else set()
    normal_src = _cycle(rng, normal_ids) if normal_ids else None
    anomaly_src = _cycle(rng, anomaly_ids) if anomaly_ids else None
    frames = []
    for t in range(spec.n_frames):
        attack = (t // block) in attack_blocks
        src = anomaly_src if attack else normal_src
        ids = [next(src) for _ in range(spec.antigens_per_frame)] if src else []
        if attack:
            pamp, danger, safe = rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), rng.uniform(0.0, 0.2)
        else:
            pamp, danger, safe = rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.3), rng.uniform(0.5, 1.5)
        frames.append((t, round(pamp, 4), round(danger, 4), round(safe, 4), sorted(set(ids))))
    return frames


def generate(spec: SynthSettings) -> Scenario:
    validate_spec(spec)
    rng = np.random.default_rng(spec.seed)
    d = spec.dims
    sc, ac = self_centers(d), anomaly_centers(d)
    self_train = sample_mixture(rng, sc, SELF_RADIUS_RAW, spec.n_self_train)
    drifted = sc.copy()
    drifted[1] += spec.drift * SCALE * drift_direction(d)
    self_drift = sample_mixture(rng, drifted, SELF_RADIUS_RAW, spec.n_self_train)

    test_self = sample_mixture(rng, sc, SELF_RADIUS_RAW, spec.n_self_test)
    test_anom = sample_mixture(rng, ac, ANOMALY_RADIUS_RAW, spec.n_anomaly_test)
    traffic = np.vstack([test_self, test_anom])
    labels = ["normal"] * spec.n_self_test + ["anomaly"] * spec.n_anomaly_test
    perm = rng.permutation(len(traffic))
    traffic = traffic[perm]
    labels = [labels[i] for i in perm]
    ids = [f"t{i:05d}" for i in range(len(traffic))]

    n_vs = spec.n_validation // 2
    val = np.vstack([sample_mixture(rng, sc, SELF_RADIUS_RAW, n_vs),
                     sample_mixture(rng, ac, ANOMALY_RADIUS_RAW, spec.n_validation - n_vs)])
    val_labels = ["normal"] * n_vs + ["anomaly"] * (spec.n_validation - n_vs)

    normal_ids = [i for i, l in zip(ids, labels) if l == "normal"]
    anomaly_ids = [i for i, l in zip(ids, labels) if l == "anomaly"]
    frames = _frames(rng, spec, normal_ids, anomaly_ids)
    names = [f"f{i}" for i in range(d)]
    return Scenario(names, self_train, self_drift, traffic, ids, labels, val, val_labels, frames)


def _fmt(x) -> str:
    return f"{x:.6f}"


def write(scenario: Scenario, out_dir) -> list[Path]:
    out = Path(out_dir)
    names = scenario.feature_names
    files = []

    def feature_file(name, ids, X, extra=None):
        header = ["id"] + names + (["label"] if extra else [])
        rows = [[i] + [_fmt(v) for v in x] + ([extra[k]] if extra else [])
                for k, (i, x) in enumerate(zip(ids, X))]
        write_csv(out / name, header, rows)
        files.append(out / name)

    feature_file("self.csv", [f"s{i:05d}" for i in range(len(scenario.self_train))], scenario.self_train)
    feature_file("self_drift.csv", [f"d{i:05d}" for i in range(len(scenario.self_drift))],
                 scenario.self_drift)
    feature_file("traffic.csv", scenario.traffic_ids, scenario.traffic)
    feature_file("validation.csv", [f"v{i:05d}" for i in range(len(scenario.validation))],
                 scenario.validation, scenario.validation_labels)
    write_csv(out / "labels.csv", ["id", "label"], zip(scenario.traffic_ids, scenario.traffic_labels))
    files.append(out / "labels.csv")
    write_csv(out / "signals.csv", ["timestamp", "pamp", "danger", "safe", "antigens"],
              [[t, p, dg, s, ";".join(a)] for t, p, dg, s, a in scenario.frames])
    files.append(out / "signals.csv")
    return files


def maturation_toy(seed: int = 0, n_nonself: int = 1000, n_self: int = 200):
    """2-D maturation benchmark: a self box and one compact attack cluster.

    Returns ``(self_samples, validation_X, validation_nonself)``; the attack
    cluster (radius 0.15 at (0.75, 0.75)) is wider than a fresh detector, so
    fitness keeps improving as clones drift into it and grow.
    """
    rng = np.random.default_rng(seed)
    self_samples = rng.uniform(0.1, 0.5, size=(n_self, 2))
    attack = sample_ball(rng, (0.75, 0.75), 0.15, n_nonself)
    benign = rng.uniform(0.1, 0.5, size=(100, 2))
    X = np.vstack([attack, benign])
    return self_samples, X, np.r_[np.ones(n_nonself, bool), np.zeros(len(benign), bool)]
