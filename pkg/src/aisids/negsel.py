"""Real-valued negative selection with hypersphere detectors.

Candidates are drawn uniformly from the unit hypercube and censored against
the self-set: a candidate survives only if its ball, grown by the self
radius, contains no self sample. Two generators are provided, fixed-radius
NSA and the variable-radius V-detector, plus classification through either
a KD-tree index or a plain linear scan.

Random candidates come in fixed-size chunks; chunk ``k`` is drawn from its
own stream seeded by ``(seed, k)``. Chunks can therefore be prepared on any
number of threads and merged in chunk order without changing the result.
"""

from __future__ import annotations

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import CoverageError, DimensionError, SchemaMismatchError
from .representation import Antigen, dists, sq_dists

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
CHUNK_SIZE = 256
COVERAGE_WINDOW = 100
DEFAULT_SELF_RADIUS = 0.05

RANDOM = "random"
LIBRARY = "library-seeded"
CLONAL = "clonal"


@dataclass
class Detector:
    id: int
    center: np.ndarray
    radius: float
    birth_generation: int = 0
    match_count: int = 0
    origin: str = RANDOM

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.radius = float(self.radius)
        if not self.radius > 0:
            raise ValueError(f"detector radius must be positive, got {self.radius}")

    def covers(self, x) -> bool:
        return float(dists(self.center, np.asarray(x, dtype=float))) <= self.radius

    def to_dict(self) -> dict:
        return {"id": self.id, "center": [float(c) for c in self.center],
                "radius": self.radius, "birth_generation": self.birth_generation,
                "match_count": self.match_count, "origin": self.origin}

    @classmethod
    def from_dict(cls, d) -> "Detector":
        return cls(int(d["id"]), d["center"], d["radius"], int(d["birth_generation"]),
                   int(d["match_count"]), d["origin"])


@dataclass
class SelfSet:
    samples: np.ndarray
    self_radius: float = DEFAULT_SELF_RADIUS

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.shape[0] == 0 or self.samples.size == 0:
            raise ValueError("self-set must be non-empty")
        if self.self_radius < 0:
            raise ValueError("self_radius must be >= 0")

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


@dataclass
class DetectorSet:
    detectors: list[Detector] = field(default_factory=list)
    schema_fingerprint: str = ""
    params: dict = field(default_factory=dict)
    generation: int = 0

    def __len__(self):
        return len(self.detectors)

    def __iter__(self):
        return iter(self.detectors)

    @property
    def dim(self) -> int | None:
        return len(self.detectors[0].center) if self.detectors else None

    @property
    def centers(self) -> np.ndarray:
        if not self.detectors:
            return np.empty((0, 0))
        return np.array([d.center for d in self.detectors])

    @property
    def radii(self) -> np.ndarray:
        return np.array([d.radius for d in self.detectors], dtype=float)

    def next_id(self) -> int:
        return max((d.id for d in self.detectors), default=-1) + 1

    def replace(self, detectors: list[Detector], **changes) -> "DetectorSet":
        kw = dict(schema_fingerprint=self.schema_fingerprint, params=dict(self.params),
                  generation=self.generation)
        kw.update(changes)
        return DetectorSet(list(detectors), **kw)

    def to_dict(self) -> dict:
        return {"format": "aisids.detectors", "version": FORMAT_VERSION,
                "schema_fingerprint": self.schema_fingerprint,
                "generation": self.generation, "params": self.params,
                "detectors": [d.to_dict() for d in self.detectors]}

    @classmethod
    def from_dict(cls, doc) -> "DetectorSet":
        if doc.get("format") != "aisids.detectors" or doc.get("version") != FORMAT_VERSION:
            raise ValueError("not a version-1 detector set document")
        return cls([Detector.from_dict(d) for d in doc["detectors"]],
                   doc["schema_fingerprint"], dict(doc["params"]), int(doc["generation"]))


def _check_dim(n: int, self_set: SelfSet):
    if n != self_set.dim:
        raise DimensionError(f"dimension {n} does not match self-set dimension {self_set.dim}")


def censor(candidate: Detector, self_set: SelfSet) -> bool:
    """True (reject) iff the candidate's ball plus self halo touches any self sample."""
    _check_dim(len(candidate.center), self_set)
    d = dists(self_set.samples, candidate.center)
    return bool(np.any(d <= candidate.radius + self_set.self_radius))


def nearest_self_distance(centers: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Distance from each center to its nearest self sample (exact brute force)."""
    out = np.empty(len(centers))
    step = max(1, 2_000_000 // max(1, samples.size))
    for lo in range(0, len(centers), step):
        block = centers[lo:lo + step]
        out[lo:lo + step] = np.sqrt(sq_dists(samples[None, :, :], block[:, None, :]).min(axis=1))
    return out


def candidate_chunk(seed: int, k: int, dim: int) -> np.ndarray:
    return np.random.default_rng([seed, k]).random((CHUNK_SIZE, dim))


def _candidate_stream(seed: int, self_set: SelfSet, threads: int = 1
                      ) -> Iterator[tuple[np.ndarray, float]]:
    """Yield (center, nearest-self distance) in canonical candidate order."""
    dim = self_set.dim

    def work(k):
        c = candidate_chunk(seed, k, dim)
        return c, nearest_self_distance(c, self_set.samples)

    k = 0
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while True:
            ks = range(k, k + max(1, threads))
            results = pool.map(work, ks) if pool else map(work, ks)
            for centers, near in results:
                yield from zip(centers, near)
            k += max(1, threads)
    finally:
        if pool:
            pool.shutdown(wait=False, cancel_futures=True)


class _Grower:
    """Growable detector arrays for the per-candidate coverage test."""

    def __init__(self, dim):
        self.centers = np.empty((64, dim))
        self.radii = np.empty(64)
        self.n = 0

    def covered(self, x) -> bool:
        if self.n == 0:
            return False
        return bool(np.any(dists(self.centers[:self.n], x) <= self.radii[:self.n]))

    def add(self, c, r):
        if self.n == len(self.radii):
            self.centers = np.concatenate([self.centers, np.empty_like(self.centers)])
            self.radii = np.concatenate([self.radii, np.empty_like(self.radii)])
        self.centers[self.n] = c
        self.radii[self.n] = r
        self.n += 1


def _finish(dets, attempts, params, window, schema_fingerprint, generation):
    if not dets:
        raise CoverageError(f"no admissible detector after {attempts} candidates", attempts)
    params = dict(params, attempts=attempts, achieved=len(dets))
    if window is not None:
        params["estimated_coverage"] = (sum(window) / len(window)) if window else 0.0
    logger.info("generated %d detectors from %d candidates", len(dets), attempts)
    return DetectorSet(dets, schema_fingerprint, params, generation)


def generate_nsa(self_set: SelfSet, target_count: int, radius: float, rng_seed: int,
                 max_attempts: int | None = None, *, target_coverage: float | None = None,
                 threads: int = 1, schema_fingerprint: str = "", first_id: int = 0,
                 generation: int = 0) -> DetectorSet:
    """Fixed-radius negative selection.

    Admits every censoring survivor until ``target_count`` detectors exist or
    ``max_attempts`` candidates were drawn. With ``target_coverage`` set, a
    survivor already covered by an admitted detector is counted towards the
    sliding-window coverage estimate instead of being admitted, and generation
    also stops once that estimate reaches the target.
    """
    if target_count <= 0 or radius <= 0:
        raise ValueError("target_count and radius must be positive")
    if max_attempts is None:
        max_attempts = 100 * target_count
    limit = radius + self_set.self_radius
    window = deque(maxlen=COVERAGE_WINDOW) if target_coverage is not None else None
    grown = _Grower(self_set.dim)
    dets: list[Detector] = []
    attempts = 0
    for center, near in _candidate_stream(rng_seed, self_set, threads):
        if attempts >= max_attempts or len(dets) >= target_count:
            break
        attempts += 1
        if near <= limit:
            continue
        if window is not None:
            covered = grown.covered(center)
            window.append(covered)
            if not covered:
                grown.add(center, radius)
                dets.append(Detector(first_id + len(dets), center.copy(), radius, generation))
            if len(window) == COVERAGE_WINDOW and sum(window) >= target_coverage * COVERAGE_WINDOW:
                break
        else:
            dets.append(Detector(first_id + len(dets), center.copy(), radius, generation))
    params = {"variant": "fixed", "seed": rng_seed, "radius": radius,
              "self_radius": self_set.self_radius, "target_count": target_count,
              "max_attempts": max_attempts}
    if target_coverage is not None:
        params["target_coverage"] = target_coverage
    return _finish(dets, attempts, params, window, schema_fingerprint, generation)


def tight_radius(nearest: float, self_radius: float) -> float:
    """Largest radius whose ball plus halo stays strictly clear of the nearest self sample."""
    r = nearest - self_radius
    while r > 0 and r + self_radius >= nearest:
        r = float(np.nextafter(r, 0.0))
    return r


def generate_vdetector(self_set: SelfSet, target_coverage: float, rng_seed: int,
                       max_attempts: int = 100_000, *, threads: int = 1,
                       schema_fingerprint: str = "", first_id: int = 0,
                       generation: int = 0) -> DetectorSet:
    """Variable-radius negative selection (V-detector).

    Each admitted detector grows until it touches the nearest self halo.
    Candidates inside the halo are discarded; the remaining nonself candidates
    feed a sliding window whose covered fraction is the coverage estimate.
    """
    if not 0 < target_coverage < 1:
        raise ValueError("target_coverage must lie in (0, 1)")
    sr = self_set.self_radius
    window: deque = deque(maxlen=COVERAGE_WINDOW)
    grown = _Grower(self_set.dim)
    dets: list[Detector] = []
    attempts = 0
    for center, near in _candidate_stream(rng_seed, self_set, threads):
        if attempts >= max_attempts:
            break
        attempts += 1
        r = tight_radius(float(near), sr)
        if r <= 0:
            continue
        covered = grown.covered(center)
        window.append(covered)
        if not covered:
            grown.add(center, r)
            dets.append(Detector(first_id + len(dets), center.copy(), r, generation))
        if len(window) == COVERAGE_WINDOW and sum(window) >= target_coverage * COVERAGE_WINDOW:
            break
    params = {"variant": "vdetector", "seed": rng_seed, "self_radius": sr,
              "target_coverage": target_coverage, "max_attempts": max_attempts}
    return _finish(dets, attempts, params, window, schema_fingerprint, generation)


# -- classification -------------------------------------------------------

@dataclass
class Verdict:
    nonself: bool
    matched: list[int]

    @property
    def label(self) -> str:
        return "nonself" if self.nonself else "self"


def linear_scan(x: np.ndarray, centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Indices of every detector whose closed ball contains ``x``."""
    if len(radii) == 0:
        return np.empty(0, dtype=int)
    return np.flatnonzero(dists(centers, x) <= radii)


class DetectorIndex:
    """KD-tree over detector centers answering closed-ball membership queries.

    The tree only prunes: survivors of a slightly inflated ball query are
    re-tested with the same distance routine as ``linear_scan``.
    """

    def __init__(self, detectors: DetectorSet):
        self.centers = detectors.centers
        self.radii = detectors.radii
        self.tree = cKDTree(self.centers) if len(self.radii) else None
        self.reach = float(self.radii.max()) * (1 + 1e-9) + 1e-12 if len(self.radii) else 0.0

    def _filter(self, x, cand) -> np.ndarray:
        cand = np.asarray(sorted(cand), dtype=int)
        if cand.size == 0:
            return cand
        return cand[dists(self.centers[cand], x) <= self.radii[cand]]

    def query(self, x) -> np.ndarray:
        if self.tree is None:
            return np.empty(0, dtype=int)
        x = np.asarray(x, dtype=float)
        return self._filter(x, self.tree.query_ball_point(x, self.reach))

    def query_many(self, X) -> list[np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.tree is None:
            return [np.empty(0, dtype=int) for _ in X]
        hits = self.tree.query_ball_point(X, self.reach)
        return [self._filter(x, h) for x, h in zip(X, hits)]


def _check_fingerprint(detectors: DetectorSet, schema_fingerprint: str | None):
    if schema_fingerprint is not None and schema_fingerprint != detectors.schema_fingerprint:
        raise SchemaMismatchError("detector set was trained under a different feature schema")


def classify(antigen: Antigen | np.ndarray, detectors: DetectorSet,
             schema_fingerprint: str | None = None) -> Verdict:
    """Closed-ball match of one antigen; increments every matching detector's count."""
    _check_fingerprint(detectors, schema_fingerprint)
    x = antigen.vector if isinstance(antigen, Antigen) else np.asarray(antigen, dtype=float)
    hits = linear_scan(x, detectors.centers, detectors.radii)
    for i in hits:
        detectors.detectors[i].match_count += 1
    return Verdict(bool(len(hits)), [detectors.detectors[i].id for i in hits])


def classify_batch(X: np.ndarray, detectors: DetectorSet, schema_fingerprint: str | None = None,
                   *, use_index: bool = True, update_counts: bool = True) -> list[Verdict]:
    """Classify a batch against an immutable snapshot, then apply match counts."""
    _check_fingerprint(detectors, schema_fingerprint)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(X) and detectors.dim is not None and X.shape[1] != detectors.dim:
        raise DimensionError(f"antigen dimension {X.shape[1]} != detector dimension {detectors.dim}")
    if use_index:
        hits = DetectorIndex(detectors).query_many(X) if len(X) else []
    else:
        c, r = detectors.centers, detectors.radii
        hits = [linear_scan(x, c, r) for x in X]
    ids = [d.id for d in detectors.detectors]
    if update_counts:
        counts = np.zeros(len(ids), dtype=int)
        for h in hits:
            counts[h] += 1
        for d, n in zip(detectors.detectors, counts):
            d.match_count += int(n)
    return [Verdict(bool(len(h)), [ids[i] for i in h]) for h in hits]
