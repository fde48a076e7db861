"""Detector turnover: revalidation against drifting self, age-based pruning,
and a gene library of remembered detectors used to pre-seed replacements."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PolicyError
from .negsel import LIBRARY, Detector, DetectorSet, SelfSet, censor

FORMAT_VERSION = 1


@dataclass(frozen=True)
class LifecyclePolicy:
    max_age: int = 50
    min_matches_by_age: int = 1
    revalidation_interval: int = 1
    library_seed_fraction: float = 0.5
    seed_mutation_scale: float = 0.05
    library_capacity: int = 256

    def __post_init__(self):
        if self.max_age <= 0 or self.revalidation_interval <= 0 or self.library_capacity <= 0:
            raise ValueError("max_age, revalidation_interval and library_capacity must be positive")
        if self.min_matches_by_age < 0:
            raise ValueError("min_matches_by_age must be >= 0")
        if not 0 <= self.library_seed_fraction <= 1:
            raise ValueError("library_seed_fraction must lie in [0, 1]")
        if self.seed_mutation_scale <= 0:
            raise ValueError("seed_mutation_scale must be positive")


@dataclass(frozen=True)
class LibraryEntry:
    center: tuple[float, ...]
    radius: float
    archived_generation: int
    lifetime_matches: int


@dataclass
class GeneLibrary:
    capacity: int = 256
    entries: list[LibraryEntry] = field(default_factory=list)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError("library capacity must be positive")

    def __len__(self):
        return len(self.entries)

    def to_dict(self) -> dict:
        return {"format": "aisids.library", "version": FORMAT_VERSION, "capacity": self.capacity,
                "entries": [{"center": list(e.center), "radius": e.radius,
                             "archived_generation": e.archived_generation,
                             "lifetime_matches": e.lifetime_matches} for e in self.entries]}

    @classmethod
    def from_dict(cls, doc) -> "GeneLibrary":
        if doc.get("format") != "aisids.library" or doc.get("version") != FORMAT_VERSION:
            raise ValueError("not a version-1 gene library document")
        return cls(int(doc["capacity"]),
                   [LibraryEntry(tuple(float(c) for c in e["center"]), float(e["radius"]),
                                 int(e["archived_generation"]), int(e["lifetime_matches"]))
                    for e in doc["entries"]])


def revalidate(detectors: DetectorSet, current_self: SelfSet) -> tuple[DetectorSet, list[Detector]]:
    """Split detectors into those still clear of the updated self and those now overlapping it."""
    kept, invalid = [], []
    for d in detectors:
        (invalid if censor(d, current_self) else kept).append(d)
    return detectors.replace(kept), invalid


def prune_stale(detectors: DetectorSet, policy: LifecyclePolicy,
                current_generation: int) -> tuple[DetectorSet, list[Detector]]:
    kept, pruned = [], []
    for d in detectors:
        stale = (current_generation - d.birth_generation > policy.max_age
                 and d.match_count < policy.min_matches_by_age)
        (pruned if stale else kept).append(d)
    return detectors.replace(kept), pruned


def archive(detector: Detector, library: GeneLibrary, generation: int) -> GeneLibrary:
    if detector.match_count <= 0:
        raise PolicyError("only detectors with at least one match are archived")
    entries = library.entries + [LibraryEntry(tuple(float(c) for c in detector.center),
                                              detector.radius, generation, detector.match_count)]
    while len(entries) > library.capacity:
        # fewest matches first, then oldest archive generation
        victim = min(range(len(entries)),
                     key=lambda i: (entries[i].lifetime_matches, entries[i].archived_generation, i))
        del entries[victim]
    return GeneLibrary(library.capacity, entries)


def seed_from_library(library: GeneLibrary, count: int, scale: float, self_set: SelfSet,
                      rng: np.random.Generator, *, first_id: int = 0,
                      generation: int = 0) -> list[Detector]:
    """Perturb ``count`` uniformly drawn library genotypes; drop those censored by self."""
    if count <= 0 or not library.entries:
        return []
    out = []
    picks = rng.integers(0, len(library.entries), size=count)
    for p in picks:
        e = library.entries[int(p)]
        center = np.clip(np.asarray(e.center) + rng.normal(0.0, scale, size=len(e.center)), 0.0, 1.0)
        cand = Detector(first_id + len(out), center, e.radius, generation, 0, LIBRARY)
        if not censor(cand, self_set):
            out.append(cand)
    return out
