"""Dendritic cell algorithm over PAMP / danger / safe signal streams.

A pool of cells integrates fused signals frame by frame while sampling the
antigen ids active in each frame. Once a cell's costimulation reaches its
migration threshold it presents every sampled id, as mature when its
accumulated context is positive and as semimature otherwise, and is
replaced by a fresh cell. The anomaly score of an antigen is its mature
context antigen value (MCAV): mature presentations over all presentations.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, LifecycleError

IMMATURE = "immature"
MATURE = "migrated-mature"
SEMIMATURE = "migrated-semimature"

ANOMALOUS = "anomalous"
NORMAL = "normal"
NO_VERDICT = "no-verdict"


@dataclass(frozen=True)
class SignalFrame:
    timestamp: float
    pamp: float
    danger: float
    safe: float
    active_antigens: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("pamp", "danger", "safe"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InputError(f"{name} signal must be finite and non-negative, got {v}")


@dataclass(frozen=True)
class FusionWeights:
    csm_pamp: float = 2.0
    csm_danger: float = 1.0
    csm_safe: float = 2.0
    k_pamp: float = 2.0
    k_danger: float = 1.0
    k_safe: float = 3.0


def fuse(frame: SignalFrame, weights: FusionWeights = FusionWeights()) -> tuple[float, float]:
    """Return (costimulation increment, context increment) for one frame."""
    w = weights
    csm = w.csm_pamp * frame.pamp + w.csm_danger * frame.danger + w.csm_safe * frame.safe
    k = w.k_pamp * frame.pamp + w.k_danger * frame.danger - w.k_safe * frame.safe
    return csm, k


@dataclass
class DendriticCell:
    migration_threshold: float
    sampled: Counter = field(default_factory=Counter)
    csm: float = 0.0
    k: float = 0.0
    state: str = IMMATURE

    def __post_init__(self):
        if not self.migration_threshold > 0:
            raise ValueError("migration threshold must be positive")


def dc_step(cell: DendriticCell, frame: SignalFrame,
            weights: FusionWeights = FusionWeights()) -> DendriticCell:
    if cell.state != IMMATURE:
        raise LifecycleError("cannot step a cell that has already migrated")
    csm_inc, k_inc = fuse(frame, weights)
    cell.sampled.update(frame.active_antigens)
    cell.csm += csm_inc
    cell.k += k_inc
    if cell.csm >= cell.migration_threshold:
        cell.state = MATURE if cell.k > 0 else SEMIMATURE
    return cell


@dataclass
class McavEntry:
    total: int = 0
    mature: int = 0

    @property
    def mcav(self) -> float | None:
        return self.mature / self.total if self.total else None


class McavTable(dict):
    """Antigen id -> McavEntry. Ids never presented map to a no-verdict entry."""

    def present(self, cell: DendriticCell):
        mature = cell.state == MATURE
        for ag, n in cell.sampled.items():
            e = self.setdefault(ag, McavEntry())
            e.total += n
            if mature:
                e.mature += n

    def to_dict(self) -> dict:
        return {ag: {"presentations_total": e.total, "presentations_mature": e.mature,
                     "mcav": e.mcav} for ag, e in sorted(self.items())}


def run_dca(frames: Sequence[SignalFrame], pool_size: int = 100,
            thresholds: tuple[float, float] = (5.0, 15.0), rng_seed: int = 0,
            weights: FusionWeights = FusionWeights()) -> McavTable:
    """Run a cell pool over an ordered frame stream and tabulate MCAVs.

    Thresholds are drawn one scalar at a time from a single generator:
    first for cells 0..pool_size-1, then for each replacement in the order
    cells migrate (frame order, then cell index).
    """
    if pool_size <= 0:
        raise ValueError("pool_size must be positive")
    if not frames:
        raise InputError("empty signal stream")
    lo, hi = thresholds
    if not 0 < lo <= hi:
        raise ValueError("threshold range must satisfy 0 < low <= high")
    rng = np.random.default_rng(rng_seed)
    cells = [DendriticCell(float(rng.uniform(lo, hi))) for _ in range(pool_size)]
    table = McavTable()
    seen: set[str] = set()
    prev = None
    for frame in frames:
        if prev is not None and not frame.timestamp > prev:
            raise InputError(f"timestamps must strictly increase ({frame.timestamp} after {prev})")
        prev = frame.timestamp
        seen.update(frame.active_antigens)
        for i, cell in enumerate(cells):
            dc_step(cell, frame, weights)
            if cell.state != IMMATURE:
                table.present(cell)
                cells[i] = DendriticCell(float(rng.uniform(lo, hi)))
    for ag in seen:
        table.setdefault(ag, McavEntry())
    return table


def classify_mcav(table: McavTable, anomaly_threshold: float = 0.5) -> dict[str, str]:
    out = {}
    for ag, e in sorted(table.items()):
        m = e.mcav
        if m is None:
            out[ag] = NO_VERDICT
        else:
            out[ag] = ANOMALOUS if m >= anomaly_threshold else NORMAL
    return out
